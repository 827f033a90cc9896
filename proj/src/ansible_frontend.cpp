#include <set>
#include <string>

#include "frontend_common.hpp"
#include "infrafix/error.hpp"
#include "infrafix/frontend.hpp"
#include "yaml_reader.hpp"

namespace infrafix {
namespace {

const std::set<std::string, std::less<>> kIgnoredTaskKeys = {
    "name",        "become",     "become_user", "tags",      "notify",   "register",
    "ignore_errors", "changed_when", "failed_when", "check_mode", "no_log", "delegate_to",
    "environment", "listen",     "timeout",     "run_once",  "become_method"};

const std::set<std::string, std::less<>> kUnsupportedTaskKeys = {
    "loop",          "with_items",   "with_dict",    "with_list",   "with_fileglob",
    "block",         "rescue",       "always",       "include_tasks", "import_tasks",
    "include_role",  "import_role",  "vars",         "until",       "retries",
    "loop_control",  "with_together", "with_nested", "delegate_facts"};

const std::set<std::string, std::less<>> kIgnoredPlayKeys = {
    "hosts", "name", "become", "become_user", "gather_facts", "remote_user",
    "connection", "environment", "serial", "tags", "any_errors_fatal", "become_method"};

const std::set<std::string, std::less<>> kUnsupportedPlayKeys = {
    "roles", "handlers", "pre_tasks", "post_tasks", "vars_files", "import_playbook",
    "include_vars", "vars_prompt"};

class AnsibleBuilder {
 public:
  explicit AnsibleBuilder(std::string source) : index_(source) {
    script_.tech = Tech::Ansible;
    script_.source = std::move(source);
  }

  IRScript build() {
    std::string_view src = script_.source;
    yaml::Node root = yaml::parse(src, index_);
    script_.resource_slot.insert_at = src.size();
    script_.resource_slot.available = true;
    if (root.kind == yaml::NodeKind::Null) {
      detail::finalize_script(script_);
      return std::move(script_);
    }
    if (root.kind != yaml::NodeKind::Sequence || root.flow) {
      if (root.kind == yaml::NodeKind::Sequence && root.items.empty()) {
        script_.resource_slot.available = false;
        detail::finalize_script(script_);
        return std::move(script_);
      }
      fail("syntax", root.span, "a playbook must be a block list of plays or tasks");
    }
    bool plays = false;
    for (const auto& item : root.items) {
      if (item.kind == yaml::NodeKind::Mapping && (item.get("hosts") || item.get("tasks"))) {
        plays = true;
      }
    }
    if (plays) {
      script_.resource_slot.available = false;
      for (const auto& play : root.items) build_play(play);
    } else {
      set_task_slot(root);
      build_tasks(root, script_.statements);
    }
    detail::finalize_script(script_);
    return std::move(script_);
  }

 private:
  [[noreturn]] void fail(const std::string& kind, const Span& at, const std::string& msg) const {
    throw ParseError(kind, at.start_line, at.start_col, msg);
  }

  [[noreturn]] void fail_at(const std::string& kind, std::size_t offset,
                            const std::string& msg) const {
    auto [line, col] = index_.position(offset);
    throw ParseError(kind, line, col, msg);
  }

  void set_task_slot(const yaml::Node& tasks) {
    script_.resource_slot.insert_at = tasks.content_end;
    script_.resource_slot.indent = std::string(static_cast<std::size_t>(tasks.column), ' ');
    script_.resource_slot.available = true;
  }

  void build_play(const yaml::Node& play) {
    if (play.kind != yaml::NodeKind::Mapping) fail("syntax", play.span, "a play must be a mapping");
    for (const auto& [key, value] : play.entries) {
      if (kIgnoredPlayKeys.count(key.value)) continue;
      if (kUnsupportedPlayKeys.count(key.value)) {
        fail("unsupported", key.span, "play keyword '" + key.value + "' is not supported");
      }
      if (key.value == "vars") {
        if (value.kind == yaml::NodeKind::Null) continue;
        if (value.kind != yaml::NodeKind::Mapping) fail("syntax", value.span, "vars must be a mapping");
        add_assignments(value, script_.statements);
      } else if (key.value == "tasks") {
        if (value.kind == yaml::NodeKind::Null) continue;
        if (value.kind != yaml::NodeKind::Sequence) fail("syntax", value.span, "tasks must be a list");
        if (value.flow) {
          if (!value.items.empty()) fail("unsupported", value.span, "flow-style task lists");
          continue;
        }
        set_task_slot(value);
        build_tasks(value, script_.statements);
      } else {
        fail("unsupported", key.span, "play keyword '" + key.value + "' is not supported");
      }
    }
  }

  void add_assignments(const yaml::Node& mapping, std::vector<Statement>& out) {
    for (const auto& [key, value] : mapping.entries) {
      if (key.value == "cacheable") continue;
      if (!detail::is_identifier(key.value)) {
        fail("syntax", key.span, "invalid variable name '" + key.value + "'");
      }
      if (value.kind == yaml::NodeKind::Mapping || value.kind == yaml::NodeKind::Sequence) {
        fail("unsupported", value.span, "structured variable values are not supported");
      }
      Assignment assign;
      assign.name = key.value;
      assign.value = scalar_expr(value);
      assign.span = index_.span(key.span.byte_start, value.span.byte_end);
      out.push_back(Statement{std::move(assign)});
    }
  }

  void build_tasks(const yaml::Node& tasks, std::vector<Statement>& out) {
    for (const auto& task : tasks.items) {
      if (task.kind != yaml::NodeKind::Mapping) fail("syntax", task.span, "a task must be a mapping");
      const yaml::Node* when = nullptr;
      const yaml::Node* module_key = nullptr;
      const yaml::Node* module_args = nullptr;
      for (const auto& [key, value] : task.entries) {
        if (key.value == "when") {
          when = &value;
        } else if (kIgnoredTaskKeys.count(key.value)) {
          continue;
        } else if (kUnsupportedTaskKeys.count(key.value)) {
          fail("unsupported", key.span, "task keyword '" + key.value + "' is not supported");
        } else if (module_key) {
          fail("syntax", key.span, "task declares more than one module");
        } else {
          module_key = &key;
          module_args = &value;
        }
      }
      if (!module_key) fail("syntax", task.span, "task has no module");

      std::vector<Statement> body;
      if (module_key->value == "set_fact") {
        if (module_args->kind != yaml::NodeKind::Mapping) {
          fail("unsupported", module_args->span, "set_fact requires a mapping");
        }
        add_assignments(*module_args, body);
      } else {
        body.push_back(Statement{build_resource(task, *module_key, *module_args)});
      }

      if (when) {
        Conditional cond;
        cond.id = next_conditional_++;
        cond.condition = condition_expr(*when);
        cond.then_branch = std::move(body);
        cond.span = task.span;
        out.push_back(Statement{std::move(cond)});
      } else {
        for (auto& stmt : body) out.push_back(std::move(stmt));
      }
    }
  }

  Resource build_resource(const yaml::Node& task, const yaml::Node& key, const yaml::Node& args) {
    Resource res;
    res.type = key.value;
    res.type_span = key.span;
    res.title = Expr::null();
    res.title.synthetic = true;
    res.span = task.span;
    res.index = next_resource_++;
    if (args.kind == yaml::NodeKind::Scalar) {
      fail("unsupported", args.span, "free-form module arguments are not supported");
    }
    if (args.kind == yaml::NodeKind::Sequence) {
      fail("unsupported", args.span, "module arguments must be a mapping");
    }
    if (args.kind == yaml::NodeKind::Mapping) {
      for (const auto& [name, value] : args.entries) {
        if (value.kind == yaml::NodeKind::Mapping || value.kind == yaml::NodeKind::Sequence) {
          fail("unsupported", value.span, "structured attribute values are not supported");
        }
        Attribute attr;
        attr.name = name.value;
        attr.name_span = name.span;
        attr.value = scalar_expr(value);
        res.attributes.push_back(std::move(attr));
      }
      res.slot.insert_at = args.content_end;
      res.slot.flow = args.flow;
      if (!args.flow) res.slot.indent = std::string(static_cast<std::size_t>(args.column), ' ');
    }
    return res;
  }

  static bool is_bool_word(std::string_view s, bool& value) {
    static const std::set<std::string, std::less<>> truthy = {"true", "True", "TRUE", "yes", "Yes", "YES"};
    static const std::set<std::string, std::less<>> falsy = {"false", "False", "FALSE", "no", "No", "NO"};
    if (truthy.count(s)) {
      value = true;
      return true;
    }
    if (falsy.count(s)) {
      value = false;
      return true;
    }
    return false;
  }

  Expr scalar_expr(const yaml::Node& node) {
    if (node.kind == yaml::NodeKind::Null) return Expr::null(node.span);
    if (node.value.find("{{") != std::string::npos || node.value.find("{%") != std::string::npos) {
      if (node.has_escapes) {
        fail("unsupported", node.span, "escapes inside interpolated strings are not supported");
      }
      return template_expr(node);
    }
    if (node.style == QuoteStyle::Plain) {
      const std::string& v = node.value;
      if (v == "~" || v == "null" || v == "Null" || v == "NULL") return Expr::null(node.span);
      bool b = false;
      if (is_bool_word(v, b)) return Expr::boolean(b, v, node.span);
      if (auto n = detail::parse_decimal(v)) return Expr::integer(*n, v, node.span);
    }
    return Expr::string(node.value, node.span, node.style);
  }

  Expr fragment(Expr e, QuoteStyle host) {
    e.embedded = true;
    e.host_quote = host;
    return e;
  }

  // "text {{ var }} text" -> right-nested Concat of literal and VarRef parts.
  Expr template_expr(const yaml::Node& node) {
    std::string_view src = script_.source;
    std::vector<Expr> parts;
    std::size_t p = node.raw_start;
    std::size_t lit_start = p;
    auto flush_literal = [&](std::size_t end) {
      if (end > lit_start) {
        parts.push_back(fragment(
            Expr::string(std::string(src.substr(lit_start, end - lit_start)), index_.span(lit_start, end)),
            node.style));
      }
    };
    while (p < node.raw_end) {
      if (src.compare(p, 2, "{%") == 0) fail_at("unsupported", p, "Jinja statements are not supported");
      if (src.compare(p, 2, "{{") != 0) {
        ++p;
        continue;
      }
      flush_literal(p);
      std::size_t close = src.find("}}", p + 2);
      if (close == std::string_view::npos || close + 2 > node.raw_end) {
        fail_at("syntax", p, "unterminated '{{'");
      }
      std::string_view inner = src.substr(p + 2, close - p - 2);
      std::size_t a = inner.find_first_not_of(' ');
      std::size_t b = inner.find_last_not_of(' ');
      std::string_view name = a == std::string_view::npos ? std::string_view{} : inner.substr(a, b - a + 1);
      if (!detail::is_identifier(name)) {
        fail_at("unsupported", p, "only plain variable interpolation is supported");
      }
      parts.push_back(fragment(Expr::var(std::string(name), index_.span(p, close + 2)), node.style));
      p = close + 2;
      lit_start = p;
    }
    flush_literal(node.raw_end);

    if (parts.size() == 1) {
      Expr root = std::move(parts.front());
      root.embedded = false;
      root.span = node.span;
      root.quote = node.style;
      return root;
    }
    Expr acc = std::move(parts.back());
    for (std::size_t i = parts.size() - 1; i-- > 0;) {
      Span s = index_.span(parts[i].span.byte_start, acc.span.byte_end);
      acc = fragment(Expr::binary(ExprKind::Concat, std::move(parts[i]), std::move(acc), s), node.style);
    }
    acc.embedded = false;
    acc.span = node.span;
    acc.quote = node.style;
    return acc;
  }

  // `var == literal` / `var != literal` (either operand order).
  Expr condition_expr(const yaml::Node& node) {
    if (node.kind != yaml::NodeKind::Scalar) {
      fail("unsupported", node.span, "when: must be a single comparison");
    }
    if (node.has_escapes) fail("unsupported", node.span, "escapes inside when: are not supported");
    std::string_view src = script_.source;
    std::size_t p = node.raw_start;
    std::size_t end = node.raw_end;
    auto skip_ws = [&] {
      while (p < end && src[p] == ' ') ++p;
    };
    auto operand = [&]() -> Expr {
      skip_ws();
      if (p >= end) fail_at("syntax", p, "expected an operand in when:");
      std::size_t start = p;
      char c = src[p];
      if (c == '\'' || c == '"') {
        std::size_t close = src.find(c, p + 1);
        if (close == std::string_view::npos || close >= end) fail_at("syntax", p, "unterminated string in when:");
        std::string value(src.substr(p + 1, close - p - 1));
        if (value.find('\\') != std::string::npos) fail_at("unsupported", p, "escapes inside when: literals");
        p = close + 1;
        return fragment(Expr::string(std::move(value), index_.span(start, p),
                                     c == '\'' ? QuoteStyle::Single : QuoteStyle::Double),
                        node.style);
      }
      while (p < end && (std::isalnum(static_cast<unsigned char>(src[p])) || src[p] == '_' || src[p] == '-' ||
                         src[p] == '.')) {
        ++p;
      }
      std::string_view word = src.substr(start, p - start);
      if (word.empty()) fail_at("unsupported", start, "unsupported when: expression");
      bool b = false;
      if (word == "true" || word == "false" || word == "True" || word == "False") {
        is_bool_word(word, b);
        return fragment(Expr::boolean(b, std::string(word), index_.span(start, p)), node.style);
      }
      if (auto n = detail::parse_decimal(word)) {
        return fragment(Expr::integer(*n, std::string(word), index_.span(start, p)), node.style);
      }
      if (!detail::is_identifier(word)) fail_at("unsupported", start, "unsupported when: operand");
      return fragment(Expr::var(std::string(word), index_.span(start, p)), node.style);
    };

    Expr left = operand();
    skip_ws();
    ExprKind kind;
    if (src.compare(p, 2, "==") == 0) {
      kind = ExprKind::Equals;
    } else if (src.compare(p, 2, "!=") == 0) {
      kind = ExprKind::NotEquals;
    } else {
      fail_at("unsupported", p, "when: must be a '==' or '!=' comparison");
    }
    p += 2;
    Expr right = operand();
    skip_ws();
    if (p != end) fail_at("unsupported", p, "unsupported trailing when: expression");
    bool left_var = left.kind == ExprKind::VarRef;
    bool right_var = right.kind == ExprKind::VarRef;
    if (left_var == right_var) {
      fail("unsupported", node.span, "when: must compare one variable with one literal");
    }
    Expr cond = Expr::binary(kind, std::move(left), std::move(right), node.span);
    cond.quote = node.style;
    return cond;
  }

  LineIndex index_;
  IRScript script_;
  int next_conditional_ = 0;
  int next_resource_ = 0;
};

}  // namespace

IRScript parse_ansible(std::string source) { return AnsibleBuilder(std::move(source)).build(); }

}  // namespace infrafix
