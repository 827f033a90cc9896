#include "infrafix/patch.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "infrafix/error.hpp"
#include "infrafix/infer.hpp"

namespace infrafix {
namespace {

bool is_decimal(std::string_view v) { return parse_integer(v).has_value(); }

bool yaml_special_word(std::string_view v) {
  static const std::set<std::string, std::less<>> words = {
      "true", "True", "TRUE", "false", "False", "FALSE", "yes", "Yes", "YES", "no", "No", "NO",
      "on",   "On",   "ON",   "off",   "Off",   "OFF",   "null", "Null", "NULL", "~"};
  return words.count(v) > 0;
}

bool puppet_keyword(std::string_view v) {
  static const std::set<std::string, std::less<>> words = {
      "if",     "else",     "elsif",  "unless", "case",    "class",   "define", "node",
      "undef",  "true",     "false",  "and",    "or",      "in",      "default", "function",
      "type",   "import",   "inherits", "include", "require", "contain", "realize", "notify"};
  return words.count(v) > 0;
}

bool templated(std::string_view v) {
  return v.find("{{") != std::string_view::npos || v.find("{%") != std::string_view::npos ||
         v.find("}}") != std::string_view::npos;
}

// Characters that may appear in an unquoted YAML scalar without changing how
// the line parses in block or flow context.
bool yaml_plain_safe(std::string_view v) {
  if (v.empty() || v.front() == ' ' || v.back() == ' ' || v.front() == '-' || v.front() == '?') return false;
  for (char c : v) {
    if (std::string_view(":#{}[],&*!|>'\"%@`\\\n\t").find(c) != std::string_view::npos) return false;
  }
  return !templated(v);
}

std::string yaml_double(std::string_view v) {
  if (templated(v)) throw PatchError("value '" + std::string(v) + "' would read as a template");
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    if (c == '\t') {
      out += "\\t";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

std::string yaml_single(std::string_view v) {
  if (templated(v)) throw PatchError("value '" + std::string(v) + "' would read as a template");
  if (v.find('\n') != std::string_view::npos) return yaml_double(v);
  std::string out = "'";
  for (char c : v) {
    out += c;
    if (c == '\'') out += '\'';
  }
  return out + "'";
}

std::string puppet_single(std::string_view v) {
  std::string out = "'";
  for (char c : v) {
    if (c == '\'' || c == '\\') out += '\\';
    out += c;
  }
  return out + "'";
}

std::string puppet_double(std::string_view v) {
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\' || c == '$') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

// Boolean spelling that keeps the family of the token being replaced.
std::string bool_spelling(std::string_view original, bool value) {
  if (original == "yes" || original == "no") return value ? "yes" : "no";
  if (original == "Yes" || original == "No") return value ? "Yes" : "No";
  if (original == "YES" || original == "NO") return value ? "YES" : "NO";
  if (original == "True" || original == "False") return value ? "True" : "False";
  if (original == "TRUE" || original == "FALSE") return value ? "TRUE" : "FALSE";
  return value ? "true" : "false";
}

// Text for a fresh value in YAML: plain when it reads back as the same
// canonical string, double-quoted otherwise.
std::string yaml_value(std::string_view v) {
  if (v == "true" || v == "false" || is_decimal(v)) return std::string(v);
  bool numeric_looking = !v.empty() && (std::isdigit(static_cast<unsigned char>(v.front())) || v.front() == '.');
  if (yaml_plain_safe(v) && !yaml_special_word(v) && !numeric_looking) return std::string(v);
  return yaml_double(v);
}

bool puppet_bareword(std::string_view v) {
  if (v.empty() || !std::islower(static_cast<unsigned char>(v.front()))) return false;
  for (char c : v) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return !puppet_keyword(v);
}

std::string puppet_value(std::string_view v) {
  if (v == "true" || v == "false" || is_decimal(v) || puppet_bareword(v)) return std::string(v);
  return puppet_single(v);
}

class Renderer {
 public:
  Renderer(const RepairSolution& sol, const IRScript& raw, const NormalizationDb& db)
      : sol_(sol), raw_(raw), db_(db) {}

  std::vector<TextPatch> run() {
    std::map<int, const Resource*> by_index;
    for (const auto& ref : iter_resources(raw_)) by_index[ref.resource->index] = ref.resource;

    std::vector<TextPatch> patches;
    std::map<std::string, std::vector<const Edit*>> inserted_attrs;
    std::vector<const Edit*> inserted;
    for (const auto& e : sol_.edits) {
      switch (e.site.kind) {
        case SiteKind::AttributeValue:
        case SiteKind::VariableLiteral:
        case SiteKind::ConditionLiteral:
          patches.push_back(replace(e));
          break;
        case SiteKind::MissingAttribute:
          if (e.site.resource_index >= 0) {
            auto it = by_index.find(e.site.resource_index);
            if (it == by_index.end()) throw PatchError("edit targets unknown resource " + e.site.resource_id);
            patches.push_back(add_attribute(*it->second, e));
          } else {
            inserted_attrs[e.site.resource_id].push_back(&e);
          }
          break;
        case SiteKind::MissingResource:
          inserted.push_back(&e);
          break;
      }
    }
    for (const Edit* e : inserted) patches.push_back(add_resource(*e, inserted_attrs[e->site.resource_id]));

    std::stable_sort(patches.begin(), patches.end(), [](const TextPatch& a, const TextPatch& b) {
      return a.byte_start < b.byte_start;
    });
    // Several insertions at one offset become one patch, in edit order.
    std::vector<TextPatch> merged;
    for (auto& p : patches) {
      if (!merged.empty() && p.byte_start == p.byte_end && merged.back().byte_start == p.byte_start &&
          merged.back().byte_end == p.byte_end) {
        merged.back().replacement += p.replacement;
        continue;
      }
      if (!merged.empty() && p.byte_start < merged.back().byte_end) {
        throw PatchError("edits overlap at byte " + std::to_string(p.byte_start));
      }
      merged.push_back(std::move(p));
    }
    return merged;
  }

 private:
  std::string canonical_type(const Resource& r) const { return db_.type(raw_.tech, r.type); }

  // Raw spelling of a canonical type: reuse what the script already writes.
  std::string raw_type(const std::string& canonical) const {
    for (const auto& ref : iter_resources(raw_)) {
      if (canonical_type(*ref.resource) == canonical) return ref.resource->type;
    }
    return db_.denormalize_type(raw_.tech, canonical);
  }

  std::string raw_attr(const std::string& type, const std::string& attr) const {
    return db_.denormalize(attr, NormalizationScope{raw_.tech, type, std::nullopt});
  }

  std::string unit() const { return std::string(static_cast<std::size_t>(std::max(1, raw_.indent_unit)), ' '); }

  TextPatch replace(const Edit& e) const {
    const Expr* node = find_expr(raw_, e.site.expr_id);
    if (!node) throw PatchError("edit refers to expression " + std::to_string(e.site.expr_id) + " not in the script");
    if (node->span.is_synthetic() || node->synthetic) throw PatchError("cannot splice a synthetic node");
    return {node->span.byte_start, node->span.byte_end, token(*node, e.raw_value)};
  }

  std::string token(const Expr& node, const std::string& v) const {
    const bool yaml = raw_.tech == Tech::Ansible;
    if (node.embedded) return embedded_token(node, v);
    switch (node.quote) {
      case QuoteStyle::Double:
        return yaml ? yaml_double(v) : puppet_double(v);
      case QuoteStyle::Single:
        return yaml ? yaml_single(v) : puppet_single(v);
      case QuoteStyle::Plain:
        break;
    }
    if (node.kind == ExprKind::Bool && (v == "true" || v == "false")) {
      return bool_spelling(node.text, v == "true");
    }
    if (node.kind == ExprKind::Int && is_decimal(v)) return v;
    return yaml ? yaml_value(v) : puppet_value(v);
  }

  // Fragment inside a quoted host string (interpolation literal or a literal
  // inside an Ansible `when:` expression).
  std::string embedded_token(const Expr& node, const std::string& v) const {
    auto reject = [&](const std::string& why) -> std::string {
      throw PatchError("cannot write '" + v + "' inside a string: " + why);
    };
    if (v.find('\\') != std::string::npos || v.find('\n') != std::string::npos) reject("escapes are not supported there");
    if (templated(v) || v.find('$') != std::string::npos) reject("it would read as interpolation");
    const char host = node.host_quote == QuoteStyle::Double ? '"' : node.host_quote == QuoteStyle::Single ? '\'' : 0;
    if (host && v.find(host) != std::string::npos) reject("it contains the enclosing quote");

    if (node.quote == QuoteStyle::Plain && node.kind == ExprKind::String) {
      if (node.host_quote == QuoteStyle::Plain && !v.empty() && !yaml_plain_safe(v)) {
        reject("the enclosing scalar is unquoted");
      }
      return v;
    }
    // `when:` operand: keep bare booleans and integers, quote anything else
    // with a quote character the host string does not use.
    if (node.quote == QuoteStyle::Plain) {
      if (node.kind == ExprKind::Bool && (v == "true" || v == "false")) return bool_spelling(node.text, v == "true");
      if (node.kind == ExprKind::Int && is_decimal(v)) return v;
    }
    char q = node.quote == QuoteStyle::Double ? '"' : '\'';
    if (host == q) q = q == '"' ? '\'' : '"';
    if (v.find(q) != std::string::npos) reject("it contains both quote characters");
    return std::string(1, q) + v + std::string(1, q);
  }

  std::string line_for(const std::string& name, const std::string& v) const {
    if (raw_.tech == Tech::Ansible) return name + ": " + yaml_value(v);
    return name + " => " + puppet_value(v);
  }

  TextPatch add_attribute(const Resource& res, const Edit& e) const {
    const AttributeSlot& slot = res.slot;
    if (slot.insert_at == Span::kNoOffset) throw PatchError("resource has no place for new attributes");
    const std::string entry = line_for(raw_attr(e.site.type, e.site.attribute), e.raw_value);
    std::string text;
    if (raw_.tech == Tech::Ansible) {
      text = slot.flow ? ", " + entry : "\n" + slot.indent + entry;
    } else if (slot.flow) {
      text = slot.needs_comma ? ", " + entry : " " + entry + ",";
    } else {
      text = slot.needs_comma ? ",\n" + slot.indent + entry : "\n" + slot.indent + entry + ",";
    }
    return {slot.insert_at, slot.insert_at, text};
  }

  TextPatch add_resource(const Edit& e, const std::vector<const Edit*>& attrs) const {
    const ResourceSlot& slot = raw_.resource_slot;
    if (!slot.available || slot.insert_at == Span::kNoOffset) {
      throw PatchError("script has no place for new resources");
    }
    const std::string type = raw_type(e.site.type);
    const std::string& identifier = e.raw_value;
    std::vector<std::string> lines;
    if (raw_.tech == Tech::Ansible) {
      const std::string inner = slot.indent + "  " + unit();
      lines.push_back(slot.indent + "- " + type + ":");
      const std::string id_attr = CanonicalModel::builtin().identifying_attr(e.site.type);
      lines.push_back(inner + line_for(raw_attr(e.site.type, id_attr), identifier));
      for (const Edit* a : attrs) lines.push_back(inner + line_for(raw_attr(e.site.type, a->site.attribute), a->raw_value));
    } else {
      lines.push_back(type + " { " + puppet_single(identifier) + ":");
      for (const Edit* a : attrs) {
        lines.push_back(unit() + line_for(raw_attr(e.site.type, a->site.attribute), a->raw_value) + ",");
      }
      lines.push_back("}");
    }
    std::string body;
    for (std::size_t i = 0; i < lines.size(); ++i) body += (i ? "\n" : "") + lines[i];
    const std::string& src = raw_.source;
    std::size_t at = slot.insert_at;
    bool line_start = at == 0 || src[at - 1] == '\n';
    if (raw_.tech == Tech::Puppet && at == src.size()) {
      // Appended at end of file: keep one blank line of separation.
      std::string prefix = src.empty() ? "" : (src.back() == '\n' ? "\n" : "\n\n");
      return {at, at, prefix + body + "\n"};
    }
    return {at, at, line_start ? body + "\n" : "\n" + body};
  }

  const RepairSolution& sol_;
  const IRScript& raw_;
  const NormalizationDb& db_;
};

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      out.push_back(text.substr(pos));
      break;
    }
    out.push_back(text.substr(pos, nl - pos + 1));
    pos = nl + 1;
  }
  return out;
}

}  // namespace

std::vector<TextPatch> render_edits(const RepairSolution& solution, const IRScript& raw,
                                    const NormalizationDb& db) {
  return Renderer(solution, raw, db).run();
}

std::string apply_patches(std::string_view source, const std::vector<TextPatch>& patches) {
  std::string out;
  out.reserve(source.size());
  std::size_t cursor = 0;
  for (const auto& p : patches) {
    if (p.byte_start < cursor || p.byte_start > p.byte_end || p.byte_end > source.size()) {
      throw PatchError("patch [" + std::to_string(p.byte_start) + ", " + std::to_string(p.byte_end) +
                       ") overlaps a previous patch or leaves the source");
    }
    out.append(source.substr(cursor, p.byte_start - cursor));
    out += p.replacement;
    cursor = p.byte_end;
  }
  out.append(source.substr(cursor));
  return out;
}

std::string unified_diff(std::string_view before, std::string_view after, std::string_view from_name,
                         std::string_view to_name, int context) {
  auto a = split_lines(before);
  auto b = split_lines(after);
  const std::size_t n = a.size(), m = b.size();
  // LCS table over lines; scripts are small enough for the quadratic table.
  std::vector<std::vector<int>> lcs(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      lcs[i][j] = a[i] == b[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }
  struct Op {
    char tag;
    std::size_t ai, bi;
  };
  std::vector<Op> ops;
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    if (i < n && j < m && a[i] == b[j]) {
      ops.push_back({' ', i++, j++});
    } else if (i < n && (j == m || lcs[i + 1][j] >= lcs[i][j + 1])) {
      ops.push_back({'-', i++, j});
    } else {
      ops.push_back({'+', i, j++});
    }
  }
  auto line_text = [](std::string_view l) {
    std::string s(l);
    if (s.empty() || s.back() != '\n') s += "\n\\ No newline at end of file\n";
    return s;
  };

  std::string out;
  const std::size_t ctx = static_cast<std::size_t>(std::max(0, context));
  std::size_t k = 0;
  while (k < ops.size()) {
    if (ops[k].tag == ' ') {
      ++k;
      continue;
    }
    std::size_t start = k >= ctx ? k - ctx : 0;
    std::size_t end = k;
    std::size_t last_change = k;
    while (end < ops.size()) {
      if (ops[end].tag != ' ') last_change = end;
      if (end - last_change > 2 * ctx) break;
      ++end;
    }
    end = std::min(ops.size(), last_change + ctx + 1);
    std::size_t a_start = ops[start].ai, b_start = ops[start].bi, a_len = 0, b_len = 0;
    std::string body;
    for (std::size_t t = start; t < end; ++t) {
      const Op& op = ops[t];
      if (op.tag != '+') ++a_len;
      if (op.tag != '-') ++b_len;
      body += op.tag;
      body += line_text(op.tag == '+' ? b[op.bi] : a[op.ai]);
    }
    if (out.empty()) {
      out += "--- " + std::string(from_name) + "\n+++ " + std::string(to_name) + "\n";
    }
    out += "@@ -" + std::to_string(a_len ? a_start + 1 : a_start) + "," + std::to_string(a_len) + " +" +
           std::to_string(b_len ? b_start + 1 : b_start) + "," + std::to_string(b_len) + " @@\n" + body;
    k = end;
  }
  return out;
}

}  // namespace infrafix
