#include <cctype>
#include <set>
#include <string>
#include <vector>

#include "frontend_common.hpp"
#include "infrafix/error.hpp"
#include "infrafix/frontend.hpp"
#include "source_map.hpp"

namespace infrafix {
namespace {

enum class Tok {
  Word,      // bareword or keyword
  TypeRef,   // capitalized word
  Variable,  // $name
  String,    // single-quoted
  DString,   // double-quoted
  Number,
  LBrace,
  RBrace,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Colon,
  Comma,
  Semi,
  Arrow,
  Assign,
  EqEq,
  NotEq,
  Plus,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string text;  // decoded value for strings, name for variables, lexeme otherwise
  bool has_escapes = false;
};

class Lexer {
 public:
  Lexer(std::string_view src, const LineIndex& index) : src_(src), index_(index) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_trivia();
      if (pos_ >= src_.size()) {
        out.push_back({Tok::End, pos_, pos_, "", false});
        return out;
      }
      out.push_back(next());
    }
  }

 private:
  [[noreturn]] void fail(const std::string& kind, std::size_t at, const std::string& msg) const {
    auto [line, col] = index_.position(at);
    throw ParseError(kind, line, col, msg);
  }

  void skip_trivia() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
        std::size_t close = src_.find("*/", pos_ + 2);
        if (close == std::string_view::npos) fail("syntax", pos_, "unterminated comment");
        pos_ = close + 2;
      } else {
        return;
      }
    }
  }

  static bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  Token next() {
    std::size_t start = pos_;
    char c = src_[pos_];
    auto simple = [&](Tok kind, std::size_t len) {
      pos_ += len;
      return Token{kind, start, pos_, std::string(src_.substr(start, len)), false};
    };
    switch (c) {
      case '{': return simple(Tok::LBrace, 1);
      case '}': return simple(Tok::RBrace, 1);
      case '(': return simple(Tok::LParen, 1);
      case ')': return simple(Tok::RParen, 1);
      case '[': return simple(Tok::LBracket, 1);
      case ']': return simple(Tok::RBracket, 1);
      case ',': return simple(Tok::Comma, 1);
      case ';': return simple(Tok::Semi, 1);
      case '+': return simple(Tok::Plus, 1);
      case ':':
        if (src_.compare(pos_, 2, "::") == 0) break;
        return simple(Tok::Colon, 1);
      case '=':
        if (src_.compare(pos_, 2, "=>") == 0) return simple(Tok::Arrow, 2);
        if (src_.compare(pos_, 2, "==") == 0) return simple(Tok::EqEq, 2);
        if (src_.compare(pos_, 2, "=~") == 0) fail("unsupported", pos_, "regex matches are not supported");
        return simple(Tok::Assign, 1);
      case '!':
        if (src_.compare(pos_, 2, "!=") == 0) return simple(Tok::NotEq, 2);
        fail("unsupported", pos_, "negation is not supported");
      case '\'': return single_quoted();
      case '"': return double_quoted();
      case '$': return variable();
      default: break;
    }
    const bool negative = c == '-' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]));
    if (negative || std::isdigit(static_cast<unsigned char>(c))) {
      if (negative) ++pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
        ++pos_;
      }
      return Token{Tok::Number, start, pos_, std::string(src_.substr(start, pos_ - start)), false};
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':') {
      while (pos_ < src_.size() && (word_char(src_[pos_]) || src_.compare(pos_, 2, "::") == 0)) {
        pos_ += src_.compare(pos_, 2, "::") == 0 ? 2 : 1;
      }
      std::string text(src_.substr(start, pos_ - start));
      Tok kind = std::isupper(static_cast<unsigned char>(c)) ? Tok::TypeRef : Tok::Word;
      return Token{kind, start, pos_, std::move(text), false};
    }
    fail("syntax", pos_, std::string("unexpected character '") + c + "'");
  }

  Token variable() {
    std::size_t start = pos_++;
    if (src_.compare(pos_, 2, "::") == 0) pos_ += 2;
    std::size_t name_start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_' ||
            src_.compare(pos_, 2, "::") == 0)) {
      pos_ += src_.compare(pos_, 2, "::") == 0 ? 2 : 1;
    }
    if (pos_ == name_start) fail("syntax", start, "expected a variable name after '$'");
    return Token{Tok::Variable, start, pos_, std::string(src_.substr(start + 1, pos_ - start - 1)), false};
  }

  Token single_quoted() {
    std::size_t start = pos_++;
    Token t{Tok::String, start, start, "", false};
    while (true) {
      if (pos_ >= src_.size()) fail("syntax", start, "unterminated string");
      char c = src_[pos_];
      if (c == '\\' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == '\'' || src_[pos_ + 1] == '\\')) {
        t.has_escapes = true;
        t.text += src_[pos_ + 1];
        pos_ += 2;
        continue;
      }
      if (c == '\'') break;
      t.text += c;
      ++pos_;
    }
    t.end = ++pos_;
    return t;
  }

  // Keeps the raw content; interpolation is resolved by the parser.
  Token double_quoted() {
    std::size_t start = pos_++;
    Token t{Tok::DString, start, start, "", false};
    while (true) {
      if (pos_ >= src_.size()) fail("syntax", start, "unterminated string");
      char c = src_[pos_];
      if (c == '\\') {
        t.has_escapes = true;
        pos_ += 2;
        continue;
      }
      if (c == '"') break;
      ++pos_;
    }
    t.end = ++pos_;
    t.text = std::string(src_.substr(start + 1, t.end - start - 2));
    return t;
  }

  std::string_view src_;
  const LineIndex& index_;
  std::size_t pos_ = 0;
};

const std::set<std::string, std::less<>> kUnsupportedKeywords = {
    "unless", "case", "class", "define", "node", "include", "require", "contain",
    "function", "type", "import", "inherits", "realize", "notify", "exec_fact"};

class PuppetParser {
 public:
  explicit PuppetParser(std::string source) : index_(source) {
    script_.tech = Tech::Puppet;
    script_.source = std::move(source);
  }

  IRScript parse() {
    toks_ = Lexer(script_.source, index_).run();
    while (peek().kind != Tok::End) script_.statements.push_back(statement());
    script_.resource_slot.insert_at = script_.source.size();
    script_.resource_slot.available = true;
    detail::finalize_script(script_);
    return std::move(script_);
  }

 private:
  [[noreturn]] void fail(const std::string& kind, std::size_t at, const std::string& msg) const {
    auto [line, col] = index_.position(std::min(at, script_.source.size()));
    throw ParseError(kind, line, col, msg);
  }

  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(cur_ + ahead, toks_.size() - 1)];
  }
  const Token& take() { return toks_[std::min(cur_++, toks_.size() - 1)]; }

  const Token& expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail("syntax", peek().start, std::string("expected ") + what);
    return take();
  }

  bool is_word(std::string_view w) const { return peek().kind == Tok::Word && peek().text == w; }

  Statement statement() {
    const Token& t = peek();
    if (t.kind == Tok::Variable) return assignment();
    if (t.kind == Tok::TypeRef) fail("unsupported", t.start, "resource references and defaults are not supported");
    if (t.kind != Tok::Word) fail("syntax", t.start, "expected a statement");
    if (t.text == "if") return conditional(false);
    if (kUnsupportedKeywords.count(t.text)) {
      fail("unsupported", t.start, "'" + t.text + "' is not supported");
    }
    if (peek(1).kind == Tok::LBrace) return resource();
    fail("syntax", t.start, "expected a resource declaration");
  }

  Statement assignment() {
    const Token& var = take();
    if (var.text.find("::") != std::string::npos) fail("syntax", var.start, "cannot assign to a qualified variable");
    expect(Tok::Assign, "'='");
    Assignment a;
    a.name = var.text;
    a.value = expression();
    a.span = index_.span(var.start, a.value.span.byte_end);
    return Statement{std::move(a)};
  }

  Statement conditional(bool elsif) {
    const Token& kw = take();  // if / elsif
    (void)elsif;
    Conditional c;
    c.id = next_conditional_++;
    c.condition = condition();
    c.then_branch = block();
    if (is_word("elsif")) {
      c.else_branch.push_back(conditional(true));
    } else if (is_word("else")) {
      take();
      c.else_branch = block();
    }
    c.span = index_.span(kw.start, toks_[cur_ - 1].end);
    return Statement{std::move(c)};
  }

  std::vector<Statement> block() {
    expect(Tok::LBrace, "'{'");
    std::vector<Statement> out;
    while (peek().kind != Tok::RBrace) {
      if (peek().kind == Tok::End) fail("syntax", peek().start, "unterminated block");
      out.push_back(statement());
    }
    take();
    return out;
  }

  Expr condition() {
    if (peek().kind == Tok::LParen) {
      std::size_t open = take().start;
      Expr inner = condition();
      const Token& close = expect(Tok::RParen, "')'");
      (void)open;
      (void)close;
      return inner;
    }
    Expr left = expression();
    ExprKind kind;
    if (peek().kind == Tok::EqEq) {
      kind = ExprKind::Equals;
    } else if (peek().kind == Tok::NotEq) {
      kind = ExprKind::NotEquals;
    } else {
      fail("unsupported", peek().start, "conditions must be '==' or '!=' comparisons");
    }
    take();
    Expr right = expression();
    Span s = index_.span(left.span.byte_start, right.span.byte_end);
    return Expr::binary(kind, std::move(left), std::move(right), s);
  }

  Statement resource() {
    const Token& type = take();
    expect(Tok::LBrace, "'{'");
    Resource r;
    r.type = type.text;
    r.type_span = index_.span(type.start, type.end);
    r.index = next_resource_++;
    if (peek().kind == Tok::LBracket) {
      fail("unsupported-array-title", peek().start, "array titles declare several resources in one construct");
    }
    r.title = expression();
    const Token& colon = expect(Tok::Colon, "':' after resource title");
    std::size_t line_of_title = static_cast<std::size_t>(index_.position(colon.start).first);

    std::size_t last_value_end = colon.end;
    bool trailing_comma = false;
    bool trailing_semi = false;
    std::size_t after_comma = 0;
    while (peek().kind == Tok::Word) {
      const Token& name = take();
      if (peek().kind != Tok::Arrow) fail("syntax", peek().start, "expected '=>' after attribute name");
      take();
      Attribute attr;
      attr.name = name.text;
      attr.name_span = index_.span(name.start, name.end);
      attr.value = attribute_value();
      last_value_end = attr.value.span.byte_end;
      r.attributes.push_back(std::move(attr));
      trailing_comma = trailing_semi = false;
      if (peek().kind == Tok::Comma) {
        trailing_comma = true;
        after_comma = take().end;
      } else {
        break;
      }
    }
    if (peek().kind == Tok::Semi) {
      take();
      trailing_semi = true;
      if (peek().kind != Tok::RBrace) {
        fail("unsupported", peek().start, "multiple resource bodies in one declaration are not supported");
      }
    }
    const Token& close = expect(Tok::RBrace, "'}' closing the resource");
    r.span = index_.span(type.start, close.end);

    std::size_t close_line = static_cast<std::size_t>(index_.position(close.start).first);
    r.slot.flow = close_line == line_of_title;
    if (r.attributes.empty()) {
      r.slot.insert_at = colon.end;
      r.slot.needs_comma = false;
      std::size_t ls = index_.line_start(type.start);
      std::size_t ind = type.start - ls;
      r.slot.indent = std::string(ind, ' ') + std::string(static_cast<std::size_t>(detect_indent_unit(script_.source)), ' ');
    } else {
      if (trailing_comma && !trailing_semi) {
        r.slot.insert_at = after_comma;
        r.slot.needs_comma = false;
      } else {
        r.slot.insert_at = last_value_end;
        r.slot.needs_comma = true;
      }
      const Span& first = r.attributes.front().name_span;
      std::size_t ls = index_.line_start(first.byte_start);
      r.slot.indent = std::string(first.byte_start - ls, ' ');
    }
    return Statement{std::move(r)};
  }

  Expr attribute_value() {
    const Token& t = peek();
    if (t.kind == Tok::LBracket) fail("unsupported", t.start, "array values are not supported");
    if (t.kind == Tok::LBrace) fail("unsupported", t.start, "hash values are not supported");
    if (t.kind == Tok::TypeRef) fail("unsupported", t.start, "resource references are not supported");
    return expression();
  }

  Expr expression() {
    Expr left = primary();
    while (peek().kind == Tok::Plus) {
      take();
      Expr right = primary();
      Span s = index_.span(left.span.byte_start, right.span.byte_end);
      left = Expr::binary(ExprKind::Sum, std::move(left), std::move(right), s);
    }
    return left;
  }

  Expr primary() {
    const Token& t = take();
    Span s = index_.span(t.start, t.end);
    switch (t.kind) {
      case Tok::String:
        return Expr::string(t.text, s, QuoteStyle::Single);
      case Tok::DString:
        return double_string(t);
      case Tok::Number:
        if (auto n = detail::parse_decimal(t.text)) return Expr::integer(*n, t.text, s);
        return Expr::string(t.text, s);
      case Tok::Variable:
        return Expr::var(t.text, s);
      case Tok::Word:
        if (t.text == "true" || t.text == "false") return Expr::boolean(t.text == "true", t.text, s);
        if (t.text == "undef") return Expr::null(s);
        if (t.text == "if" || t.text == "else" || t.text == "elsif" || kUnsupportedKeywords.count(t.text)) {
          fail("syntax", t.start, "unexpected keyword '" + t.text + "'");
        }
        return Expr::string(t.text, s);
      case Tok::LParen: {
        Expr inner = expression();
        expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::LBracket:
        fail("unsupported", t.start, "arrays are not supported");
      case Tok::TypeRef:
        fail("unsupported", t.start, "resource references are not supported");
      default:
        fail("syntax", t.start, "expected an expression");
    }
  }

  Expr fragment(Expr e) {
    e.embedded = true;
    e.host_quote = QuoteStyle::Double;
    return e;
  }

  // Double-quoted strings: "${x}" / "$x" interpolation becomes Concat/VarRef.
  Expr double_string(const Token& t) {
    std::string_view src = script_.source;
    std::size_t raw_start = t.start + 1;
    std::size_t raw_end = t.end - 1;
    Span whole = index_.span(t.start, t.end);
    bool interpolates = false;
    for (std::size_t p = raw_start; p < raw_end; ++p) {
      if (src[p] == '\\') {
        ++p;
        continue;
      }
      if (src[p] == '$') interpolates = true;
    }
    if (!interpolates) {
      std::string value;
      for (std::size_t p = raw_start; p < raw_end; ++p) {
        if (src[p] != '\\') {
          value += src[p];
          continue;
        }
        char e = src[++p];
        switch (e) {
          case 'n': value += '\n'; break;
          case 't': value += '\t'; break;
          case 'r': value += '\r'; break;
          case '"': case '\\': case '$': case '\'': value += e; break;
          default: value += '\\'; value += e; break;
        }
      }
      return Expr::string(std::move(value), whole, QuoteStyle::Double);
    }
    if (t.has_escapes) fail("unsupported", t.start, "escapes inside interpolated strings are not supported");

    std::vector<Expr> parts;
    std::size_t p = raw_start;
    std::size_t lit_start = p;
    auto flush = [&](std::size_t end) {
      if (end > lit_start) {
        parts.push_back(fragment(Expr::string(std::string(src.substr(lit_start, end - lit_start)),
                                              index_.span(lit_start, end))));
      }
    };
    while (p < raw_end) {
      if (src[p] != '$') {
        ++p;
        continue;
      }
      flush(p);
      std::size_t start = p;
      std::string name;
      if (p + 1 < raw_end && src[p + 1] == '{') {
        std::size_t close = src.find('}', p + 2);
        if (close == std::string_view::npos || close >= raw_end) fail("syntax", p, "unterminated '${'");
        name = std::string(src.substr(p + 2, close - p - 2));
        if (name.rfind("::", 0) == 0) name = name.substr(2);
        p = close + 1;
      } else {
        std::size_t q = p + 1;
        if (src.compare(q, 2, "::") == 0) q += 2;
        std::size_t ns = q;
        while (q < raw_end && (std::isalnum(static_cast<unsigned char>(src[q])) || src[q] == '_')) ++q;
        name = std::string(src.substr(ns, q - ns));
        p = q;
      }
      if (!detail::is_identifier(name)) fail("unsupported", start, "only plain variable interpolation is supported");
      bool qualified = src.compare(start + 1, 3, "{::") == 0 || src.compare(start + 1, 2, "::") == 0;
      parts.push_back(fragment(Expr::var(qualified ? "::" + name : name, index_.span(start, p))));
      lit_start = p;
    }
    flush(raw_end);

    if (parts.size() == 1) {
      Expr root = std::move(parts.front());
      root.embedded = false;
      root.span = whole;
      root.quote = QuoteStyle::Double;
      return root;
    }
    Expr acc = std::move(parts.back());
    for (std::size_t i = parts.size() - 1; i-- > 0;) {
      Span s = index_.span(parts[i].span.byte_start, acc.span.byte_end);
      acc = fragment(Expr::binary(ExprKind::Concat, std::move(parts[i]), std::move(acc), s));
    }
    acc.embedded = false;
    acc.span = whole;
    acc.quote = QuoteStyle::Double;
    return acc;
  }

  LineIndex index_;
  IRScript script_;
  std::vector<Token> toks_;
  std::size_t cur_ = 0;
  int next_conditional_ = 0;
  int next_resource_ = 0;
};

}  // namespace

IRScript parse_puppet(std::string source) { return PuppetParser(std::move(source)).parse(); }

}  // namespace infrafix
