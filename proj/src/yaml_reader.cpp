#include "yaml_reader.hpp"

#include <set>

#include "infrafix/error.hpp"

namespace infrafix::yaml {

const Node* Node::get(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k.value == key) return &v;
  }
  return nullptr;
}

namespace {

class Reader {
 public:
  Reader(std::string_view src, const LineIndex& index) : src_(src), index_(index) {}

  Node document() {
    skip_blank_lines();
    if (src_.substr(pos_, 3) == "---" && (at_eol(pos_ + 3) || src_[pos_ + 3] == ' ')) {
      pos_ += 3;
      skip_spaces();
      if (!at_eol(pos_) && peek() != '#') fail("unsupported", pos_, "content after document marker");
      finish_line();
      skip_blank_lines();
    }
    Node root;
    root.span = index_.span(pos_, pos_);
    if (!eof()) root = block(-1);
    skip_blank_lines();
    if (!eof()) {
      std::size_t at = pos_ + static_cast<std::size_t>(indent_at(pos_));
      if (src_.substr(at, 3) == "---" || src_.substr(at, 3) == "...") {
        fail("unsupported", at, "multi-document streams are not supported");
      }
      fail("syntax", at, "unexpected content at this indentation");
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& kind, std::size_t at, const std::string& msg) const {
    auto [line, col] = index_.position(std::min(at, src_.size()));
    throw ParseError(kind, line, col, msg);
  }

  bool eof() const { return pos_ >= src_.size(); }
  char peek() const { return eof() ? '\0' : src_[pos_]; }

  bool at_eol(std::size_t p) const {
    if (p >= src_.size()) return true;
    if (src_[p] == '\n') return true;
    return src_[p] == '\r' && p + 1 < src_.size() && src_[p + 1] == '\n';
  }

  void skip_spaces() {
    while (!eof() && src_[pos_] == ' ') ++pos_;
  }

  void consume_newline() {
    if (eof()) return;
    if (src_[pos_] == '\r') ++pos_;
    if (!eof() && src_[pos_] == '\n') ++pos_;
  }

  // Ends a line that carried content: optional trailing comment, then EOL.
  void finish_line() {
    skip_spaces();
    if (peek() == '#') {
      while (!at_eol(pos_)) ++pos_;
    }
    if (!at_eol(pos_)) fail("syntax", pos_, "unexpected trailing content");
    last_line_end_ = pos_;
    consume_newline();
  }

  // Leaves pos_ at the start of the next line with content, or at EOF.
  void skip_blank_lines() {
    while (!eof()) {
      std::size_t p = pos_;
      while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t')) ++p;
      if (at_eol(p)) {
        pos_ = p;
        consume_newline();
        continue;
      }
      if (src_[p] == '#') {
        while (!at_eol(p)) ++p;
        pos_ = p;
        consume_newline();
        continue;
      }
      return;
    }
  }

  int indent_at(std::size_t line_start) const {
    std::size_t p = line_start;
    while (p < src_.size() && src_[p] == ' ') ++p;
    if (p < src_.size() && src_[p] == '\t') fail("syntax", p, "tab characters in indentation");
    return static_cast<int>(p - line_start);
  }

  int column_of(std::size_t p) const { return static_cast<int>(p - index_.line_start(p)); }

  bool is_seq_entry(std::size_t p) const {
    return p < src_.size() && src_[p] == '-' && (at_eol(p + 1) || src_[p + 1] == ' ');
  }

  std::size_t quoted_end(std::size_t p) const {
    char q = src_[p];
    std::size_t i = p + 1;
    while (!at_eol(i)) {
      if (q == '"' && src_[i] == '\\') {
        i += 2;
        continue;
      }
      if (src_[i] == q) {
        if (q == '\'' && i + 1 < src_.size() && src_[i + 1] == '\'') {
          i += 2;
          continue;
        }
        return i + 1;
      }
      ++i;
    }
    return std::string_view::npos;
  }

  bool key_ahead(std::size_t p) const {
    if (p >= src_.size()) return false;
    char c = src_[p];
    if (c == '"' || c == '\'') {
      std::size_t q = quoted_end(p);
      if (q == std::string_view::npos) return false;
      while (q < src_.size() && src_[q] == ' ') ++q;
      return q < src_.size() && src_[q] == ':' && (at_eol(q + 1) || src_[q + 1] == ' ');
    }
    if (c == '{' || c == '[' || c == '#' || is_seq_entry(p)) return false;
    for (std::size_t q = p; !at_eol(q); ++q) {
      if (src_[q] == ':' && (at_eol(q + 1) || src_[q + 1] == ' ')) return true;
      if (src_[q] == '#' && q > p && src_[q - 1] == ' ') return false;
    }
    return false;
  }

  Node null_at(std::size_t p) const {
    Node n;
    n.kind = NodeKind::Null;
    n.span = index_.span(p, p);
    n.raw_start = n.raw_end = p;
    return n;
  }

  Node block(int parent_indent) {
    skip_blank_lines();
    if (eof()) return null_at(pos_);
    int ind = indent_at(pos_);
    if (ind <= parent_indent) return null_at(pos_);
    pos_ += static_cast<std::size_t>(ind);
    return block_at(ind, parent_indent);
  }

  Node block_at(int col, int parent_indent) {
    if (is_seq_entry(pos_)) return sequence(col);
    if (key_ahead(pos_)) return mapping(col);
    Node v = inline_value(false);
    finish_line();
    skip_blank_lines();
    if (!eof() && indent_at(pos_) > parent_indent) {
      fail("unsupported", pos_, "multi-line plain scalars are not supported");
    }
    return v;
  }

  Node sequence(int col) {
    Node n;
    n.kind = NodeKind::Sequence;
    n.column = col;
    std::size_t start = pos_;
    while (true) {
      ++pos_;  // '-'
      skip_spaces();
      Node item;
      if (at_eol(pos_) || peek() == '#') {
        finish_line();
        item = block(col);
      } else {
        int icol = column_of(pos_);
        if (is_seq_entry(pos_)) {
          item = sequence(icol);
        } else if (key_ahead(pos_)) {
          item = mapping(icol);
        } else {
          item = inline_value(false);
          finish_line();
          skip_blank_lines();
          if (!eof() && indent_at(pos_) > col) {
            fail("unsupported", pos_, "multi-line plain scalars are not supported");
          }
        }
      }
      n.items.push_back(std::move(item));
      skip_blank_lines();
      if (eof()) break;
      int ind = indent_at(pos_);
      if (ind < col) break;
      if (ind > col) fail("syntax", pos_ + ind, "bad indentation of a sequence entry");
      if (!is_seq_entry(pos_ + ind)) break;
      pos_ += static_cast<std::size_t>(ind);
    }
    n.content_end = last_line_end_;
    n.span = index_.span(start, last_line_end_);
    return n;
  }

  Node key_scalar() {
    char c = peek();
    if (c == '"') return double_quoted();
    if (c == '\'') return single_quoted();
    std::size_t start = pos_;
    while (!(src_[pos_] == ':' && (at_eol(pos_ + 1) || src_[pos_ + 1] == ' '))) ++pos_;
    std::size_t end = pos_;
    while (end > start && src_[end - 1] == ' ') --end;
    Node k;
    k.kind = NodeKind::Scalar;
    k.value = std::string(src_.substr(start, end - start));
    k.raw_start = start;
    k.raw_end = end;
    k.span = index_.span(start, end);
    return k;
  }

  Node mapping(int col) {
    Node n;
    n.kind = NodeKind::Mapping;
    n.column = col;
    std::size_t start = pos_;
    std::set<std::string> seen;
    while (true) {
      std::size_t key_at = pos_;
      Node key = key_scalar();
      skip_spaces();
      if (peek() != ':') fail("syntax", pos_, "expected ':' after mapping key");
      ++pos_;
      Node value;
      skip_spaces();
      if (at_eol(pos_) || peek() == '#') {
        std::size_t after = pos_;
        finish_line();
        skip_blank_lines();
        value = null_at(after);
        if (!eof()) {
          int ind = indent_at(pos_);
          if (ind > col) {
            value = block(col);
          } else if (ind == col && is_seq_entry(pos_ + ind)) {
            pos_ += static_cast<std::size_t>(ind);
            value = sequence(col);
          }
        }
      } else {
        char c = peek();
        if (c == '|' || c == '>') fail("unsupported", pos_, "block scalars are not supported");
        value = inline_value(false);
        finish_line();
        skip_blank_lines();
        if (!eof() && indent_at(pos_) > col) {
          fail("syntax", pos_ + indent_at(pos_), "unexpected indentation");
        }
      }
      if (!seen.insert(key.value).second) fail("syntax", key_at, "duplicate key '" + key.value + "'");
      n.entries.emplace_back(std::move(key), std::move(value));
      if (eof()) break;
      int ind = indent_at(pos_);
      if (ind < col) break;
      if (ind > col) fail("syntax", pos_ + ind, "unexpected indentation");
      if (is_seq_entry(pos_ + ind)) fail("syntax", pos_ + ind, "sequence entry inside a mapping");
      pos_ += static_cast<std::size_t>(ind);
    }
    n.content_end = last_line_end_;
    n.span = index_.span(start, last_line_end_);
    return n;
  }

  Node inline_value(bool flow) {
    char c = peek();
    if (c == '{') return flow_mapping();
    if (c == '[') return flow_sequence();
    if (c == '"') return double_quoted();
    if (c == '\'') return single_quoted();
    if (c == '&' || c == '*' || c == '!' || c == '%' || c == '@' || c == '`' ||
        (flow && (c == '|' || c == '>'))) {
      fail("unsupported", pos_, std::string("unsupported YAML indicator '") + c + "'");
    }
    return plain(flow);
  }

  Node plain(bool flow) {
    std::size_t start = pos_;
    while (!at_eol(pos_)) {
      char c = src_[pos_];
      if (c == '#' && pos_ > start && src_[pos_ - 1] == ' ') break;
      if (flow && (c == ',' || c == '}' || c == ']')) break;
      if (c == ':' && (at_eol(pos_ + 1) || src_[pos_ + 1] == ' ')) {
        if (flow) break;
        fail("syntax", pos_, "nested mapping on a single line");
      }
      ++pos_;
    }
    std::size_t end = pos_;
    while (end > start && src_[end - 1] == ' ') --end;
    if (end == start) return null_at(start);
    Node n;
    n.kind = NodeKind::Scalar;
    n.value = std::string(src_.substr(start, end - start));
    n.raw_start = start;
    n.raw_end = end;
    n.span = index_.span(start, end);
    return n;
  }

  Node double_quoted() {
    std::size_t start = pos_++;
    Node n;
    n.kind = NodeKind::Scalar;
    n.style = QuoteStyle::Double;
    n.raw_start = pos_;
    while (true) {
      if (at_eol(pos_)) fail("unsupported", start, "multi-line quoted scalars are not supported");
      char c = src_[pos_];
      if (c == '"') break;
      if (c == '\\') {
        n.has_escapes = true;
        ++pos_;
        if (at_eol(pos_)) fail("unsupported", start, "multi-line quoted scalars are not supported");
        switch (src_[pos_]) {
          case 'n': n.value += '\n'; break;
          case 't': n.value += '\t'; break;
          case 'r': n.value += '\r'; break;
          case '0': n.value += '\0'; break;
          case '"': n.value += '"'; break;
          case '\\': n.value += '\\'; break;
          case '/': n.value += '/'; break;
          case ' ': n.value += ' '; break;
          default: fail("syntax", pos_, "unknown escape sequence");
        }
        ++pos_;
        continue;
      }
      n.value += c;
      ++pos_;
    }
    n.raw_end = pos_;
    ++pos_;
    n.span = index_.span(start, pos_);
    return n;
  }

  Node single_quoted() {
    std::size_t start = pos_++;
    Node n;
    n.kind = NodeKind::Scalar;
    n.style = QuoteStyle::Single;
    n.raw_start = pos_;
    while (true) {
      if (at_eol(pos_)) fail("unsupported", start, "multi-line quoted scalars are not supported");
      char c = src_[pos_];
      if (c == '\'') {
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '\'') {
          n.has_escapes = true;
          n.value += '\'';
          pos_ += 2;
          continue;
        }
        break;
      }
      n.value += c;
      ++pos_;
    }
    n.raw_end = pos_;
    ++pos_;
    n.span = index_.span(start, pos_);
    return n;
  }

  void skip_flow_spaces() {
    skip_spaces();
    if (at_eol(pos_)) fail("unsupported", pos_, "multi-line flow collections are not supported");
  }

  Node flow_mapping() {
    std::size_t start = pos_++;
    Node n;
    n.kind = NodeKind::Mapping;
    n.flow = true;
    n.content_end = pos_;
    std::set<std::string> seen;
    skip_flow_spaces();
    if (peek() == '}') {
      ++pos_;
      n.span = index_.span(start, pos_);
      return n;
    }
    while (true) {
      std::size_t key_at = pos_;
      Node key;
      if (peek() == '"') {
        key = double_quoted();
      } else if (peek() == '\'') {
        key = single_quoted();
      } else {
        key = plain(true);
        if (key.kind != NodeKind::Scalar) fail("syntax", key_at, "expected a mapping key");
      }
      skip_flow_spaces();
      if (peek() != ':') fail("syntax", pos_, "expected ':' in flow mapping");
      ++pos_;
      skip_flow_spaces();
      Node value = (peek() == ',' || peek() == '}') ? null_at(pos_) : inline_value(true);
      n.content_end = value.span.byte_end;
      if (!seen.insert(key.value).second) fail("syntax", key_at, "duplicate key '" + key.value + "'");
      n.entries.emplace_back(std::move(key), std::move(value));
      skip_flow_spaces();
      if (peek() == ',') {
        ++pos_;
        skip_flow_spaces();
        continue;
      }
      if (peek() == '}') {
        ++pos_;
        break;
      }
      fail("syntax", pos_, "expected ',' or '}' in flow mapping");
    }
    n.span = index_.span(start, pos_);
    return n;
  }

  Node flow_sequence() {
    std::size_t start = pos_++;
    Node n;
    n.kind = NodeKind::Sequence;
    n.flow = true;
    n.content_end = pos_;
    skip_flow_spaces();
    if (peek() == ']') {
      ++pos_;
      n.span = index_.span(start, pos_);
      return n;
    }
    while (true) {
      Node item = inline_value(true);
      n.content_end = item.span.byte_end;
      n.items.push_back(std::move(item));
      skip_flow_spaces();
      if (peek() == ',') {
        ++pos_;
        skip_flow_spaces();
        continue;
      }
      if (peek() == ']') {
        ++pos_;
        break;
      }
      fail("syntax", pos_, "expected ',' or ']' in flow sequence");
    }
    n.span = index_.span(start, pos_);
    return n;
  }

  std::string_view src_;
  const LineIndex& index_;
  std::size_t pos_ = 0;
  std::size_t last_line_end_ = 0;
};

}  // namespace

Node parse(std::string_view source, const LineIndex& index) {
  return Reader(source, index).document();
}

}  // namespace infrafix::yaml
