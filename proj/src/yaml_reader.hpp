#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "infrafix/ir.hpp"
#include "source_map.hpp"

// Span-preserving reader for the block/flow YAML subset used by playbooks:
// block sequences and mappings, single-line flow collections, plain and
// quoted single-line scalars, comments. Anchors, tags, block scalars and
// multi-document streams are rejected with a positioned ParseError.
namespace infrafix::yaml {

enum class NodeKind { Null, Scalar, Mapping, Sequence };

struct Node {
  NodeKind kind = NodeKind::Null;
  Span span;  // scalars: the token including quotes

  // Scalars.
  std::string value;
  QuoteStyle style = QuoteStyle::Plain;
  std::size_t raw_start = 0;  // content between the quotes
  std::size_t raw_end = 0;
  bool has_escapes = false;

  // Collections.
  std::vector<std::pair<Node, Node>> entries;
  std::vector<Node> items;
  bool flow = false;
  int column = -1;  // 0-based column of block entries
  // Byte offset just past the last entry: the end of its last line for block
  // collections, the end of its value for flow collections.
  std::size_t content_end = 0;

  const Node* get(std::string_view key) const;
};

Node parse(std::string_view source, const LineIndex& index);

}  // namespace infrafix::yaml
