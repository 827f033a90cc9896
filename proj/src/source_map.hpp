#pragma once

#include <algorithm>
#include <string_view>
#include <utility>
#include <vector>

#include "infrafix/ir.hpp"

namespace infrafix {

// Maps byte offsets to 1-based line/column pairs.
class LineIndex {
 public:
  explicit LineIndex(std::string_view source) : size_(source.size()) {
    starts_.push_back(0);
    for (std::size_t i = 0; i < source.size(); ++i) {
      if (source[i] == '\n') starts_.push_back(i + 1);
    }
  }

  std::pair<int, int> position(std::size_t offset) const {
    auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
    std::size_t line = static_cast<std::size_t>(it - starts_.begin());
    return {static_cast<int>(line), static_cast<int>(offset - starts_[line - 1] + 1)};
  }

  Span span(std::size_t start, std::size_t end) const {
    Span s;
    std::tie(s.start_line, s.start_col) = position(start);
    std::tie(s.end_line, s.end_col) = position(end);
    s.byte_start = start;
    s.byte_end = end;
    return s;
  }

  std::size_t line_start(std::size_t offset) const {
    auto it = std::upper_bound(starts_.begin(), starts_.end(), offset);
    return *(it - 1);
  }

  std::size_t size() const { return size_; }

 private:
  std::size_t size_;
  std::vector<std::size_t> starts_;
};

}  // namespace infrafix
