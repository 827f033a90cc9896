#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "infrafix/ir.hpp"
#include "infrafix/normalize.hpp"
#include "infrafix/repair.hpp"

namespace infrafix {

struct TextPatch {
  std::size_t byte_start = 0;
  std::size_t byte_end = 0;
  std::string replacement;

  bool operator==(const TextPatch&) const = default;
};

// Turns a verified solution into textual patches against the raw (parsed, not
// normalized) script. Names are denormalized, quoting follows the edited token,
// and inserted lines follow the file's indentation. Throws PatchError on
// overlapping edits, synthetic spans or values the target syntax cannot hold.
std::vector<TextPatch> render_edits(const RepairSolution& solution, const IRScript& raw,
                                    const NormalizationDb& db);

// Splices sorted, non-overlapping patches into `source`; bytes outside the
// patched ranges are copied verbatim. Throws PatchError on overlap.
std::string apply_patches(std::string_view source, const std::vector<TextPatch>& patches);

// Line-based unified diff with `context` lines around each hunk; empty when the
// texts are equal.
std::string unified_diff(std::string_view before, std::string_view after, std::string_view from_name,
                         std::string_view to_name, int context = 3);

}  // namespace infrafix
