#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "infrafix/ir.hpp"

namespace infrafix::detail {

// Assigns pre-order expression ids and records layout facts shared by both
// frontends.
void finalize_script(IRScript& script);

bool is_identifier(std::string_view s);

// Decimal integer without leading zeros ("0644" is not an integer here).
std::optional<std::int64_t> parse_decimal(std::string_view s);

}  // namespace infrafix::detail
