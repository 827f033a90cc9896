#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "infrafix/ir.hpp"

namespace infrafix {

struct TechProfile {
  Tech tech;
  std::vector<std::string> file_extensions;
  std::string comment_syntax;
};

const std::vector<TechProfile>& tech_profiles();

// `.yml`/`.yaml` -> Ansible, `.pp` -> Puppet, otherwise nullopt.
std::optional<Tech> detect_tech(const std::filesystem::path& path);

// Both parsers produce raw (un-normalized) IR with exact spans and throw
// ParseError on anything outside the supported subset.
IRScript parse_ansible(std::string source);
IRScript parse_puppet(std::string source);
IRScript parse_script(Tech tech, std::string source);

// Dominant indentation step of a file: the most frequent positive indentation
// increase between consecutive content lines.
int detect_indent_unit(std::string_view source, int fallback = 2);

}  // namespace infrafix
