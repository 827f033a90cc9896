#include "infrafix/frontend.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "frontend_common.hpp"

namespace infrafix {

const std::vector<TechProfile>& tech_profiles() {
  static const std::vector<TechProfile> profiles = {
      {Tech::Ansible, {".yml", ".yaml"}, "#"},
      {Tech::Puppet, {".pp"}, "#"},
  };
  return profiles;
}

std::optional<Tech> detect_tech(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (const auto& profile : tech_profiles()) {
    if (std::find(profile.file_extensions.begin(), profile.file_extensions.end(), ext) !=
        profile.file_extensions.end()) {
      return profile.tech;
    }
  }
  return std::nullopt;
}

IRScript parse_script(Tech tech, std::string source) {
  return tech == Tech::Ansible ? parse_ansible(std::move(source)) : parse_puppet(std::move(source));
}

int detect_indent_unit(std::string_view source, int fallback) {
  std::map<int, int> votes;
  int prev = -1;
  std::size_t pos = 0;
  while (pos < source.size()) {
    std::size_t eol = source.find('\n', pos);
    if (eol == std::string_view::npos) eol = source.size();
    std::string_view line = source.substr(pos, eol - pos);
    pos = eol + 1;
    std::size_t first = line.find_first_not_of(' ');
    if (first == std::string_view::npos || line[first] == '#' || line[first] == '\r') continue;
    int ind = static_cast<int>(first);
    if (prev >= 0 && ind > prev) ++votes[ind - prev];
    prev = ind;
  }
  int best = fallback;
  int best_votes = 0;
  for (const auto& [unit, n] : votes) {
    if (n > best_votes) {
      best = unit;
      best_votes = n;
    }
  }
  return best;
}

namespace detail {

void finalize_script(IRScript& script) {
  int next = 0;
  visit_exprs_mut(script, [&](Expr& e) { e.id = next++; });
  script.next_expr_id = next;
  script.indent_unit = detect_indent_unit(script.source);
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isalnum(c) || c == '_'; });
}

std::optional<std::int64_t> parse_decimal(std::string_view s) {
  std::size_t i = 0;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) i = 1;
  if (i >= s.size()) return std::nullopt;
  if (s[i] == '0' && s.size() - i > 1) return std::nullopt;  // leading zeros stay strings
  if (s.size() - i > 18) return std::nullopt;
  std::int64_t v = 0;
  for (std::size_t k = i; k < s.size(); ++k) {
    if (!std::isdigit(static_cast<unsigned char>(s[k]))) return std::nullopt;
    v = v * 10 + (s[k] - '0');
  }
  return s[0] == '-' ? -v : v;
}

}  // namespace detail
}  // namespace infrafix
