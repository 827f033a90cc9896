#include <grp.h>
#include <pwd.h>
#include <sys/stat.h>
#include <unistd.h>

#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>

#include "infrafix/error.hpp"
#include "infrafix/infer.hpp"

namespace infrafix {
namespace {

std::string_view strip(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Quoted strings of an argument list, with C escapes decoded. nullopt when a
// quote is left open.
std::optional<std::vector<std::string>> quoted_args(std::string_view args) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] != '"') continue;
    std::string s;
    ++i;
    for (;; ++i) {
      if (i >= args.size()) return std::nullopt;
      char c = args[i];
      if (c == '"') break;
      if (c == '\\' && i + 1 < args.size()) {
        char e = args[++i];
        switch (e) {
          case 'n': s += '\n'; break;
          case 't': s += '\t'; break;
          default: s += e; break;
        }
        continue;
      }
      s += c;
    }
    // strace marks truncated strings with a trailing "..."
    if (args.compare(i + 1, 3, "...") == 0) return std::nullopt;
    out.push_back(std::move(s));
  }
  return out;
}

bool has_write_flags(std::string_view args) {
  for (std::string_view flag : {"O_WRONLY", "O_RDWR", "O_CREAT", "O_TRUNC", "O_APPEND"}) {
    if (args.find(flag) != std::string_view::npos) return true;
  }
  return false;
}

std::string user_name(uid_t uid) {
  std::array<char, 4096> buf{};
  passwd pw{};
  passwd* res = nullptr;
  if (getpwuid_r(uid, &pw, buf.data(), buf.size(), &res) == 0 && res) return pw.pw_name;
  return std::to_string(uid);
}

std::string group_name(gid_t gid) {
  std::array<char, 4096> buf{};
  group gr{};
  group* res = nullptr;
  if (getgrgid_r(gid, &gr, buf.data(), buf.size(), &res) == 0 && res) return gr.gr_name;
  return std::to_string(gid);
}

std::string fnv1a64(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + hex;
}

}  // namespace

TraceParse parse_trace(std::string_view text) {
  TraceParse out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = strip(text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos));
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    if (line.empty()) continue;

    if (line.rfind("[pid", 0) == 0) {
      auto close = line.find(']');
      if (close == std::string_view::npos) {
        ++out.skipped;
        continue;
      }
      line = strip(line.substr(close + 1));
    } else if (std::isdigit(static_cast<unsigned char>(line.front()))) {
      std::size_t i = 0;
      while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
      if (i < line.size() && line[i] == ' ') line = strip(line.substr(i));
    }

    std::size_t i = 0;
    while (i < line.size() && (std::isalnum(static_cast<unsigned char>(line[i])) || line[i] == '_')) ++i;
    std::string_view name = line.substr(0, i);
    std::size_t close = line.rfind(')');
    if (name.empty() || i >= line.size() || line[i] != '(' || close == std::string_view::npos || close < i) {
      ++out.skipped;
      continue;
    }
    std::string_view args = line.substr(i + 1, close - i - 1);
    auto quoted = quoted_args(args);
    if (!quoted) {
      ++out.skipped;
      continue;
    }

    std::vector<std::pair<std::string, TraceOp>> hits;
    auto first = [&](TraceOp op) {
      if (!quoted->empty()) hits.emplace_back(quoted->front(), op);
    };
    if (name == "open" || name == "openat") {
      if (!has_write_flags(args)) continue;
      first(TraceOp::Write);
    } else if (name == "creat") {
      first(TraceOp::Create);
    } else if (name == "chmod" || name == "fchmodat") {
      first(TraceOp::Chmod);
    } else if (name == "chown" || name == "lchown" || name == "fchownat") {
      first(TraceOp::Chown);
    } else if (name == "mkdir" || name == "mkdirat") {
      first(TraceOp::Mkdir);
    } else if (name == "unlink" || name == "unlinkat" || name == "rmdir") {
      first(TraceOp::Unlink);
    } else if (name == "rename" || name == "renameat" || name == "renameat2") {
      for (const auto& q : *quoted) hits.emplace_back(q, TraceOp::Rename);
    } else if (name == "symlink" || name == "symlinkat") {
      if (quoted->size() >= 2) hits.emplace_back((*quoted)[1], TraceOp::Symlink);
    } else {
      continue;  // syscall that cannot change managed files
    }
    if (hits.empty()) {
      ++out.skipped;
      continue;
    }
    for (auto& [path, op] : hits) {
      if (path.empty() || path.front() != '/') {
        ++out.skipped;
        continue;
      }
      out.events.push_back({std::move(path), op});
    }
  }
  return out;
}

TraceInference infer_from_trace(std::string_view trace, const std::filesystem::path& fs_root,
                                const TraceOptions& options) {
  std::error_code ec;
  if (!std::filesystem::is_directory(fs_root, ec) || ::access(fs_root.c_str(), R_OK | X_OK) != 0) {
    throw IoError("filesystem root " + fs_root.string() + " is not a readable directory");
  }
  TraceParse parsed = parse_trace(trace);
  TraceInference out;
  out.skipped_lines = parsed.skipped;
  std::set<std::string> seen;
  for (const auto& ev : parsed.events) {
    if (!seen.insert(ev.path).second) continue;
    std::filesystem::path probe = fs_root / std::filesystem::path(ev.path).relative_path();
    ResourceState r;
    r.id = "file:" + ev.path;
    struct stat st {};
    if (::lstat(probe.c_str(), &st) != 0) {
      r.attributes["state"] = "absent";
    } else {
      r.attributes["owner"] = user_name(st.st_uid);
      r.attributes["group"] = group_name(st.st_gid);
      if (S_ISLNK(st.st_mode)) {
        r.attributes["state"] = "link";
        r.attributes["target"] = std::filesystem::read_symlink(probe, ec).string();
      } else {
        char mode[8];
        std::snprintf(mode, sizeof mode, "%04o", static_cast<unsigned>(st.st_mode & 07777));
        r.attributes["mode"] = mode;
        if (S_ISDIR(st.st_mode)) {
          r.attributes["state"] = "directory";
        } else {
          r.attributes["state"] = "present";
          if (options.content_hash && S_ISREG(st.st_mode)) r.attributes["checksum"] = fnv1a64(probe);
        }
      }
    }
    out.state.resources.push_back(std::move(r));
  }
  return out;
}

}  // namespace infrafix
