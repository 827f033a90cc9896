#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "infrafix/ir.hpp"
#include "infrafix/state.hpp"

namespace infrafix {

// nullopt stands for the `unknown` symbol throughout evaluation.
using Value = std::optional<std::string>;

struct EvalEnv {
  std::map<std::string, Value, std::less<>> bindings;
  BranchPath branch_decisions;
};

// Literals render canonically; missing variables, and any operator with an
// unknown operand, evaluate to unknown. Equals/NotEquals yield "true"/"false".
Value eval_expression(const Expr& expr, const EvalEnv& env);

// Signed decimal integer as used by Sum operands.
std::optional<long long> parse_integer(std::string_view s);

// Canonical value of one attribute: the evaluated raw value passed through the
// script's value normalization rules.
Value evaluate_attribute(const IRScript& script, const Resource& resource, const Attribute& attr,
                         const EvalEnv& env);

enum class IdStatus { Known, Unknown, Anonymous };

struct ResourceIdentity {
  IdStatus status = IdStatus::Unknown;
  std::string id;  // `<type>:<identifier>` when Known
};

// Identifier from the type's identifying attribute, falling back to the title.
// Anonymous: an unsupported type with neither, which contributes no state.
ResourceIdentity resource_identity(const IRScript& script, const Resource& resource,
                                   const EvalEnv& env);

struct InferredState {
  SystemState state;
  BranchPath branch_decisions;  // every conditional reached, in execution order
};

inline constexpr std::size_t kDefaultBranchCap = 64;

// All states reachable by the script, in lexicographic order of branch
// decisions (then before else), deduplicated by state. Throws CapacityError
// when more than `branch_cap` paths exist and InferenceError for resources
// whose identifier is unknown.
std::vector<InferredState> infer_states(const IRScript& script,
                                        std::size_t branch_cap = kDefaultBranchCap);

enum class TraceOp { Write, Create, Chmod, Chown, Mkdir, Unlink, Rename, Symlink };

struct TraceEvent {
  std::string path;
  TraceOp op;
};

struct TraceParse {
  std::vector<TraceEvent> events;
  std::size_t skipped = 0;  // unparsable or irrelevant-but-malformed lines
};

// Simplified strace dialect: `[pid] name(args) = result`, first quoted string
// is the path (both paths for rename, the link path for symlink).
TraceParse parse_trace(std::string_view text);

struct TraceOptions {
  bool content_hash = false;  // adds checksum=fnv1a64:<hex> for regular files
};

struct TraceInference {
  SystemState state;
  std::size_t skipped_lines = 0;
};

// Probes every traced path under `fs_root` and reports file resources. Throws
// IoError when fs_root is not a readable directory.
TraceInference infer_from_trace(std::string_view trace, const std::filesystem::path& fs_root,
                                const TraceOptions& options = {});

}  // namespace infrafix
