#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tamed/schemes.hpp"

namespace tamed::cli {

enum class Command { Simulate, Converge, Moments, Check };

std::string_view to_string(Command command);
Command parse_command(std::string_view text);

struct RunConfig {
  std::string problem;
  Command command = Command::Converge;
  std::optional<SchemeKind> scheme;            // default: Jump1D for jump problems, else Continuous
  std::optional<SchemeKind> reference_scheme;  // default: scheme
  std::vector<int> levels;
  int reference_level = 0;
  std::size_t paths = 10000;
  std::vector<double> q_list{2.0};
  double p = 2.0;
  std::uint64_t master_seed = 0;
  std::size_t worker_count = 0;  // 0 = auto
  std::string output_prefix = "tamed";
  std::optional<double> initial_value;  // scalar override of xi for 1-d problems
  double tolerance = 1e-9;              // check: commutativity tolerance

  SchemeKind resolved_scheme() const;
};

// Parses a flat key/value document:
//
//   # comment
//   problem = "example1"
//   command = "converge"
//   levels = [8..13]          # inclusive range, or a list [8, 9, 10]
//   reference_level = 16
//   seed = 42
//
//   [converge]                # keys applied only when command = converge
//   q_list = [1, 2, 3, 4, 5]
//
// Defaults: q_list = [2], paths = 10000, threads = 0. `command_override`
// replaces the document's command (the CLI subcommand). Throws ConfigError
// naming unknown keys, listing missing keys, or quoting the violated guard.
RunConfig parse_config(std::string_view text,
                       std::optional<Command> command_override = std::nullopt);

// Re-checks the numeric guards; parse_config calls this.
void validate(const RunConfig& config);

// Executes the command and writes its CSV outputs under output_prefix.
// Returns the exit status (0, or 3 for a failed check); errors propagate as
// exceptions. Human-readable reports go to `out`, progress to `log`.
int run(const RunConfig& config, std::ostream& out, std::ostream& log);

// Full command-line entry point:
//   tamed <simulate|converge|moments|check> --config <path>
//         [--seed <u64>] [--threads <n>] [--out <prefix>]
// Exit codes: 0 success, 1 validation error, 2 runtime or scheme
// compatibility error, 3 check violation.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tamed::cli
