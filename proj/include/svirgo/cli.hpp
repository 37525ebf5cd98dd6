#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace svirgo {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kInvalid = 2;
inline constexpr int kIo = 3;
inline constexpr int kOracleMismatch = 4;
}  // namespace exit_code

struct CommonArgs {
  std::string scenario;
  std::vector<std::string> overrides;  // --set key=value
  std::optional<std::uint64_t> seed;
};

// Writes <out_dir>/trace.jsonl and <out_dir>/metrics.csv.
int cmd_run(const CommonArgs& args, const std::string& out_dir, std::ostream& out,
            std::ostream& err);

// One row per value in <out_dir>/sweep.csv, aggregated over `trials` runs
// whose seeds derive from the base seed and the trial index.
int cmd_sweep(const CommonArgs& args, const std::string& param,
              const std::vector<std::string>& values, int trials, const std::string& out_dir,
              std::ostream& out, std::ostream& err);

// Compares a run (or a recorded trace) with the static reachability oracle.
int cmd_oracle_check(const CommonArgs& args, const std::optional<std::string>& trace_path,
                     std::ostream& out, std::ostream& err);

int cmd_validate(const CommonArgs& args, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace svirgo
