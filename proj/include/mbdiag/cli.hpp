#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mbdiag {

/// Parsed command line.
struct RunConfig {
  std::string command;       // enumerate | eval | group | verify | golden | render
  std::string model_path;
  std::string target = "heff";
  int order = 1;
  std::uint64_t seed = 1;
  int seed_sweep = 0;        // verify: number of seeded random models
  std::string out_path;      // eval/verify artifacts
  std::string render_format; // dot | text
  std::string fixture_path;  // render --fixture
  std::string fixtures_dir = "fixtures";
  int diagram_index = -1;    // render: restrict to one diagram
  double tolerance = 0.0;    // 0 = per-order default
};

/// Dispatches a parsed config. Exit status: 0 success, 1 verification
/// failure, 2 input error.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// argv front end (CLI11); returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace mbdiag
