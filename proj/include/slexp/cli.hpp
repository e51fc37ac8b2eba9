// Command implementations behind the slexp tool. They write to caller
// supplied streams and return process exit codes (0 ok, 1 numeric or theorem
// failure, 2 usage/parse failure), which keeps them testable.
#pragma once

#include "slexp/suites.hpp"

#include <iosfwd>
#include <string>

namespace slexp::cli {

struct GlobalOptions {
    int threads = 0;        // 0 = leave the OpenMP default
    double tolerance = kTol;
    std::string format = "table"; // table | csv
};

/// Applies --threads to the OpenMP runtime (no-op without OpenMP).
void apply_threads(int threads);

int cmd_eval(const std::string& spec_path, const std::string& expression,
             bool per_node, const GlobalOptions& options, std::ostream& out,
             std::ostream& err);

int cmd_verify(const std::string& spec_path, const std::string& suite,
               std::uint64_t seed, std::int64_t samples,
               const GlobalOptions& options, std::ostream& out,
               std::ostream& err);

int cmd_demo_trinomial(double epsilon, int horizon,
                       const GlobalOptions& options, std::ostream& out,
                       std::ostream& err);

/// Shortest float format with 12 significant digits.
std::string fmt12(double value);

} // namespace slexp::cli
