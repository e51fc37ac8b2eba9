// Named randomized verification suites behind the CLI `verify` command.
#pragma once

#include "slexp/spec_io.hpp"

#include <string>
#include <vector>

namespace slexp {

struct SuiteResult {
    std::string suite;
    std::int64_t checks = 0;
    std::vector<Violation> witnesses;
    std::string note;

    bool ok() const { return witnesses.empty(); }
};

/// Valid suite names: axioms, martingale, crossings, bsde, roundtrip.
std::vector<std::string> suite_names();

/// Runs one suite on the problem's tree and kernels with a fixed seed.
/// Throws SpecError on an unknown suite name.
SuiteResult run_suite(const std::string& suite, const ProblemSpec& spec,
                      std::uint64_t seed, std::int64_t samples,
                      double tol = kTol);

} // namespace slexp
