// JSON problem specifications for the CLI: tree geometry, kernel sets,
// Phi maps, named variables (terminal arrays or expressions over the
// built-in processes) and stopping times.
#pragma once

#include "slexp/bsde.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace slexp {

/// Parse/usage failures; the CLI maps these to exit code 2.
class SpecError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct ProblemSpec {
    ScenarioTree tree;
    KernelSet kernels;
    std::optional<PhiMap> phi;
    std::map<std::string, std::string> expressions;      // name -> expression
    std::map<std::string, RandomVariable> arrays;        // name -> terminal data
    std::map<std::string, StoppingTime> stopping_times;

    ProblemSpec(ScenarioTree t, KernelSet k)
        : tree(std::move(t)), kernels(std::move(k)) {}

    /// The Phi map, defaulting to the trinomial one on 3-ary trees.
    const PhiMap& phi_or_default() const;

  private:
    mutable std::optional<PhiMap> default_phi_;
};

ProblemSpec parse_problem_spec(const std::string& json_text);
ProblemSpec load_problem_spec(const std::string& path);

/**
 * Evaluate an expression over named variables and built-ins to a terminal
 * random variable. Built-ins on trinomial trees: B / B<k> (random walk at
 * the horizon / at time k) and QV / QV<k> (its quadratic variation).
 * Grammar: + - *, unary minus, parentheses, pos(x), neg(x), abs(x),
 * min(x,y), max(x,y). Throws SpecError on unknown names or syntax errors.
 */
RandomVariable evaluate_expression(const ProblemSpec& spec,
                                   const std::string& expression);

} // namespace slexp
