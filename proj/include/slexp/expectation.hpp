// Conditional sublinear expectation by one-step backward recursion over the
// tree, quasi-sure comparisons, axiom property checks and the brute-force
// enumeration oracle.
#pragma once

#include "slexp/kernels.hpp"
#include "slexp/tree.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace slexp {

/// Which sweep implementation the engines run. The serial path is the
/// reference; the parallel path distributes each level's nodes across OpenMP
/// threads and produces bit-identical values.
enum class Exec { kSerial, kParallel };

/// Default absolute tolerance for all value comparisons.
inline constexpr double kTol = 1e-9;

/// Conditional expectation at every node plus the per-node maximizing vertex.
struct ExpectationResult {
    AdaptedProcess values;
    std::vector<int> optimal_kernel; // per interior node

    double root() const { return values[0]; }
};

/// Backward recursion from terminal data: level-T values are X, each interior
/// value is the sup_step over its children. The tower property holds by
/// construction.
ExpectationResult conditional_expectation(const ScenarioTree& tree,
                                          const KernelSet& kernels,
                                          const RandomVariable& X,
                                          Exec exec = Exec::kParallel);

/// Backward recursion from F_level-measurable data (one value per level node).
/// Nodes below `level` carry the constant extension of their ancestor's value.
ExpectationResult conditional_expectation_from_level(
    const ScenarioTree& tree, const KernelSet& kernels, int level,
    std::span<const double> values_at_level, Exec exec = Exec::kParallel);

/// Lower counterpart: inf_step recursion; exactly -E(-X) per step.
ExpectationResult conditional_lower_expectation(const ScenarioTree& tree,
                                                const KernelSet& kernels,
                                                const RandomVariable& X,
                                                Exec exec = Exec::kParallel);

/// Upper expectation E(X) = root of the backward recursion.
double expectation(const ScenarioTree& tree, const KernelSet& kernels,
                   const RandomVariable& X, Exec exec = Exec::kParallel);

/// Lower expectation -E(-X).
double lower_expectation(const ScenarioTree& tree, const KernelSet& kernels,
                         const RandomVariable& X, Exec exec = Exec::kParallel);

/// One-step upper expectation of X_{t+1} evaluated at every interior node.
/// Input is a full adapted process; output is indexed by interior node.
std::vector<double> one_step_expectation(const ScenarioTree& tree,
                                         const KernelSet& kernels,
                                         const AdaptedProcess& X,
                                         Exec exec = Exec::kParallel);

/// X <= Y outside the polar set, within absolute tolerance.
bool qs_leq(const RandomVariable& X, const RandomVariable& Y,
            const PolarSet& polar, double tol = kTol);
/// X == Y outside the polar set, within absolute tolerance.
bool qs_equal(const RandomVariable& X, const RandomVariable& Y,
              const PolarSet& polar, double tol = kTol);

/// Witness of one failed property check.
struct Violation {
    std::string property;
    std::int64_t sample = 0;
    node_id node = 0;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct PropertyReport {
    std::vector<Violation> violations;
    std::int64_t checks = 0;
    std::string note;

    bool ok() const { return violations.empty(); }
};

/**
 * Randomized verification of the defining properties of the conditional
 * sublinear expectation: monotonicity, tower, regularity on F_t-events,
 * constant preservation, subadditivity, positive homogeneity (with
 * F_t-measurable weights), and translation invariance. Violations beyond
 * `tol` are reported with witnesses.
 */
PropertyReport check_axioms(const ScenarioTree& tree, const KernelSet& kernels,
                            std::int64_t sample_count, std::uint64_t seed = 42,
                            double tol = kTol);

/// Convex piecewise-linear function given as max of affine pieces.
struct ConvexPieces {
    std::vector<double> slopes;
    std::vector<double> intercepts;

    double operator()(double x) const;
    /// Throws unless sorting by slope yields a strictly increasing slope list.
    void validate() const;
};

/// Verifies E_t(phi(X)) >= phi(E_t(X)) at every node.
PropertyReport jensen_check(const ScenarioTree& tree, const KernelSet& kernels,
                            const ConvexPieces& phi, const RandomVariable& X,
                            double tol = kTol);

/// Brute force: max over every enumerated measure of the linear expectation.
/// Independent of the backward recursion; used as its oracle.
double oracle_expectation(const ScenarioTree& tree, const KernelSet& kernels,
                          const RandomVariable& X,
                          std::int64_t budget = kDefaultOracleBudget);

/// Oracle values for several variables in one enumeration pass.
std::vector<double> oracle_expectations(const ScenarioTree& tree,
                                        const KernelSet& kernels,
                                        std::span<const RandomVariable> xs,
                                        std::int64_t budget = kDefaultOracleBudget);

} // namespace slexp
