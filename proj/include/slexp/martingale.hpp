// Martingale classification under the sublinear expectation, compensators,
// symmetry, transforms, stopping-time conditioning, optional stopping and
// crossing inequalities.
#pragma once

#include "slexp/expectation.hpp"

#include <string>
#include <vector>

namespace slexp {

enum class ProcessClass { kMartingale, kSubmartingale, kSupermartingale, kNone };

std::string to_string(ProcessClass c);

/**
 * One-step comparison of X_t with E_t(X_{t+1}) at every interior node; the
 * relation propagates to all earlier times through the tower property. A
 * process within tolerance of both the sub- and supermartingale relation
 * classifies as a martingale.
 */
ProcessClass classify(const ScenarioTree& tree, const KernelSet& kernels,
                      const AdaptedProcess& X, double tol = kTol,
                      Exec exec = Exec::kParallel);

/**
 * The unique predictable process H with H_0 = 0 and X - H a martingale,
 * built by the forward recursion H_{t+1} = E_t(X_{t+1}) - (X_t - H_t).
 */
PredictableProcess compensator(const ScenarioTree& tree,
                               const KernelSet& kernels,
                               const AdaptedProcess& X,
                               Exec exec = Exec::kParallel);

/// E_t(X) = -E_t(-X) at every node.
bool is_symmetric(const ScenarioTree& tree, const KernelSet& kernels,
                  const RandomVariable& X, double tol = kTol);

/// Every time slice X_t is a symmetric random variable.
bool is_symmetric(const ScenarioTree& tree, const KernelSet& kernels,
                  const AdaptedProcess& X, double tol = kTol);

/// One-step criterion equivalent to a symmetric martingale: at every interior
/// node both the sup- and inf-step of the children equal the node's value.
bool is_symmetric_martingale(const ScenarioTree& tree, const KernelSet& kernels,
                             const AdaptedProcess& X, double tol = kTol);

/**
 * Integral process Y_t = sum_{u<t} Z_u (X_{u+1} - X_u) with Y_0 = 0. Requires
 * X to be a symmetric martingale and returns a process that is again one
 * (both verified; throws std::invalid_argument / std::runtime_error).
 */
AdaptedProcess martingale_transform(const ScenarioTree& tree,
                                    const KernelSet& kernels,
                                    const AdaptedProcess& Z,
                                    const AdaptedProcess& X, double tol = kTol);

/// E_{S}(X) per path: the conditional expectation read off at the tagged node.
RandomVariable conditional_at_stopping_time(const ScenarioTree& tree,
                                            const KernelSet& kernels,
                                            const RandomVariable& X,
                                            const StoppingTime& S,
                                            Exec exec = Exec::kParallel);

struct OptionalStoppingReport {
    ProcessClass classification = ProcessClass::kNone;
    double max_violation = 0.0; // worst signed breach of the applicable bound
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
};

/**
 * Verifies the bounded optional stopping relation matching classify(X) at
 * every tagged node of S, quasi-surely: equality for martingales,
 * X_S <= E_S(X_R) for submartingales, >= for supermartingales.
 * Throws std::invalid_argument unless S <= R pathwise, or if X classifies
 * as none.
 */
OptionalStoppingReport optional_stopping_check(const ScenarioTree& tree,
                                               const KernelSet& kernels,
                                               const AdaptedProcess& X,
                                               const StoppingTime& S,
                                               const StoppingTime& R,
                                               double tol = kTol);

struct CrossingBound {
    std::string name; // e.g. "sub-upcrossing"
    double lhs = 0.0; // E(crossing count)
    double rhs = 0.0;
    bool ok = false;
};

struct CrossingReport {
    ProcessClass classification = ProcessClass::kNone;
    std::vector<CrossingBound> bounds;

    bool ok() const;
};

/**
 * Up/downcrossing inequalities on the stopped process: for submartingales
 *   E(M) <= (beta-alpha)^{-1} (E((X_S-alpha)^+) - (X_0-alpha)^+)
 *   E(D) <= -(beta-alpha)^{-1} E(-(X_S-beta)^+)
 * and the mirrored bounds with negative parts for supermartingales.
 * Martingales are checked against both sets. Crossing counts are evaluated
 * pathwise on X stopped at S.
 */
CrossingReport crossing_inequality_report(const ScenarioTree& tree,
                                          const KernelSet& kernels,
                                          const AdaptedProcess& X,
                                          const StoppingTime& S, double alpha,
                                          double beta, double tol = kTol);

} // namespace slexp
