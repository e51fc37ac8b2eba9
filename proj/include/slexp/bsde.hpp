// Backward stochastic difference equations under the sublinear expectation:
// backward solver, comparison-theorem harness, and the correspondence
// between absolutely continuous expectations and sublinear drivers.
#pragma once

#include "slexp/martingale.hpp"
#include "slexp/representation.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace slexp {

/// Generator of a BSDE. Evaluation must be pure: node-level sweeps may call
/// it concurrently.
struct Driver {
    using Fn = std::function<double(node_id n, int t, double y,
                                    std::span<const double> z,
                                    std::span<const double> z_prime)>;

    Fn f;
    std::string name;
    bool claims_monotone = false; // y -> y - F strictly increasing
    bool claims_sublinear = false;
    bool claims_positively_homogeneous = false;

    double operator()(node_id n, int t, double y, std::span<const double> z,
                      std::span<const double> z_prime) const {
        return f(n, t, y, z, z_prime);
    }

    static Driver zero();
    /// F(t, y, z, z') = -rate * y (per-period discounting).
    static Driver linear_discount(double rate);
};

struct SolverOptions {
    double root_tol = 1e-12;  // residual target of the scalar inverse
    int max_iterations = 200; // per root find, including bracket expansion
    bool use_newton = false;  // opt-in acceleration; bisection is the fallback
    double bracket_step = 0.0; // initial bracket half-width (0 = automatic)
    double tol = kTol;        // assertion tolerance for reconstruction
    Exec exec = Exec::kParallel;
};

struct BsdeSolution {
    AdaptedProcess y;
    std::vector<double> z;       // interior_count * M, flat
    std::vector<double> z_prime; // interior_count * (N-M-1), flat
    std::vector<int> root_iterations; // per interior node
    int m = 0;
    int p = 0;

    std::span<const double> z_at(node_id n) const {
        return {z.data() + static_cast<std::size_t>(n) * m,
                static_cast<std::size_t>(m)};
    }
    std::span<const double> z_prime_at(node_id n) const {
        return {z_prime.data() + static_cast<std::size_t>(n) * p,
                static_cast<std::size_t>(p)};
    }
};

/**
 * Solves Y_{t+1} = Y_t - F(t, Y_t, Z_t, Z'_t) + Z_t dM + Z'_t dN - G_t(Z'_t)
 * backward from Y_T = Q. Each step takes the one-step upper expectation,
 * reads (Z, Z') off the increment's Phi coordinates, and inverts
 * y -> y - F by bracketed bisection (geometric bracket expansion from the
 * expectation, residual <= root_tol). The driver must declare monotonicity,
 * which is spot-checked on a grid at every node.
 */
BsdeSolution solve_bsde(const ScenarioTree& tree, const KernelSet& kernels,
                        const PhiMap& phi, const Driver& driver,
                        const RandomVariable& terminal,
                        const SolverOptions& options = {});

/// Max absolute residual of the one-step equation over all edges.
double bsde_residual(const ScenarioTree& tree, const KernelSet& kernels,
                     const PhiMap& phi, const Driver& driver,
                     const BsdeSolution& solution);

/// Componentwise system: K independent scalar equations share the tree and
/// map (a diagonal generator); coupled y-maps are not supported.
std::vector<BsdeSolution> solve_bsde_system(
    const ScenarioTree& tree, const KernelSet& kernels, const PhiMap& phi,
    std::span<const Driver> drivers, std::span<const RandomVariable> terminals,
    const SolverOptions& options = {});

struct ComparisonReport {
    bool terminal_ok = false;     // (i)  Q >= Q_bar q.s.
    bool driver_ok = false;       // (ii) F >= F_bar at realized arguments
    bool monotone_ok = false;     // (iii) grid check of y -> y - F
    bool separation_ok = false;   // (iv) strict margin at realized arguments
    bool hypotheses_ok() const {
        return terminal_ok && driver_ok && monotone_ok && separation_ok;
    }
    bool conclusion_ok = false;   // Y >= Y_bar q.s. at every node
    bool strict_ok = false;       // Y_t = Y_bar_t on A forces Q = Q_bar on A
    double min_margin = 0.0;      // worst (iv) margin over differing nodes
    std::vector<Violation> violations;
};

/**
 * Solves both equations and verifies the comparison theorem numerically:
 * hypothesis failures are recorded in the report; a violated conclusion
 * while all hypotheses hold throws std::runtime_error (theorem breach).
 */
ComparisonReport comparison_check(const ScenarioTree& tree,
                                  const KernelSet& kernels, const PhiMap& phi,
                                  const Driver& driver,
                                  const Driver& driver_bar,
                                  const RandomVariable& terminal,
                                  const RandomVariable& terminal_bar,
                                  const SolverOptions& options = {});

/**
 * The driver representing the expectation over `kernels_bar` inside BSDEs
 * under `kernels_base`:
 *   F(t, z, z') = E_bar_t(z dM + z' dN) - G_t(z').
 * Requires every bar-polar path to be base-polar. The result is
 * y-independent, sublinear and positively homogeneous.
 */
Driver driver_from_expectation(const ScenarioTree& tree,
                               const KernelSet& kernels_base,
                               const KernelSet& kernels_bar, const PhiMap& phi);

struct RoundtripReport {
    double max_deviation = 0.0;
    bool ok = false;
    std::vector<Violation> violations;
};

/// Solves the base BSDE with the derived driver and terminal Q and checks
/// the solution equals the bar conditional expectation at every node.
RoundtripReport roundtrip_check(const ScenarioTree& tree,
                                const KernelSet& kernels_base,
                                const KernelSet& kernels_bar,
                                const PhiMap& phi, const RandomVariable& Q,
                                double tol = 1e-8);

struct DriverSamplingReport {
    std::int64_t checks = 0;
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// Samples sublinearity, positive homogeneity and the comparison-theorem
/// separation condition (iv) of a driver at random arguments.
DriverSamplingReport sample_driver_properties(const ScenarioTree& tree,
                                              const KernelSet& kernels,
                                              const PhiMap& phi,
                                              const Driver& driver,
                                              std::int64_t samples,
                                              std::uint64_t seed,
                                              double tol = kTol);

} // namespace slexp
