// Deterministic random instances for the property suites: kernel sets with
// Dirichlet-style vertices, processes, stopping times, Phi maps and the
// martingale generators built on the expectation engine.
#pragma once

#include "slexp/expectation.hpp"
#include "slexp/representation.hpp"
#include "slexp/tree.hpp"

#include <cstdint>
#include <random>

namespace slexp {

/// mt19937_64 wrapper that derives doubles from raw draws only, so streams
/// are reproducible across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }
    /// Uniform in [0, 1).
    double uniform() { return (gen_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(
                        gen_() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    /// Derive an independent child seed.
    std::uint64_t fork() { return gen_() ^ 0x9e3779b97f4a7c15ull; }

  private:
    std::mt19937_64 gen_;
};

/// Terminal values uniform in [lo, hi].
RandomVariable random_variable(const ScenarioTree& tree, Rng& rng,
                               double lo = -1.0, double hi = 1.0);

/// Per-node values uniform in [lo, hi] (not adapted to anything specific).
AdaptedProcess random_adapted(const ScenarioTree& tree, Rng& rng,
                              double lo = -1.0, double hi = 1.0);

struct RandomKernelOptions {
    int max_vertices = 3;
    /// Cap on the product of vertex-list sizes (0 = no cap); keeps instances
    /// inside the enumeration-oracle budget.
    std::int64_t combo_cap = 0;
    /// Entry floor applied before normalization; > 0 gives full support.
    double min_entry = 0.0;
};

/// Per-node vertex lists with Dirichlet(1,...,1)-style draws.
KernelSet random_kernels(const ScenarioTree& tree, Rng& rng,
                         const RandomKernelOptions& opts = {});

/// Random path-covering antichain; stop_prob is the per-node stopping chance.
StoppingTime random_stopping_time(const ScenarioTree& tree, Rng& rng,
                                  double stop_prob = 0.35);

/// Random stopping time R with S <= R pathwise.
StoppingTime random_stopping_time_after(const ScenarioTree& tree,
                                        const StoppingTime& S, Rng& rng,
                                        double stop_prob = 0.35);

/// E-process of a random terminal variable (a martingale by the tower rule).
AdaptedProcess random_martingale(const ScenarioTree& tree,
                                 const KernelSet& kernels, Rng& rng);

/// Martingale plus a nondecreasing predictable drift.
AdaptedProcess random_submartingale(const ScenarioTree& tree,
                                    const KernelSet& kernels, Rng& rng);

/// Martingale minus a nondecreasing predictable drift.
AdaptedProcess random_supermartingale(const ScenarioTree& tree,
                                      const KernelSet& kernels, Rng& rng);

/**
 * Per-node Phi compatible with the kernel set: symmetric rows span(vertices)
 * orthogonal complements, asymmetric rows an orthonormal completion. The
 * shared symmetric row count is the minimum complement dimension across
 * nodes, optionally capped.
 */
PhiMap random_phi_map(const ScenarioTree& tree, const KernelSet& kernels,
                      int max_symmetric_rows = -1);

/// Running sum of random symmetric-row increments; the zero process when the
/// map has no symmetric rows.
AdaptedProcess random_symmetric_martingale(const ScenarioTree& tree,
                                           const PhiMap& phi, Rng& rng);

/// Strictly increasing random slopes with random intercepts.
ConvexPieces random_convex_pieces(Rng& rng, int min_pieces = 2,
                                  int max_pieces = 5);

} // namespace slexp
