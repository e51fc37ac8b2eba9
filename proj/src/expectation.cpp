#include "slexp/expectation.hpp"

#include "slexp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace slexp {

namespace {

// Backward step for one level: values[n] for every node n at `level` from the
// already-filled values of level+1. Serial and OpenMP variants write the same
// bits: per-node work is independent and each dot product runs in fixed order.
void sweep_level(const ScenarioTree& tree, const KernelSet& kernels,
                 std::vector<double>& values, std::vector<int>* argmax,
                 int level, bool sup, Exec exec) {
    const node_id begin = tree.level_offset(level);
    const node_id end = begin + tree.level_size(level);
    const int N = tree.branching();

    auto body = [&](node_id n) {
        const std::span<const double> children{
            values.data() + tree.child_begin(n), static_cast<std::size_t>(N)};
        const StepResult r = sup ? sup_step(tree, kernels, n, children)
                                 : inf_step(tree, kernels, n, children);
        values[static_cast<std::size_t>(n)] = r.value;
        if (argmax) (*argmax)[static_cast<std::size_t>(n)] = r.vertex;
    };

#ifdef _OPENMP
    if (exec == Exec::kParallel && end - begin >= 256) {
#pragma omp parallel for schedule(static)
        for (node_id n = begin; n < end; ++n) body(n);
        return;
    }
#else
    (void)exec;
#endif
    for (node_id n = begin; n < end; ++n) body(n);
}

ExpectationResult run_recursion(const ScenarioTree& tree,
                                const KernelSet& kernels, int level,
                                std::span<const double> values_at_level,
                                bool sup, Exec exec) {
    if (level < 0 || level > tree.horizon())
        throw std::invalid_argument("conditional expectation: level out of "
                                    "range");
    if (static_cast<std::int64_t>(values_at_level.size()) !=
        tree.level_size(level))
        throw std::invalid_argument(
            "conditional expectation: wrong number of level values");
    ExpectationResult out;
    out.values = AdaptedProcess(tree);
    out.optimal_kernel.assign(static_cast<std::size_t>(tree.interior_count()),
                              0);
    auto& v = out.values.values();
    std::copy(values_at_level.begin(), values_at_level.end(),
              v.begin() + tree.level_offset(level));
    // Constant extension below the data level: E_u(X) = X for u >= level.
    for (node_id n = tree.level_offset(level) + tree.level_size(level);
         n < tree.node_count(); ++n)
        v[static_cast<std::size_t>(n)] =
            v[static_cast<std::size_t>(tree.parent(n))];
    for (int t = level - 1; t >= 0; --t)
        sweep_level(tree, kernels, v, &out.optimal_kernel, t, sup, exec);
    return out;
}

} // namespace

ExpectationResult conditional_expectation(const ScenarioTree& tree,
                                          const KernelSet& kernels,
                                          const RandomVariable& X, Exec exec) {
    return run_recursion(tree, kernels, tree.horizon(), X.values(), true, exec);
}

ExpectationResult conditional_expectation_from_level(
    const ScenarioTree& tree, const KernelSet& kernels, int level,
    std::span<const double> values_at_level, Exec exec) {
    return run_recursion(tree, kernels, level, values_at_level, true, exec);
}

ExpectationResult conditional_lower_expectation(const ScenarioTree& tree,
                                                const KernelSet& kernels,
                                                const RandomVariable& X,
                                                Exec exec) {
    return run_recursion(tree, kernels, tree.horizon(), X.values(), false,
                         exec);
}

double expectation(const ScenarioTree& tree, const KernelSet& kernels,
                   const RandomVariable& X, Exec exec) {
    return conditional_expectation(tree, kernels, X, exec).root();
}

double lower_expectation(const ScenarioTree& tree, const KernelSet& kernels,
                         const RandomVariable& X, Exec exec) {
    RandomVariable neg = X;
    for (double& x : neg.values()) x = -x;
    return -expectation(tree, kernels, neg, exec);
}

std::vector<double> one_step_expectation(const ScenarioTree& tree,
                                         const KernelSet& kernels,
                                         const AdaptedProcess& X, Exec exec) {
    std::vector<double> scratch = X.values();
    std::vector<double> out(static_cast<std::size_t>(tree.interior_count()));
    for (int t = tree.horizon() - 1; t >= 0; --t) {
        // Each level reads the original X values of level t+1, so reset the
        // slice the previous sweep overwrote.
        std::copy(X.values().begin() + tree.level_offset(t + 1),
                  X.values().begin() + tree.level_offset(t + 1) +
                      tree.level_size(t + 1),
                  scratch.begin() + tree.level_offset(t + 1));
        sweep_level(tree, kernels, scratch, nullptr, t, true, exec);
        std::copy(scratch.begin() + tree.level_offset(t),
                  scratch.begin() + tree.level_offset(t) + tree.level_size(t),
                  out.begin() + tree.level_offset(t));
    }
    return out;
}

bool qs_leq(const RandomVariable& X, const RandomVariable& Y,
            const PolarSet& polar, double tol) {
    for (std::size_t p = 0; p < X.size(); ++p) {
        const auto id = static_cast<path_id>(p);
        if (polar.is_polar(id)) continue;
        if (X[id] > Y[id] + tol) return false;
    }
    return true;
}

bool qs_equal(const RandomVariable& X, const RandomVariable& Y,
              const PolarSet& polar, double tol) {
    return qs_leq(X, Y, polar, tol) && qs_leq(Y, X, polar, tol);
}

double ConvexPieces::operator()(double x) const {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < slopes.size(); ++i)
        best = std::max(best, slopes[i] * x + intercepts[i]);
    return best;
}

void ConvexPieces::validate() const {
    if (slopes.empty() || slopes.size() != intercepts.size())
        throw std::invalid_argument("convex pieces: malformed piece list");
    std::vector<double> sorted = slopes;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (!(sorted[i - 1] < sorted[i]))
            throw std::invalid_argument(
                "convex pieces: slopes must be strictly ordered");
}

namespace {

RandomVariable lift_level_values(const ScenarioTree& tree, int level,
                                 std::span<const double> values) {
    RandomVariable out(tree);
    for (path_id p = 0; p < tree.path_count(); ++p)
        out[p] = values[static_cast<std::size_t>(
            tree.node_on_path(p, level) - tree.level_offset(level))];
    return out;
}

struct AxiomContext {
    const ScenarioTree& tree;
    const KernelSet& kernels;
    PropertyReport& report;
    double tol;
    std::int64_t sample;

    void require(const char* property, node_id n, double lhs, double rhs,
                 bool ok) {
        ++report.checks;
        if (!ok)
            report.violations.push_back({property, sample, n, lhs, rhs});
    }
    void require_close(const char* property, node_id n, double lhs,
                       double rhs) {
        require(property, n, lhs, rhs, std::abs(lhs - rhs) <= tol);
    }
    void require_leq(const char* property, node_id n, double lhs, double rhs) {
        require(property, n, lhs, rhs, lhs <= rhs + tol);
    }
};

} // namespace

PropertyReport check_axioms(const ScenarioTree& tree, const KernelSet& kernels,
                            std::int64_t sample_count, std::uint64_t seed,
                            double tol) {
    if (sample_count < 1)
        throw std::invalid_argument("check_axioms: sample_count must be >= 1");
    PropertyReport report;
    Rng rng(seed);
    const int T = tree.horizon();

    for (std::int64_t s = 0; s < sample_count; ++s) {
        AxiomContext ctx{tree, kernels, report, tol, s};
        const RandomVariable X = random_variable(tree, rng);
        const RandomVariable Y = random_variable(tree, rng);
        const int t = static_cast<int>(rng.uniform_int(0, T));
        const std::int64_t level_n = tree.level_size(t);
        const node_id level0 = tree.level_offset(t);

        const ExpectationResult ex = conditional_expectation(tree, kernels, X);
        const ExpectationResult ey = conditional_expectation(tree, kernels, Y);

        // (i) monotonicity: X >= Z pointwise forces E_t(X) >= E_t(Z).
        RandomVariable Z = X;
        for (double& z : Z.values()) z -= rng.uniform(0.0, 1.0);
        const ExpectationResult ez = conditional_expectation(tree, kernels, Z);
        for (node_id n = 0; n < tree.node_count(); ++n)
            ctx.require_leq("monotonicity", n, ez.values[n], ex.values[n]);

        // (ii) tower: E_s(E_t(X)) = E_s(X) for s <= t.
        std::vector<double> xt(
            ex.values.values().begin() + level0,
            ex.values.values().begin() + level0 + level_n);
        const ExpectationResult etower = conditional_expectation(
            tree, kernels, lift_level_values(tree, t, xt));
        for (node_id n = 0; n < tree.level_offset(t) + level_n; ++n)
            ctx.require_close("tower", n, etower.values[n], ex.values[n]);

        // (iii) regularity: E_t(I_A X + I_Ac Y) = I_A E_t(X) + I_Ac E_t(Y).
        std::vector<std::uint8_t> event(static_cast<std::size_t>(level_n));
        for (auto& e : event) e = rng.uniform() < 0.5 ? 1 : 0;
        RandomVariable glued(tree);
        for (path_id p = 0; p < tree.path_count(); ++p) {
            const bool in_a = event[static_cast<std::size_t>(
                                  tree.node_on_path(p, t) - level0)] != 0;
            glued[p] = in_a ? X[p] : Y[p];
        }
        const ExpectationResult eglued =
            conditional_expectation(tree, kernels, glued);
        RandomVariable masked(tree);
        for (path_id p = 0; p < tree.path_count(); ++p)
            masked[p] = event[static_cast<std::size_t>(
                            tree.node_on_path(p, t) - level0)]
                            ? Y[p]
                            : 0.0;
        const ExpectationResult emasked =
            conditional_expectation(tree, kernels, masked);
        for (std::int64_t k = 0; k < level_n; ++k) {
            const node_id n = level0 + k;
            const bool in_a = event[static_cast<std::size_t>(k)] != 0;
            ctx.require_close("regularity", n, eglued.values[n],
                              in_a ? ex.values[n] : ey.values[n]);
            ctx.require_close("regularity", n, emasked.values[n],
                              in_a ? ey.values[n] : 0.0);
        }

        // (iv) constant preservation: E_u(W) = W for F_t-measurable W, u >= t.
        std::vector<double> wt(static_cast<std::size_t>(level_n));
        for (auto& w : wt) w = rng.uniform(-1.0, 1.0);
        const ExpectationResult ew = conditional_expectation(
            tree, kernels, lift_level_values(tree, t, wt));
        for (path_id p = 0; p < tree.path_count(); ++p) {
            const double w = wt[static_cast<std::size_t>(
                tree.node_on_path(p, t) - level0)];
            for (int u = t; u <= T; ++u)
                ctx.require_close("constant-preservation",
                                  tree.node_on_path(p, u),
                                  ew.values[tree.node_on_path(p, u)], w);
        }

        // (v) subadditivity.
        RandomVariable sum(tree);
        for (path_id p = 0; p < tree.path_count(); ++p) sum[p] = X[p] + Y[p];
        const ExpectationResult esum =
            conditional_expectation(tree, kernels, sum);
        for (node_id n = 0; n < tree.node_count(); ++n)
            ctx.require_leq("subadditivity", n, esum.values[n],
                            ex.values[n] + ey.values[n]);

        // (vi) positive homogeneity with an F_t-measurable weight, and the
        // signed variant through lambda = lambda+ - lambda-.
        std::vector<double> lambda(static_cast<std::size_t>(level_n));
        for (auto& l : lambda) l = rng.uniform(-2.0, 2.0);
        RandomVariable scaled(tree);
        RandomVariable negy(tree);
        for (path_id p = 0; p < tree.path_count(); ++p) {
            const double l = lambda[static_cast<std::size_t>(
                tree.node_on_path(p, t) - level0)];
            scaled[p] = l * Y[p];
            negy[p] = -Y[p];
        }
        const ExpectationResult escaled =
            conditional_expectation(tree, kernels, scaled);
        const ExpectationResult enegy =
            conditional_expectation(tree, kernels, negy);
        for (std::int64_t k = 0; k < level_n; ++k) {
            const node_id n = level0 + k;
            const double l = lambda[static_cast<std::size_t>(k)];
            const double want = std::max(l, 0.0) * ey.values[n] +
                                std::max(-l, 0.0) * enegy.values[n];
            ctx.require_close("positive-homogeneity", n, escaled.values[n],
                              want);
        }

        // (vii here: Lemma-style) translation invariance by an F_t value.
        std::vector<double> alpha(static_cast<std::size_t>(level_n));
        for (auto& a : alpha) a = rng.uniform(-1.0, 1.0);
        RandomVariable shifted(tree);
        for (path_id p = 0; p < tree.path_count(); ++p)
            shifted[p] = X[p] + alpha[static_cast<std::size_t>(
                                    tree.node_on_path(p, t) - level0)];
        const ExpectationResult eshift =
            conditional_expectation(tree, kernels, shifted);
        for (std::int64_t k = 0; k < level_n; ++k) {
            const node_id n = level0 + k;
            ctx.require_close("translation-invariance", n, eshift.values[n],
                              ex.values[n] +
                                  alpha[static_cast<std::size_t>(k)]);
        }
    }
    if (kernels.is_effectively_linear(tree)) report.note = "linear case";
    return report;
}

PropertyReport jensen_check(const ScenarioTree& tree, const KernelSet& kernels,
                            const ConvexPieces& phi, const RandomVariable& X,
                            double tol) {
    phi.validate();
    PropertyReport report;
    RandomVariable phix(tree);
    for (path_id p = 0; p < tree.path_count(); ++p) phix[p] = phi(X[p]);
    const ExpectationResult ex = conditional_expectation(tree, kernels, X);
    const ExpectationResult ephix =
        conditional_expectation(tree, kernels, phix);
    for (node_id n = 0; n < tree.node_count(); ++n) {
        ++report.checks;
        const double lhs = phi(ex.values[n]);
        const double rhs = ephix.values[n];
        if (lhs > rhs + tol)
            report.violations.push_back({"jensen", 0, n, lhs, rhs});
    }
    return report;
}

double oracle_expectation(const ScenarioTree& tree, const KernelSet& kernels,
                          const RandomVariable& X, std::int64_t budget) {
    return oracle_expectations(tree, kernels, {&X, 1}, budget)[0];
}

std::vector<double> oracle_expectations(const ScenarioTree& tree,
                                        const KernelSet& kernels,
                                        std::span<const RandomVariable> xs,
                                        std::int64_t budget) {
    MeasureEnumeration walk(tree, kernels, budget);
    std::vector<double> best(xs.size(),
                             -std::numeric_limits<double>::infinity());
    walk.for_each([&](std::span<const int>, std::span<const double> probs) {
        for (std::size_t j = 0; j < xs.size(); ++j) {
            double e = 0.0;
            for (std::size_t p = 0; p < probs.size(); ++p)
                e += probs[p] * xs[j][static_cast<path_id>(p)];
            best[j] = std::max(best[j], e);
        }
    });
    return best;
}

} // namespace slexp
