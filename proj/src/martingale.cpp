#include "slexp/martingale.hpp"

#include <cmath>
#include <stdexcept>

namespace slexp {

std::string to_string(ProcessClass c) {
    switch (c) {
    case ProcessClass::kMartingale: return "martingale";
    case ProcessClass::kSubmartingale: return "submartingale";
    case ProcessClass::kSupermartingale: return "supermartingale";
    default: return "none";
    }
}

ProcessClass classify(const ScenarioTree& tree, const KernelSet& kernels,
                      const AdaptedProcess& X, double tol, Exec exec) {
    const std::vector<double> one_step =
        one_step_expectation(tree, kernels, X, exec);
    bool sub = true;
    bool super = true;
    for (node_id n = 0; n < tree.interior_count(); ++n) {
        const double e = one_step[static_cast<std::size_t>(n)];
        if (e < X[n] - tol) sub = false;
        if (e > X[n] + tol) super = false;
    }
    if (sub && super) return ProcessClass::kMartingale;
    if (sub) return ProcessClass::kSubmartingale;
    if (super) return ProcessClass::kSupermartingale;
    return ProcessClass::kNone;
}

PredictableProcess compensator(const ScenarioTree& tree,
                               const KernelSet& kernels,
                               const AdaptedProcess& X, Exec exec) {
    const std::vector<double> one_step =
        one_step_expectation(tree, kernels, X, exec);
    PredictableProcess hat(tree);
    // H_{t+1} = E_t(X_{t+1}) - (X_t - H_t), H_0 = 0; forward in node order,
    // parents precede children.
    for (node_id n = 0; n < tree.interior_count(); ++n)
        hat.at_step(n) = one_step[static_cast<std::size_t>(n)] -
                         (X[n] - hat.at_node(tree, n));
    return hat;
}

namespace {

bool symmetric_from_level(const ScenarioTree& tree, const KernelSet& kernels,
                          int level, std::span<const double> values,
                          double tol) {
    const ExpectationResult upper =
        conditional_expectation_from_level(tree, kernels, level, values);
    std::vector<double> neg(values.begin(), values.end());
    for (double& x : neg) x = -x;
    const ExpectationResult lower =
        conditional_expectation_from_level(tree, kernels, level, neg);
    for (node_id n = 0; n < tree.level_offset(level) + tree.level_size(level);
         ++n)
        if (std::abs(upper.values[n] + lower.values[n]) > tol) return false;
    return true;
}

} // namespace

bool is_symmetric(const ScenarioTree& tree, const KernelSet& kernels,
                  const RandomVariable& X, double tol) {
    return symmetric_from_level(tree, kernels, tree.horizon(), X.values(),
                                tol);
}

bool is_symmetric(const ScenarioTree& tree, const KernelSet& kernels,
                  const AdaptedProcess& X, double tol) {
    for (int t = 0; t <= tree.horizon(); ++t) {
        const std::span<const double> slice{
            X.values().data() + tree.level_offset(t),
            static_cast<std::size_t>(tree.level_size(t))};
        if (!symmetric_from_level(tree, kernels, t, slice, tol)) return false;
    }
    return true;
}

bool is_symmetric_martingale(const ScenarioTree& tree,
                             const KernelSet& kernels, const AdaptedProcess& X,
                             double tol) {
    const int N = tree.branching();
    for (node_id n = 0; n < tree.interior_count(); ++n) {
        const std::span<const double> children{
            X.values().data() + tree.child_begin(n),
            static_cast<std::size_t>(N)};
        if (std::abs(sup_step(tree, kernels, n, children).value - X[n]) > tol)
            return false;
        if (std::abs(inf_step(tree, kernels, n, children).value - X[n]) > tol)
            return false;
    }
    return true;
}

AdaptedProcess martingale_transform(const ScenarioTree& tree,
                                    const KernelSet& kernels,
                                    const AdaptedProcess& Z,
                                    const AdaptedProcess& X, double tol) {
    if (!is_symmetric_martingale(tree, kernels, X, tol))
        throw std::invalid_argument(
            "martingale transform: X is not a symmetric martingale");
    AdaptedProcess Y(tree);
    for (node_id n = 0; n < tree.interior_count(); ++n) {
        const node_id c0 = tree.child_begin(n);
        for (int i = 0; i < tree.branching(); ++i)
            Y[c0 + i] = Y[n] + Z[n] * (X[c0 + i] - X[n]);
    }
    if (!is_symmetric_martingale(tree, kernels, Y, tol))
        throw std::runtime_error(
            "martingale transform: integral failed the symmetric-martingale "
            "check (inconsistent kernels)");
    return Y;
}

RandomVariable conditional_at_stopping_time(const ScenarioTree& tree,
                                            const KernelSet& kernels,
                                            const RandomVariable& X,
                                            const StoppingTime& S, Exec exec) {
    const ExpectationResult e = conditional_expectation(tree, kernels, X, exec);
    RandomVariable out(tree);
    for (path_id p = 0; p < tree.path_count(); ++p)
        out[p] = e.values[S.node_on_path(tree, p)];
    return out;
}

OptionalStoppingReport optional_stopping_check(const ScenarioTree& tree,
                                               const KernelSet& kernels,
                                               const AdaptedProcess& X,
                                               const StoppingTime& S,
                                               const StoppingTime& R,
                                               double tol) {
    if (!pathwise_leq(tree, S, R))
        throw std::invalid_argument("optional stopping: need S <= R pathwise");
    OptionalStoppingReport report;
    report.classification = classify(tree, kernels, X, tol);
    if (report.classification == ProcessClass::kNone)
        throw std::invalid_argument(
            "optional stopping: X is not a sub- or supermartingale");

    // X_R as a random variable, then E_S(X_R) read at the tagged nodes.
    RandomVariable xr(tree);
    for (path_id p = 0; p < tree.path_count(); ++p)
        xr[p] = X[R.node_on_path(tree, p)];
    const RandomVariable es =
        conditional_at_stopping_time(tree, kernels, xr, S);
    const PolarSet polar = polar_paths(tree, kernels);

    for (path_id p = 0; p < tree.path_count(); ++p) {
        if (polar.is_polar(p)) continue;
        const node_id n = S.node_on_path(tree, p);
        const double xs = X[n];
        const double cond = es[p];
        double breach = 0.0;
        switch (report.classification) {
        case ProcessClass::kMartingale: breach = std::abs(xs - cond); break;
        case ProcessClass::kSubmartingale: breach = xs - cond; break;
        default: breach = cond - xs; break;
        }
        report.max_violation = std::max(report.max_violation, breach);
        if (breach > tol)
            report.violations.push_back(
                {"optional-stopping", 0, n, xs, cond});
    }
    return report;
}

bool CrossingReport::ok() const {
    for (const auto& b : bounds)
        if (!b.ok) return false;
    return true;
}

CrossingReport crossing_inequality_report(const ScenarioTree& tree,
                                          const KernelSet& kernels,
                                          const AdaptedProcess& X,
                                          const StoppingTime& S, double alpha,
                                          double beta, double tol) {
    if (!(alpha < beta))
        throw std::invalid_argument("crossing report: need alpha < beta");
    CrossingReport report;
    report.classification = classify(tree, kernels, X, tol);
    if (report.classification == ProcessClass::kNone)
        throw std::invalid_argument(
            "crossing report: X is not a sub- or supermartingale");

    const AdaptedProcess stopped = stopped_process(tree, X, S);
    RandomVariable up(tree);
    RandomVariable down(tree);
    std::vector<double> seq(static_cast<std::size_t>(tree.horizon()) + 1);
    for (path_id p = 0; p < tree.path_count(); ++p) {
        for (int t = 0; t <= tree.horizon(); ++t)
            seq[static_cast<std::size_t>(t)] = stopped[tree.node_on_path(p, t)];
        const CrossingCounts c = count_crossings(seq, alpha, beta);
        up[p] = c.upcrossings;
        down[p] = c.downcrossings;
    }
    const double e_up = expectation(tree, kernels, up);
    const double e_down = expectation(tree, kernels, down);

    RandomVariable xs(tree);
    for (path_id p = 0; p < tree.path_count(); ++p)
        xs[p] = X[S.node_on_path(tree, p)];
    const double x0 = X[0];
    const double width = beta - alpha;

    auto transformed = [&](double shift, bool positive_part) {
        RandomVariable out(tree);
        for (path_id p = 0; p < tree.path_count(); ++p) {
            const double d = xs[p] - shift;
            out[p] = positive_part ? std::max(d, 0.0) : std::max(-d, 0.0);
        }
        return out;
    };
    auto add = [&](const char* name, double lhs, double rhs) {
        report.bounds.push_back({name, lhs, rhs, lhs <= rhs + tol});
    };

    const bool sub = report.classification != ProcessClass::kSupermartingale;
    const bool super = report.classification != ProcessClass::kSubmartingale;
    if (sub) {
        // E(M) <= (E((X_S - alpha)^+) - (X_0 - alpha)^+) / (beta - alpha)
        const double plus_alpha =
            expectation(tree, kernels, transformed(alpha, true));
        add("sub-upcrossing", e_up,
            (plus_alpha - std::max(x0 - alpha, 0.0)) / width);
        // E(D) <= -E(-(X_S - beta)^+) / (beta - alpha)
        RandomVariable neg_plus_beta = transformed(beta, true);
        for (double& v : neg_plus_beta.values()) v = -v;
        add("sub-downcrossing", e_down,
            -expectation(tree, kernels, neg_plus_beta) / width);
    }
    if (super) {
        // E(M) <= E((X_S - alpha)^-) / (beta - alpha)
        add("super-upcrossing", e_up,
            expectation(tree, kernels, transformed(alpha, false)) / width);
        // E(D) <= (E((X_S - beta)^-) - (X_0 - beta)^-) / (beta - alpha)
        const double minus_beta =
            expectation(tree, kernels, transformed(beta, false));
        add("super-downcrossing", e_down,
            (minus_beta - std::max(beta - x0, 0.0)) / width);
    }
    return report;
}

} // namespace slexp
