#include "slexp/suites.hpp"

#include "slexp/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace slexp {

namespace {

void add_witness(SuiteResult& result, std::string property,
                 std::int64_t sample, node_id node, double lhs, double rhs) {
    result.witnesses.push_back(
        {std::move(property), sample, node, lhs, rhs});
}

void merge(SuiteResult& result, const PropertyReport& report,
           const std::string& prefix) {
    result.checks += report.checks;
    for (const auto& v : report.violations)
        result.witnesses.push_back(
            {prefix + v.property, v.sample, v.node, v.lhs, v.rhs});
}

SuiteResult run_axioms(const ProblemSpec& spec, std::uint64_t seed,
                       std::int64_t samples, double tol) {
    SuiteResult result{"axioms", 0, {}, ""};
    const PropertyReport axioms =
        check_axioms(spec.tree, spec.kernels, samples, seed, tol);
    merge(result, axioms, "");
    result.note = axioms.note;

    Rng rng(seed ^ 0x6a5d7bull);
    const std::int64_t jensen_samples = std::max<std::int64_t>(samples / 4, 1);
    for (std::int64_t s = 0; s < jensen_samples; ++s) {
        const ConvexPieces phi = random_convex_pieces(rng);
        const RandomVariable x = random_variable(spec.tree, rng);
        merge(result, jensen_check(spec.tree, spec.kernels, phi, x, tol), "");
    }
    return result;
}

SuiteResult run_martingale(const ProblemSpec& spec, std::uint64_t seed,
                           std::int64_t samples, double tol) {
    SuiteResult result{"martingale", 0, {}, ""};
    const ScenarioTree& tree = spec.tree;
    const KernelSet& kernels = spec.kernels;
    Rng rng(seed);

    for (std::int64_t s = 0; s < samples; ++s) {
        // Doob decomposition of a random process.
        const AdaptedProcess x = random_adapted(tree, rng);
        const PredictableProcess hat = compensator(tree, kernels, x);
        AdaptedProcess mart(tree);
        for (node_id n = 0; n < tree.node_count(); ++n)
            mart[n] = x[n] - hat.at_node(tree, n);
        ++result.checks;
        if (classify(tree, kernels, mart, tol) != ProcessClass::kMartingale)
            add_witness(result, "doob-martingale-part", s, 0, 0, 0);
        for (node_id n = 0; n < tree.node_count(); ++n) {
            const double rebuilt = mart[n] + hat.at_node(tree, n);
            ++result.checks;
            if (std::abs(rebuilt - x[n]) > 1e-12)
                add_witness(result, "doob-reconstruction", s, n, rebuilt,
                            x[n]);
        }

        // Uniqueness: a nonzero predictable perturbation breaks it.
        PredictableProcess bumped = hat;
        const node_id bump_node = static_cast<node_id>(
            rng.uniform_int(0, tree.interior_count() - 1));
        bumped.at_step(bump_node) += rng.uniform(0.5, 1.5);
        AdaptedProcess martb(tree);
        for (node_id n = 0; n < tree.node_count(); ++n)
            martb[n] = x[n] - bumped.at_node(tree, n);
        ++result.checks;
        if (classify(tree, kernels, martb, tol) == ProcessClass::kMartingale)
            add_witness(result, "doob-uniqueness", s, bump_node, 0, 0);

        // Classification <-> compensator monotonicity, on drifted instances.
        const AdaptedProcess sub = random_submartingale(tree, kernels, rng);
        const AdaptedProcess super = random_supermartingale(tree, kernels, rng);
        const ProcessClass csub = classify(tree, kernels, sub, tol);
        const ProcessClass csuper = classify(tree, kernels, super, tol);
        ++result.checks;
        if (csub != ProcessClass::kSubmartingale &&
            csub != ProcessClass::kMartingale)
            add_witness(result, "classify-submartingale", s, 0, 0, 0);
        ++result.checks;
        if (csuper != ProcessClass::kSupermartingale &&
            csuper != ProcessClass::kMartingale)
            add_witness(result, "classify-supermartingale", s, 0, 0, 0);
        const PredictableProcess hsub = compensator(tree, kernels, sub);
        for (node_id n = 0; n < tree.interior_count(); ++n) {
            ++result.checks;
            if (hsub.at_step(n) < hsub.at_node(tree, n) - tol)
                add_witness(result, "compensator-monotone", s, n,
                            hsub.at_step(n), hsub.at_node(tree, n));
        }

        // Negated supermartingales are submartingales.
        AdaptedProcess negsuper(tree);
        for (node_id n = 0; n < tree.node_count(); ++n)
            negsuper[n] = -super[n];
        const ProcessClass cneg = classify(tree, kernels, negsuper, tol);
        ++result.checks;
        if (cneg != ProcessClass::kSubmartingale &&
            cneg != ProcessClass::kMartingale)
            add_witness(result, "negated-supermartingale", s, 0, 0, 0);

        // Optional stopping at a random pair S <= R.
        const AdaptedProcess mart2 = random_martingale(tree, kernels, rng);
        const StoppingTime S = random_stopping_time(tree, rng);
        const StoppingTime R = random_stopping_time_after(tree, S, rng);
        const OptionalStoppingReport stopping =
            optional_stopping_check(tree, kernels, mart2, S, R, tol);
        ++result.checks;
        if (!stopping.ok())
            add_witness(result, "optional-stopping", s, 0,
                        stopping.max_violation, tol);

        // Stopping-time conditioning is consistent with E.
        const RandomVariable q = random_variable(tree, rng);
        const RandomVariable at_s =
            conditional_at_stopping_time(tree, kernels, q, S);
        ++result.checks;
        const double outer = expectation(tree, kernels, at_s);
        const double direct = expectation(tree, kernels, q);
        if (std::abs(outer - direct) > tol)
            add_witness(result, "stopping-consistency", s, 0, outer, direct);
    }

    // Symmetric variables form a vector space; transforms stay symmetric
    // martingales.
    const PhiMap phi = spec.phi ? *spec.phi : random_phi_map(tree, kernels);
    if (phi.symmetric_rows() > 0) {
        phi.validate_symmetric_block(tree, kernels, tol);
        const std::int64_t rounds = std::max<std::int64_t>(samples / 4, 1);
        for (std::int64_t s = 0; s < rounds; ++s) {
            const AdaptedProcess sym1 =
                random_symmetric_martingale(tree, phi, rng);
            const AdaptedProcess sym2 =
                random_symmetric_martingale(tree, phi, rng);
            const double a = rng.uniform(-2.0, 2.0);
            const double b = rng.uniform(-2.0, 2.0);
            AdaptedProcess combo(tree);
            for (node_id n = 0; n < tree.node_count(); ++n)
                combo[n] = a * sym1[n] + b * sym2[n];
            ++result.checks;
            if (!is_symmetric_martingale(tree, kernels, combo, tol))
                add_witness(result, "symmetric-vector-space", s, 0, a, b);

            const AdaptedProcess z = random_adapted(tree, rng);
            ++result.checks;
            try {
                martingale_transform(tree, kernels, z, sym1, tol);
            } catch (const std::exception&) {
                add_witness(result, "martingale-transform", s, 0, 0, 0);
            }

            // Martingale + symmetric martingale stays a martingale.
            const AdaptedProcess mart = random_martingale(tree, kernels, rng);
            AdaptedProcess sum(tree);
            for (node_id n = 0; n < tree.node_count(); ++n)
                sum[n] = mart[n] + sym1[n];
            ++result.checks;
            if (classify(tree, kernels, sum, tol) != ProcessClass::kMartingale)
                add_witness(result, "martingale-plus-symmetric", s, 0, 0, 0);
        }
    } else {
        result.note = "no symmetric block available";
    }
    return result;
}

SuiteResult run_crossings(const ProblemSpec& spec, std::uint64_t seed,
                          std::int64_t samples, double tol) {
    SuiteResult result{"crossings", 0, {}, ""};
    const ScenarioTree& tree = spec.tree;
    const KernelSet& kernels = spec.kernels;
    // The supermartingale bounds hold under every kernel selection at once;
    // the submartingale pair is only a theorem in the linear (singleton)
    // case, so under genuine ambiguity its breaches go to the note only.
    const bool linear = kernels.is_effectively_linear(tree);
    std::int64_t informational = 0;
    Rng rng(seed);
    for (std::int64_t s = 0; s < samples; ++s) {
        const AdaptedProcess x = s % 2 == 0
                                     ? random_submartingale(tree, kernels, rng)
                                     : random_supermartingale(tree, kernels, rng);
        const StoppingTime S = random_stopping_time(tree, rng);
        double lo = x[0], hi = x[0];
        for (node_id n = 0; n < tree.node_count(); ++n) {
            lo = std::min(lo, x[n]);
            hi = std::max(hi, x[n]);
        }
        const double alpha = rng.uniform(lo, hi);
        const double beta = alpha + rng.uniform(0.1, 1.0) * (hi - lo + 0.5);
        const CrossingReport report =
            crossing_inequality_report(tree, kernels, x, S, alpha, beta, tol);
        for (const auto& bound : report.bounds) {
            const bool assertable =
                linear || bound.name.rfind("super", 0) == 0;
            if (!assertable) {
                informational += bound.ok ? 0 : 1;
                continue;
            }
            ++result.checks;
            if (!bound.ok)
                add_witness(result, "crossing-" + bound.name, s, 0, bound.lhs,
                            bound.rhs);
        }
    }
    if (!linear)
        result.note = "submartingale bounds informational under ambiguity (" +
                      std::to_string(informational) + " breaches)";
    return result;
}

SuiteResult run_bsde(const ProblemSpec& spec, std::uint64_t seed,
                     std::int64_t samples, double tol) {
    SuiteResult result{"bsde", 0, {}, ""};
    const ScenarioTree& tree = spec.tree;
    const KernelSet& kernels = spec.kernels;
    const PhiMap& phi = spec.phi_or_default();
    Rng rng(seed);

    for (std::int64_t s = 0; s < samples; ++s) {
        // Zero driver reproduces the conditional expectation.
        const RandomVariable q = random_variable(tree, rng);
        const BsdeSolution zero_sol =
            solve_bsde(tree, kernels, phi, Driver::zero(), q);
        const ExpectationResult e = conditional_expectation(tree, kernels, q);
        for (node_id n = 0; n < tree.node_count(); ++n) {
            ++result.checks;
            if (std::abs(zero_sol.y[n] - e.values[n]) > tol)
                add_witness(result, "bsde-zero-driver", s, n, zero_sol.y[n],
                            e.values[n]);
        }

        // Discounting a constant has the closed form (1+r)^{-(T-t)} c.
        const double rate = rng.uniform(0.01, 0.3);
        const double c = rng.uniform(0.5, 2.0);
        const BsdeSolution disc =
            solve_bsde(tree, kernels, phi, Driver::linear_discount(rate),
                       RandomVariable(tree, c));
        for (node_id n = 0; n < tree.node_count(); ++n) {
            ++result.checks;
            const double want =
                c / std::pow(1.0 + rate, tree.horizon() - tree.level_of(n));
            if (std::abs(disc.y[n] - want) > tol)
                add_witness(result, "bsde-discount", s, n, disc.y[n], want);
        }

        // Comparison: ordered terminals under the zero driver, and a
        // positive constant driver against it.
        RandomVariable qbar = q;
        for (double& v : qbar.values()) v -= rng.uniform(0.05, 0.5);
        ++result.checks;
        const ComparisonReport comparison = comparison_check(
            tree, kernels, phi, Driver::zero(), Driver::zero(), q, qbar);
        if (comparison.hypotheses_ok() && !comparison.conclusion_ok)
            add_witness(result, "bsde-comparison", s, 0, 0, 0);

        const double delta = rng.uniform(0.05, 0.3);
        Driver constant;
        constant.name = "constant";
        constant.claims_monotone = true;
        constant.f = [delta](node_id, int, double, std::span<const double>,
                             std::span<const double>) { return delta; };
        const BsdeSolution lifted =
            solve_bsde(tree, kernels, phi, constant, q);
        for (node_id n = 0; n < tree.node_count(); ++n) {
            ++result.checks;
            const double want =
                e.values[n] + delta * (tree.horizon() - tree.level_of(n));
            if (std::abs(lifted.y[n] - want) > tol)
                add_witness(result, "bsde-constant-driver", s, n, lifted.y[n],
                            want);
        }
    }
    return result;
}

SuiteResult run_roundtrip(const ProblemSpec& spec, std::uint64_t seed,
                          std::int64_t samples, double tol) {
    SuiteResult result{"roundtrip", 0, {}, ""};
    const ScenarioTree& tree = spec.tree;
    const PhiMap& phi = spec.phi_or_default();
    // Derived drivers are only subadditive over a linear base cost; under
    // genuine ambiguity those breaches are expected and go to the note.
    const bool linear = spec.kernels.is_effectively_linear(tree);
    std::int64_t informational = 0;
    Rng rng(seed);
    (void)tol;
    for (std::int64_t s = 0; s < samples; ++s) {
        RandomKernelOptions opts;
        opts.min_entry = 0.05;
        const KernelSet bar = random_kernels(tree, rng, opts);
        const RandomVariable q = random_variable(tree, rng);
        ++result.checks;
        const RoundtripReport round =
            roundtrip_check(tree, spec.kernels, bar, phi, q);
        if (!round.ok)
            add_witness(result, "roundtrip", s, 0, round.max_deviation, 1e-8);

        const Driver derived =
            driver_from_expectation(tree, spec.kernels, bar, phi);
        const DriverSamplingReport props = sample_driver_properties(
            tree, spec.kernels, phi, derived, 50, rng.fork());
        result.checks += props.checks;
        for (const auto& v : props.violations) {
            if (!linear && v.property == "sublinearity") {
                ++informational;
                continue;
            }
            result.witnesses.push_back({"driver-" + v.property, v.sample,
                                        v.node, v.lhs, v.rhs});
        }
    }
    if (!linear)
        result.note =
            "driver subadditivity informational under a nonlinear base (" +
            std::to_string(informational) + " breaches)";
    return result;
}

} // namespace

std::vector<std::string> suite_names() {
    return {"axioms", "martingale", "crossings", "bsde", "roundtrip"};
}

SuiteResult run_suite(const std::string& suite, const ProblemSpec& spec,
                      std::uint64_t seed, std::int64_t samples, double tol) {
    if (suite == "axioms") return run_axioms(spec, seed, samples, tol);
    if (suite == "martingale") return run_martingale(spec, seed, samples, tol);
    if (suite == "crossings") return run_crossings(spec, seed, samples, tol);
    if (suite == "bsde") return run_bsde(spec, seed, samples, tol);
    if (suite == "roundtrip") return run_roundtrip(spec, seed, samples, tol);
    throw SpecError("verify: unknown suite '" + suite + "'");
}

} // namespace slexp
