#include "slexp/bsde.hpp"

#include "slexp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace slexp {

Driver Driver::zero() {
    Driver d;
    d.name = "zero";
    d.f = [](node_id, int, double, std::span<const double>,
             std::span<const double>) { return 0.0; };
    d.claims_monotone = true;
    d.claims_sublinear = true;
    d.claims_positively_homogeneous = true;
    return d;
}

Driver Driver::linear_discount(double rate) {
    Driver d;
    d.name = "discount";
    d.f = [rate](node_id, int, double y, std::span<const double>,
                 std::span<const double>) { return -rate * y; };
    d.claims_monotone = rate > -1.0;
    return d;
}

namespace {

enum class NodeStatus : int {
    kOk = 0,
    kWedgeMismatch,
    kNotMonotone,
    kBracketFailure,
    kIterationCap,
    kDriverThrew,
};

struct StepWork {
    double y = 0.0;
    int iterations = 0;
    NodeStatus status = NodeStatus::kOk;
};

// Strict monotonicity spot check of y -> y - F on a grid around `center`.
bool monotone_on_grid(const Driver& driver, node_id n, int t, double center,
                      std::span<const double> z,
                      std::span<const double> z_prime) {
    const double s = std::max(1.0, std::abs(center));
    double prev = 0.0;
    for (int k = -2; k <= 2; ++k) {
        const double y = center + k * s;
        const double f = y - driver(n, t, y, z, z_prime);
        if (k > -2 && !(f > prev)) return false;
        prev = f;
    }
    return true;
}

// Solve y - F(n, t, y, z, z') = target by bracket expansion + bisection,
// with optional Newton steps that fall back to bisection when they leave
// the bracket.
StepWork invert_generator(const Driver& driver, node_id n, int t,
                          double target, std::span<const double> z,
                          std::span<const double> z_prime,
                          const SolverOptions& options) {
    StepWork work;
    auto g = [&](double y) { return y - driver(n, t, y, z, z_prime) - target; };

    double y = target;
    double gy = g(y);
    if (std::abs(gy) <= options.root_tol) {
        work.y = y;
        return work;
    }
    double step = options.bracket_step > 0.0
                      ? options.bracket_step
                      : std::max(1.0, std::abs(target));
    double lo = y, hi = y, glo = gy, ghi = gy;
    // g is increasing, so walk the deficient side outward geometrically.
    while (glo > 0.0 || ghi < 0.0) {
        if (++work.iterations > options.max_iterations) {
            work.status = NodeStatus::kBracketFailure;
            return work;
        }
        if (glo > 0.0) {
            lo -= step;
            glo = g(lo);
        }
        if (ghi < 0.0) {
            hi += step;
            ghi = g(hi);
        }
        step *= 2.0;
    }
    while (true) {
        if (++work.iterations > options.max_iterations) {
            work.status = NodeStatus::kIterationCap;
            return work;
        }
        double mid = 0.5 * (lo + hi);
        if (options.use_newton) {
            const double h = 1e-7 * std::max(1.0, std::abs(mid));
            const double slope = (g(mid + h) - g(mid - h)) / (2.0 * h);
            if (slope > 0.0) {
                const double newton = mid - g(mid) / slope;
                if (newton > lo && newton < hi) mid = newton;
            }
        }
        const double gmid = g(mid);
        if (std::abs(gmid) <= options.root_tol) {
            work.y = mid;
            return work;
        }
        if (gmid > 0.0)
            hi = mid;
        else
            lo = mid;
        if (!(lo < hi) || hi - lo <= 1e-16 * std::max(1.0, std::abs(mid))) {
            // Bracket exhausted at double precision.
            if (std::abs(gmid) <= 1e3 * options.root_tol) {
                work.y = mid;
                return work;
            }
            work.status = NodeStatus::kIterationCap;
            return work;
        }
    }
}

[[noreturn]] void throw_status(NodeStatus status, node_id n) {
    const std::string at = " at node " + std::to_string(n);
    switch (status) {
    case NodeStatus::kWedgeMismatch:
        throw std::runtime_error("bsde: wedge coordinate does not match "
                                 "-G(z'); kernel and Phi are inconsistent" +
                                 at);
    case NodeStatus::kNotMonotone:
        throw std::invalid_argument(
            "bsde: y -> y - F failed the monotonicity spot check" + at);
    case NodeStatus::kBracketFailure:
        throw std::runtime_error(
            "bsde: bracket expansion failed; y -> y - F does not reach the "
            "target" + at);
    case NodeStatus::kDriverThrew:
        throw std::runtime_error("bsde: driver evaluation threw" + at);
    default:
        throw std::runtime_error("bsde: root finder hit the iteration cap" +
                                 at);
    }
}

} // namespace

BsdeSolution solve_bsde(const ScenarioTree& tree, const KernelSet& kernels,
                        const PhiMap& phi, const Driver& driver,
                        const RandomVariable& terminal,
                        const SolverOptions& options) {
    if (!driver.claims_monotone)
        throw std::invalid_argument(
            "bsde: driver does not declare a monotone y-map");
    phi.validate_symmetric_block(tree, kernels, options.tol);
    if (static_cast<std::int64_t>(terminal.size()) != tree.path_count())
        throw std::invalid_argument("bsde: terminal data has wrong size");

    const int N = tree.branching();
    const int M = phi.symmetric_rows();
    const int P = N - M - 1;
    BsdeSolution sol;
    sol.m = M;
    sol.p = P;
    sol.y = AdaptedProcess(tree);
    sol.z.assign(static_cast<std::size_t>(tree.interior_count()) * M, 0.0);
    sol.z_prime.assign(static_cast<std::size_t>(tree.interior_count()) * P,
                       0.0);
    sol.root_iterations.assign(
        static_cast<std::size_t>(tree.interior_count()), 0);
    std::copy(terminal.values().begin(), terminal.values().end(),
              sol.y.values().begin() + tree.interior_count());

    std::vector<NodeStatus> status(
        static_cast<std::size_t>(tree.interior_count()), NodeStatus::kOk);

    for (int t = tree.horizon() - 1; t >= 0; --t) {
        const node_id begin = tree.level_offset(t);
        const node_id end = begin + tree.level_size(t);

        auto body = [&](node_id n) {
            const node_id c0 = tree.child_begin(n);
            const std::span<const double> children{
                sol.y.values().data() + c0, static_cast<std::size_t>(N)};
            const double e = sup_step(tree, kernels, n, children).value;

            // Phi coordinates of the centered increment; the wedge must be
            // the negative one-step cost of the asymmetric part.
            const auto inv = phi.inverse(tree, n);
            double wedge = 0.0;
            double* z = sol.z.data() + static_cast<std::size_t>(n) * M;
            double* zp = sol.z_prime.data() + static_cast<std::size_t>(n) * P;
            for (int j = 0; j < N; ++j) {
                double c = 0.0;
                for (int i = 0; i < N; ++i)
                    c += (children[static_cast<std::size_t>(i)] - e) *
                         inv[static_cast<std::size_t>(i) * N + j];
                if (j == 0)
                    wedge = c;
                else if (j <= M)
                    z[j - 1] = c;
                else
                    zp[j - 1 - M] = c;
            }
            const std::span<const double> zs{z, static_cast<std::size_t>(M)};
            const std::span<const double> zps{zp, static_cast<std::size_t>(P)};
            const double g = g_function(tree, kernels, phi, n, zps);
            if (std::abs(wedge + g) > options.tol) {
                status[static_cast<std::size_t>(n)] =
                    NodeStatus::kWedgeMismatch;
                return;
            }
            // Exceptions must not escape the parallel region; a throwing
            // driver is converted to a status and rethrown after the level.
            try {
                if (!monotone_on_grid(driver, n, t, e, zs, zps)) {
                    status[static_cast<std::size_t>(n)] =
                        NodeStatus::kNotMonotone;
                    return;
                }
                const StepWork work =
                    invert_generator(driver, n, t, e, zs, zps, options);
                status[static_cast<std::size_t>(n)] = work.status;
                sol.root_iterations[static_cast<std::size_t>(n)] =
                    work.iterations;
                sol.y[n] = work.y;
            } catch (const std::exception&) {
                status[static_cast<std::size_t>(n)] = NodeStatus::kDriverThrew;
            }
        };

#ifdef _OPENMP
        if (options.exec == Exec::kParallel && end - begin >= 64) {
#pragma omp parallel for schedule(static)
            for (node_id n = begin; n < end; ++n) body(n);
        } else
#endif
        {
            for (node_id n = begin; n < end; ++n) body(n);
        }
        for (node_id n = begin; n < end; ++n)
            if (status[static_cast<std::size_t>(n)] != NodeStatus::kOk)
                throw_status(status[static_cast<std::size_t>(n)], n);
    }

    const double residual = bsde_residual(tree, kernels, phi, driver, sol);
    if (residual > options.tol)
        throw std::runtime_error(
            "bsde: one-step reconstruction residual above tolerance");
    return sol;
}

std::vector<BsdeSolution> solve_bsde_system(
    const ScenarioTree& tree, const KernelSet& kernels, const PhiMap& phi,
    std::span<const Driver> drivers, std::span<const RandomVariable> terminals,
    const SolverOptions& options) {
    if (drivers.size() != terminals.size())
        throw std::invalid_argument(
            "bsde system: need one terminal condition per driver");
    std::vector<BsdeSolution> out;
    out.reserve(drivers.size());
    for (std::size_t k = 0; k < drivers.size(); ++k)
        out.push_back(
            solve_bsde(tree, kernels, phi, drivers[k], terminals[k], options));
    return out;
}

double bsde_residual(const ScenarioTree& tree, const KernelSet& kernels,
                     const PhiMap& phi, const Driver& driver,
                     const BsdeSolution& sol) {
    double worst = 0.0;
    for (node_id n = 0; n < tree.interior_count(); ++n) {
        const int t = tree.level_of(n);
        const auto z = sol.z_at(n);
        const auto zp = sol.z_prime_at(n);
        const double g = g_function(tree, kernels, phi, n, zp);
        const double f = driver(n, t, sol.y[n], z, zp);
        const node_id c0 = tree.child_begin(n);
        for (int i = 0; i < tree.branching(); ++i) {
            const double rhs = sol.y[n] - f +
                               phi.symmetric_increment(tree, n, z, i) +
                               phi.asymmetric_increment(tree, n, zp, i) - g;
            worst = std::max(worst, std::abs(sol.y[c0 + i] - rhs));
        }
    }
    return worst;
}

ComparisonReport comparison_check(const ScenarioTree& tree,
                                  const KernelSet& kernels, const PhiMap& phi,
                                  const Driver& driver,
                                  const Driver& driver_bar,
                                  const RandomVariable& terminal,
                                  const RandomVariable& terminal_bar,
                                  const SolverOptions& options) {
    const BsdeSolution sol =
        solve_bsde(tree, kernels, phi, driver, terminal, options);
    const BsdeSolution sol_bar =
        solve_bsde(tree, kernels, phi, driver_bar, terminal_bar, options);
    const double tol = options.tol;

    ComparisonReport report;
    const PolarSet polar = polar_paths(tree, kernels);
    const std::vector<std::uint8_t> node_polar = polar_nodes(tree, kernels);

    // (i) terminal ordering q.s.
    report.terminal_ok = qs_leq(terminal_bar, terminal, polar, tol);

    // (ii) driver ordering at both realized argument sets.
    report.driver_ok = true;
    // (iii) monotone map spot check at realized arguments.
    report.monotone_ok = true;
    // (iv) separation with strict margin when the realized (z, z') differ.
    report.separation_ok = true;
    report.min_margin = std::numeric_limits<double>::infinity();

    const int N = tree.branching();
    std::vector<double> delta_inc(static_cast<std::size_t>(N));
    for (node_id n = 0; n < tree.interior_count(); ++n) {
        if (node_polar[static_cast<std::size_t>(n)]) continue;
        const int t = tree.level_of(n);
        const auto z = sol.z_at(n);
        const auto zp = sol.z_prime_at(n);
        const auto zb = sol_bar.z_at(n);
        const auto zpb = sol_bar.z_prime_at(n);

        for (const double y : {sol.y[n], sol_bar.y[n]}) {
            for (const auto& args : {std::pair(z, zp), std::pair(zb, zpb)}) {
                const double f = driver(n, t, y, args.first, args.second);
                const double fb =
                    driver_bar(n, t, y, args.first, args.second);
                if (f < fb - tol) {
                    report.driver_ok = false;
                    report.violations.push_back({"driver-order", 0, n, f, fb});
                }
            }
            if (!monotone_on_grid(driver, n, t, y, z, zp) ||
                !monotone_on_grid(driver_bar, n, t, y, zb, zpb))
                report.monotone_ok = false;
        }

        double max_delta = 0.0;
        for (std::size_t j = 0; j < z.size(); ++j)
            max_delta = std::max(max_delta, std::abs(z[j] - zb[j]));
        for (std::size_t j = 0; j < zp.size(); ++j)
            max_delta = std::max(max_delta, std::abs(zp[j] - zpb[j]));
        if (max_delta > 1e-12) {
            std::vector<double> dz(z.size()), dzp(zp.size());
            for (std::size_t j = 0; j < z.size(); ++j) dz[j] = z[j] - zb[j];
            for (std::size_t j = 0; j < zp.size(); ++j)
                dzp[j] = zp[j] - zpb[j];
            double min_inc = std::numeric_limits<double>::infinity();
            for (int i = 0; i < N; ++i) {
                if (node_polar[static_cast<std::size_t>(tree.child(n, i))])
                    continue;
                min_inc = std::min(
                    min_inc, phi.symmetric_increment(tree, n, dz, i) +
                                 phi.asymmetric_increment(tree, n, dzp, i));
            }
            const double g = g_function(tree, kernels, phi, n, zp);
            const double gb = g_function(tree, kernels, phi, n, zpb);
            for (const double y : {sol.y[n], sol_bar.y[n]}) {
                const double lhs = driver(n, t, y, z, zp) -
                                   driver(n, t, y, zb, zpb) + g - gb;
                const double margin = lhs - min_inc;
                report.min_margin = std::min(report.min_margin, margin);
                if (margin < kTol) {
                    report.separation_ok = false;
                    report.violations.push_back(
                        {"separation", 0, n, lhs, min_inc});
                }
            }
        }
    }
    if (!std::isfinite(report.min_margin)) report.min_margin = 0.0;

    // Conclusion: Y >= Y_bar at every non-polar node, and the strict part.
    report.conclusion_ok = true;
    report.strict_ok = true;
    for (node_id n = 0; n < tree.node_count(); ++n) {
        if (node_polar[static_cast<std::size_t>(n)]) continue;
        if (sol.y[n] < sol_bar.y[n] - tol) {
            report.conclusion_ok = false;
            report.violations.push_back(
                {"conclusion", 0, n, sol.y[n], sol_bar.y[n]});
        }
    }
    for (node_id n = 0; n < tree.node_count(); ++n) {
        if (node_polar[static_cast<std::size_t>(n)]) continue;
        if (std::abs(sol.y[n] - sol_bar.y[n]) > tol) continue;
        const int t = tree.level_of(n);
        for (path_id p = 0; p < tree.path_count(); ++p) {
            if (polar.is_polar(p) || tree.node_on_path(p, t) != n) continue;
            if (std::abs(terminal[p] - terminal_bar[p]) > tol) {
                report.strict_ok = false;
                report.violations.push_back(
                    {"strict-comparison", 0, n, terminal[p], terminal_bar[p]});
            }
        }
    }

    if (report.hypotheses_ok() && (!report.conclusion_ok || !report.strict_ok))
        throw std::runtime_error(
            "comparison theorem breach: hypotheses hold but the conclusion "
            "fails");
    return report;
}

namespace {

// Shared implementation detail of the derived driver: bar expectation of the
// combined one-step increment minus the base cost of the asymmetric part.
double derived_driver_value(const ScenarioTree& tree,
                            const KernelSet& kernels_base,
                            const KernelSet& kernels_bar, const PhiMap& phi,
                            node_id n, std::span<const double> z,
                            std::span<const double> z_prime) {
    const int N = tree.branching();
    double buf[64];
    std::vector<double> heap;
    double* vals = buf;
    if (N > 64) {
        heap.resize(static_cast<std::size_t>(N));
        vals = heap.data();
    }
    for (int i = 0; i < N; ++i)
        vals[i] = phi.symmetric_increment(tree, n, z, i) +
                  phi.asymmetric_increment(tree, n, z_prime, i);
    const double bar =
        sup_step(tree, kernels_bar, n, {vals, static_cast<std::size_t>(N)})
            .value;
    return bar - g_function(tree, kernels_base, phi, n, z_prime);
}

} // namespace

Driver driver_from_expectation(const ScenarioTree& tree,
                               const KernelSet& kernels_base,
                               const KernelSet& kernels_bar,
                               const PhiMap& phi) {
    const PolarSet base_polar = polar_paths(tree, kernels_base);
    const PolarSet bar_polar = polar_paths(tree, kernels_bar);
    for (path_id p = 0; p < tree.path_count(); ++p)
        if (bar_polar.is_polar(p) && !base_polar.is_polar(p))
            throw std::invalid_argument(
                "derived driver: bar-polar paths must be base-polar");

    Driver d;
    d.name = "derived";
    d.claims_monotone = true;
    d.claims_sublinear = true;
    d.claims_positively_homogeneous = true;
    // The driver holds references; the tree/kernels/phi must outlive it.
    d.f = [&tree, &kernels_base, &kernels_bar, &phi](
              node_id n, int, double, std::span<const double> z,
              std::span<const double> z_prime) {
        return derived_driver_value(tree, kernels_base, kernels_bar, phi, n, z,
                                    z_prime);
    };
    return d;
}

RoundtripReport roundtrip_check(const ScenarioTree& tree,
                                const KernelSet& kernels_base,
                                const KernelSet& kernels_bar,
                                const PhiMap& phi, const RandomVariable& Q,
                                double tol) {
    const Driver derived =
        driver_from_expectation(tree, kernels_base, kernels_bar, phi);
    const BsdeSolution sol = solve_bsde(tree, kernels_base, phi, derived, Q);
    const ExpectationResult bar =
        conditional_expectation(tree, kernels_bar, Q);

    RoundtripReport report;
    report.ok = true;
    for (node_id n = 0; n < tree.node_count(); ++n) {
        const double dev = std::abs(sol.y[n] - bar.values[n]);
        report.max_deviation = std::max(report.max_deviation, dev);
        if (dev > tol) {
            report.ok = false;
            report.violations.push_back(
                {"roundtrip", 0, n, sol.y[n], bar.values[n]});
        }
    }
    return report;
}

DriverSamplingReport sample_driver_properties(const ScenarioTree& tree,
                                              const KernelSet& kernels,
                                              const PhiMap& phi,
                                              const Driver& driver,
                                              std::int64_t samples,
                                              std::uint64_t seed, double tol) {
    DriverSamplingReport report;
    Rng rng(seed);
    const int N = tree.branching();
    const int M = phi.symmetric_rows();
    const int P = N - M - 1;
    const std::vector<std::uint8_t> node_polar = polar_nodes(tree, kernels);

    std::vector<double> z1(static_cast<std::size_t>(M)),
        z2(static_cast<std::size_t>(M)), zsum(static_cast<std::size_t>(M));
    std::vector<double> p1(static_cast<std::size_t>(P)),
        p2(static_cast<std::size_t>(P)), psum(static_cast<std::size_t>(P));
    for (std::int64_t s = 0; s < samples; ++s) {
        const node_id n =
            static_cast<node_id>(rng.uniform_int(0, tree.interior_count() - 1));
        const int t = tree.level_of(n);
        for (auto& x : z1) x = rng.uniform(-2.0, 2.0);
        for (auto& x : z2) x = rng.uniform(-2.0, 2.0);
        for (auto& x : p1) x = rng.uniform(-2.0, 2.0);
        for (auto& x : p2) x = rng.uniform(-2.0, 2.0);
        for (std::size_t j = 0; j < z1.size(); ++j) zsum[j] = z1[j] + z2[j];
        for (std::size_t j = 0; j < p1.size(); ++j) psum[j] = p1[j] + p2[j];
        const double y = rng.uniform(-1.0, 1.0);

        const double f1 = driver(n, t, y, z1, p1);
        const double f2 = driver(n, t, y, z2, p2);
        const double fsum = driver(n, t, y, zsum, psum);
        ++report.checks;
        if (fsum > f1 + f2 + tol)
            report.violations.push_back({"sublinearity", s, n, fsum, f1 + f2});

        const double lambda = rng.uniform(0.0, 3.0);
        for (std::size_t j = 0; j < z1.size(); ++j) zsum[j] = lambda * z1[j];
        for (std::size_t j = 0; j < p1.size(); ++j) psum[j] = lambda * p1[j];
        const double fscaled = driver(n, t, y, zsum, psum);
        ++report.checks;
        if (std::abs(fscaled - lambda * f1) > tol * std::max(1.0, lambda))
            report.violations.push_back(
                {"positive-homogeneity", s, n, fscaled, lambda * f1});

        // Comparison condition (iv) on the sampled pair.
        if (!node_polar[static_cast<std::size_t>(n)]) {
            for (std::size_t j = 0; j < z1.size(); ++j)
                zsum[j] = z1[j] - z2[j];
            for (std::size_t j = 0; j < p1.size(); ++j)
                psum[j] = p1[j] - p2[j];
            double min_inc = std::numeric_limits<double>::infinity();
            for (int i = 0; i < N; ++i) {
                if (node_polar[static_cast<std::size_t>(tree.child(n, i))])
                    continue;
                min_inc = std::min(
                    min_inc, phi.symmetric_increment(tree, n, zsum, i) +
                                 phi.asymmetric_increment(tree, n, psum, i));
            }
            const double lhs = f1 - f2 +
                               g_function(tree, kernels, phi, n, p1) -
                               g_function(tree, kernels, phi, n, p2);
            ++report.checks;
            if (lhs - min_inc < tol)
                report.violations.push_back(
                    {"separation", s, n, lhs, min_inc});
        }

        // Continuity sanity: bounded difference quotient along a random ray.
        const double h = 1e-6;
        for (std::size_t j = 0; j < z1.size(); ++j)
            zsum[j] = z1[j] + h * rng.uniform(-1.0, 1.0);
        for (std::size_t j = 0; j < p1.size(); ++j)
            psum[j] = p1[j] + h * rng.uniform(-1.0, 1.0);
        const double fnear = driver(n, t, y, zsum, psum);
        ++report.checks;
        if (std::abs(fnear - f1) > 1e3 * h)
            report.violations.push_back({"continuity", s, n, fnear, f1});
    }
    return report;
}

} // namespace slexp
