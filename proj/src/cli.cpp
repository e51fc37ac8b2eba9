#include "slexp/cli.hpp"

#include "slexp/sampling.hpp"

#include <cstdio>
#include <ostream>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace slexp::cli {

std::string fmt12(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

void apply_threads(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

namespace {

void print_per_node_table(const ScenarioTree& tree, const AdaptedProcess& v,
                          const std::string& format, std::ostream& out) {
    const bool csv = format == "csv";
    out << (csv ? "node_id,level,value" : "node_id level value") << '\n';
    for (node_id n = 0; n < tree.node_count(); ++n) {
        if (csv)
            out << n << ',' << tree.level_of(n) << ',' << fmt12(v[n]) << '\n';
        else
            out << n << ' ' << tree.level_of(n) << ' ' << fmt12(v[n]) << '\n';
    }
}

void print_witnesses(const std::vector<Violation>& witnesses,
                     std::ostream& out) {
    out << "property,sample,node,lhs,rhs\n";
    for (const auto& w : witnesses)
        out << w.property << ',' << w.sample << ',' << w.node << ','
            << fmt12(w.lhs) << ',' << fmt12(w.rhs) << '\n';
}

} // namespace

int cmd_eval(const std::string& spec_path, const std::string& expression,
             bool per_node, const GlobalOptions& options, std::ostream& out,
             std::ostream& err) {
    apply_threads(options.threads);
    try {
        const ProblemSpec spec = load_problem_spec(spec_path);
        const RandomVariable x = evaluate_expression(spec, expression);
        const ExpectationResult upper =
            conditional_expectation(spec.tree, spec.kernels, x);
        const double lower = lower_expectation(spec.tree, spec.kernels, x);
        if (options.format == "csv") {
            out << "expression,upper,lower\n";
            out << expression << ',' << fmt12(upper.root()) << ','
                << fmt12(lower) << '\n';
        } else {
            out << "expression " << expression << '\n';
            out << "upper " << fmt12(upper.root()) << '\n';
            out << "lower " << fmt12(lower) << '\n';
        }
        if (per_node)
            print_per_node_table(spec.tree, upper.values, options.format, out);
        return 0;
    } catch (const SpecError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_verify(const std::string& spec_path, const std::string& suite,
               std::uint64_t seed, std::int64_t samples,
               const GlobalOptions& options, std::ostream& out,
               std::ostream& err) {
    apply_threads(options.threads);
    try {
        const ProblemSpec spec = load_problem_spec(spec_path);
        const SuiteResult result =
            run_suite(suite, spec, seed, samples, options.tolerance);
        out << "suite " << result.suite << ": "
            << (result.ok() ? "PASS" : "FAIL") << " checks="
            << result.checks << " violations=" << result.witnesses.size()
            << " seed=" << seed << " samples=" << samples;
        if (!result.note.empty()) out << " note=" << result.note;
        out << '\n';
        if (!result.ok()) {
            print_witnesses(result.witnesses, out);
            return 1;
        }
        return 0;
    } catch (const SpecError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_demo_trinomial(double epsilon, int horizon,
                       const GlobalOptions& options, std::ostream& out,
                       std::ostream& err) {
    apply_threads(options.threads);
    try {
        const ScenarioTree tree(horizon, 3);
        TrinomialSpec trinomial{epsilon};
        const KernelSet kernels = trinomial.make_kernels(tree);
        const PhiMap phi = PhiMap::trinomial(tree);
        const AdaptedProcess b = trinomial_walk(tree);
        const AdaptedProcess qv = trinomial_quadratic_variation(tree);
        const PredictableProcess hat = compensator(tree, kernels, qv);
        const bool csv = options.format == "csv";

        out << "trinomial demo epsilon=" << fmt12(epsilon)
            << " horizon=" << horizon << '\n';
        out << (csv ? "node_id,level,B,QV,compensator"
                    : "node_id level B QV compensator")
            << '\n';
        const char sep = csv ? ',' : ' ';
        for (node_id n = 0; n < tree.node_count(); ++n)
            out << n << sep << tree.level_of(n) << sep << fmt12(b[n]) << sep
                << fmt12(qv[n]) << sep << fmt12(hat.at_node(tree, n)) << '\n';

        // Compensated quadratic variation is a martingale; show its
        // representation coordinates.
        AdaptedProcess compensated(tree);
        for (node_id n = 0; n < tree.node_count(); ++n)
            compensated[n] = qv[n] - hat.at_node(tree, n);
        const RepresentationTriple rep =
            martingale_rep(tree, kernels, compensated, phi);
        out << (csv ? "node_id,Z_s,Z_prime,wedge,minus_G"
                    : "node_id Z_s Z_prime wedge minus_G")
            << '\n';
        for (node_id n = 0; n < tree.interior_count(); ++n) {
            const auto zs = rep.coords.symmetric_at(n);
            const auto zp = rep.coords.asymmetric_at(n);
            out << n << sep << fmt12(zs.empty() ? 0.0 : zs[0]) << sep
                << fmt12(zp.empty() ? 0.0 : zp[0]) << sep
                << fmt12(rep.coords.wedge[static_cast<std::size_t>(n)]) << sep
                << fmt12(-rep.g[static_cast<std::size_t>(n)]) << '\n';
        }

        out << (csv ? "z_prime,G" : "z_prime G") << '\n';
        for (const double z : {-1.0, 0.0, 1.0}) {
            const double g = g_function(tree, kernels, phi, 0, {&z, 1});
            out << fmt12(z) << sep << fmt12(g) << '\n';
        }
        return 0;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace slexp::cli
