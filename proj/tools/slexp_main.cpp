// slexp: evaluate sublinear expectations on scenario-tree problem specs,
// run randomized verification suites, and print the trinomial demo.
#include "slexp/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Sublinear expectations on finite scenario trees"};
    app.require_subcommand(1);
    app.fallthrough();

    slexp::cli::GlobalOptions options;
    app.add_option("--threads", options.threads,
                   "Worker threads for per-level sweeps (0 = default)");
    app.add_option("--tolerance", options.tolerance,
                   "Comparison tolerance for verification reports");
    app.add_option("--format", options.format, "Output format")
        ->check(CLI::IsMember({"table", "csv"}));

    std::string spec_path;
    std::string expression;
    bool per_node = false;
    auto* eval = app.add_subcommand("eval", "Evaluate an expression");
    eval->add_option("--spec", spec_path, "Problem spec (JSON)")->required();
    eval->add_option("--expr", expression, "Variable name or expression")
        ->required();
    eval->add_flag("--per-node", per_node, "Print the per-node table");

    std::string suite;
    std::uint64_t seed = 42;
    std::int64_t samples = 200;
    auto* verify = app.add_subcommand("verify", "Run a verification suite");
    verify->add_option("--spec", spec_path, "Problem spec (JSON)")->required();
    verify->add_option("--suite", suite, "Suite name")
        ->required()
        ->check(CLI::IsMember(slexp::suite_names()));
    verify->add_option("--seed", seed, "Random seed");
    verify->add_option("--samples", samples, "Sample count");

    double epsilon = 0.1;
    int horizon = 2;
    auto* demo = app.add_subcommand("demo", "Built-in demos");
    auto* trinomial = demo->add_subcommand("trinomial", "Trinomial example");
    trinomial->add_option("--epsilon", epsilon, "Kernel interval parameter");
    trinomial->add_option("--horizon", horizon, "Tree horizon");
    demo->require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (eval->parsed())
        return slexp::cli::cmd_eval(spec_path, expression, per_node, options,
                                    std::cout, std::cerr);
    if (verify->parsed())
        return slexp::cli::cmd_verify(spec_path, suite, seed, samples, options,
                                      std::cout, std::cerr);
    return slexp::cli::cmd_demo_trinomial(epsilon, horizon, options, std::cout,
                                          std::cerr);
}
