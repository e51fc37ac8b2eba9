#include "slexp/spec_io.hpp"

#include <doctest.h>

#include <cmath>

using namespace slexp;

namespace {

constexpr const char* kTrinomialJson = R"json({
  "tree": {"horizon": 2, "branching": 3},
  "kernels": {"trinomial": {"epsilon": 0.1}},
  "phi": {"symmetric_rows": 1, "matrix": [[1,1,1],[1,0,-1],[1,0,1]]},
  "variables": {
    "payoff": "pos(B2 - 1)",
    "double_payoff": "2 * payoff",
    "ramp": [0, 1, 2, 1, 0, 1, 2, 1, 0]
  },
  "stopping_times": {"hit_one": [1, 3, 7, 8, 9]}
})json";

} // namespace

TEST_CASE("parsing the trinomial problem spec") {
    const ProblemSpec spec = parse_problem_spec(kTrinomialJson);
    CHECK(spec.tree.horizon() == 2);
    CHECK(spec.tree.branching() == 3);
    CHECK(spec.phi.has_value());
    CHECK(spec.phi->symmetric_rows() == 1);
    CHECK(spec.stopping_times.count("hit_one") == 1);

    const RandomVariable qv2 = evaluate_expression(spec, "QV2");
    CHECK(expectation(spec.tree, spec.kernels, qv2) ==
          doctest::Approx(1.6).epsilon(1e-9));
    CHECK(lower_expectation(spec.tree, spec.kernels, qv2) ==
          doctest::Approx(0.4).epsilon(1e-9));

    const RandomVariable b2 = evaluate_expression(spec, "B2");
    CHECK(expectation(spec.tree, spec.kernels, b2) ==
          doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("expression grammar") {
    const ProblemSpec spec = parse_problem_spec(kTrinomialJson);

    // Precedence, unary minus, functions, user names and nesting.
    const RandomVariable a = evaluate_expression(spec, "1 + 2 * B1");
    const RandomVariable b1 = evaluate_expression(spec, "B1");
    for (path_id p = 0; p < spec.tree.path_count(); ++p)
        CHECK(a[p] == doctest::Approx(1.0 + 2.0 * b1[p]));

    const RandomVariable m = evaluate_expression(spec, "max(B2, -B2)");
    const RandomVariable b2 = evaluate_expression(spec, "B2");
    for (path_id p = 0; p < spec.tree.path_count(); ++p)
        CHECK(m[p] == doctest::Approx(std::abs(b2[p])));

    const RandomVariable pay = evaluate_expression(spec, "payoff");
    const RandomVariable dbl = evaluate_expression(spec, "double_payoff");
    for (path_id p = 0; p < spec.tree.path_count(); ++p) {
        CHECK(pay[p] == doctest::Approx(std::max(b2[p] - 1.0, 0.0)));
        CHECK(dbl[p] == doctest::Approx(2.0 * pay[p]));
    }

    const RandomVariable neg = evaluate_expression(spec, "neg(B2)");
    for (path_id p = 0; p < spec.tree.path_count(); ++p)
        CHECK(neg[p] == doctest::Approx(std::max(-b2[p], 0.0)));

    const RandomVariable ramp = evaluate_expression(spec, "ramp");
    CHECK(ramp[0] == 0.0);
    CHECK(ramp[2] == 2.0);

    CHECK_THROWS_AS(evaluate_expression(spec, "unknown_name"), SpecError);
    CHECK_THROWS_AS(evaluate_expression(spec, "B7"), SpecError);
    CHECK_THROWS_AS(evaluate_expression(spec, "B2 + "), SpecError);
    CHECK_THROWS_AS(evaluate_expression(spec, "B2 B1"), SpecError);
    CHECK_THROWS_AS(evaluate_expression(spec, "min(B2)"), SpecError);
}

TEST_CASE("cyclic definitions are rejected") {
    const ProblemSpec spec = parse_problem_spec(R"json({
      "tree": {"horizon": 1, "branching": 3},
      "kernels": {"trinomial": {"epsilon": 0.2}},
      "variables": {"a": "b + 1", "b": "a - 1"}
    })json");
    CHECK_THROWS_AS(evaluate_expression(spec, "a"), SpecError);
}

TEST_CASE("malformed specs fail with parse errors") {
    CHECK_THROWS_AS(parse_problem_spec("not json"), SpecError);
    CHECK_THROWS_AS(parse_problem_spec(R"json({"tree": {"horizon": 2}})json"),
                    SpecError);
    // Vertex rows that do not sum to one.
    CHECK_THROWS_AS(parse_problem_spec(R"json({
      "tree": {"horizon": 1, "branching": 2},
      "kernels": {"vertices": [[0.5, 0.6]]}
    })json"),
                    SpecError);
    // Wrong-length terminal array.
    CHECK_THROWS_AS(parse_problem_spec(R"json({
      "tree": {"horizon": 2, "branching": 2},
      "kernels": {"vertices": [[0.5, 0.5]]},
      "variables": {"x": [1, 2, 3]}
    })json"),
                    SpecError);
    CHECK_THROWS_AS(load_problem_spec("/nonexistent/path.json"), SpecError);
}

TEST_CASE("per-level kernels and default phi") {
    const ProblemSpec spec = parse_problem_spec(R"json({
      "tree": {"horizon": 2, "branching": 2},
      "kernels": {"per_level": [[[0.3, 0.7], [0.8, 0.2]], [[0.5, 0.5]]]},
      "variables": {"q": [1.0, -0.5, 0.25, 2.0]}
    })json");
    const RandomVariable q = evaluate_expression(spec, "q");
    // Level-1 values are linear (singleton kernel); the root maximizes over
    // the two level-0 vertices.
    const double left = 0.5 * 1.0 + 0.5 * -0.5;
    const double right = 0.5 * 0.25 + 0.5 * 2.0;
    const double want =
        std::max(0.3 * left + 0.7 * right, 0.8 * left + 0.2 * right);
    CHECK(expectation(spec.tree, spec.kernels, q) ==
          doctest::Approx(want).epsilon(1e-12));

    // No 2-ary default phi exists.
    CHECK_THROWS_AS(spec.phi_or_default(), SpecError);

    const ProblemSpec trinomial = parse_problem_spec(R"json({
      "tree": {"horizon": 1, "branching": 3},
      "kernels": {"trinomial": {"epsilon": 0.1}}
    })json");
    CHECK(trinomial.phi_or_default().symmetric_rows() == 1);
}

TEST_CASE("built-in names with trailing garbage are rejected") {
    const ProblemSpec spec = parse_problem_spec(kTrinomialJson);
    CHECK_THROWS_AS(evaluate_expression(spec, "B2x"), SpecError);
    CHECK_THROWS_AS(evaluate_expression(spec, "QV1z1"), SpecError);
}

TEST_CASE("malformed numbers are rejected") {
    const ProblemSpec spec = parse_problem_spec(kTrinomialJson);
    CHECK_THROWS_AS(evaluate_expression(spec, "2.5.3 + B2"), SpecError);
    CHECK_THROWS_AS(evaluate_expression(spec, "1e + B2"), SpecError);
    const RandomVariable sci = evaluate_expression(spec, "2.5e-1 * B2");
    const RandomVariable b2 = evaluate_expression(spec, "B2");
    for (path_id p = 0; p < spec.tree.path_count(); ++p)
        CHECK(sci[p] == doctest::Approx(0.25 * b2[p]));
}
