#include "slexp/expectation.hpp"
#include "slexp/kernels.hpp"
#include "slexp/sampling.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace slexp;

namespace {

KernelSet two_vertex_kernels(const ScenarioTree& tree) {
    return KernelSet::shared(tree, {{0.1, 0.8, 0.1}, {0.4, 0.2, 0.4}});
}

} // namespace

TEST_CASE("sup and inf steps on the worked example") {
    const ScenarioTree tree(1, 3);
    const KernelSet kernels = two_vertex_kernels(tree);
    const double child_values[] = {1.0, 0.4, 0.0};

    // Dot products are 0.42 and 0.48.
    const StepResult hi = sup_step(tree, kernels, 0, child_values);
    CHECK(hi.value == doctest::Approx(0.48).epsilon(1e-12));
    CHECK(hi.vertex == 1);

    const StepResult lo = inf_step(tree, kernels, 0, child_values);
    CHECK(lo.value == doctest::Approx(0.42).epsilon(1e-12));
    CHECK(lo.vertex == 0);
}

TEST_CASE("constant child values collapse to the constant") {
    const ScenarioTree tree(1, 3);
    const KernelSet kernels = two_vertex_kernels(tree);
    const double constant[] = {0.7, 0.7, 0.7};
    const StepResult hi = sup_step(tree, kernels, 0, constant);
    CHECK(hi.value == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(hi.vertex == 0);
    CHECK(inf_step(tree, kernels, 0, constant).vertex == 0);
}

TEST_CASE("singleton vertex list is the linear expectation") {
    const ScenarioTree tree(1, 3);
    const KernelSet kernels = KernelSet::shared(tree, {{0.2, 0.5, 0.3}});
    const double v[] = {1.0, -1.0, 2.0};
    const double linear = 0.2 * 1.0 + 0.5 * -1.0 + 0.3 * 2.0;
    CHECK(sup_step(tree, kernels, 0, v).value == doctest::Approx(linear));
    CHECK(inf_step(tree, kernels, 0, v).value ==
          sup_step(tree, kernels, 0, v).value);
}

TEST_CASE("inf step is exactly the reflected sup step") {
    const ScenarioTree tree(2, 3);
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        RandomKernelOptions opts;
        const KernelSet kernels = random_kernels(tree, rng, opts);
        double v[3], neg[3];
        for (int i = 0; i < 3; ++i) {
            v[i] = rng.uniform(-2.0, 2.0);
            neg[i] = -v[i];
        }
        const node_id n = static_cast<node_id>(
            rng.uniform_int(0, tree.interior_count() - 1));
        const StepResult lo = inf_step(tree, kernels, n, v);
        const StepResult hi = sup_step(tree, kernels, n, neg);
        CHECK(lo.value == -hi.value); // bitwise
        CHECK(lo.vertex == hi.vertex);
        CHECK(sup_step(tree, kernels, n, v).value >= lo.value);
    }
}

TEST_CASE("appending a convex combination never changes the sup") {
    const ScenarioTree tree(1, 3);
    Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> a{rng.uniform(), rng.uniform(), rng.uniform()};
        std::vector<double> b{rng.uniform(), rng.uniform(), rng.uniform()};
        double sa = a[0] + a[1] + a[2], sb = b[0] + b[1] + b[2];
        for (double& x : a) x /= sa;
        for (double& x : b) x /= sb;
        const double w = rng.uniform();
        std::vector<double> mix(3);
        for (int i = 0; i < 3; ++i) mix[i] = w * a[i] + (1 - w) * b[i];
        const KernelSet two = KernelSet::shared(tree, {a, b});
        const KernelSet three = KernelSet::shared(tree, {a, b, mix});
        const double v[] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                            rng.uniform(-1.0, 1.0)};
        CHECK(sup_step(tree, two, 0, v).value ==
              doctest::Approx(sup_step(tree, three, 0, v).value)
                  .epsilon(1e-12));
    }
}

TEST_CASE("kernel vertex validation and renormalization") {
    const ScenarioTree tree(1, 3);
    CHECK_THROWS_AS(KernelSet::shared(tree, {{0.5, 0.6, 0.1}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(KernelSet::shared(tree, {{-0.1, 0.6, 0.5}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(KernelSet::shared(tree, {}), std::invalid_argument);
    CHECK_THROWS_AS(KernelSet::shared(tree, {{0.5, 0.5}}),
                    std::invalid_argument);
    // Within 1e-12 of 1: accepted and renormalized.
    const KernelSet k =
        KernelSet::shared(tree, {{0.25, 0.25, 0.5 + 5e-13}});
    const double ones[] = {1.0, 1.0, 1.0};
    CHECK(sup_step(tree, k, 0, ones).value == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("trinomial kernel family") {
    const ScenarioTree tree(2, 3);
    const KernelSet k = TrinomialSpec{0.1}.make_kernels(tree);
    const double qv[] = {1.0, 0.0, 1.0};
    CHECK(sup_step(tree, k, 0, qv).value == doctest::Approx(0.8));
    CHECK(inf_step(tree, k, 0, qv).value == doctest::Approx(0.2));
    CHECK_THROWS_AS(TrinomialSpec{0.3}.make_kernels(tree),
                    std::invalid_argument);
    CHECK_THROWS_AS(TrinomialSpec{-0.01}.make_kernels(tree),
                    std::invalid_argument);
    CHECK(TrinomialSpec{0.25}.make_kernels(tree).is_effectively_linear(tree));
    CHECK(!k.is_effectively_linear(tree));
}

TEST_CASE("polar paths") {
    const ScenarioTree tree(2, 3);
    CHECK(polar_paths(tree, TrinomialSpec{0.1}.make_kernels(tree)).empty());
    // epsilon = 0: each edge still has a vertex giving it positive mass.
    CHECK(polar_paths(tree, TrinomialSpec{0.0}.make_kernels(tree)).empty());

    const ScenarioTree bin(2, 2);
    const KernelSet point = KernelSet::shared(bin, {{1.0, 0.0}});
    const PolarSet polar = polar_paths(bin, point);
    // Only the all-first-child path survives.
    CHECK(polar.count() == bin.path_count() - 1);
    CHECK(!polar.is_polar(0));
    for (path_id p = 1; p < bin.path_count(); ++p) CHECK(polar.is_polar(p));

    // Removing vertices can only grow the polar set.
    const KernelSet two = KernelSet::shared(bin, {{1.0, 0.0}, {0.5, 0.5}});
    const PolarSet polar_two = polar_paths(bin, two);
    for (path_id p = 0; p < bin.path_count(); ++p)
        if (polar_two.is_polar(p)) CHECK(polar.is_polar(p));
    CHECK(polar_two.count() == 0);
}

TEST_CASE("measure enumeration counts and path probabilities") {
    const ScenarioTree t1(1, 3);
    const KernelSet k1 = TrinomialSpec{0.1}.make_kernels(t1);
    CHECK(enumerate_measures(t1, k1).size() == 2);

    const ScenarioTree t2(2, 3);
    const KernelSet k2 = TrinomialSpec{0.1}.make_kernels(t2);
    const auto measures = enumerate_measures(t2, k2);
    CHECK(measures.size() == 16);
    for (const auto& m : measures) {
        double sum = 0.0;
        for (double p : m.path_prob) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }

    const KernelSet single = KernelSet::shared(t2, {{0.2, 0.5, 0.3}});
    const auto one = enumerate_measures(t2, single);
    CHECK(one.size() == 1);
    // Linear expectation through a single measure's path probabilities.
    Rng rng(19);
    const RandomVariable x = random_variable(t2, rng);
    CHECK(one[0].expectation(x) ==
          doctest::Approx(expectation(t2, single, x)).epsilon(1e-12));

    CHECK_THROWS_AS(enumerate_measures(t2, k2, 8), std::invalid_argument);
}

TEST_CASE("trinomial vertices are the interval endpoints") {
    const ScenarioTree tree(1, 3);
    const KernelSet k = TrinomialSpec{0.1}.make_kernels(tree);
    const VertexList& list = k.at(tree, 0);
    REQUIRE(list.count == 2);
    const auto lo = list.vertex(0, 3);
    const auto hi = list.vertex(1, 3);
    CHECK(lo[0] == doctest::Approx(0.1));
    CHECK(lo[1] == doctest::Approx(0.8));
    CHECK(lo[2] == doctest::Approx(0.1));
    CHECK(hi[0] == doctest::Approx(0.4));
    CHECK(hi[1] == doctest::Approx(0.2));
    CHECK(hi[2] == doctest::Approx(0.4));
}

TEST_CASE("per-node singletons still count as linear") {
    const ScenarioTree tree(2, 2);
    std::vector<std::vector<std::vector<double>>> lists{
        {{0.3, 0.7}}, {{0.8, 0.2}}, {{0.5, 0.5}}};
    const KernelSet k = KernelSet::per_node(tree, std::move(lists));
    CHECK(k.is_effectively_linear(tree));

    std::vector<std::vector<std::vector<double>>> mixed{
        {{0.3, 0.7}, {0.4, 0.6}}, {{0.8, 0.2}}, {{0.5, 0.5}}};
    CHECK(!KernelSet::per_node(tree, std::move(mixed))
               .is_effectively_linear(tree));
}
