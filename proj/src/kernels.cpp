#include "slexp/kernels.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace slexp {

namespace {

// Validate nonnegativity and sum within 1e-12 of 1, then renormalize so the
// stored entries divide out the residual exactly.
void normalize_vertex(std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) {
        if (!(x >= 0.0))
            throw std::invalid_argument("kernel vertex: negative entry");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("kernel vertex: entries do not sum to 1");
    for (double& x : v) x /= sum;
}

} // namespace

VertexList KernelSet::make_list(
    int branching, const std::vector<std::vector<double>>& vertices) {
    if (vertices.empty())
        throw std::invalid_argument("kernel set: empty vertex list");
    VertexList list;
    list.count = static_cast<int>(vertices.size());
    list.probs.reserve(vertices.size() * static_cast<std::size_t>(branching));
    for (const auto& v : vertices) {
        if (static_cast<int>(v.size()) != branching)
            throw std::invalid_argument("kernel set: vertex has wrong length");
        std::vector<double> w = v;
        normalize_vertex(w);
        list.probs.insert(list.probs.end(), w.begin(), w.end());
    }
    return list;
}

KernelSet KernelSet::shared(const ScenarioTree& tree,
                            std::vector<std::vector<double>> vertices) {
    std::vector<VertexList> lists;
    lists.push_back(make_list(tree.branching(), vertices));
    return KernelSet(Mode::kShared, tree.branching(), std::move(lists));
}

KernelSet KernelSet::per_level(
    const ScenarioTree& tree,
    std::vector<std::vector<std::vector<double>>> lists) {
    if (static_cast<int>(lists.size()) != tree.horizon())
        throw std::invalid_argument("kernel set: need one list per level");
    std::vector<VertexList> out;
    out.reserve(lists.size());
    for (const auto& l : lists) out.push_back(make_list(tree.branching(), l));
    return KernelSet(Mode::kPerLevel, tree.branching(), std::move(out));
}

KernelSet KernelSet::per_node(
    const ScenarioTree& tree,
    std::vector<std::vector<std::vector<double>>> lists) {
    if (static_cast<std::int64_t>(lists.size()) != tree.interior_count())
        throw std::invalid_argument(
            "kernel set: need one list per interior node");
    std::vector<VertexList> out;
    out.reserve(lists.size());
    for (const auto& l : lists) out.push_back(make_list(tree.branching(), l));
    return KernelSet(Mode::kPerNode, tree.branching(), std::move(out));
}

bool KernelSet::is_effectively_linear(const ScenarioTree& tree,
                                      double tol) const {
    // Linear iff every node's list collapses to one kernel; the kernels may
    // still differ across nodes.
    for (node_id n = 0; n < tree.interior_count(); ++n) {
        const VertexList& list = at(tree, n);
        const auto ref = list.vertex(0, branching_);
        for (int k = 1; k < list.count; ++k) {
            const auto v = list.vertex(k, branching_);
            for (int i = 0; i < branching_; ++i)
                if (std::abs(v[static_cast<std::size_t>(i)] -
                             ref[static_cast<std::size_t>(i)]) > tol)
                    return false;
        }
    }
    return true;
}

std::int64_t KernelSet::combination_count(const ScenarioTree& tree,
                                          std::int64_t cap) const {
    std::int64_t total = 1;
    for (node_id n = 0; n < tree.interior_count(); ++n) {
        total *= at(tree, n).count;
        if (total > cap) return cap + 1;
    }
    return total;
}

KernelSet TrinomialSpec::make_kernels(const ScenarioTree& tree) const {
    if (!(epsilon >= 0.0 && epsilon <= 0.25))
        throw std::invalid_argument("trinomial: epsilon must lie in [0, 1/4]");
    if (tree.branching() != 3)
        throw std::invalid_argument("trinomial: branching must be 3");
    const double lo = epsilon;
    const double hi = 0.5 - epsilon;
    return KernelSet::shared(
        tree, {{lo, 1.0 - 2.0 * lo, lo}, {hi, 1.0 - 2.0 * hi, hi}});
}

namespace {

double vertex_dot(const VertexList& list, int k, int n,
                  std::span<const double> child_values) {
    const double* v = list.probs.data() + static_cast<std::size_t>(k) * n;
    double dot = 0.0;
    for (int i = 0; i < n; ++i)
        dot += v[i] * child_values[static_cast<std::size_t>(i)];
    return dot;
}

// Reported optimizer: the lowest index within one rounding-tie of the
// optimum. The returned value is always the true optimum.
int tie_lowest(const VertexList& list, int n,
               std::span<const double> child_values, double best, bool sup) {
    const double tol = 1e-12 * std::max(1.0, std::abs(best));
    for (int k = 0; k < list.count; ++k) {
        const double dot = vertex_dot(list, k, n, child_values);
        if (sup ? dot >= best - tol : dot <= best + tol) return k;
    }
    return 0;
}

} // namespace

StepResult sup_step(const ScenarioTree& tree, const KernelSet& kernels,
                    node_id n, std::span<const double> child_values) {
    const VertexList& list = kernels.at(tree, n);
    const int N = kernels.branching();
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < list.count; ++k)
        best = std::max(best, vertex_dot(list, k, N, child_values));
    return {best, tie_lowest(list, N, child_values, best, true)};
}

StepResult inf_step(const ScenarioTree& tree, const KernelSet& kernels,
                    node_id n, std::span<const double> child_values) {
    const VertexList& list = kernels.at(tree, n);
    const int N = kernels.branching();
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < list.count; ++k)
        best = std::min(best, vertex_dot(list, k, N, child_values));
    return {best, tie_lowest(list, N, child_values, best, false)};
}

std::vector<path_id> PolarSet::ids() const {
    std::vector<path_id> out;
    for (std::size_t p = 0; p < mask_.size(); ++p)
        if (mask_[p]) out.push_back(static_cast<path_id>(p));
    return out;
}

std::int64_t PolarSet::count() const {
    std::int64_t c = 0;
    for (auto m : mask_) c += m != 0;
    return c;
}

namespace {

// dead[child id] = 1 when the edge into that child has probability <= eta
// under every vertex of the parent's list.
std::vector<std::uint8_t> dead_edges(const ScenarioTree& tree,
                                     const KernelSet& kernels, double eta) {
    std::vector<std::uint8_t> dead(
        static_cast<std::size_t>(tree.node_count()), 0);
    const int N = tree.branching();
    for (node_id n = 0; n < tree.interior_count(); ++n) {
        const VertexList& list = kernels.at(tree, n);
        for (int i = 0; i < N; ++i) {
            double best = 0.0;
            for (int k = 0; k < list.count; ++k)
                best = std::max(
                    best, list.vertex(k, N)[static_cast<std::size_t>(i)]);
            if (best <= eta)
                dead[static_cast<std::size_t>(tree.child(n, i))] = 1;
        }
    }
    return dead;
}

} // namespace

PolarSet polar_paths(const ScenarioTree& tree, const KernelSet& kernels,
                     double eta) {
    const auto nodes = polar_nodes(tree, kernels, eta);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(tree.path_count()));
    for (path_id p = 0; p < tree.path_count(); ++p)
        mask[static_cast<std::size_t>(p)] =
            nodes[static_cast<std::size_t>(tree.leaf(p))];
    return PolarSet(std::move(mask));
}

std::vector<std::uint8_t> polar_nodes(const ScenarioTree& tree,
                                      const KernelSet& kernels, double eta) {
    std::vector<std::uint8_t> polar = dead_edges(tree, kernels, eta);
    for (node_id n = 1; n < tree.node_count(); ++n)
        polar[static_cast<std::size_t>(n)] = static_cast<std::uint8_t>(
            polar[static_cast<std::size_t>(n)] |
            polar[static_cast<std::size_t>(tree.parent(n))]);
    return polar;
}

double EnumeratedMeasure::expectation(const RandomVariable& X) const {
    double e = 0.0;
    for (std::size_t p = 0; p < path_prob.size(); ++p)
        e += path_prob[p] * X[static_cast<path_id>(p)];
    return e;
}

MeasureEnumeration::MeasureEnumeration(const ScenarioTree& tree,
                                       const KernelSet& kernels,
                                       std::int64_t budget)
    : tree_(tree), kernels_(kernels),
      total_(kernels.combination_count(tree, budget)) {
    if (total_ > budget)
        throw std::invalid_argument("measure enumeration: budget exceeded");
}

void MeasureEnumeration::for_each(
    const std::function<void(std::span<const int>, std::span<const double>)>&
        fn) const {
    const std::int64_t interior = tree_.interior_count();
    const int N = tree_.branching();
    std::vector<int> choice(static_cast<std::size_t>(interior), 0);
    std::vector<double> node_prob(static_cast<std::size_t>(tree_.node_count()));
    std::vector<double> leaf_prob(static_cast<std::size_t>(tree_.path_count()));
    while (true) {
        node_prob[0] = 1.0;
        for (node_id n = 0; n < interior; ++n) {
            const auto v = kernels_.at(tree_, n).vertex(
                choice[static_cast<std::size_t>(n)], N);
            const node_id c0 = tree_.child_begin(n);
            for (int i = 0; i < N; ++i)
                node_prob[static_cast<std::size_t>(c0 + i)] =
                    node_prob[static_cast<std::size_t>(n)] *
                    v[static_cast<std::size_t>(i)];
        }
        for (path_id p = 0; p < tree_.path_count(); ++p)
            leaf_prob[static_cast<std::size_t>(p)] =
                node_prob[static_cast<std::size_t>(tree_.leaf(p))];
        fn(choice, leaf_prob);
        // odometer increment
        std::int64_t pos = interior - 1;
        while (pos >= 0) {
            auto& c = choice[static_cast<std::size_t>(pos)];
            if (++c < kernels_.at(tree_, pos).count) break;
            c = 0;
            --pos;
        }
        if (pos < 0) return;
    }
}

std::vector<EnumeratedMeasure> enumerate_measures(const ScenarioTree& tree,
                                                  const KernelSet& kernels,
                                                  std::int64_t budget) {
    MeasureEnumeration walk(tree, kernels, budget);
    std::vector<EnumeratedMeasure> out;
    out.reserve(static_cast<std::size_t>(walk.measure_count()));
    walk.for_each([&](std::span<const int> choice,
                      std::span<const double> probs) {
        EnumeratedMeasure m;
        m.choice.assign(choice.begin(), choice.end());
        m.path_prob.assign(probs.begin(), probs.end());
        out.push_back(std::move(m));
    });
    return out;
}

} // namespace slexp
