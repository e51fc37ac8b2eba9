// Per-node ambiguity sets of one-step transition kernels, stored as polytope
// vertex lists, plus the brute-force measure enumeration that realizes the
// rectangular family behind the sup-of-expectations representation.
#pragma once

#include "slexp/tree.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace slexp {

/// Default cap on the number of vertex-selection combinations the measure
/// enumeration will walk.
inline constexpr std::int64_t kDefaultOracleBudget = 1'000'000;

/// Nonempty list of probability vectors in R^N (the vertices of one node's
/// ambiguity polytope), stored flat.
struct VertexList {
    std::vector<double> probs; // count * N entries, vertex-major
    int count = 0;

    std::span<const double> vertex(int k, int branching) const {
        return {probs.data() + static_cast<std::size_t>(k) * branching,
                static_cast<std::size_t>(branching)};
    }
};

/**
 * Ambiguity sets of transition kernels for every interior node. A single
 * list may be shared by the whole tree or by each level; suprema over the
 * induced measure family are attained at vertices because the objective is
 * linear in the kernel. Immutable after construction; safe to share across
 * threads.
 */
class KernelSet {
  public:
    /// One vertex list shared by all interior nodes.
    static KernelSet shared(const ScenarioTree& tree,
                            std::vector<std::vector<double>> vertices);
    /// One vertex list per level 0..T-1.
    static KernelSet per_level(const ScenarioTree& tree,
                               std::vector<std::vector<std::vector<double>>> lists);
    /// One vertex list per interior node, indexed by node id.
    static KernelSet per_node(const ScenarioTree& tree,
                              std::vector<std::vector<std::vector<double>>> lists);

    int branching() const { return branching_; }

    const VertexList& at(const ScenarioTree& tree, node_id n) const {
        switch (mode_) {
        case Mode::kShared: return lists_[0];
        case Mode::kPerLevel:
            return lists_[static_cast<std::size_t>(tree.level_of(n))];
        default: return lists_[static_cast<std::size_t>(n)];
        }
    }

    /// All vertex lists coincide up to `tol` with a single kernel, so the
    /// expectation is linear.
    bool is_effectively_linear(const ScenarioTree& tree,
                               double tol = 1e-12) const;

    /// Product of vertex-list sizes over all interior nodes; returns cap+1
    /// as soon as the product exceeds `cap`.
    std::int64_t combination_count(const ScenarioTree& tree,
                                   std::int64_t cap) const;

  private:
    enum class Mode { kShared, kPerLevel, kPerNode };

    KernelSet(Mode mode, int branching, std::vector<VertexList> lists)
        : mode_(mode), branching_(branching), lists_(std::move(lists)) {}

    static VertexList make_list(int branching,
                                const std::vector<std::vector<double>>& vertices);

    Mode mode_;
    int branching_;
    std::vector<VertexList> lists_;
};

/// Trinomial interval family: kernels (p, 1-2p, p) with p ranging over
/// [epsilon, 1/2 - epsilon]; compiled to the two endpoint vertices.
struct TrinomialSpec {
    double epsilon = 0.1;

    /// Throws unless epsilon lies in [0, 1/4] and the tree is trinomial.
    KernelSet make_kernels(const ScenarioTree& tree) const;
};

struct StepResult {
    double value = 0.0;
    int vertex = 0; // lowest index attaining the optimum
};

/// max over vertices v of v . child_values (one backward step of the upper
/// expectation). Ties resolve to the lowest vertex index.
StepResult sup_step(const ScenarioTree& tree, const KernelSet& kernels,
                    node_id n, std::span<const double> child_values);

/// min over vertices; equals -sup_step(-child_values) exactly.
StepResult inf_step(const ScenarioTree& tree, const KernelSet& kernels,
                    node_id n, std::span<const double> child_values);

/// Per-path polar flags. A path is polar iff one of its edges has
/// probability <= eta under every vertex of its node's list; by
/// rectangularity those are exactly the paths of supremum probability zero.
class PolarSet {
  public:
    PolarSet() = default;
    explicit PolarSet(std::vector<std::uint8_t> mask) : mask_(std::move(mask)) {}

    bool is_polar(path_id p) const {
        return !mask_.empty() && mask_[static_cast<std::size_t>(p)] != 0;
    }
    std::vector<path_id> ids() const;
    std::int64_t count() const;
    bool empty() const { return count() == 0; }

  private:
    std::vector<std::uint8_t> mask_;
};

PolarSet polar_paths(const ScenarioTree& tree, const KernelSet& kernels,
                     double eta = 0.0);

/// A node is polar when every path through it is (some edge above it is dead).
std::vector<std::uint8_t> polar_nodes(const ScenarioTree& tree,
                                      const KernelSet& kernels,
                                      double eta = 0.0);

/// One measure of the rectangular family: a vertex choice per interior node
/// and the induced path probabilities.
struct EnumeratedMeasure {
    std::vector<int> choice;       // vertex index per interior node
    std::vector<double> path_prob; // per path, products along the path

    double expectation(const RandomVariable& X) const;
};

/**
 * Walks every vertex-selection combination without materializing the list.
 * Throws std::invalid_argument if the combination count exceeds `budget`.
 */
class MeasureEnumeration {
  public:
    MeasureEnumeration(const ScenarioTree& tree, const KernelSet& kernels,
                       std::int64_t budget = kDefaultOracleBudget);

    std::int64_t measure_count() const { return total_; }

    /// Calls fn(choice, path_probabilities) for every measure, in
    /// odometer order over the choice vector.
    void for_each(const std::function<void(std::span<const int>,
                                           std::span<const double>)>& fn) const;

  private:
    const ScenarioTree& tree_;
    const KernelSet& kernels_;
    std::int64_t total_;
};

/// Materialized enumeration, for tests and small instances.
std::vector<EnumeratedMeasure> enumerate_measures(
    const ScenarioTree& tree, const KernelSet& kernels,
    std::int64_t budget = kDefaultOracleBudget);

} // namespace slexp
