// Finite-horizon scenario trees with fixed branching, node/path indexing,
// adapted and predictable processes, random variables and stopping times.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace slexp {

using node_id = std::int64_t;
using path_id = std::int64_t;

/// Default cap on the total node count of a tree (overridable per call or
/// via the SLEXP_NODE_BUDGET environment variable, see node_budget()).
inline constexpr std::int64_t kDefaultNodeBudget = std::int64_t{1} << 20;

/// Effective node budget: SLEXP_NODE_BUDGET if set, else the default.
std::int64_t node_budget();

/**
 * Complete N-ary tree of depth T with level-order node ids.
 *
 * Root has id 0; level t holds N^t nodes; the children of the node with
 * rank r at level t are the N consecutive ids starting at
 * level_offset(t+1) + r*N. All interior nodes therefore precede all
 * terminal nodes. Immutable after construction.
 */
class ScenarioTree {
  public:
    /// Throws std::invalid_argument on T < 1, N < 2, or budget overflow.
    ScenarioTree(int horizon, int branching,
                 std::int64_t budget = node_budget());

    int horizon() const { return horizon_; }
    int branching() const { return branching_; }

    std::int64_t node_count() const { return offsets_[horizon_ + 1]; }
    /// Nodes strictly above the terminal level; their ids are [0, interior_count).
    std::int64_t interior_count() const { return offsets_[horizon_]; }
    std::int64_t path_count() const { return level_size(horizon_); }

    std::int64_t level_offset(int level) const { return offsets_[level]; }
    std::int64_t level_size(int level) const {
        return offsets_[level + 1] - offsets_[level];
    }

    int level_of(node_id n) const;
    std::int64_t rank_of(node_id n) const { return n - offsets_[level_of(n)]; }

    bool is_terminal(node_id n) const { return n >= interior_count(); }

    node_id child(node_id n, int i) const {
        const int t = level_of(n);
        return offsets_[t + 1] + (n - offsets_[t]) * branching_ + i;
    }
    /// First child id; the N children are contiguous.
    node_id child_begin(node_id n) const { return child(n, 0); }
    node_id parent(node_id n) const {
        const int t = level_of(n);
        return offsets_[t - 1] + (n - offsets_[t]) / branching_;
    }

    /// Leaf node of a path (paths are indexed by terminal-node rank).
    node_id leaf(path_id p) const { return interior_count() + p; }
    path_id path_of_leaf(node_id n) const { return n - interior_count(); }

    /// Node visited by path p at the given level.
    node_id node_on_path(path_id p, int level) const;
    /// Child index taken by path p when stepping from `level` to level+1.
    int edge_on_path(path_id p, int level) const;

  private:
    int horizon_;
    int branching_;
    std::vector<std::int64_t> offsets_; // offsets_[t] = id of first level-t node
    std::vector<std::int64_t> pow_;     // pow_[k] = N^k
};

/// One real value per node (structural F_t-measurability).
class AdaptedProcess {
  public:
    AdaptedProcess() = default;
    explicit AdaptedProcess(const ScenarioTree& tree, double fill = 0.0)
        : values_(static_cast<std::size_t>(tree.node_count()), fill) {}
    explicit AdaptedProcess(std::vector<double> values)
        : values_(std::move(values)) {}

    double operator[](node_id n) const {
        return values_[static_cast<std::size_t>(n)];
    }
    double& operator[](node_id n) { return values_[static_cast<std::size_t>(n)]; }

    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

  private:
    std::vector<double> values_;
};

/// One real value per interior node, read as the time-(t+1) value that is
/// already known at the level-t node it is attached to. The implicit time-0
/// value is 0 (compensators start at zero by definition).
class PredictableProcess {
  public:
    PredictableProcess() = default;
    explicit PredictableProcess(const ScenarioTree& tree, double fill = 0.0)
        : values_(static_cast<std::size_t>(tree.interior_count()), fill) {}

    /// Value at time level_of(n)+1, attached to interior node n.
    double at_step(node_id n) const {
        return values_[static_cast<std::size_t>(n)];
    }
    double& at_step(node_id n) { return values_[static_cast<std::size_t>(n)]; }

    /// Value of the process at node n's own time (0 at the root).
    double at_node(const ScenarioTree& tree, node_id n) const {
        return n == 0 ? 0.0 : at_step(tree.parent(n));
    }

    /// Expand to an AdaptedProcess (value 0 at the root).
    AdaptedProcess as_adapted(const ScenarioTree& tree) const;

    std::size_t size() const { return values_.size(); }

  private:
    std::vector<double> values_;
};

/// One real value per terminal node, i.e. per path. On a finite tree this
/// is the whole space of random variables.
class RandomVariable {
  public:
    RandomVariable() = default;
    explicit RandomVariable(const ScenarioTree& tree, double fill = 0.0)
        : values_(static_cast<std::size_t>(tree.path_count()), fill) {}
    explicit RandomVariable(std::vector<double> values)
        : values_(std::move(values)) {}

    double operator[](path_id p) const {
        return values_[static_cast<std::size_t>(p)];
    }
    double& operator[](path_id p) { return values_[static_cast<std::size_t>(p)]; }

    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

  private:
    std::vector<double> values_;
};

/**
 * A stopping time as a path-covering antichain of nodes: every root-to-leaf
 * path visits exactly one tagged node, and the value of the stopping time on
 * a path is the level of that node.
 */
class StoppingTime {
  public:
    /// Throws std::invalid_argument unless `tagged` is an antichain covering
    /// every path of the tree.
    StoppingTime(const ScenarioTree& tree, std::vector<node_id> tagged);

    /// Deterministic stopping time identically equal to `level`.
    static StoppingTime at_level(const ScenarioTree& tree, int level);

    bool is_tagged(node_id n) const {
        return tagged_mask_[static_cast<std::size_t>(n)] != 0;
    }
    const std::vector<node_id>& tagged() const { return tagged_ids_; }

    /// The unique tagged node on path p.
    node_id node_on_path(const ScenarioTree& tree, path_id p) const;
    /// Value of the stopping time on path p.
    int level_on_path(const ScenarioTree& tree, path_id p) const;

  private:
    std::vector<node_id> tagged_ids_;
    std::vector<std::uint8_t> tagged_mask_;
};

/// First time X enters {x : pred(x)}, capped at the horizon.
template <class Pred>
StoppingTime hitting_time(const ScenarioTree& tree, const AdaptedProcess& X,
                          Pred pred) {
    std::vector<node_id> tagged;
    std::vector<std::uint8_t> covered(
        static_cast<std::size_t>(tree.node_count()), 0);
    for (node_id n = 0; n < tree.node_count(); ++n) {
        if (n != 0 && covered[static_cast<std::size_t>(tree.parent(n))]) {
            covered[static_cast<std::size_t>(n)] = 1;
            continue;
        }
        if (pred(X[n]) || tree.is_terminal(n)) {
            covered[static_cast<std::size_t>(n)] = 1;
            tagged.push_back(n);
        }
    }
    return StoppingTime(tree, std::move(tagged));
}

/// True if S <= R on every path.
bool pathwise_leq(const ScenarioTree& tree, const StoppingTime& S,
                  const StoppingTime& R);

struct CrossingCounts {
    int upcrossings = 0;
    int downcrossings = 0;
};

/**
 * Completed crossings of [alpha, beta] by a value sequence, counted by the
 * stopping-time ladder: an upcrossing is a passage from a value <= alpha to
 * a later value >= beta, a downcrossing the reverse. Throws on alpha >= beta
 * or an empty sequence.
 */
CrossingCounts count_crossings(std::span<const double> path_values,
                               double alpha, double beta);

/// X stopped at S: on each path, values are frozen from the tagged node on.
AdaptedProcess stopped_process(const ScenarioTree& tree,
                               const AdaptedProcess& X, const StoppingTime& S);

/// Cumulative sum of per-edge weights: X(root) = 0,
/// X(child_i(n)) = X(n) + weights[i]. Weights must have size N.
AdaptedProcess edge_weight_process(const ScenarioTree& tree,
                                   std::span<const double> weights);

/// Trinomial random walk B (edge weights +1, 0, -1; requires N = 3).
AdaptedProcess trinomial_walk(const ScenarioTree& tree);
/// Quadratic variation [B] of the trinomial walk (edge weights 1, 0, 1).
AdaptedProcess trinomial_quadratic_variation(const ScenarioTree& tree);

/// Terminal slice of an adapted process as a random variable.
RandomVariable terminal_slice(const ScenarioTree& tree,
                              const AdaptedProcess& X);

/// F_t-measurable slice of an adapted process, lifted to a per-path variable.
RandomVariable level_slice(const ScenarioTree& tree, const AdaptedProcess& X,
                           int level);

} // namespace slexp
