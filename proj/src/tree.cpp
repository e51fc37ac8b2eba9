#include "slexp/tree.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

namespace slexp {

std::int64_t node_budget() {
    if (const char* env = std::getenv("SLEXP_NODE_BUDGET")) {
        char* end = nullptr;
        const long long v = std::strtoll(env, &end, 10);
        if (end != env && v > 0) return v;
    }
    return kDefaultNodeBudget;
}

ScenarioTree::ScenarioTree(int horizon, int branching, std::int64_t budget)
    : horizon_(horizon), branching_(branching) {
    if (horizon < 1) throw std::invalid_argument("tree: horizon must be >= 1");
    if (branching < 2)
        throw std::invalid_argument("tree: branching must be >= 2");
    offsets_.resize(static_cast<std::size_t>(horizon) + 2);
    pow_.resize(static_cast<std::size_t>(horizon) + 1);
    offsets_[0] = 0;
    std::int64_t level_nodes = 1;
    for (int t = 0; t <= horizon; ++t) {
        pow_[static_cast<std::size_t>(t)] = level_nodes;
        offsets_[static_cast<std::size_t>(t) + 1] =
            offsets_[static_cast<std::size_t>(t)] + level_nodes;
        if (offsets_[static_cast<std::size_t>(t) + 1] > budget)
            throw std::invalid_argument("tree: node budget exceeded");
        if (t < horizon) level_nodes *= branching;
    }
}

int ScenarioTree::level_of(node_id n) const {
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), n);
    return static_cast<int>(it - offsets_.begin()) - 1;
}

node_id ScenarioTree::node_on_path(path_id p, int level) const {
    return offsets_[static_cast<std::size_t>(level)] +
           p / (pow_[static_cast<std::size_t>(horizon_)] /
                pow_[static_cast<std::size_t>(level)]);
}

int ScenarioTree::edge_on_path(path_id p, int level) const {
    const std::int64_t below =
        pow_[static_cast<std::size_t>(horizon_)] /
        pow_[static_cast<std::size_t>(level + 1)];
    return static_cast<int>((p / below) % branching_);
}

AdaptedProcess PredictableProcess::as_adapted(const ScenarioTree& tree) const {
    AdaptedProcess out(tree);
    for (node_id n = 1; n < tree.node_count(); ++n)
        out[n] = at_step(tree.parent(n));
    return out;
}

StoppingTime::StoppingTime(const ScenarioTree& tree,
                           std::vector<node_id> tagged)
    : tagged_ids_(std::move(tagged)),
      tagged_mask_(static_cast<std::size_t>(tree.node_count()), 0) {
    for (node_id n : tagged_ids_) {
        if (n < 0 || n >= tree.node_count())
            throw std::invalid_argument("stopping time: node id out of range");
        tagged_mask_[static_cast<std::size_t>(n)] = 1;
    }
    // Count tags seen on the way down; every leaf must end at exactly one.
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(tree.node_count()));
    for (node_id n = 0; n < tree.node_count(); ++n) {
        const std::uint8_t above =
            n == 0 ? 0 : seen[static_cast<std::size_t>(tree.parent(n))];
        if (above && tagged_mask_[static_cast<std::size_t>(n)])
            throw std::invalid_argument("stopping time: not an antichain");
        seen[static_cast<std::size_t>(n)] =
            above | tagged_mask_[static_cast<std::size_t>(n)];
        if (tree.is_terminal(n) && !seen[static_cast<std::size_t>(n)])
            throw std::invalid_argument("stopping time: path left uncovered");
    }
    std::sort(tagged_ids_.begin(), tagged_ids_.end());
}

StoppingTime StoppingTime::at_level(const ScenarioTree& tree, int level) {
    if (level < 0 || level > tree.horizon())
        throw std::invalid_argument("stopping time: level out of range");
    std::vector<node_id> tagged;
    tagged.reserve(static_cast<std::size_t>(tree.level_size(level)));
    for (std::int64_t k = 0; k < tree.level_size(level); ++k)
        tagged.push_back(tree.level_offset(level) + k);
    return StoppingTime(tree, std::move(tagged));
}

node_id StoppingTime::node_on_path(const ScenarioTree& tree, path_id p) const {
    for (int t = 0; t <= tree.horizon(); ++t) {
        const node_id n = tree.node_on_path(p, t);
        if (is_tagged(n)) return n;
    }
    throw std::logic_error("stopping time: no tagged node on path");
}

int StoppingTime::level_on_path(const ScenarioTree& tree, path_id p) const {
    return tree.level_of(node_on_path(tree, p));
}

bool pathwise_leq(const ScenarioTree& tree, const StoppingTime& S,
                  const StoppingTime& R) {
    for (path_id p = 0; p < tree.path_count(); ++p)
        if (S.level_on_path(tree, p) > R.level_on_path(tree, p)) return false;
    return true;
}

CrossingCounts count_crossings(std::span<const double> path_values,
                               double alpha, double beta) {
    if (!(alpha < beta))
        throw std::invalid_argument("count_crossings: need alpha < beta");
    if (path_values.empty())
        throw std::invalid_argument("count_crossings: empty sequence");
    CrossingCounts out;
    // Upcrossing ladder: hit <= alpha, then hit >= beta; a fresh descent
    // must precede the next count.
    bool below = false;
    for (double v : path_values) {
        if (!below) {
            if (v <= alpha) below = true;
        } else if (v >= beta) {
            ++out.upcrossings;
            below = false;
        }
    }
    bool above = false;
    for (double v : path_values) {
        if (!above) {
            if (v >= beta) above = true;
        } else if (v <= alpha) {
            ++out.downcrossings;
            above = false;
        }
    }
    return out;
}

AdaptedProcess stopped_process(const ScenarioTree& tree,
                               const AdaptedProcess& X, const StoppingTime& S) {
    AdaptedProcess out(tree);
    // frozen[n] = 1 once a tagged node is at or above n; the frozen value
    // propagates down from there.
    std::vector<std::uint8_t> frozen(static_cast<std::size_t>(tree.node_count()));
    for (node_id n = 0; n < tree.node_count(); ++n) {
        const bool parent_frozen =
            n != 0 && frozen[static_cast<std::size_t>(tree.parent(n))];
        if (parent_frozen) {
            frozen[static_cast<std::size_t>(n)] = 1;
            out[n] = out[tree.parent(n)];
        } else {
            frozen[static_cast<std::size_t>(n)] = S.is_tagged(n);
            out[n] = X[n];
        }
    }
    return out;
}

AdaptedProcess edge_weight_process(const ScenarioTree& tree,
                                   std::span<const double> weights) {
    if (static_cast<int>(weights.size()) != tree.branching())
        throw std::invalid_argument(
            "edge_weight_process: need one weight per child");
    AdaptedProcess out(tree);
    for (node_id n = 0; n < tree.interior_count(); ++n) {
        const node_id c0 = tree.child_begin(n);
        for (int i = 0; i < tree.branching(); ++i)
            out[c0 + i] = out[n] + weights[static_cast<std::size_t>(i)];
    }
    return out;
}

AdaptedProcess trinomial_walk(const ScenarioTree& tree) {
    if (tree.branching() != 3)
        throw std::invalid_argument("trinomial walk: branching must be 3");
    const double w[3] = {1.0, 0.0, -1.0};
    return edge_weight_process(tree, w);
}

AdaptedProcess trinomial_quadratic_variation(const ScenarioTree& tree) {
    if (tree.branching() != 3)
        throw std::invalid_argument("trinomial [B]: branching must be 3");
    const double w[3] = {1.0, 0.0, 1.0};
    return edge_weight_process(tree, w);
}

RandomVariable terminal_slice(const ScenarioTree& tree,
                              const AdaptedProcess& X) {
    RandomVariable out(tree);
    for (path_id p = 0; p < tree.path_count(); ++p) out[p] = X[tree.leaf(p)];
    return out;
}

RandomVariable level_slice(const ScenarioTree& tree, const AdaptedProcess& X,
                           int level) {
    RandomVariable out(tree);
    for (path_id p = 0; p < tree.path_count(); ++p)
        out[p] = X[tree.node_on_path(p, level)];
    return out;
}

} // namespace slexp
