#include "slexp/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace slexp {

RandomVariable random_variable(const ScenarioTree& tree, Rng& rng, double lo,
                               double hi) {
    RandomVariable out(tree);
    for (double& v : out.values()) v = rng.uniform(lo, hi);
    return out;
}

AdaptedProcess random_adapted(const ScenarioTree& tree, Rng& rng, double lo,
                              double hi) {
    AdaptedProcess out(tree);
    for (double& v : out.values()) v = rng.uniform(lo, hi);
    return out;
}

KernelSet random_kernels(const ScenarioTree& tree, Rng& rng,
                         const RandomKernelOptions& opts) {
    const int N = tree.branching();
    std::vector<std::vector<std::vector<double>>> lists(
        static_cast<std::size_t>(tree.interior_count()));
    std::int64_t combos = 1;
    for (auto& list : lists) {
        int count = static_cast<int>(rng.uniform_int(1, opts.max_vertices));
        if (opts.combo_cap > 0 && combos * count > opts.combo_cap) count = 1;
        combos *= count;
        list.resize(static_cast<std::size_t>(count));
        for (auto& vertex : list) {
            vertex.resize(static_cast<std::size_t>(N));
            double sum = 0.0;
            for (double& x : vertex) {
                // Exponential draws normalize to a Dirichlet(1,...,1) sample.
                x = -std::log(1.0 - rng.uniform()) + opts.min_entry;
                sum += x;
            }
            for (double& x : vertex) x /= sum;
        }
    }
    return KernelSet::per_node(tree, std::move(lists));
}

StoppingTime random_stopping_time(const ScenarioTree& tree, Rng& rng,
                                  double stop_prob) {
    std::vector<node_id> tagged;
    std::vector<std::uint8_t> covered(
        static_cast<std::size_t>(tree.node_count()), 0);
    for (node_id n = 0; n < tree.node_count(); ++n) {
        if (n != 0 && covered[static_cast<std::size_t>(tree.parent(n))]) {
            covered[static_cast<std::size_t>(n)] = 1;
            continue;
        }
        if (tree.is_terminal(n) || rng.uniform() < stop_prob) {
            covered[static_cast<std::size_t>(n)] = 1;
            tagged.push_back(n);
        }
    }
    return StoppingTime(tree, std::move(tagged));
}

StoppingTime random_stopping_time_after(const ScenarioTree& tree,
                                        const StoppingTime& S, Rng& rng,
                                        double stop_prob) {
    std::vector<node_id> tagged;
    // Below (or at) a node tagged by S, restart the stopping draw.
    std::vector<std::uint8_t> active(
        static_cast<std::size_t>(tree.node_count()), 0);
    std::vector<std::uint8_t> covered(
        static_cast<std::size_t>(tree.node_count()), 0);
    for (node_id n = 0; n < tree.node_count(); ++n) {
        const bool was_active =
            S.is_tagged(n) ||
            (n != 0 && active[static_cast<std::size_t>(tree.parent(n))]);
        active[static_cast<std::size_t>(n)] = was_active;
        if (!was_active) continue;
        if (n != 0 && covered[static_cast<std::size_t>(tree.parent(n))]) {
            covered[static_cast<std::size_t>(n)] = 1;
            continue;
        }
        if (tree.is_terminal(n) || rng.uniform() < stop_prob) {
            covered[static_cast<std::size_t>(n)] = 1;
            tagged.push_back(n);
        }
    }
    return StoppingTime(tree, std::move(tagged));
}

AdaptedProcess random_martingale(const ScenarioTree& tree,
                                 const KernelSet& kernels, Rng& rng) {
    return conditional_expectation(tree, kernels, random_variable(tree, rng))
        .values;
}

namespace {

AdaptedProcess drifted_martingale(const ScenarioTree& tree,
                                  const KernelSet& kernels, Rng& rng,
                                  double sign) {
    AdaptedProcess X = random_martingale(tree, kernels, rng);
    // Predictable drift: one nonnegative increment per interior node, shared
    // by its children, accumulated down the tree.
    AdaptedProcess drift(tree);
    for (node_id n = 0; n < tree.interior_count(); ++n) {
        const double step = rng.uniform(0.0, 0.5);
        const node_id c0 = tree.child_begin(n);
        for (int i = 0; i < tree.branching(); ++i)
            drift[c0 + i] = drift[n] + step;
    }
    for (node_id n = 0; n < tree.node_count(); ++n) X[n] += sign * drift[n];
    return X;
}

} // namespace

AdaptedProcess random_submartingale(const ScenarioTree& tree,
                                    const KernelSet& kernels, Rng& rng) {
    return drifted_martingale(tree, kernels, rng, +1.0);
}

AdaptedProcess random_supermartingale(const ScenarioTree& tree,
                                      const KernelSet& kernels, Rng& rng) {
    return drifted_martingale(tree, kernels, rng, -1.0);
}

namespace {

// Append v minus its projection onto the rows of basis (orthonormal) if the
// remainder is numerically independent; returns true when kept.
bool gram_schmidt_push(std::vector<std::vector<double>>& basis,
                       std::vector<double> v) {
    for (const auto& b : basis) {
        double dot = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) dot += b[i] * v[i];
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * b[i];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-9) return false;
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
    return true;
}

} // namespace

PhiMap random_phi_map(const ScenarioTree& tree, const KernelSet& kernels,
                      int max_symmetric_rows) {
    const int N = tree.branching();
    // complement_[n] = orthonormal basis of span(vertices at n)^perp.
    std::vector<std::vector<std::vector<double>>> complements(
        static_cast<std::size_t>(tree.interior_count()));
    int m = N - 1;
    for (node_id n = 0; n < tree.interior_count(); ++n) {
        const VertexList& list = kernels.at(tree, n);
        std::vector<std::vector<double>> span_basis;
        for (int k = 0; k < list.count; ++k) {
            const auto v = list.vertex(k, N);
            gram_schmidt_push(span_basis, {v.begin(), v.end()});
        }
        auto& comp = complements[static_cast<std::size_t>(n)];
        std::vector<std::vector<double>> full = span_basis;
        for (int i = 0; i < N; ++i) {
            std::vector<double> e(static_cast<std::size_t>(N), 0.0);
            e[static_cast<std::size_t>(i)] = 1.0;
            if (gram_schmidt_push(full, std::move(e)))
                comp.push_back(full.back());
        }
        m = std::min(m, static_cast<int>(comp.size()));
    }
    if (max_symmetric_rows >= 0) m = std::min(m, max_symmetric_rows);

    std::vector<std::vector<double>> matrices(
        static_cast<std::size_t>(tree.interior_count()));
    for (node_id n = 0; n < tree.interior_count(); ++n) {
        const auto& comp = complements[static_cast<std::size_t>(n)];
        std::vector<std::vector<double>> rows;
        rows.emplace_back(static_cast<std::size_t>(N), 1.0);
        for (int r = 0; r < m; ++r) rows.push_back(comp[static_cast<std::size_t>(r)]);
        // Complete to an invertible matrix: leftover complement vectors
        // first, then unit vectors orthogonalized against what is chosen.
        std::vector<std::vector<double>> chosen_unit;
        {
            std::vector<double> ones(static_cast<std::size_t>(N),
                                     1.0 / std::sqrt(static_cast<double>(N)));
            chosen_unit.push_back(std::move(ones));
        }
        for (std::size_t r = 1; r < rows.size(); ++r)
            gram_schmidt_push(chosen_unit, rows[r]);
        for (std::size_t r = static_cast<std::size_t>(m); r < comp.size();
             ++r) {
            if (static_cast<int>(rows.size()) == N) break;
            if (gram_schmidt_push(chosen_unit, comp[r]))
                rows.push_back(chosen_unit.back());
        }
        for (int i = 0; i < N && static_cast<int>(rows.size()) < N; ++i) {
            std::vector<double> e(static_cast<std::size_t>(N), 0.0);
            e[static_cast<std::size_t>(i)] = 1.0;
            if (gram_schmidt_push(chosen_unit, std::move(e)))
                rows.push_back(chosen_unit.back());
        }
        if (static_cast<int>(rows.size()) != N)
            throw std::logic_error("phi sampling: completion failed");
        auto& flat = matrices[static_cast<std::size_t>(n)];
        flat.reserve(static_cast<std::size_t>(N) * N);
        for (const auto& row : rows)
            flat.insert(flat.end(), row.begin(), row.end());
    }
    return PhiMap::per_node(tree, m, std::move(matrices));
}

AdaptedProcess random_symmetric_martingale(const ScenarioTree& tree,
                                           const PhiMap& phi, Rng& rng) {
    const int M = phi.symmetric_rows();
    AdaptedProcess Y(tree);
    std::vector<double> zeta(static_cast<std::size_t>(M));
    for (node_id n = 0; n < tree.interior_count(); ++n) {
        for (double& z : zeta) z = rng.uniform(-1.0, 1.0);
        const node_id c0 = tree.child_begin(n);
        for (int i = 0; i < tree.branching(); ++i)
            Y[c0 + i] = Y[n] + phi.symmetric_increment(tree, n, zeta, i);
    }
    return Y;
}

ConvexPieces random_convex_pieces(Rng& rng, int min_pieces, int max_pieces) {
    const int count =
        static_cast<int>(rng.uniform_int(min_pieces, max_pieces));
    ConvexPieces out;
    double slope = rng.uniform(-3.0, -1.0);
    for (int i = 0; i < count; ++i) {
        out.slopes.push_back(slope);
        out.intercepts.push_back(rng.uniform(-1.0, 1.0));
        slope += rng.uniform(0.25, 2.0);
    }
    return out;
}

} // namespace slexp
