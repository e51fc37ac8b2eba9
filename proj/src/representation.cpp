#include "slexp/representation.hpp"

#include "slexp/martingale.hpp"

#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace slexp {

namespace {

// Inverse by Gauss-Jordan with partial pivoting. Returns false on a pivot
// collapsing to zero.
bool invert(std::vector<double> a, int n, std::vector<double>& inv) {
    inv.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(i) * n + i] = 1.0;
    auto A = [&](int r, int c) -> double& {
        return a[static_cast<std::size_t>(r) * n + c];
    };
    auto B = [&](int r, int c) -> double& {
        return inv[static_cast<std::size_t>(r) * n + c];
    };
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(A(r, col)) > std::abs(A(pivot, col))) pivot = r;
        if (A(pivot, col) == 0.0) return false;
        if (pivot != col) {
            for (int c = 0; c < n; ++c) {
                std::swap(A(pivot, c), A(col, c));
                std::swap(B(pivot, c), B(col, c));
            }
        }
        const double d = A(col, col);
        for (int c = 0; c < n; ++c) {
            A(col, c) /= d;
            B(col, c) /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = A(r, col);
            if (f == 0.0) continue;
            for (int c = 0; c < n; ++c) {
                A(r, c) -= f * A(col, c);
                B(r, c) -= f * B(col, c);
            }
        }
    }
    return true;
}

double norm_inf(const std::vector<double>& a, int n) {
    double best = 0.0;
    for (int r = 0; r < n; ++r) {
        double row = 0.0;
        for (int c = 0; c < n; ++c)
            row += std::abs(a[static_cast<std::size_t>(r) * n + c]);
        best = std::max(best, row);
    }
    return best;
}

} // namespace

PhiMap::NodeMatrix PhiMap::prepare(int n, int m, std::vector<double> matrix,
                                   double condition_bound) {
    if (static_cast<int>(matrix.size()) != n * n)
        throw std::invalid_argument("phi map: matrix has wrong shape");
    if (m < 0 || m > n - 1)
        throw std::invalid_argument("phi map: symmetric row count out of range");
    for (int c = 0; c < n; ++c)
        if (matrix[static_cast<std::size_t>(c)] != 1.0)
            throw std::invalid_argument("phi map: first row must be all ones");
    NodeMatrix out;
    out.matrix = matrix;
    if (!invert(std::move(matrix), n, out.inverse))
        throw std::invalid_argument("phi map: matrix is singular");
    const double cond = norm_inf(out.matrix, n) * norm_inf(out.inverse, n);
    if (!(cond <= condition_bound))
        throw std::invalid_argument("phi map: condition number above bound");
    return out;
}

PhiMap PhiMap::constant(const ScenarioTree& tree, int symmetric_rows,
                        std::vector<double> matrix, double condition_bound) {
    std::vector<NodeMatrix> storage;
    storage.push_back(prepare(tree.branching(), symmetric_rows,
                              std::move(matrix), condition_bound));
    return PhiMap(Mode::kConstant, tree.branching(), symmetric_rows,
                  std::move(storage));
}

PhiMap PhiMap::per_level(const ScenarioTree& tree, int symmetric_rows,
                         std::vector<std::vector<double>> matrices,
                         double condition_bound) {
    if (static_cast<int>(matrices.size()) != tree.horizon())
        throw std::invalid_argument("phi map: need one matrix per level");
    std::vector<NodeMatrix> storage;
    storage.reserve(matrices.size());
    for (auto& m : matrices)
        storage.push_back(prepare(tree.branching(), symmetric_rows,
                                  std::move(m), condition_bound));
    return PhiMap(Mode::kPerLevel, tree.branching(), symmetric_rows,
                  std::move(storage));
}

PhiMap PhiMap::per_node(const ScenarioTree& tree, int symmetric_rows,
                        std::vector<std::vector<double>> matrices,
                        double condition_bound) {
    if (static_cast<std::int64_t>(matrices.size()) != tree.interior_count())
        throw std::invalid_argument(
            "phi map: need one matrix per interior node");
    std::vector<NodeMatrix> storage;
    storage.reserve(matrices.size());
    for (auto& m : matrices)
        storage.push_back(prepare(tree.branching(), symmetric_rows,
                                  std::move(m), condition_bound));
    return PhiMap(Mode::kPerNode, tree.branching(), symmetric_rows,
                  std::move(storage));
}

PhiMap PhiMap::trinomial(const ScenarioTree& tree) {
    return constant(tree, 1, {1, 1, 1, 1, 0, -1, 1, 0, 1});
}

double PhiMap::symmetric_increment(const ScenarioTree& tree, node_id n,
                                   std::span<const double> z,
                                   int child) const {
    const NodeMatrix& s = storage(tree, n);
    double dot = 0.0;
    for (int r = 0; r < m_; ++r)
        dot += z[static_cast<std::size_t>(r)] *
               s.matrix[static_cast<std::size_t>(1 + r) * n_ + child];
    return dot;
}

double PhiMap::asymmetric_increment(const ScenarioTree& tree, node_id n,
                                    std::span<const double> z_prime,
                                    int child) const {
    const NodeMatrix& s = storage(tree, n);
    double dot = 0.0;
    const int base = 1 + m_;
    for (int r = 0; r < n_ - m_ - 1; ++r)
        dot += z_prime[static_cast<std::size_t>(r)] *
               s.matrix[static_cast<std::size_t>(base + r) * n_ + child];
    return dot;
}

void PhiMap::validate_symmetric_block(const ScenarioTree& tree,
                                      const KernelSet& kernels,
                                      double tol) const {
    if (kernels.branching() != n_)
        throw std::invalid_argument("phi map: branching mismatch");
    std::vector<double> row(static_cast<std::size_t>(n_));
    for (node_id node = 0; node < tree.interior_count(); ++node) {
        const NodeMatrix& s = storage(tree, node);
        for (int r = 1; r <= m_; ++r) {
            for (int c = 0; c < n_; ++c)
                row[static_cast<std::size_t>(c)] =
                    s.matrix[static_cast<std::size_t>(r) * n_ + c];
            const double hi = sup_step(tree, kernels, node, row).value;
            const double lo = inf_step(tree, kernels, node, row).value;
            if (std::abs(hi) > tol || std::abs(lo) > tol)
                throw std::invalid_argument(
                    "phi map: symmetric row is not a zero-mean increment "
                    "under every kernel");
        }
    }
}

SemimartingaleRep semimartingale_rep(const ScenarioTree& tree,
                                     const AdaptedProcess& X) {
    const int N = tree.branching();
    SemimartingaleRep rep;
    rep.width = N;
    rep.z.resize(static_cast<std::size_t>(tree.interior_count()) * N);
    for (node_id n = 0; n < tree.interior_count(); ++n) {
        const node_id c0 = tree.child_begin(n);
        for (int i = 0; i < N; ++i)
            rep.z[static_cast<std::size_t>(n) * N + i] = X[c0 + i] - X[n];
    }
    return rep;
}

AdaptedProcess reconstruct_from_rep(const ScenarioTree& tree, double x0,
                                    const SemimartingaleRep& rep) {
    AdaptedProcess out(tree);
    out[0] = x0;
    for (node_id n = 0; n < tree.interior_count(); ++n) {
        const node_id c0 = tree.child_begin(n);
        const auto z = rep.at(n);
        for (int i = 0; i < tree.branching(); ++i)
            out[c0 + i] = out[n] + z[static_cast<std::size_t>(i)];
    }
    return out;
}

double g_function(const ScenarioTree& tree, const KernelSet& kernels,
                  const PhiMap& phi, node_id n,
                  std::span<const double> z_prime) {
    const int N = tree.branching();
    double children[64];
    std::vector<double> heap;
    double* buf = children;
    if (N > 64) {
        heap.resize(static_cast<std::size_t>(N));
        buf = heap.data();
    }
    for (int i = 0; i < N; ++i)
        buf[i] = phi.asymmetric_increment(tree, n, z_prime, i);
    return sup_step(tree, kernels, n, {buf, static_cast<std::size_t>(N)}).value;
}

PhiCoordinates phi_coordinates(const ScenarioTree& tree,
                               const AdaptedProcess& X, const PhiMap& phi) {
    const int N = tree.branching();
    const int M = phi.symmetric_rows();
    const int P = N - M - 1;
    PhiCoordinates out;
    out.m = M;
    out.p = P;
    out.wedge.resize(static_cast<std::size_t>(tree.interior_count()));
    out.z_s.resize(static_cast<std::size_t>(tree.interior_count()) * M);
    out.z_prime.resize(static_cast<std::size_t>(tree.interior_count()) * P);

    const std::int64_t interior = tree.interior_count();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (interior >= 256)
#endif
    for (node_id n = 0; n < interior; ++n) {
        const node_id c0 = tree.child_begin(n);
        const auto inv = phi.inverse(tree, n);
        // coords = Z^T Phi^{-1}; coords[j] = sum_i Z_i inv[i][j].
        for (int j = 0; j < N; ++j) {
            double c = 0.0;
            for (int i = 0; i < N; ++i)
                c += (X[c0 + i] - X[n]) *
                     inv[static_cast<std::size_t>(i) * N + j];
            if (j == 0)
                out.wedge[static_cast<std::size_t>(n)] = c;
            else if (j <= M)
                out.z_s[static_cast<std::size_t>(n) * M + (j - 1)] = c;
            else
                out.z_prime[static_cast<std::size_t>(n) * P + (j - 1 - M)] = c;
        }
    }
    return out;
}

RepresentationTriple martingale_rep(const ScenarioTree& tree,
                                    const KernelSet& kernels,
                                    const AdaptedProcess& X, const PhiMap& phi,
                                    double tol) {
    if (classify(tree, kernels, X, tol) != ProcessClass::kMartingale)
        throw std::invalid_argument("martingale representation: X is not a "
                                    "martingale");
    phi.validate_symmetric_block(tree, kernels, tol);

    RepresentationTriple rep;
    rep.coords = phi_coordinates(tree, X, phi);
    rep.g.resize(static_cast<std::size_t>(tree.interior_count()));
    for (node_id n = 0; n < tree.interior_count(); ++n) {
        const double g =
            g_function(tree, kernels, phi, n, rep.coords.asymmetric_at(n));
        rep.g[static_cast<std::size_t>(n)] = g;
        if (std::abs(rep.coords.wedge[static_cast<std::size_t>(n)] + g) > tol)
            throw std::runtime_error(
                "martingale representation: wedge coordinate does not match "
                "-G(z'); kernel and Phi are inconsistent");
        const node_id c0 = tree.child_begin(n);
        for (int i = 0; i < tree.branching(); ++i) {
            const double rebuilt =
                X[n] +
                phi.symmetric_increment(tree, n, rep.coords.symmetric_at(n),
                                        i) +
                phi.asymmetric_increment(tree, n, rep.coords.asymmetric_at(n),
                                         i) -
                g;
            if (std::abs(rebuilt - X[c0 + i]) > tol)
                throw std::runtime_error(
                    "martingale representation: edge reconstruction exceeded "
                    "tolerance");
        }
    }
    return rep;
}

} // namespace slexp
