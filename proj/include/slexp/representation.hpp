// Semimartingale representation, the invertible per-node map splitting
// increments into symmetric and asymmetric coordinates, and the martingale
// representation with its one-step cost function G.
#pragma once

#include "slexp/expectation.hpp"

#include <span>
#include <vector>

namespace slexp {

/**
 * Per-node invertible N x N map with row 0 all ones, rows 1..M the symmetric
 * block (each row has one-step expectation zero under every kernel, upper and
 * lower), and rows M+1..N-1 the asymmetric block. The inverse is cached at
 * construction; matrices with an infinity-norm condition number above the
 * bound are rejected.
 */
class PhiMap {
  public:
    static constexpr double kDefaultConditionBound = 1e8;

    /// One matrix shared by every interior node (row-major, N*N entries).
    static PhiMap constant(const ScenarioTree& tree, int symmetric_rows,
                           std::vector<double> matrix,
                           double condition_bound = kDefaultConditionBound);
    /// One matrix per level 0..T-1.
    static PhiMap per_level(const ScenarioTree& tree, int symmetric_rows,
                            std::vector<std::vector<double>> matrices,
                            double condition_bound = kDefaultConditionBound);
    /// One matrix per interior node.
    static PhiMap per_node(const ScenarioTree& tree, int symmetric_rows,
                           std::vector<std::vector<double>> matrices,
                           double condition_bound = kDefaultConditionBound);

    /// Standard trinomial map [1; 1 0 -1; 1 0 1] with M = 1.
    static PhiMap trinomial(const ScenarioTree& tree);

    int dimension() const { return n_; }
    int symmetric_rows() const { return m_; }
    int asymmetric_rows() const { return n_ - m_ - 1; }

    /// Row-major matrix at node (N*N doubles).
    std::span<const double> matrix(const ScenarioTree& tree, node_id n) const {
        return {storage(tree, n).matrix.data(),
                static_cast<std::size_t>(n_) * n_};
    }
    std::span<const double> inverse(const ScenarioTree& tree, node_id n) const {
        return {storage(tree, n).inverse.data(),
                static_cast<std::size_t>(n_) * n_};
    }

    /// Entry (row, col) of the matrix at node n. Rows 1..M are the symmetric
    /// block, rows M+1..N-1 the asymmetric block.
    double entry(const ScenarioTree& tree, node_id n, int row, int col) const {
        return storage(tree, n).matrix[static_cast<std::size_t>(row) * n_ +
                                       col];
    }

    /// z . (symmetric block column i): the symmetric coordinate increment
    /// observed on child i.
    double symmetric_increment(const ScenarioTree& tree, node_id n,
                               std::span<const double> z, int child) const;
    /// z' . (asymmetric block column i).
    double asymmetric_increment(const ScenarioTree& tree, node_id n,
                                std::span<const double> z_prime,
                                int child) const;

    /**
     * Validates the symmetric block against a kernel set: at every interior
     * node each symmetric row r must satisfy sup_step(row) = inf_step(row)
     * = 0 within tol, which is exactly the one-step symmetric-martingale
     * criterion for its running sum. Throws std::invalid_argument otherwise.
     */
    void validate_symmetric_block(const ScenarioTree& tree,
                                  const KernelSet& kernels,
                                  double tol = kTol) const;

  private:
    struct NodeMatrix {
        std::vector<double> matrix;
        std::vector<double> inverse;
    };
    enum class Mode { kConstant, kPerLevel, kPerNode };

    PhiMap(Mode mode, int n, int m, std::vector<NodeMatrix> storage)
        : mode_(mode), n_(n), m_(m), storage_(std::move(storage)) {}

    static NodeMatrix prepare(int n, int m, std::vector<double> matrix,
                              double condition_bound);

    const NodeMatrix& storage(const ScenarioTree& tree, node_id n) const {
        switch (mode_) {
        case Mode::kConstant: return storage_[0];
        case Mode::kPerLevel:
            return storage_[static_cast<std::size_t>(tree.level_of(n))];
        default: return storage_[static_cast<std::size_t>(n)];
        }
    }

    Mode mode_;
    int n_;
    int m_;
    std::vector<NodeMatrix> storage_;
};

/// Per-interior-node N-vectors, stored flat (interior_count * N doubles).
struct SemimartingaleRep {
    std::vector<double> z;
    int width = 0;

    std::span<const double> at(node_id n) const {
        return {z.data() + static_cast<std::size_t>(n) * width,
                static_cast<std::size_t>(width)};
    }
};

/// Unique Z with X_{t+1}(child_i) = X_t + Z_t[i] on every edge:
/// Z_t[i] = X_{t+1}(child_i) - X_t(node).
SemimartingaleRep semimartingale_rep(const ScenarioTree& tree,
                                     const AdaptedProcess& X);

/// Reconstruct the process from X_0 and the representation (exact).
AdaptedProcess reconstruct_from_rep(const ScenarioTree& tree, double x0,
                                    const SemimartingaleRep& rep);

/// G_t(z') = E_t(z' . asymmetric increment), the sublinear one-step cost of
/// the asymmetric coordinates.
double g_function(const ScenarioTree& tree, const KernelSet& kernels,
                  const PhiMap& phi, node_id n, std::span<const double> z_prime);

/// Increment coordinates in the Phi basis at every interior node:
/// [wedge | symmetric | asymmetric] = Z^T Phi^{-1}.
struct PhiCoordinates {
    std::vector<double> wedge;   // per interior node
    std::vector<double> z_s;     // interior_count * M, flat
    std::vector<double> z_prime; // interior_count * (N - M - 1), flat
    int m = 0;
    int p = 0; // N - M - 1

    std::span<const double> symmetric_at(node_id n) const {
        return {z_s.data() + static_cast<std::size_t>(n) * m,
                static_cast<std::size_t>(m)};
    }
    std::span<const double> asymmetric_at(node_id n) const {
        return {z_prime.data() + static_cast<std::size_t>(n) * p,
                static_cast<std::size_t>(p)};
    }
};

/// Pure change of basis (no kernel involved); defined for any adapted X.
PhiCoordinates phi_coordinates(const ScenarioTree& tree,
                               const AdaptedProcess& X, const PhiMap& phi);

/// Coordinates of a martingale: wedge must equal -G_t(z') at every node.
struct RepresentationTriple {
    PhiCoordinates coords;
    std::vector<double> g; // G_t(z') per interior node
};

/**
 * Martingale representation: requires classify(X) == martingale and a Phi
 * with a valid symmetric block. Verifies wedge = -G_t(z') and the edge
 * reconstruction X_{t+1} = X_t + z_s . dM + z' . dN - G_t(z') within tol;
 * a breach signals an inconsistent kernel/Phi pair and throws.
 */
RepresentationTriple martingale_rep(const ScenarioTree& tree,
                                    const KernelSet& kernels,
                                    const AdaptedProcess& X, const PhiMap& phi,
                                    double tol = kTol);

} // namespace slexp
