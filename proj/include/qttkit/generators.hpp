#pragma once

#include <functional>

#include "qttkit/decompose.hpp"

namespace qtt {

enum class SamplingRule { left, midpoint };

/// Uniform 1-D grid with N points of step h starting at `origin`.
/// Point i (0-based) is origin + i h (left) or origin + (i + 1/2) h (midpoint).
struct Grid1D {
    Index n = 0;
    double h = 0.0;
    double origin = 0.0;
    SamplingRule rule = SamplingRule::midpoint;

    static Grid1D on_interval(double a, double b, Index n, SamplingRule rule = SamplingRule::midpoint);
    double point(Index i) const;
    Vector points() const;
};

/// Sinc-quadrature weights and nodes for 1/lambda = int_R e^u exp(-lambda e^u) du:
/// t_k = e^{k s}, c_k = s t_k, s = pi / sqrt(M), k = -M..M.
struct ExpSumOperator {
    int m = 0;
    double step = 0.0;
    Vector nodes;    // t_k, ascending in k
    Vector weights;  // c_k
    std::vector<double> alpha;  // per-mode coefficients

    static ExpSumOperator sinc(int m, std::vector<double> alpha);
    Index terms() const { return nodes.size(); }
    /// Quadrature value of 1/lambda.
    double inverse(double lambda) const;
};

// Function-sampled QTT vectors ---------------------------------------------------

/// Rank-1 QTT of [z^0, z^1, ..., z^{N-1}], N = q^L.
TtTensor qtt_exponential(double z, int q, int levels);
/// Rank-2 QTT of sin(omega n + phase), n = 0..N-1.
TtTensor qtt_trig(double omega, int q, int levels, double phase = 0.0);
/// Samples f on the grid, folds with base q, compresses by TT-SVD.
TtTensor qtt_from_samples(const std::function<double(double)>& f, const Grid1D& grid, int q,
                          const TruncationPolicy& policy);
std::vector<double> sample(const std::function<double(double)>& f, const Grid1D& grid);

// Laplacians ---------------------------------------------------------------------

/// tridiag{-1, 2, -1} of size N (Dirichlet, unscaled).
Matrix laplacian_1d(Index n);

/// sum_l alpha_l I (x) ... (x) Delta_1 (x) ... (x) I as d Kronecker terms.
CanonicalOperator laplacian_canonical(std::size_t d, Index n);
CanonicalOperator anisotropic_laplacian_canonical(const std::vector<double>& alpha, Index n);

/// Same operator as a TT-matrix with bond ranks (1, 2, ..., 2, 1).
TtMatrix laplacian_tt(std::size_t d, Index n);
TtMatrix anisotropic_laplacian_tt(const std::vector<double>& alpha, Index n);
/// Block cores [aD I], [[I 0],[aD I]], [I; aD] whose rank join is the Laplacian.
std::vector<BlockCore> laplacian_block_cores(const std::vector<double>& alpha, Index n);

/// tridiag{-1, 2, -1} of size 2^L as a rank-3 QTT matrix (little-endian levels).
TtMatrix laplacian_qtt(int levels);
/// Lower shift S(k+1, k) = 1 of size 2^L as a rank-2 QTT matrix.
TtMatrix shift_qtt(int levels);

// Exponential-sum inverse ------------------------------------------------------------

/// B_M = sum_k c_k (x)_l exp(-t_k alpha_l Delta_1), an approximate inverse of the
/// anisotropic Laplacian with 2M+1 Kronecker terms.
CanonicalOperator expsum_inverse(const std::vector<double>& alpha, Index n, int m);

struct ExpSumErrorRow {
    int m = 0;
    Index terms = 0;
    double error = 0.0;  // spectral norm of B_M - Delta^{-1}
};
/// Spectral-norm error of B_M against the dense inverse of the anisotropic
/// Laplacian for each M (dense, so N^d must stay small).
std::vector<ExpSumErrorRow> expsum_error_table(const std::vector<double>& alpha, Index n, const std::vector<int>& ms);

/// exp(a) by scaling and squaring with a degree-13 Pade approximant.
Matrix matrix_exponential(const Matrix& a);
/// exp(-alpha Delta_1) of size N from the closed-form sine spectrum in O(N^2).
Matrix heat_kernel_1d(double alpha, Index n);

/// QTT form of an N x N matrix, N = 2^L, with per-level modes (i_nu, j_nu) of size 4.
TtTensor qtt_matrix_tensor(const Matrix& a, const TruncationPolicy& policy);

struct RankReport {
    double mean_rank = 0.0;
    Index max_rank = 0;
    std::vector<Index> ranks;
};
RankReport rank_report(const TtTensor& x);

/// Average QTT rank of exp(-alpha Delta_1), size 2^L, at relative accuracy eps.
RankReport qtt_rank_probe_matrix_exp(double alpha, int levels, double eps);
/// Average QTT rank of the diagonal matrix diag(f(x, x)) with x on a cell-centered
/// grid of 2^L points in [-1, 1].
RankReport qtt_rank_probe_diagonal(const std::function<double(double, double)>& f, int levels, double eps);

// Newton kernel ------------------------------------------------------------------

/// sum_k w_k exp(-p_k rho^2), approximating 1/rho on [rho_min, rho_max].
struct GaussianSum {
    Vector weights;
    Vector exponents;
    double step = 0.0;
    double rho_min = 0.0;
    double rho_max = 0.0;
    double measured_error = 0.0;  // max relative error over the sweep

    Index terms() const { return weights.size(); }
    double operator()(double rho) const;
};

/// Sinc quadrature of 1/rho = (2/sqrt(pi)) int exp(-rho^2 t^2) dt with t = e^u.
/// The step and the u-range are chosen by an error sweep over log-spaced rho.
GaussianSum newton_gaussian_sum(double eps, double rho_min, double rho_max);

struct NewtonKernel {
    CanonicalTensor tensor;  // N x N x N
    Grid1D grid;             // shared by all three modes
    GaussianSum quadrature;
};

/// Canonical tensor of 1/|x| on the cell-centered grid of N points per axis in
/// [-b, b]^3. Accuracy eps holds for |x| >= rho_min (default h sqrt(3) / 2,
/// the smallest radius on the grid).
NewtonKernel newton_kernel_canonical(double eps, double half_width, Index n, double rho_min = 0.0);

}  // namespace qtt
