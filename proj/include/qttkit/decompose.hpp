#pragma once

#include <optional>

#include "qttkit/tensor.hpp"

namespace qtt {

/// Relative Frobenius tolerance and/or a per-bond rank cap.
struct TruncationPolicy {
    double epsilon = 0.0;
    std::optional<Index> max_rank;

    TruncationPolicy(double eps, std::optional<Index> cap = std::nullopt);
    static TruncationPolicy relative(double eps) { return {eps}; }
    static TruncationPolicy rank(Index cap) { return {0.0, cap}; }
};

struct SvdResult {
    Matrix u;
    Vector sigma;  // descending, nonnegative
    Matrix v;
    Index rank = 0;  // number of retained triplets after truncation (all, if untruncated)
};

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thin SVD with a deterministic sign convention: the first entry of each
/// left singular vector whose magnitude exceeds 1e-12 is positive.
SvdResult svd(const Matrix& m);

/// Smallest rank r whose discarded tail sqrt(sum_{j>r} sigma_j^2) is <= delta,
/// clipped to max_rank and to at least 1.
Index truncation_rank(const Vector& sigma, double delta, std::optional<Index> max_rank = std::nullopt);

TtTensor tt_svd(const DenseTensor& x, const TruncationPolicy& policy);

/// Right-to-left QR sweep; cores 1..d-1 become right-orthogonal.
TtTensor orthogonalize_right(const TtTensor& x);
/// Left-to-right QR sweep; cores 0..d-2 become left-orthogonal.
TtTensor orthogonalize_left(const TtTensor& x);

/// SVD rounding: right-to-left orthogonalization followed by a left-to-right
/// truncating sweep. The result is left-orthogonal in cores 0..d-2.
TtTensor tt_round(const TtTensor& x, const TruncationPolicy& policy);
TtMatrix tt_round(const TtMatrix& a, const TruncationPolicy& policy);

/// Frobenius norm computed through orthogonalization, stable for any ranks.
double tt_norm(const TtTensor& x);

TuckerTensor hosvd(const DenseTensor& x, const TruncationPolicy& policy);

struct RhosvdResult {
    TuckerTensor tucker;
    /// Upper bound ||x - tucker||_F from the discarded factor singular values.
    double error_bound = 0.0;
};

/// Reduced HOSVD: Tucker compression of a canonical tensor from the SVDs of
/// its factor matrices, without forming the full array.
RhosvdResult rhosvd(const CanonicalTensor& x, const TruncationPolicy& policy);

/// Exact embedding with bond ranks R (diagonal inner cores).
TtTensor canonical_to_tt(const CanonicalTensor& x);
TtMatrix canonical_to_tt(const CanonicalOperator& a);

/// Unfolding matrices: A_(p) (Tucker, mode p as rows) and A_[p] (TT, modes
/// 0..p-1 as rows).
Matrix mode_unfolding(const DenseTensor& x, std::size_t mode);
Matrix tt_unfolding(const DenseTensor& x, std::size_t p);

}  // namespace qtt
