#pragma once

#include "qttkit/tensor.hpp"

namespace qtt {

// Inner products. All run in time linear in the mode sizes.
double scalar_product(const TtTensor& x, const TtTensor& y);
double scalar_product(const CanonicalTensor& x, const CanonicalTensor& y);
double scalar_product(const TtTensor& x, const CanonicalTensor& y);
double scalar_product(const CanonicalTensor& x, const TtTensor& y);
double norm(const TtTensor& x);
double norm(const CanonicalTensor& x);

/// Sum of all entries, i.e. the inner product with the all-ones tensor.
double total_sum(const TtTensor& x);

// Elementwise products. Ranks multiply; nothing is rounded.
TtTensor hadamard(const TtTensor& x, const TtTensor& y);
CanonicalTensor hadamard(const CanonicalTensor& x, const CanonicalTensor& y);

// Linear combinations. TT ranks add (block-diagonal cores), canonical terms concatenate.
TtTensor add(const TtTensor& x, const TtTensor& y);
CanonicalTensor add(const CanonicalTensor& x, const CanonicalTensor& y);
TtMatrix add(const TtMatrix& a, const TtMatrix& b);
TtTensor scale(const TtTensor& x, double alpha);
CanonicalTensor scale(const CanonicalTensor& x, double alpha);
TtMatrix scale(const TtMatrix& a, double alpha);
/// alpha x + beta y
TtTensor axpby(double alpha, const TtTensor& x, double beta, const TtTensor& y);

/// Full discrete convolution of two canonical tensors of equal shape; the
/// result lives on the (2N_l - 1) grid and has rank R_x R_y.
CanonicalTensor convolve_canonical(const CanonicalTensor& x, const CanonicalTensor& y);
/// 1-D full linear convolution through a zero-padded FFT.
Vector convolve_1d(const Vector& a, const Vector& b);

/// Matrix-vector product in TT form; bond ranks multiply.
TtTensor mpo_apply(const TtMatrix& a, const TtTensor& x);
/// Matrix-matrix product in TT form.
TtMatrix mpo_multiply(const TtMatrix& a, const TtMatrix& b);
TtMatrix transpose(const TtMatrix& a);

/// Chain b's modes after a's. The dense result is kron_modes(dense a, dense b).
TtTensor tt_concat(const TtTensor& a, const TtTensor& b);
TtMatrix tt_concat(const TtMatrix& a, const TtMatrix& b);

/// Diagonal matrix whose diagonal is x, with the same bond ranks.
TtMatrix diag_lift(const TtTensor& x);

/// Real and imaginary parts of the factors of a complex canonical tensor
/// sum_a (x)_l (re_l(:,a) + i im_l(:,a)).
struct ComplexCanonical {
    std::vector<Matrix> re;
    std::vector<Matrix> im;
    Index rank() const { return re.empty() ? 0 : re.front().cols(); }
};

/// d-dimensional DFT (forward, exp(-2 pi i jk/N)) of a canonical tensor,
/// applied factor by factor. Mode sizes must all be the same power of two.
ComplexCanonical kron_factorized_fft_apply(const CanonicalTensor& x);
/// Dense real and imaginary parts (for checks at small sizes).
std::pair<DenseTensor, DenseTensor> to_dense(const ComplexCanonical& x);

}  // namespace qtt
