#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qtt {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown when an operation would materialize more dense entries than the
/// configured budget allows.
class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Largest number of entries any dense conversion may allocate. Defaults to
/// 2^24, overridable through QTTKIT_DENSE_BUDGET or set_dense_budget().
Index dense_budget();
void set_dense_budget(Index entries);
void check_budget(Index entries, const char* what);

class Shape {
public:
    Shape() = default;
    explicit Shape(std::vector<Index> dims);
    Shape(std::initializer_list<Index> dims) : Shape(std::vector<Index>(dims)) {}

    std::size_t order() const { return dims_.size(); }
    Index operator[](std::size_t k) const { return dims_[k]; }
    const std::vector<Index>& dims() const { return dims_; }
    /// Product of all mode sizes; throws std::overflow_error if it does not fit.
    Index size() const;

    /// Column-major (mode 0 fastest) linear offset of a 0-based multi-index.
    Index linear(std::span<const Index> index) const;
    std::vector<Index> multi(Index linear) const;

    bool operator==(const Shape&) const = default;

private:
    std::vector<Index> dims_;
    Index size_ = 1;
};

/// Full d-way array in column-major order.
class DenseTensor {
public:
    DenseTensor() = default;
    explicit DenseTensor(Shape shape);
    DenseTensor(Shape shape, std::vector<double> values);

    const Shape& shape() const { return shape_; }
    std::size_t order() const { return shape_.order(); }
    Index size() const { return shape_.size(); }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    double operator[](Index k) const { return values_[static_cast<std::size_t>(k)]; }
    double& operator[](Index k) { return values_[static_cast<std::size_t>(k)]; }
    double at(std::span<const Index> index) const { return (*this)[shape_.linear(index)]; }

    Eigen::Map<const Vector> vec() const { return {values_.data(), size()}; }
    Eigen::Map<Vector> vec() { return {values_.data(), size()}; }
    double norm() const { return vec().norm(); }

private:
    Shape shape_;
    std::vector<double> values_;
};

/// Sum of R rank-1 terms; column alpha of factor l is the mode-l vector of
/// term alpha. R = 0 is the zero tensor.
class CanonicalTensor {
public:
    CanonicalTensor() = default;
    explicit CanonicalTensor(std::vector<Matrix> factors);
    /// Zero tensor of the given shape.
    static CanonicalTensor zero(const Shape& shape);

    const Shape& shape() const { return shape_; }
    std::size_t order() const { return shape_.order(); }
    Index rank() const { return rank_; }
    const Matrix& factor(std::size_t l) const { return factors_[l]; }
    const std::vector<Matrix>& factors() const { return factors_; }

private:
    Shape shape_;
    Index rank_ = 0;
    std::vector<Matrix> factors_;
};

class TuckerTensor {
public:
    TuckerTensor() = default;
    TuckerTensor(DenseTensor core, std::vector<Matrix> factors, bool orthogonal);

    const Shape& shape() const { return shape_; }
    std::size_t order() const { return shape_.order(); }
    std::vector<Index> ranks() const { return core_.shape().dims(); }
    const DenseTensor& core() const { return core_; }
    const Matrix& factor(std::size_t l) const { return factors_[l]; }
    const std::vector<Matrix>& factors() const { return factors_; }
    bool orthogonal() const { return orthogonal_; }

private:
    Shape shape_;
    DenseTensor core_;
    std::vector<Matrix> factors_;
    bool orthogonal_ = false;
};

enum class Orthogonality { none, left, right };

/// Tensor train. Core l is stored as its left unfolding, an
/// (r_{l-1} * N_l) x r_l matrix with row index a + r_{l-1} * i, so the slice
/// matrix for mode index i is a contiguous row block.
class TtTensor {
public:
    TtTensor() = default;
    explicit TtTensor(std::vector<Matrix> cores, std::vector<Index> mode_sizes);
    TtTensor(std::vector<Matrix> cores, std::vector<Index> mode_sizes,
             std::vector<Orthogonality> orth);

    static TtTensor zero(const Shape& shape);
    static TtTensor ones(const Shape& shape);
    /// Rank-1 train from per-mode vectors.
    static TtTensor rank_one(const std::vector<Vector>& vectors);

    const Shape& shape() const { return shape_; }
    std::size_t order() const { return shape_.order(); }
    const std::vector<Index>& ranks() const { return ranks_; }
    Index rank(std::size_t bond) const { return ranks_[bond]; }
    Index max_rank() const;
    /// Arithmetic mean of the internal bond ranks r_1..r_{d-1}.
    double mean_rank() const;
    Index parameter_count() const;

    const Matrix& core(std::size_t l) const { return cores_[l]; }
    const std::vector<Matrix>& cores() const { return cores_; }
    Orthogonality orthogonality(std::size_t l) const { return orth_[l]; }

    /// r_{l-1} x r_l slice of core l at mode index i.
    auto slice(std::size_t l, Index i) const {
        return cores_[l].middleRows(ranks_[l] * i, ranks_[l]);
    }
    /// r_{l-1} x (N_l r_l) view of core l.
    Eigen::Map<const Matrix> right_unfolding(std::size_t l) const {
        return {cores_[l].data(), ranks_[l], shape_[l] * ranks_[l + 1]};
    }

private:
    void validate();

    Shape shape_;
    std::vector<Index> ranks_;
    std::vector<Matrix> cores_;
    std::vector<Orthogonality> orth_;
};

/// TT-matrix (MPO). Core l holds A_l(a, i, j, b) at row a + r_{l-1}(i + M_l j),
/// column b, where i indexes the row space and j the column space.
class TtMatrix {
public:
    TtMatrix() = default;
    TtMatrix(std::vector<Matrix> cores, std::vector<Index> row_sizes,
             std::vector<Index> col_sizes);

    static TtMatrix identity(const std::vector<Index>& sizes);

    std::size_t order() const { return rows_.order(); }
    const Shape& row_shape() const { return rows_; }
    const Shape& col_shape() const { return cols_; }
    const std::vector<Index>& ranks() const { return ranks_; }
    Index rank(std::size_t bond) const { return ranks_[bond]; }
    Index max_rank() const;
    double mean_rank() const;
    const Matrix& core(std::size_t l) const { return cores_[l]; }
    const std::vector<Matrix>& cores() const { return cores_; }

    /// r_{l-1} x r_l block of core l at (i, j).
    auto slice(std::size_t l, Index i, Index j) const {
        return cores_[l].middleRows(ranks_[l] * (i + rows_[l] * j), ranks_[l]);
    }
    double entry(std::size_t l, Index a, Index i, Index j, Index b) const {
        return cores_[l](a + ranks_[l] * (i + rows_[l] * j), b);
    }

private:
    Shape rows_;
    Shape cols_;
    std::vector<Index> ranks_;
    std::vector<Matrix> cores_;
};

/// Kronecker-product matrix acting on a product space, stored per term as a
/// list of per-mode matrices: sum_alpha A^(1)_alpha x ... x A^(d)_alpha.
class CanonicalOperator {
public:
    CanonicalOperator() = default;
    /// terms[alpha][l] is the mode-l matrix of term alpha.
    CanonicalOperator(std::vector<std::vector<Matrix>> terms, std::vector<Index> row_sizes,
                      std::vector<Index> col_sizes);

    std::size_t order() const { return rows_.order(); }
    Index rank() const { return static_cast<Index>(terms_.size()); }
    const Shape& row_shape() const { return rows_; }
    const Shape& col_shape() const { return cols_; }
    const std::vector<Matrix>& term(Index alpha) const { return terms_[static_cast<std::size_t>(alpha)]; }
    const std::vector<std::vector<Matrix>>& terms() const { return terms_; }

private:
    Shape rows_;
    Shape cols_;
    std::vector<std::vector<Matrix>> terms_;
};

/// Kronecker product of per-mode matrices with mode 0 as the fastest index,
/// i.e. mats[d-1] (x) ... (x) mats[0] in the usual convention.
Matrix kron_modes(const std::vector<Matrix>& mats);
Matrix kron_modes(const Matrix& first, const Matrix& second);

// q-adic quantization -------------------------------------------------------

/// Reshape of a length-q^L vector into an L-way q x ... x q tensor, digit
/// nu = 0 being the fastest (little-endian) digit.
class QuantizationMap {
public:
    QuantizationMap(int base, int levels);
    /// Map for a given length; throws if length is not an exact power of base.
    static QuantizationMap for_length(int base, Index length);

    int base() const { return base_; }
    int levels() const { return levels_; }
    Index length() const { return length_; }
    Shape shape() const;

    std::vector<Index> digits(Index i) const;
    Index index(std::span<const Index> digits) const;

private:
    int base_;
    int levels_;
    Index length_;
};

DenseTensor fold(std::span<const double> vector, const QuantizationMap& map);
std::vector<double> unfold(const DenseTensor& tensor, const QuantizationMap& map);

// Dense conversions ---------------------------------------------------------

DenseTensor to_dense(const CanonicalTensor& x);
DenseTensor to_dense(const TuckerTensor& x);
DenseTensor to_dense(const TtTensor& x);
/// Two-way tensor (prod M) x (prod N).
DenseTensor to_dense(const TtMatrix& a);
Matrix to_dense_matrix(const TtMatrix& a);
Matrix to_dense_matrix(const CanonicalOperator& a);

double tt_entry(const TtTensor& x, std::span<const Index> index);

// Rank product --------------------------------------------------------------

/// A core written as a matrix whose entries are equally sized blocks
/// (vectors for tensors, matrices for operators).
struct BlockCore {
    Index rows = 0;
    Index cols = 0;
    std::vector<Matrix> blocks;  // column-major over the block grid

    BlockCore() = default;
    BlockCore(Index rows, Index cols, std::vector<Matrix> blocks);
    /// Grid of blocks given row by row, handy for literal cores.
    static BlockCore from_rows(std::vector<std::vector<Matrix>> rows);

    const Matrix& operator()(Index i, Index j) const { return blocks[static_cast<std::size_t>(i + rows * j)]; }
    Index block_rows() const { return blocks.front().rows(); }
    Index block_cols() const { return blocks.front().cols(); }
};

/// Block-matrix product whose block multiplication is the mode-ordered
/// Kronecker product: (L join R)(i, k) = sum_j L(i, j) (x) R(j, k).
BlockCore rank_join(const BlockCore& left, const BlockCore& right);

TtMatrix tt_matrix_from_blocks(const std::vector<BlockCore>& cores);
TtTensor tt_from_blocks(const std::vector<BlockCore>& cores);

/// View a TT-matrix as a TT tensor with mode sizes M_l N_l and back.
TtTensor as_tensor(const TtMatrix& a);
TtMatrix as_matrix(const TtTensor& x, const std::vector<Index>& row_sizes,
                   const std::vector<Index>& col_sizes);

}  // namespace qtt
