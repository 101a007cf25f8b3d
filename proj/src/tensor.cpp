#include "qttkit/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <limits>
#include <numeric>

#include <unsupported/Eigen/KroneckerProduct>

namespace qtt {

namespace {

Index budget_from_env() {
    if (const char* env = std::getenv("QTTKIT_DENSE_BUDGET")) {
        char* end = nullptr;
        const long long v = std::strtoll(env, &end, 10);
        if (end != env && v > 0) return static_cast<Index>(v);
    }
    return Index{1} << 24;
}

std::atomic<Index>& budget_slot() {
    static std::atomic<Index> slot{budget_from_env()};
    return slot;
}

}  // namespace

Index dense_budget() { return budget_slot().load(); }

void set_dense_budget(Index entries) {
    if (entries <= 0) throw std::invalid_argument("dense budget must be positive");
    budget_slot().store(entries);
}

void check_budget(Index entries, const char* what) {
    if (entries > dense_budget()) {
        throw BudgetExceeded(std::string(what) + ": " + std::to_string(entries) +
                             " dense entries exceed the budget of " +
                             std::to_string(dense_budget()));
    }
}

// Shape ---------------------------------------------------------------------

Shape::Shape(std::vector<Index> dims) : dims_(std::move(dims)) {
    size_ = 1;
    for (Index n : dims_) {
        if (n < 1) throw std::invalid_argument("Shape: every mode size must be >= 1");
        if (size_ < 0 || size_ > std::numeric_limits<Index>::max() / n) {
            size_ = -1;  // only low-rank formats can hold this shape
        } else {
            size_ *= n;
        }
    }
}

Index Shape::size() const {
    if (size_ < 0) throw std::overflow_error("Shape: total size overflows");
    return size_;
}

Index Shape::linear(std::span<const Index> index) const {
    if (index.size() != dims_.size()) throw std::invalid_argument("Shape: index order mismatch");
    Index offset = 0;
    Index stride = 1;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
        if (index[k] < 0 || index[k] >= dims_[k]) throw std::out_of_range("Shape: index out of range");
        offset += index[k] * stride;
        stride *= dims_[k];
    }
    return offset;
}

std::vector<Index> Shape::multi(Index linear) const {
    if (linear < 0 || linear >= size_) throw std::out_of_range("Shape: linear index out of range");
    std::vector<Index> out(dims_.size());
    for (std::size_t k = 0; k < dims_.size(); ++k) {
        out[k] = linear % dims_[k];
        linear /= dims_[k];
    }
    return out;
}

// DenseTensor ---------------------------------------------------------------

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)) {
    check_budget(shape_.size(), "DenseTensor");
    values_.assign(static_cast<std::size_t>(shape_.size()), 0.0);
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (static_cast<Index>(values_.size()) != shape_.size()) {
        throw std::invalid_argument("DenseTensor: value count does not match shape");
    }
}

// CanonicalTensor -----------------------------------------------------------

CanonicalTensor::CanonicalTensor(std::vector<Matrix> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw std::invalid_argument("CanonicalTensor: needs at least one mode");
    std::vector<Index> dims;
    rank_ = factors_.front().cols();
    for (const auto& f : factors_) {
        if (f.cols() != rank_) throw std::invalid_argument("CanonicalTensor: factor column counts differ");
        dims.push_back(f.rows());
    }
    shape_ = Shape(std::move(dims));
}

CanonicalTensor CanonicalTensor::zero(const Shape& shape) {
    std::vector<Matrix> f;
    for (Index n : shape.dims()) f.emplace_back(n, 0);
    return CanonicalTensor(std::move(f));
}

// TuckerTensor --------------------------------------------------------------

TuckerTensor::TuckerTensor(DenseTensor core, std::vector<Matrix> factors, bool orthogonal)
    : core_(std::move(core)), factors_(std::move(factors)), orthogonal_(orthogonal) {
    if (factors_.size() != core_.order()) throw std::invalid_argument("TuckerTensor: factor count != core order");
    std::vector<Index> dims;
    for (std::size_t l = 0; l < factors_.size(); ++l) {
        if (factors_[l].cols() != core_.shape()[l]) {
            throw std::invalid_argument("TuckerTensor: factor columns must match core mode size");
        }
        dims.push_back(factors_[l].rows());
    }
    shape_ = Shape(std::move(dims));
}

// TtTensor ------------------------------------------------------------------

TtTensor::TtTensor(std::vector<Matrix> cores, std::vector<Index> mode_sizes)
    : TtTensor(std::move(cores), std::move(mode_sizes), {}) {}

TtTensor::TtTensor(std::vector<Matrix> cores, std::vector<Index> mode_sizes,
                   std::vector<Orthogonality> orth)
    : shape_(std::move(mode_sizes)), cores_(std::move(cores)), orth_(std::move(orth)) {
    validate();
}

void TtTensor::validate() {
    const std::size_t d = shape_.order();
    if (d == 0 || cores_.size() != d) throw std::invalid_argument("TtTensor: core count must equal order");
    if (orth_.empty()) orth_.assign(d, Orthogonality::none);
    if (orth_.size() != d) throw std::invalid_argument("TtTensor: orthogonality flag count");
    ranks_.assign(d + 1, 1);
    for (std::size_t l = 0; l < d; ++l) {
        const Index n = shape_[l];
        if (cores_[l].rows() % n != 0) throw std::invalid_argument("TtTensor: core rows not divisible by mode size");
        ranks_[l + 1] = cores_[l].cols();
        if (cores_[l].rows() != ranks_[l] * n) throw std::invalid_argument("TtTensor: adjacent bond ranks do not match");
    }
    if (ranks_[d] != 1) throw std::invalid_argument("TtTensor: last bond rank must be 1");
}

TtTensor TtTensor::zero(const Shape& shape) {
    std::vector<Matrix> cores;
    for (Index n : shape.dims()) cores.push_back(Matrix::Zero(n, 1));
    return TtTensor(std::move(cores), shape.dims());
}

TtTensor TtTensor::ones(const Shape& shape) {
    std::vector<Matrix> cores;
    for (Index n : shape.dims()) cores.push_back(Matrix::Ones(n, 1));
    return TtTensor(std::move(cores), shape.dims());
}

TtTensor TtTensor::rank_one(const std::vector<Vector>& vectors) {
    std::vector<Matrix> cores;
    std::vector<Index> dims;
    for (const auto& v : vectors) {
        cores.emplace_back(v);
        dims.push_back(v.size());
    }
    return TtTensor(std::move(cores), std::move(dims));
}

Index TtTensor::max_rank() const { return *std::max_element(ranks_.begin(), ranks_.end()); }

double TtTensor::mean_rank() const {
    if (ranks_.size() <= 2) return 1.0;
    const double sum = std::accumulate(ranks_.begin() + 1, ranks_.end() - 1, 0.0);
    return sum / static_cast<double>(ranks_.size() - 2);
}

Index TtTensor::parameter_count() const {
    Index n = 0;
    for (const auto& c : cores_) n += c.size();
    return n;
}

// TtMatrix ------------------------------------------------------------------

TtMatrix::TtMatrix(std::vector<Matrix> cores, std::vector<Index> row_sizes, std::vector<Index> col_sizes)
    : rows_(std::move(row_sizes)), cols_(std::move(col_sizes)), cores_(std::move(cores)) {
    const std::size_t d = rows_.order();
    if (d == 0 || cols_.order() != d || cores_.size() != d) {
        throw std::invalid_argument("TtMatrix: inconsistent order");
    }
    ranks_.assign(d + 1, 1);
    for (std::size_t l = 0; l < d; ++l) {
        ranks_[l + 1] = cores_[l].cols();
        if (cores_[l].rows() != ranks_[l] * rows_[l] * cols_[l]) {
            throw std::invalid_argument("TtMatrix: adjacent bond ranks do not match");
        }
    }
    if (ranks_[d] != 1) throw std::invalid_argument("TtMatrix: last bond rank must be 1");
}

TtMatrix TtMatrix::identity(const std::vector<Index>& sizes) {
    std::vector<Matrix> cores;
    for (Index n : sizes) {
        Matrix c = Matrix::Zero(n * n, 1);
        for (Index i = 0; i < n; ++i) c(i + n * i, 0) = 1.0;
        cores.push_back(std::move(c));
    }
    return TtMatrix(std::move(cores), sizes, sizes);
}

Index TtMatrix::max_rank() const { return *std::max_element(ranks_.begin(), ranks_.end()); }

double TtMatrix::mean_rank() const {
    if (ranks_.size() <= 2) return 1.0;
    const double sum = std::accumulate(ranks_.begin() + 1, ranks_.end() - 1, 0.0);
    return sum / static_cast<double>(ranks_.size() - 2);
}

// CanonicalOperator ---------------------------------------------------------

CanonicalOperator::CanonicalOperator(std::vector<std::vector<Matrix>> terms, std::vector<Index> row_sizes,
                                     std::vector<Index> col_sizes)
    : rows_(std::move(row_sizes)), cols_(std::move(col_sizes)), terms_(std::move(terms)) {
    if (rows_.order() != cols_.order()) throw std::invalid_argument("CanonicalOperator: order mismatch");
    for (const auto& t : terms_) {
        if (t.size() != rows_.order()) throw std::invalid_argument("CanonicalOperator: term has wrong order");
        for (std::size_t l = 0; l < t.size(); ++l) {
            if (t[l].rows() != rows_[l] || t[l].cols() != cols_[l]) {
                throw std::invalid_argument("CanonicalOperator: term matrix has wrong size");
            }
        }
    }
}

// Kronecker helpers ---------------------------------------------------------

Matrix kron_modes(const Matrix& first, const Matrix& second) {
    return Eigen::kroneckerProduct(second, first).eval();
}

Matrix kron_modes(const std::vector<Matrix>& mats) {
    if (mats.empty()) return Matrix::Ones(1, 1);
    Matrix out = mats.front();
    for (std::size_t l = 1; l < mats.size(); ++l) out = kron_modes(out, mats[l]);
    return out;
}

// Quantization --------------------------------------------------------------

QuantizationMap::QuantizationMap(int base, int levels) : base_(base), levels_(levels) {
    if (base < 2) throw std::invalid_argument("QuantizationMap: base must be >= 2");
    if (levels < 1) throw std::invalid_argument("QuantizationMap: level must be >= 1");
    length_ = 1;
    for (int k = 0; k < levels; ++k) {
        if (length_ > std::numeric_limits<Index>::max() / base) throw std::overflow_error("QuantizationMap: q^L overflows");
        length_ *= base;
    }
}

QuantizationMap QuantizationMap::for_length(int base, Index length) {
    if (base < 2) throw std::invalid_argument("QuantizationMap: base must be >= 2");
    if (length < base) {
        throw std::invalid_argument("QuantizationMap: length " + std::to_string(length) +
                                    " is not a positive power of " + std::to_string(base));
    }
    int levels = 0;
    Index n = length;
    while (n > 1) {
        if (n % base != 0) {
            throw std::invalid_argument("QuantizationMap: length " + std::to_string(length) +
                                        " is not a power of " + std::to_string(base) + " (no implicit padding)");
        }
        n /= base;
        ++levels;
    }
    return QuantizationMap(base, levels);
}

Shape QuantizationMap::shape() const { return Shape(std::vector<Index>(static_cast<std::size_t>(levels_), base_)); }

std::vector<Index> QuantizationMap::digits(Index i) const {
    if (i < 0 || i >= length_) throw std::out_of_range("QuantizationMap: index out of range");
    std::vector<Index> out(static_cast<std::size_t>(levels_));
    for (auto& digit : out) {
        digit = i % base_;
        i /= base_;
    }
    return out;
}

Index QuantizationMap::index(std::span<const Index> digits) const {
    if (static_cast<int>(digits.size()) != levels_) throw std::invalid_argument("QuantizationMap: digit count");
    Index i = 0;
    Index scale = 1;
    for (Index digit : digits) {
        if (digit < 0 || digit >= base_) throw std::out_of_range("QuantizationMap: digit out of range");
        i += digit * scale;
        scale *= base_;
    }
    return i;
}

DenseTensor fold(std::span<const double> vector, const QuantizationMap& map) {
    if (static_cast<Index>(vector.size()) != map.length()) {
        throw std::invalid_argument("fold: vector length " + std::to_string(vector.size()) + " != " +
                                    std::to_string(map.base()) + "^" + std::to_string(map.levels()));
    }
    // Little-endian digits over a column-major layout: folding is a pure reshape.
    return DenseTensor(map.shape(), std::vector<double>(vector.begin(), vector.end()));
}

std::vector<double> unfold(const DenseTensor& tensor, const QuantizationMap& map) {
    if (tensor.shape() != map.shape()) throw std::invalid_argument("unfold: tensor shape does not match the map");
    return tensor.values();
}

// Dense conversions ---------------------------------------------------------

DenseTensor to_dense(const CanonicalTensor& x) {
    check_budget(x.shape().size(), "to_dense(canonical)");
    DenseTensor out(x.shape());
    const std::size_t d = x.order();
    // Accumulate term by term as a Khatri-Rao style running product.
    Matrix running = x.factor(0);  // (N_1 ... N_l) x R
    for (std::size_t l = 1; l < d; ++l) {
        const Matrix& f = x.factor(l);
        Matrix next(running.rows() * f.rows(), x.rank());
        for (Index a = 0; a < x.rank(); ++a) {
            for (Index i = 0; i < f.rows(); ++i) {
                next.col(a).segment(i * running.rows(), running.rows()) = running.col(a) * f(i, a);
            }
        }
        running = std::move(next);
    }
    if (x.rank() > 0) out.vec() = running.rowwise().sum();
    return out;
}

namespace {

// Multiply mode `mode` of a column-major tensor by u (new size u.rows()).
std::vector<double> mode_multiply(const std::vector<double>& data, const std::vector<Index>& dims,
                                  std::size_t mode, const Matrix& u) {
    Index left = 1;
    for (std::size_t k = 0; k < mode; ++k) left *= dims[k];
    Index right = 1;
    for (std::size_t k = mode + 1; k < dims.size(); ++k) right *= dims[k];
    const Index n = dims[mode];
    const Index m = u.rows();
    std::vector<double> out(static_cast<std::size_t>(left * m * right));
    for (Index r = 0; r < right; ++r) {
        Eigen::Map<const Matrix> slab(data.data() + r * left * n, left, n);
        Eigen::Map<Matrix> target(out.data() + r * left * m, left, m);
        target.noalias() = slab * u.transpose();
    }
    return out;
}

}  // namespace

DenseTensor to_dense(const TuckerTensor& x) {
    check_budget(x.shape().size(), "to_dense(tucker)");
    std::vector<double> data = x.core().values();
    std::vector<Index> dims = x.core().shape().dims();
    for (std::size_t l = 0; l < x.order(); ++l) {
        data = mode_multiply(data, dims, l, x.factor(l));
        dims[l] = x.factor(l).rows();
    }
    return DenseTensor(x.shape(), std::move(data));
}

DenseTensor to_dense(const TtTensor& x) {
    check_budget(x.shape().size(), "to_dense(tt)");
    Matrix running = x.core(0);  // N_1 x r_1
    for (std::size_t l = 1; l < x.order(); ++l) {
        Matrix next = running * x.right_unfolding(l);
        const Index rows = running.rows() * x.shape()[l];
        next.resize(rows, x.rank(l + 1));
        running = std::move(next);
    }
    std::vector<double> values(running.data(), running.data() + running.size());
    return DenseTensor(x.shape(), std::move(values));
}

Matrix to_dense_matrix(const TtMatrix& a) {
    const Index rows = a.row_shape().size();
    const Index cols = a.col_shape().size();
    check_budget(rows * cols, "to_dense(tt-matrix)");
    // Contract as a tensor with combined modes, then permute (i_1 j_1 ... ) -> (i..., j...).
    const DenseTensor t = to_dense(as_tensor(a));
    Matrix out(rows, cols);
    const std::size_t d = a.order();
    std::vector<Index> i(d), j(d);
    for (Index lin = 0; lin < t.size(); ++lin) {
        Index rem = lin;
        Index row = 0, col = 0, rs = 1, cs = 1;
        for (std::size_t l = 0; l < d; ++l) {
            const Index m = a.row_shape()[l];
            const Index n = a.col_shape()[l];
            const Index k = rem % (m * n);
            rem /= m * n;
            row += (k % m) * rs;
            col += (k / m) * cs;
            rs *= m;
            cs *= n;
        }
        out(row, col) = t[lin];
    }
    return out;
}

DenseTensor to_dense(const TtMatrix& a) {
    Matrix m = to_dense_matrix(a);
    std::vector<double> values(m.data(), m.data() + m.size());
    return DenseTensor(Shape{m.rows(), m.cols()}, std::move(values));
}

Matrix to_dense_matrix(const CanonicalOperator& a) {
    const Index rows = a.row_shape().size();
    const Index cols = a.col_shape().size();
    check_budget(rows * cols, "to_dense(canonical operator)");
    Matrix out = Matrix::Zero(rows, cols);
    for (const auto& term : a.terms()) out += kron_modes(term);
    return out;
}

double tt_entry(const TtTensor& x, std::span<const Index> index) {
    if (index.size() != x.order()) throw std::invalid_argument("tt_entry: index order mismatch");
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Ones(1);
    for (std::size_t l = 0; l < x.order(); ++l) {
        if (index[l] < 0 || index[l] >= x.shape()[l]) throw std::out_of_range("tt_entry: index out of range");
        v = v * x.slice(l, index[l]);
    }
    return v(0);
}

// Rank product --------------------------------------------------------------

BlockCore::BlockCore(Index r, Index c, std::vector<Matrix> b) : rows(r), cols(c), blocks(std::move(b)) {
    if (rows < 1 || cols < 1 || static_cast<Index>(blocks.size()) != rows * cols) {
        throw std::invalid_argument("BlockCore: block count does not match the grid");
    }
    for (const auto& blk : blocks) {
        if (blk.rows() != blocks.front().rows() || blk.cols() != blocks.front().cols()) {
            throw std::invalid_argument("BlockCore: blocks must share one size");
        }
    }
}

BlockCore BlockCore::from_rows(std::vector<std::vector<Matrix>> grid) {
    const Index r = static_cast<Index>(grid.size());
    const Index c = r > 0 ? static_cast<Index>(grid.front().size()) : 0;
    std::vector<Matrix> blocks(static_cast<std::size_t>(r * c));
    for (Index i = 0; i < r; ++i) {
        if (static_cast<Index>(grid[i].size()) != c) throw std::invalid_argument("BlockCore: ragged rows");
        for (Index j = 0; j < c; ++j) blocks[static_cast<std::size_t>(i + r * j)] = std::move(grid[i][j]);
    }
    return BlockCore(r, c, std::move(blocks));
}

BlockCore rank_join(const BlockCore& left, const BlockCore& right) {
    if (left.cols != right.rows) {
        throw std::invalid_argument("rank_join: inner block dimensions differ (" + std::to_string(left.cols) +
                                    " vs " + std::to_string(right.rows) + ")");
    }
    const Index m = left.block_rows() * right.block_rows();
    const Index n = left.block_cols() * right.block_cols();
    std::vector<Matrix> blocks;
    blocks.reserve(static_cast<std::size_t>(left.rows * right.cols));
    for (Index k = 0; k < right.cols; ++k) {
        for (Index i = 0; i < left.rows; ++i) {
            Matrix acc = Matrix::Zero(m, n);
            for (Index j = 0; j < left.cols; ++j) acc += kron_modes(left(i, j), right(j, k));
            blocks.push_back(std::move(acc));
        }
    }
    // blocks were pushed with i fastest, matching the column-major grid layout.
    return BlockCore(left.rows, right.cols, std::move(blocks));
}

TtMatrix tt_matrix_from_blocks(const std::vector<BlockCore>& cores) {
    std::vector<Matrix> out;
    std::vector<Index> rows, cols;
    for (const auto& c : cores) {
        const Index m = c.block_rows();
        const Index n = c.block_cols();
        Matrix core(c.rows * m * n, c.cols);
        for (Index b = 0; b < c.cols; ++b) {
            for (Index a = 0; a < c.rows; ++a) {
                const Matrix& blk = c(a, b);
                for (Index j = 0; j < n; ++j) {
                    for (Index i = 0; i < m; ++i) core(a + c.rows * (i + m * j), b) = blk(i, j);
                }
            }
        }
        out.push_back(std::move(core));
        rows.push_back(m);
        cols.push_back(n);
    }
    return TtMatrix(std::move(out), std::move(rows), std::move(cols));
}

TtTensor tt_from_blocks(const std::vector<BlockCore>& cores) {
    for (const auto& c : cores) {
        if (c.block_cols() != 1) throw std::invalid_argument("tt_from_blocks: blocks must be column vectors");
    }
    const TtMatrix m = tt_matrix_from_blocks(cores);
    std::vector<Matrix> out(m.cores());
    return TtTensor(std::move(out), m.row_shape().dims());
}

TtTensor as_tensor(const TtMatrix& a) {
    std::vector<Index> dims;
    for (std::size_t l = 0; l < a.order(); ++l) dims.push_back(a.row_shape()[l] * a.col_shape()[l]);
    return TtTensor(a.cores(), std::move(dims));
}

TtMatrix as_matrix(const TtTensor& x, const std::vector<Index>& row_sizes, const std::vector<Index>& col_sizes) {
    return TtMatrix(x.cores(), row_sizes, col_sizes);
}

}  // namespace qtt
