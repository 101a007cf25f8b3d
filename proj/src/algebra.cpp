#include "qttkit/algebra.hpp"

#include <complex>
#include <string>

#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/KroneckerProduct>

namespace qtt {

namespace {

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
    if (!(a == b)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

Matrix blank_core(Index r_left, Index n, Index r_right) { return Matrix::Zero(r_left * n, r_right); }

// Slice (i) of a core stored as its left unfolding.
auto slice_of(Matrix& core, Index r_left, Index i) { return core.middleRows(r_left * i, r_left); }

Index next_pow2(Index n) {
    Index p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

// Inner products ---------------------------------------------------------------

double scalar_product(const TtTensor& x, const TtTensor& y) {
    require_same_shape(x.shape(), y.shape(), "scalar_product");
    Matrix g = Matrix::Ones(1, 1);  // r_x x r_y
    for (std::size_t l = 0; l < x.order(); ++l) {
        Matrix next = Matrix::Zero(x.rank(l + 1), y.rank(l + 1));
        for (Index i = 0; i < x.shape()[l]; ++i) next.noalias() += x.slice(l, i).transpose() * (g * y.slice(l, i));
        g = std::move(next);
    }
    return g(0, 0);
}

double scalar_product(const CanonicalTensor& x, const CanonicalTensor& y) {
    require_same_shape(x.shape(), y.shape(), "scalar_product");
    if (x.rank() == 0 || y.rank() == 0) return 0.0;
    Matrix prod = Matrix::Ones(x.rank(), y.rank());
    for (std::size_t l = 0; l < x.order(); ++l) prod.array() *= (x.factor(l).transpose() * y.factor(l)).array();
    return prod.sum();
}

double scalar_product(const TtTensor& x, const CanonicalTensor& y) {
    require_same_shape(x.shape(), y.shape(), "scalar_product");
    double total = 0.0;
    for (Index a = 0; a < y.rank(); ++a) {
        Eigen::RowVectorXd v = Eigen::RowVectorXd::Ones(1);
        for (std::size_t l = 0; l < x.order(); ++l) {
            Matrix m = Matrix::Zero(x.rank(l), x.rank(l + 1));
            for (Index i = 0; i < x.shape()[l]; ++i) m += y.factor(l)(i, a) * x.slice(l, i);
            v = v * m;
        }
        total += v(0);
    }
    return total;
}

double scalar_product(const CanonicalTensor& x, const TtTensor& y) { return scalar_product(y, x); }

double norm(const TtTensor& x) { return std::sqrt(std::max(0.0, scalar_product(x, x))); }
double norm(const CanonicalTensor& x) { return std::sqrt(std::max(0.0, scalar_product(x, x))); }

double total_sum(const TtTensor& x) {
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Ones(1);
    for (std::size_t l = 0; l < x.order(); ++l) {
        Matrix m = Matrix::Zero(x.rank(l), x.rank(l + 1));
        for (Index i = 0; i < x.shape()[l]; ++i) m += x.slice(l, i);
        v = v * m;
    }
    return v(0);
}

// Hadamard ---------------------------------------------------------------------

TtTensor hadamard(const TtTensor& x, const TtTensor& y) {
    require_same_shape(x.shape(), y.shape(), "hadamard");
    std::vector<Matrix> cores;
    for (std::size_t l = 0; l < x.order(); ++l) {
        const Index rl = x.rank(l) * y.rank(l);
        const Index rr = x.rank(l + 1) * y.rank(l + 1);
        Matrix core = blank_core(rl, x.shape()[l], rr);
        for (Index i = 0; i < x.shape()[l]; ++i) slice_of(core, rl, i) = kron_modes(x.slice(l, i), y.slice(l, i));
        cores.push_back(std::move(core));
    }
    return TtTensor(std::move(cores), x.shape().dims());
}

CanonicalTensor hadamard(const CanonicalTensor& x, const CanonicalTensor& y) {
    require_same_shape(x.shape(), y.shape(), "hadamard");
    std::vector<Matrix> factors;
    for (std::size_t l = 0; l < x.order(); ++l) {
        Matrix f(x.shape()[l], x.rank() * y.rank());
        for (Index m = 0; m < y.rank(); ++m) {
            for (Index k = 0; k < x.rank(); ++k) f.col(k + x.rank() * m) = x.factor(l).col(k).cwiseProduct(y.factor(l).col(m));
        }
        factors.push_back(std::move(f));
    }
    return CanonicalTensor(std::move(factors));
}

// Sums -------------------------------------------------------------------------

TtTensor add(const TtTensor& x, const TtTensor& y) {
    require_same_shape(x.shape(), y.shape(), "add");
    const std::size_t d = x.order();
    if (d == 1) return TtTensor({x.core(0) + y.core(0)}, x.shape().dims());
    std::vector<Matrix> cores;
    for (std::size_t l = 0; l < d; ++l) {
        const bool first = l == 0;
        const bool last = l + 1 == d;
        const Index rl = first ? 1 : x.rank(l) + y.rank(l);
        const Index rr = last ? 1 : x.rank(l + 1) + y.rank(l + 1);
        Matrix core = blank_core(rl, x.shape()[l], rr);
        for (Index i = 0; i < x.shape()[l]; ++i) {
            auto s = slice_of(core, rl, i);
            const Index row_y = first ? 0 : x.rank(l);
            const Index col_y = last ? 0 : x.rank(l + 1);
            s.block(0, 0, x.rank(l), x.rank(l + 1)) = x.slice(l, i);
            s.block(row_y, col_y, y.rank(l), y.rank(l + 1)) += y.slice(l, i);
        }
        cores.push_back(std::move(core));
    }
    return TtTensor(std::move(cores), x.shape().dims());
}

CanonicalTensor add(const CanonicalTensor& x, const CanonicalTensor& y) {
    require_same_shape(x.shape(), y.shape(), "add");
    std::vector<Matrix> factors;
    for (std::size_t l = 0; l < x.order(); ++l) {
        Matrix f(x.shape()[l], x.rank() + y.rank());
        f << x.factor(l), y.factor(l);
        factors.push_back(std::move(f));
    }
    return CanonicalTensor(std::move(factors));
}

TtMatrix add(const TtMatrix& a, const TtMatrix& b) {
    if (!(a.row_shape() == b.row_shape()) || !(a.col_shape() == b.col_shape())) {
        throw std::invalid_argument("add: operator shape mismatch");
    }
    const TtTensor s = add(as_tensor(a), as_tensor(b));
    return as_matrix(s, a.row_shape().dims(), a.col_shape().dims());
}

TtTensor scale(const TtTensor& x, double alpha) {
    std::vector<Matrix> cores(x.cores());
    cores[0] *= alpha;
    return TtTensor(std::move(cores), x.shape().dims());
}

CanonicalTensor scale(const CanonicalTensor& x, double alpha) {
    std::vector<Matrix> factors(x.factors());
    factors[0] *= alpha;
    return CanonicalTensor(std::move(factors));
}

TtMatrix scale(const TtMatrix& a, double alpha) {
    std::vector<Matrix> cores(a.cores());
    cores[0] *= alpha;
    return TtMatrix(std::move(cores), a.row_shape().dims(), a.col_shape().dims());
}

TtTensor axpby(double alpha, const TtTensor& x, double beta, const TtTensor& y) {
    return add(scale(x, alpha), scale(y, beta));
}

// Convolution ------------------------------------------------------------------

Vector convolve_1d(const Vector& a, const Vector& b) {
    if (a.size() == 0 || b.size() == 0) throw std::invalid_argument("convolve_1d: empty input");
    const Index out_len = a.size() + b.size() - 1;
    // kissfft's real transform needs at least a few points
    const Index n = std::max<Index>(4, next_pow2(out_len));
    std::vector<double> pa(static_cast<std::size_t>(n), 0.0), pb(static_cast<std::size_t>(n), 0.0);
    std::copy(a.data(), a.data() + a.size(), pa.begin());
    std::copy(b.data(), b.data() + b.size(), pb.begin());
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> fa, fb;
    fft.fwd(fa, pa);
    fft.fwd(fb, pb);
    for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
    std::vector<double> out;
    fft.inv(out, fa);
    Vector result(out_len);
    for (Index k = 0; k < out_len; ++k) result(k) = out[static_cast<std::size_t>(k)];
    return result;
}

CanonicalTensor convolve_canonical(const CanonicalTensor& x, const CanonicalTensor& y) {
    require_same_shape(x.shape(), y.shape(), "convolve_canonical");
    std::vector<Matrix> factors;
    for (std::size_t l = 0; l < x.order(); ++l) {
        const Index n = x.shape()[l];
        Matrix f(2 * n - 1, x.rank() * y.rank());
        for (Index m = 0; m < y.rank(); ++m) {
            for (Index k = 0; k < x.rank(); ++k) f.col(k + x.rank() * m) = convolve_1d(x.factor(l).col(k), y.factor(l).col(m));
        }
        factors.push_back(std::move(f));
    }
    return CanonicalTensor(std::move(factors));
}

// Operators --------------------------------------------------------------------

TtTensor mpo_apply(const TtMatrix& a, const TtTensor& x) {
    if (!(a.col_shape() == x.shape())) throw std::invalid_argument("mpo_apply: operator columns do not match the tensor shape");
    std::vector<Matrix> cores;
    for (std::size_t l = 0; l < x.order(); ++l) {
        const Index m = a.row_shape()[l];
        const Index n = a.col_shape()[l];
        const Index rl = a.rank(l) * x.rank(l);
        const Index rr = a.rank(l + 1) * x.rank(l + 1);
        Matrix core = blank_core(rl, m, rr);
        for (Index j = 0; j < n; ++j) {
            const Matrix xs = x.slice(l, j);
            for (Index i = 0; i < m; ++i) {
                const auto as = a.slice(l, i, j);
                if (as.isZero(0.0)) continue;
                slice_of(core, rl, i) += kron_modes(Matrix(as), xs);
            }
        }
        cores.push_back(std::move(core));
    }
    return TtTensor(std::move(cores), a.row_shape().dims());
}

TtMatrix mpo_multiply(const TtMatrix& a, const TtMatrix& b) {
    if (!(a.col_shape() == b.row_shape())) throw std::invalid_argument("mpo_multiply: inner shapes differ");
    std::vector<Matrix> cores;
    for (std::size_t l = 0; l < a.order(); ++l) {
        const Index m = a.row_shape()[l];
        const Index k = a.col_shape()[l];
        const Index n = b.col_shape()[l];
        const Index rl = a.rank(l) * b.rank(l);
        const Index rr = a.rank(l + 1) * b.rank(l + 1);
        Matrix core = Matrix::Zero(rl * m * n, rr);
        for (Index j = 0; j < n; ++j) {
            for (Index i = 0; i < m; ++i) {
                auto target = core.middleRows(rl * (i + m * j), rl);
                for (Index p = 0; p < k; ++p) target += kron_modes(Matrix(a.slice(l, i, p)), Matrix(b.slice(l, p, j)));
            }
        }
        cores.push_back(std::move(core));
    }
    return TtMatrix(std::move(cores), a.row_shape().dims(), b.col_shape().dims());
}

TtMatrix transpose(const TtMatrix& a) {
    std::vector<Matrix> cores;
    for (std::size_t l = 0; l < a.order(); ++l) {
        const Index m = a.row_shape()[l];
        const Index n = a.col_shape()[l];
        const Index r = a.rank(l);
        Matrix core(a.core(l).rows(), a.core(l).cols());
        for (Index i = 0; i < m; ++i) {
            for (Index j = 0; j < n; ++j) core.middleRows(r * (j + n * i), r) = a.slice(l, i, j);
        }
        cores.push_back(std::move(core));
    }
    return TtMatrix(std::move(cores), a.col_shape().dims(), a.row_shape().dims());
}

TtTensor tt_concat(const TtTensor& a, const TtTensor& b) {
    std::vector<Matrix> cores(a.cores());
    cores.insert(cores.end(), b.cores().begin(), b.cores().end());
    std::vector<Index> dims = a.shape().dims();
    dims.insert(dims.end(), b.shape().dims().begin(), b.shape().dims().end());
    return TtTensor(std::move(cores), std::move(dims));
}

TtMatrix tt_concat(const TtMatrix& a, const TtMatrix& b) {
    std::vector<Matrix> cores(a.cores());
    cores.insert(cores.end(), b.cores().begin(), b.cores().end());
    std::vector<Index> rows = a.row_shape().dims();
    rows.insert(rows.end(), b.row_shape().dims().begin(), b.row_shape().dims().end());
    std::vector<Index> cols = a.col_shape().dims();
    cols.insert(cols.end(), b.col_shape().dims().begin(), b.col_shape().dims().end());
    return TtMatrix(std::move(cores), std::move(rows), std::move(cols));
}

TtMatrix diag_lift(const TtTensor& x) {
    std::vector<Matrix> cores;
    for (std::size_t l = 0; l < x.order(); ++l) {
        const Index n = x.shape()[l];
        const Index r = x.rank(l);
        Matrix core = Matrix::Zero(r * n * n, x.rank(l + 1));
        for (Index i = 0; i < n; ++i) core.middleRows(r * (i + n * i), r) = x.slice(l, i);
        cores.push_back(std::move(core));
    }
    return TtMatrix(std::move(cores), x.shape().dims(), x.shape().dims());
}

// FFT --------------------------------------------------------------------------

ComplexCanonical kron_factorized_fft_apply(const CanonicalTensor& x) {
    const Index n = x.shape()[0];
    for (Index m : x.shape().dims()) {
        if (m != n) throw std::invalid_argument("kron_factorized_fft_apply: mode sizes must be equal");
    }
    if (n < 1 || (n & (n - 1)) != 0) {
        throw std::invalid_argument("kron_factorized_fft_apply: mode size " + std::to_string(n) + " is not a power of two");
    }
    ComplexCanonical out;
    Eigen::FFT<double> fft;
    for (std::size_t l = 0; l < x.order(); ++l) {
        Matrix re(n, x.rank()), im(n, x.rank());
        for (Index a = 0; a < x.rank(); ++a) {
            std::vector<double> col(x.factor(l).col(a).data(), x.factor(l).col(a).data() + n);
            std::vector<std::complex<double>> spec;
            fft.fwd(spec, col);
            for (Index k = 0; k < n; ++k) {
                re(k, a) = spec[static_cast<std::size_t>(k)].real();
                im(k, a) = spec[static_cast<std::size_t>(k)].imag();
            }
        }
        out.re.push_back(std::move(re));
        out.im.push_back(std::move(im));
    }
    return out;
}

std::pair<DenseTensor, DenseTensor> to_dense(const ComplexCanonical& x) {
    std::vector<Index> dims;
    for (const auto& f : x.re) dims.push_back(f.rows());
    Shape shape(dims);
    check_budget(2 * shape.size(), "to_dense(complex canonical)");
    using CMatrix = Eigen::MatrixXcd;
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(shape.size());
    for (Index a = 0; a < x.rank(); ++a) {
        Eigen::VectorXcd running = Eigen::VectorXcd::Ones(1);
        for (std::size_t l = 0; l < x.re.size(); ++l) {
            Eigen::VectorXcd f(x.re[l].rows());
            f.real() = x.re[l].col(a);
            f.imag() = x.im[l].col(a);
            CMatrix k = Eigen::kroneckerProduct(f, running);
            running = k;
        }
        acc += running;
    }
    std::vector<double> re(static_cast<std::size_t>(shape.size())), im(re.size());
    for (Index k = 0; k < shape.size(); ++k) {
        re[static_cast<std::size_t>(k)] = acc(k).real();
        im[static_cast<std::size_t>(k)] = acc(k).imag();
    }
    return {DenseTensor(shape, std::move(re)), DenseTensor(shape, std::move(im))};
}

}  // namespace qtt
