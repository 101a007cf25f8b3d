#include "qttkit/decompose.hpp"

#include <cmath>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace qtt {

TruncationPolicy::TruncationPolicy(double eps, std::optional<Index> cap) : epsilon(eps), max_rank(cap) {
    if (!(epsilon >= 0.0)) throw std::invalid_argument("TruncationPolicy: epsilon must be >= 0");
    if (max_rank && *max_rank < 1) throw std::invalid_argument("TruncationPolicy: rank cap must be >= 1");
}

SvdResult svd(const Matrix& m) {
    if (!m.allFinite()) throw std::invalid_argument("svd: matrix has non-finite entries");
    SvdResult out;
    if (m.rows() == 0 || m.cols() == 0) {
        out.u = Matrix::Zero(m.rows(), 0);
        out.v = Matrix::Zero(m.cols(), 0);
        return out;
    }
    Eigen::BDCSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (solver.info() != Eigen::Success) {
        throw ConvergenceError("svd: bidiagonal SVD did not converge for a " + std::to_string(m.rows()) + "x" +
                               std::to_string(m.cols()) + " matrix");
    }
    out.u = solver.matrixU();
    out.sigma = solver.singularValues();
    out.v = solver.matrixV();
    for (Index k = 0; k < out.u.cols(); ++k) {
        for (Index i = 0; i < out.u.rows(); ++i) {
            const double value = out.u(i, k);
            if (std::abs(value) > 1e-12) {
                if (value < 0) {
                    out.u.col(k) *= -1.0;
                    out.v.col(k) *= -1.0;
                }
                break;
            }
        }
    }
    out.rank = out.sigma.size();
    return out;
}

Index truncation_rank(const Vector& sigma, double delta, std::optional<Index> max_rank) {
    const Index n = sigma.size();
    Index r = n;
    double tail = 0.0;
    while (r > 1) {
        const double next = tail + sigma(r - 1) * sigma(r - 1);
        if (std::sqrt(next) > delta) break;
        tail = next;
        --r;
    }
    if (max_rank) r = std::min(r, *max_rank);
    return std::max<Index>(r, 1);
}

namespace {

double step_delta(const TruncationPolicy& policy, double norm, std::size_t order) {
    const double steps = order > 1 ? static_cast<double>(order - 1) : 1.0;
    return policy.epsilon / std::sqrt(steps) * norm;
}

}  // namespace

TtTensor tt_svd(const DenseTensor& x, const TruncationPolicy& policy) {
    const std::size_t d = x.order();
    const auto& dims = x.shape().dims();
    const double delta = step_delta(policy, x.norm(), d);
    std::vector<Matrix> cores;
    Index r = 1;
    Matrix rest = Eigen::Map<const Matrix>(x.values().data(), dims[0], x.size() / dims[0]);
    for (std::size_t l = 0; l + 1 < d; ++l) {
        // rest is (r * N_l) x (N_{l+1} ... N_d)
        SvdResult s = svd(rest);
        const Index keep = truncation_rank(s.sigma, delta, policy.max_rank);
        cores.push_back(s.u.leftCols(keep));
        Matrix next = s.sigma.head(keep).asDiagonal() * s.v.leftCols(keep).transpose();
        r = keep;
        const Index cols = next.cols() / dims[l + 1];
        next.resize(r * dims[l + 1], cols);
        rest = std::move(next);
    }
    cores.push_back(std::move(rest));
    std::vector<Orthogonality> orth(d, Orthogonality::left);
    orth.back() = Orthogonality::none;
    return TtTensor(std::move(cores), dims, std::move(orth));
}

TtTensor orthogonalize_right(const TtTensor& x) {
    const std::size_t d = x.order();
    std::vector<Matrix> cores(x.cores());
    std::vector<Index> ranks = x.ranks();
    for (std::size_t l = d - 1; l > 0; --l) {
        const Index n = x.shape()[l];
        // right unfolding r_{l-1} x (n r_l); QR of its transpose.
        Eigen::Map<const Matrix> ru(cores[l].data(), ranks[l], n * ranks[l + 1]);
        Eigen::HouseholderQR<Matrix> qr(ru.transpose());
        const Index k = std::min(ru.rows(), ru.cols());
        Matrix q = qr.householderQ() * Matrix::Identity(ru.cols(), k);
        Matrix rt = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();  // k x r_{l-1}
        Matrix new_core = q.transpose();  // k x (n r_l)
        new_core.resize(k * n, ranks[l + 1]);
        cores[l] = std::move(new_core);
        // previous core absorbs R^T: (r_{l-2} n_{l-1}) x r_{l-1} times r_{l-1} x k
        cores[l - 1] = cores[l - 1] * rt.transpose();
        ranks[l] = k;
    }
    std::vector<Orthogonality> orth(d, Orthogonality::right);
    orth.front() = Orthogonality::none;
    return TtTensor(std::move(cores), x.shape().dims(), std::move(orth));
}

TtTensor orthogonalize_left(const TtTensor& x) {
    const std::size_t d = x.order();
    std::vector<Matrix> cores(x.cores());
    for (std::size_t l = 0; l + 1 < d; ++l) {
        Eigen::HouseholderQR<Matrix> qr(cores[l]);
        const Index k = std::min(cores[l].rows(), cores[l].cols());
        Matrix q = qr.householderQ() * Matrix::Identity(cores[l].rows(), k);
        Matrix rr = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
        const Index n = x.shape()[l + 1];
        const Index r_old = cores[l].cols();
        Eigen::Map<const Matrix> ru(cores[l + 1].data(), r_old, n * (cores[l + 1].size() / (r_old * n)));
        Matrix next = rr * ru;  // k x (n r_{l+1})
        next.resize(k * n, ru.cols() / n);
        cores[l] = std::move(q);
        cores[l + 1] = std::move(next);
    }
    std::vector<Orthogonality> orth(d, Orthogonality::left);
    orth.back() = Orthogonality::none;
    return TtTensor(std::move(cores), x.shape().dims(), std::move(orth));
}

double tt_norm(const TtTensor& x) {
    const TtTensor y = orthogonalize_left(x);
    return y.core(y.order() - 1).norm();
}

namespace {

// One right-to-left orthogonalization and left-to-right truncation sweep. The left
// part stays orthogonal, so the squared error is the sum of the squared tails.
TtTensor round_pass(const TtTensor& x, const TruncationPolicy& policy, double& error, double& norm) {
    const std::size_t d = x.order();
    TtTensor y = orthogonalize_right(x);
    std::vector<Matrix> cores(y.cores());
    norm = cores[0].norm();
    const double delta = step_delta(policy, norm, d);
    double err2 = 0.0;
    for (std::size_t l = 0; l + 1 < d; ++l) {
        SvdResult s = svd(cores[l]);
        const Index keep = truncation_rank(s.sigma, delta, policy.max_rank);
        err2 += s.sigma.tail(s.sigma.size() - keep).squaredNorm();
        cores[l] = s.u.leftCols(keep);
        const Matrix carry = s.sigma.head(keep).asDiagonal() * s.v.leftCols(keep).transpose();  // keep x r_l
        const Index n = x.shape()[l + 1];
        const Index r_old = carry.cols();
        Eigen::Map<const Matrix> ru(cores[l + 1].data(), r_old, cores[l + 1].size() / r_old);
        Matrix next = carry * ru;
        next.resize(keep * n, next.cols() / n);
        cores[l + 1] = std::move(next);
    }
    error = std::sqrt(err2);
    std::vector<Orthogonality> orth(d, Orthogonality::left);
    orth.back() = Orthogonality::none;
    return TtTensor(std::move(cores), x.shape().dims(), std::move(orth));
}

}  // namespace

TtTensor tt_round(const TtTensor& x, const TruncationPolicy& policy) {
    if (x.order() == 1) return x;
    double error = 0.0, norm = 0.0;
    return round_pass(x, policy, error, norm);
}

TtMatrix tt_round(const TtMatrix& a, const TruncationPolicy& policy) {
    const TtTensor t = tt_round(as_tensor(a), policy);
    return as_matrix(t, a.row_shape().dims(), a.col_shape().dims());
}

// Unfoldings ----------------------------------------------------------------

Matrix mode_unfolding(const DenseTensor& x, std::size_t mode) {
    const auto& dims = x.shape().dims();
    Index left = 1;
    for (std::size_t k = 0; k < mode; ++k) left *= dims[k];
    const Index n = dims[mode];
    const Index right = x.size() / (left * n);
    Matrix out(n, left * right);
    for (Index r = 0; r < right; ++r) {
        Eigen::Map<const Matrix> slab(x.values().data() + r * left * n, left, n);
        out.middleCols(r * left, left) = slab.transpose();
    }
    return out;
}

Matrix tt_unfolding(const DenseTensor& x, std::size_t p) {
    Index rows = 1;
    for (std::size_t k = 0; k < p; ++k) rows *= x.shape()[k];
    return Eigen::Map<const Matrix>(x.values().data(), rows, x.size() / rows);
}

// Tucker --------------------------------------------------------------------

namespace {

std::vector<double> multiply_mode(const std::vector<double>& data, const std::vector<Index>& dims,
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

TuckerTensor hosvd(const DenseTensor& x, const TruncationPolicy& policy) {
    const std::size_t d = x.order();
    const double delta = policy.epsilon / std::sqrt(static_cast<double>(d)) * x.norm();
    std::vector<Matrix> factors;
    std::vector<double> core = x.values();
    std::vector<Index> dims = x.shape().dims();
    for (std::size_t l = 0; l < d; ++l) {
        SvdResult s = svd(mode_unfolding(x, l));
        Index keep = truncation_rank(s.sigma, delta, policy.max_rank);
        keep = std::min(keep, s.u.cols());
        factors.push_back(s.u.leftCols(keep));
    }
    for (std::size_t l = 0; l < d; ++l) {
        core = multiply_mode(core, dims, l, factors[l].transpose());
        dims[l] = factors[l].cols();
    }
    return TuckerTensor(DenseTensor(Shape(dims), std::move(core)), std::move(factors), true);
}

RhosvdResult rhosvd(const CanonicalTensor& x, const TruncationPolicy& policy) {
    if (x.rank() < 1) throw std::invalid_argument("rhosvd: canonical rank must be >= 1");
    const std::size_t d = x.order();
    const Index R = x.rank();

    // Normalize columns: x = sum_a xi_a (x)_l a^l_a with unit a^l_a.
    std::vector<Matrix> unit(d);
    Vector xi = Vector::Ones(R);
    for (std::size_t l = 0; l < d; ++l) {
        unit[l] = x.factor(l);
        for (Index a = 0; a < R; ++a) {
            const double nrm = unit[l].col(a).norm();
            xi(a) *= nrm;
            if (nrm > 0) unit[l].col(a) /= nrm;
        }
    }
    // ||x||^2 from Gram matrices, never forming the full array.
    Matrix gram = Matrix::Ones(R, R);
    for (std::size_t l = 0; l < d; ++l) gram.array() *= (x.factor(l).transpose() * x.factor(l)).array();
    const double norm = std::sqrt(std::max(0.0, gram.sum()));
    const double xi_norm = xi.norm();
    const double per_mode = xi_norm > 0 ? policy.epsilon * norm / (static_cast<double>(d) * xi_norm) : 0.0;

    std::vector<Matrix> factors(d);
    double bound_sum = 0.0;
    for (std::size_t l = 0; l < d; ++l) {
        SvdResult s = svd(unit[l]);
        Index keep = truncation_rank(s.sigma, per_mode, policy.max_rank);
        keep = std::min(keep, s.u.cols());
        double tail = 0.0;
        for (Index k = keep; k < s.sigma.size(); ++k) tail += s.sigma(k) * s.sigma(k);
        bound_sum += std::sqrt(tail);
        factors[l] = s.u.leftCols(keep);
    }

    // Core = sum_a xi_a (x)_l (U_l^T a^l_a), assembled as a small dense array.
    std::vector<Index> core_dims;
    std::vector<Matrix> projected(d);
    for (std::size_t l = 0; l < d; ++l) {
        projected[l] = factors[l].transpose() * unit[l];
        core_dims.push_back(factors[l].cols());
    }
    projected[0] = projected[0] * xi.asDiagonal();
    const DenseTensor core = to_dense(CanonicalTensor(projected));

    RhosvdResult out{TuckerTensor(core, std::move(factors), true), xi_norm * bound_sum};
    return out;
}

TtTensor canonical_to_tt(const CanonicalTensor& x) {
    const std::size_t d = x.order();
    const Index R = x.rank();
    if (R == 0) return TtTensor::zero(x.shape());
    if (d == 1) return TtTensor({x.factor(0).rowwise().sum()}, x.shape().dims());
    std::vector<Matrix> cores;
    cores.push_back(x.factor(0));  // (1 * N) x R
    for (std::size_t l = 1; l + 1 < d; ++l) {
        const Index n = x.shape()[l];
        Matrix c = Matrix::Zero(R * n, R);
        for (Index i = 0; i < n; ++i) {
            for (Index a = 0; a < R; ++a) c(a + R * i, a) = x.factor(l)(i, a);
        }
        cores.push_back(std::move(c));
    }
    {
        const Index n = x.shape()[d - 1];
        Matrix c(R * n, 1);
        for (Index i = 0; i < n; ++i) {
            for (Index a = 0; a < R; ++a) c(a + R * i, 0) = x.factor(d - 1)(i, a);
        }
        cores.push_back(std::move(c));
    }
    return TtTensor(std::move(cores), x.shape().dims());
}

TtMatrix canonical_to_tt(const CanonicalOperator& a) {
    const std::size_t d = a.order();
    // Vectorize each per-mode matrix column-major (i fastest), matching the
    // combined mode index i + M j of TT-matrix cores.
    std::vector<Matrix> factors(d);
    for (std::size_t l = 0; l < d; ++l) {
        const Index m = a.row_shape()[l] * a.col_shape()[l];
        factors[l].resize(m, a.rank());
        for (Index alpha = 0; alpha < a.rank(); ++alpha) {
            factors[l].col(alpha) = Eigen::Map<const Vector>(a.term(alpha)[l].data(), m);
        }
    }
    if (a.rank() == 0) {
        std::vector<Index> dims;
        for (std::size_t l = 0; l < d; ++l) dims.push_back(a.row_shape()[l] * a.col_shape()[l]);
        return as_matrix(TtTensor::zero(Shape(dims)), a.row_shape().dims(), a.col_shape().dims());
    }
    const TtTensor t = canonical_to_tt(CanonicalTensor(std::move(factors)));
    return as_matrix(t, a.row_shape().dims(), a.col_shape().dims());
}

}  // namespace qtt
