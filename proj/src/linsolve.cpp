#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/QR>
#include <unsupported/Eigen/IterativeSolvers>

#include "qttkit/algebra.hpp"
#include "qttkit/dynamics.hpp"

namespace qtt {

namespace {

using Iface = std::vector<Matrix>;  // one (test rank x trial rank) matrix per operator rank index

Iface unit_iface() {
    return {Matrix::Ones(1, 1)};
}

// Nonzero (i, j) slices of an operator core.
struct SliceList {
    std::vector<std::pair<Index, Index>> ij;
    std::vector<Matrix> blocks;  // r_{k} x r_{k+1}
};

SliceList nonzero_slices(const TtMatrix& a, std::size_t k) {
    SliceList s;
    for (Index j = 0; j < a.col_shape()[k]; ++j)
        for (Index i = 0; i < a.row_shape()[k]; ++i) {
            Matrix blk = a.slice(k, i, j);
            if (blk.cwiseAbs().maxCoeff() == 0.0) continue;
            s.ij.emplace_back(i, j);
            s.blocks.push_back(std::move(blk));
        }
    return s;
}

auto row_slice(const Matrix& core, Index r, Index i) {
    return core.middleRows(r * i, r);
}

// y_i = sum A(a, i, j, b) L[a] V_j R[b]^T for a core V with left rank rv, result rank (rl, rr).
Matrix local_apply(const SliceList& s, Index n_rows, const Iface& left, const Matrix& v, Index rv,
                   const Iface& right) {
    const Index rl = left[0].rows();
    const Index rr = right[0].rows();
    Matrix y = Matrix::Zero(rl * n_rows, rr);
    const Index ra = static_cast<Index>(left.size());
    const Index rb = static_cast<Index>(right.size());
    for (std::size_t t = 0; t < s.ij.size(); ++t) {
        const auto [i, j] = s.ij[t];
        const Matrix& blk = s.blocks[t];
        auto vj = row_slice(v, rv, j);
        for (Index a = 0; a < ra; ++a) {
            bool any = false;
            for (Index b = 0; b < rb; ++b) any = any || blk(a, b) != 0.0;
            if (!any) continue;
            const Matrix lv = left[static_cast<std::size_t>(a)] * vj;  // rl x rv2
            for (Index b = 0; b < rb; ++b) {
                if (blk(a, b) == 0.0) continue;
                y.middleRows(rl * i, rl).noalias() += blk(a, b) * (lv * right[static_cast<std::size_t>(b)].transpose());
            }
        }
    }
    return y;
}

// f_i = L b_i R^T
Matrix local_rhs(const Matrix& left, const Matrix& bcore, Index rb, Index n, const Matrix& right) {
    Matrix f(left.rows() * n, right.rows());
    for (Index i = 0; i < n; ++i)
        f.middleRows(left.rows() * i, left.rows()) = left * row_slice(bcore, rb, i) * right.transpose();
    return f;
}

Iface left_step(const SliceList& s, Index rb_next, const Iface& phi, const Matrix& w, Index rw, const Matrix& x,
                Index rx) {
    Iface out(static_cast<std::size_t>(rb_next), Matrix::Zero(w.cols(), x.cols()));
    const Index ra = static_cast<Index>(phi.size());
    for (std::size_t t = 0; t < s.ij.size(); ++t) {
        const auto [i, j] = s.ij[t];
        const Matrix& blk = s.blocks[t];
        auto wi = row_slice(w, rw, i);
        auto xj = row_slice(x, rx, j);
        for (Index a = 0; a < ra; ++a) {
            bool any = false;
            for (Index b = 0; b < rb_next; ++b) any = any || blk(a, b) != 0.0;
            if (!any) continue;
            const Matrix m = wi.transpose() * phi[static_cast<std::size_t>(a)] * xj;
            for (Index b = 0; b < rb_next; ++b)
                if (blk(a, b) != 0.0) out[static_cast<std::size_t>(b)].noalias() += blk(a, b) * m;
        }
    }
    return out;
}

Iface right_step(const SliceList& s, Index ra_prev, const Iface& phi, const Matrix& w, Index rw, const Matrix& x,
                 Index rx) {
    Iface out(static_cast<std::size_t>(ra_prev), Matrix::Zero(rw, rx));
    const Index rb = static_cast<Index>(phi.size());
    for (std::size_t t = 0; t < s.ij.size(); ++t) {
        const auto [i, j] = s.ij[t];
        const Matrix& blk = s.blocks[t];
        auto wi = row_slice(w, rw, i);
        auto xj = row_slice(x, rx, j);
        for (Index b = 0; b < rb; ++b) {
            bool any = false;
            for (Index a = 0; a < ra_prev; ++a) any = any || blk(a, b) != 0.0;
            if (!any) continue;
            const Matrix m = wi * phi[static_cast<std::size_t>(b)] * xj.transpose();
            for (Index a = 0; a < ra_prev; ++a)
                if (blk(a, b) != 0.0) out[static_cast<std::size_t>(a)].noalias() += blk(a, b) * m;
        }
    }
    return out;
}

Matrix left_rhs_step(const Matrix& psi, const Matrix& w, Index rw, const Matrix& b, Index rb, Index n) {
    Matrix out = Matrix::Zero(w.cols(), b.cols());
    for (Index i = 0; i < n; ++i) out.noalias() += row_slice(w, rw, i).transpose() * psi * row_slice(b, rb, i);
    return out;
}

Matrix right_rhs_step(const Matrix& psi, const Matrix& w, Index rw, const Matrix& b, Index rb, Index n) {
    Matrix out = Matrix::Zero(rw, rb);
    for (Index i = 0; i < n; ++i) out.noalias() += row_slice(w, rw, i) * psi * row_slice(b, rb, i).transpose();
    return out;
}

// Dense local matrix sum_b kron(R[b], sum_a kron(A_ab, L[a])).
Matrix local_dense(const SliceList& s, Index n, const Iface& left, const Iface& right) {
    const Index rl = left[0].rows(), rr = right[0].rows();
    const Index m = rl * n * rr;
    Matrix out = Matrix::Zero(m, m);
    const Index ra = static_cast<Index>(left.size());
    const Index rb = static_cast<Index>(right.size());
    for (Index b = 0; b < rb; ++b) {
        Matrix sb = Matrix::Zero(rl * n, rl * n);
        bool any = false;
        for (std::size_t t = 0; t < s.ij.size(); ++t) {
            const auto [i, j] = s.ij[t];
            for (Index a = 0; a < ra; ++a) {
                const double c = s.blocks[t](a, b);
                if (c == 0.0) continue;
                sb.block(rl * i, rl * j, rl, rl) += c * left[static_cast<std::size_t>(a)];
                any = true;
            }
        }
        if (!any) continue;
        const Matrix& r = right[static_cast<std::size_t>(b)];
        for (Index q = 0; q < rr; ++q)
            for (Index p = 0; p < rr; ++p) {
                if (r(p, q) == 0.0) continue;
                out.block(p * rl * n, q * rl * n, rl * n, rl * n) += r(p, q) * sb;
            }
    }
    return out;
}

struct LocalProblem {
    const SliceList* slices;
    Index n;
    const Iface* left;
    const Iface* right;
    Index rl, rr;

    Vector apply(const Vector& v) const {
        const Matrix core = Eigen::Map<const Matrix>(v.data(), rl * n, rr);
        const Matrix y = local_apply(*slices, n, *left, core, rl, *right);
        return Eigen::Map<const Vector>(y.data(), y.size());
    }
};

}  // namespace
}  // namespace qtt

// Matrix-free operator for Eigen's GMRES.
namespace qtt::detail {
class LocalOperator;
}

namespace Eigen::internal {
template <>
struct traits<qtt::detail::LocalOperator> : public Eigen::internal::traits<Eigen::SparseMatrix<double>> {};
}  // namespace Eigen::internal

namespace qtt::detail {
class LocalOperator : public Eigen::EigenBase<LocalOperator> {
public:
    using Scalar = double;
    using RealScalar = double;
    using StorageIndex = int;
    enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

    explicit LocalOperator(const LocalProblem& p) : problem_(&p) {}
    Eigen::Index rows() const { return problem_->rl * problem_->n * problem_->rr; }
    Eigen::Index cols() const { return rows(); }

    template <typename Rhs>
    Eigen::Product<LocalOperator, Rhs, Eigen::AliasFreeProduct> operator*(const Eigen::MatrixBase<Rhs>& x) const {
        return Eigen::Product<LocalOperator, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
    }
    const LocalProblem& problem() const { return *problem_; }

private:
    const LocalProblem* problem_;
};
}  // namespace qtt::detail

namespace Eigen::internal {
template <typename Rhs>
struct generic_product_impl<qtt::detail::LocalOperator, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<qtt::detail::LocalOperator, Rhs,
                                generic_product_impl<qtt::detail::LocalOperator, Rhs>> {
    template <typename Dest>
    static void scaleAndAddTo(Dest& dst, const qtt::detail::LocalOperator& lhs, const Rhs& rhs, const double& alpha) {
        dst.noalias() += alpha * lhs.problem().apply(rhs);
    }
};
}  // namespace Eigen::internal

namespace qtt {

namespace {

Vector solve_local(const LocalProblem& p, const Vector& f, const Vector& guess, double tol, Index dense_limit) {
    const Index m = f.size();
    if (m <= dense_limit) {
        const Matrix b = local_dense(*p.slices, p.n, *p.left, *p.right);
        return b.colPivHouseholderQr().solve(f);
    }
    detail::LocalOperator op(p);
    Eigen::GMRES<detail::LocalOperator, Eigen::IdentityPreconditioner> gmres;
    gmres.compute(op);
    gmres.setTolerance(tol);
    gmres.set_restart(40);
    gmres.setMaxIterations(400);
    return gmres.solveWithGuess(f, guess);
}

TtTensor random_train(const Shape& shape, Index rank, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    const std::size_t d = shape.order();
    std::vector<Matrix> cores;
    for (std::size_t l = 0; l < d; ++l) {
        const Index r0 = l == 0 ? 1 : rank;
        const Index r1 = l + 1 == d ? 1 : rank;
        Matrix c(r0 * shape[l], r1);
        for (Index q = 0; q < c.size(); ++q) c.data()[q] = nd(rng);
        cores.push_back(std::move(c));
    }
    return TtTensor(std::move(cores), shape.dims());
}

// G'(b, i, a) = G(a, i, b)
Matrix reverse_core(const Matrix& c, Index r0, Index n, Index r1) {
    Matrix out(r1 * n, r0);
    for (Index i = 0; i < n; ++i) out.middleRows(r1 * i, r1) = c.middleRows(r0 * i, r0).transpose();
    return out;
}

template <class T>
void reverse_vec(std::vector<T>& v) {
    std::reverse(v.begin(), v.end());
}

// Operator, right-hand side and conserved vector in the current sweep direction.
struct Problem {
    std::size_t d = 0;
    std::vector<Index> n;
    std::vector<SliceList> slices;
    std::vector<Index> ra;
    std::vector<Matrix> b;
    std::vector<Index> rb;
    std::vector<Vector> conserved;  // rank-1 factors, empty if unused

    void reverse() {
        for (std::size_t k = 0; k < d; ++k) {
            for (auto& blk : slices[k].blocks) blk.transposeInPlace();
            b[k] = reverse_core(b[k], rb[k], n[k], rb[k + 1]);
        }
        reverse_vec(n);
        reverse_vec(slices);
        reverse_vec(ra);
        reverse_vec(b);
        reverse_vec(rb);
        reverse_vec(conserved);
    }
};

struct Iterate {
    std::vector<Matrix> x, z;
    std::vector<Index> rx, rz;
    std::vector<Iface> xax_l, xax_r, zax_l, zax_r;
    std::vector<Matrix> xb_l, xb_r, zb_l, zb_r;

    void reverse(const std::vector<Index>& n) {
        const std::size_t d = x.size();
        for (std::size_t k = 0; k < d; ++k) {
            x[k] = reverse_core(x[k], rx[k], n[k], rx[k + 1]);
            z[k] = reverse_core(z[k], rz[k], n[k], rz[k + 1]);
        }
        reverse_vec(x);
        reverse_vec(z);
        reverse_vec(rx);
        reverse_vec(rz);
        std::swap(xax_l, xax_r);
        std::swap(zax_l, zax_r);
        std::swap(xb_l, xb_r);
        std::swap(zb_l, zb_r);
        reverse_vec(xax_l);
        reverse_vec(xax_r);
        reverse_vec(zax_l);
        reverse_vec(zax_r);
        reverse_vec(xb_l);
        reverse_vec(xb_r);
        reverse_vec(zb_l);
        reverse_vec(zb_r);
    }
};

double residual_norm(const LocalProblem& p, const Matrix& v, const Matrix& f) {
    const Vector vv = Eigen::Map<const Vector>(v.data(), v.size());
    const Vector fv = Eigen::Map<const Vector>(f.data(), f.size());
    return (p.apply(vv) - fv).norm();
}

// One left-to-right pass. Cores right of the current one must be right-orthogonal with
// valid right interfaces. Returns the largest relative local residual met before the solves.
double forward_sweep(const Problem& pr, Iterate& it, const LinsolveOptions& options, double trunc) {
    const std::size_t d = pr.d;
    const Index kick = options.kick_rank;
    const bool conserve = !pr.conserved.empty();
    Vector c = Vector::Ones(1);  // conserved vector in the current left basis
    double max_res = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        const Index n = pr.n[k];
        const Matrix f = local_rhs(it.xb_l[k], pr.b[k], pr.rb[k], n, it.xb_r[k + 1]);
        const LocalProblem prob{&pr.slices[k], n, &it.xax_l[k], &it.xax_r[k + 1], it.rx[k], it.rx[k + 1]};
        const double nf = f.norm();
        Matrix v = Matrix::Zero(f.rows(), f.cols());
        if (nf > 0) {
            max_res = std::max(max_res, residual_norm(prob, it.x[k], f) / nf);
            const Vector fv = Eigen::Map<const Vector>(f.data(), f.size());
            const Vector old = Eigen::Map<const Vector>(it.x[k].data(), it.x[k].size());
            const Vector sol = solve_local(prob, fv, old, 0.1 * options.tol, options.dense_limit);
            v = Eigen::Map<const Matrix>(sol.data(), f.rows(), f.cols());
        }
        const Matrix zb = local_rhs(it.zb_l[k], pr.b[k], pr.rb[k], n, it.zb_r[k + 1]);

        if (k + 1 == d) {
            it.x[k] = v;
            it.z[k] = zb - local_apply(pr.slices[k], n, it.zax_l[k], v, it.rx[k], it.zax_r[k + 1]);
            break;
        }

        // smallest rank whose local residual stays near the untruncated one
        const SvdResult s = svd(v);
        const Index full = std::max<Index>(1, std::min<Index>(s.sigma.size(), options.max_rank.value_or(s.sigma.size())));
        Index keep = std::min(full, std::max<Index>(1, truncation_rank(s.sigma,
                                                                        trunc / std::sqrt(static_cast<double>(d)) * s.sigma.norm(),
                                                                        options.max_rank)));
        Matrix vt;
        if (nf > 0) {
            const double target = std::max(options.tol * nf, 2.0 * residual_norm(prob, v, f));
            for (;;) {
                vt = s.u.leftCols(keep) * s.sigma.head(keep).asDiagonal() * s.v.leftCols(keep).transpose();
                if (keep >= full || residual_norm(prob, vt, f) <= target) break;
                keep = std::min(full, keep + std::max<Index>(1, keep / 8));
            }
        } else {
            vt = s.u.leftCols(keep) * s.sigma.head(keep).asDiagonal() * s.v.leftCols(keep).transpose();
        }
        const Matrix u = s.u.leftCols(keep);
        const Matrix sv = s.sigma.head(keep).asDiagonal() * s.v.leftCols(keep).transpose();

        const Matrix zloc = zb - local_apply(pr.slices[k], n, it.zax_l[k], vt, it.rx[k], it.zax_r[k + 1]);
        {
            const SvdResult zs = svd(zloc);
            const Index kz = std::max<Index>(1, std::min<Index>(std::max<Index>(kick, 1), zs.u.cols()));
            it.z[k] = zs.u.leftCols(kz);
        }

        Matrix aug = u;
        Vector cw;
        if (conserve) {
            cw = Vector(it.rx[k] * n);
            for (Index i = 0; i < n; ++i) cw.segment(it.rx[k] * i, it.rx[k]) = c * pr.conserved[k](i);
            aug.conservativeResize(Eigen::NoChange, aug.cols() + 1);
            aug.rightCols(1) = cw;
        }
        if (kick > 0) {
            const Matrix enr = local_rhs(it.xb_l[k], pr.b[k], pr.rb[k], n, it.zb_r[k + 1]) -
                               local_apply(pr.slices[k], n, it.xax_l[k], vt, it.rx[k], it.zax_r[k + 1]);
            const Index c0 = aug.cols();
            aug.conservativeResize(Eigen::NoChange, c0 + enr.cols());
            aug.rightCols(enr.cols()) = enr;
        }
        Eigen::HouseholderQR<Matrix> qr(aug);
        const Index rnew = std::min(aug.rows(), aug.cols());
        Matrix q = qr.householderQ() * Matrix::Identity(aug.rows(), rnew);
        const Matrix carry = q.transpose() * u * sv;  // rnew x rx[k+1]
        if (conserve) c = q.transpose() * cw;
        const Index n1 = pr.n[k + 1];
        Eigen::Map<const Matrix> next_ru(it.x[k + 1].data(), it.rx[k + 1], n1 * it.rx[k + 2]);
        Matrix next = carry * next_ru;
        next.resize(rnew * n1, it.rx[k + 2]);
        it.x[k] = std::move(q);
        it.x[k + 1] = std::move(next);
        it.rx[k + 1] = rnew;
        it.rz[k + 1] = it.z[k].cols();

        it.xax_l[k + 1] = left_step(pr.slices[k], pr.ra[k + 1], it.xax_l[k], it.x[k], it.rx[k], it.x[k], it.rx[k]);
        it.zax_l[k + 1] = left_step(pr.slices[k], pr.ra[k + 1], it.zax_l[k], it.z[k], it.rz[k], it.x[k], it.rx[k]);
        it.xb_l[k + 1] = left_rhs_step(it.xb_l[k], it.x[k], it.rx[k], pr.b[k], pr.rb[k], n);
        it.zb_l[k + 1] = left_rhs_step(it.zb_l[k], it.z[k], it.rz[k], pr.b[k], pr.rb[k], n);
    }
    return max_res;
}

}  // namespace

double tt_residual(const TtMatrix& a, const TtTensor& x, const TtTensor& b) {
    const double nb = tt_norm(b);
    const TtTensor r = axpby(1.0, mpo_apply(a, x), -1.0, b);
    const double nr = tt_norm(r);
    return nb > 0 ? nr / nb : nr;
}

LinsolveResult tt_linsolve(const TtMatrix& a, const TtTensor& b, const LinsolveOptions& options,
                           const std::optional<TtTensor>& x0) {
    const std::size_t d = b.order();
    if (a.order() != d) throw std::invalid_argument("tt_linsolve: operator and right-hand side orders differ");
    for (std::size_t l = 0; l < d; ++l) {
        if (a.row_shape()[l] != a.col_shape()[l] || a.row_shape()[l] != b.shape()[l])
            throw std::invalid_argument("tt_linsolve: operator must be square and match the right-hand side");
    }
    if (options.tol <= 0 || options.max_sweeps < 1 || options.kick_rank < 0)
        throw std::invalid_argument("tt_linsolve: bad options");
    if (options.conserved && (options.conserved->shape().dims() != b.shape().dims() || options.conserved->max_rank() != 1))
        throw std::invalid_argument("tt_linsolve: conserved vector must be rank 1 with the shape of b");
    if (x0 && x0->shape().dims() != b.shape().dims()) throw std::invalid_argument("tt_linsolve: bad initial guess");
    const double trunc = options.truncation < 0 ? options.tol : options.truncation;

    LinsolveResult result;
    if (tt_norm(b) == 0.0) {
        result.x = TtTensor::zero(b.shape());
        result.converged = true;
        return result;
    }

    Problem pr;
    pr.d = d;
    pr.n = b.shape().dims();
    for (std::size_t k = 0; k < d; ++k) pr.slices.push_back(nonzero_slices(a, k));
    pr.ra = a.ranks();
    pr.b = b.cores();
    pr.rb = b.ranks();
    if (options.conserved) {
        for (std::size_t k = 0; k < d; ++k) pr.conserved.push_back(options.conserved->core(k).col(0));
    }

    Iterate it;
    {
        const TtTensor x = orthogonalize_right(x0 ? *x0 : b);
        const TtTensor z = orthogonalize_right(random_train(b.shape(), std::max<Index>(options.kick_rank, 1), options.seed));
        it.x = x.cores();
        it.rx = x.ranks();
        it.z = z.cores();
        it.rz = z.ranks();
    }
    it.xax_l.resize(d + 1);
    it.xax_r.resize(d + 1);
    it.zax_l.resize(d + 1);
    it.zax_r.resize(d + 1);
    it.xb_l.resize(d + 1);
    it.xb_r.resize(d + 1);
    it.zb_l.resize(d + 1);
    it.zb_r.resize(d + 1);
    it.xax_r[d] = it.zax_r[d] = it.xax_l[0] = it.zax_l[0] = unit_iface();
    it.xb_r[d] = it.zb_r[d] = it.xb_l[0] = it.zb_l[0] = Matrix::Ones(1, 1);
    for (std::size_t k = d - 1; k > 0; --k) {
        it.xax_r[k] = right_step(pr.slices[k], pr.ra[k], it.xax_r[k + 1], it.x[k], it.rx[k], it.x[k], it.rx[k]);
        it.zax_r[k] = right_step(pr.slices[k], pr.ra[k], it.zax_r[k + 1], it.z[k], it.rz[k], it.x[k], it.rx[k]);
        it.xb_r[k] = right_rhs_step(it.xb_r[k + 1], it.x[k], it.rx[k], pr.b[k], pr.rb[k], pr.n[k]);
        it.zb_r[k] = right_rhs_step(it.zb_r[k + 1], it.z[k], it.rz[k], pr.b[k], pr.rb[k], pr.n[k]);
    }

    bool reversed = false;
    auto current = [&]() {
        std::vector<Matrix> cores = it.x;
        std::vector<Index> rx = it.rx;
        std::vector<Index> n = pr.n;
        if (reversed) {
            for (std::size_t k = 0; k < d; ++k) cores[k] = reverse_core(cores[k], rx[k], n[k], rx[k + 1]);
            reverse_vec(cores);
            reverse_vec(n);
        }
        return TtTensor(std::move(cores), n);
    };

    for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
        const double max_res = forward_sweep(pr, it, options, trunc);
        result.sweeps = sweep;
        result.sweep_residuals.push_back(max_res);
        if (max_res < options.tol || sweep == options.max_sweeps) {
            result.x = current();
            result.residual = tt_residual(a, result.x, b);
            result.converged = max_res < options.tol;
            return result;
        }
        pr.reverse();
        it.reverse(pr.n);
        reversed = !reversed;
    }
    return result;
}

}  // namespace qtt
