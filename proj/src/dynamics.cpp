#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "qttkit/algebra.hpp"
#include "qttkit/dynamics.hpp"
#include "qttkit/generators.hpp"

namespace qtt {

Vector laguerre_eval(int p_max, double t) {
    if (p_max < 0) throw std::invalid_argument("laguerre_eval: p_max must be >= 0");
    if (!(t >= 0)) throw std::invalid_argument("laguerre_eval: t must be >= 0");
    Vector l(p_max + 1);
    l(0) = 1.0;
    if (p_max >= 1) l(1) = 1.0 - t;
    for (int p = 1; p < p_max; ++p) {
        l(p + 1) = ((2.0 * p + 1.0 - t) * l(p) - p * l(p - 1)) / (p + 1.0);
        if (!(std::abs(l(p + 1)) < 1e150)) throw std::overflow_error("laguerre_eval: |L_p| overflow");
    }
    return l;
}

std::vector<Index> LaguerreSeries::max_ranks() const {
    std::vector<Index> out;
    for (const auto& x : u) out.push_back(x.max_rank());
    return out;
}

LaguerreSeries cayley_series(const TtMatrix& h, const TtTensor& psi0, int m, double eps, LinsolveOptions options) {
    if (m < 0) throw std::invalid_argument("cayley_series: m must be >= 0");
    std::vector<Index> sizes = h.row_shape().dims();
    const TruncationPolicy policy(eps);
    const TtMatrix hp = tt_round(add(h, TtMatrix::identity(sizes)), TruncationPolicy(1e-15));
    LaguerreSeries s;
    s.h = h;
    s.psi0 = psi0;
    s.eps = eps;
    TtTensor rhs = psi0;
    for (int p = 0; p <= m; ++p) {
        const LinsolveResult r = tt_linsolve(hp, rhs, options, p == 0 ? std::nullopt : std::optional(rhs));
        if (!r.converged)
            throw ConvergenceError("cayley_series: solve " + std::to_string(p) + " stalled at residual " +
                                   std::to_string(r.residual));
        const TtTensor up = tt_round(r.x, policy);
        s.u.push_back(up);
        if (p < m) rhs = tt_round(mpo_apply(h, up), policy);
    }
    return s;
}

namespace {

// sum_p c_p u_p with rounding after every addition.
TtTensor combine(const std::vector<TtTensor>& u, const Vector& c, const TruncationPolicy& policy) {
    TtTensor acc = scale(u[0], c(0));
    for (std::size_t p = 1; p < u.size(); ++p) {
        if (c(static_cast<Index>(p)) == 0.0) continue;
        acc = tt_round(axpby(1.0, acc, c(static_cast<Index>(p)), u[p]), policy);
    }
    return acc;
}

}  // namespace

TtTensor cayley_apply(const LaguerreSeries& series, double t) {
    const int m = series.order();
    if (m < 0) throw std::invalid_argument("cayley_apply: empty series");
    const Vector l = laguerre_eval(m + 1, t);
    const Vector c = l.tail(m + 1) - l.head(m + 1);
    const TruncationPolicy policy(series.eps);
    const TtTensor sum = combine(series.u, c, policy);
    return tt_round(add(series.psi0, mpo_apply(series.h, sum)), policy);
}

std::vector<CayleyRow> cayley_heat_benchmark(const std::vector<int>& orders, int levels, double t, double stiffness,
                                             double width, double eps) {
    if (orders.empty()) return {};
    for (int m : orders)
        if (m < 0) throw std::invalid_argument("cayley_heat_benchmark: orders must be >= 0");
    const Index n = Index{1} << levels;
    const std::vector<Index> sizes(static_cast<std::size_t>(levels), 2);
    const TtMatrix h =
        tt_round(add(scale(laplacian_qtt(levels), stiffness), TtMatrix::identity(sizes)), TruncationPolicy(1e-15));
    Vector psi(n);
    for (Index i = 0; i < n; ++i) {
        const double x = static_cast<double>(i + 1) / static_cast<double>(n + 1);
        psi(i) = std::exp(-(x - 0.5) * (x - 0.5) / width);
    }
    psi /= psi.norm();
    const TtTensor psi0 = tt_svd(fold(std::span<const double>(psi.data(), static_cast<std::size_t>(n)),
                                      QuantizationMap::for_length(2, n)),
                                 TruncationPolicy(1e-15));

    const Matrix hd = stiffness * laplacian_1d(n) + Matrix::Identity(n, n);
    const Eigen::SelfAdjointEigenSolver<Matrix> es(hd);
    const Vector exact = es.eigenvectors() *
                         ((-t * es.eigenvalues().array()).exp().matrix().asDiagonal() * (es.eigenvectors().transpose() * psi));

    LinsolveOptions solver;
    solver.tol = eps;
    const LaguerreSeries full = cayley_series(h, psi0, *std::max_element(orders.begin(), orders.end()), eps, solver);
    std::vector<CayleyRow> rows;
    for (int m : orders) {
        LaguerreSeries part = full;
        part.u.resize(static_cast<std::size_t>(m + 1));
        const TtTensor y = cayley_apply(part, t);
        const Vector yd = to_dense(y).vec();
        const auto ranks = part.max_ranks();
        rows.push_back({m, (yd - exact).norm(), y.max_rank(), *std::max_element(ranks.begin(), ranks.end())});
    }
    return rows;
}

TtTensor concat_time_tensor(const LaguerreSeries& series, const std::vector<double>& times) {
    const auto nt = static_cast<Index>(times.size());
    if (nt < 2 || (nt & (nt - 1)) != 0) throw std::invalid_argument("concat_time_tensor: Nt must be a power of two >= 2");
    const int m = series.order();
    const TruncationPolicy policy(series.eps);
    const auto map = QuantizationMap::for_length(2, nt);
    std::vector<Matrix> coef(static_cast<std::size_t>(m + 1), Matrix(nt, 1));
    for (Index j = 0; j < nt; ++j) {
        const Vector l = laguerre_eval(m + 1, times[static_cast<std::size_t>(j)]);
        for (int p = 0; p <= m; ++p) coef[static_cast<std::size_t>(p)](j, 0) = l(p + 1) - l(p);
    }
    TtTensor acc = tt_concat(series.psi0, TtTensor::ones(Shape(std::vector<Index>(map.levels(), 2))));
    for (int p = 0; p <= m; ++p) {
        const auto& g = coef[static_cast<std::size_t>(p)];
        const TtTensor gt = tt_svd(fold(std::span<const double>(g.data(), static_cast<std::size_t>(nt)), map),
                                   TruncationPolicy(1e-15));
        const TtTensor hu = mpo_apply(series.h, series.u[static_cast<std::size_t>(p)]);
        acc = tt_round(add(acc, tt_concat(hu, gt)), policy);
    }
    return acc;
}

Index time_bond_rank(const TtTensor& xt, std::size_t state_order) {
    if (state_order == 0 || state_order >= xt.order()) throw std::invalid_argument("time_bond_rank: bad state order");
    return xt.rank(state_order);
}

SpaceTimeSystem build_space_time_system(const TtMatrix& g, const TtTensor& y0, double tau, int time_levels,
                                        TimeScheme scheme, const TruncationPolicy& policy) {
    if (!(tau > 0)) throw std::invalid_argument("build_space_time_system: tau must be positive");
    if (time_levels < 1) throw std::invalid_argument("build_space_time_system: need at least one time level");
    if (g.row_shape().dims() != y0.shape().dims() || g.col_shape().dims() != y0.shape().dims())
        throw std::invalid_argument("build_space_time_system: operator and state shapes differ");
    const TtMatrix id = TtMatrix::identity(g.row_shape().dims());
    const double theta = scheme == TimeScheme::crank_nicolson ? 0.5 : 1.0;
    const TtMatrix x1 = tt_round(add(id, scale(g, -tau * theta)), policy);
    const TtMatrix x2 = tt_round(add(id, scale(g, tau * (1.0 - theta))), policy);
    const std::vector<Index> tsizes(static_cast<std::size_t>(time_levels), 2);

    SpaceTimeSystem s;
    s.matrix = tt_round(add(tt_concat(x1, TtMatrix::identity(tsizes)), scale(tt_concat(x2, shift_qtt(time_levels)), -1.0)),
                        policy);
    std::vector<Vector> e0(tsizes.size(), Vector::Unit(2, 0));
    s.rhs = tt_concat(tt_round(mpo_apply(x2, y0), policy), TtTensor::rank_one(e0));
    s.initial_guess = tt_concat(y0, TtTensor::ones(Shape(tsizes)));
    s.tau = tau;
    s.steps = Index{1} << time_levels;
    s.scheme = scheme;
    s.state_order = y0.order();
    return s;
}

TtTensor time_slice(const TtTensor& xt, std::size_t state_order, Index step) {
    const std::size_t d = xt.order();
    if (state_order == 0 || state_order >= d) throw std::invalid_argument("time_slice: bad state order");
    Index steps = 1;
    for (std::size_t l = state_order; l < d; ++l) steps *= xt.shape()[l];
    if (step < 1 || step > steps) throw std::out_of_range("time_slice: step out of range");
    Index m = step - 1;
    std::vector<Index> digits;
    for (std::size_t l = state_order; l < d; ++l) {
        digits.push_back(m % xt.shape()[l]);
        m /= xt.shape()[l];
    }
    Matrix v = Matrix::Ones(1, 1);
    for (std::size_t l = d; l-- > state_order;) v = xt.slice(l, digits[l - state_order]) * v;
    std::vector<Matrix> cores(xt.cores().begin(), xt.cores().begin() + static_cast<std::ptrdiff_t>(state_order));
    cores.back() = cores.back() * v;
    std::vector<Index> dims(xt.shape().dims().begin(), xt.shape().dims().begin() + static_cast<std::ptrdiff_t>(state_order));
    return TtTensor(std::move(cores), std::move(dims));
}

}  // namespace qtt
