#include "qttkit/generators.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

namespace qtt {

// Grid ---------------------------------------------------------------------------

Grid1D Grid1D::on_interval(double a, double b, Index n, SamplingRule rule) {
    if (n < 1 || !(b > a)) throw std::invalid_argument("Grid1D: need n >= 1 and b > a");
    return Grid1D{n, (b - a) / static_cast<double>(n), a, rule};
}

double Grid1D::point(Index i) const {
    const double offset = rule == SamplingRule::midpoint ? 0.5 : 0.0;
    return origin + (static_cast<double>(i) + offset) * h;
}

Vector Grid1D::points() const {
    Vector x(n);
    for (Index i = 0; i < n; ++i) x(i) = point(i);
    return x;
}

// Exponential sums ---------------------------------------------------------------

ExpSumOperator ExpSumOperator::sinc(int m, std::vector<double> alpha) {
    if (m < 1) throw std::invalid_argument("ExpSumOperator: M must be >= 1");
    for (double a : alpha) {
        if (!(a > 0)) throw std::invalid_argument("ExpSumOperator: coefficients must be positive");
    }
    ExpSumOperator op;
    op.m = m;
    op.step = std::numbers::pi / std::sqrt(static_cast<double>(m));
    op.nodes.resize(2 * m + 1);
    op.weights.resize(2 * m + 1);
    for (int k = -m; k <= m; ++k) {
        const double t = std::exp(k * op.step);
        op.nodes(k + m) = t;
        op.weights(k + m) = op.step * t;
    }
    op.alpha = std::move(alpha);
    return op;
}

double ExpSumOperator::inverse(double lambda) const {
    return (weights.array() * (-lambda * nodes.array()).exp()).sum();
}

// QTT vectors --------------------------------------------------------------------

TtTensor qtt_exponential(double z, int q, int levels) {
    const QuantizationMap map(q, levels);  // validates q and L
    std::vector<Matrix> cores;
    double stride = 1.0;  // q^nu
    for (int nu = 0; nu < levels; ++nu) {
        Matrix c(q, 1);
        for (int j = 0; j < q; ++j) c(j, 0) = std::pow(z, j * stride);
        cores.push_back(std::move(c));
        stride *= q;
    }
    return TtTensor(std::move(cores), map.shape().dims());
}

TtTensor qtt_trig(double omega, int q, int levels, double phase) {
    const QuantizationMap map(q, levels);
    // Row state [cos a, sin a] is advanced by rotations; the last core reads off sin.
    std::vector<Matrix> cores;
    double stride = 1.0;
    for (int nu = 0; nu < levels; ++nu) {
        const bool first = nu == 0;
        const bool last = nu + 1 == levels;
        const Index rl = first ? 1 : 2;
        const Index rr = last ? 1 : 2;
        Matrix c(rl * q, rr);
        for (int j = 0; j < q; ++j) {
            const double th = omega * j * stride + (first ? phase : 0.0);
            Matrix rot(2, 2);
            rot << std::cos(th), std::sin(th), -std::sin(th), std::cos(th);
            Matrix s = rot;
            if (first) s = s.topRows(1).eval();  // state starts at [1, 0]
            if (last) s = (s * Vector::Unit(2, 1)).eval();
            c.middleRows(rl * j, rl) = s;
        }
        cores.push_back(std::move(c));
        stride *= q;
    }
    return TtTensor(std::move(cores), map.shape().dims());
}

std::vector<double> sample(const std::function<double(double)>& f, const Grid1D& grid) {
    std::vector<double> v(static_cast<std::size_t>(grid.n));
    for (Index i = 0; i < grid.n; ++i) v[static_cast<std::size_t>(i)] = f(grid.point(i));
    return v;
}

TtTensor qtt_from_samples(const std::function<double(double)>& f, const Grid1D& grid, int q,
                          const TruncationPolicy& policy) {
    const auto map = QuantizationMap::for_length(q, grid.n);
    check_budget(grid.n, "qtt_from_samples");
    return tt_svd(fold(sample(f, grid), map), policy);
}

// Laplacians -----------------------------------------------------------------------

Matrix laplacian_1d(Index n) {
    if (n < 1) throw std::invalid_argument("laplacian_1d: N must be >= 1");
    Matrix a = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        a(i, i) = 2.0;
        if (i > 0) a(i, i - 1) = -1.0;
        if (i + 1 < n) a(i, i + 1) = -1.0;
    }
    return a;
}

namespace {

void check_alpha(const std::vector<double>& alpha) {
    if (alpha.empty()) throw std::invalid_argument("Laplacian: dimension must be >= 1");
    for (double a : alpha) {
        if (!(a > 0)) throw std::invalid_argument("Laplacian: coefficients must be positive");
    }
}

}  // namespace

CanonicalOperator anisotropic_laplacian_canonical(const std::vector<double>& alpha, Index n) {
    check_alpha(alpha);
    const std::size_t d = alpha.size();
    const Matrix lap = laplacian_1d(n);
    const Matrix id = Matrix::Identity(n, n);
    std::vector<std::vector<Matrix>> terms;
    for (std::size_t k = 0; k < d; ++k) {
        std::vector<Matrix> term(d, id);
        term[k] = alpha[k] * lap;
        terms.push_back(std::move(term));
    }
    const std::vector<Index> sizes(d, n);
    return CanonicalOperator(std::move(terms), sizes, sizes);
}

CanonicalOperator laplacian_canonical(std::size_t d, Index n) {
    return anisotropic_laplacian_canonical(std::vector<double>(d, 1.0), n);
}

std::vector<BlockCore> laplacian_block_cores(const std::vector<double>& alpha, Index n) {
    check_alpha(alpha);
    const std::size_t d = alpha.size();
    const Matrix lap = laplacian_1d(n);
    const Matrix id = Matrix::Identity(n, n);
    const Matrix zero = Matrix::Zero(n, n);
    if (d == 1) return {BlockCore::from_rows({{Matrix(alpha[0] * lap)}})};
    std::vector<BlockCore> cores;
    cores.push_back(BlockCore::from_rows({{alpha[0] * lap, id}}));
    for (std::size_t l = 1; l + 1 < d; ++l) cores.push_back(BlockCore::from_rows({{id, zero}, {alpha[l] * lap, id}}));
    cores.push_back(BlockCore::from_rows({{id}, {alpha[d - 1] * lap}}));
    return cores;
}

TtMatrix anisotropic_laplacian_tt(const std::vector<double>& alpha, Index n) {
    return tt_matrix_from_blocks(laplacian_block_cores(alpha, n));
}

TtMatrix laplacian_tt(std::size_t d, Index n) { return anisotropic_laplacian_tt(std::vector<double>(d, 1.0), n); }

namespace {

struct Pauli {
    Matrix i = Matrix::Identity(2, 2);
    Matrix j = (Matrix(2, 2) << 0, 1, 0, 0).finished();
    Matrix jt = j.transpose();
    Matrix z = Matrix::Zero(2, 2);
};

}  // namespace

TtMatrix laplacian_qtt(int levels) {
    if (levels < 1) throw std::invalid_argument("laplacian_qtt: L must be >= 1");
    const Pauli p;
    if (levels == 1) return tt_matrix_from_blocks({BlockCore::from_rows({{laplacian_1d(2)}})});
    std::vector<BlockCore> cores;
    cores.push_back(BlockCore::from_rows({{2 * p.i - p.j - p.jt, -p.j, -p.jt}}));
    for (int nu = 1; nu + 1 < levels; ++nu) {
        cores.push_back(BlockCore::from_rows({{p.i, p.z, p.z}, {p.jt, p.j, p.z}, {p.j, p.z, p.jt}}));
    }
    cores.push_back(BlockCore::from_rows({{p.i}, {p.jt}, {p.j}}));
    return tt_matrix_from_blocks(cores);
}

TtMatrix shift_qtt(int levels) {
    if (levels < 1) throw std::invalid_argument("shift_qtt: L must be >= 1");
    const Pauli p;
    if (levels == 1) return tt_matrix_from_blocks({BlockCore::from_rows({{p.jt}})});
    // Bond index = carry of the binary increment.
    std::vector<BlockCore> cores;
    cores.push_back(BlockCore::from_rows({{p.jt, p.j}}));
    for (int nu = 1; nu + 1 < levels; ++nu) cores.push_back(BlockCore::from_rows({{p.i, p.z}, {p.jt, p.j}}));
    cores.push_back(BlockCore::from_rows({{p.i}, {p.jt}}));
    return tt_matrix_from_blocks(cores);
}

// Matrix functions -------------------------------------------------------------------

Matrix matrix_exponential(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("matrix_exponential: matrix must be square");
    return a.exp();
}

Matrix heat_kernel_1d(double alpha, Index n) {
    // E(i,j) = T(i-j) - T(i+j) with T(m) = 1/(N+1) sum_k cos(pi k m/(N+1)) exp(-alpha lambda_k),
    // using 1-based i, j.
    const double pi = std::numbers::pi;
    const double np1 = static_cast<double>(n + 1);
    Vector decay(n);
    for (Index k = 1; k <= n; ++k) decay(k - 1) = std::exp(-alpha * (2.0 - 2.0 * std::cos(pi * k / np1)));
    Vector t(2 * n + 3);
    for (Index m = 0; m < t.size(); ++m) {
        double s = 0.0;
        for (Index k = 1; k <= n; ++k) s += std::cos(pi * static_cast<double>(k * m) / np1) * decay(k - 1);
        t(m) = s / np1;
    }
    Matrix e(n, n);
    for (Index j = 1; j <= n; ++j) {
        for (Index i = 1; i <= n; ++i) e(i - 1, j - 1) = t(std::abs(i - j)) - t(i + j);
    }
    return e;
}

std::vector<ExpSumErrorRow> expsum_error_table(const std::vector<double>& alpha, Index n, const std::vector<int>& ms) {
    const Matrix exact = to_dense_matrix(anisotropic_laplacian_canonical(alpha, n)).inverse();
    std::vector<ExpSumErrorRow> rows;
    for (int m : ms) {
        const CanonicalOperator b = expsum_inverse(alpha, n, m);
        const Matrix diff = to_dense_matrix(b) - exact;
        const Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (diff + diff.transpose()), Eigen::EigenvaluesOnly);
        rows.push_back({m, b.rank(), es.eigenvalues().cwiseAbs().maxCoeff()});
    }
    return rows;
}

CanonicalOperator expsum_inverse(const std::vector<double>& alpha, Index n, int m) {
    const ExpSumOperator op = ExpSumOperator::sinc(m, alpha);
    const Matrix lap = laplacian_1d(n);
    const std::size_t d = alpha.size();
    std::vector<std::vector<Matrix>> terms;
    for (Index k = 0; k < op.terms(); ++k) {
        std::vector<Matrix> term;
        for (std::size_t l = 0; l < d; ++l) term.push_back(matrix_exponential(-op.nodes(k) * alpha[l] * lap));
        term[0] *= op.weights(k);
        terms.push_back(std::move(term));
    }
    const std::vector<Index> sizes(d, n);
    return CanonicalOperator(std::move(terms), sizes, sizes);
}

// Rank probes ----------------------------------------------------------------------------

TtTensor qtt_matrix_tensor(const Matrix& a, const TruncationPolicy& policy) {
    const Index n = a.rows();
    if (a.cols() != n) throw std::invalid_argument("qtt_matrix_tensor: matrix must be square");
    const auto map = QuantizationMap::for_length(2, n);
    const int levels = map.levels();
    check_budget(n * n, "qtt_matrix_tensor");
    std::vector<double> v(static_cast<std::size_t>(n * n));
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            Index lin = 0;
            for (int nu = levels - 1; nu >= 0; --nu) lin = 4 * lin + ((i >> nu) & 1) + 2 * ((j >> nu) & 1);
            v[static_cast<std::size_t>(lin)] = a(i, j);
        }
    }
    return tt_svd(DenseTensor(Shape(std::vector<Index>(static_cast<std::size_t>(levels), 4)), std::move(v)), policy);
}

RankReport rank_report(const TtTensor& x) {
    return RankReport{x.mean_rank(), x.max_rank(), x.ranks()};
}

RankReport qtt_rank_probe_matrix_exp(double alpha, int levels, double eps) {
    if (!(alpha >= 0)) throw std::invalid_argument("qtt_rank_probe_matrix_exp: alpha must be >= 0");
    const Index n = Index{1} << levels;
    return rank_report(qtt_matrix_tensor(heat_kernel_1d(alpha, n), TruncationPolicy(eps)));
}

RankReport qtt_rank_probe_diagonal(const std::function<double(double, double)>& f, int levels, double eps) {
    // The QTT ranks of diag(v) equal those of v: each level's (i, j) mode is
    // supported on i = j only.
    const Grid1D grid = Grid1D::on_interval(-1.0, 1.0, Index{1} << levels);
    return rank_report(qtt_from_samples([&f](double x) { return f(x, x); }, grid, 2, TruncationPolicy(eps)));
}

// Newton kernel ----------------------------------------------------------------------------

double GaussianSum::operator()(double rho) const {
    return (weights.array() * (-exponents.array() * rho * rho).exp()).sum();
}

namespace {

double sweep_error(const GaussianSum& g, double rho_min, double rho_max) {
    const int samples = 400;
    double worst = 0.0;
    const double lmin = std::log(rho_min);
    const double lmax = std::log(rho_max);
    for (int s = 0; s < samples; ++s) {
        const double rho = std::exp(lmin + (lmax - lmin) * s / (samples - 1));
        worst = std::max(worst, std::abs(g(rho) * rho - 1.0));
    }
    return worst;
}

// Smallest t with erfc(rho t) <= target.
double erfc_cutoff(double rho, double target) {
    double lo = 0.0, hi = 1.0;
    while (std::erfc(rho * hi) > target) hi *= 2.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (std::erfc(rho * mid) > target ? lo : hi) = mid;
    }
    return hi;
}

// The widest Gaussians are nearly constant over [0, rho_max]. Replace the k
// widest by a single term matching their total weight and first moment, for
// the largest k that keeps the sweep error within eps.
GaussianSum merge_wide_terms(GaussianSum g, double eps) {
    GaussianSum best = g;
    for (Index k = 2; k < g.terms(); ++k) {
        GaussianSum trial;
        const double w = g.weights.head(k).sum();
        const double p = g.weights.head(k).dot(g.exponents.head(k)) / w;
        trial.weights.resize(g.terms() - k + 1);
        trial.exponents.resize(g.terms() - k + 1);
        trial.weights(0) = w;
        trial.exponents(0) = p;
        trial.weights.tail(g.terms() - k) = g.weights.tail(g.terms() - k);
        trial.exponents.tail(g.terms() - k) = g.exponents.tail(g.terms() - k);
        trial.step = g.step;
        trial.rho_min = g.rho_min;
        trial.rho_max = g.rho_max;
        trial.measured_error = sweep_error(trial, g.rho_min, g.rho_max);
        if (trial.measured_error > eps) break;
        best = std::move(trial);
    }
    return best;
}

}  // namespace

GaussianSum newton_gaussian_sum(double eps, double rho_min, double rho_max) {
    if (!(eps > 0) || !(rho_min > 0) || !(rho_max > rho_min)) {
        throw std::invalid_argument("newton_gaussian_sum: need eps > 0 and 0 < rho_min < rho_max");
    }
    const double two_over_sqrt_pi = 2.0 / std::sqrt(std::numbers::pi);
    // Truncation of the u-range: each tail contributes at most eps/10 relative error.
    const double u_min = std::log(0.1 * eps / (two_over_sqrt_pi * rho_max));
    const double u_max = std::log(erfc_cutoff(rho_min, 0.1 * eps));
    for (double step = 1.0; step > 0.01; step *= 0.9) {
        const Index count = static_cast<Index>(std::ceil((u_max - u_min) / step)) + 1;
        GaussianSum g;
        g.weights.resize(count);
        g.exponents.resize(count);
        for (Index k = 0; k < count; ++k) {
            const double u = u_min + static_cast<double>(k) * step;
            g.weights(k) = two_over_sqrt_pi * step * std::exp(u);
            g.exponents(k) = std::exp(2.0 * u);
        }
        g.step = step;
        g.rho_min = rho_min;
        g.rho_max = rho_max;
        g.measured_error = sweep_error(g, rho_min, rho_max);
        if (g.measured_error <= 0.5 * eps) return merge_wide_terms(std::move(g), eps);
    }
    throw ConvergenceError("newton_gaussian_sum: no quadrature step reached the requested accuracy");
}

NewtonKernel newton_kernel_canonical(double eps, double half_width, Index n, double rho_min) {
    if (!(half_width > 0) || n < 2) throw std::invalid_argument("newton_kernel_canonical: need b > 0 and N >= 2");
    const Grid1D grid = Grid1D::on_interval(-half_width, half_width, n);
    if (rho_min <= 0) rho_min = grid.h * std::sqrt(3.0) / 2.0;
    const double rho_max = half_width * std::sqrt(3.0) * 1.0001;
    GaussianSum g = newton_gaussian_sum(eps, rho_min, rho_max);
    const Vector x = grid.points();
    Matrix factor(n, g.terms());
    for (Index k = 0; k < g.terms(); ++k) {
        const double scale = std::cbrt(g.weights(k));
        factor.col(k) = scale * (-g.exponents(k) * x.array().square()).exp();
    }
    return NewtonKernel{CanonicalTensor({factor, factor, factor}), grid, std::move(g)};
}

}  // namespace qtt
