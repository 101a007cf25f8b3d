#include <cmath>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "qttkit/algebra.hpp"
#include "qttkit/generators.hpp"

using namespace qtt;
using namespace qtt::testing;

TEST_CASE("qtt_exponential unfolds to powers") {
    const Vector v = dense_vector(qtt_exponential(2.0, 2, 3));
    for (Index i = 0; i < 8; ++i) CHECK(v(i) == std::pow(2.0, i));
    CHECK(qtt_exponential(1.0, 2, 6).max_rank() == 1);
    CHECK((dense_vector(qtt_exponential(1.0, 2, 6)) - Vector::Ones(64)).norm() == 0.0);
    const Vector w = dense_vector(qtt_exponential(3.0, 2, 3));
    for (Index i = 0; i < 8; ++i) CHECK(w(i) == std::pow(3.0, i));
    const Vector big = dense_vector(qtt_exponential(0.95, 2, 16));
    double worst = 0;
    for (Index i = 0; i < big.size(); ++i) worst = std::max(worst, std::abs(big(i) / std::pow(0.95, i) - 1.0));
    CHECK(worst < 1e-12);
    const Vector ternary = dense_vector(qtt_exponential(1.1, 3, 4));
    for (Index i = 0; i < 81; ++i) CHECK(ternary(i) == doctest::Approx(std::pow(1.1, i)).epsilon(1e-13));
}

TEST_CASE("qtt_trig unfolds to sine samples") {
    const Vector ones = dense_vector(qtt_trig(0.0, 2, 5, std::numbers::pi / 2));
    CHECK((ones - Vector::Ones(32)).norm() < 1e-14);
    CHECK(tt_round(qtt_trig(0.0, 2, 5, std::numbers::pi / 2), TruncationPolicy(1e-12)).max_rank() == 1);
    const TtTensor s = qtt_trig(0.1, 2, 12);
    CHECK(s.max_rank() == 2);
    const Vector v = dense_vector(s);
    double worst = 0;
    for (Index i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(v(i) - std::sin(0.1 * i)));
    CHECK(worst < 1e-12);
    const TtTensor r = tt_svd(to_dense(s), TruncationPolicy(1e-12));
    for (std::size_t b = 1; b < r.order(); ++b) CHECK(r.rank(b) == 2);
    const Vector t3 = dense_vector(qtt_trig(0.3, 3, 4, 0.7));
    for (Index i = 0; i < 81; ++i) CHECK(t3(i) == doctest::Approx(std::sin(0.3 * i + 0.7)).epsilon(1e-12));
}

TEST_CASE("constant samples have rank 1") {
    const Grid1D g = Grid1D::on_interval(0, 1, 1024);
    const TtTensor t = qtt_from_samples([](double) { return 3.0; }, g, 2, TruncationPolicy(1e-10));
    CHECK(t.max_rank() == 1);
    CHECK(t.mean_rank() == 1.0);
    CHECK_THROWS_AS(qtt_from_samples([](double) { return 1.0; }, Grid1D::on_interval(0, 1, 1000), 2, TruncationPolicy(1e-6)),
                    std::invalid_argument);
}

TEST_CASE("grid conventions") {
    const Grid1D mid = Grid1D::on_interval(0, 1, 4);
    CHECK(mid.point(0) == doctest::Approx(0.125));
    const Grid1D left = Grid1D::on_interval(0, 1, 4, SamplingRule::left);
    CHECK(left.point(0) == 0.0);
    CHECK(left.point(3) == doctest::Approx(0.75));
}

TEST_CASE("one-dimensional Laplacian forms") {
    const Matrix lap = laplacian_1d(4);
    CHECK(to_dense_matrix(laplacian_canonical(1, 4)) == lap);
    CHECK(to_dense_matrix(laplacian_tt(1, 4)) == lap);
}

TEST_CASE("d-dimensional Laplacian equals the Kronecker sum exactly") {
    const Index n = 4;
    const Matrix lap = laplacian_1d(n);
    const Matrix id = Matrix::Identity(n, n);
    const Matrix ref = kron_modes({lap, id, id}) + kron_modes({id, lap, id}) + kron_modes({id, id, lap});
    CHECK(to_dense_matrix(laplacian_canonical(3, n)) == ref);
    CHECK(to_dense_matrix(laplacian_tt(3, n)) == ref);
}

TEST_CASE("rank join of the three-factor display gives the Laplacian") {
    const auto cores = laplacian_block_cores({1.0, 1.0, 1.0}, 8);
    const BlockCore joined = rank_join(rank_join(cores[0], cores[1]), cores[2]);
    CHECK(joined(0, 0) == to_dense_matrix(laplacian_canonical(3, 8)));
}

TEST_CASE("Laplacian TT ranks are exactly 2") {
    for (std::size_t d = 2; d <= 10; ++d) {
        const TtMatrix a = laplacian_tt(d, 8);
        for (std::size_t b = 1; b < d; ++b) CHECK(a.rank(b) == 2);
        const TtMatrix r = tt_round(a, TruncationPolicy(1e-12));
        for (std::size_t b = 1; b < d; ++b) CHECK(r.rank(b) == 2);
    }
    for (std::size_t d : {3u, 5u}) {
        const TtMatrix c = canonical_to_tt(laplacian_canonical(d, 6));
        CHECK(c.max_rank() == static_cast<Index>(d));
        const TtMatrix r = tt_round(c, TruncationPolicy(1e-12));
        for (std::size_t b = 1; b < d; ++b) CHECK(r.rank(b) == 2);
        if (d == 3) CHECK((to_dense_matrix(r) - to_dense_matrix(laplacian_canonical(d, 6))).norm() < 1e-10);
    }
}

TEST_CASE("QTT Laplacian equals the tridiagonal matrix") {
    for (int levels = 1; levels <= 6; ++levels) {
        const Matrix a = to_dense_matrix(laplacian_qtt(levels));
        CHECK(a == laplacian_1d(Index{1} << levels));
    }
    const Matrix a4 = to_dense_matrix(laplacian_qtt(4));
    CHECK((a4 - a4.transpose()).norm() == 0.0);
    for (int levels = 2; levels <= 20; ++levels) CHECK(laplacian_qtt(levels).max_rank() <= 3);
}

TEST_CASE("QTT shift is the lower shift") {
    for (int levels = 1; levels <= 5; ++levels) {
        const Index n = Index{1} << levels;
        Matrix s = Matrix::Zero(n, n);
        for (Index k = 0; k + 1 < n; ++k) s(k + 1, k) = 1.0;
        CHECK(to_dense_matrix(shift_qtt(levels)) == s);
    }
}

TEST_CASE("anisotropic Laplacian") {
    const Index n = 4;
    const Matrix lap = laplacian_1d(n);
    const Matrix id = Matrix::Identity(n, n);
    const Matrix ref = 2 * kron_modes(lap, id) + 3 * kron_modes(id, lap);
    CHECK((to_dense_matrix(anisotropic_laplacian_canonical({2, 3}, n)) - ref).norm() == 0.0);
    CHECK((to_dense_matrix(anisotropic_laplacian_tt({2, 3}, n)) - ref).norm() == 0.0);
    CHECK(anisotropic_laplacian_tt({2, 3, 0.5}, n).max_rank() == 2);
    CHECK(to_dense_matrix(anisotropic_laplacian_tt({1, 1, 1}, n)) == to_dense_matrix(laplacian_tt(3, n)));
    CHECK_THROWS_AS(anisotropic_laplacian_tt({1, -1}, n), std::invalid_argument);
    CHECK_THROWS_AS(anisotropic_laplacian_canonical({0.0}, n), std::invalid_argument);
}

TEST_CASE("matrix exponential and closed-form heat kernel agree") {
    for (double alpha : {0.1, 1.0, 10.0}) {
        const Matrix pade = matrix_exponential(-alpha * laplacian_1d(32));
        const Matrix closed = heat_kernel_1d(alpha, 32);
        CHECK((pade - closed).norm() < 1e-13 * std::max(1.0, pade.norm()));
    }
    CHECK((heat_kernel_1d(0.0, 16) - Matrix::Identity(16, 16)).norm() < 1e-13);
}

TEST_CASE("exponential-sum inverse") {
    const Index n = 32;
    const Matrix exact = to_dense_matrix(laplacian_canonical(2, n)).inverse();
    double previous = 1e300;
    std::vector<double> errs;
    for (int m : {1, 4, 9, 16, 25, 36, 49}) {
        const Matrix b = to_dense_matrix(expsum_inverse({1, 1}, n, m));
        const double err = symmetric_spectral_norm(b - exact);
        CHECK(err <= previous * (1 + 1e-12));
        previous = err;
        errs.push_back(err);
        if (m == 1) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (b + b.transpose()));
            CHECK(es.eigenvalues().minCoeff() > 0);
        }
    }
    CHECK(errs.back() / errs[3] < 0.2);
    // lowest eigenvector scaled by ~1/lambda_min
    Vector s(n);
    for (Index i = 0; i < n; ++i) s(i) = std::sin(std::numbers::pi * (i + 1) / (n + 1));
    const Vector v = kron_modes(Matrix(s), Matrix(s));
    const double lambda = 2 * (2 - 2 * std::cos(std::numbers::pi / (n + 1)));
    const Vector bv = to_dense_matrix(expsum_inverse({1, 1}, n, 49)) * v;
    CHECK((bv - v / lambda).norm() / (v.norm() / lambda) < 1e-4);
}

TEST_CASE("scalar sinc rule for 1/lambda") {
    const ExpSumOperator op = ExpSumOperator::sinc(36, {1.0});
    CHECK(op.terms() == 73);
    CHECK(op.inverse(1.0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS_AS(ExpSumOperator::sinc(0, {1.0}), std::invalid_argument);
}

TEST_CASE("matrix exponential QTT ranks") {
    const RankReport id = qtt_rank_probe_matrix_exp(0.0, 6, 1e-5);
    CHECK(id.max_rank == 1);
    // Bond ranks from an independent numpy TT-SVD of the same matrices.
    const RankReport r = qtt_rank_probe_matrix_exp(1.0, 10, 1e-5);
    CHECK(r.ranks == std::vector<Index>{1, 4, 9, 5, 5, 5, 5, 5, 5, 4, 1});
    CHECK(r.mean_rank == doctest::Approx(47.0 / 9.0));
    const RankReport r9 = qtt_rank_probe_matrix_exp(1.0, 9, 1e-5);
    CHECK(r9.ranks == std::vector<Index>{1, 4, 9, 5, 5, 5, 5, 5, 4, 1});
    // Ranks stay bounded as N grows.
    for (double alpha : {0.1, 1.0, 10.0, 100.0}) {
        const double r_small = qtt_rank_probe_matrix_exp(alpha, 8, 1e-5).mean_rank;
        const double r_large = qtt_rank_probe_matrix_exp(alpha, 10, 1e-5).mean_rank;
        CHECK(r_large <= r_small + 1.0);
    }
}

TEST_CASE("QTT matrix folding is exact") {
    std::mt19937_64 rng(31);
    const Matrix a = random_matrix(rng, 8, 8);
    const TtTensor t = qtt_matrix_tensor(a, TruncationPolicy(0.0));
    const TtMatrix m = as_matrix(t, {2, 2, 2}, {2, 2, 2});
    CHECK((to_dense_matrix(m) - a).norm() < 1e-12);
}

TEST_CASE("diagonal lift of an inverse-square diagonal") {
    const Grid1D g = Grid1D::on_interval(-1, 1, 256);
    auto f = [](double x) { return 1.0 / (2 * x * x); };
    const TtTensor t = qtt_from_samples(f, g, 2, TruncationPolicy(1e-10));
    const Matrix d = to_dense_matrix(diag_lift(t));
    const std::vector<double> v = sample(f, g);
    const Vector ref = Eigen::Map<const Vector>(v.data(), 256);
    CHECK((d.diagonal() - ref).norm() <= 1e-10 * ref.norm() * 1.0001);
    CHECK((Matrix(d.diagonal().asDiagonal()) - d).norm() == 0.0);
}

TEST_CASE("Gaussian diagonal QTT rank") {
    const RankReport r = qtt_rank_probe_diagonal([](double x, double y) { return std::exp(-(x * x + y * y)); }, 10, 1e-5);
    MESSAGE("diag(exp(-|x|^2)) average rank " << r.mean_rank);
    CHECK(r.mean_rank >= 3.0);
    CHECK(r.mean_rank <= 5.5);
}

TEST_CASE("Newton kernel accuracy and symmetry") {
    const double b = 5.0;
    const Index n = 64;
    const NewtonKernel k = newton_kernel_canonical(1e-5, b, n);
    MESSAGE("Newton kernel rank " << k.tensor.rank() << " step " << k.quadrature.step);
    CHECK(k.tensor.rank() <= 40);
    const double h = k.grid.h;
    std::mt19937_64 rng(32);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    double worst = 0;
    for (int s = 0; s < 2000; ++s) {
        const Index i = pick(rng), j = pick(rng), l = pick(rng);
        const double x = k.grid.point(i), y = k.grid.point(j), z = k.grid.point(l);
        const double r = std::sqrt(x * x + y * y + z * z);
        if (r < 3 * h) continue;
        double v = 0;
        for (Index a = 0; a < k.tensor.rank(); ++a) v += k.tensor.factor(0)(i, a) * k.tensor.factor(1)(j, a) * k.tensor.factor(2)(l, a);
        worst = std::max(worst, std::abs(v * r - 1));
    }
    CHECK(worst <= 1e-5);
    // far point on the axis
    CHECK(k.quadrature(b) * b == doctest::Approx(1.0).epsilon(1e-5));
    // factors are even in the centered coordinate and shared by all modes
    const Matrix& f = k.tensor.factor(0);
    CHECK((f - f.colwise().reverse()).norm() == 0.0);
    CHECK(k.tensor.factor(1) == f);
    CHECK(k.tensor.factor(2) == f);
}
