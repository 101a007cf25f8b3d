#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "qttkit/algebra.hpp"
#include "qttkit/decompose.hpp"

using namespace qtt;
using namespace qtt::testing;

namespace {

double dense_dot(const DenseTensor& a, const DenseTensor& b) { return a.vec().dot(b.vec()); }

// O(N^{2d}) direct convolution on the (2N-1)^d grid.
DenseTensor brute_convolution(const DenseTensor& x, const DenseTensor& y) {
    std::vector<Index> out_dims;
    for (Index n : x.shape().dims()) out_dims.push_back(2 * n - 1);
    DenseTensor out{Shape(out_dims)};
    std::vector<Index> k(x.order());
    for (Index a = 0; a < x.size(); ++a) {
        const auto ia = x.shape().multi(a);
        for (Index b = 0; b < y.size(); ++b) {
            const auto ib = y.shape().multi(b);
            for (std::size_t l = 0; l < k.size(); ++l) k[l] = ia[l] + ib[l];
            out[out.shape().linear(k)] += x[a] * y[b];
        }
    }
    return out;
}

}  // namespace

TEST_CASE("scalar product of all-ones") {
    const TtTensor ones = TtTensor::ones(Shape{4, 4, 4});
    CHECK(scalar_product(ones, ones) == doctest::Approx(64.0));
    CHECK(total_sum(ones) == doctest::Approx(64.0));
}

TEST_CASE("canonical coordinate sum scalar product matches dense") {
    const Index n = 4;
    const double h = 0.25;
    Matrix f0(n, 2), f1(n, 2);
    for (Index i = 0; i < n; ++i) {
        f0(i, 0) = (i + 1) * h;
        f0(i, 1) = 1.0;
        f1(i, 0) = 1.0;
        f1(i, 1) = (i + 1) * h;
    }
    const CanonicalTensor f({f0, f1});
    const DenseTensor d = to_dense(f);
    CHECK(scalar_product(f, f) == doctest::Approx(dense_dot(d, d)).epsilon(1e-12));
}

TEST_CASE("TT and canonical forms of one tensor agree") {
    std::mt19937_64 rng(20);
    const CanonicalTensor c = random_canonical(rng, {4, 3, 5}, 3);
    const TtTensor t = canonical_to_tt(c);
    const TtTensor other = random_tt(rng, {4, 3, 5}, {2, 2});
    const double ref = dense_dot(to_dense(c), to_dense(other));
    CHECK(scalar_product(other, c) == doctest::Approx(ref).epsilon(1e-12));
    CHECK(scalar_product(c, other) == doctest::Approx(ref).epsilon(1e-12));
    CHECK(scalar_product(t, other) == doctest::Approx(ref).epsilon(1e-12));
    CHECK(scalar_product(t, t) == doctest::Approx(scalar_product(c, c)).epsilon(1e-12));
    CHECK(norm(t) == doctest::Approx(to_dense(c).norm()).epsilon(1e-12));
}

TEST_CASE("hadamard products") {
    std::mt19937_64 rng(21);
    const TtTensor x = random_tt(rng, {4, 4, 4}, {3, 3});
    const TtTensor y = random_tt(rng, {4, 4, 4}, {2, 3});
    const TtTensor z = hadamard(x, y);
    CHECK(z.ranks() == std::vector<Index>{1, 6, 9, 1});
    const Vector ref = dense_vector(x).cwiseProduct(dense_vector(y));
    CHECK((dense_vector(z) - ref).norm() < 1e-12 * ref.norm());
    CHECK(rel_diff(to_dense(hadamard(x, TtTensor::ones(x.shape()))), to_dense(x)) < 1e-15);

    const CanonicalTensor a = random_canonical(rng, {3, 4}, 2);
    const CanonicalTensor b = random_canonical(rng, {3, 4}, 3);
    const CanonicalTensor ab = hadamard(a, b);
    CHECK(ab.rank() == 6);
    CHECK((to_dense(ab).vec() - to_dense(a).vec().cwiseProduct(to_dense(b).vec())).norm() < 1e-12);
    CHECK_THROWS_AS(hadamard(x, random_tt(rng, {4, 4, 3}, {2, 2})), std::invalid_argument);
}

TEST_CASE("sums") {
    std::mt19937_64 rng(22);
    const TtTensor x = random_tt(rng, {3, 4, 2}, {2, 2});
    const TtTensor y = random_tt(rng, {3, 4, 2}, {3, 1});
    const TtTensor s = add(x, y);
    CHECK(s.ranks() == std::vector<Index>{1, 5, 3, 1});
    CHECK((dense_vector(s) - dense_vector(x) - dense_vector(y)).norm() < 1e-12);
    CHECK(rel_diff(to_dense(add(x, TtTensor::zero(x.shape()))), to_dense(x)) < 1e-15);
    const CanonicalTensor a = random_canonical(rng, {3, 4}, 2);
    const CanonicalTensor b = random_canonical(rng, {3, 4}, 3);
    CHECK(add(a, b).rank() == 5);
    CHECK((to_dense(add(a, b)).vec() - to_dense(a).vec() - to_dense(b).vec()).norm() < 1e-12);
    const TtTensor one_mode = random_tt(rng, {5}, {});
    CHECK((dense_vector(add(one_mode, one_mode)) - 2 * dense_vector(one_mode)).norm() < 1e-14);
}

TEST_CASE("1-D convolution") {
    const Vector r = convolve_1d(Vector{{1.0, 1.0}}, Vector{{1.0, 1.0}});
    REQUIRE(r.size() == 3);
    CHECK(r(0) == doctest::Approx(1.0));
    CHECK(r(1) == doctest::Approx(2.0));
    CHECK(r(2) == doctest::Approx(1.0));
}

TEST_CASE("convolution with a delta embeds the other tensor") {
    std::mt19937_64 rng(23);
    const CanonicalTensor y = random_canonical(rng, {4, 4, 4}, 2);
    Matrix e = Matrix::Zero(4, 1);
    e(0, 0) = 1.0;
    const CanonicalTensor delta({e, e, e});
    const DenseTensor c = to_dense(convolve_canonical(delta, y));
    const DenseTensor dy = to_dense(y);
    for (Index lin = 0; lin < dy.size(); ++lin) CHECK(c.at(dy.shape().multi(lin)) == doctest::Approx(dy[lin]).epsilon(1e-12));
}

TEST_CASE("canonical convolution matches the direct sum") {
    std::mt19937_64 rng(24);
    const CanonicalTensor x = random_canonical(rng, {8, 8, 8}, 2);
    const CanonicalTensor y = random_canonical(rng, {8, 8, 8}, 2);
    const CanonicalTensor z = convolve_canonical(x, y);
    CHECK(z.rank() == 4);
    const DenseTensor ref = brute_convolution(to_dense(x), to_dense(y));
    CHECK((to_dense(z).vec() - ref.vec()).norm() <= 1e-10 * ref.vec().norm());
}

TEST_CASE("mpo apply") {
    std::mt19937_64 rng(25);
    const TtTensor x = random_tt(rng, {4, 4, 4}, {2, 3});
    const TtTensor same = mpo_apply(TtMatrix::identity({4, 4, 4}), x);
    CHECK((dense_vector(same) - dense_vector(x)).norm() < 1e-14);
    const TtMatrix a = random_tt_matrix(rng, {4, 4, 4}, {4, 4, 4}, {2, 2});
    const TtTensor y = mpo_apply(a, x);
    CHECK(y.ranks() == std::vector<Index>{1, 4, 6, 1});
    const Vector ref = to_dense_matrix(a) * dense_vector(x);
    CHECK((dense_vector(y) - ref).norm() < 1e-12 * ref.norm());
    CHECK_THROWS_AS(mpo_apply(a, random_tt(rng, {4, 4}, {2})), std::invalid_argument);
}

TEST_CASE("tridiagonal operator has its sine eigenvector") {
    const Index n = 16;
    Matrix lap = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        lap(i, i) = 2;
        if (i > 0) lap(i, i - 1) = -1;
        if (i + 1 < n) lap(i, i + 1) = -1;
    }
    const TtMatrix a({Eigen::Map<const Matrix>(lap.data(), n * n, 1)}, {n}, {n});
    Vector s(n);
    for (Index i = 0; i < n; ++i) s(i) = std::sin(std::numbers::pi * (i + 1) / (n + 1));
    const TtTensor x({Matrix(s)}, {n});
    const double lambda = 2 - 2 * std::cos(std::numbers::pi / (n + 1));
    CHECK((dense_vector(mpo_apply(a, x)) - lambda * s).norm() < 1e-12);
}

TEST_CASE("operator products, transpose and concatenation") {
    std::mt19937_64 rng(26);
    const TtMatrix a = random_tt_matrix(rng, {2, 3}, {3, 2}, {2});
    const TtMatrix b = random_tt_matrix(rng, {3, 2}, {2, 2}, {3});
    const Matrix ab = to_dense_matrix(mpo_multiply(a, b));
    CHECK((ab - to_dense_matrix(a) * to_dense_matrix(b)).norm() < 1e-12 * ab.norm());
    CHECK((to_dense_matrix(transpose(a)) - to_dense_matrix(a).transpose()).norm() == 0.0);
    const Matrix cat = to_dense_matrix(tt_concat(a, b));
    CHECK((cat - kron_modes(to_dense_matrix(a), to_dense_matrix(b))).norm() < 1e-12 * cat.norm());
    const TtTensor x = random_tt(rng, {2, 3}, {2});
    const TtTensor y = random_tt(rng, {4}, {});
    CHECK((dense_vector(tt_concat(x, y)) - kron_modes(Matrix(dense_vector(x)), Matrix(dense_vector(y)))).norm() < 1e-12);
}

TEST_CASE("diagonal lift") {
    CHECK(to_dense_matrix(diag_lift(TtTensor::ones(Shape{2, 3}))).isApprox(Matrix::Identity(6, 6)));
    std::mt19937_64 rng(27);
    const TtTensor x = random_tt(rng, {2, 2, 3}, {2, 2});
    const TtMatrix d = diag_lift(x);
    CHECK(d.ranks() == x.ranks());
    CHECK((to_dense_matrix(d) - Matrix(dense_vector(x).asDiagonal())).norm() < 1e-14);
}

TEST_CASE("factorized FFT of a constant tensor") {
    const CanonicalTensor c({Matrix::Ones(8, 1), Matrix::Ones(8, 1)});
    const ComplexCanonical f = kron_factorized_fft_apply(c);
    CHECK(f.rank() == 1);
    CHECK(f.re[0](0, 0) == doctest::Approx(8.0));
    CHECK(f.re[0].col(0).tail(7).norm() < 1e-12);
    CHECK(f.im[0].norm() < 1e-12);
    CHECK_THROWS_AS(kron_factorized_fft_apply(CanonicalTensor({Matrix::Ones(6, 1), Matrix::Ones(6, 1)})), std::invalid_argument);
    CHECK_THROWS_AS(kron_factorized_fft_apply(CanonicalTensor({Matrix::Ones(8, 1), Matrix::Ones(4, 1)})), std::invalid_argument);
}

TEST_CASE("factorized FFT matches direct DFT and Parseval") {
    std::mt19937_64 rng(28);
    const Index n = 8;
    const CanonicalTensor x = random_canonical(rng, {n, n, n}, 3);
    const ComplexCanonical f = kron_factorized_fft_apply(x);
    const double pi = std::numbers::pi;
    for (std::size_t l = 0; l < 3; ++l) {
        for (Index a = 0; a < 3; ++a) {
            double energy = 0;
            for (Index k = 0; k < n; ++k) {
                std::complex<double> s = 0;
                for (Index j = 0; j < n; ++j) s += x.factor(l)(j, a) * std::polar(1.0, -2 * pi * j * k / n);
                CHECK(std::abs(s - std::complex<double>(f.re[l](k, a), f.im[l](k, a))) < 1e-12);
                energy += std::norm(s);
            }
            CHECK(energy == doctest::Approx(n * x.factor(l).col(a).squaredNorm()).epsilon(1e-12));
        }
    }
    // 3-D DFT of the dense tensor at a few frequencies.
    const DenseTensor dx = to_dense(x);
    const auto [re, im] = to_dense(f);
    for (Index lin : {Index{0}, Index{37}, Index{200}, Index{511}}) {
        const auto k = dx.shape().multi(lin);
        std::complex<double> s = 0;
        for (Index m = 0; m < dx.size(); ++m) {
            const auto j = dx.shape().multi(m);
            s += dx[m] * std::polar(1.0, -2 * pi * double(j[0] * k[0] + j[1] * k[1] + j[2] * k[2]) / n);
        }
        CHECK(std::abs(s - std::complex<double>(re[lin], im[lin])) < 1e-10);
    }
}
