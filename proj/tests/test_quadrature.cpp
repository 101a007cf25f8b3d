#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "qttkit/algebra.hpp"
#include "qttkit/quadrature.hpp"

using namespace qtt;
using namespace qtt::testing;

namespace {

double f4_closed_form() {
    return (std::cos(100.0) - std::cos(400.0)) / 200.0;
}

double f3_closed_form() {
    double total = 0.0;
    for (int k = 1; k <= 16; ++k) {
        const double lo = 10.0 * (k - 1) / 16.0;
        const double hi = 10.0 * (k - 0.5) / 16.0;
        const double a = 0.3 + 0.05 * (k - 1);
        total += 0.5 * (hi * hi - lo * lo) + a * (std::cos(100.0 * lo) - std::cos(100.0 * hi)) / 100.0;
    }
    return total;
}

}  // namespace

TEST_CASE("constant integrand is exact at any L") {
    for (int l : {1, 4, 10, 16}) {
        const auto r = integrate_qtt([](double) { return 1.0; }, {}, 0.0, 1.0, l, 2, 1e-10);
        CHECK(r.value == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(r.function_ranks.max_rank == 1);
        CHECK(r.rule_error_estimate < 1e-14);
    }
    const auto tern = integrate_qtt([](double) { return 2.0; }, {}, -1.0, 2.0, 5, 3, 1e-10);
    CHECK(tern.value == doctest::Approx(6.0).epsilon(1e-14));
    CHECK(tern.n == 243);
}

TEST_CASE("benchmark integrands sample as documented") {
    CHECK(bench_f3(0.1) == doctest::Approx(0.1 + 0.3 * std::sin(10.0)));
    CHECK(bench_f3(0.5) == 0.0);
    CHECK(bench_f3(0.7) == doctest::Approx(0.7 + 0.35 * std::sin(70.0)));
    CHECK(bench_f3(9.5) == doctest::Approx(9.5 + 1.05 * std::sin(950.0)));
    CHECK(bench_f3(9.9) == 0.0);
    CHECK(bench_f4(0.0) == doctest::Approx(std::sin(100.0)));
    CHECK(bench_f4(1.0) == doctest::Approx(2.0 * std::sin(400.0)));
    CHECK_THROWS_AS(benchmark("nope"), std::invalid_argument);
}

TEST_CASE("oracle file agrees with closed forms") {
    const auto oracle = load_quad_oracle(default_quad_oracle_path());
    REQUIRE(oracle.count("f3") == 1);
    REQUIRE(oracle.count("f4") == 1);
    CHECK(std::abs(oracle.at("f4") - f4_closed_form()) < 1e-12);
    CHECK(std::abs(oracle.at("f3") - f3_closed_form()) < 1e-11);
    CHECK_THROWS(load_quad_oracle("/nonexistent/oracle.json"));
}

TEST_CASE("exact-rank benchmarks") {
    for (int l : {10, 14}) {
        const auto e = integrate_qtt(benchmark("exp").f, {}, 0.0, 1.0, l, 2, 1e-12);
        CHECK(e.function_ranks.max_rank == 1);
        const auto s = integrate_qtt(benchmark("sin").f, {}, 0.0, 1.0, l, 2, 1e-12);
        CHECK(s.function_ranks.max_rank == 2);
        const auto p = integrate_qtt(benchmark("poly").f, {}, 0.0, 1.0, l, 2, 1e-12);
        CHECK(p.function_ranks.max_rank <= 4);
        CHECK(e.value == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-6));
        CHECK(s.value == doctest::Approx((1.0 - std::cos(10.0)) / 10.0).epsilon(1e-5));
        CHECK(p.value == doctest::Approx(0.25).epsilon(1e-6));
    }
}

TEST_CASE("f4 and f3 match the oracle") {
    const auto oracle = load_quad_oracle(default_quad_oracle_path());
    const auto r4 = integrate_qtt(bench_f4, {}, 0.0, 1.0, 17, 2, 1e-6);
    CHECK(std::abs(r4.value - oracle.at("f4")) < 5e-5);
    CHECK(std::abs(r4.value - oracle.at("f4")) <= r4.error_bound);
    const auto r3 = integrate_qtt(bench_f3, {}, 0.0, 10.0, 16, 2, 1e-6);
    CHECK(std::abs(r3.value - oracle.at("f3")) < 5e-5);
    CHECK(std::abs(r3.value - oracle.at("f3")) <= r3.error_bound);
    CHECK(r3.function_ranks.mean_rank == doctest::Approx(3.6).epsilon(1.5 / 3.6));
}

TEST_CASE("eps = 0 reproduces the rectangle sum") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double c0 = u(rng), c1 = u(rng), c2 = u(rng), om = 5.0 * u(rng);
        auto f = [=](double x) { return c0 + c1 * std::sin(om * x) + c2 * x * x; };
        auto w = [=](double x) { return 1.0 + 0.5 * std::cos(c1 * x); };
        const int l = 4 + trial % 8;
        const SamplingRule rule = trial % 2 ? SamplingRule::left : SamplingRule::midpoint;
        const auto r = integrate_qtt(f, w, -1.0, 1.5, l, 2, 0.0, rule);
        const double direct = rectangle_sum(f, w, Grid1D::on_interval(-1.0, 1.5, Index{1} << l, rule));
        CHECK(std::abs(r.value - direct) <= 1e-12 * std::max(1.0, std::abs(direct)));
    }
}

TEST_CASE("rounding either factor first changes the value by at most 2 eps ||W|| ||F|| h") {
    const double eps = 1e-4;
    for (int l : {8, 12}) {
        const auto exact = integrate_qtt(bench_f4, [](double x) { return std::exp(-x); }, 0.0, 1.0, l, 2, 0.0);
        const TtTensor w_round = tt_round(exact.weight, TruncationPolicy(eps));
        const TtTensor f_round = tt_round(exact.function, TruncationPolicy(eps));
        const double a = exact.h * scalar_product(w_round, exact.function);
        const double b = exact.h * scalar_product(exact.weight, f_round);
        const double tol = 2 * eps * norm(exact.weight) * norm(exact.function) * exact.h;
        CHECK(std::abs(a - b) <= tol);
        CHECK(std::abs(a - exact.value) <= tol);
    }
}

TEST_CASE("rule order: left O(h), midpoint O(h^2), left-mid gap O(h)") {
    const auto& bench = benchmark("exp");
    const double exact = *bench.exact;
    std::vector<double> x, left_err, mid_err;
    for (int l = 6; l <= 14; ++l) {
        const double el = std::abs(integrate_qtt(bench.f, {}, 0, 1, l, 2, 1e-13, SamplingRule::left).value - exact);
        const double em = std::abs(integrate_qtt(bench.f, {}, 0, 1, l, 2, 1e-13).value - exact);
        x.push_back(l);
        left_err.push_back(std::log2(el));
        mid_err.push_back(std::log2(em));
        const double gap = std::abs(integrate_qtt(bench.f, {}, 0, 1, l, 2, 1e-13, SamplingRule::left).value -
                                    integrate_qtt(bench.f, {}, 0, 1, l, 2, 1e-13).value);
        // (f(b) - f(a)) h / 2 to leading order
        CHECK(gap * std::ldexp(1.0, l) == doctest::Approx((exact) / 2.0).epsilon(0.02));
    }
    auto slope = [&](const std::vector<double>& y) {
        const double n = static_cast<double>(x.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sx += x[i];
            sy += y[i];
            sxx += x[i] * x[i];
            sxy += x[i] * y[i];
        }
        return (n * sxy - sx * sy) / (n * sxx - sx * sx);
    };
    CHECK(-slope(left_err) >= 0.9);
    CHECK(-slope(mid_err) >= 1.8);
}

TEST_CASE("rank_table rows") {
    const auto rows = rank_table({"const", "sin", "f4"}, {8, 10}, 1e-6, {{"f4", f4_closed_form()}});
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].function == "const");
    CHECK(rows[0].avg_rank == 1.0);
    CHECK(rows[0].max_rank == 1);
    CHECK(rows[1].n == 1024);
    CHECK(rows[2].avg_rank == doctest::Approx(2.0));
    CHECK(rows[4].oracle.has_value());
    CHECK(rows[5].abs_err == doctest::Approx(std::abs(rows[5].value - f4_closed_form())));
    for (const auto& r : rows) CHECK(r.max_rank >= r.avg_rank);
}

TEST_CASE("integrate_qtt rejects bad input") {
    CHECK_THROWS_AS(integrate_qtt({}, {}, 0, 1, 4, 2, 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(integrate_qtt(bench_f4, {}, 1, 0, 4, 2, 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(integrate_qtt(bench_f4, {}, 0, 1, 0, 2, 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(integrate_qtt(bench_f4, {}, 0, 1, 4, 1, 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(integrate_qtt(bench_f4, {}, 0, 1, 4, 2, -1.0), std::invalid_argument);
}
