#include "qttkit/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "json.hpp"
#include "qttkit/algebra.hpp"

namespace qtt {

namespace {

double power_length(int q, int levels) {
    return std::pow(static_cast<double>(q), levels);
}

long double weighted_sum(const ScalarFunction& f, const ScalarFunction& w, const Grid1D& grid) {
    long double s = 0.0L;
    for (Index i = 0; i < grid.n; ++i) {
        const double x = grid.point(i);
        s += static_cast<long double>(w ? w(x) * f(x) : f(x));
    }
    return s;
}

// Same rule on N/2 cells of width 2h.
double coarse_rule(const ScalarFunction& f, const ScalarFunction& w, const Grid1D& fine) {
    Grid1D coarse = fine;
    coarse.n = fine.n / 2;
    coarse.h = 2.0 * fine.h;
    return static_cast<double>(weighted_sum(f, w, coarse)) * coarse.h;
}

}  // namespace

double rectangle_sum(const ScalarFunction& f, const ScalarFunction& w, const Grid1D& grid) {
    return static_cast<double>(weighted_sum(f, w, grid)) * grid.h;
}

QuadratureResult integrate_qtt(const ScalarFunction& f, const ScalarFunction& w, double a, double b, int levels,
                               int q, double eps, SamplingRule rule) {
    if (!f) throw std::invalid_argument("integrate_qtt: integrand is empty");
    if (levels < 1) throw std::invalid_argument("integrate_qtt: L must be >= 1");
    if (q < 2) throw std::invalid_argument("integrate_qtt: q must be >= 2");
    if (!(b > a)) throw std::invalid_argument("integrate_qtt: empty interval");
    const double n_real = power_length(q, levels);
    if (n_real > static_cast<double>(std::numeric_limits<Index>::max() / 2))
        throw std::invalid_argument("integrate_qtt: q^L overflows");
    const Index n = static_cast<Index>(n_real);

    QuadratureResult r;
    const Grid1D grid = Grid1D::on_interval(a, b, n, rule);
    r.h = grid.h;
    r.n = n;
    const TruncationPolicy policy(eps);
    r.function = qtt_from_samples(f, grid, q, policy);
    r.weight = w ? qtt_from_samples(w, grid, q, policy) : qtt_exponential(1.0, q, levels);
    r.function_ranks = rank_report(r.function);
    r.weight_ranks = rank_report(r.weight);
    r.value = r.h * scalar_product(r.weight, r.function);

    if (q == 2 && n >= 2) {
        const double fine = rectangle_sum(f, w, grid);
        const double diff = std::abs(fine - coarse_rule(f, w, grid));
        r.rule_error_estimate = rule == SamplingRule::midpoint ? diff / 3.0 : diff;
    }
    r.error_bound = eps * norm(r.weight) * norm(r.function) * r.h + r.rule_error_estimate;
    return r;
}

double bench_f3(double x) {
    constexpr int p = 16;
    constexpr double omega = 100.0;
    if (x <= 0.0 || x > 10.0) return 0.0;
    const double cell = 10.0 / p;
    int k = static_cast<int>(std::ceil(x / cell));
    k = std::clamp(k, 1, p);
    if (x > cell * (k - 0.5)) return 0.0;
    const double ak = 0.3 + 0.05 * (k - 1);
    return x + ak * std::sin(omega * x);
}

double bench_f4(double x) {
    const double y = x + 1.0;
    return y * std::sin(100.0 * y * y);
}

const std::vector<Benchmark>& benchmarks() {
    static const std::vector<Benchmark> list = {
        {"exp", [](double x) { return std::exp(x); }, 0.0, 1.0, std::numbers::e - 1.0},
        {"sin", [](double x) { return std::sin(10.0 * x); }, 0.0, 1.0, (1.0 - std::cos(10.0)) / 10.0},
        {"poly", [](double x) { return x * x * x - 2.0 * x + 1.0; }, 0.0, 1.0, 0.25},
        {"const", [](double) { return 1.0; }, 0.0, 1.0, 1.0},
        {"f3", bench_f3, 0.0, 10.0, std::nullopt},
        {"f4", bench_f4, 0.0, 1.0, std::nullopt},
    };
    return list;
}

const Benchmark& benchmark(const std::string& name) {
    for (const auto& b : benchmarks()) {
        if (b.name == name) return b;
    }
    throw std::invalid_argument("unknown benchmark function: " + name);
}

std::map<std::string, double> load_quad_oracle(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open oracle file: " + path);
    const auto doc = nlohmann::json::parse(in);
    std::map<std::string, double> out;
    for (const auto& [name, entry] : doc.items()) out[name] = entry.at("value").get<double>();
    return out;
}

std::string default_quad_oracle_path() {
    return std::string(QTTKIT_DATA_DIR) + "/quad_oracle.json";
}

std::vector<RankTableRow> rank_table(const std::vector<std::string>& functions, const std::vector<int>& levels,
                                     double eps, const std::map<std::string, double>& oracle, SamplingRule rule) {
    std::vector<RankTableRow> rows;
    for (const auto& name : functions) {
        const Benchmark& bench = benchmark(name);
        std::optional<double> ref = bench.exact;
        if (auto it = oracle.find(name); it != oracle.end()) ref = it->second;
        for (int l : levels) {
            const auto res = integrate_qtt(bench.f, {}, bench.a, bench.b, l, 2, eps, rule);
            RankTableRow row;
            row.function = name;
            row.levels = l;
            row.n = res.n;
            row.avg_rank = res.function_ranks.mean_rank;
            row.max_rank = res.function_ranks.max_rank;
            row.value = res.value;
            row.oracle = ref;
            row.abs_err = ref ? std::abs(res.value - *ref) : std::numeric_limits<double>::quiet_NaN();
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace qtt
