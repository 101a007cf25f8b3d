#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "qttkit/generators.hpp"

namespace qtt {

using ScalarFunction = std::function<double(double)>;

struct QuadratureResult {
    double value = 0.0;
    double h = 0.0;
    Index n = 0;
    /// eps ||W|| ||F|| h plus a Richardson estimate of the rectangle-rule error.
    double error_bound = 0.0;
    double rule_error_estimate = 0.0;
    TtTensor weight;
    TtTensor function;
    RankReport function_ranks;
    RankReport weight_ranks;
};

/// int_a^b w f dx ~ h <W, F> with N = q^L samples on the chosen rule; W and F are
/// compressed at relative accuracy eps and the product is an O(L) scalar product.
/// An empty w means w = 1 (exact rank-1 W).
QuadratureResult integrate_qtt(const ScalarFunction& f, const ScalarFunction& w, double a, double b,
                               int levels, int q, double eps, SamplingRule rule = SamplingRule::midpoint);

/// h sum_i w(x_i) f(x_i), evaluated directly (compensated summation).
double rectangle_sum(const ScalarFunction& f, const ScalarFunction& w, const Grid1D& grid);

/// Piecewise oscillatory benchmark on [0, 10]: on the first half of each of the
/// p = 16 cells it is x + a_k sin(100 x) with a_k = 0.3 + 0.05 (k - 1), else 0.
double bench_f3(double x);
/// (x + 1) sin(100 (x + 1)^2) on [0, 1].
double bench_f4(double x);

struct Benchmark {
    std::string name;
    ScalarFunction f;
    double a = 0.0;
    double b = 1.0;
    std::optional<double> exact;  // closed form when one is known
};

/// Registry: exp, sin, poly, const, f3, f4.
const std::vector<Benchmark>& benchmarks();
const Benchmark& benchmark(const std::string& name);

/// Reference integrals keyed by benchmark name, read from a JSON file of the form
/// {"name": {"value": v, ...}, ...}.
std::map<std::string, double> load_quad_oracle(const std::string& path);
/// data/quad_oracle.json in the source tree.
std::string default_quad_oracle_path();

struct RankTableRow {
    std::string function;
    int levels = 0;
    Index n = 0;
    double avg_rank = 0.0;
    Index max_rank = 0;
    double value = 0.0;
    std::optional<double> oracle;
    double abs_err = 0.0;  // NaN when there is no oracle
};

/// Average and max QTT ranks (mean over the L - 1 internal bonds) of the sampled
/// benchmark vectors, together with the integral value at each L.
std::vector<RankTableRow> rank_table(const std::vector<std::string>& functions, const std::vector<int>& levels,
                                     double eps, const std::map<std::string, double>& oracle = {},
                                     SamplingRule rule = SamplingRule::midpoint);

}  // namespace qtt
