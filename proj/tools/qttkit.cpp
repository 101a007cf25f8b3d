// Batch experiment runner. Every subcommand writes CSV (header row, LF endings) to stdout.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qttkit/algebra.hpp"
#include "qttkit/dynamics.hpp"
#include "qttkit/generators.hpp"
#include "qttkit/lattice.hpp"
#include "qttkit/quadrature.hpp"

using namespace qtt;

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string secs(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

template <class... Ts>
void row(std::ostream& out, const Ts&... fields) {
    bool first = true;
    ((out << (first ? "" : ",") << fields, first = false), ...);
    out << '\n';
}

SamplingRule parse_rule(const std::string& s) {
    return s == "left" ? SamplingRule::left : SamplingRule::midpoint;
}

std::map<std::string, double> oracle_or_empty(const std::string& path) {
    if (path.empty()) return {};
    return load_quad_oracle(path);
}

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct RanksArgs {
    std::vector<std::string> functions{"f3", "f4"};
    std::vector<int> levels{14, 15, 16, 17};
    double eps = 1e-6;
    std::string rule = "mid";
    std::string oracle = default_quad_oracle_path();
};

int run_ranks(const RanksArgs& a) {
    const auto rows = rank_table(a.functions, a.levels, a.eps, oracle_or_empty(a.oracle), parse_rule(a.rule));
    row(std::cout, "function", "L", "N", "avg_rank", "max_rank", "value", "oracle", "abs_err");
    for (const auto& r : rows) {
        row(std::cout, r.function, r.levels, r.n, num(r.avg_rank), r.max_rank, num(r.value),
            r.oracle ? num(*r.oracle) : std::string("nan"), num(r.abs_err));
    }
    return 0;
}

struct QuadArgs {
    std::string function = "f4";
    std::vector<int> levels{17};
    double eps = 1e-6;
    int q = 2;
    std::string rule = "mid";
    std::string oracle = default_quad_oracle_path();
};

int run_quad(const QuadArgs& a) {
    const Benchmark& bench = benchmark(a.function);
    const auto table = oracle_or_empty(a.oracle);
    std::optional<double> ref = bench.exact;
    if (auto it = table.find(a.function); it != table.end()) ref = it->second;
    row(std::cout, "function", "L", "N", "rule", "value", "oracle", "abs_err", "error_bound", "avg_rank", "max_rank",
        "seconds");
    for (int l : a.levels) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto res = integrate_qtt(bench.f, {}, bench.a, bench.b, l, a.q, a.eps, parse_rule(a.rule));
        const double s = elapsed(t0);
        row(std::cout, a.function, l, res.n, a.rule, num(res.value), ref ? num(*ref) : std::string("nan"),
            ref ? num(std::abs(res.value - *ref)) : std::string("nan"), num(res.error_bound),
            num(res.function_ranks.mean_rank), res.function_ranks.max_rank, secs(s));
    }
    return 0;
}

struct LaplaceArgs {
    int d = 2;
    Index n = 32;
    std::vector<int> ms{9, 16, 25, 36, 49};
};

int run_laplace_inv(const LaplaceArgs& a) {
    const auto rows = expsum_error_table(std::vector<double>(static_cast<std::size_t>(a.d), 1.0), a.n, a.ms);
    row(std::cout, "M", "terms", "sqrt_M", "error");
    std::vector<double> x, y;
    for (const auto& r : rows) {
        row(std::cout, r.m, r.terms, num(std::sqrt(r.m)), num(r.error));
        x.push_back(std::sqrt(r.m));
        y.push_back(std::log(r.error));
    }
    if (rows.size() >= 2) {
        const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
        const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
        double sxy = 0, sxx = 0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            sxy += (x[k] - mx) * (y[k] - my);
            sxx += (x[k] - mx) * (x[k] - mx);
        }
        std::cerr << "log(error) vs sqrt(M) slope: " << num(sxy / sxx) << '\n';
    }
    return 0;
}

struct LatticeArgs {
    Index l1 = 10, l2 = 4, l3 = 6;
    Index n = 16;
    double b = 2.0;
    double eps = 1e-6;
    std::string out_dir = ".";
};

int run_lattice(const LatticeArgs& a) {
    LatticeSpec spec;
    spec.cell_width = a.b;
    spec.n = a.n;
    spec.extents = {a.l1, a.l2, a.l3};
    spec.validate();
    auto t0 = std::chrono::steady_clock::now();
    const MasterTensor master = build_master(spec, a.eps);
    const double t_master = elapsed(t0);
    t0 = std::chrono::steady_clock::now();
    const LatticeSum sum = assemble_lattice_sum(spec, master);
    const double t_assemble = elapsed(t0);

    const std::filesystem::path dir(a.out_dir);
    std::filesystem::create_directories(dir);
    for (std::size_t axis = 0; axis < 3; ++axis) {
        std::ofstream f(dir / ("lattice_factors_axis" + std::to_string(axis + 1) + ".csv"));
        const Matrix& m = sum.tensor.factor(axis);
        f << "i,x";
        for (Index r = 0; r < m.cols(); ++r) f << ",f" << r + 1;
        f << '\n';
        for (Index i = 0; i < m.rows(); ++i) {
            f << i << ',' << num(sum.grids[axis].point(i));
            for (Index r = 0; r < m.cols(); ++r) f << ',' << num(m(i, r));
            f << '\n';
        }
    }
    {
        std::ofstream f(dir / "lattice_timing.csv");
        row(f, "stage", "rank", "seconds");
        row(f, "master", master.rank(), secs(t_master));
        row(f, "assembled", sum.tensor.rank(), secs(t_assemble));
    }

    // slice along the first axis through the middle grid points of the other two
    const Index j = sum.grids[1].n / 2, k = sum.grids[2].n / 2;
    row(std::cout, "i", "x", "y", "z", "potential");
    for (Index i = 0; i < sum.grids[0].n; ++i) {
        row(std::cout, i, num(sum.grids[0].point(i)), num(sum.grids[1].point(j)), num(sum.grids[2].point(k)),
            num(canonical_entry(sum.tensor, {i, j, k})));
    }
    std::cerr << "lattice " << a.l1 << "x" << a.l2 << "x" << a.l3 << ": rank " << sum.tensor.rank()
              << ", master " << secs(t_master) << " s, assembled " << secs(t_assemble) << " s\n";
    return 0;
}

struct CmeArgs {
    std::string model;
    double tau = 0.0;
    Index nt = 256;
    double t0 = 15.0;
    double horizon = 120.0;
    double eps = 1e-6;
    double tol = 1e-5;
    int max_sweeps = 20;
    std::vector<Index> initial;
};

int run_cme(const CmeArgs& a, std::uint64_t seed) {
    const ReactionNetwork net = load_network(a.model);
    if (a.nt < 2 || (a.nt & (a.nt - 1)) != 0) throw CLI::ValidationError("--Nt", "must be a power of two >= 2");
    CmeOptions opt;
    opt.tau = a.tau;
    opt.time_levels = static_cast<int>(std::lround(std::log2(static_cast<double>(a.nt))));
    opt.window = a.tau > 0 ? a.tau * static_cast<double>(a.nt) : a.t0;
    opt.horizon = a.horizon;
    opt.eps = a.eps;
    opt.solver.tol = a.tol;
    opt.solver.max_sweeps = a.max_sweeps;
    opt.solver.seed = seed;
    std::vector<Index> start = a.initial.empty() ? std::vector<Index>(net.species(), 0) : a.initial;

    row(std::cout, "t", "mass", "residual_ratio", "max_rank", "seconds");
    std::cout.flush();
    int failed_window = 0;
    double failed_residual = 0.0;
    const CmeResult r = cme_solve_global(net, point_mass(net.caps, start), opt, [&](const CmeWindow& w) {
        row(std::cout, num(w.t_end), num(w.mass), num(w.residual_ratio), w.max_rank, secs(w.seconds));
        std::cout.flush();
        if (!w.converged && failed_window == 0) {
            failed_window = w.index;
            failed_residual = w.solver_residual;
        }
    });
    if (!r.converged) {
        std::cout << "# status: not converged (first at window " << failed_window << ", residual "
                  << num(failed_residual) << ")\n";
        return 2;
    }
    std::cout << "# status: converged\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qttkit: low-rank tensor experiments (CSV on stdout)"};
    app.require_subcommand(1);
    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "Seed for randomized components")->capture_default_str();

    RanksArgs ranks;
    auto* c_ranks = app.add_subcommand("ranks", "Average QTT ranks of sampled benchmark vectors");
    c_ranks->add_option("--function", ranks.functions, "exp, sin, poly, const, f3, f4")
        ->check(CLI::IsMember({"exp", "sin", "poly", "const", "f3", "f4"}))
        ->capture_default_str();
    c_ranks->add_option("--L", ranks.levels, "Levels (N = 2^L)")->check(CLI::Range(1, 26))->capture_default_str();
    c_ranks->add_option("--eps", ranks.eps, "Relative truncation accuracy")->capture_default_str();
    c_ranks->add_option("--rule", ranks.rule, "Sampling rule")->check(CLI::IsMember({"left", "mid"}))->capture_default_str();
    c_ranks->add_option("--oracle", ranks.oracle, "Reference integrals (JSON), empty to skip")->capture_default_str();

    QuadArgs quad;
    auto* c_quad = app.add_subcommand("quad", "QTT quadrature against the stored oracle");
    c_quad->add_option("--function", quad.function, "exp, sin, poly, const, f3, f4")
        ->check(CLI::IsMember({"exp", "sin", "poly", "const", "f3", "f4"}))
        ->capture_default_str();
    c_quad->add_option("--L", quad.levels, "Levels (N = q^L)")->check(CLI::Range(1, 26))->capture_default_str();
    c_quad->add_option("--eps", quad.eps, "Relative truncation accuracy")->capture_default_str();
    c_quad->add_option("--q", quad.q, "Folding base")->check(CLI::IsMember({2, 3}))->capture_default_str();
    c_quad->add_option("--rule", quad.rule, "Sampling rule")->check(CLI::IsMember({"left", "mid"}))->capture_default_str();
    c_quad->add_option("--oracle", quad.oracle, "Reference integrals (JSON), empty to skip")->capture_default_str();

    LaplaceArgs lap;
    auto* c_lap = app.add_subcommand("laplace-inv", "Exponential-sum inverse of the Laplacian: error vs M");
    c_lap->add_option("--d", lap.d, "Dimension")->check(CLI::Range(1, 3))->capture_default_str();
    c_lap->add_option("--N", lap.n, "Grid points per mode")->check(CLI::Range(2, 4096))->capture_default_str();
    c_lap->add_option("--M-list", lap.ms, "Quadrature parameters M")->check(CLI::PositiveNumber)->capture_default_str();

    LatticeArgs lat;
    auto* c_lat = app.add_subcommand("lattice", "Assembled lattice sum of Newton kernels");
    c_lat->add_option("--L1", lat.l1, "Cells along x")->check(CLI::PositiveNumber)->capture_default_str();
    c_lat->add_option("--L2", lat.l2, "Cells along y")->check(CLI::PositiveNumber)->capture_default_str();
    c_lat->add_option("--L3", lat.l3, "Cells along z")->check(CLI::PositiveNumber)->capture_default_str();
    c_lat->add_option("--n", lat.n, "Grid points per cell and axis (even)")->check(CLI::PositiveNumber)->capture_default_str();
    c_lat->add_option("--b", lat.b, "Cell width")->check(CLI::PositiveNumber)->capture_default_str();
    c_lat->add_option("--eps", lat.eps, "Kernel accuracy")->capture_default_str();
    c_lat->add_option("--out-dir", lat.out_dir, "Directory for factor and timing CSVs")->capture_default_str();

    CmeArgs cme;
    auto* c_cme = app.add_subcommand("cme", "Restarted global space-time solve of a master equation");
    c_cme->add_option("--model", cme.model, "Network file")->required()->check(CLI::ExistingFile);
    c_cme->add_option("--tau", cme.tau, "Time step (0: T0 / Nt)")->capture_default_str();
    c_cme->add_option("--Nt", cme.nt, "Time steps per window (power of two)")->capture_default_str();
    c_cme->add_option("--T0", cme.t0, "Window length")->check(CLI::PositiveNumber)->capture_default_str();
    c_cme->add_option("--T", cme.horizon, "Final time")->check(CLI::PositiveNumber)->capture_default_str();
    c_cme->add_option("--eps", cme.eps, "Rounding of the state passed between windows")->capture_default_str();
    c_cme->add_option("--tol", cme.tol, "Solver tolerance")->capture_default_str();
    c_cme->add_option("--max-sweeps", cme.max_sweeps, "Solver sweep limit")->check(CLI::PositiveNumber)->capture_default_str();
    c_cme->add_option("--initial", cme.initial, "Initial copy numbers (default all zero)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*c_ranks) return run_ranks(ranks);
        if (*c_quad) return run_quad(quad);
        if (*c_lap) return run_laplace_inv(lap);
        if (*c_lat) return run_lattice(lat);
        if (*c_cme) return run_cme(cme, seed);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cout.flush();
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
