#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qttkit/algebra.hpp"
#include "qttkit/dynamics.hpp"

namespace qtt {

double Propensity::operator()(Index copies) const {
    const double x = static_cast<double>(copies);
    switch (kind) {
        case Kind::constant: return a;
        case Kind::linear: return a * x;
        case Kind::hill: return b * x / (a + x);
    }
    return 0.0;
}

void ReactionNetwork::validate() const {
    if (caps.empty()) throw std::invalid_argument("network: no species");
    for (Index n : caps) {
        if (n < 1) throw std::invalid_argument("network: caps must be >= 1");
    }
    for (const auto& ch : channels) {
        if (ch.stoichiometry.size() != caps.size())
            throw std::invalid_argument("network: stoichiometry length differs from the species count");
        const auto& p = ch.propensity;
        if (p.kind != Propensity::Kind::constant && p.species >= caps.size())
            throw std::invalid_argument("network: propensity refers to a missing species");
        if (!std::isfinite(p.a) || !std::isfinite(p.b) || p.a < 0 || p.b < 0)
            throw std::invalid_argument("network: propensity parameters must be finite and >= 0");
        if (p.kind == Propensity::Kind::hill && p.a == 0)
            throw std::invalid_argument("network: hill constant a must be positive");
    }
}

namespace {

[[noreturn]] void parse_error(int line, const std::string& what) {
    throw std::invalid_argument("network line " + std::to_string(line) + ": " + what);
}

}  // namespace

ReactionNetwork parse_network(std::istream& in) {
    ReactionNetwork net;
    std::size_t d = 0;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::istringstream line(raw);
        std::string key;
        if (!(line >> key)) continue;
        if (key == "species") {
            long long v = 0;
            if (!(line >> v) || v < 1) parse_error(line_no, "species needs a positive count");
            d = static_cast<std::size_t>(v);
        } else if (key == "cap") {
            if (d == 0) parse_error(line_no, "cap before species");
            net.caps.clear();
            Index n = 0;
            while (line >> n) net.caps.push_back(n);
            if (net.caps.size() != d) parse_error(line_no, "cap needs one value per species");
        } else if (key == "boundary") {
            std::string b;
            line >> b;
            if (b == "absorb") net.boundary = Boundary::absorb;
            else if (b == "reflect") net.boundary = Boundary::reflect;
            else parse_error(line_no, "boundary must be absorb or reflect");
        } else if (key == "channel") {
            if (d == 0) parse_error(line_no, "channel before species");
            Channel ch;
            std::string tok;
            while (line >> tok && tok != "|") {
                try {
                    std::size_t used = 0;
                    ch.stoichiometry.push_back(std::stoll(tok, &used));
                    if (used != tok.size()) throw std::invalid_argument(tok);
                } catch (const std::exception&) {
                    parse_error(line_no, "bad stoichiometry entry '" + tok + "'");
                }
            }
            if (tok != "|") parse_error(line_no, "channel needs '|' before the propensity");
            if (ch.stoichiometry.size() != d) parse_error(line_no, "stoichiometry needs one entry per species");
            std::string kind;
            line >> kind;
            auto& p = ch.propensity;
            long long i = 0;
            if (kind == "const") {
                p.kind = Propensity::Kind::constant;
                if (!(line >> p.a)) parse_error(line_no, "const needs a rate");
            } else if (kind == "linear") {
                p.kind = Propensity::Kind::linear;
                if (!(line >> i >> p.a)) parse_error(line_no, "linear needs a species index and a rate");
            } else if (kind == "hill") {
                p.kind = Propensity::Kind::hill;
                if (!(line >> i >> p.a >> p.b)) parse_error(line_no, "hill needs a species index, a and b");
            } else {
                parse_error(line_no, "unknown propensity '" + kind + "'");
            }
            if (i < 0 || static_cast<std::size_t>(i) >= d) parse_error(line_no, "species index out of range");
            p.species = static_cast<std::size_t>(i);
            std::string extra;
            if (line >> extra) parse_error(line_no, "trailing text '" + extra + "'");
            net.channels.push_back(std::move(ch));
        } else {
            parse_error(line_no, "unknown keyword '" + key + "'");
        }
    }
    if (d == 0) throw std::invalid_argument("network: missing species line");
    if (net.caps.size() != d) throw std::invalid_argument("network: missing cap line");
    net.validate();
    return net;
}

ReactionNetwork load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open network file: " + path);
    return parse_network(in);
}

ReactionNetwork cascade_network(std::size_t d, Index cap, Boundary boundary) {
    if (d < 1) throw std::invalid_argument("cascade_network: d must be >= 1");
    ReactionNetwork net;
    net.caps.assign(d, cap);
    net.boundary = boundary;
    auto unit = [d](std::size_t m, Index sign) {
        std::vector<Index> z(d, 0);
        z[m] = sign;
        return z;
    };
    net.channels.push_back({unit(0, 1), {Propensity::Kind::constant, 0, 0.7, 1.0}});
    for (std::size_t m = 1; m < d; ++m) net.channels.push_back({unit(m, 1), {Propensity::Kind::hill, m - 1, 5.0, 1.0}});
    for (std::size_t m = 0; m < d; ++m) net.channels.push_back({unit(m, -1), {Propensity::Kind::linear, m, 0.07, 1.0}});
    return net;
}

namespace {

// Per-species factors of channel m: gain J^{z_i} D_i and loss D_i.
void channel_factors(const ReactionNetwork& net, const Channel& ch, std::vector<Matrix>& gain,
                     std::vector<Matrix>& loss) {
    const std::size_t d = net.species();
    gain.assign(d, Matrix());
    loss.assign(d, Matrix());
    for (std::size_t i = 0; i < d; ++i) {
        const Index n = net.caps[i];
        const Index z = ch.stoichiometry[i];
        const bool depends = ch.propensity.kind != Propensity::Kind::constant && ch.propensity.species == i;
        Vector w(n);
        for (Index x = 0; x < n; ++x) {
            w(x) = depends ? ch.propensity(x) : 1.0;
            if (net.boundary == Boundary::reflect && (x + z < 0 || x + z >= n)) w(x) = 0.0;
        }
        // a constant rate is folded into the first species
        if (i == 0 && ch.propensity.kind == Propensity::Kind::constant) w *= ch.propensity.a;
        Matrix g = Matrix::Zero(n, n);
        for (Index x = 0; x < n; ++x)
            if (x + z >= 0 && x + z < n) g(x + z, x) = w(x);
        gain[i] = std::move(g);
        loss[i] = w.asDiagonal();
    }
}

}  // namespace

TtMatrix cme_assemble(const ReactionNetwork& net) {
    net.validate();
    const std::size_t d = net.species();
    const auto m = static_cast<Index>(net.channels.size());
    if (m == 0) {
        std::vector<Matrix> cores;
        for (Index n : net.caps) cores.push_back(Matrix::Zero(n * n, 1));
        return TtMatrix(std::move(cores), net.caps, net.caps);
    }
    std::vector<std::vector<Matrix>> gain(static_cast<std::size_t>(m)), loss(static_cast<std::size_t>(m));
    for (Index c = 0; c < m; ++c)
        channel_factors(net, net.channels[static_cast<std::size_t>(c)], gain[static_cast<std::size_t>(c)],
                        loss[static_cast<std::size_t>(c)]);
    if (d == 1) {
        Matrix sum = Matrix::Zero(net.caps[0], net.caps[0]);
        for (Index c = 0; c < m; ++c) sum += gain[static_cast<std::size_t>(c)][0] - loss[static_cast<std::size_t>(c)][0];
        return tt_matrix_from_blocks({BlockCore(1, 1, {sum})});
    }
    std::vector<BlockCore> cores;
    for (std::size_t i = 0; i < d; ++i) {
        const Index n = net.caps[i];
        const Matrix zero = Matrix::Zero(n, n);
        const Index rows = i == 0 ? 1 : 2 * m;
        const Index cols = i + 1 == d ? 1 : 2 * m;
        std::vector<Matrix> blocks(static_cast<std::size_t>(rows * cols), zero);
        for (Index c = 0; c < m; ++c) {
            const auto& g = gain[static_cast<std::size_t>(c)][i];
            const auto& l = loss[static_cast<std::size_t>(c)][i];
            if (i == 0) {
                blocks[static_cast<std::size_t>(2 * c)] = g;
                blocks[static_cast<std::size_t>(2 * c + 1)] = l;
            } else if (i + 1 == d) {
                blocks[static_cast<std::size_t>(2 * c)] = g;
                blocks[static_cast<std::size_t>(2 * c + 1)] = -l;
            } else {
                blocks[static_cast<std::size_t>(2 * c + rows * 2 * c)] = g;
                blocks[static_cast<std::size_t>(2 * c + 1 + rows * (2 * c + 1))] = l;
            }
        }
        cores.emplace_back(rows, cols, std::move(blocks));
    }
    return tt_matrix_from_blocks(cores);
}

Matrix cme_dense(const ReactionNetwork& net) {
    net.validate();
    Index total = 1;
    for (Index n : net.caps) total *= n;
    check_budget(total * total, "cme_dense");
    Matrix a = Matrix::Zero(total, total);
    std::vector<Matrix> gain, loss;
    for (const auto& ch : net.channels) {
        channel_factors(net, ch, gain, loss);
        a += kron_modes(gain) - kron_modes(loss);
    }
    return a;
}

namespace {

int binary_levels(Index n) {
    int l = 0;
    while ((Index{1} << l) < n) ++l;
    if ((Index{1} << l) != n) throw std::invalid_argument("tt_quantize: mode sizes must be powers of two");
    return l;
}

// Splits a core whose mode index is little-endian over `levels` digits of size q into
// binary-level cores by successive SVDs.
std::vector<Matrix> split_core(const Matrix& core, Index r0, Index r1, Index q, int levels) {
    std::vector<Matrix> out;
    if (levels == 0) throw std::invalid_argument("tt_quantize: mode size 1 is not supported");
    Index rest = 1;
    for (int k = 1; k < levels; ++k) rest *= q;
    Matrix cur = Eigen::Map<const Matrix>(core.data(), r0 * q, rest * r1);
    Index r = r0;
    for (int k = 0; k + 1 < levels; ++k) {
        const SvdResult s = svd(cur);
        const double tol = 1e-15 * (s.sigma.size() ? s.sigma(0) : 0.0);
        Index keep = 0;
        while (keep < s.sigma.size() && s.sigma(keep) > tol) ++keep;
        keep = std::max<Index>(keep, 1);
        out.push_back(s.u.leftCols(keep));
        Matrix carry = s.sigma.head(keep).asDiagonal() * s.v.leftCols(keep).transpose();  // keep x (rest r1)
        rest /= q;
        cur = Eigen::Map<const Matrix>(carry.data(), keep * q, rest * r1);
        r = keep;
    }
    (void)r;
    out.push_back(cur);
    return out;
}

}  // namespace

TtTensor tt_quantize(const TtTensor& x, const TruncationPolicy& policy) {
    std::vector<Matrix> cores;
    for (std::size_t l = 0; l < x.order(); ++l) {
        const int lv = binary_levels(x.shape()[l]);
        auto parts = split_core(x.core(l), x.rank(l), x.rank(l + 1), 2, lv);
        for (auto& p : parts) cores.push_back(std::move(p));
    }
    const std::vector<Index> dims(cores.size(), 2);
    return tt_round(TtTensor(std::move(cores), dims), policy);
}

TtMatrix tt_quantize(const TtMatrix& a, const TruncationPolicy& policy) {
    std::vector<Matrix> cores;
    for (std::size_t l = 0; l < a.order(); ++l) {
        const Index n = a.row_shape()[l];
        if (a.col_shape()[l] != n) throw std::invalid_argument("tt_quantize: operator cores must be square");
        const int lv = binary_levels(n);
        const Index r0 = a.rank(l), r1 = a.rank(l + 1);
        // reorder the mode index i + n j into sum_nu (i_nu + 2 j_nu) 4^nu
        Matrix perm(a.core(l).rows(), r1);
        for (Index j = 0; j < n; ++j)
            for (Index i = 0; i < n; ++i) {
                Index m = 0, w = 1;
                for (int nu = 0; nu < lv; ++nu) {
                    m += w * (((i >> nu) & 1) + 2 * ((j >> nu) & 1));
                    w *= 4;
                }
                perm.middleRows(r0 * m, r0) = a.core(l).middleRows(r0 * (i + n * j), r0);
            }
        auto parts = split_core(perm, r0, r1, 4, lv);
        for (auto& p : parts) cores.push_back(std::move(p));
    }
    const std::vector<Index> dims(cores.size(), 2);
    const TtTensor t = tt_round(TtTensor(cores, std::vector<Index>(cores.size(), 4)), policy);
    return as_matrix(t, dims, dims);
}

TtTensor point_mass(const std::vector<Index>& caps, const std::vector<Index>& state) {
    if (caps.size() != state.size()) throw std::invalid_argument("point_mass: state length differs from caps");
    std::vector<Vector> v;
    for (std::size_t i = 0; i < caps.size(); ++i) {
        if (state[i] < 0 || state[i] >= caps[i]) throw std::out_of_range("point_mass: state outside the box");
        v.push_back(Vector::Unit(caps[i], state[i]));
    }
    return TtTensor::rank_one(v);
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

CmeResult cme_solve_global(const ReactionNetwork& net, const TtTensor& p0, const CmeOptions& options,
                           const std::function<void(const CmeWindow&)>& on_window) {
    net.validate();
    if (p0.shape().dims() != net.caps) throw std::invalid_argument("cme_solve_global: p0 must have one core per species");
    if (!(options.window > 0) || !(options.horizon > 0) || options.time_levels < 1)
        throw std::invalid_argument("cme_solve_global: bad time grid");
    const TruncationPolicy policy(options.eps);
    const TtMatrix a = tt_quantize(cme_assemble(net), TruncationPolicy(1e-14));
    TtTensor p = tt_quantize(p0, policy);
    const Index nt = Index{1} << options.time_levels;
    const double tau = options.tau > 0 ? options.tau : options.window / static_cast<double>(nt);
    const double window = tau * static_cast<double>(nt);
    const int windows = static_cast<int>(std::ceil(options.horizon / window - 1e-9));

    CmeResult result;
    double t = 0.0;
    for (int w = 0; w < windows; ++w) {
        const auto t0 = std::chrono::steady_clock::now();
        const SpaceTimeSystem sys =
            build_space_time_system(a, p, tau, options.time_levels, TimeScheme::crank_nicolson, TruncationPolicy(1e-14));
        LinsolveOptions solver = options.solver;
        solver.conserved = TtTensor::ones(sys.rhs.shape());
        const LinsolveResult sol = tt_linsolve(sys.matrix, sys.rhs, solver, sys.initial_guess);
        p = tt_round(time_slice(sol.x, sys.state_order, sys.steps), policy);
        t += window;
        CmeWindow info;
        info.index = w + 1;
        info.t_end = t;
        info.mass = total_sum(p);
        info.residual_ratio = tt_norm(mpo_apply(a, p)) / tt_norm(p);
        info.solver_residual = sol.residual;
        info.max_rank = sol.x.max_rank();
        info.sweeps = sol.sweeps;
        info.converged = sol.converged;
        info.seconds = seconds_since(t0);
        result.windows.push_back(info);
        result.converged = result.converged && sol.converged;
        if (on_window) on_window(info);
    }
    result.final_state = p;
    return result;
}

std::vector<ScalingRow> timestep_scaling_probe(const ReactionNetwork& net, const TtTensor& p0, double window,
                                               const std::vector<int>& time_levels, double eps,
                                               const LinsolveOptions& solver) {
    const TtMatrix a = tt_quantize(cme_assemble(net), TruncationPolicy(1e-14));
    const TtTensor p = tt_quantize(p0, TruncationPolicy(eps));
    std::vector<ScalingRow> rows;
    for (int lv : time_levels) {
        const Index nt = Index{1} << lv;
        const auto t0 = std::chrono::steady_clock::now();
        const SpaceTimeSystem sys = build_space_time_system(a, p, window / static_cast<double>(nt), lv,
                                                            TimeScheme::crank_nicolson, TruncationPolicy(1e-14));
        LinsolveOptions opts = solver;
        opts.conserved = TtTensor::ones(sys.rhs.shape());
        const LinsolveResult sol = tt_linsolve(sys.matrix, sys.rhs, opts, sys.initial_guess);
        rows.push_back({lv, nt, seconds_since(t0), sol.x.max_rank(), sol.residual, sol.converged});
    }
    return rows;
}

}  // namespace qtt
