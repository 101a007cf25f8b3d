#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "qttkit/decompose.hpp"

namespace qtt {

// Laguerre polynomials -----------------------------------------------------------

/// L_0(t) .. L_{p_max}(t) by the three-term recurrence. Throws for t < 0 and when
/// |L_p| exceeds 1e150 (overflow guard).
Vector laguerre_eval(int p_max, double t);

// TT linear solver ---------------------------------------------------------------

struct LinsolveOptions {
    double tol = 1e-8;               // target relative residual ||Ax - b|| / ||b||
    int max_sweeps = 20;
    Index kick_rank = 4;             // rank of the residual train used for enrichment
    std::optional<Index> max_rank;   // cap on the solution ranks
    double truncation = -1.0;        // relative truncation of each local solution; < 0 means tol
    Index dense_limit = 500;         // local systems up to this size use dense QR, larger ones GMRES
    std::uint64_t seed = 0;          // initial residual train
    /// Rank-1 vector w kept in the Galerkin test space, so that w^T (A x - b) = 0 holds
    /// up to the final local solve (e.g. the all-ones vector for probability mass).
    std::optional<TtTensor> conserved;
};

struct LinsolveResult {
    TtTensor x;
    double residual = 0.0;                // ||Ax - b|| / ||b||, evaluated in TT arithmetic
    int sweeps = 0;
    bool converged = false;               // a whole sweep met every local residual below tol
    std::vector<double> sweep_residuals;  // max local residual seen in each sweep
};

/// Solves A x = b for a square TT-matrix by alternating one-site Galerkin solves with
/// residual-based basis enrichment. `x0` is the initial guess (default: b).
LinsolveResult tt_linsolve(const TtMatrix& a, const TtTensor& b, const LinsolveOptions& options = {},
                           const std::optional<TtTensor>& x0 = std::nullopt);

/// ||A x - b|| / ||b|| in TT arithmetic (QR-based norm, no cancellation).
double tt_residual(const TtMatrix& a, const TtTensor& x, const TtTensor& b);

// Cayley series ------------------------------------------------------------------

struct LaguerreSeries {
    TtMatrix h;
    TtTensor psi0;
    std::vector<TtTensor> u;  // u_0 .. u_m
    double eps = 0.0;
    int order() const { return static_cast<int>(u.size()) - 1; }
    std::vector<Index> max_ranks() const;
};

/// u_0 = (H + I)^{-1} psi0, u_{p+1} = H (H + I)^{-1} u_p, each rounded at eps.
/// H must be symmetric positive definite. Throws ConvergenceError when a solve fails.
LaguerreSeries cayley_series(const TtMatrix& h, const TtTensor& psi0, int m, double eps,
                             LinsolveOptions options = {});

/// psi_m(t) = psi0 + H sum_p (L_{p+1}(t) - L_p(t)) u_p.
TtTensor cayley_apply(const LaguerreSeries& series, double t);

/// (x, t) train [psi_m(t_0), ..., psi_m(t_{Nt-1})] with the time index quantized into
/// log2(Nt) binary modes after the state modes. Nt must be a power of two.
TtTensor concat_time_tensor(const LaguerreSeries& series, const std::vector<double>& times);
struct CayleyRow {
    int order = 0;
    double error = 0.0;     // ||psi_m(t) - exp(-H t) psi0||, psi0 normalized
    Index max_rank = 0;     // of psi_m(t)
    Index series_rank = 0;  // largest rank among u_0 .. u_m
};

/// Heat benchmark: H = stiffness Delta_1 + I of size 2^levels in QTT form,
/// psi0 = exp(-(x - 1/2)^2 / width) on x_i = (i + 1) / (N + 1), normalized.
/// The oracle is the dense eigendecomposition of H.
std::vector<CayleyRow> cayley_heat_benchmark(const std::vector<int>& orders, int levels = 8, double t = 1.0,
                                             double stiffness = 100.0, double width = 0.01, double eps = 1e-12);

/// Rank of the bond between the last state mode and the first time mode.
Index time_bond_rank(const TtTensor& xt, std::size_t state_order);

// Global space-time systems --------------------------------------------------------

enum class TimeScheme { implicit_euler, crank_nicolson };

/// Block-bidiagonal system for y' = G y, y(0) = y0, on Nt = 2^levels steps of size tau.
/// Unknowns y_1..y_Nt; state modes come first, then the binary time modes.
struct SpaceTimeSystem {
    TtMatrix matrix;
    TtTensor rhs;
    TtTensor initial_guess;  // y0 repeated at every step
    double tau = 0.0;
    Index steps = 0;
    TimeScheme scheme = TimeScheme::crank_nicolson;
    std::size_t state_order = 0;
};

SpaceTimeSystem build_space_time_system(const TtMatrix& g, const TtTensor& y0, double tau, int time_levels,
                                        TimeScheme scheme, const TruncationPolicy& policy = TruncationPolicy(1e-14));

/// State at time step j (1-based, y_j) of a space-time train.
TtTensor time_slice(const TtTensor& xt, std::size_t state_order, Index step);

// Chemical master equation -----------------------------------------------------------

enum class Boundary { absorb, reflect };

struct Propensity {
    enum class Kind { constant, linear, hill };
    Kind kind = Kind::constant;
    std::size_t species = 0;  // the species the rate depends on (linear, hill)
    double a = 0.0;           // linear: rate c; hill: half-saturation a; constant: c
    double b = 1.0;           // hill: scale b
    double operator()(Index copies) const;
};

struct Channel {
    std::vector<Index> stoichiometry;  // z^m
    Propensity propensity;
};

struct ReactionNetwork {
    std::vector<Index> caps;  // N_i states 0..N_i-1 per species
    std::vector<Channel> channels;
    Boundary boundary = Boundary::absorb;

    std::size_t species() const { return caps.size(); }
    void validate() const;
};

/// Reads the text format: `species d`, `cap N1 ... Nd`, `channel z1 ... zd | const c`,
/// `| linear i c`, `| hill i a b`, `boundary absorb|reflect`; `#` starts a comment.
ReactionNetwork parse_network(std::istream& in);
ReactionNetwork load_network(const std::string& path);

/// Cascade of d species: S_1 is made at rate 0.7, S_m at rate x_{m-1} / (5 + x_{m-1}),
/// and every species decays at 0.07 x.
ReactionNetwork cascade_network(std::size_t d, Index cap, Boundary boundary = Boundary::reflect);

/// A = sum_m (J^{z^m} - I) diag(w^m) with one core per species, bond ranks <= 2M.
TtMatrix cme_assemble(const ReactionNetwork& net);
/// Dense generator (tiny networks only).
Matrix cme_dense(const ReactionNetwork& net);

/// Splits every core of a train with mode sizes 2^L into L binary cores (little-endian).
TtTensor tt_quantize(const TtTensor& x, const TruncationPolicy& policy = TruncationPolicy(1e-14));
TtMatrix tt_quantize(const TtMatrix& a, const TruncationPolicy& policy = TruncationPolicy(1e-14));

/// Rank-1 point mass at the given copy numbers.
TtTensor point_mass(const std::vector<Index>& caps, const std::vector<Index>& state);

struct CmeOptions {
    double tau = 0.0;        // step; 0 means T0 / Nt
    int time_levels = 8;     // Nt = 2^time_levels steps per window
    double window = 15.0;    // T0
    double horizon = 120.0;  // T
    double eps = 1e-6;       // rounding of the state handed to the next window
    LinsolveOptions solver = [] {
        LinsolveOptions o;
        o.tol = 1e-5;
        return o;
    }();
};

struct CmeWindow {
    int index = 0;
    double t_end = 0.0;
    double mass = 0.0;
    double residual_ratio = 0.0;  // ||A P|| / ||P|| at the window end
    double solver_residual = 0.0;
    Index max_rank = 0;
    int sweeps = 0;
    bool converged = false;
    double seconds = 0.0;
};

struct CmeResult {
    std::vector<CmeWindow> windows;
    TtTensor final_state;  // quantized state train
    bool converged = true;
};

/// Restarted Crank-Nicolson space-time solve of dP/dt = A P on [0, T] in windows of
/// length T0. Works in the quantized format; caps must be powers of two.
/// `on_window` is called after every window (e.g. to stream output).
CmeResult cme_solve_global(const ReactionNetwork& net, const TtTensor& p0, const CmeOptions& options,
                           const std::function<void(const CmeWindow&)>& on_window = {});

struct ScalingRow {
    int time_levels = 0;
    Index steps = 0;
    double seconds = 0.0;
    Index max_rank = 0;
    double residual = 0.0;
    bool converged = false;
};

/// Wall time of a single window solve for each Nt = 2^levels.
std::vector<ScalingRow> timestep_scaling_probe(const ReactionNetwork& net, const TtTensor& p0, double window,
                                               const std::vector<int>& time_levels, double eps,
                                               const LinsolveOptions& solver);

}  // namespace qtt
