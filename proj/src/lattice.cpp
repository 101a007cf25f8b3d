#include "qttkit/lattice.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace qtt {

Index LatticeSpec::max_extent() const {
    return *std::max_element(extents.begin(), extents.end());
}

Grid1D LatticeSpec::grid(std::size_t axis) const {
    const double half = 0.5 * cell_width * static_cast<double>(extents[axis]);
    return Grid1D::on_interval(-half, half, grid_size(axis));
}

void LatticeSpec::validate() const {
    if (!(cell_width > 0)) throw std::invalid_argument("lattice: cell width must be positive");
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("lattice: n must be even and >= 2");
    for (Index l : extents) {
        if (l < 1) throw std::invalid_argument("lattice: extents must be >= 1");
    }
    if (atoms.empty()) throw std::invalid_argument("lattice: at least one atom per cell");
    for (const auto& a : atoms) {
        for (Index o : a.offset) {
            if (std::abs(o) > n / 2 - 1) throw std::invalid_argument("lattice: atom offset must satisfy |o| < n/2");
        }
    }
}

MasterTensor build_master(const LatticeSpec& spec, double eps) {
    spec.validate();
    const Index lm = spec.max_extent();
    NewtonKernel k = newton_kernel_canonical(eps, spec.cell_width * static_cast<double>(lm), 2 * spec.n * lm);
    return MasterTensor{std::move(k.tensor), k.grid, std::move(k.quadrature)};
}

std::vector<Index> lattice_offsets(Index extent) {
    if (extent < 1) throw std::invalid_argument("lattice_offsets: extent must be >= 1");
    std::vector<Index> ks;
    const Index lo = -(extent / 2);
    for (Index k = 0; k < extent; ++k) ks.push_back(lo + k);
    return ks;
}

double cell_center(double cell_width, Index extent, Index k) {
    return cell_width * (static_cast<double>(k) + (extent % 2 == 0 ? 0.5 : 0.0));
}

namespace {

// First master row of the window for cell k.
Index window_start(Index master_size, Index n, Index extent, Index k, Index atom_offset) {
    const auto ks = lattice_offsets(extent);
    if (k < ks.front() || k > ks.back()) throw std::out_of_range("shift_window: lattice offset out of range");
    if (master_size % 2 != 0) throw std::invalid_argument("shift_window: master factor length must be even");
    if ((n * extent) % 2 != 0) throw std::invalid_argument("shift_window: n L must be even");
    const Index centre = n * k + (extent % 2 == 0 ? n / 2 : 0);
    const Index start = master_size / 2 - n * extent / 2 - centre - atom_offset;
    if (start < 0 || start + n * extent > master_size)
        throw std::out_of_range("shift_window: window leaves the master grid");
    return start;
}

}  // namespace

Vector shift_window(const Vector& factor, Index n, Index extent, Index k, Index atom_offset) {
    const Index start = window_start(factor.size(), n, extent, k, atom_offset);
    return factor.segment(start, n * extent);
}

LatticeSum assemble_lattice_sum(const LatticeSpec& spec, const MasterTensor& master) {
    spec.validate();
    const Index r = master.rank();
    const Index m = master.grid.n;
    if (std::abs(master.grid.h - spec.h()) > 1e-12 * spec.h() || m < 2 * spec.n * spec.max_extent())
        throw std::invalid_argument("assemble_lattice_sum: master does not cover the doubled lattice box");

    const auto natoms = static_cast<Index>(spec.atoms.size());
    std::vector<Matrix> factors(3);
    for (std::size_t l = 0; l < 3; ++l) factors[l] = Matrix::Zero(spec.grid_size(l), r * natoms);

    double abs_charge = 0.0, net_charge = 0.0;
    for (Index a = 0; a < natoms; ++a) {
        const LatticeAtom& atom = spec.atoms[static_cast<std::size_t>(a)];
        abs_charge += std::abs(atom.charge);
        net_charge += atom.charge;
        for (std::size_t l = 0; l < 3; ++l) {
            const Matrix& mf = master.tensor.factor(l);
            auto block = factors[l].middleCols(a * r, r);
            for (Index k : lattice_offsets(spec.extents[l])) {
                const Index start = window_start(m, spec.n, spec.extents[l], k, atom.offset[l]);
                block += mf.middleRows(start, spec.grid_size(l));
            }
        }
        factors[0].middleCols(a * r, r) *= atom.charge;
    }

    LatticeSum out;
    out.tensor = CanonicalTensor(std::move(factors));
    for (std::size_t l = 0; l < 3; ++l) out.grids[l] = spec.grid(l);
    out.amplification = net_charge != 0.0 ? abs_charge / std::abs(net_charge) : INFINITY;
    return out;
}

double canonical_entry(const CanonicalTensor& x, const std::array<Index, 3>& index) {
    if (x.order() != 3) throw std::invalid_argument("canonical_entry: order must be 3");
    return (x.factor(0).row(index[0]).array() * x.factor(1).row(index[1]).array() *
            x.factor(2).row(index[2]).array())
        .sum();
}

namespace {

struct Charge {
    double x, y, z, q;
};

std::vector<Charge> lattice_charges(const LatticeSpec& spec) {
    std::vector<Charge> out;
    const double h = spec.h();
    for (Index k0 : lattice_offsets(spec.extents[0]))
        for (Index k1 : lattice_offsets(spec.extents[1]))
            for (Index k2 : lattice_offsets(spec.extents[2]))
                for (const auto& a : spec.atoms) {
                    out.push_back({cell_center(spec.cell_width, spec.extents[0], k0) + h * a.offset[0],
                                   cell_center(spec.cell_width, spec.extents[1], k1) + h * a.offset[1],
                                   cell_center(spec.cell_width, spec.extents[2], k2) + h * a.offset[2], a.charge});
                }
    return out;
}

double potential_at(const std::vector<Charge>& charges, double x, double y, double z) {
    double s = 0.0;
    for (const auto& c : charges) {
        const double dx = x - c.x, dy = y - c.y, dz = z - c.z;
        s += c.q / std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    return s;
}

}  // namespace

double lattice_brute_force(const LatticeSpec& spec, const std::array<Index, 3>& index) {
    spec.validate();
    return potential_at(lattice_charges(spec), spec.grid(0).point(index[0]), spec.grid(1).point(index[1]),
                        spec.grid(2).point(index[2]));
}

DenseTensor lattice_brute_force_grid(const LatticeSpec& spec) {
    spec.validate();
    const Shape shape({spec.grid_size(0), spec.grid_size(1), spec.grid_size(2)});
    check_budget(shape.size(), "lattice_brute_force_grid");
    const auto charges = lattice_charges(spec);
    const Vector x = spec.grid(0).points(), y = spec.grid(1).points(), z = spec.grid(2).points();
    DenseTensor out(shape);
    Index p = 0;
    for (Index k = 0; k < z.size(); ++k)
        for (Index j = 0; j < y.size(); ++j)
            for (Index i = 0; i < x.size(); ++i) out[p++] = potential_at(charges, x(i), y(j), z(k));
    return out;
}

namespace {

template <class F>
double best_seconds(F&& f, double min_total = 0.02, int batches = 3) {
    using clock = std::chrono::steady_clock;
    double best = INFINITY;
    for (int b = 0; b < batches; ++b) {
        int reps = 0;
        const auto t0 = clock::now();
        double elapsed = 0.0;
        do {
            f();
            ++reps;
            elapsed = std::chrono::duration<double>(clock::now() - t0).count();
        } while (elapsed < min_total);
        best = std::min(best, elapsed / reps);
    }
    return best;
}

}  // namespace

std::vector<LatticeTimingRow> lattice_timing_sweep(double cell_width, Index n, const std::vector<Index>& extents,
                                                   double eps) {
    std::vector<LatticeTimingRow> rows;
    for (Index l : extents) {
        LatticeSpec spec;
        spec.cell_width = cell_width;
        spec.n = n;
        spec.extents = {l, l, l};
        MasterTensor master;
        const double t_master = best_seconds([&] { master = build_master(spec, eps); }, 0.0, 1);
        volatile double sink = 0.0;
        const double t_asm = best_seconds([&] { sink = sink + assemble_lattice_sum(spec, master).tensor.factor(0)(0, 0); });
        const double t_brute = best_seconds([&] { sink = sink + lattice_brute_force_grid(spec)[0]; }, 0.0, 1);
        rows.push_back({l, n, master.rank(), t_master, "master"});
        rows.push_back({l, n, master.rank(), t_asm, "assembled"});
        rows.push_back({l, n, master.rank(), t_brute, "brute"});
    }
    return rows;
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_loglog_slope: need >= 2 points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace qtt
