#pragma once

#include <array>
#include <string>

#include "qttkit/generators.hpp"

namespace qtt {

/// A point charge inside the unit cell, placed `offset` grid steps from the cell centre.
struct LatticeAtom {
    std::array<Index, 3> offset{0, 0, 0};
    double charge = 1.0;
};

/// Rectangular lattice of L1 x L2 x L3 cubic cells of width b, each resolved by n
/// cell-centred grid points per axis (h = b / n). The lattice box is centred at 0.
struct LatticeSpec {
    double cell_width = 1.0;
    Index n = 16;
    std::array<Index, 3> extents{1, 1, 1};
    /// Defaults to one atom of charge 1 at every cell centre.
    std::vector<LatticeAtom> atoms{LatticeAtom{}};

    double h() const { return cell_width / static_cast<double>(n); }
    Index grid_size(std::size_t axis) const { return n * extents[axis]; }
    Index max_extent() const;
    /// Grid of the lattice box along one axis.
    Grid1D grid(std::size_t axis) const;
    /// Throws std::invalid_argument on a malformed spec.
    void validate() const;
};

/// Canonical tensor of 1/|x| on the doubled box: 2 n L_max cell-centred points per axis
/// in [-b L_max, b L_max]^3, sharing the lattice step h.
struct MasterTensor {
    CanonicalTensor tensor;
    Grid1D grid;
    GaussianSum quadrature;
    Index rank() const { return tensor.rank(); }
};

MasterTensor build_master(const LatticeSpec& spec, double eps);

/// Cell offsets along one axis, ascending. Odd L: -(L-1)/2 .. (L-1)/2, cell k centred at
/// b k. Even L: -L/2 .. L/2 - 1, cell k centred at b (k + 1/2).
std::vector<Index> lattice_offsets(Index extent);
/// Position of the centre of cell k along an axis with `extent` cells.
double cell_center(double cell_width, Index extent, Index k);

/// Restricts a master factor (length M, cell-centred on [-M h / 2, M h / 2]) to the
/// n L points of the lattice axis, re-centred on cell k and moved by `atom_offset`
/// grid steps. Pure index slicing.
Vector shift_window(const Vector& factor, Index n, Index extent, Index k, Index atom_offset = 0);

struct LatticeSum {
    CanonicalTensor tensor;  // (n L1) x (n L2) x (n L3)
    std::array<Grid1D, 3> grids;
    /// Accuracy factor relative to the master: sum |Z_a| / |sum Z_a| (1 for equal charges).
    double amplification = 1.0;
};

/// P = sum_atoms Z_a sum_q (x)_l (sum_{k_l} W_{k_l} master_q^(l)); windows are summed per
/// mode first, so the rank is (master rank) x (atoms per cell).
LatticeSum assemble_lattice_sum(const LatticeSpec& spec, const MasterTensor& master);

/// Entry of a canonical tensor of order 3.
double canonical_entry(const CanonicalTensor& x, const std::array<Index, 3>& index);

/// Direct sum_k sum_a Z_a / |x - c_{k,a}| at a lattice grid point.
double lattice_brute_force(const LatticeSpec& spec, const std::array<Index, 3>& index);
/// The same over the whole lattice grid, as a dense tensor.
DenseTensor lattice_brute_force_grid(const LatticeSpec& spec);

struct LatticeTimingRow {
    Index extent = 0;
    Index n = 0;
    Index rank = 0;
    double seconds = 0.0;
    std::string method;  // "master", "assembled" or "brute"
};

/// Wall time of building the master, assembling the sum, and the brute-force sum over
/// every grid point, for cubic lattices of the given extents. Each timing is the best of
/// several repetitions.
std::vector<LatticeTimingRow> lattice_timing_sweep(double cell_width, Index n, const std::vector<Index>& extents,
                                                   double eps);

/// Least-squares slope of log y against log x.
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace qtt
