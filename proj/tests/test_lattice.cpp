#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "qttkit/lattice.hpp"

using namespace qtt;
using namespace qtt::testing;

namespace {

LatticeSpec cubic(Index l, Index n = 16, double b = 2.0) {
    LatticeSpec s;
    s.cell_width = b;
    s.n = n;
    s.extents = {l, l, l};
    return s;
}

double max_random_point_error(const LatticeSpec& spec, const LatticeSum& sum, int points, unsigned seed) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int p = 0; p < points; ++p) {
        std::array<Index, 3> idx{};
        for (std::size_t l = 0; l < 3; ++l)
            idx[l] = std::uniform_int_distribution<Index>(0, spec.grid_size(l) - 1)(rng);
        const double ref = lattice_brute_force(spec, idx);
        worst = std::max(worst, std::abs(canonical_entry(sum.tensor, idx) - ref) / std::abs(ref));
    }
    return worst;
}

}  // namespace

TEST_CASE("lattice offsets and cell centres") {
    CHECK(lattice_offsets(1) == std::vector<Index>{0});
    CHECK(lattice_offsets(5) == std::vector<Index>{-2, -1, 0, 1, 2});
    CHECK(lattice_offsets(4) == std::vector<Index>{-2, -1, 0, 1});
    CHECK(cell_center(2.0, 5, -2) == -4.0);
    CHECK(cell_center(2.0, 4, -2) == -3.0);
    CHECK(cell_center(2.0, 4, 1) == 3.0);
}

TEST_CASE("LatticeSpec validation") {
    LatticeSpec s = cubic(3);
    CHECK_NOTHROW(s.validate());
    s.n = 15;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = cubic(3);
    s.extents[1] = 0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = cubic(3);
    s.atoms = {LatticeAtom{{8, 0, 0}, 1.0}};
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.atoms.clear();
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("shift_window slices exact shifted samples") {
    const Index n = 8, extent = 5;
    const double b = 1.5, t = 0.7, h = b / n;
    const Grid1D master = Grid1D::on_interval(-b * extent, b * extent, 2 * n * extent);
    const Grid1D box = Grid1D::on_interval(-b * extent / 2, b * extent / 2, n * extent);
    CHECK(master.h == doctest::Approx(h));
    const Vector g = (-t * master.points().array().square()).exp();
    for (Index k : lattice_offsets(extent)) {
        const Vector w = shift_window(g, n, extent, k);
        REQUIRE(w.size() == n * extent);
        for (Index i = 0; i < w.size(); ++i) {
            const double d = box.point(i) - b * k;
            CHECK(std::abs(w(i) - std::exp(-t * d * d)) < 1e-13);
        }
    }
    // k = 0 is the central window
    CHECK((shift_window(g, n, extent, 0) - g.segment(n * extent / 2, n * extent)).norm() == 0.0);
    CHECK_THROWS_AS(shift_window(g, n, extent, 3), std::out_of_range);
    CHECK_THROWS_AS(shift_window(g, n, extent, -3), std::out_of_range);
    CHECK_THROWS_AS(shift_window(g.head(2 * n), n, extent, 2), std::out_of_range);
}

TEST_CASE("window sum of a compact bump equals the direct shifted sum") {
    const Index n = 6, extent = 7;
    const double b = 1.0;
    const Grid1D master = Grid1D::on_interval(-b * extent, b * extent, 2 * n * extent);
    const Grid1D box = Grid1D::on_interval(-b * extent / 2.0, b * extent / 2.0, n * extent);
    auto bump = [](double y) { return std::abs(y) < 0.4 ? std::pow(1 - (y / 0.4) * (y / 0.4), 2) : 0.0; };
    Vector g(master.n);
    for (Index j = 0; j < master.n; ++j) g(j) = bump(master.point(j));
    Vector sum = Vector::Zero(n * extent);
    for (Index k : lattice_offsets(extent)) sum += shift_window(g, n, extent, k);
    for (Index i = 0; i < sum.size(); ++i) {
        double direct = 0.0;
        for (Index k : lattice_offsets(extent)) direct += bump(box.point(i) - b * k);
        CHECK(std::abs(sum(i) - direct) < 1e-13);
    }
    // atom offsets move the window by whole grid steps
    const Vector moved = shift_window(g, n, extent, 1, 2);
    for (Index i = 0; i < moved.size(); ++i)
        CHECK(std::abs(moved(i) - bump(box.point(i) - b - 2 * box.h)) < 1e-13);
}

TEST_CASE("master tensor covers the doubled box") {
    const LatticeSpec spec = cubic(3);
    const MasterTensor m = build_master(spec, 1e-5);
    CHECK(m.grid.n == 2 * 16 * 3);
    CHECK(m.grid.h == doctest::Approx(spec.h()));
    CHECK(m.grid.origin == doctest::Approx(-6.0));
    for (std::size_t l = 1; l < 3; ++l) CHECK((m.tensor.factor(l) - m.tensor.factor(0)).norm() == 0.0);
    const Matrix& f = m.tensor.factor(0);
    CHECK((f - f.colwise().reverse()).norm() == 0.0);
    // far-field point on the axis, the last grid point
    const Index last = m.grid.n - 1, mid = m.grid.n / 2;
    const double r = std::sqrt(std::pow(m.grid.point(last), 2) + 2 * std::pow(m.grid.point(mid), 2));
    CHECK(std::abs(canonical_entry(m.tensor, {last, mid, mid}) * r - 1.0) < 1e-5);
}

TEST_CASE("1x1x1 lattice is the single-cell potential") {
    const LatticeSpec spec = cubic(1);
    const MasterTensor m = build_master(spec, 1e-6);
    const LatticeSum s = assemble_lattice_sum(spec, m);
    CHECK(s.tensor.rank() == m.rank());
    for (std::size_t l = 0; l < 3; ++l)
        CHECK((s.tensor.factor(l) - m.tensor.factor(l).middleRows(spec.n / 2, spec.n)).norm() == 0.0);
    CHECK(max_random_point_error(spec, s, 50, 1) < 1e-6);
}

TEST_CASE("3x3x3 and 5x5x5 sums match brute force at random points") {
    for (Index l : {3, 5}) {
        const LatticeSpec spec = cubic(l);
        const MasterTensor m = build_master(spec, 1e-5);
        const LatticeSum s = assemble_lattice_sum(spec, m);
        CHECK(s.tensor.rank() == m.rank());
        CHECK(s.amplification == 1.0);
        CHECK(max_random_point_error(spec, s, 50, 7 + l) < 1e-4);
        for (std::size_t a = 1; a < 3; ++a) CHECK((s.tensor.factor(a) - s.tensor.factor(0)).norm() == 0.0);
    }
}

TEST_CASE("rectangular lattice with even extents") {
    LatticeSpec spec = cubic(1, 4, 1.0);
    spec.extents = {10, 4, 6};
    const LatticeSum s = assemble_lattice_sum(spec, build_master(spec, 1e-5));
    CHECK(s.tensor.shape().dims() == std::vector<Index>{40, 16, 24});
    CHECK(max_random_point_error(spec, s, 50, 3) < 1e-4);
    const DenseTensor brute = lattice_brute_force_grid(spec);
    const DenseTensor dense = to_dense(s.tensor);
    CHECK((dense.vec() - brute.vec()).cwiseQuotient(brute.vec()).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("several atoms per cell") {
    LatticeSpec spec = cubic(3, 8, 1.0);
    spec.atoms = {LatticeAtom{{0, 0, 0}, 2.0}, LatticeAtom{{2, -1, 3}, -1.0}};
    const MasterTensor m = build_master(spec, 1e-6);
    const LatticeSum s = assemble_lattice_sum(spec, m);
    CHECK(s.tensor.rank() == 2 * m.rank());
    CHECK(s.amplification == doctest::Approx(3.0));
    const DenseTensor brute = lattice_brute_force_grid(spec);
    const double err = (to_dense(s.tensor).vec() - brute.vec()).cwiseAbs().maxCoeff();
    CHECK(err < 1e-6 * s.amplification * brute.vec().cwiseAbs().maxCoeff() * 10);
}

TEST_CASE("central-cell value grows with the lattice") {
    double prev = 0.0;
    for (Index l : {1, 3, 5, 7}) {
        const LatticeSpec spec = cubic(l, 8, 1.0);
        const LatticeSum s = assemble_lattice_sum(spec, build_master(spec, 1e-6));
        const Index c = spec.grid_size(0) / 2;
        const double v = canonical_entry(s.tensor, {c + 1, c, c - 2});
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("assemble rejects a master on a different grid") {
    const LatticeSpec spec = cubic(3);
    const MasterTensor small = build_master(cubic(1), 1e-5);
    CHECK_THROWS_AS(assemble_lattice_sum(spec, small), std::invalid_argument);
    const MasterTensor coarse = build_master(cubic(3, 8), 1e-5);
    CHECK_THROWS_AS(assemble_lattice_sum(spec, coarse), std::invalid_argument);
}

TEST_CASE("timing sweep rows") {
    const auto rows = lattice_timing_sweep(1.0, 4, {3, 5}, 1e-5);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].method == "master");
    CHECK(rows[1].method == "assembled");
    CHECK(rows[2].method == "brute");
    for (const auto& r : rows) CHECK(r.seconds > 0.0);
    CHECK(rows[5].seconds > rows[2].seconds);
    CHECK(fit_loglog_slope({1, 2, 4}, {3, 12, 48}) == doctest::Approx(2.0));
}
