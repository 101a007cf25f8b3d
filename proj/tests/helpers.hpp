#pragma once

#include <random>

#include "qttkit/tensor.hpp"

namespace qtt::testing {

inline Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = g(rng);
    return m;
}

inline Vector random_vector(std::mt19937_64& rng, Index n) { return random_matrix(rng, n, 1); }

inline TtTensor random_tt(std::mt19937_64& rng, const std::vector<Index>& dims, const std::vector<Index>& inner_ranks) {
    std::vector<Index> r{1};
    r.insert(r.end(), inner_ranks.begin(), inner_ranks.end());
    r.push_back(1);
    std::vector<Matrix> cores;
    for (std::size_t l = 0; l < dims.size(); ++l) cores.push_back(random_matrix(rng, r[l] * dims[l], r[l + 1]));
    return TtTensor(std::move(cores), dims);
}

inline TtMatrix random_tt_matrix(std::mt19937_64& rng, const std::vector<Index>& rows, const std::vector<Index>& cols,
                                 const std::vector<Index>& inner_ranks) {
    std::vector<Index> r{1};
    r.insert(r.end(), inner_ranks.begin(), inner_ranks.end());
    r.push_back(1);
    std::vector<Matrix> cores;
    for (std::size_t l = 0; l < rows.size(); ++l) cores.push_back(random_matrix(rng, r[l] * rows[l] * cols[l], r[l + 1]));
    return TtMatrix(std::move(cores), rows, cols);
}

inline CanonicalTensor random_canonical(std::mt19937_64& rng, const std::vector<Index>& dims, Index rank) {
    std::vector<Matrix> f;
    for (Index n : dims) f.push_back(random_matrix(rng, n, rank));
    return CanonicalTensor(std::move(f));
}

inline DenseTensor random_dense(std::mt19937_64& rng, const std::vector<Index>& dims) {
    Shape s(dims);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(s.size()));
    for (auto& x : v) x = g(rng);
    return DenseTensor(s, std::move(v));
}

inline double rel_diff(const DenseTensor& a, const DenseTensor& b) {
    return (a.vec() - b.vec()).norm() / std::max(1e-300, b.vec().norm());
}

/// Largest absolute eigenvalue of a symmetric matrix.
inline double symmetric_spectral_norm(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline Vector dense_vector(const TtTensor& x) { return to_dense(x).vec(); }

}  // namespace qtt::testing
