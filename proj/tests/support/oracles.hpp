#pragma once

// Reference implementations used only by the tests. They are written from the
// definitions (loops, dense p²×p² matrices, eigenbasis formulas) and share no
// code paths with the library beyond the model accessors.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "pcawald/covmodel.hpp"
#include "pcawald/linops.hpp"

namespace oracle {

using pcawald::Matrix;
using pcawald::Vector;

/// Row-major flattening: entry (i, j) goes to i·p + j.
inline Vector vec(const Matrix& m) {
  Vector out(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i * m.cols() + j) = m(i, j);
  return out;
}

inline Matrix unvec(const Vector& v, Eigen::Index p) {
  Matrix out(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) out(i, j) = v(i * p + j);
  return out;
}

/// Dense matrix of M ↦ A·M·Bᵀ on row-major vec: K[(i,j),(k,l)] = A(i,k)·B(j,l).
inline Matrix dense_kron(const Matrix& a, const Matrix& b) {
  const Eigen::Index p = a.rows();
  Matrix k = Matrix::Zero(p * p, p * p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      for (Eigen::Index r = 0; r < p; ++r)
        for (Eigen::Index l = 0; l < p; ++l) k(i * p + j, r * p + l) = a(i, r) * b(j, l);
  return k;
}

inline Matrix dense_operator(const pcawald::KroneckerSum& op) {
  const Eigen::Index p = op.dim();
  Matrix k = Matrix::Zero(p * p, p * p);
  for (const auto& t : op.terms()) k += t.coeff * dense_kron(t.left, t.right);
  return k;
}

inline Matrix apply_dense(const Matrix& k, const Matrix& m) { return unvec(k * vec(m), m.rows()); }

/// Dense matrix of M ↦ Σ_ab f(a, b)·(u_aᵀ M u_b)·u_a u_bᵀ for an orthonormal basis U.
template <class F>
Matrix eigenbasis_operator(const Matrix& u, F&& f) {
  const Eigen::Index p = u.rows();
  Matrix k = Matrix::Zero(p * p, p * p);
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = 0; b < p; ++b) {
      const double w = f(a, b);
      if (w == 0.0) continue;
      const Vector outer = vec(u.col(a) * u.col(b).transpose());
      k += w * outer * outer.transpose();
    }
  }
  return k;
}

struct Spectrum {
  Vector mu;  // descending
  Matrix u;   // column j pairs with mu(j)
};

/// Plain Eigen solve followed by an explicit descending sort.
inline Spectrum sorted_spectrum(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric);
  const Eigen::Index p = symmetric.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return solver.eigenvalues()(x) > solver.eigenvalues()(y); });
  Spectrum s{Vector(p), Matrix(p, p)};
  for (Eigen::Index i = 0; i < p; ++i) {
    s.mu(i) = solver.eigenvalues()(order[static_cast<std::size_t>(i)]);
    s.u.col(i) = solver.eigenvectors().col(order[static_cast<std::size_t>(i)]);
  }
  return s;
}

/// I^{1/2} in the eigenbasis: u_a u_bᵀ ↦ 2^{-1/2}[(λ−μ_a)1{b∈Δ} + (λ−μ_b)1{a∈Δ}]/√(μ_aμ_b) · u_a u_bᵀ.
inline Matrix fisher_sqrt_dense(const Spectrum& s, int first, int size, double lambda) {
  auto in = [&](Eigen::Index i) { return i >= first && i < first + size; };
  return eigenbasis_operator(s.u, [&](Eigen::Index a, Eigen::Index b) {
    const double num = (lambda - s.mu(a)) * (in(b) ? 1.0 : 0.0) + (lambda - s.mu(b)) * (in(a) ? 1.0 : 0.0);
    return num / std::sqrt(2.0 * s.mu(a) * s.mu(b));
  });
}

inline Matrix fisher_sqrt_dense(const pcawald::CovarianceModel& model, const pcawald::ClusterIndex& r) {
  return fisher_sqrt_dense(Spectrum{model.eigenvalues(), model.basis()}, r.first(), r.size(),
                           model.eigenvalue(r.rank()));
}

/// Plug-in version, with λ̂_r the largest sample eigenvalue in Δ_r.
inline Matrix plugin_fisher_sqrt_dense(const Matrix& sigma_hat, const pcawald::ClusterIndex& r) {
  const Spectrum s = sorted_spectrum(sigma_hat);
  return fisher_sqrt_dense(s, r.first(), r.size(), s.mu(r.first()));
}

/// I^{-1} in the eigenbasis: weight 2λμ/(λ−μ)² on the cross blocks, zero elsewhere.
inline Matrix limiting_covariance_dense(const pcawald::CovarianceModel& model, const pcawald::ClusterIndex& r) {
  const double lambda = model.eigenvalue(r.rank());
  const Vector& mu = model.eigenvalues();
  return eigenbasis_operator(model.basis(), [&](Eigen::Index a, Eigen::Index b) {
    const bool ia = r.contains(static_cast<int>(a));
    const bool ib = r.contains(static_cast<int>(b));
    if (ia == ib) return 0.0;
    const double other = ia ? mu(b) : mu(a);
    return 2.0 * lambda * other / ((lambda - other) * (lambda - other));
  });
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(gen);
  return m;
}

inline Matrix random_symmetric(Eigen::Index p, std::mt19937_64& gen) {
  const Matrix g = random_matrix(p, p, gen);
  return 0.5 * (g + g.transpose());
}

/// Random custom model: 2 to p clusters, eigenvalues in [0.5, 5] with gaps ≥ 0.25.
inline pcawald::CovarianceModel random_model(int p, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> count_dist(2, p);
  const int k = count_dist(gen);
  std::vector<int> mult(static_cast<std::size_t>(k), 1);
  std::uniform_int_distribution<int> pick(0, k - 1);
  for (int extra = p - k; extra > 0; --extra) ++mult[static_cast<std::size_t>(pick(gen))];
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<pcawald::Cluster> clusters;
  double value = 5.0;
  const double step = 4.5 / k;
  for (int i = 0; i < k; ++i) {
    clusters.push_back({value, mult[static_cast<std::size_t>(i)]});
    value -= 0.25 + (step - 0.25) * unit(gen);
  }
  return pcawald::make_custom(clusters, gen());
}

/// Sample covariance by explicit loops over rows.
inline Matrix loop_covariance(const Matrix& x) {
  const Eigen::Index n = x.rows(), p = x.cols();
  Matrix s = Matrix::Zero(p, p);
  for (Eigen::Index t = 0; t < n; ++t)
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) s(i, j) += x(t, i) * x(t, j);
  return s / static_cast<double>(n);
}

/// Projector onto the sorted eigenvector positions [first, first + size).
inline Matrix position_projector(const Matrix& symmetric, int first, int size) {
  const Spectrum s = sorted_spectrum(symmetric);
  const Matrix v = s.u.middleCols(first, size);
  return v * v.transpose();
}

}  // namespace oracle
