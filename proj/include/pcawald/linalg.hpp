#pragma once

#include <Eigen/Dense>
#include <string_view>

namespace pcawald {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenpairs of a symmetric matrix with eigenvalues sorted in descending order.
struct EigenDecomposition {
  Vector values;
  Matrix vectors;  // column j pairs with values(j)
};

EigenDecomposition eigh_descending(const Matrix& symmetric);

/// V·diag(f(values))·Vᵀ, exactly symmetric.
template <class Fn>
Matrix spectral_function(const EigenDecomposition& eig, Fn&& fn) {
  Vector mapped(eig.values.size());
  for (Eigen::Index j = 0; j < mapped.size(); ++j) mapped(j) = fn(eig.values(j));
  Matrix scaled = eig.vectors * mapped.asDiagonal();
  Matrix out = scaled * eig.vectors.transpose();
  return 0.5 * (out + out.transpose());
}

/// cols·colsᵀ with bit-exact symmetry.
Matrix gram_outer(const Matrix& cols);

/// Largest singular value.
double operator_norm(const Matrix& m);
/// Largest absolute eigenvalue; input must be symmetric.
double symmetric_operator_norm(const Matrix& m);

double max_asymmetry(const Matrix& m);
bool is_zero(const Matrix& m);

void require_square(const Matrix& m, std::string_view what);
void require_same_shape(const Matrix& a, const Matrix& b, std::string_view what);

}  // namespace pcawald
