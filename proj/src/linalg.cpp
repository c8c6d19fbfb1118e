#include "pcawald/linalg.hpp"

#include <string>

#include "pcawald/errors.hpp"

namespace pcawald {

EigenDecomposition eigh_descending(const Matrix& symmetric) {
  require_square(symmetric, "eigh_descending");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("symmetric eigensolver did not converge");
  }
  // The solver returns ascending order.
  EigenDecomposition out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

Matrix gram_outer(const Matrix& cols) {
  const auto p = cols.rows();
  Matrix out = Matrix::Zero(p, p);
  out.selfadjointView<Eigen::Lower>().rankUpdate(cols);
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Matrix gram = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, solver.eigenvalues().maxCoeff()));
}

double symmetric_operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double max_asymmetry(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

bool is_zero(const Matrix& m) { return (m.array() == 0.0).all(); }

void require_square(const Matrix& m, std::string_view what) {
  if (m.rows() != m.cols()) {
    throw DimensionMismatchError(std::string(what) + ": expected a square matrix, got " +
                                 std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

void require_same_shape(const Matrix& a, const Matrix& b, std::string_view what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatchError(std::string(what) + ": shape mismatch " +
                                 std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                 " vs " + std::to_string(b.rows()) + "x" +
                                 std::to_string(b.cols()));
  }
}

}  // namespace pcawald
