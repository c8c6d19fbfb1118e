#include "pcawald/linops.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "pcawald/errors.hpp"
#include "pcawald/io.hpp"

namespace pcawald {

namespace {

void require_gap(const CovarianceModel& model) {
  if (model.num_clusters() < 2) {
    throw GapUndefinedError("operator needs at least two eigenvalue clusters");
  }
}

// f applied to the model's spectrum, f(μ) given per sorted position.
template <class Fn>
Matrix model_function(const CovarianceModel& model, Fn&& fn) {
  EigenDecomposition eig{model.eigenvalues(), model.basis()};
  return spectral_function(eig, std::forward<Fn>(fn));
}

FisherOperator assemble_sqrt(OperatorKind kind, const Matrix& shifted_inv_root, const Matrix& proj_inv_root,
                             const ClusterIndex& r, int p) {
  KroneckerSum op(p);
  const double c = std::numbers::sqrt2 / 2.0;
  op.add(shifted_inv_root, proj_inv_root, c);
  op.add(proj_inv_root, shifted_inv_root, c);
  return FisherOperator{kind, std::move(op), r, degrees_of_freedom(p, r.size())};
}

}  // namespace

KroneckerSum::KroneckerSum(int dim) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("KroneckerSum: dimension must be >= 1");
}

void KroneckerSum::add(Matrix left, Matrix right, double coeff) {
  if (left.rows() != dim_ || left.cols() != dim_ || right.rows() != dim_ || right.cols() != dim_) {
    throw DimensionMismatchError("KroneckerSum::add: factors must be " + std::to_string(dim_) + "x" +
                                 std::to_string(dim_));
  }
  terms_.push_back({std::move(left), std::move(right), coeff});
}

Matrix KroneckerSum::apply(const Matrix& m) const {
  if (m.rows() != dim_ || m.cols() != dim_) {
    throw DimensionMismatchError("kron_apply: operand is " + std::to_string(m.rows()) + "x" +
                                 std::to_string(m.cols()) + ", operator acts on " + std::to_string(dim_) +
                                 "x" + std::to_string(dim_));
  }
  Matrix out = Matrix::Zero(dim_, dim_);
  for (const auto& t : terms_) {
    if (t.coeff == 0.0) continue;
    out.noalias() += t.coeff * (t.left * m * t.right.transpose());
  }
  return out;
}

Matrix kron_apply(const KroneckerSum& op, const Matrix& m) { return op.apply(m); }

int degrees_of_freedom(int p, int multiplicity) { return multiplicity * (p - multiplicity); }

Matrix resolvent(const CovarianceModel& model, const ClusterIndex& r) {
  require_gap(model);
  const double lr = model.eigenvalue(r.rank());
  int pos = 0;
  return model_function(model, [&](double mu) {
    const bool in_cluster = r.contains(pos++);
    return in_cluster ? 0.0 : 1.0 / (lr - mu);
  });
}

Matrix resolvent_pseudoinverse(const CovarianceModel& model, const ClusterIndex& r) {
  const double lr = model.eigenvalue(r.rank());
  int pos = 0;
  return model_function(model, [&](double mu) {
    const bool in_cluster = r.contains(pos++);
    return in_cluster ? 0.0 : lr - mu;
  });
}

FisherOperator fisher_sqrt(const CovarianceModel& model, const ClusterIndex& r) {
  require_gap(model);
  if (!(model.min_eigenvalue() > 0.0)) throw NotInvertibleError("fisher_sqrt: singular model");
  const double lr = model.eigenvalue(r.rank());
  int pos = 0;
  const Matrix shifted = model_function(model, [&](double mu) {
    const bool in_cluster = r.contains(pos++);
    return in_cluster ? 0.0 : (lr - mu) / std::sqrt(mu);
  });
  pos = 0;
  const Matrix proj = model_function(model, [&](double mu) {
    return r.contains(pos++) ? 1.0 / std::sqrt(mu) : 0.0;
  });
  return assemble_sqrt(OperatorKind::true_fisher_sqrt, shifted, proj, r, model.dim());
}

FisherOperator limiting_covariance(const CovarianceModel& model, const ClusterIndex& r) {
  require_gap(model);
  const int p = model.dim();
  const double lr = model.eigenvalue(r.rank());
  const Matrix pr = projector(model, r);
  KroneckerSum op(p);
  for (int s = 1; s <= model.num_clusters(); ++s) {
    if (s == r.rank()) continue;
    const double ls = model.eigenvalue(s);
    const double weight = 2.0 * lr * ls / ((lr - ls) * (lr - ls));
    const Matrix ps = projector(model, model.cluster(s));
    op.add(ps, pr, weight);
    op.add(pr, ps, weight);
  }
  return FisherOperator{OperatorKind::limiting_covariance, std::move(op), r, degrees_of_freedom(p, r.size())};
}

KroneckerSum limiting_covariance_compact(const CovarianceModel& model, const ClusterIndex& r) {
  const Matrix sigma = model.dense();
  const Matrix c = resolvent(model, r);
  const Matrix pr = projector(model, r);
  const Matrix c2 = c * c;
  KroneckerSum op(model.dim());
  op.add(sigma * c2, pr * sigma, 2.0);
  op.add(sigma * pr, c2 * sigma, 2.0);
  return op;
}

FisherOperator plugin_fisher_sqrt(const EmpiricalSpectral& s) {
  const auto& mu = s.eigen.values;
  const double top = mu(0);
  if (!(top > 0.0) || !(s.lambda_hat_min > kPlugInPdFactor * top)) {
    throw NotInvertibleError("empirical covariance not invertible (smallest eigenvalue " +
                             format_double(s.lambda_hat_min) + "); plug-in needs n >= p");
  }
  const auto& r = s.cluster;
  const double lr = s.lambda_hat_r;
  // λ̂_r I − Σ̂ is not zeroed on Δ_r: when m_r > 1 the other cluster members differ from λ̂_r.
  const Matrix shifted = spectral_function(s.eigen, [lr](double m) { return (lr - m) / std::sqrt(m); });
  int pos = 0;
  const Matrix proj = spectral_function(s.eigen, [&](double m) {
    return r.contains(pos++) ? 1.0 / std::sqrt(m) : 0.0;
  });
  return assemble_sqrt(OperatorKind::plugin_fisher_sqrt, shifted, proj, r, static_cast<int>(mu.size()));
}

FisherOperator plugin_fisher_sqrt(const Matrix& sigma_hat, const ClusterIndex& delta_r) {
  return plugin_fisher_sqrt(empirical_spectral(sigma_hat, delta_r));
}

void write_terms_csv(std::ostream& out, const KroneckerSum& op) {
  for (std::size_t k = 0; k < op.terms().size(); ++k) {
    const auto& t = op.terms()[k];
    out << "# term " << k << " coeff " << format_double(t.coeff) << "\n# left\n";
    write_matrix_csv(out, t.left);
    out << "# right\n";
    write_matrix_csv(out, t.right);
  }
}

}  // namespace pcawald
