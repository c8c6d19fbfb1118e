#pragma once

#include <iosfwd>
#include <vector>

#include "pcawald/covmodel.hpp"
#include "pcawald/linalg.hpp"
#include "pcawald/sampling.hpp"

namespace pcawald {

/// coeff · (left ⊗ right), acting on a matrix M as coeff · left·M·rightᵀ.
struct KroneckerTerm {
  Matrix left;
  Matrix right;
  double coeff = 1.0;
};

/// A sum of Kronecker terms on p×p matrices, kept in factored form and applied in O(p³).
class KroneckerSum {
 public:
  explicit KroneckerSum(int dim);

  void add(Matrix left, Matrix right, double coeff = 1.0);
  Matrix apply(const Matrix& m) const;

  int dim() const noexcept { return dim_; }
  const std::vector<KroneckerTerm>& terms() const noexcept { return terms_; }

 private:
  int dim_;
  std::vector<KroneckerTerm> terms_;
};

Matrix kron_apply(const KroneckerSum& op, const Matrix& m);

enum class OperatorKind { true_fisher_sqrt, plugin_fisher_sqrt, limiting_covariance };

struct FisherOperator {
  OperatorKind kind;
  KroneckerSum op;
  ClusterIndex cluster;
  int df;  // m_r (p − m_r)

  Matrix apply(const Matrix& m) const { return op.apply(m); }
};

/// m (p − m).
int degrees_of_freedom(int p, int multiplicity);

/// C_r = Σ_{s≠r} P_s / (λ_r − λ_s).
Matrix resolvent(const CovarianceModel& model, const ClusterIndex& r);

/// λ_r I − Σ, the Moore-Penrose pseudo-inverse of C_r.
Matrix resolvent_pseudoinverse(const CovarianceModel& model, const ClusterIndex& r);

/// I(P_r)^{1/2} = 2^{-1/2} (Σ^{-1/2}C_r⁺ ⊗ P_rΣ^{-1/2} + Σ^{-1/2}P_r ⊗ C_r⁺Σ^{-1/2}).
FisherOperator fisher_sqrt(const CovarianceModel& model, const ClusterIndex& r);

/// I(P_r)^{-1} in its sum form: 2 Σ_{s≠r} λ_rλ_s/(λ_r−λ_s)² (P_s⊗P_r + P_r⊗P_s).
FisherOperator limiting_covariance(const CovarianceModel& model, const ClusterIndex& r);

/// The same operator in resolvent form: 2 (ΣC_r²⊗P_rΣ + ΣP_r⊗C_r²Σ).
KroneckerSum limiting_covariance_compact(const CovarianceModel& model, const ClusterIndex& r);

/// Î(P̂_r)^{1/2} assembled from Σ̂, P̂_r and λ̂_r. Refuses (NotInvertibleError) when
/// λ̂_min ≤ kPlugInPdFactor · λ̂_max.
FisherOperator plugin_fisher_sqrt(const Matrix& sigma_hat, const ClusterIndex& delta_r);
FisherOperator plugin_fisher_sqrt(const EmpiricalSpectral& spectral);

inline constexpr double kPlugInPdFactor = 1e-12;

/// Debug dump: one block per term, `# term k coeff c` then left and right rows.
void write_terms_csv(std::ostream& out, const KroneckerSum& op);

}  // namespace pcawald
