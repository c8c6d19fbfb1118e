#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "pcawald/linalg.hpp"

namespace pcawald {

/// One distinct eigenvalue and its multiplicity.
struct Cluster {
  double eigenvalue = 0.0;
  int multiplicity = 0;

  friend bool operator==(const Cluster&, const Cluster&) = default;
};

/// The r-th distinct eigenvalue (1-based) and the contiguous run of sorted
/// eigenvalue positions [first, first + size) that carry it.
class ClusterIndex {
 public:
  ClusterIndex(int rank, int first, int size);

  int rank() const noexcept { return rank_; }
  int first() const noexcept { return first_; }
  int size() const noexcept { return size_; }
  int end() const noexcept { return first_ + size_; }
  bool contains(int position) const noexcept { return position >= first_ && position < end(); }

  friend bool operator==(const ClusterIndex&, const ClusterIndex&) = default;

 private:
  int rank_;
  int first_;
  int size_;
};

enum class ModelKind { spiked, decay, custom };

/// Serializable recipe for a covariance model. The basis is the identity when
/// neither `seed` nor `basis` is set, a seeded Haar-random rotation when `seed` is.
struct ModelSpec {
  ModelKind kind = ModelKind::custom;
  int p = 0;
  std::vector<double> spikes;  // spiked
  double sigma2 = 1.0;         // spiked
  double alpha = 0.0;          // decay
  std::vector<Cluster> clusters;  // custom
  std::optional<std::uint64_t> seed;
  std::optional<Matrix> basis;
};

class CovarianceModel {
 public:
  /// Validates: multiplicities sum to p, eigenvalues strictly descending and
  /// positive, basis orthogonal to 1e-10.
  CovarianceModel(std::vector<Cluster> clusters, Matrix basis, ModelSpec spec);

  int dim() const noexcept { return static_cast<int>(basis_.rows()); }
  const std::vector<Cluster>& clusters() const noexcept { return clusters_; }
  int num_clusters() const noexcept { return static_cast<int>(clusters_.size()); }
  const Matrix& basis() const noexcept { return basis_; }
  const ModelSpec& spec() const noexcept { return spec_; }

  ClusterIndex cluster(int rank) const;
  double eigenvalue(int rank) const { return clusters_.at(static_cast<std::size_t>(rank - 1)).eigenvalue; }

  /// μ_1 ≥ … ≥ μ_p, repeated with multiplicity.
  const Vector& eigenvalues() const noexcept { return mu_; }
  double operator_norm() const noexcept { return clusters_.front().eigenvalue; }
  double min_eigenvalue() const noexcept { return clusters_.back().eigenvalue; }
  double trace() const noexcept;

  /// Σ = basis·diag(μ)·basisᵀ.
  Matrix dense() const;

 private:
  std::vector<Cluster> clusters_;
  Matrix basis_;
  Vector mu_;
  ModelSpec spec_;
};

inline constexpr std::uint64_t kDefaultBasisSeed = 0x5eed;

Matrix identity_basis(int p);
/// Haar-distributed orthogonal matrix from a seeded Gaussian matrix (QR with sign fix).
Matrix random_orthogonal(int p, std::uint64_t seed);

CovarianceModel make_spiked(std::span<const double> spikes, double sigma2, int p,
                            std::uint64_t seed = kDefaultBasisSeed);
CovarianceModel make_spiked(std::span<const double> spikes, double sigma2, int p,
                            const Matrix& basis);

CovarianceModel make_decay(double alpha, int p, std::uint64_t seed = kDefaultBasisSeed);
CovarianceModel make_decay(double alpha, int p, const Matrix& basis);

CovarianceModel make_custom(std::vector<Cluster> clusters, std::uint64_t seed = kDefaultBasisSeed);
CovarianceModel make_custom(std::vector<Cluster> clusters, const Matrix& basis);

CovarianceModel build_model(const ModelSpec& spec);

/// r(Σ) = tr(Σ)/‖Σ‖.
double effective_rank(const CovarianceModel& model);

/// min(λ_{r−1} − λ_r, λ_r − λ_{r+1}) with λ_0 = ∞. Throws GapUndefinedError for
/// a single-cluster model.
double spectral_gap(const CovarianceModel& model, const ClusterIndex& r);

/// P_r, the orthogonal projector onto the eigenspace of λ_r.
Matrix projector(const CovarianceModel& model, const ClusterIndex& r);

/// Σ^e from the spectral form.
Matrix matrix_power(const CovarianceModel& model, double exponent);

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& doc);

void write_dense_csv(const CovarianceModel& model, const std::filesystem::path& path);

}  // namespace pcawald
