#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pcawald/covmodel.hpp"
#include "pcawald/linalg.hpp"

namespace pcawald {

/// n i.i.d. centred Gaussian rows with covariance Σ.
struct SampleBatch {
  int n = 0;
  int p = 0;
  Matrix data;  // n×p, row i is X_i
  std::uint64_t seed = 0;
  ModelSpec model;
};

/// Rows X_i = Σ^{1/2} Z_i, with Z drawn row-major from CounterRng(seed).
/// Bit-reproducible for a fixed (model, n, seed).
SampleBatch sample(const CovarianceModel& model, int n, std::uint64_t seed);

/// Σ̂ = (1/n) Σ_j X_j X_jᵀ (no centering), exactly symmetric.
Matrix empirical_covariance(const SampleBatch& batch);
Matrix empirical_covariance(const Matrix& data);

/// Σ̂ of sample(model, n, seed) computed as Σ^{1/2}(ZᵀZ/n)Σ^{1/2}, streaming Z in
/// blocks instead of materializing the n×p data. Agrees with the two-step route
/// up to rounding.
Matrix sample_covariance(const CovarianceModel& model, int n, std::uint64_t seed);

/// Σ̂ for each prefix length in `ns` (strictly increasing) of one draw: entry k
/// equals sample_covariance(model, ns[k], seed) up to rounding. The samples are
/// nested, so the rows behind ns[k] are the first rows behind ns[k + 1].
std::vector<Matrix> sample_covariance_prefixes(const CovarianceModel& model, std::span<const int> ns,
                                               std::uint64_t seed);

/// Spectral quantities of Σ̂ for the cluster positions Δ_r.
struct EmpiricalSpectral {
  Matrix sigma_hat;
  EigenDecomposition eigen;  // descending
  ClusterIndex cluster;
  Matrix p_hat_r;
  double lambda_hat_r = 0.0;    // largest eigenvalue among positions Δ_r
  double lambda_hat_min = 0.0;  // μ_p(Σ̂)

  const Vector& eigenvalues_desc() const noexcept { return eigen.values; }
};

EmpiricalSpectral empirical_spectral(const Matrix& sigma_hat, const ClusterIndex& delta_r);

/// Writes `<stem>.bin` (row-major little-endian float64) and `<stem>.json`
/// (n, p, seed, model description).
void save_batch(const SampleBatch& batch, const std::filesystem::path& stem);
SampleBatch load_batch(const std::filesystem::path& stem);

}  // namespace pcawald
