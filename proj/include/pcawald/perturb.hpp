#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "pcawald/covmodel.hpp"
#include "pcawald/linalg.hpp"

namespace pcawald {

// Constants of the deterministic projector perturbation bounds, all relative to
// x = ‖E‖/ḡ_r: ‖P̃_r − P_r‖ ≤ 4x, ‖S_r‖ ≤ 14x², ‖R_r‖ ≤ 72x³.
inline constexpr double kProjectorBound = 4.0;
inline constexpr double kRemainderBound = 14.0;
inline constexpr double kThirdOrderBound = 72.0;
// Tighter constant valid for x ≤ 1/3; recorded only.
inline constexpr double kSharpThirdOrderBound = 24.0;
inline constexpr double kBoundTolerance = 1e-8;

struct PerturbedProjector {
  Matrix projector;
  // ‖E‖ ≥ ḡ_r/2: the positional cluster may not track the eigenspace of λ_r.
  bool large_perturbation = false;
};

/// Spectral projector of Σ + E onto sorted positions Δ_r.
PerturbedProjector perturbed_projector(const CovarianceModel& model, const ClusterIndex& r, const Matrix& e);

/// L_r(E) = C_r E P_r + P_r E C_r.
Matrix linear_term(const CovarianceModel& model, const ClusterIndex& r, const Matrix& e);

/// Z_r(E) = P E C E C + C E C E P + C E P E C − P E P E C² − P E C² E P − C² E P E P.
Matrix second_order_term(const CovarianceModel& model, const ClusterIndex& r, const Matrix& e);

struct ExpansionNorms {
  double e = 0.0;
  double difference = 0.0;    // ‖P̃_r − P_r‖
  double linear = 0.0;        // ‖L_r‖
  double second_order = 0.0;  // ‖Z_r‖
  double remainder = 0.0;     // ‖S_r‖
  double third_order = 0.0;   // ‖R_r‖
};

/// P̃_r − P_r = L_r + S_r and S_r = Z_r + R_r, residuals by exact subtraction.
struct PerturbationExpansion {
  Matrix e;
  Matrix p_r;
  Matrix p_tilde;
  Matrix linear;
  Matrix second_order;
  Matrix remainder;    // S_r
  Matrix third_order;  // R_r
  ExpansionNorms norms;
  double gap = 0.0;
  bool large_perturbation = false;
};

PerturbationExpansion expand(const CovarianceModel& model, const ClusterIndex& r, const Matrix& e);

struct BoundCheck {
  std::string_view name;
  double achieved = 0.0;
  double bound = 0.0;
  double ratio = 0.0;  // achieved / bound, 0 when both vanish
  bool pass = true;
};

struct BoundReport {
  BoundCheck projector;
  BoundCheck remainder;
  BoundCheck third_order;
  double sharp_third_order_ratio = 0.0;  // ‖R_r‖ / 24x³, not asserted
  bool all_pass() const noexcept { return projector.pass && remainder.pass && third_order.pass; }
};

BoundReport check_bounds(const PerturbationExpansion& expansion);

enum class Ensemble { symmetric_gaussian, wishart_difference, rank_one_aligned };

std::string_view ensemble_name(Ensemble ensemble);

/// (G + Gᵀ)/2 rescaled to operator norm `norm`.
Matrix symmetric_gaussian_perturbation(int p, double norm, std::uint64_t seed);
/// Σ̂ − Σ for a sample of size n.
Matrix wishart_perturbation(const CovarianceModel& model, int n, std::uint64_t seed);
/// ±norm·vvᵀ, v a random rotation between an eigenvector of cluster r and one of
/// the neighbouring cluster that sets the gap.
Matrix rank_one_aligned_perturbation(const CovarianceModel& model, const ClusterIndex& r, double norm,
                                     std::uint64_t seed);

/// Draws from an ensemble with a random size: ‖E‖/ḡ_r log-uniform in [1e-3, 2]
/// for the Gaussian and rank-one ensembles, n log-uniform in [2, 5000] for Wishart.
Matrix draw_perturbation(Ensemble ensemble, const CovarianceModel& model, const ClusterIndex& r,
                         std::uint64_t seed);

struct BoundRecord {
  std::size_t index = 0;
  Ensemble ensemble = Ensemble::symmetric_gaussian;
  int rank = 1;
  double e_norm = 0.0;
  BoundReport report;
};

/// Item i uses ensemble i mod 3 and cluster ranks[(i / 3) mod ranks.size()], with
/// seed mix_seed(seed, i).
std::vector<BoundRecord> bound_sweep(const CovarianceModel& model, std::span<const int> ranks, int count,
                                     std::uint64_t seed);

struct OrderOfAccuracy {
  std::vector<double> t;
  std::vector<double> remainder_norm;    // ‖S_r(tE)‖
  std::vector<double> third_order_norm;  // ‖R_r(tE)‖
  double remainder_slope = 0.0;
  double third_order_slope = 0.0;
};

OrderOfAccuracy order_of_accuracy(const CovarianceModel& model, const ClusterIndex& r, const Matrix& direction,
                                  std::span<const double> t);

std::vector<double> log_spaced(double lo, double hi, int count);
/// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

struct OpnormSummary {
  int n = 0;
  int reps = 0;
  double mean_norm = 0.0;  // Monte Carlo mean of ‖Σ̂ − Σ‖
  double norm_se = 0.0;
  double scale = 0.0;      // ‖Σ‖ √(r(Σ)/n)
  double ratio = 0.0;      // mean_norm / scale
  double ratio_se = 0.0;
};

/// Requires r(Σ) < n and reps ≥ 100.
OpnormSummary opnorm_concentration_check(const CovarianceModel& model, int n, int reps, std::uint64_t seed);

}  // namespace pcawald
