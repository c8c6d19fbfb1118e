#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "pcawald/covmodel.hpp"
#include "pcawald/linalg.hpp"
#include "pcawald/linops.hpp"

namespace pcawald {

enum class FisherVariant { true_fisher, plugin };

std::string_view fisher_variant_name(FisherVariant v);

struct WaldResult {
  double raw = 0.0;         // n ‖I^{1/2}(P̂_r − P)‖²_F
  double normalized = 0.0;  // (raw − df) / √(2 df)
  int df = 0;
  FisherVariant fisher = FisherVariant::true_fisher;
};

double normalize_wald(double raw, int df);

/// Wald statistic of `p_hat_r` against the hypothesised projector `p_r`.
WaldResult wald_statistic(const FisherOperator& fisher, const Matrix& p_hat_r, const Matrix& p_r, int n);

/// n ‖P_r^⊥ Σ^{-1/2} E Σ^{-1/2} P_r‖²_F, the whitened cross-block energy of E. Equals
/// n ‖I(P_r)^{1/2} L_r(E)‖²_F and has expectation m_r(p − m_r) when E = Σ̂ − Σ.
double linear_term_energy(const CovarianceModel& model, const ClusterIndex& r, const Matrix& e, int n);

struct MeanEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  double target = 0.0;
  int reps = 0;

  double z_score() const { return (mean - target) / standard_error; }
};

MeanEstimate linear_term_identity_check(const CovarianceModel& model, const ClusterIndex& r, int n, int reps,
                                        std::uint64_t seed);

enum class ThresholdMode { gaussian, chisq };

struct EllipsoidResult {
  bool covered = false;
  WaldResult statistic;
  double threshold = 0.0;
};

/// Tests whether `candidate` lies in the level-(1 − α) confidence ellipsoid around
/// P̂_r. Gaussian mode compares the normalized statistic with Φ^{-1}(1 − α); chisq
/// mode compares the raw statistic with the χ²_df quantile. An exact match
/// (raw = 0) is always covered.
EllipsoidResult confidence_ellipsoid_test(const FisherOperator& fisher, const Matrix& p_hat_r,
                                          const Matrix& candidate, int n, double alpha,
                                          ThresholdMode mode = ThresholdMode::gaussian);

double ellipsoid_threshold(ThresholdMode mode, double alpha, int df);

struct AssumptionReport {
  double effective_rank = 0.0;
  std::optional<double> gap;  // empty for single-cluster models
  double lambda_min = 0.0;
  double opnorm_norm = 0.0;   // ‖Σ‖
  double opnorm_proxy = 0.0;  // ‖Σ‖ √(r(Σ)/n) standing in for E‖Σ̂ − Σ‖
  double gap_threshold = 0.0;         // (1 − γ) ḡ_r / 2
  double lambda_min_threshold = 0.0;  // c √(max(r(Σ), log p) / n)
  double rank_over_n = 0.0;
  bool in_scope = true;  // false when the gap is undefined
  bool cond_gap_ok = false;
  bool cond_lambda_min_ok = false;
  double gamma = 0.0;
  double c_proxy = 0.0;
};

AssumptionReport check_assumptions(const CovarianceModel& model, int rank, int n, double gamma, double c_proxy);

nlohmann::json to_json(const AssumptionReport& report);

}  // namespace pcawald
