#include "pcawald/inference.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "pcawald/distributions.hpp"
#include "pcawald/errors.hpp"
#include "pcawald/parallel.hpp"
#include "pcawald/random.hpp"
#include "pcawald/sampling.hpp"

namespace pcawald {

std::string_view fisher_variant_name(FisherVariant v) {
  return v == FisherVariant::plugin ? "plugin" : "true";
}

double normalize_wald(double raw, int df) { return (raw - df) / std::sqrt(2.0 * df); }

WaldResult wald_statistic(const FisherOperator& fisher, const Matrix& p_hat_r, const Matrix& p_r, int n) {
  if (fisher.kind == OperatorKind::limiting_covariance) {
    throw std::invalid_argument("wald_statistic needs a Fisher square root, not the limiting covariance");
  }
  require_same_shape(p_hat_r, p_r, "wald_statistic");
  if (p_hat_r.rows() != fisher.op.dim() || p_hat_r.cols() != fisher.op.dim()) {
    throw DimensionMismatchError("wald_statistic: projector size does not match the operator");
  }
  if (n < 1) throw std::invalid_argument("wald_statistic: n must be >= 1");
  const Matrix whitened = fisher.apply(p_hat_r - p_r);
  WaldResult w;
  w.raw = n * whitened.squaredNorm();
  w.df = fisher.df;
  w.normalized = normalize_wald(w.raw, w.df);
  w.fisher = fisher.kind == OperatorKind::plugin_fisher_sqrt ? FisherVariant::plugin : FisherVariant::true_fisher;
  return w;
}

double linear_term_energy(const CovarianceModel& model, const ClusterIndex& r, const Matrix& e, int n) {
  require_square(e, "linear_term_energy");
  if (e.rows() != model.dim()) throw DimensionMismatchError("linear_term_energy: E must be p x p");
  const Matrix inv_root = matrix_power(model, -0.5);
  const Matrix pr = projector(model, r);
  const Matrix complement = Matrix::Identity(model.dim(), model.dim()) - pr;
  return n * (complement * inv_root * e * inv_root * pr).squaredNorm();
}

MeanEstimate linear_term_identity_check(const CovarianceModel& model, const ClusterIndex& r, int n, int reps,
                                        std::uint64_t seed) {
  if (reps < 2) throw std::invalid_argument("linear_term_identity_check: reps must be >= 2");
  const Matrix sigma = model.dense();
  std::vector<double> values(static_cast<std::size_t>(reps));
  parallel_for(values.size(), [&](std::size_t i) {
    const Matrix e = sample_covariance(model, n, mix_seed(seed, i)) - sigma;
    values[i] = linear_term_energy(model, r, e, n);
  });
  MeanEstimate est;
  est.reps = reps;
  est.target = degrees_of_freedom(model.dim(), r.size());
  est.mean = std::accumulate(values.begin(), values.end(), 0.0) / reps;
  double ss = 0.0;
  for (double v : values) ss += (v - est.mean) * (v - est.mean);
  est.standard_error = std::sqrt(ss / (reps - 1) / reps);
  return est;
}

double ellipsoid_threshold(ThresholdMode mode, double alpha, int df) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  return mode == ThresholdMode::gaussian ? normal_quantile(1.0 - alpha) : chisq_quantile(1.0 - alpha, df);
}

EllipsoidResult confidence_ellipsoid_test(const FisherOperator& fisher, const Matrix& p_hat_r,
                                          const Matrix& candidate, int n, double alpha, ThresholdMode mode) {
  EllipsoidResult out;
  out.threshold = ellipsoid_threshold(mode, alpha, fisher.df);
  out.statistic = wald_statistic(fisher, p_hat_r, candidate, n);
  const double value = mode == ThresholdMode::gaussian ? out.statistic.normalized : out.statistic.raw;
  out.covered = out.statistic.raw == 0.0 || value <= out.threshold;
  return out;
}

AssumptionReport check_assumptions(const CovarianceModel& model, int rank, int n, double gamma, double c_proxy) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  if (!(c_proxy > 0.0)) throw std::invalid_argument("c_proxy must be positive");
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  AssumptionReport rep;
  rep.gamma = gamma;
  rep.c_proxy = c_proxy;
  rep.effective_rank = effective_rank(model);
  rep.lambda_min = model.min_eigenvalue();
  rep.opnorm_norm = model.operator_norm();
  rep.opnorm_proxy = rep.opnorm_norm * std::sqrt(rep.effective_rank / n);
  rep.rank_over_n = rep.effective_rank / n;
  rep.lambda_min_threshold =
      c_proxy * std::sqrt(std::max(rep.effective_rank, std::log(static_cast<double>(model.dim()))) / n);
  rep.cond_lambda_min_ok = rep.lambda_min >= rep.lambda_min_threshold;
  if (model.num_clusters() < 2) {
    rep.in_scope = false;
    rep.cond_gap_ok = false;
    return rep;
  }
  rep.gap = spectral_gap(model, model.cluster(rank));
  rep.gap_threshold = (1.0 - gamma) * *rep.gap / 2.0;
  rep.cond_gap_ok = rep.opnorm_proxy <= rep.gap_threshold;
  return rep;
}

nlohmann::json to_json(const AssumptionReport& r) {
  nlohmann::json doc{{"effective_rank", r.effective_rank},
                     {"gap", r.gap ? nlohmann::json(*r.gap) : nlohmann::json(nullptr)},
                     {"lambda_min", r.lambda_min},
                     {"opnorm", r.opnorm_norm},
                     {"opnorm_proxy", r.opnorm_proxy},
                     {"gap_threshold", r.gap_threshold},
                     {"lambda_min_threshold", r.lambda_min_threshold},
                     {"rank_over_n", r.rank_over_n},
                     {"in_scope", r.in_scope},
                     {"cond_gap_ok", r.cond_gap_ok},
                     {"cond_lambda_min_ok", r.cond_lambda_min_ok},
                     {"gamma", r.gamma},
                     {"c_proxy", r.c_proxy}};
  return doc;
}

}  // namespace pcawald
