// Acceptance gate: runs every criterion at its stated tolerance and runtime
// budget, printing one PASS/FAIL line per criterion.
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pcawald/distributions.hpp"
#include "pcawald/inference.hpp"
#include "pcawald/linops.hpp"
#include "pcawald/mc.hpp"
#include "pcawald/perturb.hpp"
#include "pcawald/sampling.hpp"

using namespace pcawald;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;
  std::function<Outcome()> body;
};

ExperimentConfig load(const std::string& name) {
  std::ifstream in(std::string(PCA_WALD_CONFIG_DIR) + "/" + name);
  if (!in) throw std::runtime_error("missing config " + name);
  return config_from_json(nlohmann::json::parse(in));
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

CovarianceModel spiked_p10() {
  const double s[] = {4.0, 2.0};
  return make_spiked(s, 1.0, 10, 3);
}

Outcome perturbation_bounds() {
  const auto model = spiked_p10();
  const int ranks[] = {1, 2, 3};
  const auto records = bound_sweep(model, ranks, 10000, 2028);
  std::size_t violations = 0;
  double worst[3] = {0, 0, 0};
  for (const auto& r : records) {
    violations += r.report.all_pass() ? 0 : 1;
    worst[0] = std::max(worst[0], r.report.projector.ratio);
    worst[1] = std::max(worst[1], r.report.remainder.ratio);
    worst[2] = std::max(worst[2], r.report.third_order.ratio);
  }
  return {violations == 0 && records.size() == 10000,
          fmt("%zu draws, %zu violations, max ratios %.3f / %.3f / %.3f", records.size(), violations, worst[0],
              worst[1], worst[2])};
}

Outcome order_of_accuracy_slopes() {
  const auto model = spiked_p10();
  const auto t = log_spaced(1e-4, 1e-1, 7);
  std::mt19937_64 gen(2029);
  double s_lo = INFINITY, s_hi = -INFINITY, r_lo = INFINITY, r_hi = -INFINITY;
  bool pass = true;
  for (int i = 0; i < 20; ++i) {
    const auto c = model.cluster(1 + i % 3);
    Matrix e = oracle::random_symmetric(10, gen);
    e *= spectral_gap(model, c) / symmetric_operator_norm(e);
    const auto acc = order_of_accuracy(model, c, e, t);
    pass = pass && std::abs(acc.remainder_slope - 2.0) <= 0.1 && std::abs(acc.third_order_slope - 3.0) <= 0.15;
    s_lo = std::min(s_lo, acc.remainder_slope);
    s_hi = std::max(s_hi, acc.remainder_slope);
    r_lo = std::min(r_lo, acc.third_order_slope);
    r_hi = std::max(r_hi, acc.third_order_slope);
  }
  return {pass, fmt("20 directions, S slopes in [%.4f, %.4f], R slopes in [%.4f, %.4f]", s_lo, s_hi, r_lo, r_hi)};
}

Outcome linear_identity() {
  const double s[] = {1.0};
  const auto model = make_spiked(s, 1.0, 10);
  const auto est = linear_term_identity_check(model, model.cluster(1), 500, 2000, 2030);
  return {std::abs(est.z_score()) <= 3.0,
          fmt("mean %.4f, se %.4f, target %.0f, z %.2f", est.mean, est.standard_error, est.target, est.z_score())};
}

Outcome simulate_ks(const char* config, double limit) {
  const auto s = run(load(config));
  return {s.ks_distance <= limit, fmt("%s: reps %zu, KS to %s = %.4f (limit %.2f)", config, s.replications.size(),
                                      s.ks_reference.c_str(), s.ks_distance, limit)};
}

Outcome coverage() {
  const auto c = load("coverage_plugin_p40.json");
  const auto s = run(c);
  return {s.empirical_coverage >= 0.92 && s.empirical_coverage <= 0.98,
          fmt("reps %zu, alpha %.2f, coverage %.3f (target [0.92, 0.98])", s.replications.size(), c.alpha,
              s.empirical_coverage)};
}

Outcome opnorm_rate() {
  const double sp[] = {4.0};
  const std::vector<std::pair<const char*, CovarianceModel>> models{
      {"spiked p=20", make_spiked(sp, 1.0, 20, 12)},
      {"decay a=1 p=30", make_decay(1.0, 30, 5)},
      {"two-cluster p=10", make_custom({{2.0, 5}, {1.0, 5}}, 6)}};
  bool pass = true;
  std::string detail;
  for (const auto& [name, model] : models) {
    const auto a = opnorm_concentration_check(model, 2000, 200, 2031);
    const auto b = opnorm_concentration_check(model, 4000, 200, 2031);
    const double change = std::abs(b.ratio / a.ratio - 1.0);
    pass = pass && a.ratio > 0.3 && a.ratio < 10.0 && b.ratio > 0.3 && b.ratio < 10.0 && change < 0.5;
    detail += fmt("%s: %.3f -> %.3f (%.1f%%); ", name, a.ratio, b.ratio, 100 * change);
  }
  return {pass, detail};
}

Outcome bias_scaling() {
  const auto c = load("bias_sweep_n.json");
  const auto rows = bias_sweep(c);
  bool pass = rows.size() == 3;
  std::string detail;
  for (const auto& r : rows) detail += fmt("n=%d bias %.5f±%.5f; ", r.n, r.bias, r.bias_se);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double ratio = rows[k].bias / rows[k - 1].bias;
    pass = pass && ratio >= 0.25 && ratio <= 0.75;
    detail += fmt("ratio %d/%d = %.3f; ", rows[k].n, rows[k - 1].n, ratio);
  }
  return {pass, detail};
}

Outcome dense_oracle() {
  std::mt19937_64 gen(2032);
  double worst = 0.0;
  int inputs = 0;
  auto track = [&](const Matrix& a, const Matrix& b) { worst = std::max(worst, (a - b).cwiseAbs().maxCoeff()); };
  for (int p = 2; p <= 8; ++p) {
    for (int block = 0; block < 10; ++block) {
      const auto model = oracle::random_model(p, gen);
      const auto c = model.cluster(1 + static_cast<int>(gen() % static_cast<std::uint64_t>(model.num_clusters())));
      const auto f = fisher_sqrt(model, c);
      const auto v = limiting_covariance(model, c);
      const auto vc = limiting_covariance_compact(model, c);
      const Matrix sigma_hat = sample_covariance(model, 5 * p, gen());
      const auto plug = plugin_fisher_sqrt(sigma_hat, c);
      KroneckerSum generic(p);
      for (int k = 0; k < 3; ++k)
        generic.add(oracle::random_matrix(p, p, gen), oracle::random_matrix(p, p, gen), 0.5 * (k + 1));
      const Matrix f_ref = oracle::fisher_sqrt_dense(model, c);
      const Matrix v_ref = oracle::limiting_covariance_dense(model, c);
      const Matrix plug_ref = oracle::plugin_fisher_sqrt_dense(sigma_hat, c);
      const Matrix generic_ref = oracle::dense_operator(generic);
      for (int k = 0; k < 10; ++k, ++inputs) {
        const Matrix m = oracle::random_matrix(p, p, gen);
        track(kron_apply(f.op, m), oracle::apply_dense(f_ref, m));
        track(kron_apply(v.op, m), oracle::apply_dense(v_ref, m));
        track(kron_apply(vc, m), oracle::apply_dense(v_ref, m));
        track(kron_apply(plug.op, m), oracle::apply_dense(plug_ref, m));
        track(kron_apply(generic, m), oracle::apply_dense(generic_ref, m));
      }
    }
  }
  return {worst <= 1e-10, fmt("%d inputs over p = 2..8, 5 operators, max abs error %.3e", inputs, worst)};
}

Outcome distribution_functions() {
  namespace bm = boost::math;
  double cdf_err = 0.0, inv_err = 0.0;
  const bm::normal_distribution<double> normal;
  for (int i = 0; i < 1000; ++i) {
    const double x = -10.0 + 20.0 * i / 999.0;
    cdf_err = std::max(cdf_err, std::abs(normal_cdf(x) - bm::cdf(normal, x)));
    const double y = -6.0 + 12.0 * i / 999.0;
    inv_err = std::max(inv_err, std::abs(normal_quantile(normal_cdf(y)) - y));
  }
  for (int df : {1, 2, 4, 9, 39, 144}) {
    const bm::chi_squared_distribution<double> chi(df);
    const double hi = df + 12.0 * std::sqrt(2.0 * df) + 20.0;
    const double qlo = bm::quantile(chi, 1e-6), qhi = bm::quantile(chi, 1.0 - 1e-6);
    for (int i = 0; i < 1000; ++i) {
      const double x = hi * i / 999.0;
      cdf_err = std::max(cdf_err, std::abs(chisq_cdf(x, df) - bm::cdf(chi, x)));
      const double y = qlo + (qhi - qlo) * i / 999.0;
      inv_err = std::max(inv_err, std::abs(chisq_quantile(chisq_cdf(y, df), df) - y) / std::max(1.0, y));
    }
  }
  return {cdf_err <= 1e-10 && inv_err <= 1e-7,
          fmt("max cdf error %.3e (limit 1e-10), max quantile(cdf(x)) error %.3e (limit 1e-7)", cdf_err, inv_err)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "perturbation bounds", 120, perturbation_bounds},
      {2, "order of accuracy", 60, order_of_accuracy_slopes},
      {3, "linear-term identity", 120, linear_identity},
      {4, "fixed-p chi-square limit", 300, [] { return simulate_ks("chisq_fixed_p.json", 0.05); }},
      {5, "high-dimensional Gaussian limit", 600, [] { return simulate_ks("gaussian_plugin_p40.json", 0.10); }},
      {6, "confidence ellipsoid coverage", 600, coverage},
      {7, "operator-norm rate", 180, opnorm_rate},
      {8, "bias scaling in n", 480, bias_scaling},
      {9, "dense-oracle equivalence", 60, dense_oracle},
      {10, "distribution functions", 10, distribution_functions},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.body();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < c.budget_seconds;
    const bool pass = out.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("[%s] criterion %2d  %-32s %7.1fs (budget %.0fs%s)  %s\n", pass ? "PASS" : "FAIL", c.id, c.title,
                seconds, c.budget_seconds, in_time ? "" : ", EXCEEDED", out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
