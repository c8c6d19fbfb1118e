#include "pcawald/mc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <set>
#include <ostream>
#include <sstream>

#include "pcawald/distributions.hpp"
#include "pcawald/errors.hpp"
#include "pcawald/io.hpp"
#include "pcawald/linops.hpp"
#include "pcawald/parallel.hpp"
#include "pcawald/random.hpp"
#include "pcawald/sampling.hpp"

namespace pcawald {

namespace {

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;  // unbiased
};

MeanVar mean_var(std::span<const double> v) {
  MeanVar out;
  if (v.empty()) return out;
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.var = ss / static_cast<double>(v.size() - 1);
  }
  return out;
}

CovarianceModel build_checked(const ModelSpec& spec) {
  try {
    return build_model(spec);
  } catch (const std::exception& e) {
    throw PreconditionError(std::string("invalid model: ") + e.what());
  }
}

ModelSpec with_dimension(ModelSpec spec, int p) {
  if (spec.kind == ModelKind::custom) throw PreconditionError("p grid is not supported for custom models");
  spec.p = p;
  spec.basis.reset();
  return spec;
}

// Everything a replication needs that does not depend on the sample.
struct Pipeline {
  const CovarianceModel& model;
  ClusterIndex cluster;
  FisherVariant fisher;
  ThresholdMode threshold;
  double alpha;
  int n;
  Matrix p_r;
  std::optional<FisherOperator> true_fisher;

  Pipeline(const CovarianceModel& m, int r, FisherVariant f, ThresholdMode t, double a, int n_)
      : model(m), cluster(m.cluster(r)), fisher(f), threshold(t), alpha(a), n(n_), p_r(projector(m, cluster)) {
    if (fisher == FisherVariant::true_fisher) true_fisher = fisher_sqrt(model, cluster);
  }

  struct Outcome {
    EllipsoidResult test;
    Matrix e;
  };

  Outcome run(std::uint64_t seed) const { return evaluate(sample_covariance(model, n, seed), n); }

  Outcome evaluate(const Matrix& sigma_hat, int n_eff) const {
    const auto spectral = empirical_spectral(sigma_hat, cluster);
    const FisherOperator op = true_fisher ? *true_fisher : plugin_fisher_sqrt(spectral);
    return {confidence_ellipsoid_test(op, spectral.p_hat_r, p_r, n_eff, alpha, threshold), sigma_hat};
  }
};

void validate_simulation(const ExperimentConfig& c, const CovarianceModel& model) {
  if (c.reps < 2) throw PreconditionError("reps must be >= 2");
  if (c.n < 1) throw PreconditionError("n must be >= 1");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw PreconditionError("alpha must lie in (0, 1)");
  if (model.num_clusters() < 2) throw PreconditionError("model has a single eigenvalue cluster; P_r is trivial");
  if (c.r < 1 || c.r > model.num_clusters()) throw PreconditionError("cluster index r out of range");
  if (c.fisher == FisherVariant::plugin && c.n < model.dim()) {
    throw PreconditionError("plug-in Fisher needs n >= p (n = " + std::to_string(c.n) +
                            ", p = " + std::to_string(model.dim()) + ")");
  }
}

std::vector<int> effective_p_grid(const ExperimentConfig& c) {
  if (!c.p_grid.empty()) return c.p_grid;
  return {build_checked(c.model).dim()};
}

const char* threshold_name(ThresholdMode t) { return t == ThresholdMode::chisq ? "chisq" : "gaussian"; }

ExperimentSummary run_simulation(const ExperimentConfig& c) {
  const auto model = build_checked(c.model);
  const Pipeline pipeline(model, c.r, c.fisher, c.threshold, c.alpha, c.n);
  ExperimentSummary s;
  s.config = c;
  s.df = degrees_of_freedom(model.dim(), pipeline.cluster.size());
  s.replications.resize(static_cast<std::size_t>(c.reps));
  parallel_for(s.replications.size(), [&](std::size_t i) {
    const std::uint64_t seed = mix_seed(c.base_seed, i);
    const auto outcome = pipeline.run(seed);
    s.replications[i] = ReplicationRecord{static_cast<int>(i), seed, outcome.test.statistic.raw,
                                          outcome.test.statistic.normalized, outcome.test.covered};
  });
  std::vector<double> raw, normalized;
  std::size_t covered = 0;
  for (const auto& rec : s.replications) {
    raw.push_back(rec.raw);
    normalized.push_back(rec.normalized);
    covered += rec.covered ? 1 : 0;
  }
  const auto norm_stats = mean_var(normalized);
  s.mean_normalized = norm_stats.mean;
  s.var_normalized = norm_stats.var;
  s.mean_raw = mean_var(raw).mean;
  s.empirical_coverage = static_cast<double>(covered) / static_cast<double>(c.reps);
  if (c.mode == Mode::ks_chisq) {
    const KsReference ref{KsReference::Kind::chisq, s.df};
    s.ks_distance = ks_distance(raw, ref);
    s.ks_reference = ref.name();
  } else {
    const KsReference ref{KsReference::Kind::gaussian, 1};
    s.ks_distance = ks_distance(normalized, ref);
    s.ks_reference = ref.name();
  }
  return s;
}

std::vector<OpnormSummary> run_opnorm(const ExperimentConfig& c) {
  const auto model = build_checked(c.model);
  std::vector<int> grid = c.n_grid.empty() ? std::vector<int>{c.n} : c.n_grid;
  std::vector<OpnormSummary> out;
  for (int n : grid) out.push_back(opnorm_concentration_check(model, n, c.reps, c.base_seed));
  return out;
}

}  // namespace

std::string_view mode_name(Mode mode) {
  switch (mode) {
    case Mode::ks_gaussian: return "ks_gaussian";
    case Mode::ks_chisq: return "ks_chisq";
    case Mode::coverage: return "coverage";
    case Mode::bias_sweep: return "bias_sweep";
    case Mode::perturb_check: return "perturb_check";
    case Mode::opnorm_check: return "opnorm_check";
  }
  return "unknown";
}

Mode mode_from_name(std::string_view name) {
  for (Mode m : {Mode::ks_gaussian, Mode::ks_chisq, Mode::coverage, Mode::bias_sweep, Mode::perturb_check,
                 Mode::opnorm_check}) {
    if (mode_name(m) == name) return m;
  }
  throw PreconditionError("unknown mode '" + std::string(name) + "'");
}

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  ExperimentConfig c;
  try {
    c.model = model_spec_from_json(doc.at("model"));
    c.r = doc.value("r", 1);
    c.n = doc.value("n", 0);
    c.reps = doc.value("reps", 0);
    c.base_seed = doc.value("base_seed", std::uint64_t{0});
    const auto fisher = doc.value("fisher_kind", std::string("true"));
    if (fisher == "true") {
      c.fisher = FisherVariant::true_fisher;
    } else if (fisher == "plugin") {
      c.fisher = FisherVariant::plugin;
    } else {
      throw PreconditionError("fisher_kind must be 'true' or 'plugin'");
    }
    c.alpha = doc.value("alpha", 0.05);
    c.mode = mode_from_name(doc.value("mode", std::string("ks_gaussian")));
    const auto threshold = doc.value("threshold", std::string("gaussian"));
    if (threshold == "gaussian") {
      c.threshold = ThresholdMode::gaussian;
    } else if (threshold == "chisq") {
      c.threshold = ThresholdMode::chisq;
    } else {
      throw PreconditionError("threshold must be 'gaussian' or 'chisq'");
    }
    c.n_grid = doc.value("n_grid", std::vector<int>{});
    c.p_grid = doc.value("p_grid", std::vector<int>{});
    c.ranks = doc.value("ranks", std::vector<int>{});
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("malformed config: ") + e.what());
  } catch (const PreconditionError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw PreconditionError(std::string("malformed config: ") + e.what());
  }
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return nlohmann::json{{"model", to_json(c.model)},
                        {"r", c.r},
                        {"n", c.n},
                        {"reps", c.reps},
                        {"base_seed", c.base_seed},
                        {"fisher_kind", fisher_variant_name(c.fisher)},
                        {"alpha", c.alpha},
                        {"mode", mode_name(c.mode)},
                        {"threshold", threshold_name(c.threshold)},
                        {"n_grid", c.n_grid},
                        {"p_grid", c.p_grid},
                        {"ranks", c.ranks}};
}

void validate(const ExperimentConfig& c) {
  switch (c.mode) {
    case Mode::ks_gaussian:
    case Mode::ks_chisq:
    case Mode::coverage:
      validate_simulation(c, build_checked(c.model));
      return;
    case Mode::bias_sweep: {
      if (c.fisher != FisherVariant::true_fisher) throw PreconditionError("bias_sweep requires the true Fisher operator");
      if (c.n_grid.empty()) throw PreconditionError("bias_sweep needs a nonempty n_grid");
      if (std::set<int>(c.n_grid.begin(), c.n_grid.end()).size() != c.n_grid.size() ||
          std::set<int>(c.p_grid.begin(), c.p_grid.end()).size() != c.p_grid.size()) {
        throw PreconditionError("bias_sweep grids must not repeat values");
      }
      if (c.n_grid.size() < 2 && c.p_grid.size() < 2) {
        throw PreconditionError("bias_sweep grid too small: need >= 2 points along n or p");
      }
      for (int p : effective_p_grid(c)) {
        const auto model = build_checked(c.p_grid.empty() ? c.model : with_dimension(c.model, p));
        for (int n : c.n_grid) {
          ExperimentConfig point = c;
          point.n = n;
          validate_simulation(point, model);
        }
      }
      return;
    }
    case Mode::perturb_check: {
      if (c.reps < 1) throw PreconditionError("perturb_check needs reps >= 1");
      const auto model = build_checked(c.model);
      if (model.num_clusters() < 2) throw PreconditionError("perturb_check needs at least two clusters");
      for (int rank : c.ranks.empty() ? std::vector<int>{c.r} : c.ranks) {
        if (rank < 1 || rank > model.num_clusters()) throw PreconditionError("cluster rank out of range");
      }
      return;
    }
    case Mode::opnorm_check: {
      const auto model = build_checked(c.model);
      if (c.reps < 100) throw PreconditionError("opnorm_check needs reps >= 100");
      for (int n : c.n_grid.empty() ? std::vector<int>{c.n} : c.n_grid) {
        if (!(effective_rank(model) < n)) throw PreconditionError("opnorm_check needs r(Sigma) < n");
      }
      return;
    }
  }
}

double KsReference::cdf(double x) const {
  if (kind == Kind::gaussian) return normal_cdf(x);
  return x <= 0.0 ? 0.0 : chisq_cdf(x, df);
}

std::string KsReference::name() const {
  return kind == Kind::gaussian ? std::string("gaussian") : "chisq(" + std::to_string(df) + ")";
}

double ks_distance(std::span<const double> samples, const KsReference& reference) {
  if (samples.empty()) throw std::invalid_argument("ks_distance: no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto k = static_cast<double>(sorted.size());
  double worst = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double f = reference.cdf(sorted[i]);
    const double below = static_cast<double>(i) / k;  // F_k just left of the jump
    const double at = static_cast<double>(j) / k;     // F_k at the jump
    worst = std::max({worst, std::abs(f - below), std::abs(at - f)});
    i = j;
  }
  return worst;
}

std::vector<BiasRow> bias_sweep(const ExperimentConfig& c) {
  ExperimentConfig checked = c;
  checked.mode = Mode::bias_sweep;
  validate(checked);
  std::vector<int> sizes = c.n_grid;
  std::sort(sizes.begin(), sizes.end());
  const auto reps = static_cast<std::size_t>(c.reps);
  std::vector<BiasRow> rows;
  for (int p : effective_p_grid(c)) {
    const auto model = build_checked(c.p_grid.empty() ? c.model : with_dimension(c.model, p));
    const auto cluster = model.cluster(c.r);
    const Matrix sigma = model.dense();
    const std::uint64_t point_seed = mix_seed(c.base_seed, static_cast<std::uint64_t>(model.dim()));
    const Pipeline pipeline(model, c.r, FisherVariant::true_fisher, c.threshold, c.alpha, sizes.back());
    // excess[k][i] = raw − df, nonlinear[k][i] = raw − n‖I^{1/2}L_r(E)‖², for sizes[k].
    std::vector<std::vector<double>> excess(sizes.size(), std::vector<double>(reps));
    std::vector<std::vector<double>> nonlinear(sizes.size(), std::vector<double>(reps));
    parallel_for(reps, [&](std::size_t i) {
      const auto sigma_hats = sample_covariance_prefixes(model, sizes, mix_seed(point_seed, i));
      for (std::size_t k = 0; k < sizes.size(); ++k) {
        const auto outcome = pipeline.evaluate(sigma_hats[k], sizes[k]);
        const double raw = outcome.test.statistic.raw;
        excess[k][i] = raw - outcome.test.statistic.df;
        nonlinear[k][i] = raw - linear_term_energy(model, cluster, sigma_hats[k] - sigma, sizes[k]);
      }
    });
    const double predicted_base = std::sqrt(static_cast<double>(model.dim())) * effective_rank(model);
    for (int n : c.n_grid) {
      const auto k = static_cast<std::size_t>(std::lower_bound(sizes.begin(), sizes.end(), n) - sizes.begin());
      BiasRow row;
      row.n = n;
      row.p = model.dim();
      row.df = degrees_of_freedom(model.dim(), cluster.size());
      row.reps = c.reps;
      const auto plain = mean_var(excess[k]);
      const auto cv = mean_var(nonlinear[k]);
      row.mean_raw_minus_df = plain.mean;
      row.se_raw_minus_df = std::sqrt(plain.var / c.reps);
      row.bias = cv.mean;
      row.bias_se = std::sqrt(cv.var / c.reps);
      row.predicted_scale = std::sqrt(2.0 * row.df) * predicted_base / n;
      row.ratio = row.bias / row.predicted_scale;
      rows.push_back(row);
    }
  }
  return rows;
}

ExperimentSummary run(const ExperimentConfig& config) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  ExperimentSummary s;
  switch (config.mode) {
    case Mode::ks_gaussian:
    case Mode::ks_chisq:
    case Mode::coverage:
      s = run_simulation(config);
      break;
    case Mode::bias_sweep:
      s.config = config;
      s.bias_table = bias_sweep(config);
      break;
    case Mode::perturb_check: {
      s.config = config;
      const auto model = build_checked(config.model);
      const auto ranks = config.ranks.empty() ? std::vector<int>{config.r} : config.ranks;
      s.bound_records = bound_sweep(model, ranks, config.reps, config.base_seed);
      s.bound_violations = static_cast<std::size_t>(std::count_if(
          s.bound_records.begin(), s.bound_records.end(), [](const BoundRecord& b) { return !b.report.all_pass(); }));
      break;
    }
    case Mode::opnorm_check:
      s.config = config;
      s.opnorm = run_opnorm(config);
      break;
  }
  s.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s;
}

void write_replications_csv(std::ostream& out, std::span<const ReplicationRecord> records) {
  out << kReplicationsHeader << '\n';
  for (const auto& r : records) {
    out << r.rep << ',' << r.seed << ',' << format_double(r.raw) << ',' << format_double(r.normalized) << ','
        << (r.covered ? 1 : 0) << '\n';
  }
}

std::vector<ReplicationRecord> read_replications_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kReplicationsHeader) {
    throw std::invalid_argument("replications csv: unexpected header");
  }
  std::vector<ReplicationRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field[5];
    for (auto& f : field) std::getline(row, f, ',');
    ReplicationRecord rec;
    rec.rep = std::stoi(field[0]);
    rec.seed = std::stoull(field[1]);
    rec.raw = std::stod(field[2]);
    rec.normalized = std::stod(field[3]);
    rec.covered = field[4] == "1";
    out.push_back(rec);
  }
  return out;
}

void write_bias_table_csv(std::ostream& out, std::span<const BiasRow> rows) {
  out << "n,p,df,reps,mean_raw_minus_df,se_raw_minus_df,bias,bias_se,predicted_scale,ratio\n";
  for (const auto& r : rows) {
    out << r.n << ',' << r.p << ',' << r.df << ',' << r.reps << ',' << format_double(r.mean_raw_minus_df) << ','
        << format_double(r.se_raw_minus_df) << ',' << format_double(r.bias) << ',' << format_double(r.bias_se)
        << ',' << format_double(r.predicted_scale) << ',' << format_double(r.ratio) << '\n';
  }
}

void write_bound_records_csv(std::ostream& out, std::span<const BoundRecord> records) {
  out << "index,ensemble,rank,e_norm,ratio_projector,ratio_remainder,ratio_third_order,ratio_sharp_third_order,pass\n";
  for (const auto& b : records) {
    out << b.index << ',' << ensemble_name(b.ensemble) << ',' << b.rank << ',' << format_double(b.e_norm) << ','
        << format_double(b.report.projector.ratio) << ',' << format_double(b.report.remainder.ratio) << ','
        << format_double(b.report.third_order.ratio) << ','
        << format_double(b.report.sharp_third_order_ratio) << ',' << (b.report.all_pass() ? 1 : 0) << '\n';
  }
}

void write_opnorm_csv(std::ostream& out, std::span<const OpnormSummary> rows) {
  out << "n,reps,mean_norm,norm_se,scale,ratio,ratio_se\n";
  for (const auto& r : rows) {
    out << r.n << ',' << r.reps << ',' << format_double(r.mean_norm) << ',' << format_double(r.norm_se) << ','
        << format_double(r.scale) << ',' << format_double(r.ratio) << ',' << format_double(r.ratio_se) << '\n';
  }
}

nlohmann::json summary_to_json(const ExperimentSummary& s) {
  nlohmann::json doc;
  doc["config"] = to_json(s.config);
  doc["mode"] = mode_name(s.config.mode);
  doc["runtime_seconds"] = s.runtime_seconds;
  if (!s.replications.empty()) {
    doc["df"] = s.df;
    doc["reps"] = s.replications.size();
    doc["replications_file"] = "replications.csv";
    doc["ks_distance"] = s.ks_distance;
    doc["ks_reference"] = s.ks_reference;
    doc["empirical_coverage"] = s.empirical_coverage;
    doc["mean_normalized"] = s.mean_normalized;
    doc["var_normalized"] = s.var_normalized;
    doc["mean_raw"] = s.mean_raw;
    doc["threshold"] = ellipsoid_threshold(s.config.threshold, s.config.alpha, s.df);
  }
  auto table = nlohmann::json::array();
  for (const auto& r : s.bias_table) {
    table.push_back({{"n", r.n},
                     {"p", r.p},
                     {"df", r.df},
                     {"reps", r.reps},
                     {"mean_raw_minus_df", r.mean_raw_minus_df},
                     {"se_raw_minus_df", r.se_raw_minus_df},
                     {"bias", r.bias},
                     {"bias_se", r.bias_se},
                     {"predicted_scale", r.predicted_scale},
                     {"ratio", r.ratio}});
  }
  doc["bias_table"] = table;
  if (s.config.mode == Mode::perturb_check) {
    doc["bound_checks"] = s.bound_records.size();
    doc["bound_violations"] = s.bound_violations;
  }
  if (!s.opnorm.empty()) {
    auto rows = nlohmann::json::array();
    for (const auto& r : s.opnorm) {
      rows.push_back({{"n", r.n}, {"reps", r.reps}, {"mean_norm", r.mean_norm}, {"norm_se", r.norm_se},
                      {"scale", r.scale}, {"ratio", r.ratio}, {"ratio_se", r.ratio_se}});
    }
    doc["opnorm"] = rows;
  }
  return doc;
}

void write_outputs(const ExperimentSummary& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  if (!s.replications.empty()) {
    auto out = open_output(dir / "replications.csv");
    write_replications_csv(out, s.replications);
  }
  if (!s.bias_table.empty()) {
    auto out = open_output(dir / "bias_table.csv");
    write_bias_table_csv(out, s.bias_table);
  }
  if (s.config.mode == Mode::perturb_check) {
    auto out = open_output(dir / "perturb_check.csv");
    write_bound_records_csv(out, s.bound_records);
  }
  if (!s.opnorm.empty()) {
    auto out = open_output(dir / "opnorm_check.csv");
    write_opnorm_csv(out, s.opnorm);
  }
  auto out = open_output(dir / "summary.json");
  out << summary_to_json(s).dump(2) << '\n';
}

}  // namespace pcawald
