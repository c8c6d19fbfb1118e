#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pcawald/covmodel.hpp"
#include "pcawald/inference.hpp"
#include "pcawald/perturb.hpp"

namespace pcawald {

enum class Mode { ks_gaussian, ks_chisq, coverage, bias_sweep, perturb_check, opnorm_check };

std::string_view mode_name(Mode mode);
Mode mode_from_name(std::string_view name);

struct ExperimentConfig {
  ModelSpec model;
  int r = 1;
  int n = 0;
  int reps = 0;
  std::uint64_t base_seed = 0;
  FisherVariant fisher = FisherVariant::true_fisher;
  double alpha = 0.05;
  Mode mode = Mode::ks_gaussian;
  ThresholdMode threshold = ThresholdMode::gaussian;
  std::vector<int> n_grid;  // bias_sweep, opnorm_check
  std::vector<int> p_grid;  // bias_sweep
  std::vector<int> ranks;   // perturb_check; defaults to {r}
};

ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentConfig& config);

/// Throws PreconditionError for anything that would fail mid-run.
void validate(const ExperimentConfig& config);

/// One row of replications.csv.
struct ReplicationRecord {
  int rep = 0;
  std::uint64_t seed = 0;
  double raw = 0.0;
  double normalized = 0.0;
  bool covered = false;
};

struct KsReference {
  enum class Kind { gaussian, chisq };
  Kind kind = Kind::gaussian;
  int df = 1;

  double cdf(double x) const;
  std::string name() const;
};

/// sup_x |F_k(x) − F(x)| for the right-continuous empirical cdf F_k, evaluated on
/// both sides of every jump. Ties are grouped into a single jump.
double ks_distance(std::span<const double> samples, const KsReference& reference);

struct BiasRow {
  int n = 0;
  int p = 0;
  int df = 0;
  int reps = 0;
  double mean_raw_minus_df = 0.0;  // plain Monte Carlo estimate of E[raw] − df
  double se_raw_minus_df = 0.0;
  double bias = 0.0;  // control-variate estimate, mean of raw − n‖I^{1/2}L_r‖²_F
  double bias_se = 0.0;
  double predicted_scale = 0.0;  // √(2 df) · √p · r(Σ) / n
  double ratio = 0.0;            // bias / predicted_scale
};

struct ExperimentSummary {
  ExperimentConfig config;
  int df = 0;
  std::vector<ReplicationRecord> replications;
  double ks_distance = 0.0;
  std::string ks_reference;
  double empirical_coverage = 0.0;
  double mean_normalized = 0.0;
  double var_normalized = 0.0;
  double mean_raw = 0.0;
  std::vector<BiasRow> bias_table;
  std::vector<BoundRecord> bound_records;
  std::size_t bound_violations = 0;
  std::vector<OpnormSummary> opnorm;
  double runtime_seconds = 0.0;
};

/// Runs every replication with seed mix_seed(base_seed, rep) and aggregates in
/// replication order; results do not depend on thread count or scheduling.
ExperimentSummary run(const ExperimentConfig& config);

/// E[raw] − df per (n, p) grid point, true Fisher only. All n at the same p share
/// replication seeds, so the samples are nested.
std::vector<BiasRow> bias_sweep(const ExperimentConfig& config);

void write_replications_csv(std::ostream& out, std::span<const ReplicationRecord> records);
std::vector<ReplicationRecord> read_replications_csv(std::istream& in);
void write_bias_table_csv(std::ostream& out, std::span<const BiasRow> rows);
void write_bound_records_csv(std::ostream& out, std::span<const BoundRecord> records);
void write_opnorm_csv(std::ostream& out, std::span<const OpnormSummary> rows);

nlohmann::json summary_to_json(const ExperimentSummary& summary);

/// replications.csv and summary.json, plus the mode-specific tables.
void write_outputs(const ExperimentSummary& summary, const std::filesystem::path& out_dir);

inline constexpr const char* kReplicationsHeader = "rep,seed,raw,normalized,covered";

}  // namespace pcawald
