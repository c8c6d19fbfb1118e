#include "pcawald/covmodel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "pcawald/errors.hpp"
#include "pcawald/io.hpp"
#include "pcawald/random.hpp"

namespace pcawald {

namespace {

constexpr double kOrthogonalityTol = 1e-10;

void require_dimension(int p) {
  if (p < 1) throw std::invalid_argument("dimension p must be >= 1, got " + std::to_string(p));
}

// Sorts descending and merges exactly equal eigenvalues.
std::vector<Cluster> merge_clusters(std::vector<Cluster> raw) {
  std::stable_sort(raw.begin(), raw.end(),
                   [](const Cluster& a, const Cluster& b) { return a.eigenvalue > b.eigenvalue; });
  std::vector<Cluster> merged;
  for (const auto& c : raw) {
    if (!merged.empty() && merged.back().eigenvalue == c.eigenvalue) {
      merged.back().multiplicity += c.multiplicity;
    } else {
      merged.push_back(c);
    }
  }
  return merged;
}

std::vector<Cluster> spiked_clusters(std::span<const double> spikes, double sigma2, int p) {
  require_dimension(p);
  if (!(sigma2 > 0.0)) throw std::invalid_argument("spiked model: sigma2 must be positive");
  if (static_cast<int>(spikes.size()) >= p) {
    throw std::invalid_argument("spiked model: number of spikes must be < p");
  }
  std::vector<Cluster> raw;
  for (double s : spikes) {
    if (!(s > 0.0)) throw std::invalid_argument("spiked model: spikes must be positive");
    raw.push_back({s + sigma2, 1});
  }
  raw.push_back({sigma2, p - static_cast<int>(spikes.size())});
  return merge_clusters(std::move(raw));
}

std::vector<Cluster> decay_clusters(double alpha, int p) {
  require_dimension(p);
  if (!(alpha >= 0.0)) throw std::invalid_argument("decay model: alpha must be nonnegative");
  std::vector<Cluster> raw;
  raw.reserve(static_cast<std::size_t>(p));
  for (int i = 1; i <= p; ++i) raw.push_back({std::pow(static_cast<double>(i), -alpha), 1});
  return merge_clusters(std::move(raw));
}

std::vector<Cluster> custom_clusters(std::vector<Cluster> clusters) {
  if (clusters.empty()) throw std::invalid_argument("custom model: no clusters given");
  for (const auto& c : clusters) {
    if (!(c.eigenvalue > 0.0) || c.multiplicity < 1) {
      throw std::invalid_argument("custom model: eigenvalues must be positive and multiplicities >= 1");
    }
  }
  return merge_clusters(std::move(clusters));
}

int total_multiplicity(const std::vector<Cluster>& clusters) {
  int total = 0;
  for (const auto& c : clusters) total += c.multiplicity;
  return total;
}

Matrix basis_for(const ModelSpec& spec) {
  if (spec.basis) return *spec.basis;
  if (spec.seed) return random_orthogonal(spec.p, *spec.seed);
  return identity_basis(spec.p);
}

const char* kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::spiked: return "spiked";
    case ModelKind::decay: return "decay";
    case ModelKind::custom: return "custom";
  }
  return "custom";
}

}  // namespace

ClusterIndex::ClusterIndex(int rank, int first, int size) : rank_(rank), first_(first), size_(size) {
  if (rank < 1 || first < 0 || size < 1) {
    throw std::invalid_argument("ClusterIndex: need rank >= 1, first >= 0, size >= 1");
  }
}

CovarianceModel::CovarianceModel(std::vector<Cluster> clusters, Matrix basis, ModelSpec spec)
    : clusters_(std::move(clusters)), basis_(std::move(basis)), spec_(std::move(spec)) {
  if (clusters_.empty()) throw std::invalid_argument("CovarianceModel: no clusters");
  require_square(basis_, "CovarianceModel basis");
  const int p = static_cast<int>(basis_.rows());
  if (total_multiplicity(clusters_) != p) {
    throw std::invalid_argument("CovarianceModel: multiplicities sum to " +
                                std::to_string(total_multiplicity(clusters_)) + ", expected p = " +
                                std::to_string(p));
  }
  for (std::size_t s = 0; s < clusters_.size(); ++s) {
    if (!(clusters_[s].eigenvalue > 0.0) || clusters_[s].multiplicity < 1) {
      throw std::invalid_argument("CovarianceModel: eigenvalues must be positive");
    }
    if (s > 0 && !(clusters_[s - 1].eigenvalue > clusters_[s].eigenvalue)) {
      throw std::invalid_argument("CovarianceModel: eigenvalues must be strictly descending");
    }
  }
  const double defect =
      (basis_.transpose() * basis_ - Matrix::Identity(p, p)).cwiseAbs().maxCoeff();
  if (defect > kOrthogonalityTol) {
    throw std::invalid_argument("CovarianceModel: basis is not orthogonal (defect " +
                                std::to_string(defect) + ")");
  }
  mu_.resize(p);
  int pos = 0;
  for (const auto& c : clusters_) {
    mu_.segment(pos, c.multiplicity).setConstant(c.eigenvalue);
    pos += c.multiplicity;
  }
  spec_.p = p;
}

ClusterIndex CovarianceModel::cluster(int rank) const {
  if (rank < 1 || rank > num_clusters()) {
    throw std::out_of_range("cluster rank " + std::to_string(rank) + " outside [1, " +
                            std::to_string(num_clusters()) + "]");
  }
  int first = 0;
  for (int s = 0; s < rank - 1; ++s) first += clusters_[static_cast<std::size_t>(s)].multiplicity;
  return ClusterIndex(rank, first, clusters_[static_cast<std::size_t>(rank - 1)].multiplicity);
}

double CovarianceModel::trace() const noexcept {
  double t = 0.0;
  for (const auto& c : clusters_) t += c.multiplicity * c.eigenvalue;
  return t;
}

Matrix CovarianceModel::dense() const {
  Matrix scaled = basis_ * mu_.asDiagonal();
  Matrix out = scaled * basis_.transpose();
  return 0.5 * (out + out.transpose());
}

Matrix identity_basis(int p) {
  require_dimension(p);
  return Matrix::Identity(p, p);
}

Matrix random_orthogonal(int p, std::uint64_t seed) {
  require_dimension(p);
  CounterRng rng(seed);
  Matrix g(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) g(i, j) = rng.next_gaussian();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (int j = 0; j < p; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

CovarianceModel make_spiked(std::span<const double> spikes, double sigma2, int p, std::uint64_t seed) {
  auto clusters = spiked_clusters(spikes, sigma2, p);
  ModelSpec spec{ModelKind::spiked, p, {spikes.begin(), spikes.end()}, sigma2, 0.0, {}, seed, {}};
  return CovarianceModel(std::move(clusters), random_orthogonal(p, seed), std::move(spec));
}

CovarianceModel make_spiked(std::span<const double> spikes, double sigma2, int p, const Matrix& basis) {
  auto clusters = spiked_clusters(spikes, sigma2, p);
  ModelSpec spec{ModelKind::spiked, p, {spikes.begin(), spikes.end()}, sigma2, 0.0, {}, {}, basis};
  return CovarianceModel(std::move(clusters), basis, std::move(spec));
}

CovarianceModel make_decay(double alpha, int p, std::uint64_t seed) {
  auto clusters = decay_clusters(alpha, p);
  ModelSpec spec{ModelKind::decay, p, {}, 1.0, alpha, {}, seed, {}};
  return CovarianceModel(std::move(clusters), random_orthogonal(p, seed), std::move(spec));
}

CovarianceModel make_decay(double alpha, int p, const Matrix& basis) {
  auto clusters = decay_clusters(alpha, p);
  ModelSpec spec{ModelKind::decay, p, {}, 1.0, alpha, {}, {}, basis};
  return CovarianceModel(std::move(clusters), basis, std::move(spec));
}

CovarianceModel make_custom(std::vector<Cluster> clusters, std::uint64_t seed) {
  auto merged = custom_clusters(std::move(clusters));
  const int p = total_multiplicity(merged);
  ModelSpec spec{ModelKind::custom, p, {}, 1.0, 0.0, merged, seed, {}};
  return CovarianceModel(merged, random_orthogonal(p, seed), std::move(spec));
}

CovarianceModel make_custom(std::vector<Cluster> clusters, const Matrix& basis) {
  auto merged = custom_clusters(std::move(clusters));
  const int p = total_multiplicity(merged);
  ModelSpec spec{ModelKind::custom, p, {}, 1.0, 0.0, merged, {}, basis};
  return CovarianceModel(merged, basis, std::move(spec));
}

CovarianceModel build_model(const ModelSpec& spec) {
  std::vector<Cluster> clusters;
  switch (spec.kind) {
    case ModelKind::spiked: clusters = spiked_clusters(spec.spikes, spec.sigma2, spec.p); break;
    case ModelKind::decay: clusters = decay_clusters(spec.alpha, spec.p); break;
    case ModelKind::custom:
      clusters = custom_clusters(spec.clusters);
      if (spec.p != 0 && spec.p != total_multiplicity(clusters)) {
        throw std::invalid_argument("custom model: p does not match the multiplicities");
      }
      break;
  }
  ModelSpec normalized = spec;
  normalized.p = total_multiplicity(clusters);
  Matrix basis = basis_for(normalized);
  return CovarianceModel(std::move(clusters), std::move(basis), std::move(normalized));
}

double effective_rank(const CovarianceModel& model) { return model.trace() / model.operator_norm(); }

double spectral_gap(const CovarianceModel& model, const ClusterIndex& r) {
  const int k = model.num_clusters();
  if (k < 2) throw GapUndefinedError("spectral gap undefined: model has a single eigenvalue cluster");
  if (r.rank() > k) throw std::out_of_range("cluster rank exceeds number of clusters");
  const auto& c = model.clusters();
  const auto idx = static_cast<std::size_t>(r.rank() - 1);
  if (r.rank() == 1) return c[0].eigenvalue - c[1].eigenvalue;
  if (r.rank() == k) return c[idx - 1].eigenvalue - c[idx].eigenvalue;
  return std::min(c[idx - 1].eigenvalue - c[idx].eigenvalue, c[idx].eigenvalue - c[idx + 1].eigenvalue);
}

Matrix projector(const CovarianceModel& model, const ClusterIndex& r) {
  if (r.end() > model.dim()) throw DimensionMismatchError("projector: cluster positions exceed p");
  return gram_outer(model.basis().middleCols(r.first(), r.size()));
}

Matrix matrix_power(const CovarianceModel& model, double exponent) {
  if (exponent < 0.0 && !(model.min_eigenvalue() > 0.0)) {
    throw NotInvertibleError("matrix_power: nonpositive eigenvalue with negative exponent");
  }
  EigenDecomposition eig{model.eigenvalues(), model.basis()};
  return spectral_function(eig, [exponent](double mu) { return std::pow(mu, exponent); });
}

nlohmann::json to_json(const ModelSpec& spec) {
  nlohmann::json params = nlohmann::json::object();
  switch (spec.kind) {
    case ModelKind::spiked:
      params["spikes"] = spec.spikes;
      params["sigma2"] = spec.sigma2;
      break;
    case ModelKind::decay: params["alpha"] = spec.alpha; break;
    case ModelKind::custom: {
      auto arr = nlohmann::json::array();
      for (const auto& c : spec.clusters) {
        arr.push_back({{"eigenvalue", c.eigenvalue}, {"multiplicity", c.multiplicity}});
      }
      params["clusters"] = arr;
      break;
    }
  }
  nlohmann::json doc{{"kind", kind_name(spec.kind)}, {"p", spec.p}, {"params", params}};
  doc["seed"] = spec.seed ? nlohmann::json(*spec.seed) : nlohmann::json(nullptr);
  if (spec.basis) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < spec.basis->rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(spec.basis->cols()));
      for (Eigen::Index j = 0; j < spec.basis->cols(); ++j) row[static_cast<std::size_t>(j)] = (*spec.basis)(i, j);
      rows.push_back(row);
    }
    doc["basis"] = rows;
  }
  return doc;
}

ModelSpec model_spec_from_json(const nlohmann::json& doc) {
  ModelSpec spec;
  const auto kind = doc.at("kind").get<std::string>();
  const auto& params = doc.contains("params") ? doc.at("params") : nlohmann::json::object();
  spec.p = doc.value("p", 0);
  if (kind == "spiked") {
    spec.kind = ModelKind::spiked;
    spec.spikes = params.at("spikes").get<std::vector<double>>();
    spec.sigma2 = params.value("sigma2", 1.0);
  } else if (kind == "decay") {
    spec.kind = ModelKind::decay;
    spec.alpha = params.at("alpha").get<double>();
  } else if (kind == "custom") {
    spec.kind = ModelKind::custom;
    for (const auto& c : params.at("clusters")) {
      spec.clusters.push_back({c.at("eigenvalue").get<double>(), c.at("multiplicity").get<int>()});
    }
  } else {
    throw std::invalid_argument("unknown model kind '" + kind + "'");
  }
  if (doc.contains("seed") && !doc.at("seed").is_null()) spec.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("basis")) {
    const auto& rows = doc.at("basis");
    const auto n = static_cast<Eigen::Index>(rows.size());
    Matrix b(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& row = rows.at(static_cast<std::size_t>(i));
      if (static_cast<Eigen::Index>(row.size()) != n) throw std::invalid_argument("basis must be square");
      for (Eigen::Index j = 0; j < n; ++j) b(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
    }
    spec.basis = std::move(b);
  }
  return spec;
}

void write_dense_csv(const CovarianceModel& model, const std::filesystem::path& path) {
  write_matrix_csv(path, model.dense());
}

}  // namespace pcawald
