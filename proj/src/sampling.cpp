#include "pcawald/sampling.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <vector>

#include "pcawald/errors.hpp"
#include "pcawald/io.hpp"
#include "pcawald/random.hpp"

namespace pcawald {

namespace {

std::filesystem::path with_suffix(std::filesystem::path stem, const char* suffix) {
  stem += suffix;
  return stem;
}

}  // namespace

SampleBatch sample(const CovarianceModel& model, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  const int p = model.dim();
  // Row-major draw order so the stream layout does not depend on storage order.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> z(n, p);
  CounterRng rng(seed);
  rng.fill_gaussian({z.data(), static_cast<std::size_t>(z.size())});
  const Matrix root = matrix_power(model, 0.5);
  SampleBatch batch;
  batch.n = n;
  batch.p = p;
  batch.data = z * root;  // root is symmetric, so row i is (Σ^{1/2} Z_i)ᵀ
  batch.seed = seed;
  batch.model = model.spec();
  return batch;
}

Matrix empirical_covariance(const Matrix& data) {
  if (data.rows() < 1) throw std::invalid_argument("empirical_covariance: empty batch");
  const auto p = data.cols();
  Matrix out = Matrix::Zero(p, p);
  out.selfadjointView<Eigen::Lower>().rankUpdate(data.transpose(), 1.0 / static_cast<double>(data.rows()));
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

Matrix empirical_covariance(const SampleBatch& batch) { return empirical_covariance(batch.data); }

std::vector<Matrix> sample_covariance_prefixes(const CovarianceModel& model, std::span<const int> ns,
                                               std::uint64_t seed) {
  if (ns.empty()) throw std::invalid_argument("sample_covariance_prefixes: no sample sizes");
  for (std::size_t k = 0; k < ns.size(); ++k) {
    if (ns[k] < 1 || (k > 0 && ns[k] <= ns[k - 1])) {
      throw std::invalid_argument("sample_covariance_prefixes: sizes must be positive and increasing");
    }
  }
  constexpr int kBlockRows = 256;
  const int p = model.dim();
  const Matrix root = matrix_power(model, 0.5);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> z(kBlockRows, p);
  Matrix gram = Matrix::Zero(p, p);
  CounterRng rng(seed);
  std::vector<Matrix> out;
  out.reserve(ns.size());
  int done = 0;
  for (int target : ns) {
    while (done < target) {
      const int rows = std::min(kBlockRows, target - done);
      rng.fill_gaussian({z.data(), static_cast<std::size_t>(rows) * static_cast<std::size_t>(p)});
      gram.selfadjointView<Eigen::Lower>().rankUpdate(z.topRows(rows).transpose());
      done += rows;
    }
    Matrix g = gram.selfadjointView<Eigen::Lower>();
    Matrix sigma_hat = root * (g / static_cast<double>(target)) * root;
    sigma_hat = (0.5 * (sigma_hat + sigma_hat.transpose())).eval();
    out.push_back(std::move(sigma_hat));
  }
  return out;
}

Matrix sample_covariance(const CovarianceModel& model, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_covariance: n must be >= 1");
  const int sizes[] = {n};
  return std::move(sample_covariance_prefixes(model, sizes, seed).front());
}

EmpiricalSpectral empirical_spectral(const Matrix& sigma_hat, const ClusterIndex& delta_r) {
  require_square(sigma_hat, "empirical_spectral");
  if (delta_r.end() > sigma_hat.rows()) {
    throw DimensionMismatchError("empirical_spectral: cluster positions exceed p");
  }
  const double scale = std::max(1.0, sigma_hat.cwiseAbs().maxCoeff());
  if (max_asymmetry(sigma_hat) > 1e-10 * scale) {
    throw std::invalid_argument("empirical_spectral: input is not symmetric");
  }
  auto eig = eigh_descending(sigma_hat);
  Matrix p_hat = gram_outer(eig.vectors.middleCols(delta_r.first(), delta_r.size()));
  const double lambda_hat_r = eig.values(delta_r.first());
  const double lambda_hat_min = eig.values(eig.values.size() - 1);
  return EmpiricalSpectral{sigma_hat, std::move(eig), delta_r, std::move(p_hat), lambda_hat_r, lambda_hat_min};
}

void save_batch(const SampleBatch& batch, const std::filesystem::path& stem) {
  static_assert(std::endian::native == std::endian::little, "batch files are little-endian");
  {
    auto out = open_output(with_suffix(stem, ".bin"));
    std::vector<double> row(static_cast<std::size_t>(batch.p));
    for (int i = 0; i < batch.n; ++i) {
      for (int j = 0; j < batch.p; ++j) row[static_cast<std::size_t>(j)] = batch.data(i, j);
      out.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
  }
  nlohmann::json sidecar{{"n", batch.n}, {"p", batch.p}, {"seed", batch.seed},
                         {"model", to_json(batch.model)}, {"format", "float64-le-row-major"}};
  auto out = open_output(with_suffix(stem, ".json"));
  out << sidecar.dump(2) << '\n';
}

SampleBatch load_batch(const std::filesystem::path& stem) {
  std::ifstream meta_in(with_suffix(stem, ".json"));
  if (!meta_in) throw std::runtime_error("cannot open " + with_suffix(stem, ".json").string());
  const auto meta = nlohmann::json::parse(meta_in);
  SampleBatch batch;
  batch.n = meta.at("n").get<int>();
  batch.p = meta.at("p").get<int>();
  batch.seed = meta.at("seed").get<std::uint64_t>();
  batch.model = model_spec_from_json(meta.at("model"));
  std::ifstream bin(with_suffix(stem, ".bin"), std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open " + with_suffix(stem, ".bin").string());
  batch.data.resize(batch.n, batch.p);
  std::vector<double> row(static_cast<std::size_t>(batch.p));
  for (int i = 0; i < batch.n; ++i) {
    bin.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!bin) throw std::runtime_error("batch file truncated");
    for (int j = 0; j < batch.p; ++j) batch.data(i, j) = row[static_cast<std::size_t>(j)];
  }
  return batch;
}

}  // namespace pcawald
