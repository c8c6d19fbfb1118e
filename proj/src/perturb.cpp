#include "pcawald/perturb.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "pcawald/errors.hpp"
#include "pcawald/linops.hpp"
#include "pcawald/parallel.hpp"
#include "pcawald/random.hpp"
#include "pcawald/sampling.hpp"

namespace pcawald {

namespace {

void require_symmetric_perturbation(const CovarianceModel& model, const Matrix& e) {
  if (e.rows() != model.dim() || e.cols() != model.dim()) {
    throw DimensionMismatchError("perturbation must be p x p");
  }
  const double scale = std::max(1.0, e.cwiseAbs().maxCoeff());
  if (max_asymmetry(e) > 1e-10 * scale) throw std::invalid_argument("perturbation must be symmetric");
}

BoundCheck make_check(std::string_view name, double achieved, double bound) {
  BoundCheck c{name, achieved, bound, 0.0, true};
  c.ratio = bound > 0.0 ? achieved / bound : (achieved > 0.0 ? INFINITY : 0.0);
  c.pass = achieved <= bound * (1.0 + kBoundTolerance);
  return c;
}

double log_uniform(CounterRng& rng, double lo, double hi) {
  return std::exp(std::log(lo) + rng.next_uniform() * (std::log(hi) - std::log(lo)));
}

}  // namespace

PerturbedProjector perturbed_projector(const CovarianceModel& model, const ClusterIndex& r, const Matrix& e) {
  require_symmetric_perturbation(model, e);
  PerturbedProjector out;
  if (model.num_clusters() > 1) {
    out.large_perturbation = symmetric_operator_norm(e) >= spectral_gap(model, r) / 2.0;
  }
  if (is_zero(e)) {
    out.projector = projector(model, r);
    return out;
  }
  // Work in the eigenbasis of Σ, where Σ is exactly diagonal.
  const Matrix& basis = model.basis();
  Matrix rotated = basis.transpose() * e * basis;
  rotated = 0.5 * (rotated + rotated.transpose());
  rotated.diagonal() += model.eigenvalues();
  const auto eig = eigh_descending(rotated);
  out.projector = gram_outer(basis * eig.vectors.middleCols(r.first(), r.size()));
  return out;
}

Matrix linear_term(const CovarianceModel& model, const ClusterIndex& r, const Matrix& e) {
  require_symmetric_perturbation(model, e);
  const Matrix c = resolvent(model, r);
  const Matrix p = projector(model, r);
  const Matrix half = c * e * p;
  return half + half.transpose();
}

Matrix second_order_term(const CovarianceModel& model, const ClusterIndex& r, const Matrix& e) {
  require_symmetric_perturbation(model, e);
  const Matrix c = resolvent(model, r);
  const Matrix p = projector(model, r);
  const Matrix c2 = c * c;
  const Matrix ec = e * c;
  const Matrix ep = e * p;
  const Matrix pec = p * ec;
  // P E C E C and its transpose C E C E P
  const Matrix a = pec * ec;
  // P E P E C² and its transpose C² E P E P
  const Matrix b = p * ep * e * c2;
  Matrix z = a + a.transpose() + c * ep * ec - (b + b.transpose()) - p * e * c2 * ep;
  return 0.5 * (z + z.transpose());
}

PerturbationExpansion expand(const CovarianceModel& model, const ClusterIndex& r, const Matrix& e) {
  PerturbationExpansion x;
  x.e = e;
  x.gap = spectral_gap(model, r);
  x.p_r = projector(model, r);
  auto tilde = perturbed_projector(model, r, e);
  x.p_tilde = std::move(tilde.projector);
  x.large_perturbation = tilde.large_perturbation;
  x.linear = linear_term(model, r, e);
  x.second_order = second_order_term(model, r, e);
  const Matrix difference = x.p_tilde - x.p_r;
  x.remainder = difference - x.linear;
  x.third_order = x.remainder - x.second_order;
  x.norms.e = symmetric_operator_norm(e);
  x.norms.difference = symmetric_operator_norm(difference);
  x.norms.linear = symmetric_operator_norm(x.linear);
  x.norms.second_order = symmetric_operator_norm(x.second_order);
  x.norms.remainder = symmetric_operator_norm(x.remainder);
  x.norms.third_order = symmetric_operator_norm(x.third_order);
  return x;
}

BoundReport check_bounds(const PerturbationExpansion& x) {
  const double rel = x.norms.e / x.gap;
  BoundReport report;
  report.projector = make_check("projector", x.norms.difference, kProjectorBound * rel);
  report.remainder = make_check("remainder", x.norms.remainder, kRemainderBound * rel * rel);
  report.third_order = make_check("third_order", x.norms.third_order, kThirdOrderBound * rel * rel * rel);
  const double sharp = kSharpThirdOrderBound * rel * rel * rel;
  report.sharp_third_order_ratio = sharp > 0.0 ? x.norms.third_order / sharp : 0.0;
  return report;
}

std::string_view ensemble_name(Ensemble ensemble) {
  switch (ensemble) {
    case Ensemble::symmetric_gaussian: return "symmetric_gaussian";
    case Ensemble::wishart_difference: return "wishart_difference";
    case Ensemble::rank_one_aligned: return "rank_one_aligned";
  }
  return "unknown";
}

Matrix symmetric_gaussian_perturbation(int p, double norm, std::uint64_t seed) {
  CounterRng rng(seed);
  Matrix g(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) g(i, j) = rng.next_gaussian();
  Matrix e = 0.5 * (g + g.transpose());
  return e * (norm / symmetric_operator_norm(e));
}

Matrix wishart_perturbation(const CovarianceModel& model, int n, std::uint64_t seed) {
  Matrix e = sample_covariance(model, n, seed) - model.dense();
  return 0.5 * (e + e.transpose());
}

Matrix rank_one_aligned_perturbation(const CovarianceModel& model, const ClusterIndex& r, double norm,
                                     std::uint64_t seed) {
  const double gap = spectral_gap(model, r);
  CounterRng rng(seed);
  const double lr = model.eigenvalue(r.rank());
  // Neighbouring cluster that attains the gap.
  int neighbour = r.rank() == 1 ? 2 : r.rank() - 1;
  if (r.rank() < model.num_clusters() && std::abs(model.eigenvalue(r.rank() + 1) - lr) == gap) {
    neighbour = r.rank() + 1;
  }
  const auto other = model.cluster(neighbour);
  const auto pick = [&rng](const ClusterIndex& c) {
    return c.first() + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(c.size()));
  };
  const int i = pick(r);
  const int j = pick(other);
  const double phi = 2.0 * std::numbers::pi * rng.next_uniform();
  const Vector v = std::cos(phi) * model.basis().col(i) + std::sin(phi) * model.basis().col(j);
  const double sign = (rng.next_u64() & 1U) ? 1.0 : -1.0;
  return gram_outer(v) * (sign * norm);
}

Matrix draw_perturbation(Ensemble ensemble, const CovarianceModel& model, const ClusterIndex& r,
                         std::uint64_t seed) {
  CounterRng rng(seed);
  const std::uint64_t child = rng.next_u64();
  switch (ensemble) {
    case Ensemble::symmetric_gaussian:
      return symmetric_gaussian_perturbation(model.dim(), log_uniform(rng, 1e-3, 2.0) * spectral_gap(model, r),
                                             child);
    case Ensemble::wishart_difference:
      return wishart_perturbation(model, static_cast<int>(std::lround(log_uniform(rng, 2.0, 5000.0))), child);
    case Ensemble::rank_one_aligned:
      return rank_one_aligned_perturbation(model, r, log_uniform(rng, 1e-3, 2.0) * spectral_gap(model, r), child);
  }
  throw std::invalid_argument("unknown ensemble");
}

std::vector<BoundRecord> bound_sweep(const CovarianceModel& model, std::span<const int> ranks, int count,
                                     std::uint64_t seed) {
  if (ranks.empty()) throw std::invalid_argument("bound_sweep: no cluster ranks given");
  if (count < 0) throw std::invalid_argument("bound_sweep: negative count");
  for (int rank : ranks) (void)spectral_gap(model, model.cluster(rank));
  std::vector<BoundRecord> records(static_cast<std::size_t>(count));
  parallel_for(records.size(), [&](std::size_t i) {
    const auto ensemble = static_cast<Ensemble>(i % 3);
    const int rank = ranks[(i / 3) % ranks.size()];
    const auto r = model.cluster(rank);
    const Matrix e = draw_perturbation(ensemble, model, r, mix_seed(seed, i));
    const auto expansion = expand(model, r, e);
    records[i] = BoundRecord{i, ensemble, rank, expansion.norms.e, check_bounds(expansion)};
  });
  return records;
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (count < 2 || !(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("log_spaced: bad range");
  std::vector<double> out(static_cast<std::size_t>(count));
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int k = 0; k < count; ++k) out[static_cast<std::size_t>(k)] = std::pow(10.0, a + (b - a) * k / (count - 1));
  return out;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 paired points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

OrderOfAccuracy order_of_accuracy(const CovarianceModel& model, const ClusterIndex& r, const Matrix& direction,
                                  std::span<const double> t) {
  OrderOfAccuracy out;
  out.t.assign(t.begin(), t.end());
  for (double scale : t) {
    const auto x = expand(model, r, scale * direction);
    out.remainder_norm.push_back(x.norms.remainder);
    out.third_order_norm.push_back(x.norms.third_order);
  }
  out.remainder_slope = loglog_slope(out.t, out.remainder_norm);
  out.third_order_slope = loglog_slope(out.t, out.third_order_norm);
  return out;
}

OpnormSummary opnorm_concentration_check(const CovarianceModel& model, int n, int reps, std::uint64_t seed) {
  const double rank = effective_rank(model);
  if (!(rank < n)) throw PreconditionError("opnorm check needs r(Sigma) < n");
  if (reps < 100) throw PreconditionError("opnorm check needs reps >= 100");
  const Matrix sigma = model.dense();
  std::vector<double> norms(static_cast<std::size_t>(reps));
  parallel_for(norms.size(), [&](std::size_t i) {
    const Matrix e = sample_covariance(model, n, mix_seed(seed, i)) - sigma;
    norms[i] = symmetric_operator_norm(0.5 * (e + e.transpose()));
  });
  OpnormSummary s;
  s.n = n;
  s.reps = reps;
  s.mean_norm = std::accumulate(norms.begin(), norms.end(), 0.0) / reps;
  double ss = 0.0;
  for (double v : norms) ss += (v - s.mean_norm) * (v - s.mean_norm);
  s.norm_se = std::sqrt(ss / (reps - 1) / reps);
  s.scale = model.operator_norm() * std::sqrt(rank / n);
  s.ratio = s.mean_norm / s.scale;
  s.ratio_se = s.norm_se / s.scale;
  return s;
}

}  // namespace pcawald
