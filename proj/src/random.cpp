#include "pcawald/random.hpp"

#include <array>
#include <cmath>

namespace pcawald {

namespace {

// Ziggurat tables after Marsaglia & Tsang (2000) in Doornik's (2005) layout:
// layer i is a box of half-width x[i]; a point with |u| < x[i+1]/x[i] lies
// under the density without further tests.
constexpr int kLayers = 128;
constexpr double kTailStart = 3.442619855899;
constexpr double kLayerArea = 9.91256303526217e-3;

struct ZigguratTables {
  std::array<double, kLayers + 1> x{};
  std::array<double, kLayers> ratio{};

  ZigguratTables() {
    double f = std::exp(-0.5 * kTailStart * kTailStart);
    x[0] = kLayerArea / f;  // base layer, including the tail, as an equal-area box
    x[1] = kTailStart;
    x[kLayers] = 0.0;
    for (int i = 2; i < kLayers; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kLayerArea / x[i - 1] + f));
      f = std::exp(-0.5 * x[i] * x[i]);
    }
    for (int i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

const ZigguratTables& tables() {
  static const ZigguratTables t;
  return t;
}

}  // namespace

double CounterRng::next_gaussian() noexcept {
  const auto& t = tables();
  for (;;) {
    const std::uint64_t w = next_u64();
    const int i = static_cast<int>(w & (kLayers - 1));
    // Top 53 bits give u uniform on (−1, 1); the low 7 bits chose the layer.
    const double u = 2.0 * ((static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53) - 1.0;
    if (std::abs(u) < t.ratio[i]) return u * t.x[i];
    if (i == 0) {
      // Tail beyond kTailStart (Marsaglia 1964).
      double a, b;
      do {
        a = std::log(next_uniform()) / kTailStart;
        b = std::log(next_uniform());
      } while (-2.0 * b < a * a);
      return u < 0.0 ? a - kTailStart : kTailStart - a;
    }
    const double x = u * t.x[i];
    const double f0 = std::exp(-0.5 * (t.x[i] * t.x[i] - x * x));
    const double f1 = std::exp(-0.5 * (t.x[i + 1] * t.x[i + 1] - x * x));
    if (f1 + next_uniform() * (f0 - f1) < 1.0) return x;
  }
}

void CounterRng::fill_gaussian(std::span<double> out) noexcept {
  for (double& v : out) v = next_gaussian();
}

}  // namespace pcawald
