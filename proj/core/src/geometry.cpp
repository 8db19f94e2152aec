#include "normclash/geometry.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "normclash/parallel.hpp"
#include "normclash/rng.hpp"

namespace normclash::geometry {
namespace {

constexpr std::size_t kShardSize = 1 << 16;
constexpr double kZ99 = 2.5758293035489004;

}  // namespace

double log_gamma(double z) {
  static constexpr std::array<double, 9> kCoef = {
      0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,   12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  if (!(z > 0.0)) throw std::domain_error("log_gamma: argument must be positive");
  if (z < 0.5) {
    // Gamma(z) Gamma(1 - z) = pi / sin(pi z)
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * z)) - log_gamma(1.0 - z);
  }
  const double x = z - 1.0;
  double a = kCoef[0];
  const double t = x + 7.5;
  for (std::size_t i = 1; i < kCoef.size(); ++i) a += kCoef[i] / (x + static_cast<double>(i));
  return 0.5 * std::log(2.0 * std::numbers::pi) + (x + 0.5) * std::log(t) - t + std::log(a);
}

void BallSpec::validate() const {
  if (dim == 0) throw std::invalid_argument("ball: dimension must be >= 1");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw std::invalid_argument("ball: radius must be finite and > 0");
}

double log_volume(const BallSpec& ball) {
  ball.validate();
  const auto d = static_cast<double>(ball.dim);
  if (ball.norm == Norm::linf) return d * std::log(2.0 * ball.radius);
  return 0.5 * d * std::log(std::numbers::pi) + d * std::log(ball.radius) - log_gamma(0.5 * d + 1.0);
}

double equal_volume_radius(std::size_t d) {
  if (d == 0) throw std::invalid_argument("equal_volume_radius: d must be >= 1");
  const auto dd = static_cast<double>(d);
  return 2.0 / std::sqrt(std::numbers::pi) * std::exp(log_gamma(0.5 * dd + 1.0) / dd);
}

double calibrate_epsilon(double eps_inf, std::size_t d) {
  if (!(eps_inf > 0.0)) throw std::invalid_argument("calibrate_epsilon: eps_inf must be > 0");
  return eps_inf * equal_volume_radius(d);
}

double corner_distance(double eps_inf, std::size_t d) {
  if (!(eps_inf > 0.0) || d == 0) throw std::invalid_argument("corner_distance: inputs must be positive");
  return eps_inf * std::sqrt(static_cast<double>(d));
}

double stirling_ratio_limit() { return std::sqrt(2.0 / (std::numbers::pi * std::numbers::e)); }

std::string_view to_string(BoundMethod m) {
  switch (m) {
    case BoundMethod::monte_carlo: return "monte-carlo";
    case BoundMethod::hoeffding_bound: return "hoeffding-bound";
    case BoundMethod::asymptotic_bound: return "asymptotic-bound";
  }
  return "monte-carlo";
}

IntersectionEstimate hoeffding_bound(std::size_t d) {
  if (d == 0) throw std::invalid_argument("hoeffding_bound: d must be >= 1");
  IntersectionEstimate e;
  e.method = BoundMethod::hoeffding_bound;
  const auto dd = static_cast<double>(d);
  const double r = equal_volume_radius(d);
  const double gap = dd / 3.0 - r * r;
  if (gap <= 0.0) {
    e.trivial = true;
    e.ratio = 1.0;
    e.log10_value = 0.0;
    return e;
  }
  e.log10_value = -(gap * gap) / (dd * std::numbers::ln10);
  e.ratio = std::pow(10.0, e.log10_value);
  return e;
}

IntersectionEstimate asymptotic_bound(std::size_t d) {
  if (d == 0) throw std::invalid_argument("asymptotic_bound: d must be >= 1");
  IntersectionEstimate e;
  e.method = BoundMethod::asymptotic_bound;
  const double c = 2.0 / (std::numbers::pi * std::numbers::e) - 2.0 / 3.0;
  e.log10_value = -(c * c) * static_cast<double>(d) / std::numbers::ln10;
  e.ratio = std::pow(10.0, e.log10_value);
  return e;
}

IntersectionEstimate monte_carlo_intersection(std::size_t d, std::size_t samples, std::uint64_t seed,
                                              std::size_t threads) {
  if (d == 0) throw std::invalid_argument("monte_carlo_intersection: d must be >= 1");
  if (samples < 10000) throw std::invalid_argument("monte_carlo_intersection: need at least 1e4 samples");
  const double r2 = equal_volume_radius(d);
  const double r2sq = r2 * r2;
  const std::size_t shards = (samples + kShardSize - 1) / kShardSize;
  std::vector<std::size_t> hits(shards, 0);

  parallel_for(shards, threads, [&](std::size_t s) {
    Rng rng = make_stream(seed, s, 0x6e0);
    const std::size_t count = std::min(kShardSize, samples - s * kShardSize);
    std::size_t h = 0;
    for (std::size_t k = 0; k < count; ++k) {
      // A sample is rejected as soon as its partial norm leaves the ball;
      // the next sample then starts from the following draw.
      double acc = 0.0;
      std::size_t j = 0;
      for (; j < d && acc <= r2sq; ++j) {
        const double u = 2.0 * uniform01(rng) - 1.0;
        acc += u * u;
      }
      if (acc <= r2sq) ++h;
    }
    hits[s] = h;
  });

  IntersectionEstimate e;
  e.method = BoundMethod::monte_carlo;
  e.samples = samples;
  for (auto h : hits) e.hits += h;
  const double n = static_cast<double>(samples);
  e.ratio = static_cast<double>(e.hits) / n;
  e.half_width = kZ99 * std::sqrt(e.ratio * (1.0 - e.ratio) / n);
  e.log10_value = e.hits ? std::log10(e.ratio) : -std::numeric_limits<double>::infinity();
  return e;
}

}  // namespace normclash::geometry
