#pragma once

#include <span>
#include <string>
#include <string_view>

#include "normclash/rng.hpp"
#include "normclash/tensor.hpp"

namespace normclash {

enum class NoiseKind { none, gaussian, uniform, mni_conv, mni_mix };

std::string_view to_string(NoiseKind kind);
// Throws std::invalid_argument on unknown names.
NoiseKind parse_noise_kind(std::string_view name);

// Input-noise distribution. Coordinates are i.i.d.:
//   gaussian  N(0, s1^2)
//   uniform   U(-s2, s2)
//   mni_conv  N(0, s1^2) + U(-s2, s2)             (density convolution)
//   mni_mix   N(0, s1^2) or U(-s2, s2), each w.p. 1/2
struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double sigma_gauss = 0.0;
  double sigma_uniform = 0.0;

  static NoiseSpec none() { return {}; }
  static NoiseSpec gaussian(double s1) { return {NoiseKind::gaussian, s1, 0.0}; }
  static NoiseSpec uniform(double s2) { return {NoiseKind::uniform, 0.0, s2}; }
  static NoiseSpec mni_conv(double s1, double s2) { return {NoiseKind::mni_conv, s1, s2}; }
  static NoiseSpec mni_mix(double s1, double s2) { return {NoiseKind::mni_mix, s1, s2}; }

  bool active() const noexcept { return kind != NoiseKind::none; }
  // Per-coordinate variance of the distribution.
  double variance() const noexcept;
  void validate() const;

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

void sample_noise(const NoiseSpec& spec, std::span<double> out, Rng& rng);
Tensor sample_noise(const NoiseSpec& spec, const Shape& shape, Rng& rng);

}  // namespace normclash
