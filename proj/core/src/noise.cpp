#include "normclash/noise.hpp"

#include <algorithm>
#include <stdexcept>

namespace normclash {

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::none: return "none";
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::uniform: return "uniform";
    case NoiseKind::mni_conv: return "mni-conv";
    case NoiseKind::mni_mix: return "mni-mix";
  }
  return "none";
}

NoiseKind parse_noise_kind(std::string_view name) {
  for (auto k : {NoiseKind::none, NoiseKind::gaussian, NoiseKind::uniform, NoiseKind::mni_conv,
                 NoiseKind::mni_mix}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown noise kind '" + std::string(name) + "'");
}

double NoiseSpec::variance() const noexcept {
  const double g = sigma_gauss * sigma_gauss;
  const double u = sigma_uniform * sigma_uniform / 3.0;
  switch (kind) {
    case NoiseKind::none: return 0.0;
    case NoiseKind::gaussian: return g;
    case NoiseKind::uniform: return u;
    case NoiseKind::mni_conv: return g + u;
    case NoiseKind::mni_mix: return 0.5 * (g + u);
  }
  return 0.0;
}

void NoiseSpec::validate() const {
  const bool needs_g = kind == NoiseKind::gaussian || kind == NoiseKind::mni_conv || kind == NoiseKind::mni_mix;
  const bool needs_u = kind == NoiseKind::uniform || kind == NoiseKind::mni_conv || kind == NoiseKind::mni_mix;
  if (needs_g && !(sigma_gauss > 0.0)) {
    throw std::invalid_argument("noise " + std::string(to_string(kind)) + ": sigma_gauss must be > 0");
  }
  if (needs_u && !(sigma_uniform > 0.0)) {
    throw std::invalid_argument("noise " + std::string(to_string(kind)) + ": sigma_uniform must be > 0");
  }
}

void sample_noise(const NoiseSpec& spec, std::span<double> out, Rng& rng) {
  const double s1 = spec.sigma_gauss;
  const double s2 = spec.sigma_uniform;
  auto uniform = [&] { return s2 * (2.0 * uniform01(rng) - 1.0); };
  switch (spec.kind) {
    case NoiseKind::none:
      std::fill(out.begin(), out.end(), 0.0);
      break;
    case NoiseKind::gaussian:
      for (double& v : out) v = s1 * standard_normal(rng);
      break;
    case NoiseKind::uniform:
      for (double& v : out) v = uniform();
      break;
    case NoiseKind::mni_conv:
      for (double& v : out) {
        const double g = s1 * standard_normal(rng);
        v = g + uniform();
      }
      break;
    case NoiseKind::mni_mix:
      for (double& v : out) v = uniform01(rng) < 0.5 ? s1 * standard_normal(rng) : uniform();
      break;
  }
}

Tensor sample_noise(const NoiseSpec& spec, const Shape& shape, Rng& rng) {
  Tensor t(shape);
  sample_noise(spec, t.data(), rng);
  return t;
}

}  // namespace normclash
