#include <gtest/gtest.h>

#include <cmath>

#include "normclash/noise.hpp"

using namespace normclash;

namespace {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double max_abs = 0.0;
};

Moments moments(const NoiseSpec& spec, std::size_t n, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  std::vector<double> v(n);
  sample_noise(spec, v, rng);
  Moments m;
  for (double x : v) {
    m.mean += x;
    m.max_abs = std::max(m.max_abs, std::abs(x));
  }
  m.mean /= static_cast<double>(n);
  for (double x : v) m.variance += (x - m.mean) * (x - m.mean);
  m.variance /= static_cast<double>(n - 1);
  return m;
}

}  // namespace

TEST(Noise, NoneIsZero) {
  Rng rng = make_stream(1, 0);
  const Tensor t = sample_noise(NoiseSpec::none(), {3, 4}, rng);
  EXPECT_EQ(t, Tensor({3, 4}, 0.0));
}

TEST(Noise, GaussianVariance) {
  const auto m = moments(NoiseSpec::gaussian(0.25), 1000000, 2);
  EXPECT_NEAR(m.variance, 0.0625, 0.0005);
  EXPECT_NEAR(m.mean, 0.0, 0.001);
}

TEST(Noise, UniformVarianceAndSupport) {
  const auto m = moments(NoiseSpec::uniform(0.2), 1000000, 3);
  EXPECT_NEAR(m.variance, 0.04 / 3.0, 0.0005);
  EXPECT_NEAR(m.mean, 0.0, 0.001);
  EXPECT_LE(m.max_abs, 0.2);
}

TEST(Noise, MniConvolutionVariance) {
  const auto m = moments(NoiseSpec::mni_conv(0.25, 0.2), 1000000, 4);
  EXPECT_NEAR(m.variance, 0.0625 + 0.04 / 3.0, 0.001);
  EXPECT_NEAR(m.mean, 0.0, 0.001);
}

TEST(Noise, MniMixtureVariance) {
  const auto m = moments(NoiseSpec::mni_mix(0.25, 0.2), 1000000, 5);
  EXPECT_NEAR(m.variance, 0.0625 / 2 + 0.04 / 6, 0.001);
  EXPECT_NEAR(m.mean, 0.0, 0.001);
}

TEST(Noise, AnalyticVarianceTable) {
  EXPECT_DOUBLE_EQ(NoiseSpec::gaussian(0.25).variance(), 0.0625);
  EXPECT_NEAR(NoiseSpec::mni_conv(0.25, 0.2).variance(), 0.0758333, 1e-6);
  EXPECT_NEAR(NoiseSpec::mni_mix(0.25, 0.2).variance(), 0.0379167, 1e-6);
  EXPECT_EQ(NoiseSpec::none().variance(), 0.0);
}

TEST(Noise, ValidationAndNames) {
  EXPECT_THROW(NoiseSpec::gaussian(0.0).validate(), std::invalid_argument);
  EXPECT_THROW(NoiseSpec::mni_mix(0.25, -1.0).validate(), std::invalid_argument);
  EXPECT_NO_THROW(NoiseSpec::none().validate());
  for (auto k : {NoiseKind::none, NoiseKind::gaussian, NoiseKind::uniform, NoiseKind::mni_conv, NoiseKind::mni_mix}) {
    EXPECT_EQ(parse_noise_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_noise_kind("laplace"), std::invalid_argument);
}

TEST(Noise, SeededDraws) {
  Rng a = make_stream(9, 1), b = make_stream(9, 1);
  EXPECT_EQ(sample_noise(NoiseSpec::mni_mix(0.25, 0.2), {5, 5}, a), sample_noise(NoiseSpec::mni_mix(0.25, 0.2), {5, 5}, b));
}
