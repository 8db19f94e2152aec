#include <gtest/gtest.h>

#include <cmath>

#include "normclash/parallel.hpp"
#include "normclash/rng.hpp"

using namespace normclash;

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Rng a = make_stream(1, 2, 3), b = make_stream(1, 2, 3), c = make_stream(1, 2, 4), d = make_stream(1, 3, 3);
  const auto va = a();
  EXPECT_EQ(va, b());
  EXPECT_NE(va, c());
  EXPECT_NE(va, d());
}

TEST(Rng, Uniform01StaysInHalfOpenInterval) {
  Rng r = make_stream(5, 0);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = uniform01(r);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / n, 0.5, 0.005);
}

TEST(Rng, StandardNormalMoments) {
  Rng r = make_stream(6, 0);
  const int n = 1000000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = standard_normal(r);
    s1 += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s1 / n, 0.0, 0.005);
  EXPECT_NEAR(s2 / n, 1.0, 0.005);
}

TEST(Rng, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a64("", 0), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a", 1), 0xaf63dc4c8601ec8cull);
}

TEST(Rng, SampleStreamsOffsetMatchesGlobalIndex) {
  const SampleStreams s{42, 0};
  Rng direct = s.stream(17);
  Rng shifted = s.offset(10).stream(7);
  EXPECT_EQ(direct(), shifted());
}

TEST(Parallel, VisitsEveryIndexOnceAndRethrows) {
  std::vector<int> seen(1000, 0);
  parallel_for(seen.size(), 4, [&](std::size_t i) { seen[i] += 1; });
  for (int v : seen) ASSERT_EQ(v, 1);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                 if (i == 7) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

TEST(Parallel, ThreadResolution) {
  EXPECT_EQ(resolve_threads(3), 3u);
  ::setenv("NORMCLASH_THREADS", "5", 1);
  EXPECT_EQ(resolve_threads(0), 5u);
  ::unsetenv("NORMCLASH_THREADS");
  EXPECT_EQ(resolve_threads(0), 1u);
}
