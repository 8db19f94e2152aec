#pragma once

#include <cstdint>
#include <random>

namespace normclash {

using Rng = std::mt19937_64;

// Independent generator for (seed, stream...) keys. Attacks and randomized
// predictions key one stream per sample index so that results do not depend
// on batching or thread scheduling.
Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0);

// Deterministic 64-bit key derivation (splitmix64 finalizer chain).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// Uniform double in [0, 1) built from the top 53 bits. Used instead of
// std::uniform_real_distribution, whose output is implementation-defined.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Marsaglia's polar method; stateless so that no hidden
// cached variate leaks across calls.
double standard_normal(Rng& rng);

// FNV-1a over bytes; used as the config digest embedded in output files.
std::uint64_t fnv1a64(const void* data, std::size_t size);

}  // namespace normclash

namespace normclash {

// One generator per row of a batch, keyed by the row's global sample index.
struct SampleStreams {
  std::uint64_t seed = 0;
  std::uint64_t first_index = 0;

  Rng stream(std::size_t row) const { return make_stream(seed, first_index + row); }
  SampleStreams offset(std::size_t rows) const { return {seed, first_index + rows}; }
};

}  // namespace normclash
