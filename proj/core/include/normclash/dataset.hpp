#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "normclash/tensor.hpp"

namespace normclash {

// n samples in [0,1]^d with labels in [0, K).
struct Dataset {
  Tensor inputs;  // [n, d]
  std::vector<int> labels;
  std::size_t num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return inputs.cols(); }

  // Throws std::invalid_argument when any invariant is broken.
  void validate() const;

  Dataset subset(std::span<const std::size_t> indices) const;
  Dataset head(std::size_t count) const;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;  // 2051
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;  // 2049

// Reads an IDX image/label pair. Pixels are scaled by 1/255; K is taken as
// max(label) + 1 unless `num_classes` is given.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t num_classes = 0);

// Writes the inverse of load_idx (inputs are rounded back to bytes).
void save_idx(const Dataset& data, const std::filesystem::path& images,
              const std::filesystem::path& labels, std::size_t rows, std::size_t cols);

// K Gaussian clusters with seeded means drawn inside [0.2, 0.8]^d, samples
// clamped to [0,1]. Classes are assigned round-robin.
Dataset make_blobs(std::size_t n, std::size_t d, std::size_t k, double spread, std::uint64_t seed);

struct Batch {
  Tensor inputs;
  std::vector<int> labels;
  std::vector<std::size_t> indices;  // positions in the source dataset
};

// Partition of [0, n) into consecutive batches of a seeded permutation; the
// permutation is a function of (shuffle_seed, epoch) only.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                    std::uint64_t shuffle_seed, std::size_t epoch);

std::vector<Batch> batches(const Dataset& data, std::size_t batch_size, std::uint64_t shuffle_seed,
                           std::size_t epoch = 0);

}  // namespace normclash
