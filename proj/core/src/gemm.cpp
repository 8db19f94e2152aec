#include "normclash/gemm.hpp"

#include <algorithm>
#include <cmath>

namespace normclash::kernels {
namespace {

constexpr std::size_t kRowBlock = 4;
constexpr std::size_t kColBlock = 32;

// Full register tile. Every accumulator starts at zero and takes one fma per
// p in ascending order; the edge tile below does exactly the same.
void tile_full(const double* a, const double* b, double* c, std::size_t k, std::size_t n) {
  double acc[kRowBlock][kColBlock] = {};
  for (std::size_t p = 0; p < k; ++p) {
    const double* brow = b + p * n;
    for (std::size_t r = 0; r < kRowBlock; ++r) {
      const double av = a[r * k + p];
      for (std::size_t j = 0; j < kColBlock; ++j) acc[r][j] = std::fma(av, brow[j], acc[r][j]);
    }
  }
  for (std::size_t r = 0; r < kRowBlock; ++r) {
    std::copy_n(acc[r], kColBlock, c + r * n);
  }
}

void tile_edge(const double* a, const double* b, double* c, std::size_t k, std::size_t n,
               std::size_t rows, std::size_t cols) {
  double acc[kRowBlock][kColBlock] = {};
  for (std::size_t p = 0; p < k; ++p) {
    const double* brow = b + p * n;
    for (std::size_t r = 0; r < rows; ++r) {
      const double av = a[r * k + p];
      for (std::size_t j = 0; j < cols; ++j) acc[r][j] = std::fma(av, brow[j], acc[r][j]);
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(acc[r], cols, c + r * n);
  }
}

}  // namespace

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n) {
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  // Column strips outermost so a k x 32 strip of B stays cache-resident
  // while all row blocks stream past it.
  for (std::size_t j0 = 0; j0 < n; j0 += kColBlock) {
    const std::size_t cols = std::min(kColBlock, n - j0);
    for (std::size_t i0 = 0; i0 < m; i0 += kRowBlock) {
      const std::size_t rows = std::min(kRowBlock, m - i0);
      if (rows == kRowBlock && cols == kColBlock) {
        tile_full(pa + i0 * k, pb + j0, pc + i0 * n + j0, k, n);
      } else {
        tile_edge(pa + i0 * k, pb + j0, pc + i0 * n + j0, k, n, rows, cols);
      }
    }
  }
}

void transpose(std::span<const double> in, std::span<double> out, std::size_t m, std::size_t k) {
  constexpr std::size_t kBlock = 32;
  for (std::size_t i0 = 0; i0 < m; i0 += kBlock) {
    for (std::size_t j0 = 0; j0 < k; j0 += kBlock) {
      const std::size_t ie = std::min(m, i0 + kBlock);
      const std::size_t je = std::min(k, j0 + kBlock);
      for (std::size_t i = i0; i < ie; ++i) {
        for (std::size_t j = j0; j < je; ++j) out[j * m + i] = in[i * k + j];
      }
    }
  }
}

}  // namespace normclash::kernels
