#pragma once

#include <cstddef>
#include <span>

namespace normclash::kernels {

// C[m,n] = A[m,k] * B[k,n], all row-major. Each output element accumulates
// its k products in ascending order with fused multiply-add, independent of
// m, so a row computed alone is bit-identical to the same row in a batch.
void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n);

// out[k,m] = in[m,k]^T
void transpose(std::span<const double> in, std::span<double> out, std::size_t m, std::size_t k);

}  // namespace normclash::kernels
