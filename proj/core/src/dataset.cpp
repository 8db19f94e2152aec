#include "normclash/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "normclash/error.hpp"
#include "normclash/rng.hpp"

namespace normclash {
namespace {

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError("idx: truncated file " + path.string() + " while reading " + what);
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

std::ifstream open_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("idx: cannot open " + path.string());
  return in;
}

void check_magic(std::uint32_t found, std::uint32_t expected, const std::filesystem::path& path) {
  if (found != expected) {
    throw FormatError("idx: bad magic in " + path.string() + ": expected " +
                      std::to_string(expected) + ", found " + std::to_string(found));
  }
}

std::vector<unsigned char> read_payload(std::istream& in, std::size_t count,
                                        const std::filesystem::path& path) {
  std::vector<unsigned char> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) {
    throw FormatError("idx: truncated file " + path.string() + ": expected " +
                      std::to_string(count) + " payload bytes, found " +
                      std::to_string(in.gcount()));
  }
  return buf;
}

}  // namespace

void Dataset::validate() const {
  if (labels.empty()) throw std::invalid_argument("dataset: empty");
  if (inputs.rows() != labels.size()) {
    throw std::invalid_argument("dataset: " + std::to_string(inputs.rows()) + " inputs but " +
                                std::to_string(labels.size()) + " labels");
  }
  for (double v : inputs.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("dataset: input outside [0,1]");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw std::invalid_argument("dataset: label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.num_classes = num_classes;
  out.inputs = Tensor({indices.size(), dim()});
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    auto src = inputs.row(indices[r]);
    std::copy(src.begin(), src.end(), out.inputs.row(r).begin());
    out.labels.push_back(labels[indices[r]]);
  }
  return out;
}

Dataset Dataset::head(std::size_t count) const {
  count = std::min(count, size());
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return subset(idx);
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t num_classes) {
  auto img = open_binary(images);
  check_magic(read_be32(img, images, "magic"), kIdxImageMagic, images);
  const std::size_t n = read_be32(img, images, "image count");
  const std::size_t rows = read_be32(img, images, "row count");
  const std::size_t cols = read_be32(img, images, "column count");

  auto lab = open_binary(labels);
  check_magic(read_be32(lab, labels, "magic"), kIdxLabelMagic, labels);
  const std::size_t nl = read_be32(lab, labels, "label count");
  if (nl != n) {
    throw FormatError("idx: count mismatch: " + std::to_string(n) + " images in " +
                      images.string() + " but " + std::to_string(nl) + " labels in " +
                      labels.string());
  }
  if (n == 0 || rows == 0 || cols == 0) throw FormatError("idx: empty dimension in " + images.string());

  const std::size_t d = rows * cols;
  const auto pixels = read_payload(img, n * d, images);
  const auto raw_labels = read_payload(lab, n, labels);

  Dataset out;
  out.inputs = Tensor({n, d});
  auto data = out.inputs.data();
  for (std::size_t i = 0; i < pixels.size(); ++i) data[i] = static_cast<double>(pixels[i]) / 255.0;
  out.labels.assign(raw_labels.begin(), raw_labels.end());
  const int max_label = *std::max_element(out.labels.begin(), out.labels.end());
  out.num_classes = num_classes ? num_classes : static_cast<std::size_t>(max_label) + 1;
  out.validate();
  return out;
}

void save_idx(const Dataset& data, const std::filesystem::path& images,
              const std::filesystem::path& labels, std::size_t rows, std::size_t cols) {
  if (rows * cols != data.dim()) {
    throw std::invalid_argument("save_idx: " + std::to_string(rows) + "x" + std::to_string(cols) +
                                " does not match d=" + std::to_string(data.dim()));
  }
  std::ofstream img(images, std::ios::binary);
  write_be32(img, kIdxImageMagic);
  write_be32(img, static_cast<std::uint32_t>(data.size()));
  write_be32(img, static_cast<std::uint32_t>(rows));
  write_be32(img, static_cast<std::uint32_t>(cols));
  for (double v : data.inputs.data()) {
    img.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
  }
  std::ofstream lab(labels, std::ios::binary);
  write_be32(lab, kIdxLabelMagic);
  write_be32(lab, static_cast<std::uint32_t>(data.size()));
  for (int y : data.labels) lab.put(static_cast<char>(static_cast<unsigned char>(y)));
  if (!img || !lab) throw FormatError("save_idx: write failed");
}

Dataset make_blobs(std::size_t n, std::size_t d, std::size_t k, double spread, std::uint64_t seed) {
  if (n == 0 || d == 0 || k == 0) throw std::invalid_argument("make_blobs: n, d, K must be positive");
  if (!(spread > 0.0)) throw std::invalid_argument("make_blobs: spread must be > 0");

  Rng rng = make_stream(seed, 0);
  // Means are resampled until pairwise separated by at least 6 spreads (or
  // the best of 64 tries), which keeps the clusters separable.
  Tensor means({k, d});
  double best_sep = -1.0;
  Tensor candidate({k, d});
  for (int attempt = 0; attempt < 64; ++attempt) {
    for (double& v : candidate.data()) v = 0.2 + 0.6 * uniform01(rng);
    double sep = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = candidate(a, j) - candidate(b, j);
          s += diff * diff;
        }
        sep = std::min(sep, std::sqrt(s));
      }
    }
    if (sep > best_sep) {
      best_sep = sep;
      means = candidate;
    }
    if (best_sep >= 6.0 * spread) break;
  }

  Dataset out;
  out.num_classes = k;
  out.inputs = Tensor({n, d});
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % k;
    out.labels[i] = static_cast<int>(c);
    auto r = out.inputs.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      r[j] = std::clamp(means(c, j) + spread * standard_normal(rng), 0.0, 1.0);
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                    std::uint64_t shuffle_seed, std::size_t epoch) {
  if (batch_size == 0) throw std::invalid_argument("batches: batch size must be >= 1");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = make_stream(shuffle_seed, epoch, 0x5eed);
  // Fisher-Yates with our own uniform draw; std::shuffle is not portable.
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(perm[i - 1], perm[std::min(j, i - 1)]);
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                     perm.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::vector<Batch> batches(const Dataset& data, std::size_t batch_size, std::uint64_t shuffle_seed,
                           std::size_t epoch) {
  std::vector<Batch> out;
  for (auto& idx : batch_indices(data.size(), batch_size, shuffle_seed, epoch)) {
    Dataset sub = data.subset(idx);
    out.push_back(Batch{std::move(sub.inputs), std::move(sub.labels), std::move(idx)});
  }
  return out;
}

}  // namespace normclash
