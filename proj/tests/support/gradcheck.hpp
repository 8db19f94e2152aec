#pragma once

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <functional>
#include <vector>

#include "normclash/model.hpp"
#include "normclash/rng.hpp"
#include "normclash/tape.hpp"

namespace normclash::testing {

// |a - n| / max(|a|, |n|), with an absolute floor for entries that are
// numerically zero on both sides.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

struct GradCheck {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // stencil crossed a relu kink
};

using KinkPattern = std::function<std::vector<std::uint8_t>()>;

// Fourth-order central differences of `loss` over every coordinate of
// `inputs`. A wider step keeps the rounding error of the loss well below the
// smallest gradients of deep random networks.
inline GradCheck check_gradients(std::vector<Tensor*> inputs, const std::vector<Tensor>& analytic,
                                 const std::function<double()>& loss, double h = 1e-4,
                                 const KinkPattern& pattern = {}) {
  GradCheck out;
  const auto base = pattern ? pattern() : std::vector<std::uint8_t>{};
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    Tensor& x = *inputs[t];
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double keep = x[i];
      auto at = [&](double offset) {
        x[i] = keep + offset;
        return loss();
      };
      const double numeric = (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h);
      bool smooth = true;
      if (pattern) {
        for (double off : {-2.0 * h, 2.0 * h}) {
          x[i] = keep + off;
          smooth = smooth && pattern() == base;
        }
      }
      x[i] = keep;
      if (!smooth) {
        ++out.skipped;
        continue;
      }
      out.max_relative_error = std::max(out.max_relative_error, relative_error(analytic[t][i], numeric));
      ++out.checked;
    }
  }
  return out;
}

struct NetworkCase {
  ModelParams params;
  Tensor x;
  std::vector<int> labels;
};

// Random MLP with 1-3 layers and widths <= 64; inputs in [0,1].
inline NetworkCase random_network(std::uint64_t seed, std::size_t batch = 4) {
  Rng rng = make_stream(seed, 0xca5e);
  const std::size_t layers = 1 + rng() % 3;
  ModelSpec spec;
  spec.widths.push_back(2 + rng() % 12);
  for (std::size_t l = 1; l < layers; ++l) spec.widths.push_back(2 + rng() % 63);
  spec.widths.push_back(2 + rng() % 6);
  NetworkCase c{init_params(spec, seed), Tensor({batch, spec.input_dim()}), {}};
  // Non-zero biases so that relu kinks are not aligned with zero inputs.
  for (auto& b : c.params.biases) {
    for (auto& v : b.data()) v = 0.2 * standard_normal(rng);
  }
  for (auto& v : c.x.data()) v = uniform01(rng);
  for (std::size_t i = 0; i < batch; ++i) c.labels.push_back(static_cast<int>(rng() % spec.num_classes()));
  return c;
}

// Signs of every hidden pre-activation, computed without the tape.
inline std::vector<std::uint8_t> relu_pattern(const ModelParams& params, const Tensor& x) {
  std::vector<std::uint8_t> out;
  std::vector<double> h;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    h.assign(x.row(r).begin(), x.row(r).end());
    for (std::size_t l = 0; l + 1 < params.weights.size(); ++l) {
      const Tensor& w = params.weights[l];
      std::vector<double> z(w.cols());
      for (std::size_t j = 0; j < w.cols(); ++j) {
        double acc = params.biases[l][j];
        for (std::size_t k = 0; k < w.rows(); ++k) acc += h[k] * w(k, j);
        out.push_back(acc > 0.0);
        z[j] = std::max(acc, 0.0);
      }
      h = std::move(z);
    }
  }
  return out;
}

// Gradient check of mean cross-entropy w.r.t. every parameter and the input.
inline GradCheck check_network(NetworkCase& c) {
  auto loss = [&]() {
    Tape tape;
    Var in = tape.leaf(c.x);
    Var l = tape.softmax_cross_entropy(forward(tape, c.params, in), c.labels);
    return tape.value(l)[0];
  };
  Tape tape;
  Var in = tape.leaf(c.x, true);
  std::vector<Var> pv;
  Var l = tape.softmax_cross_entropy(forward(tape, c.params, in, true, &pv), c.labels);
  GradientMap g = tape.backward(l);
  std::vector<Tensor*> targets{&c.x};
  std::vector<Tensor> analytic{g.at(in)};
  for (std::size_t k = 0; k < c.params.weights.size(); ++k) {
    targets.push_back(&c.params.weights[k]);
    analytic.push_back(g.at(pv[2 * k]));
    targets.push_back(&c.params.biases[k]);
    analytic.push_back(g.at(pv[2 * k + 1]));
  }
  return check_gradients(targets, analytic, loss, 1e-4, [&c] { return relu_pattern(c.params, c.x); });
}

}  // namespace normclash::testing
