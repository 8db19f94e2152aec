#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "normclash/noise.hpp"
#include "normclash/rng.hpp"
#include "normclash/tape.hpp"
#include "normclash/tensor.hpp"

namespace normclash {

// Fully connected ReLU network: widths = [d, h1, ..., K]; the last layer is
// linear (logits).
struct ModelSpec {
  std::vector<std::size_t> widths;

  std::size_t input_dim() const { return widths.front(); }
  std::size_t num_classes() const { return widths.back(); }
  std::size_t layer_count() const { return widths.size() - 1; }
  std::size_t parameter_count() const;
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct ModelParams {
  ModelSpec spec;
  std::vector<Tensor> weights;  // layer l: [widths[l], widths[l+1]]
  std::vector<Tensor> biases;   // layer l: [widths[l+1]]

  void validate() const;
  // Layer by layer: weights row-major, then bias.
  std::vector<double> flatten() const;
  static ModelParams unflatten(const ModelSpec& spec, std::span<const double> flat);

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// He initialization: weights ~ N(0, 2 / fan_in), zero biases.
ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);
ModelParams zero_params(const ModelSpec& spec);

// Records the network on `tape`. Parameters are borrowed, so `params` must
// outlive the tape. When `param_vars` is given it receives [W0, b0, W1, ...].
Var forward(Tape& tape, const ModelParams& params, Var input, bool params_require_grad = false,
            std::vector<Var>* param_vars = nullptr);

// Logits [b, K] for inputs [b, d].
Tensor predict(const ModelParams& params, const Tensor& x);

std::vector<int> argmax_rows(const Tensor& scores);
Tensor softmax_rows(const Tensor& logits);
// Per-row cross-entropy -log softmax(z)[y].
std::vector<double> cross_entropy_rows(const Tensor& logits, std::span<const int> labels);

// Stacks n noisy copies of every row: row i*n + k is x_i + eta_{i,k}, with
// eta drawn from streams[i]. No clamping: the randomized network sees x + eta.
Tensor noisy_copies(const Tensor& x, const NoiseSpec& noise, std::size_t n, std::span<Rng> streams);

enum class PredictionRule { mean_probability, mean_logits };

// Mean over n draws of softmax(f(x + eta)); rows are probability vectors.
// With the mean_logits rule the softmax of the averaged logits is returned.
// Without noise this is softmax(predict(x)) exactly.
Tensor randomized_predict(const ModelParams& params, const NoiseSpec& noise, const Tensor& x,
                          std::size_t n_samples, const SampleStreams& streams,
                          PredictionRule rule = PredictionRule::mean_probability);

// Class decisions: argmax of predict() for deterministic models, argmax of
// randomized_predict() otherwise.
std::vector<int> classify(const ModelParams& params, const NoiseSpec& noise, const Tensor& x,
                          std::size_t n_samples, const SampleStreams& streams,
                          PredictionRule rule = PredictionRule::mean_probability);

}  // namespace normclash
