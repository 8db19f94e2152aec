#include "normclash/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "normclash/error.hpp"

namespace normclash {

std::size_t ModelSpec::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) n += widths[l] * widths[l + 1] + widths[l + 1];
  return n;
}

void ModelSpec::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("model: need at least input and output widths");
  for (auto w : widths) {
    if (w == 0) throw std::invalid_argument("model: layer widths must be positive");
  }
  if (widths.back() < 2) throw std::invalid_argument("model: need at least two classes");
}

void ModelParams::validate() const {
  spec.validate();
  if (weights.size() != spec.layer_count() || biases.size() != spec.layer_count()) {
    throw std::invalid_argument("model params: layer count does not match spec");
  }
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    if (weights[l].shape() != Shape{spec.widths[l], spec.widths[l + 1]} ||
        biases[l].shape() != Shape{spec.widths[l + 1]}) {
      throw std::invalid_argument("model params: layer " + std::to_string(l) +
                                  " shapes do not match spec");
    }
    if (!weights[l].all_finite() || !biases[l].all_finite()) {
      throw std::invalid_argument("model params: non-finite entry in layer " + std::to_string(l));
    }
  }
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(spec.parameter_count());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.insert(flat.end(), weights[l].data().begin(), weights[l].data().end());
    flat.insert(flat.end(), biases[l].data().begin(), biases[l].data().end());
  }
  return flat;
}

ModelParams ModelParams::unflatten(const ModelSpec& spec, std::span<const double> flat) {
  spec.validate();
  if (flat.size() != spec.parameter_count()) {
    throw std::invalid_argument("model params: expected " + std::to_string(spec.parameter_count()) +
                                " parameters, got " + std::to_string(flat.size()));
  }
  ModelParams p;
  p.spec = spec;
  std::size_t pos = 0;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const std::size_t in = spec.widths[l];
    const std::size_t out = spec.widths[l + 1];
    p.weights.emplace_back(Shape{in, out}, std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                                                                flat.begin() + static_cast<std::ptrdiff_t>(pos + in * out)));
    pos += in * out;
    p.biases.emplace_back(Shape{out}, std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                                                           flat.begin() + static_cast<std::ptrdiff_t>(pos + out)));
    pos += out;
  }
  return p;
}

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
  ModelParams p = zero_params(spec);
  Rng rng = make_stream(seed, 0x1417);
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(spec.widths[l]));
    for (double& w : p.weights[l].data()) w = stddev * standard_normal(rng);
  }
  return p;
}

ModelParams zero_params(const ModelSpec& spec) {
  spec.validate();
  ModelParams p;
  p.spec = spec;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    p.weights.emplace_back(Shape{spec.widths[l], spec.widths[l + 1]});
    p.biases.emplace_back(Shape{spec.widths[l + 1]});
  }
  return p;
}

Var forward(Tape& tape, const ModelParams& params, Var input, bool params_require_grad,
            std::vector<Var>* param_vars) {
  const Tensor& x = tape.value(input);
  if (x.rank() != 2 || x.cols() != params.spec.input_dim()) {
    throw ShapeError("predict: input shape " + to_string(x.shape()) + " does not match model input width " +
                     std::to_string(params.spec.input_dim()));
  }
  Var h = input;
  const std::size_t layers = params.spec.layer_count();
  for (std::size_t l = 0; l < layers; ++l) {
    Var w = tape.borrow(params.weights[l], params_require_grad);
    Var b = tape.borrow(params.biases[l], params_require_grad);
    if (param_vars) {
      param_vars->push_back(w);
      param_vars->push_back(b);
    }
    h = tape.add_bias(tape.matmul(h, w), b);
    if (l + 1 < layers) h = tape.relu(h);
  }
  return h;
}

Tensor predict(const ModelParams& params, const Tensor& x) {
  Tape tape;
  Var in = tape.borrow(x);
  Var out = forward(tape, params, in);
  return tape.value(out);
}

std::vector<int> argmax_rows(const Tensor& scores) {
  std::vector<int> out(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    auto r = scores.row(i);
    out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

Tensor softmax_rows(const Tensor& logits) {
  Tensor out = logits;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    const double m = *std::max_element(r.begin(), r.end());
    double s = 0.0;
    for (double& v : r) {
      v = std::exp(v - m);
      s += v;
    }
    for (double& v : r) v /= s;
  }
  return out;
}

std::vector<double> cross_entropy_rows(const Tensor& logits, std::span<const int> labels) {
  std::vector<double> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto r = logits.row(i);
    const double m = *std::max_element(r.begin(), r.end());
    double s = 0.0;
    for (double v : r) s += std::exp(v - m);
    out[i] = std::log(s) - (r[static_cast<std::size_t>(labels[i])] - m);
  }
  return out;
}

Tensor noisy_copies(const Tensor& x, const NoiseSpec& noise, std::size_t n, std::span<Rng> streams) {
  const std::size_t b = x.rows();
  const std::size_t d = x.cols();
  Tensor out({b * n, d});
  for (std::size_t i = 0; i < b; ++i) {
    auto src = x.row(i);
    for (std::size_t k = 0; k < n; ++k) {
      auto dst = out.row(i * n + k);
      sample_noise(noise, dst, streams[i]);
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
  }
  return out;
}

Tensor randomized_predict(const ModelParams& params, const NoiseSpec& noise, const Tensor& x,
                          std::size_t n_samples, const SampleStreams& streams, PredictionRule rule) {
  if (n_samples == 0) throw std::invalid_argument("randomized_predict: n_samples must be >= 1");
  if (!noise.active()) return softmax_rows(predict(params, x));

  const std::size_t b = x.rows();
  std::vector<Rng> rngs;
  rngs.reserve(b);
  for (std::size_t i = 0; i < b; ++i) rngs.push_back(streams.stream(i));
  const Tensor logits = predict(params, noisy_copies(x, noise, n_samples, rngs));
  const std::size_t k = logits.cols();
  const Tensor scores = rule == PredictionRule::mean_probability ? softmax_rows(logits) : logits;

  Tensor mean({b, k});
  for (std::size_t i = 0; i < b; ++i) {
    auto dst = mean.row(i);
    for (std::size_t s = 0; s < n_samples; ++s) {
      auto src = scores.row(i * n_samples + s);
      for (std::size_t j = 0; j < k; ++j) dst[j] += src[j];
    }
    for (double& v : dst) v /= static_cast<double>(n_samples);
  }
  return rule == PredictionRule::mean_probability ? mean : softmax_rows(mean);
}

std::vector<int> classify(const ModelParams& params, const NoiseSpec& noise, const Tensor& x,
                          std::size_t n_samples, const SampleStreams& streams, PredictionRule rule) {
  if (!noise.active()) return argmax_rows(predict(params, x));
  return argmax_rows(randomized_predict(params, noise, x, n_samples, streams, rule));
}

}  // namespace normclash
