#include "normclash/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "normclash/tape.hpp"

namespace normclash {
namespace {

// |w| bound in tanh space: keeps (tanh(w) + 1) / 2 strictly inside (0, 1).
constexpr double kMaxTanhArg = 15.0;
// Shrink factor applied before atanh so that pixels at exactly 0 or 1 map to
// finite w.
constexpr double kTanhShrink = 1.0 - 1e-6;

std::vector<Rng> row_streams(const SampleStreams& streams, std::size_t rows) {
  std::vector<Rng> out;
  out.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) out.push_back(streams.stream(i));
  return out;
}

void fill_norms(AttackResult& r, const Tensor& x) {
  const std::size_t b = x.rows();
  r.l2_norms.resize(b);
  r.linf_norms.resize(b);
  std::vector<double> tau(x.cols());
  for (std::size_t i = 0; i < b; ++i) {
    auto a = r.adversarial.row(i);
    auto o = x.row(i);
    for (std::size_t j = 0; j < tau.size(); ++j) tau[j] = a[j] - o[j];
    r.l2_norms[i] = l2_norm(tau);
    r.linf_norms[i] = linf_norm(tau);
  }
}

void fill_success(AttackResult& r, std::span<const int> labels) {
  r.success.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) r.success[i] = r.predictions[i] != labels[i];
}

// Decision per original row from stacked logits ([b*n, K]).
std::vector<int> stacked_decisions(const Tensor& logits, std::size_t b, std::size_t n) {
  if (n == 1) return argmax_rows(logits);
  const Tensor probs = softmax_rows(logits);
  const std::size_t k = probs.cols();
  std::vector<int> out(b);
  std::vector<double> mean(k);
  for (std::size_t i = 0; i < b; ++i) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      auto r = probs.row(i * n + s);
      for (std::size_t j = 0; j < k; ++j) mean[j] += r[j];
    }
    out[i] = static_cast<int>(std::max_element(mean.begin(), mean.end()) - mean.begin());
  }
  return out;
}

std::vector<int> repeat_labels(std::span<const int> labels, std::size_t n) {
  std::vector<int> out;
  out.reserve(labels.size() * n);
  for (int y : labels) out.insert(out.end(), n, y);
  return out;
}

void random_start(std::span<double> point, std::span<const double> center, Norm p, double eps, Rng& rng) {
  const std::size_t d = point.size();
  if (p == Norm::linf) {
    for (std::size_t j = 0; j < d; ++j) point[j] = center[j] + eps * (2.0 * uniform01(rng) - 1.0);
  } else {
    std::vector<double> dir(d);
    for (double& v : dir) v = standard_normal(rng);
    const double len = l2_norm(dir);
    const double radius = eps * std::pow(uniform01(rng), 1.0 / static_cast<double>(d));
    for (std::size_t j = 0; j < d; ++j) point[j] = center[j] + (len > 0.0 ? radius * dir[j] / len : 0.0);
  }
  project(point, center, p, eps);
}

}  // namespace

std::string_view to_string(Norm p) { return p == Norm::l2 ? "l2" : "linf"; }

Norm parse_norm(std::string_view name) {
  if (name == "2" || name == "l2") return Norm::l2;
  if (name == "inf" || name == "linf") return Norm::linf;
  throw std::invalid_argument("unknown norm '" + std::string(name) + "' (expected 2 or inf)");
}

std::string_view to_string(AttackFamily f) { return f == AttackFamily::pgd ? "pgd" : "cw"; }

AttackFamily parse_attack_family(std::string_view name) {
  if (name == "pgd") return AttackFamily::pgd;
  if (name == "cw") return AttackFamily::cw;
  throw std::invalid_argument("unknown attack family '" + std::string(name) + "' (expected pgd or cw)");
}

AttackSpec AttackSpec::pgd(Norm p, double epsilon, std::size_t iterations) {
  AttackSpec s;
  s.family = AttackFamily::pgd;
  s.norm = p;
  s.epsilon = epsilon;
  s.iterations = iterations;
  return s;
}

AttackSpec AttackSpec::cw(std::size_t iterations) {
  AttackSpec s;
  s.family = AttackFamily::cw;
  s.norm = Norm::l2;
  s.iterations = iterations;
  s.random_start = false;
  return s;
}

double AttackSpec::effective_step() const noexcept {
  if (step_size > 0.0) return step_size;
  return iterations ? 2.5 * epsilon / static_cast<double>(iterations) : 0.0;
}

void AttackSpec::validate() const {
  if (eot_samples == 0) throw std::invalid_argument("attack " + name + ": eot_samples must be >= 1");
  if (family == AttackFamily::pgd) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("attack " + name + ": epsilon must be > 0");
    if (step_size < 0.0) throw std::invalid_argument("attack " + name + ": step size must be >= 0");
  } else {
    if (norm != Norm::l2) throw std::invalid_argument("attack " + name + ": C&W is an l2 attack");
    if (iterations == 0) throw std::invalid_argument("attack " + name + ": iterations must be >= 1");
    if (!(lambda_min > 0.0 && lambda_min <= initial_lambda && initial_lambda <= lambda_max)) {
      throw std::invalid_argument("attack " + name + ": need 0 < lambda_min <= initial_lambda <= lambda_max");
    }
    if (!(learning_rate > 0.0)) throw std::invalid_argument("attack " + name + ": learning rate must be > 0");
    if (kappa < 0.0) throw std::invalid_argument("attack " + name + ": kappa must be >= 0");
  }
}

std::size_t AttackResult::success_count() const {
  return static_cast<std::size_t>(std::count(success.begin(), success.end(), std::uint8_t{1}));
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double linf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void steepest_direction(std::span<const double> grad, Norm p, std::span<double> out) {
  if (p == Norm::linf) {
    for (std::size_t j = 0; j < grad.size(); ++j) {
      out[j] = grad[j] > 0.0 ? 1.0 : (grad[j] < 0.0 ? -1.0 : 0.0);
    }
    return;
  }
  const double len = l2_norm(grad);
  for (std::size_t j = 0; j < grad.size(); ++j) out[j] = len > 0.0 ? grad[j] / len : 0.0;
}

std::vector<double> steepest_direction(std::span<const double> grad, Norm p) {
  std::vector<double> out(grad.size());
  steepest_direction(grad, p, out);
  return out;
}

void project(std::span<double> point, std::span<const double> center, Norm p, double epsilon) {
  const std::size_t d = point.size();
  if (p == Norm::linf) {
    for (std::size_t j = 0; j < d; ++j) {
      point[j] = std::clamp(point[j], center[j] - epsilon, center[j] + epsilon);
    }
  } else {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double t = point[j] - center[j];
      s += t * t;
    }
    const double len = std::sqrt(s);
    if (len > epsilon) {
      const double f = epsilon / len;
      for (std::size_t j = 0; j < d; ++j) point[j] = center[j] + (point[j] - center[j]) * f;
    }
  }
  for (double& v : point) v = std::clamp(v, 0.0, 1.0);
}

double logit_margin(std::span<const double> logits, int label, double kappa) {
  const auto y = static_cast<std::size_t>(label);
  double other = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (j != y) other = std::max(other, logits[j]);
  }
  return std::max(logits[y] - other, -kappa);
}

Tensor eot_gradient(const ModelParams& params, const NoiseSpec& noise, const Tensor& x,
                    std::span<const int> labels, std::size_t n_samples, std::span<Rng> streams) {
  if (n_samples == 0) throw std::invalid_argument("eot_gradient: n_samples must be >= 1");
  const std::size_t b = x.rows();
  const std::size_t n = noise.active() ? n_samples : 1;
  const std::vector<int> stacked_labels = repeat_labels(labels, n);

  Tape tape;
  Var in = noise.active() ? tape.leaf(noisy_copies(x, noise, n, streams), true) : tape.leaf(x, true);
  Var logits = forward(tape, params, in);
  // Scaling the mean by the row count turns it into a sum, so each row's
  // adjoint is exactly its own loss gradient.
  Var loss = tape.scale(tape.softmax_cross_entropy(logits, stacked_labels), static_cast<double>(b * n));
  const Tensor g = tape.backward(loss).take(in);

  if (n == 1) return g;
  Tensor out({b, x.cols()});
  for (std::size_t i = 0; i < b; ++i) {
    auto dst = out.row(i);
    for (std::size_t s = 0; s < n; ++s) {
      auto src = g.row(i * n + s);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
    for (double& v : dst) v /= static_cast<double>(n);
  }
  return out;
}

Tensor eot_gradient(const ModelParams& params, const NoiseSpec& noise, const Tensor& x,
                    std::span<const int> labels, std::size_t n_samples, const SampleStreams& streams) {
  auto rngs = row_streams(streams, x.rows());
  return eot_gradient(params, noise, x, labels, n_samples, rngs);
}

AttackResult pgd_attack(const ModelParams& params, const NoiseSpec& noise, const Tensor& x,
                        std::span<const int> labels, const AttackSpec& spec,
                        const SampleStreams& streams) {
  spec.validate();
  if (spec.family != AttackFamily::pgd) throw std::invalid_argument("pgd_attack: spec is not a PGD attack");
  const std::size_t b = x.rows();
  const std::size_t d = x.cols();
  auto rngs = row_streams(streams, b);

  AttackResult r;
  r.adversarial = x;
  if (spec.random_start) {
    for (std::size_t i = 0; i < b; ++i) random_start(r.adversarial.row(i), x.row(i), spec.norm, spec.epsilon, rngs[i]);
  }

  const double alpha = spec.effective_step();
  std::vector<double> dir(d);
  for (std::size_t t = 0; t < spec.iterations; ++t) {
    const Tensor g = eot_gradient(params, noise, r.adversarial, labels, spec.eot_samples, rngs);
    for (std::size_t i = 0; i < b; ++i) {
      auto row = r.adversarial.row(i);
      steepest_direction(g.row(i), spec.norm, dir);
      for (std::size_t j = 0; j < d; ++j) row[j] += alpha * dir[j];
      project(row, x.row(i), spec.norm, spec.epsilon);
    }
  }

  if (noise.active()) {
    const Tensor logits = predict(params, noisy_copies(r.adversarial, noise, spec.eot_samples, rngs));
    r.predictions = stacked_decisions(logits, b, spec.eot_samples);
  } else {
    r.predictions = argmax_rows(predict(params, r.adversarial));
  }
  fill_norms(r, x);
  fill_success(r, labels);
  return r;
}

AttackResult cw_attack(const ModelParams& params, const NoiseSpec& noise, const Tensor& x,
                       std::span<const int> labels, const AttackSpec& spec,
                       const SampleStreams& streams, std::vector<CwCandidate>* trace) {
  spec.validate();
  if (spec.family != AttackFamily::cw) throw std::invalid_argument("cw_attack: spec is not a C&W attack");
  const std::size_t b = x.rows();
  const std::size_t d = x.cols();
  const std::size_t n = noise.active() ? spec.eot_samples : 1;
  auto rngs = row_streams(streams, b);
  const std::vector<int> stacked_labels = repeat_labels(labels, n);

  Tensor w0({b, d});
  for (std::size_t i = 0; i < b * d; ++i) {
    w0[i] = std::clamp(std::atanh((2.0 * x[i] - 1.0) * kTanhShrink), -kMaxTanhArg, kMaxTanhArg);
  }

  std::vector<double> lambda(b, spec.initial_lambda);
  std::vector<double> lo(b, spec.lambda_min);
  std::vector<double> hi(b, spec.lambda_max);
  std::vector<std::uint8_t> ever(b, 0);
  std::vector<double> best_l2(b, std::numeric_limits<double>::infinity());
  std::vector<int> best_pred(b, -1);
  Tensor best_adv = x;

  Tensor w({b, d});
  Tensor th({b, d});
  Tensor xp({b, d});
  Tensor m1({b, d});
  Tensor m2({b, d});
  std::vector<double> row_weight(b * n);
  const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

  for (std::size_t step = 0; step < spec.search_steps; ++step) {
    w = w0;
    std::fill(m1.data().begin(), m1.data().end(), 0.0);
    std::fill(m2.data().begin(), m2.data().end(), 0.0);
    std::vector<std::uint8_t> hit(b, 0);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t s = 0; s < n; ++s) row_weight[i * n + s] = lambda[i] / static_cast<double>(n);
    }

    for (std::size_t it = 0; it <= spec.iterations; ++it) {
      for (std::size_t i = 0; i < b * d; ++i) {
        th[i] = std::tanh(w[i]);
        xp[i] = 0.5 * (th[i] + 1.0);
      }

      Tape tape;
      Var in = noise.active() ? tape.leaf(noisy_copies(xp, noise, n, rngs), true) : tape.leaf(xp, true);
      Var logits = forward(tape, params, in);
      const std::vector<int> decision = stacked_decisions(tape.value(logits), b, n);

      for (std::size_t i = 0; i < b; ++i) {
        auto a = xp.row(i);
        auto o = x.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += (a[j] - o[j]) * (a[j] - o[j]);
        const double l2 = std::sqrt(s);
        const bool ok = decision[i] != labels[i];
        if (ok) {
          hit[i] = 1;
          if (l2 < best_l2[i]) {
            best_l2[i] = l2;
            best_pred[i] = decision[i];
            std::copy(a.begin(), a.end(), best_adv.row(i).begin());
          }
        }
        if (trace) {
          auto [mn, mx] = std::minmax_element(a.begin(), a.end());
          trace->push_back({i, step, it, lambda[i], l2, ok, *mn, *mx});
        }
      }
      if (it == spec.iterations) break;

      Var loss = tape.logit_margin(logits, stacked_labels, row_weight, spec.kappa);
      const Tensor g = tape.backward(loss).take(in);

      for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          const std::size_t ij = i * d + j;
          double gx = 2.0 * (xp[ij] - x[ij]);
          for (std::size_t s = 0; s < n; ++s) gx += g(i * n + s, j);
          const double gw = gx * 0.5 * (1.0 - th[ij] * th[ij]);
          double update;
          if (spec.optimizer == CwOptimizer::adam) {
            m1[ij] = beta1 * m1[ij] + (1.0 - beta1) * gw;
            m2[ij] = beta2 * m2[ij] + (1.0 - beta2) * gw * gw;
            const double t = static_cast<double>(it + 1);
            const double mh = m1[ij] / (1.0 - std::pow(beta1, t));
            const double vh = m2[ij] / (1.0 - std::pow(beta2, t));
            update = spec.learning_rate * mh / (std::sqrt(vh) + adam_eps);
          } else {
            update = spec.learning_rate * gw;
          }
          w[ij] = std::clamp(w[ij] - update, -kMaxTanhArg, kMaxTanhArg);
        }
      }
    }

    for (std::size_t i = 0; i < b; ++i) {
      if (hit[i]) {
        ever[i] = 1;
        hi[i] = std::min(hi[i], lambda[i]);
        lambda[i] = 0.5 * (lo[i] + hi[i]);
      } else {
        lo[i] = std::max(lo[i], lambda[i]);
        lambda[i] = ever[i] ? 0.5 * (lo[i] + hi[i]) : std::min(2.0 * lambda[i], spec.lambda_max);
      }
    }
  }

  AttackResult r;
  r.adversarial = x;
  r.predictions.assign(b, 0);
  std::vector<std::size_t> missed;
  for (std::size_t i = 0; i < b; ++i) {
    if (best_pred[i] >= 0) {
      auto src = best_adv.row(i);
      std::copy(src.begin(), src.end(), r.adversarial.row(i).begin());
      r.predictions[i] = best_pred[i];
    } else {
      missed.push_back(i);
    }
  }
  // No lambda fooled the model: the sample stays clean (tau = 0) and its
  // reported prediction is the true label by construction of the search.
  for (std::size_t i : missed) r.predictions[i] = labels[i];
  fill_norms(r, x);
  fill_success(r, labels);
  return r;
}

AttackResult run_attack(const ModelParams& params, const NoiseSpec& noise, const Tensor& x,
                        std::span<const int> labels, const AttackSpec& spec,
                        const SampleStreams& streams) {
  return spec.family == AttackFamily::pgd ? pgd_attack(params, noise, x, labels, spec, streams)
                                          : cw_attack(params, noise, x, labels, spec, streams);
}

}  // namespace normclash
