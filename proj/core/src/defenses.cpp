#include "normclash/defenses.hpp"

#include <cmath>
#include <stdexcept>

#include "normclash/error.hpp"
#include "normclash/tape.hpp"

namespace normclash {
namespace {

AttackSpec inner_spec(const DefenseSpec& d, Norm p) {
  AttackSpec s = d.inner;
  s.family = AttackFamily::pgd;
  s.norm = p;
  s.epsilon = d.epsilon(p);
  return s;
}

void copy_row(const Tensor& src, std::size_t i, Tensor& dst) {
  auto s = src.row(i);
  std::copy(s.begin(), s.end(), dst.row(i).begin());
}

}  // namespace

std::string_view to_string(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::natural: return "natural";
    case DefenseKind::at: return "at";
    case DefenseKind::mat_rand: return "mat-rand";
    case DefenseKind::mat_max: return "mat-max";
    case DefenseKind::ni: return "ni";
    case DefenseKind::mni: return "mni";
    case DefenseKind::rat: return "rat";
  }
  return "natural";
}

DefenseKind parse_defense_kind(std::string_view name) {
  for (auto k : {DefenseKind::natural, DefenseKind::at, DefenseKind::mat_rand, DefenseKind::mat_max,
                 DefenseKind::ni, DefenseKind::mni, DefenseKind::rat}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown defense kind '" + std::string(name) + "'");
}

void DefenseSpec::validate() const {
  const std::string who = "defense " + name + ": ";
  noise.validate();
  const bool adversarial = kind == DefenseKind::at || kind == DefenseKind::rat || kind == DefenseKind::mat_rand ||
                           kind == DefenseKind::mat_max;
  if (adversarial) {
    const bool both = kind == DefenseKind::mat_rand || kind == DefenseKind::mat_max;
    if ((both || norm == Norm::linf) && !(eps_inf > 0.0)) throw std::invalid_argument(who + "eps_inf must be > 0");
    if ((both || norm == Norm::l2) && !(eps_2 > 0.0)) throw std::invalid_argument(who + "eps_2 must be > 0");
    if (inner.iterations == 0) throw std::invalid_argument(who + "inner attack needs >= 1 iteration");
    if (inner.eot_samples == 0) throw std::invalid_argument(who + "inner eot_samples must be >= 1");
  }
  switch (kind) {
    case DefenseKind::natural:
    case DefenseKind::at:
    case DefenseKind::mat_rand:
    case DefenseKind::mat_max:
      if (noise.active()) throw std::invalid_argument(who + "deterministic defense cannot carry noise");
      break;
    case DefenseKind::ni:
      if (noise.kind != NoiseKind::gaussian && noise.kind != NoiseKind::uniform) {
        throw std::invalid_argument(who + "ni needs gaussian or uniform noise");
      }
      break;
    case DefenseKind::mni:
      if (noise.kind != NoiseKind::mni_conv && noise.kind != NoiseKind::mni_mix) {
        throw std::invalid_argument(who + "mni needs mni-conv or mni-mix noise");
      }
      break;
    case DefenseKind::rat:
      if (!noise.active()) throw std::invalid_argument(who + "rat needs a noise distribution");
      break;
  }
}

void TrainConfig::validate() const {
  if (epochs == 0 || batch_size == 0) throw std::invalid_argument("train: epochs and batch size must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("train: momentum must be in [0, 1)");
}

Norm draw_mat_rand_norm(Rng& rng) { return uniform01(rng) < 0.5 ? Norm::linf : Norm::l2; }

TrainingBatch make_training_batch(const ModelParams& params, const Tensor& x, std::span<const int> labels,
                                  const DefenseSpec& defense, Rng& rng) {
  const std::size_t b = x.rows();
  TrainingBatch out;
  out.norms.assign(b, Norm::linf);
  const SampleStreams streams{rng(), 0};
  const NoiseSpec none = NoiseSpec::none();

  switch (defense.kind) {
    case DefenseKind::natural:
    case DefenseKind::ni:
    case DefenseKind::mni:
      out.inputs = x;
      return out;
    case DefenseKind::at:
      out.inputs = pgd_attack(params, none, x, labels, inner_spec(defense, defense.norm), streams).adversarial;
      out.norms.assign(b, defense.norm);
      break;
    case DefenseKind::rat:
      out.inputs =
          pgd_attack(params, defense.noise, x, labels, inner_spec(defense, defense.norm), streams).adversarial;
      out.norms.assign(b, defense.norm);
      break;
    case DefenseKind::mat_rand:
      if (!defense.mat_rand_per_sample) {
        const Norm p = draw_mat_rand_norm(rng);
        out.inputs = pgd_attack(params, none, x, labels, inner_spec(defense, p), streams).adversarial;
        out.norms.assign(b, p);
      } else {
        for (auto& p : out.norms) p = draw_mat_rand_norm(rng);
        const Tensor a_inf = pgd_attack(params, none, x, labels, inner_spec(defense, Norm::linf), streams).adversarial;
        const Tensor a_2 = pgd_attack(params, none, x, labels, inner_spec(defense, Norm::l2), streams).adversarial;
        out.inputs = Tensor(x.shape());
        for (std::size_t i = 0; i < b; ++i) copy_row(out.norms[i] == Norm::linf ? a_inf : a_2, i, out.inputs);
      }
      break;
    case DefenseKind::mat_max: {
      const Tensor a_inf = pgd_attack(params, none, x, labels, inner_spec(defense, Norm::linf), streams).adversarial;
      const Tensor a_2 = pgd_attack(params, none, x, labels, inner_spec(defense, Norm::l2), streams).adversarial;
      const auto l_inf = cross_entropy_rows(predict(params, a_inf), labels);
      const auto l_2 = cross_entropy_rows(predict(params, a_2), labels);
      out.inputs = Tensor(x.shape());
      for (std::size_t i = 0; i < b; ++i) {
        out.norms[i] = l_2[i] > l_inf[i] ? Norm::l2 : Norm::linf;
        copy_row(out.norms[i] == Norm::linf ? a_inf : a_2, i, out.inputs);
      }
      break;
    }
  }
  out.adversarial = true;
  return out;
}

double accuracy(const ModelParams& params, const Dataset& data) {
  constexpr std::size_t kChunk = 512;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    const std::size_t count = std::min(kChunk, data.size() - start);
    const auto pred = argmax_rows(predict(params, data.inputs.slice_rows(start, count)));
    for (std::size_t i = 0; i < count; ++i) correct += pred[i] == data.labels[start + i];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult train(const Dataset& data, const ModelSpec& spec, const DefenseSpec& defense,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  data.validate();
  spec.validate();
  defense.validate();
  config.validate();
  if (spec.input_dim() != data.dim() || spec.num_classes() != data.num_classes) {
    throw std::invalid_argument("train: model widths do not match dataset (d=" + std::to_string(data.dim()) +
                                ", K=" + std::to_string(data.num_classes) + ")");
  }

  TrainResult result;
  result.params = init_params(spec, config.seed);
  ModelParams& params = result.params;
  std::vector<Tensor> velocity;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    velocity.emplace_back(params.weights[l].shape());
    velocity.emplace_back(params.biases[l].shape());
  }

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = batch_indices(data.size(), config.batch_size, config.seed, epoch);
    double loss_sum = 0.0;
    for (std::size_t bi = 0; bi < order.size(); ++bi) {
      const Dataset batch = data.subset(order[bi]);
      Rng rng = make_stream(config.seed, epoch, 1 + bi);
      TrainingBatch tb = make_training_batch(params, batch.inputs, batch.labels, defense, rng);
      if (defense.randomized()) {
        Rng noise_rng = make_stream(config.seed, epoch, (1ULL << 32) + bi);
        const Tensor eta = sample_noise(defense.noise, tb.inputs.shape(), noise_rng);
        auto in = tb.inputs.data();
        for (std::size_t i = 0; i < in.size(); ++i) in[i] += eta[i];
      }

      Tape tape;
      std::vector<Var> pvars;
      Var in = tape.leaf(std::move(tb.inputs));
      Var logits = forward(tape, params, in, true, &pvars);
      Var loss = tape.softmax_cross_entropy(logits, batch.labels);
      const double lv = tape.value(loss)[0];
      if (!std::isfinite(lv)) {
        throw DivergenceError(epoch, bi, "training diverged at epoch " + std::to_string(epoch) + ", batch " +
                                             std::to_string(bi) + " (loss " + std::to_string(lv) + ")");
      }
      loss_sum += lv * static_cast<double>(batch.size());
      GradientMap grads = tape.backward(loss);

      for (std::size_t l = 0; l < spec.layer_count(); ++l) {
        for (int part = 0; part < 2; ++part) {
          Tensor& theta = part == 0 ? params.weights[l] : params.biases[l];
          Tensor& v = velocity[2 * l + static_cast<std::size_t>(part)];
          const Tensor& g = grads.at(pvars[2 * l + static_cast<std::size_t>(part)]);
          auto vd = v.data();
          auto td = theta.data();
          for (std::size_t i = 0; i < vd.size(); ++i) {
            vd[i] = config.momentum * vd[i] + g[i];
            td[i] -= config.learning_rate * vd[i];
          }
        }
      }
    }
    EpochLog entry{epoch, accuracy(params, data), loss_sum / static_cast<double>(data.size())};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return result;
}

}  // namespace normclash
