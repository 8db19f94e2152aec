#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "normclash/attacks.hpp"
#include "normclash/dataset.hpp"
#include "normclash/model.hpp"
#include "normclash/noise.hpp"

namespace normclash {

enum class DefenseKind { natural, at, mat_rand, mat_max, ni, mni, rat };

std::string_view to_string(DefenseKind kind);
DefenseKind parse_defense_kind(std::string_view name);

struct DefenseSpec {
  std::string name;
  DefenseKind kind = DefenseKind::natural;
  Norm norm = Norm::linf;  // at, rat
  NoiseSpec noise;         // ni, mni, rat
  // Inner PGD used to build training batches; norm and epsilon are filled in
  // per batch from `norm` / the epsilon pair.
  AttackSpec inner = AttackSpec::pgd(Norm::linf, 1.0, 10);
  double eps_inf = 0.0;
  double eps_2 = 0.0;
  bool mat_rand_per_sample = false;

  double epsilon(Norm p) const noexcept { return p == Norm::linf ? eps_inf : eps_2; }
  bool randomized() const noexcept { return noise.active(); }
  void validate() const;

  friend bool operator==(const DefenseSpec&, const DefenseSpec&) = default;
};

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochLog {
  std::size_t epoch = 0;
  double natural_accuracy = 0.0;  // noise-free, on the training set
  double mean_loss = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
};

struct TrainingBatch {
  Tensor inputs;
  // Norm that generated each row (natural/ni/mni rows report linf with
  // `adversarial` false).
  std::vector<Norm> norms;
  bool adversarial = false;
};

// Bernoulli(1/2) draw of the MAT-Rand norm.
Norm draw_mat_rand_norm(Rng& rng);

// Inputs for one SGD step under `defense`:
//   natural, ni, mni -> unchanged (noise is added in the training forward)
//   at(p)            -> PGD-p examples
//   mat-rand         -> PGD-p with p ~ U{2, inf} per batch (or per sample)
//   mat-max          -> per sample, the higher-loss of PGD-inf and PGD-2
//   rat(p, noise)    -> PGD-p with EOT gradients through the noisy model
TrainingBatch make_training_batch(const ModelParams& params, const Tensor& x, std::span<const int> labels,
                                  const DefenseSpec& defense, Rng& rng);

using EpochCallback = std::function<void(const EpochLog&)>;

// SGD with momentum on the mean cross-entropy of the defense's training
// inputs (plus input noise for randomized defenses). Throws DivergenceError
// on a non-finite loss.
TrainResult train(const Dataset& data, const ModelSpec& spec, const DefenseSpec& defense,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

double accuracy(const ModelParams& params, const Dataset& data);

}  // namespace normclash
