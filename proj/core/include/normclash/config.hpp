#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "normclash/attacks.hpp"
#include "normclash/dataset.hpp"
#include "normclash/defenses.hpp"
#include "normclash/evaluation.hpp"
#include "normclash/model.hpp"

namespace normclash {

struct IdxSource {
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path eval_images;
  std::filesystem::path eval_labels;
  std::size_t train_limit = 0;  // 0 keeps every sample
  std::size_t eval_limit = 0;

  friend bool operator==(const IdxSource&, const IdxSource&) = default;
};

struct BlobsSource {
  std::size_t train_size = 1000;
  std::size_t eval_size = 200;
  std::size_t dim = 2;
  std::size_t classes = 2;
  double spread = 0.05;

  friend bool operator==(const BlobsSource&, const BlobsSource&) = default;
};

enum class DatasetSource { idx, blobs };

struct DatasetConfig {
  DatasetSource source = DatasetSource::idx;
  IdxSource idx;
  BlobsSource blobs;

  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct EpsilonConfig {
  double linf = 0.0;
  double l2 = 0.0;  // 0 means calibrate(linf, d)
  bool override_pair = false;

  friend bool operator==(const EpsilonConfig&, const EpsilonConfig&) = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  DatasetConfig dataset;
  std::vector<std::size_t> hidden = {256};
  TrainConfig train;
  EpsilonConfig epsilon;
  std::vector<DefenseSpec> defenses;
  std::vector<AttackSpec> attacks;
  EvalOptions evaluation;
  std::vector<double> eps_sweep;

  // Input dimension implied by the dataset source (reads the IDX header).
  std::size_t input_dim() const;
  ModelSpec model_spec(std::size_t input_dim, std::size_t num_classes) const;
  // Per-defense training config; the seed is derived from the global seed
  // and the defense name.
  TrainConfig train_config_for(const DefenseSpec& defense) const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Parses and validates. Relative dataset paths resolve against `base_dir`.
// Missing epsilon fields of defenses and attacks are filled from the pair.
// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {},
                              bool override_epsilon = false);
ExperimentConfig load_config(const std::filesystem::path& path, bool override_epsilon = false);

// Canonical JSON form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);
// Hex FNV-1a of the canonical form.
std::string config_digest(const ExperimentConfig& config);

// Relative tolerance for eps_2 against calibrate(eps_inf, d).
inline constexpr double kEpsilonPairTolerance = 1e-2;

// Throws ConfigError("epsilon.l2", ...) with the calibrated value when the
// pair is off and `override_pair` is false.
void check_epsilon_pair(const EpsilonConfig& eps, std::size_t dim);

struct DataSplit {
  Dataset train;
  Dataset eval;
};
DataSplit load_data(const ExperimentConfig& config);

// Writes `contents` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace normclash
