#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "normclash/defenses.hpp"
#include "normclash/model.hpp"

namespace normclash {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  int format_version = kCheckpointVersion;
  DefenseSpec defense;  // carries the NoiseSpec
  ModelParams params;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string log_digest;  // FNV-1a of the training-log CSV

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
// Throws FormatError on unknown versions or a parameter count that does not
// match the model spec.
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// `epoch,natural_accuracy,mean_loss` with `# key=value` header lines.
std::string training_log_csv(const std::vector<EpochLog>& log, const std::string& config_digest,
                             std::uint64_t seed);

}  // namespace normclash
