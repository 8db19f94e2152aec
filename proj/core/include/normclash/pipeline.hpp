#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "normclash/checkpoint.hpp"
#include "normclash/config.hpp"
#include "normclash/evaluation.hpp"

namespace normclash {

using ProgressFn = std::function<void(const std::string&)>;

struct TrainedDefense {
  Checkpoint checkpoint;
  std::string log_csv;
};

// Trains every defense in `config` (independent runs spread over `threads`).
// `only` restricts the run to the named defenses when non-empty.
std::vector<TrainedDefense> train_defenses(const ExperimentConfig& config, const Dataset& train_data,
                                           std::size_t threads, const std::vector<std::string>& only = {},
                                           const ProgressFn& progress = {});

// `<dir>/<name>.ckpt.json` and `<dir>/<name>.train.csv`.
std::filesystem::path checkpoint_path(const std::filesystem::path& dir, const std::string& defense);
std::filesystem::path training_log_path(const std::filesystem::path& dir, const std::string& defense);

// Loads one checkpoint per configured defense; a missing file is reported
// together with every other missing one.
std::vector<Checkpoint> load_checkpoints(const ExperimentConfig& config, const std::filesystem::path& dir);

// Runs the configured attack grid and fills in run metadata.
RobustnessReport evaluate_checkpoints(const ExperimentConfig& config, const std::vector<Checkpoint>& checkpoints,
                                      const Dataset& eval_data, std::size_t threads);

struct ReportFiles {
  std::string report_csv;
  std::string report_json;
  std::string ball_stats_csv;
  std::string sweep_csv;
};
ReportFiles render_report(const RobustnessReport& report);
void write_report(const RobustnessReport& report, const std::filesystem::path& dir);

}  // namespace normclash
