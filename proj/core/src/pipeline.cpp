#include "normclash/pipeline.hpp"

#include <algorithm>
#include <mutex>

#include "format.hpp"
#include "normclash/error.hpp"
#include "normclash/parallel.hpp"
#include "normclash/rng.hpp"
#include "spec_json.hpp"

namespace normclash {

std::vector<TrainedDefense> train_defenses(const ExperimentConfig& config, const Dataset& train_data,
                                           std::size_t threads, const std::vector<std::string>& only,
                                           const ProgressFn& progress) {
  std::vector<const DefenseSpec*> todo;
  for (const auto& d : config.defenses) {
    if (only.empty() || std::find(only.begin(), only.end(), d.name) != only.end()) todo.push_back(&d);
  }
  for (const auto& name : only) {
    bool found = false;
    for (const auto& d : config.defenses) found = found || d.name == name;
    if (!found) throw ConfigError("defenses", "no defense named '" + name + "' in the config");
  }
  const std::string digest = config_digest(config);
  const ModelSpec spec = config.model_spec(train_data.dim(), train_data.num_classes);
  std::vector<TrainedDefense> out(todo.size());
  std::mutex mu;
  parallel_for(todo.size(), threads, [&](std::size_t i) {
    const DefenseSpec& d = *todo[i];
    const TrainConfig tc = config.train_config_for(d);
    auto on_epoch = [&](const EpochLog& e) {
      if (!progress) return;
      std::lock_guard lock(mu);
      progress(d.name + ": epoch " + std::to_string(e.epoch + 1) + "/" + std::to_string(tc.epochs) +
               " acc=" + detail::fixed(e.natural_accuracy, 4) + " loss=" + detail::fixed(e.mean_loss, 4));
    };
    TrainResult r = train(train_data, spec, d, tc, on_epoch);
    TrainedDefense& t = out[i];
    t.log_csv = training_log_csv(r.log, digest, config.seed);
    t.checkpoint.defense = d;
    t.checkpoint.params = std::move(r.params);
    t.checkpoint.seed = tc.seed;
    t.checkpoint.config_digest = digest;
    t.checkpoint.log_digest = detail::hex64(fnv1a64(t.log_csv.data(), t.log_csv.size()));
  });
  return out;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, const std::string& defense) {
  return dir / (defense + ".ckpt.json");
}

std::filesystem::path training_log_path(const std::filesystem::path& dir, const std::string& defense) {
  return dir / (defense + ".train.csv");
}

std::vector<Checkpoint> load_checkpoints(const ExperimentConfig& config, const std::filesystem::path& dir) {
  std::vector<std::string> missing;
  for (const auto& d : config.defenses) {
    if (!std::filesystem::exists(checkpoint_path(dir, d.name))) missing.push_back(d.name);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw FormatError("missing checkpoints in " + dir.string() + " for: " + list);
  }
  std::vector<Checkpoint> out;
  for (const auto& d : config.defenses) {
    Checkpoint c = load_checkpoint(checkpoint_path(dir, d.name));
    if (c.defense.name != d.name) {
      throw FormatError(checkpoint_path(dir, d.name).string() + " holds defense '" + c.defense.name + "'");
    }
    out.push_back(std::move(c));
  }
  return out;
}

RobustnessReport evaluate_checkpoints(const ExperimentConfig& config, const std::vector<Checkpoint>& checkpoints,
                                      const Dataset& eval_data, std::size_t threads) {
  std::vector<EvaluatedModel> models;
  for (const auto& c : checkpoints) {
    if (c.params.spec.input_dim() != eval_data.dim()) {
      throw FormatError("checkpoint '" + c.defense.name + "' expects d=" + std::to_string(c.params.spec.input_dim()) +
                        " but the dataset has d=" + std::to_string(eval_data.dim()));
    }
    models.push_back({c.defense.name, c.params, c.defense.noise});
  }
  ReportOptions opt;
  opt.eval = config.evaluation;
  opt.eps_inf = config.epsilon.linf;
  opt.eps_2 = config.epsilon.l2;
  opt.threads = threads;
  opt.eps_sweep = config.eps_sweep;
  RobustnessReport rep = build_report(models, config.attacks, eval_data, opt, config.seed);

  bool per_sample = false;
  for (const auto& d : config.defenses) per_sample = per_sample || d.mat_rand_per_sample;
  std::vector<std::pair<std::string, std::string>> meta = {
      {"config_digest", config_digest(config)},
      {"epsilon_override", config.epsilon.override_pair ? "true" : "false"},
      {"dataset", config.dataset.source == DatasetSource::idx
                      ? "idx:" + config.dataset.idx.eval_images.filename().string() + " d=" + std::to_string(eval_data.dim())
                      : "blobs d=" + std::to_string(eval_data.dim())},
      {"training_noise", "true"},
      {"noise_site", "input"},
      {"cw_search", "lambda"},
      {"mat_rand_sampling", per_sample ? "per-sample" : "per-batch"},
      {"ball_tolerance", detail::exact(kBallTolerance)},
  };
  for (const auto& a : config.attacks) {
    meta.emplace_back("attack." + a.name,
                      std::string(to_string(a.family)) + " norm=" + std::string(to_string(a.norm)) +
                          " eps=" + detail::exact(a.epsilon) + " iterations=" + std::to_string(a.iterations) +
                          " random_start=" + (a.random_start ? "true" : "false") +
                          " eot=" + std::to_string(a.eot_samples));
  }
  rep.metadata.insert(rep.metadata.end(), meta.begin(), meta.end());
  return rep;
}

ReportFiles render_report(const RobustnessReport& report) {
  return {report.to_csv(), report.to_json(), report.ball_stats_csv(), report.sweep_csv()};
}

void write_report(const RobustnessReport& report, const std::filesystem::path& dir) {
  const ReportFiles f = render_report(report);
  write_file_atomic(dir / "report.csv", f.report_csv);
  write_file_atomic(dir / "report.json", f.report_json);
  write_file_atomic(dir / "ballstats.csv", f.ball_stats_csv);
  write_file_atomic(dir / "eps_sweep.csv", f.sweep_csv);
}

}  // namespace normclash
