// normclash: train, attack and evaluate multi-norm defenses from a JSON config.
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "normclash/checkpoint.hpp"
#include "normclash/config.hpp"
#include "normclash/error.hpp"
#include "normclash/geometry.hpp"
#include "normclash/parallel.hpp"
#include "normclash/pipeline.hpp"

namespace nc = normclash;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t threads = 0;
  bool override_epsilon = false;
};

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3 };

int report_error(const char* kind, const std::string& message, const std::string& field = {}) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  if (!field.empty()) j["field"] = field;
  j["message"] = message;
  std::cerr << j.dump() << std::endl;
  return std::string(kind) == "config" ? kConfig : std::string(kind) == "io" ? kIo : kFailure;
}

void log(const std::string& line) { std::cerr << line << std::endl; }

nc::ExperimentConfig load(const Common& c) {
  nc::ExperimentConfig cfg = nc::load_config(c.config, c.override_epsilon);
  if (c.seed_set) {
    cfg.seed = c.seed;
    cfg.train.seed = c.seed;
  }
  return cfg;
}

fs::path out_dir(const Common& c, const nc::ExperimentConfig& cfg) {
  if (!c.out.empty()) return c.out;
  // A relative output_dir in the config is relative to the config file.
  fs::path p = cfg.output_dir;
  return p.is_absolute() ? p : fs::path(c.config).parent_path() / p;
}

void add_common(CLI::App* sub, Common& c, bool needs_config) {
  auto* opt = sub->add_option("--config", c.config, "experiment config (JSON)");
  if (needs_config) opt->required()->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "output directory (default: the config's output_dir)");
  sub->add_option("--seed", c.seed, "override the global seed")->each([&c](const std::string&) { c.seed_set = true; });
  sub->add_option("--threads", c.threads, "worker threads (default: $NORMCLASH_THREADS or 1)");
  sub->add_flag("--override-epsilon", c.override_epsilon, "accept an eps pair that is not volume-calibrated");
}

int cmd_train(const Common& c, const std::vector<std::string>& only) {
  const auto cfg = load(c);
  const fs::path dir = out_dir(c, cfg);
  const auto data = nc::load_data(cfg);
  log("train: " + std::to_string(data.train.size()) + " samples, d=" + std::to_string(data.train.dim()) +
      ", " + std::to_string(cfg.defenses.size()) + " defenses, config " + nc::config_digest(cfg));
  const auto trained = nc::train_defenses(cfg, data.train, nc::resolve_threads(c.threads), only, log);
  for (const auto& t : trained) {
    nc::save_checkpoint(t.checkpoint, nc::checkpoint_path(dir, t.checkpoint.defense.name));
    nc::write_file_atomic(nc::training_log_path(dir, t.checkpoint.defense.name), t.log_csv);
    log("wrote " + nc::checkpoint_path(dir, t.checkpoint.defense.name).string());
  }
  return kOk;
}

int cmd_evaluate(const Common& c, const std::string& checkpoint_dir) {
  const auto cfg = load(c);
  const fs::path dir = out_dir(c, cfg);
  const fs::path ckpt_dir = checkpoint_dir.empty() ? dir : fs::path(checkpoint_dir);
  const auto checkpoints = nc::load_checkpoints(cfg, ckpt_dir);
  const auto data = nc::load_data(cfg);
  log("evaluate: " + std::to_string(checkpoints.size()) + " models x " + std::to_string(cfg.attacks.size()) +
      " attacks on " + std::to_string(data.eval.size()) + " samples");
  const auto report = nc::evaluate_checkpoints(cfg, checkpoints, data.eval, nc::resolve_threads(c.threads));
  nc::write_report(report, dir);
  std::cout << report.to_csv();
  for (std::size_t i = 0; i < report.defenses.size(); ++i) {
    for (std::size_t a = 0; a < report.attacks.size(); ++a) {
      const auto& cell = report.cells[i][a];
      if (!cell.accuracy) log("gap: " + report.defenses[i] + " x " + report.attacks[a] + ": " + cell.error);
    }
  }
  return kOk;
}

int cmd_attack(const Common& c, const std::string& checkpoint, const std::string& attack_name) {
  const auto cfg = load(c);
  const nc::AttackSpec* attack = nullptr;
  for (const auto& a : cfg.attacks) attack = a.name == attack_name ? &a : attack;
  if (!attack) throw nc::ConfigError("attacks", "no attack named '" + attack_name + "' in the config");
  const auto ckpt = nc::load_checkpoint(checkpoint);
  const auto data = nc::load_data(cfg);
  const auto seed = nc::mix_seed(cfg.seed, nc::fnv1a64(ckpt.defense.name.data(), ckpt.defense.name.size()));
  const auto ev = nc::evaluate_attack(ckpt.params, ckpt.defense.noise, data.eval, *attack, cfg.evaluation, seed,
                                      cfg.epsilon.linf, cfg.epsilon.l2);
  std::ostringstream os;
  os << "# config_digest=" << nc::config_digest(cfg) << "\n# seed=" << cfg.seed << "\n";
  os << "index,label,prediction,success,l2,linf\n";
  char buf[64];
  for (std::size_t i = 0; i < data.eval.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", ev.result.l2_norms[i], ev.result.linf_norms[i]);
    os << i << ',' << data.eval.labels[i] << ',' << ev.predictions[i] << ','
       << (ev.predictions[i] != data.eval.labels[i] ? 1 : 0) << ',' << buf << '\n';
  }
  const fs::path dir = out_dir(c, cfg);
  nc::write_file_atomic(dir / (ckpt.defense.name + "." + attack->name + ".samples.csv"), os.str());
  std::cout << nc::ball_stats_header() << '\n'
            << nc::ball_stats_row(ckpt.defense.name + "/" + attack->name, ev.stats) << '\n';
  return kOk;
}

int cmd_geometry(const std::vector<std::size_t>& dims, std::size_t samples, std::size_t mc_max_dim, std::uint64_t seed,
                 std::size_t threads) {
  namespace g = nc::geometry;
  std::printf("# seed=%llu\n# samples=%zu\n", static_cast<unsigned long long>(seed), samples);
  std::printf("d,r2,hoeffding_log10,asymptotic_log10,monte_carlo_ratio,monte_carlo_hits,monte_carlo_half_width\n");
  for (std::size_t d : dims) {
    if (d == 0) throw nc::ConfigError("dims", "dimensions must be >= 1");
    const auto h = g::hoeffding_bound(d);
    const auto a = g::asymptotic_bound(d);
    std::printf("%zu,%.4f,%.4f,%.4f,", d, g::equal_volume_radius(d), h.log10_value, a.log10_value);
    if (samples == 0 || d > mc_max_dim) {
      std::printf("NA,NA,NA\n");
      continue;
    }
    const auto mc = g::monte_carlo_intersection(d, samples, seed, threads);
    if (mc.hits == 0) std::printf("0-hits,0,%.6f\n", mc.half_width);
    else std::printf("%.6f,%zu,%.6f\n", mc.ratio, mc.hits, mc.half_width);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"normclash: multi-norm adversarial robustness toolkit"};
  app.require_subcommand(1);

  Common common;
  std::vector<std::string> only;
  auto* train = app.add_subcommand("train", "train one model per configured defense");
  add_common(train, common, true);
  train->add_option("--only", only, "restrict to these defense names")->delimiter(',');

  std::string checkpoint_dir;
  auto* evaluate = app.add_subcommand("evaluate", "run the defense x attack grid");
  add_common(evaluate, common, true);
  evaluate->add_option("--checkpoints", checkpoint_dir, "checkpoint directory (default: --out)");

  std::string checkpoint, attack_name;
  auto* attack = app.add_subcommand("attack", "attack one checkpoint with one configured attack");
  add_common(attack, common, true);
  attack->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  attack->add_option("--attack", attack_name, "attack name from the config")->required();

  std::vector<std::size_t> dims = {2, 784, 3072, 150528};
  std::size_t samples = 1000000;
  std::uint64_t geo_seed = 0;
  std::size_t geo_threads = 0;
  auto* geometry = app.add_subcommand("geometry", "volume bounds and Monte Carlo intersection estimates");
  geometry->add_option("--dims", dims, "dimensions")->delimiter(',');
  geometry->add_option("--samples", samples, "Monte Carlo samples per dimension (0 skips, else >= 10000)");
  std::size_t mc_max_dim = 4096;
  geometry->add_option("--mc-max-dim", mc_max_dim, "skip Monte Carlo above this dimension (prints NA)");
  geometry->add_option("--seed", geo_seed, "Monte Carlo seed");
  geometry->add_option("--threads", geo_threads, "worker threads");

  double eps_inf = 0.0;
  std::size_t dim = 0;
  auto* calibrate = app.add_subcommand("calibrate", "print the equal-volume eps_2 for (eps_inf, d)");
  calibrate->add_option("eps_inf", eps_inf)->required()->check(CLI::PositiveNumber);
  calibrate->add_option("d", dim)->required()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what());
  }

  try {
    if (*train) return cmd_train(common, only);
    if (*evaluate) return cmd_evaluate(common, checkpoint_dir);
    if (*attack) return cmd_attack(common, checkpoint, attack_name);
    if (*geometry) return cmd_geometry(dims, samples, mc_max_dim, geo_seed, nc::resolve_threads(geo_threads));
    if (*calibrate) {
      std::printf("%.6f\n", nc::geometry::calibrate_epsilon(eps_inf, dim));
      return kOk;
    }
  } catch (const nc::ConfigError& e) {
    return report_error("config", e.what(), e.field());
  } catch (const nc::FormatError& e) {
    return report_error("io", e.what());
  } catch (const fs::filesystem_error& e) {
    return report_error("io", e.what());
  } catch (const nc::DivergenceError& e) {
    return report_error("divergence", e.what());
  } catch (const std::exception& e) {
    return report_error("failure", e.what());
  }
  return kOk;
}
