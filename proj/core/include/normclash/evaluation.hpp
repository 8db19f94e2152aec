#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "normclash/attacks.hpp"
#include "normclash/dataset.hpp"
#include "normclash/defenses.hpp"
#include "normclash/model.hpp"

namespace normclash {

// Membership uses ||tau|| <= eps * (1 + kBallTolerance).
inline constexpr double kBallTolerance = 1e-9;

struct BallStats {
  std::size_t count = 0;
  double frac_inside_l2 = 0.0;
  double frac_inside_linf = 0.0;
  double frac_intersection = 0.0;
  double frac_l2_only = 0.0;
  double frac_linf_only = 0.0;
  double frac_outside = 0.0;
  double mean_l2 = 0.0;
  double mean_linf = 0.0;
  double accuracy = 0.0;
};

// Per-row tau = adversarial - original, classified against both balls.
// `accuracy` is left at 0; evaluate_attack fills it.
BallStats ball_stats(const Tensor& originals, const Tensor& adversarials, double eps_inf, double eps_2);

struct EvalOptions {
  std::size_t eot_samples = 20;  // draws per randomized prediction
  std::size_t batch_size = 100;  // attack chunk size; results do not depend on it
  PredictionRule rule = PredictionRule::mean_probability;

  friend bool operator==(const EvalOptions&, const EvalOptions&) = default;
};

struct AttackEvaluation {
  double accuracy = 0.0;
  AttackResult result;         // concatenated over the dataset
  std::vector<int> predictions;  // evaluation-time decisions on the adversarial inputs
  BallStats stats;
};

// Streams derived from a model-level seed. Prediction streams do not depend
// on the attack, so the identity attack reproduces natural accuracy exactly.
SampleStreams prediction_streams(std::uint64_t seed);
SampleStreams attack_streams(std::uint64_t seed, const AttackSpec& attack);

double natural_accuracy(const ModelParams& params, const NoiseSpec& noise, const Dataset& data,
                        const EvalOptions& options, std::uint64_t seed);

AttackEvaluation evaluate_attack(const ModelParams& params, const NoiseSpec& noise, const Dataset& data,
                                 const AttackSpec& attack, const EvalOptions& options, std::uint64_t seed,
                                 double eps_inf, double eps_2);

double accuracy_under_attack(const ModelParams& params, const NoiseSpec& noise, const Dataset& data,
                             const AttackSpec& attack, std::size_t eot_n, std::uint64_t seed);

struct CwShift {
  AttackEvaluation baseline;
  AttackEvaluation adversarially_trained;
};

CwShift cw_shift_experiment(const ModelParams& baseline, const ModelParams& at_inf, const Dataset& data,
                            const AttackSpec& cw, double eps_inf, double eps_2, const EvalOptions& options,
                            std::uint64_t seed);

struct EvaluatedModel {
  std::string name;
  ModelParams params;
  NoiseSpec noise;
};

struct ReportCell {
  std::optional<double> accuracy;
  std::string error;  // reason when accuracy is missing
  BallStats stats;
};

struct SweepPoint {
  std::string defense;
  std::string attack;
  double factor = 1.0;
  double epsilon = 0.0;
  std::optional<double> accuracy;
};

struct ReportOptions {
  EvalOptions eval;
  double eps_inf = 0.0;
  double eps_2 = 0.0;
  std::size_t threads = 1;
  // Extra epsilon multipliers for PGD accuracy-vs-epsilon series.
  std::vector<double> eps_sweep;
};

struct RobustnessReport {
  std::vector<std::string> defenses;
  std::vector<std::string> attacks;
  std::vector<double> natural;
  std::vector<std::vector<ReportCell>> cells;  // [defense][attack]
  std::vector<std::optional<double>> min_accuracy;
  std::vector<SweepPoint> sweep;
  std::vector<std::pair<std::string, std::string>> metadata;

  std::optional<double> accuracy(std::string_view defense, std::string_view attack) const;
  std::optional<double> min_for(std::string_view defense) const;

  // `defense,natural,<attack...>,min_acc`; preceded by `# key=value` lines.
  std::string to_csv() const;
  std::string to_json() const;
  // `tag,frac_inside_l2,frac_inside_linf,frac_intersection,frac_outside,mean_l2,mean_linf,acc`
  std::string ball_stats_csv() const;
  std::string sweep_csv() const;
};

// Evaluates every (model, attack) cell. Cell (i, j) seeds its streams from
// (seed, model name, attack name); cells run on `options.threads` workers.
RobustnessReport build_report(std::span<const EvaluatedModel> models, std::span<const AttackSpec> attacks,
                              const Dataset& data, const ReportOptions& options, std::uint64_t seed);

std::string ball_stats_header();
std::string ball_stats_row(const std::string& tag, const BallStats& s);

}  // namespace normclash
