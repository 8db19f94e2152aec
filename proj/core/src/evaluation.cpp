#include "normclash/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "format.hpp"
#include "normclash/parallel.hpp"
#include "normclash/rng.hpp"

namespace normclash {
namespace {

constexpr std::uint64_t kPredictionTag = 0x70726564;  // "pred"

std::uint64_t name_key(std::string_view s) { return fnv1a64(s.data(), s.size()); }

std::uint64_t model_seed(std::uint64_t seed, std::string_view model) { return mix_seed(seed, name_key(model)); }

void append_rows(Tensor& dst, std::size_t first, const Tensor& src) {
  for (std::size_t i = 0; i < src.rows(); ++i) {
    auto s = src.row(i);
    std::copy(s.begin(), s.end(), dst.row(first + i).begin());
  }
}

std::string cell_text(const std::optional<double>& v) { return v ? detail::fixed(*v, 4) : "NA"; }

}  // namespace

BallStats ball_stats(const Tensor& originals, const Tensor& adversarials, double eps_inf, double eps_2) {
  if (originals.shape() != adversarials.shape()) {
    throw std::invalid_argument("ball_stats: originals " + to_string(originals.shape()) +
                                " and adversarials " + to_string(adversarials.shape()) + " differ");
  }
  if (!(eps_inf > 0.0 && eps_2 > 0.0)) throw std::invalid_argument("ball_stats: epsilons must be > 0");
  BallStats s;
  s.count = originals.rows();
  std::size_t both = 0, l2_only = 0, linf_only = 0, neither = 0;
  double sum_l2 = 0.0, sum_linf = 0.0;
  std::vector<double> tau(originals.cols());
  for (std::size_t i = 0; i < s.count; ++i) {
    auto a = adversarials.row(i);
    auto o = originals.row(i);
    for (std::size_t j = 0; j < tau.size(); ++j) tau[j] = a[j] - o[j];
    const double l2 = l2_norm(tau);
    const double li = linf_norm(tau);
    sum_l2 += l2;
    sum_linf += li;
    const bool in2 = l2 <= eps_2 * (1.0 + kBallTolerance);
    const bool ini = li <= eps_inf * (1.0 + kBallTolerance);
    if (in2 && ini) ++both;
    else if (in2) ++l2_only;
    else if (ini) ++linf_only;
    else ++neither;
  }
  const auto n = static_cast<double>(s.count);
  s.frac_intersection = static_cast<double>(both) / n;
  s.frac_l2_only = static_cast<double>(l2_only) / n;
  s.frac_linf_only = static_cast<double>(linf_only) / n;
  s.frac_outside = static_cast<double>(neither) / n;
  s.frac_inside_l2 = static_cast<double>(both + l2_only) / n;
  s.frac_inside_linf = static_cast<double>(both + linf_only) / n;
  s.mean_l2 = sum_l2 / n;
  s.mean_linf = sum_linf / n;
  return s;
}

SampleStreams prediction_streams(std::uint64_t seed) { return {mix_seed(seed, kPredictionTag), 0}; }

SampleStreams attack_streams(std::uint64_t seed, const AttackSpec& attack) {
  return {mix_seed(seed, name_key(attack.name) ^ static_cast<std::uint64_t>(attack.family)), 0};
}

double natural_accuracy(const ModelParams& params, const NoiseSpec& noise, const Dataset& data,
                        const EvalOptions& options, std::uint64_t seed) {
  const SampleStreams ps = prediction_streams(seed);
  const std::size_t chunk = std::max<std::size_t>(1, options.batch_size);
  std::size_t correct = 0;
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    const std::size_t count = std::min(chunk, data.size() - start);
    const auto pred = classify(params, noise, data.inputs.slice_rows(start, count), options.eot_samples,
                               ps.offset(start), options.rule);
    for (std::size_t i = 0; i < count; ++i) correct += pred[i] == data.labels[start + i];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

AttackEvaluation evaluate_attack(const ModelParams& params, const NoiseSpec& noise, const Dataset& data,
                                 const AttackSpec& attack, const EvalOptions& options, std::uint64_t seed,
                                 double eps_inf, double eps_2) {
  if (params.spec.input_dim() != data.dim()) {
    throw std::invalid_argument("evaluate_attack: model input width " + std::to_string(params.spec.input_dim()) +
                                " does not match dataset d=" + std::to_string(data.dim()));
  }
  const SampleStreams as = attack_streams(seed, attack);
  const SampleStreams ps = prediction_streams(seed);
  const std::size_t chunk = std::max<std::size_t>(1, options.batch_size);
  const std::size_t n = data.size();

  AttackEvaluation ev;
  ev.result.adversarial = Tensor(data.inputs.shape());
  ev.predictions.reserve(n);
  std::size_t correct = 0;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t count = std::min(chunk, n - start);
    const Tensor x = data.inputs.slice_rows(start, count);
    const std::span<const int> y(data.labels.data() + start, count);
    AttackResult part = run_attack(params, noise, x, y, attack, as.offset(start));
    const auto pred = classify(params, noise, part.adversarial, options.eot_samples, ps.offset(start), options.rule);
    for (std::size_t i = 0; i < count; ++i) correct += pred[i] == y[i];
    append_rows(ev.result.adversarial, start, part.adversarial);
    auto cat = [](auto& dst, const auto& src) { dst.insert(dst.end(), src.begin(), src.end()); };
    cat(ev.result.l2_norms, part.l2_norms);
    cat(ev.result.linf_norms, part.linf_norms);
    cat(ev.result.predictions, part.predictions);
    cat(ev.result.success, part.success);
    cat(ev.predictions, pred);
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  ev.stats = ball_stats(data.inputs, ev.result.adversarial, eps_inf, eps_2);
  ev.stats.accuracy = ev.accuracy;
  return ev;
}

double accuracy_under_attack(const ModelParams& params, const NoiseSpec& noise, const Dataset& data,
                             const AttackSpec& attack, std::size_t eot_n, std::uint64_t seed) {
  EvalOptions opt;
  opt.eot_samples = eot_n;
  const double eps = attack.epsilon > 0.0 ? attack.epsilon : 1.0;
  return evaluate_attack(params, noise, data, attack, opt, seed, eps, eps).accuracy;
}

CwShift cw_shift_experiment(const ModelParams& baseline, const ModelParams& at_inf, const Dataset& data,
                            const AttackSpec& cw, double eps_inf, double eps_2, const EvalOptions& options,
                            std::uint64_t seed) {
  if (baseline.spec != at_inf.spec) throw std::invalid_argument("cw_shift_experiment: models differ in architecture");
  const NoiseSpec none;
  return CwShift{evaluate_attack(baseline, none, data, cw, options, model_seed(seed, "baseline"), eps_inf, eps_2),
                 evaluate_attack(at_inf, none, data, cw, options, model_seed(seed, "at-inf"), eps_inf, eps_2)};
}

std::optional<double> RobustnessReport::accuracy(std::string_view defense, std::string_view attack) const {
  for (std::size_t i = 0; i < defenses.size(); ++i) {
    if (defenses[i] != defense) continue;
    for (std::size_t j = 0; j < attacks.size(); ++j) {
      if (attacks[j] == attack) return cells[i][j].accuracy;
    }
  }
  return std::nullopt;
}

std::optional<double> RobustnessReport::min_for(std::string_view defense) const {
  for (std::size_t i = 0; i < defenses.size(); ++i) {
    if (defenses[i] == defense) return min_accuracy[i];
  }
  return std::nullopt;
}

std::string RobustnessReport::to_csv() const {
  std::ostringstream os;
  for (const auto& [k, v] : metadata) os << "# " << k << '=' << v << '\n';
  os << "defense,natural";
  for (const auto& a : attacks) os << ',' << a;
  os << ",min_acc\n";
  for (std::size_t i = 0; i < defenses.size(); ++i) {
    os << defenses[i] << ',' << detail::fixed(natural[i], 4);
    for (const auto& c : cells[i]) os << ',' << cell_text(c.accuracy);
    os << ',' << cell_text(min_accuracy[i]) << '\n';
  }
  return os.str();
}

std::string RobustnessReport::to_json() const {
  using nlohmann::ordered_json;
  ordered_json j;
  ordered_json meta = ordered_json::object();
  for (const auto& [k, v] : metadata) meta[k] = v;
  j["metadata"] = meta;
  j["attacks"] = attacks;
  ordered_json rows = ordered_json::array();
  ordered_json gaps = ordered_json::array();
  for (std::size_t i = 0; i < defenses.size(); ++i) {
    ordered_json row;
    row["defense"] = defenses[i];
    row["natural"] = natural[i];
    ordered_json cellj = ordered_json::object();
    for (std::size_t a = 0; a < attacks.size(); ++a) {
      const auto& c = cells[i][a];
      if (c.accuracy) {
        const auto& s = c.stats;
        cellj[attacks[a]] = {{"accuracy", *c.accuracy},
                             {"ball_stats",
                              {{"frac_inside_l2", s.frac_inside_l2},
                               {"frac_inside_linf", s.frac_inside_linf},
                               {"frac_intersection", s.frac_intersection},
                               {"frac_outside", s.frac_outside},
                               {"mean_l2", s.mean_l2},
                               {"mean_linf", s.mean_linf}}}};
      } else {
        cellj[attacks[a]] = nullptr;
        gaps.push_back({{"defense", defenses[i]}, {"attack", attacks[a]}, {"reason", c.error}});
      }
    }
    row["attacks"] = cellj;
    row["min_acc"] = min_accuracy[i] ? ordered_json(*min_accuracy[i]) : ordered_json(nullptr);
    rows.push_back(row);
  }
  j["defenses"] = rows;
  j["gaps"] = gaps;
  ordered_json sw = ordered_json::array();
  for (const auto& p : sweep) {
    sw.push_back({{"defense", p.defense},
                  {"attack", p.attack},
                  {"factor", p.factor},
                  {"epsilon", p.epsilon},
                  {"accuracy", p.accuracy ? ordered_json(*p.accuracy) : ordered_json(nullptr)}});
  }
  j["eps_sweep"] = sw;
  return j.dump(2) + "\n";
}

std::string ball_stats_header() {
  return "tag,frac_inside_l2,frac_inside_linf,frac_intersection,frac_outside,mean_l2,mean_linf,acc";
}

std::string ball_stats_row(const std::string& tag, const BallStats& s) {
  return tag + ',' + detail::fixed(s.frac_inside_l2) + ',' + detail::fixed(s.frac_inside_linf) + ',' +
         detail::fixed(s.frac_intersection) + ',' + detail::fixed(s.frac_outside) + ',' + detail::fixed(s.mean_l2) +
         ',' + detail::fixed(s.mean_linf) + ',' + detail::fixed(s.accuracy);
}

std::string RobustnessReport::ball_stats_csv() const {
  std::ostringstream os;
  for (const auto& [k, v] : metadata) os << "# " << k << '=' << v << '\n';
  os << ball_stats_header() << '\n';
  for (std::size_t i = 0; i < defenses.size(); ++i) {
    for (std::size_t a = 0; a < attacks.size(); ++a) {
      if (cells[i][a].accuracy) os << ball_stats_row(defenses[i] + "/" + attacks[a], cells[i][a].stats) << '\n';
    }
  }
  return os.str();
}

std::string RobustnessReport::sweep_csv() const {
  std::ostringstream os;
  for (const auto& [k, v] : metadata) os << "# " << k << '=' << v << '\n';
  os << "defense,attack,factor,epsilon,accuracy\n";
  for (const auto& p : sweep) {
    os << p.defense << ',' << p.attack << ',' << detail::fixed(p.factor, 4) << ',' << detail::fixed(p.epsilon) << ','
       << cell_text(p.accuracy) << '\n';
  }
  return os.str();
}

RobustnessReport build_report(std::span<const EvaluatedModel> models, std::span<const AttackSpec> attacks,
                              const Dataset& data, const ReportOptions& options, std::uint64_t seed) {
  for (const auto& m : models) {
    if (m.params.spec.input_dim() != data.dim() || m.params.spec.num_classes() != data.num_classes) {
      throw std::invalid_argument("build_report: model '" + m.name + "' does not match dataset (d=" +
                                  std::to_string(data.dim()) + ", K=" + std::to_string(data.num_classes) + ")");
    }
  }
  RobustnessReport rep;
  const std::size_t nd = models.size();
  const std::size_t na = attacks.size();
  for (const auto& m : models) rep.defenses.push_back(m.name);
  for (const auto& a : attacks) rep.attacks.push_back(a.name);
  rep.natural.assign(nd, 0.0);
  rep.cells.assign(nd, std::vector<ReportCell>(na));

  // Sweep jobs: PGD attacks at each extra epsilon factor.
  struct SweepJob {
    std::size_t model;
    AttackSpec attack;
    double factor;
  };
  std::vector<SweepJob> sweep_jobs;
  for (std::size_t i = 0; i < nd; ++i) {
    for (const auto& a : attacks) {
      if (a.family != AttackFamily::pgd) continue;
      for (double f : options.eps_sweep) {
        if (f == 1.0) continue;
        AttackSpec s = a;
        s.epsilon = a.epsilon * f;
        sweep_jobs.push_back({i, s, f});
      }
    }
  }
  std::vector<std::optional<double>> sweep_acc(sweep_jobs.size());

  const std::size_t grid = nd * (na + 1);
  parallel_for(grid + sweep_jobs.size(), options.threads, [&](std::size_t job) {
    if (job >= grid) {
      const auto& sj = sweep_jobs[job - grid];
      const auto& m = models[sj.model];
      try {
        sweep_acc[job - grid] = evaluate_attack(m.params, m.noise, data, sj.attack, options.eval,
                                                model_seed(seed, m.name), options.eps_inf, options.eps_2)
                                    .accuracy;
      } catch (const std::exception&) {
        sweep_acc[job - grid] = std::nullopt;
      }
      return;
    }
    const std::size_t i = job / (na + 1);
    const std::size_t a = job % (na + 1);
    const auto& m = models[i];
    const std::uint64_t ms = model_seed(seed, m.name);
    if (a == na) {
      rep.natural[i] = natural_accuracy(m.params, m.noise, data, options.eval, ms);
      return;
    }
    ReportCell& cell = rep.cells[i][a];
    try {
      const auto ev = evaluate_attack(m.params, m.noise, data, attacks[a], options.eval, ms, options.eps_inf,
                                      options.eps_2);
      cell.accuracy = ev.accuracy;
      cell.stats = ev.stats;
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });

  rep.min_accuracy.resize(nd);
  for (std::size_t i = 0; i < nd; ++i) {
    if (na == 0) continue;
    std::optional<double> mn;
    bool gap = false;
    for (const auto& c : rep.cells[i]) {
      if (!c.accuracy) gap = true;
      else mn = mn ? std::min(*mn, *c.accuracy) : *c.accuracy;
    }
    if (!gap) rep.min_accuracy[i] = mn;
  }

  // Series in (defense, attack, factor) order; factor 1 is the grid cell.
  std::size_t k = 0;
  for (std::size_t i = 0; i < nd; ++i) {
    for (std::size_t a = 0; a < na; ++a) {
      if (attacks[a].family != AttackFamily::pgd) continue;
      std::vector<SweepPoint> series{{rep.defenses[i], rep.attacks[a], 1.0, attacks[a].epsilon, rep.cells[i][a].accuracy}};
      for (; k < sweep_jobs.size() && sweep_jobs[k].model == i && sweep_jobs[k].attack.name == attacks[a].name; ++k) {
        series.push_back({rep.defenses[i], rep.attacks[a], sweep_jobs[k].factor, sweep_jobs[k].attack.epsilon, sweep_acc[k]});
      }
      std::stable_sort(series.begin(), series.end(),
                       [](const SweepPoint& x, const SweepPoint& y) { return x.factor < y.factor; });
      rep.sweep.insert(rep.sweep.end(), series.begin(), series.end());
    }
  }

  rep.metadata = {{"seed", std::to_string(seed)},
                  {"eps_inf", detail::exact(options.eps_inf)},
                  {"eps_2", detail::exact(options.eps_2)},
                  {"eot_samples", std::to_string(options.eval.eot_samples)},
                  {"prediction_rule",
                   options.eval.rule == PredictionRule::mean_probability ? "mean-probability" : "mean-logits"},
                  {"eval_samples", std::to_string(data.size())}};
  return rep;
}

}  // namespace normclash
