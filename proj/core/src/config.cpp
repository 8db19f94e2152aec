#include "normclash/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "format.hpp"
#include "normclash/error.hpp"
#include "normclash/geometry.hpp"
#include "normclash/rng.hpp"
#include "spec_json.hpp"

namespace normclash {
namespace detail {

Reader::Reader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
  if (!node_.is_object()) throw ConfigError(path_, path_ + ": expected an object");
}

std::string Reader::field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

bool Reader::has(const char* key) const { return node_.contains(key) && !node_.at(key).is_null(); }

const Json& Reader::at(const char* key) const {
  if (!has(key)) throw ConfigError(field(key), field(key) + ": missing");
  return node_.at(key);
}

double Reader::number(const char* key) const {
  const Json& v = at(key);
  if (!v.is_number()) throw ConfigError(field(key), field(key) + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(field(key), field(key) + ": must be finite");
  return d;
}

double Reader::number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

std::uint64_t Reader::u64(const char* key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const Json& v = at(key);
  if (!v.is_number_unsigned()) throw ConfigError(field(key), field(key) + ": expected a non-negative integer");
  return v.get<std::uint64_t>();
}

std::size_t Reader::count(const char* key, std::size_t fallback) const {
  return static_cast<std::size_t>(u64(key, fallback));
}

bool Reader::flag(const char* key, bool fallback) const {
  if (!has(key)) return fallback;
  const Json& v = at(key);
  if (!v.is_boolean()) throw ConfigError(field(key), field(key) + ": expected true or false");
  return v.get<bool>();
}

std::string Reader::text(const char* key) const {
  const Json& v = at(key);
  if (!v.is_string()) throw ConfigError(field(key), field(key) + ": expected a string");
  return v.get<std::string>();
}

std::string Reader::text(const char* key, const std::string& fallback) const {
  return has(key) ? text(key) : fallback;
}

const Json& Reader::child(const char* key) const { return at(key); }

void Reader::only(std::initializer_list<const char*> allowed) const {
  for (const auto& [k, v] : node_.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError(field(k.c_str()), field(k.c_str()) + ": unknown key");
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

template <class Fn>
auto parse_enum(const Reader& r, const char* key, Fn&& fn) {
  const std::string name = r.text(key);
  try {
    return fn(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(r.field(key), r.field(key) + ": " + e.what());
  }
}

std::string_view optimizer_name(CwOptimizer o) { return o == CwOptimizer::adam ? "adam" : "gd"; }

CwOptimizer parse_optimizer(std::string_view s) {
  if (s == "gd") return CwOptimizer::gradient_descent;
  if (s == "adam") return CwOptimizer::adam;
  throw std::invalid_argument("unknown optimizer '" + std::string(s) + "' (expected gd or adam)");
}

}  // namespace

Json to_json(const NoiseSpec& n) {
  return Json{{"kind", to_string(n.kind)}, {"sigma_gauss", n.sigma_gauss}, {"sigma_uniform", n.sigma_uniform}};
}

Json to_json(const AttackSpec& a) {
  return Json{{"name", a.name},
              {"family", to_string(a.family)},
              {"norm", to_string(a.norm)},
              {"epsilon", a.epsilon},
              {"step_size", a.step_size},
              {"iterations", a.iterations},
              {"random_start", a.random_start},
              {"eot_samples", a.eot_samples},
              {"initial_lambda", a.initial_lambda},
              {"search_steps", a.search_steps},
              {"lambda_min", a.lambda_min},
              {"lambda_max", a.lambda_max},
              {"kappa", a.kappa},
              {"learning_rate", a.learning_rate},
              {"optimizer", optimizer_name(a.optimizer)}};
}

Json to_json(const DefenseSpec& d) {
  return Json{{"name", d.name},
              {"kind", to_string(d.kind)},
              {"norm", to_string(d.norm)},
              {"noise", to_json(d.noise)},
              {"eps_inf", d.eps_inf},
              {"eps_2", d.eps_2},
              {"mat_rand_per_sample", d.mat_rand_per_sample},
              {"inner", to_json(d.inner)}};
}

Json to_json(const ModelSpec& m) { return Json{{"widths", m.widths}}; }

NoiseSpec noise_from_json(const Json& j, const std::string& path, const NoiseSpec& defaults) {
  NoiseSpec n;
  if (j.is_string()) {
    try {
      n.kind = parse_noise_kind(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path, path + ": " + e.what());
    }
    n.sigma_gauss = defaults.sigma_gauss;
    n.sigma_uniform = defaults.sigma_uniform;
  } else {
    Reader r(j, path);
    r.only({"kind", "sigma_gauss", "sigma_uniform"});
    n.kind = parse_enum(r, "kind", parse_noise_kind);
    n.sigma_gauss = r.number("sigma_gauss", defaults.sigma_gauss);
    n.sigma_uniform = r.number("sigma_uniform", defaults.sigma_uniform);
  }
  // Unused scales are dropped so that equal distributions compare equal.
  if (n.kind == NoiseKind::none) n.sigma_gauss = n.sigma_uniform = 0.0;
  if (n.kind == NoiseKind::gaussian) n.sigma_uniform = 0.0;
  if (n.kind == NoiseKind::uniform) n.sigma_gauss = 0.0;
  try {
    n.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, path + ": " + e.what());
  }
  return n;
}

AttackSpec attack_from_json(const Json& j, const std::string& path, const AttackSpec& defaults) {
  Reader r(j, path);
  r.only({"name", "family", "norm", "epsilon", "step_size", "iterations", "random_start", "eot_samples",
          "initial_lambda", "search_steps", "lambda_min", "lambda_max", "kappa", "learning_rate", "optimizer"});
  AttackSpec a = defaults;
  a.name = r.text("name", defaults.name);
  if (r.has("family")) a.family = parse_enum(r, "family", parse_attack_family);
  if (r.has("norm")) a.norm = parse_enum(r, "norm", parse_norm);
  if (a.family == AttackFamily::cw) {
    if (r.has("norm") && a.norm != Norm::l2) throw ConfigError(r.field("norm"), r.field("norm") + ": C&W is l2 only");
    a.norm = Norm::l2;
  }
  a.epsilon = r.number("epsilon", defaults.epsilon);
  a.step_size = r.number("step_size", defaults.step_size);
  a.iterations = r.count("iterations", defaults.iterations);
  // C&W starts from the clean input unless asked otherwise.
  const bool start_default = a.family == AttackFamily::cw && defaults.family != AttackFamily::cw
                                 ? AttackSpec::cw(1).random_start
                                 : defaults.random_start;
  a.random_start = r.flag("random_start", start_default);
  a.eot_samples = r.count("eot_samples", defaults.eot_samples);
  a.initial_lambda = r.number("initial_lambda", defaults.initial_lambda);
  a.search_steps = r.count("search_steps", defaults.search_steps);
  a.lambda_min = r.number("lambda_min", defaults.lambda_min);
  a.lambda_max = r.number("lambda_max", defaults.lambda_max);
  a.kappa = r.number("kappa", defaults.kappa);
  a.learning_rate = r.number("learning_rate", defaults.learning_rate);
  if (r.has("optimizer")) a.optimizer = parse_enum(r, "optimizer", parse_optimizer);
  return a;
}

DefenseSpec defense_from_json(const Json& j, const std::string& path, const NoiseSpec& noise_defaults,
                              const AttackSpec& inner_defaults) {
  Reader r(j, path);
  r.only({"name", "kind", "norm", "noise", "eps_inf", "eps_2", "mat_rand_per_sample", "inner"});
  DefenseSpec d;
  d.kind = parse_enum(r, "kind", parse_defense_kind);
  d.name = r.text("name", std::string(to_string(d.kind)));
  if (r.has("norm")) d.norm = parse_enum(r, "norm", parse_norm);
  if (r.has("noise")) d.noise = noise_from_json(r.child("noise"), r.field("noise"), noise_defaults);
  d.eps_inf = r.number("eps_inf", 0.0);
  d.eps_2 = r.number("eps_2", 0.0);
  d.mat_rand_per_sample = r.flag("mat_rand_per_sample", false);
  d.inner = r.has("inner") ? attack_from_json(r.child("inner"), r.field("inner"), inner_defaults) : inner_defaults;
  return d;
}

ModelSpec model_spec_from_json(const Json& j, const std::string& path) {
  Reader r(j, path);
  r.only({"widths"});
  ModelSpec m;
  const Json& w = r.child("widths");
  if (!w.is_array()) throw ConfigError(r.field("widths"), r.field("widths") + ": expected an array");
  for (const auto& v : w) {
    if (!v.is_number_unsigned()) throw ConfigError(r.field("widths"), r.field("widths") + ": expected integers");
    m.widths.push_back(v.get<std::size_t>());
  }
  try {
    m.validate();
  } catch (const std::exception& e) {
    throw ConfigError(r.field("widths"), e.what());
  }
  return m;
}

}  // namespace detail

using detail::Json;
using detail::Reader;

namespace {

std::string_view rule_name(PredictionRule r) {
  return r == PredictionRule::mean_probability ? "mean-probability" : "mean-logits";
}

std::uint32_t read_be32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw FormatError("truncated IDX header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <class Fn>
void wrap(const std::string& field, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(field, field + ": " + e.what());
  }
}

}  // namespace

std::size_t ExperimentConfig::input_dim() const {
  if (dataset.source == DatasetSource::blobs) return dataset.blobs.dim;
  std::ifstream in(dataset.idx.eval_images, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + dataset.idx.eval_images.string());
  if (read_be32(in) != kIdxImageMagic) throw FormatError(dataset.idx.eval_images.string() + ": not an IDX image file");
  read_be32(in);
  const std::size_t rows = read_be32(in);
  return rows * read_be32(in);
}

ModelSpec ExperimentConfig::model_spec(std::size_t d, std::size_t k) const {
  ModelSpec m;
  m.widths.push_back(d);
  m.widths.insert(m.widths.end(), hidden.begin(), hidden.end());
  m.widths.push_back(k);
  return m;
}

TrainConfig ExperimentConfig::train_config_for(const DefenseSpec& defense) const {
  TrainConfig t = train;
  t.seed = mix_seed(seed, fnv1a64(defense.name.data(), defense.name.size()));
  return t;
}

void check_epsilon_pair(const EpsilonConfig& eps, std::size_t dim) {
  if (!(eps.linf > 0.0)) throw ConfigError("epsilon.linf", "epsilon.linf: must be > 0");
  if (!(eps.l2 > 0.0)) throw ConfigError("epsilon.l2", "epsilon.l2: must be > 0");
  if (eps.override_pair) return;
  const double want = geometry::calibrate_epsilon(eps.linf, dim);
  if (std::abs(eps.l2 - want) > kEpsilonPairTolerance * want) {
    throw ConfigError("epsilon.l2", "epsilon.l2: " + detail::exact(eps.l2) + " is not the equal-volume partner of linf " +
                                        detail::exact(eps.linf) + " at d=" + std::to_string(dim) +
                                        "; expected " + detail::fixed(want, 6) + " (or set override)");
  }
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                              bool override_epsilon) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  const Reader r(root, "");
  r.only({"seed", "output_dir", "dataset", "model", "train", "epsilon", "noise", "inner_attack", "defenses",
          "attacks", "evaluation"});
  ExperimentConfig c;
  if (!r.has("seed")) throw ConfigError("seed", "seed: missing (a seed is required for reproducibility)");
  c.seed = r.u64("seed", 0);
  c.output_dir = r.text("output_dir", "out");

  {
    const Reader ds(r.child("dataset"), "dataset");
    const std::string src = ds.text("source");
    if (src == "idx") {
      ds.only({"source", "train_images", "train_labels", "eval_images", "eval_labels", "train_limit", "eval_limit"});
      c.dataset.source = DatasetSource::idx;
      auto& s = c.dataset.idx;
      s.train_images = resolve(base_dir, ds.text("train_images"));
      s.train_labels = resolve(base_dir, ds.text("train_labels"));
      s.eval_images = resolve(base_dir, ds.text("eval_images"));
      s.eval_labels = resolve(base_dir, ds.text("eval_labels"));
      s.train_limit = ds.count("train_limit", 0);
      s.eval_limit = ds.count("eval_limit", 0);
    } else if (src == "blobs") {
      ds.only({"source", "train_size", "eval_size", "dim", "classes", "spread"});
      c.dataset.source = DatasetSource::blobs;
      auto& b = c.dataset.blobs;
      b.train_size = ds.count("train_size", b.train_size);
      b.eval_size = ds.count("eval_size", b.eval_size);
      b.dim = ds.count("dim", b.dim);
      b.classes = ds.count("classes", b.classes);
      b.spread = ds.number("spread", b.spread);
      if (b.train_size == 0 || b.eval_size == 0 || b.dim == 0 || b.classes < 2 || !(b.spread > 0.0)) {
        throw ConfigError("dataset", "dataset: blobs need positive sizes, >= 2 classes and spread > 0");
      }
    } else {
      throw ConfigError("dataset.source", "dataset.source: expected idx or blobs, got '" + src + "'");
    }
  }

  if (r.has("model")) {
    const Reader m(r.child("model"), "model");
    m.only({"hidden"});
    c.hidden.clear();
    if (m.has("hidden")) {
      const Json& h = m.child("hidden");
      if (!h.is_array()) throw ConfigError("model.hidden", "model.hidden: expected an array");
      for (const auto& v : h) {
        if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) {
          throw ConfigError("model.hidden", "model.hidden: widths must be positive integers");
        }
        c.hidden.push_back(v.get<std::size_t>());
      }
    }
  }

  if (r.has("train")) {
    const Reader t(r.child("train"), "train");
    t.only({"epochs", "batch_size", "learning_rate", "momentum"});
    c.train.epochs = t.count("epochs", c.train.epochs);
    c.train.batch_size = t.count("batch_size", c.train.batch_size);
    c.train.learning_rate = t.number("learning_rate", c.train.learning_rate);
    c.train.momentum = t.number("momentum", c.train.momentum);
  }
  c.train.seed = c.seed;
  wrap("train", [&] { c.train.validate(); });

  const std::size_t dim = c.dataset.source == DatasetSource::blobs ? c.dataset.blobs.dim : 0;
  auto input_dim = [&] {
    if (dim) return dim;
    try {
      return c.input_dim();
    } catch (const std::exception& e) {
      throw ConfigError("dataset.eval_images", std::string("dataset.eval_images: ") + e.what());
    }
  };

  {
    const Reader e(r.child("epsilon"), "epsilon");
    e.only({"linf", "l2", "override"});
    c.epsilon.linf = e.number("linf");
    c.epsilon.override_pair = e.flag("override", false) || override_epsilon;
    c.epsilon.l2 = e.has("l2") ? e.number("l2") : geometry::calibrate_epsilon(c.epsilon.linf, input_dim());
    check_epsilon_pair(c.epsilon, input_dim());
  }

  NoiseSpec noise_defaults{NoiseKind::none, 0.25, 0.2};
  if (r.has("noise")) {
    const Reader n(r.child("noise"), "noise");
    n.only({"sigma_gauss", "sigma_uniform"});
    noise_defaults.sigma_gauss = n.number("sigma_gauss", noise_defaults.sigma_gauss);
    noise_defaults.sigma_uniform = n.number("sigma_uniform", noise_defaults.sigma_uniform);
  }

  AttackSpec inner = AttackSpec::pgd(Norm::linf, 0.0, 10);
  inner.name = "inner";
  if (r.has("inner_attack")) inner = detail::attack_from_json(r.child("inner_attack"), "inner_attack", inner);
  if (inner.family != AttackFamily::pgd) throw ConfigError("inner_attack.family", "inner_attack.family: must be pgd");

  if (r.has("defenses")) {
    const Json& arr = r.child("defenses");
    if (!arr.is_array()) throw ConfigError("defenses", "defenses: expected an array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "defenses[" + std::to_string(i) + "]";
      DefenseSpec d = detail::defense_from_json(arr[i], path, noise_defaults, inner);
      const bool explicit_pair = d.eps_inf > 0.0 || d.eps_2 > 0.0;
      if (d.eps_inf == 0.0) d.eps_inf = c.epsilon.linf;
      if (d.eps_2 == 0.0) d.eps_2 = c.epsilon.l2;
      if (explicit_pair) {
        try {
          check_epsilon_pair({d.eps_inf, d.eps_2, c.epsilon.override_pair}, input_dim());
        } catch (const ConfigError& e) {
          throw ConfigError(path + ".eps_2", path + "." + e.what());
        }
      }
      wrap(path, [&] { d.validate(); });
      if (!names.insert(d.name).second) throw ConfigError(path + ".name", path + ".name: duplicate '" + d.name + "'");
      c.defenses.push_back(std::move(d));
    }
  }

  if (r.has("attacks")) {
    const Json& arr = r.child("attacks");
    if (!arr.is_array()) throw ConfigError("attacks", "attacks: expected an array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "attacks[" + std::to_string(i) + "]";
      AttackSpec a = detail::attack_from_json(arr[i], path, AttackSpec{});
      if (a.name.empty()) throw ConfigError(path + ".name", path + ".name: missing");
      if (a.family == AttackFamily::pgd && a.epsilon == 0.0) {
        a.epsilon = a.norm == Norm::linf ? c.epsilon.linf : c.epsilon.l2;
      }
      wrap(path, [&] { a.validate(); });
      if (!names.insert(a.name).second) throw ConfigError(path + ".name", path + ".name: duplicate '" + a.name + "'");
      c.attacks.push_back(std::move(a));
    }
  }

  if (r.has("evaluation")) {
    const Reader e(r.child("evaluation"), "evaluation");
    e.only({"eot_samples", "batch_size", "rule", "eps_sweep"});
    c.evaluation.eot_samples = e.count("eot_samples", c.evaluation.eot_samples);
    c.evaluation.batch_size = e.count("batch_size", c.evaluation.batch_size);
    const std::string rule = e.text("rule", "mean-probability");
    if (rule == "mean-probability") c.evaluation.rule = PredictionRule::mean_probability;
    else if (rule == "mean-logits") c.evaluation.rule = PredictionRule::mean_logits;
    else throw ConfigError("evaluation.rule", "evaluation.rule: expected mean-probability or mean-logits");
    if (c.evaluation.eot_samples == 0) throw ConfigError("evaluation.eot_samples", "evaluation.eot_samples: must be >= 1");
    if (c.evaluation.batch_size == 0) throw ConfigError("evaluation.batch_size", "evaluation.batch_size: must be >= 1");
    if (e.has("eps_sweep")) {
      const Json& s = e.child("eps_sweep");
      if (!s.is_array()) throw ConfigError("evaluation.eps_sweep", "evaluation.eps_sweep: expected an array");
      for (const auto& v : s) {
        if (!v.is_number() || !(v.get<double>() > 0.0)) {
          throw ConfigError("evaluation.eps_sweep", "evaluation.eps_sweep: factors must be positive numbers");
        }
        c.eps_sweep.push_back(v.get<double>());
      }
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, bool override_epsilon) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("", e.what());
  }
  return parse_config(text, path.parent_path(), override_epsilon);
}

std::string serialize_config(const ExperimentConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.string();
  if (c.dataset.source == DatasetSource::idx) {
    const auto& s = c.dataset.idx;
    j["dataset"] = {{"source", "idx"},
                    {"train_images", s.train_images.string()},
                    {"train_labels", s.train_labels.string()},
                    {"eval_images", s.eval_images.string()},
                    {"eval_labels", s.eval_labels.string()},
                    {"train_limit", s.train_limit},
                    {"eval_limit", s.eval_limit}};
  } else {
    const auto& b = c.dataset.blobs;
    j["dataset"] = {{"source", "blobs"},     {"train_size", b.train_size}, {"eval_size", b.eval_size},
                    {"dim", b.dim},          {"classes", b.classes},       {"spread", b.spread}};
  }
  j["model"] = {{"hidden", c.hidden}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"momentum", c.train.momentum}};
  j["epsilon"] = {{"linf", c.epsilon.linf}, {"l2", c.epsilon.l2}, {"override", c.epsilon.override_pair}};
  Json defs = Json::array();
  for (const auto& d : c.defenses) defs.push_back(detail::to_json(d));
  j["defenses"] = defs;
  Json atts = Json::array();
  for (const auto& a : c.attacks) atts.push_back(detail::to_json(a));
  j["attacks"] = atts;
  j["evaluation"] = {{"eot_samples", c.evaluation.eot_samples},
                     {"batch_size", c.evaluation.batch_size},
                     {"rule", rule_name(c.evaluation.rule)},
                     {"eps_sweep", c.eps_sweep}};
  return j.dump(2) + "\n";
}

std::string config_digest(const ExperimentConfig& c) {
  const std::string s = serialize_config(c);
  return detail::hex64(fnv1a64(s.data(), s.size()));
}

DataSplit load_data(const ExperimentConfig& c) {
  DataSplit out;
  if (c.dataset.source == DatasetSource::blobs) {
    const auto& b = c.dataset.blobs;
    const Dataset all = make_blobs(b.train_size + b.eval_size, b.dim, b.classes, b.spread, c.seed);
    std::vector<std::size_t> tr(b.train_size), ev(b.eval_size);
    for (std::size_t i = 0; i < tr.size(); ++i) tr[i] = i;
    for (std::size_t i = 0; i < ev.size(); ++i) ev[i] = b.train_size + i;
    out.train = all.subset(tr);
    out.eval = all.subset(ev);
    return out;
  }
  const auto& s = c.dataset.idx;
  out.train = load_idx(s.train_images, s.train_labels);
  out.eval = load_idx(s.eval_images, s.eval_labels, out.train.num_classes);
  if (s.train_limit && s.train_limit < out.train.size()) out.train = out.train.head(s.train_limit);
  if (s.eval_limit && s.eval_limit < out.eval.size()) out.eval = out.eval.head(s.eval_limit);
  if (out.train.dim() != out.eval.dim()) {
    throw FormatError("train and eval images differ in width (" + std::to_string(out.train.dim()) + " vs " +
                      std::to_string(out.eval.dim()) + ")");
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace normclash
