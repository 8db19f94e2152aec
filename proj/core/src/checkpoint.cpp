#include "normclash/checkpoint.hpp"

#include <sstream>

#include "format.hpp"
#include "normclash/config.hpp"
#include "normclash/error.hpp"
#include "normclash/rng.hpp"
#include "spec_json.hpp"

namespace normclash {

using detail::Json;

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  // Parameters are written by hand at 17 significant digits so that the file
  // does not depend on the JSON library's float printer.
  Json head;
  head["format_version"] = ckpt.format_version;
  head["model"] = detail::to_json(ckpt.params.spec);
  head["noise"] = detail::to_json(ckpt.defense.noise);
  head["defense"] = detail::to_json(ckpt.defense);
  head["seed"] = ckpt.seed;
  head["config_digest"] = ckpt.config_digest;
  head["log_digest"] = ckpt.log_digest;
  std::string text = head.dump(2);
  text.pop_back();  // closing brace
  while (!text.empty() && (text.back() == '\n' || text.back() == ' ')) text.pop_back();
  text += ",\n  \"parameters\": [";
  const auto flat = ckpt.params.flatten();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (i) text += ',';
    text += (i % 8 == 0) ? "\n    " : " ";
    text += detail::exact(flat[i]);
  }
  text += "\n  ]\n}\n";
  return text;
}

Checkpoint parse_checkpoint(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("checkpoint: malformed JSON: ") + e.what());
  }
  try {
    Checkpoint c;
    const detail::Reader r(j, "checkpoint");
    c.format_version = static_cast<int>(r.u64("format_version", 0));
    if (c.format_version != kCheckpointVersion) {
      throw FormatError("checkpoint: unsupported format_version " + std::to_string(c.format_version) + " (expected " +
                        std::to_string(kCheckpointVersion) + ")");
    }
    const ModelSpec spec = detail::model_spec_from_json(r.child("model"), "checkpoint.model");
    c.defense = detail::defense_from_json(r.child("defense"), "checkpoint.defense", {}, AttackSpec{});
    const NoiseSpec noise = detail::noise_from_json(r.child("noise"), "checkpoint.noise", {});
    if (!(noise == c.defense.noise)) throw FormatError("checkpoint: noise disagrees with the defense's noise");
    c.seed = r.u64("seed", 0);
    c.config_digest = r.text("config_digest", "");
    c.log_digest = r.text("log_digest", "");
    const Json& p = r.child("parameters");
    if (!p.is_array()) throw FormatError("checkpoint: parameters must be an array");
    if (p.size() != spec.parameter_count()) {
      throw FormatError("checkpoint: " + std::to_string(p.size()) + " parameters, model spec needs " +
                        std::to_string(spec.parameter_count()));
    }
    std::vector<double> flat;
    flat.reserve(p.size());
    for (const auto& v : p) {
      if (!v.is_number()) throw FormatError("checkpoint: non-numeric parameter");
      flat.push_back(v.get<double>());
    }
    c.params = ModelParams::unflatten(spec, flat);
    return c;
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::runtime_error& e) {
    throw FormatError(e.what());
  }
  return parse_checkpoint(text);
}

std::string training_log_csv(const std::vector<EpochLog>& log, const std::string& config_digest,
                             std::uint64_t seed) {
  std::ostringstream os;
  os << "# config_digest=" << config_digest << "\n# seed=" << seed << "\nepoch,natural_accuracy,mean_loss\n";
  for (const auto& e : log) {
    os << e.epoch << ',' << detail::fixed(e.natural_accuracy) << ',' << detail::exact(e.mean_loss) << '\n';
  }
  return os.str();
}

}  // namespace normclash
