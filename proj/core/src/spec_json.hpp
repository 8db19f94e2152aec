#pragma once

#include <string>

#include <json.hpp>

#include "normclash/attacks.hpp"
#include "normclash/defenses.hpp"
#include "normclash/model.hpp"
#include "normclash/noise.hpp"

namespace normclash::detail {

using Json = nlohmann::ordered_json;

// Field-checked readers. Every error is a ConfigError whose field is
// `path` + "." + key.
class Reader {
 public:
  Reader(const Json& node, std::string path);

  bool has(const char* key) const;
  double number(const char* key, double fallback) const;
  double number(const char* key) const;
  std::size_t count(const char* key, std::size_t fallback) const;
  std::uint64_t u64(const char* key, std::uint64_t fallback) const;
  bool flag(const char* key, bool fallback) const;
  std::string text(const char* key, const std::string& fallback) const;
  std::string text(const char* key) const;
  const Json& child(const char* key) const;
  std::string field(const char* key) const;
  const std::string& path() const { return path_; }
  // Rejects keys outside `allowed`.
  void only(std::initializer_list<const char*> allowed) const;

 private:
  const Json& at(const char* key) const;
  const Json& node_;
  std::string path_;
};

Json to_json(const NoiseSpec& n);
Json to_json(const AttackSpec& a);
Json to_json(const DefenseSpec& d);
Json to_json(const ModelSpec& m);

NoiseSpec noise_from_json(const Json& j, const std::string& path, const NoiseSpec& defaults);
// Unset epsilon stays 0; the caller fills it in.
AttackSpec attack_from_json(const Json& j, const std::string& path, const AttackSpec& defaults);
DefenseSpec defense_from_json(const Json& j, const std::string& path, const NoiseSpec& noise_defaults,
                              const AttackSpec& inner_defaults);
ModelSpec model_spec_from_json(const Json& j, const std::string& path);

std::string hex64(std::uint64_t v);

}  // namespace normclash::detail
