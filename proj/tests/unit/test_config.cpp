#include <gtest/gtest.h>

#include <filesystem>

#include "normclash/config.hpp"
#include "normclash/error.hpp"
#include "normclash/geometry.hpp"

using namespace normclash;

namespace {

std::string blobs_config(const std::string& defenses, const std::string& epsilon = R"({"linf": 0.05})") {
  return R"({"seed": 5, "dataset": {"source": "blobs", "train_size": 50, "eval_size": 10, "dim": 8, "classes": 3},
  "model": {"hidden": [4]}, "train": {"epochs": 1}, "epsilon": )" +
         epsilon + R"(, "defenses": )" + defenses + R"(,
  "attacks": [{"name": "pgd-inf", "family": "pgd", "norm": "linf", "iterations": 3},
              {"name": "cw", "family": "cw", "iterations": 4}]})";
}

std::string field_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, DeskConfigLoadsAndRoundTrips) {
  const auto c = load_config(std::filesystem::path(NORMCLASH_CONFIG_DIR) / "desk_mnist.json");
  EXPECT_EQ(c.defenses.size(), 11u);
  EXPECT_EQ(c.attacks.size(), 3u);
  EXPECT_NEAR(c.epsilon.l2, geometry::calibrate_epsilon(0.1, 784), 1e-12);
  const auto back = parse_config(serialize_config(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(config_digest(back), config_digest(c));
}

TEST(Config, FillsEpsilonFromThePair) {
  const auto c = parse_config(blobs_config(R"([{"name": "at-2", "kind": "at", "norm": "l2"}])"));
  EXPECT_EQ(c.defenses[0].eps_inf, 0.05);
  EXPECT_NEAR(c.defenses[0].eps_2, geometry::calibrate_epsilon(0.05, 8), 1e-12);
  EXPECT_EQ(c.attacks[0].epsilon, 0.05);
  EXPECT_NE(c.train_config_for(c.defenses[0]).seed, c.seed);
}

TEST(Config, UnknownDefenseKindNamesTheField) {
  const auto text = blobs_config(R"([{"name": "a", "kind": "natural"}, {"name": "b", "kind": "trades"}])");
  EXPECT_EQ(field_of(text), "defenses[1].kind");
}

TEST(Config, MismatchedPairSuggestsCalibratedValue) {
  try {
    parse_config(blobs_config("[]", R"({"linf": 0.1, "l2": 2.0})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "epsilon.l2");
    char want[32];
    std::snprintf(want, sizeof want, "%.6f", geometry::calibrate_epsilon(0.1, 8));
    EXPECT_NE(std::string(e.what()).find(want), std::string::npos) << e.what();
  }
  EXPECT_NO_THROW(parse_config(blobs_config("[]", R"({"linf": 0.1, "l2": 2.0, "override": true})")));
  EXPECT_NO_THROW(parse_config(blobs_config("[]", R"({"linf": 0.1, "l2": 2.0})"), {}, true));
}

TEST(Config, RequiredAndUnknownFields) {
  EXPECT_EQ(field_of(R"({"dataset": {"source": "blobs"}, "epsilon": {"linf": 0.1}})"), "seed");
  EXPECT_EQ(field_of(blobs_config(R"([{"name": "n", "kind": "natural", "colour": 1}])")), "defenses[0].colour");
  EXPECT_EQ(field_of(blobs_config(R"([{"name": "n", "kind": "ni"}])")).rfind("defenses[0]", 0), 0u);
  EXPECT_EQ(field_of(blobs_config(R"([{"name": "n", "kind": "natural"}, {"name": "n", "kind": "natural"}])")),
            "defenses[1].name");
  EXPECT_EQ(field_of("{"), "");
}

TEST(Config, BlobsDataIsDeterministic) {
  const auto c = parse_config(blobs_config("[]"));
  const auto a = load_data(c);
  const auto b = load_data(c);
  EXPECT_EQ(a.train.size(), 50u);
  EXPECT_EQ(a.eval.size(), 10u);
  EXPECT_EQ(a.train.inputs, b.train.inputs);
  EXPECT_EQ(a.eval.labels, b.eval.labels);
}

TEST(Config, AtomicWrite) {
  const auto dir = std::filesystem::temp_directory_path() / "normclash_cfg_test";
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "x.txt", "hello");
  write_file_atomic(dir / "x.txt", "again");
  EXPECT_EQ(read_file(dir / "x.txt"), "again");
  EXPECT_FALSE(std::filesystem::exists(dir / "x.txt.tmp"));
  std::filesystem::remove_all(dir);
}
