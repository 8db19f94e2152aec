#include <gtest/gtest.h>

#include <cmath>

#include "normclash/evaluation.hpp"

using namespace normclash;

namespace {

struct Fixture {
  Dataset data;
  ModelParams params;
};

const Fixture& trained() {
  static const Fixture f = [] {
    Fixture g;
    g.data = make_blobs(300, 10, 3, 0.2, 4);
    DefenseSpec nat;
    nat.name = "natural";
    TrainConfig tc;
    tc.epochs = 8;
    tc.batch_size = 32;
    tc.seed = 2;
    g.params = train(g.data, ModelSpec{{10, 16, 3}}, nat, tc).params;
    g.data = g.data.head(60);
    return g;
  }();
  return f;
}

AttackSpec identity_attack() {
  auto a = AttackSpec::pgd(Norm::linf, 0.1, 0);
  a.name = "identity";
  a.random_start = false;
  return a;
}

}  // namespace

TEST(BallStats, PartitionsEverySample) {
  Tensor x({4, 2}, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
  // both, l2 only, linf only, neither (eps_inf 0.1, eps_2 0.13)
  Tensor a({4, 2}, {0.55, 0.55, 0.62, 0.5, 0.6, 0.6, 0.9, 0.9});
  const auto s = ball_stats(x, a, 0.1, 0.13);
  EXPECT_EQ(s.count, 4u);
  EXPECT_DOUBLE_EQ(s.frac_intersection, 0.25);
  EXPECT_DOUBLE_EQ(s.frac_l2_only, 0.25);
  EXPECT_DOUBLE_EQ(s.frac_linf_only, 0.25);
  EXPECT_DOUBLE_EQ(s.frac_outside, 0.25);
  EXPECT_DOUBLE_EQ(s.frac_inside_l2, 0.5);
  EXPECT_DOUBLE_EQ(s.frac_inside_linf, 0.5);
  EXPECT_NEAR(s.frac_intersection + s.frac_l2_only + s.frac_linf_only + s.frac_outside, 1.0, 1e-12);
}

TEST(BallStats, ZeroPerturbationIsInBoth) {
  const auto& f = trained();
  const auto s = ball_stats(f.data.inputs, f.data.inputs, 0.1, 0.5);
  EXPECT_DOUBLE_EQ(s.frac_intersection, 1.0);
  EXPECT_DOUBLE_EQ(s.mean_l2, 0.0);
  EXPECT_THROW(ball_stats(f.data.inputs, f.data.inputs, 0.0, 0.5), std::invalid_argument);
  EXPECT_THROW(ball_stats(f.data.inputs, f.data.inputs.slice_rows(0, 3), 0.1, 0.5), std::invalid_argument);
}

TEST(Evaluation, IdentityAttackReproducesNaturalAccuracy) {
  const auto& f = trained();
  const auto noise = NoiseSpec::gaussian(0.3);
  EvalOptions eo;
  eo.eot_samples = 5;
  eo.batch_size = 7;
  const double nat = natural_accuracy(f.params, noise, f.data, eo, 9);
  const auto ev = evaluate_attack(f.params, noise, f.data, identity_attack(), eo, 9, 0.1, 0.3);
  EXPECT_EQ(ev.accuracy, nat);
  EXPECT_DOUBLE_EQ(ev.stats.frac_intersection, 1.0);
}

TEST(Evaluation, EotCountIrrelevantForDeterministicModels) {
  const auto& f = trained();
  auto pgd = AttackSpec::pgd(Norm::l2, 0.4, 5);
  pgd.name = "pgd-2";
  pgd.eot_samples = 1;
  const double one = accuracy_under_attack(f.params, {}, f.data, pgd, 1, 3);
  pgd.eot_samples = 10;
  const double ten = accuracy_under_attack(f.params, {}, f.data, pgd, 10, 3);
  EXPECT_EQ(one, ten);
}

TEST(Evaluation, ChunkSizeDoesNotChangeResults) {
  const auto& f = trained();
  auto pgd = AttackSpec::pgd(Norm::linf, 0.1, 5);
  pgd.name = "pgd-inf";
  pgd.eot_samples = 3;
  const auto noise = NoiseSpec::uniform(0.2);
  EvalOptions a, b;
  a.eot_samples = b.eot_samples = 4;
  a.batch_size = 60;
  b.batch_size = 11;
  const auto ea = evaluate_attack(f.params, noise, f.data, pgd, a, 5, 0.1, 0.3);
  const auto eb = evaluate_attack(f.params, noise, f.data, pgd, b, 5, 0.1, 0.3);
  EXPECT_EQ(ea.result.adversarial, eb.result.adversarial);
  EXPECT_EQ(ea.predictions, eb.predictions);
}

TEST(Report, SingleCellMinEqualsTheCell) {
  const auto& f = trained();
  const std::vector<EvaluatedModel> models = {{"natural", f.params, {}}};
  auto pgd = AttackSpec::pgd(Norm::linf, 0.1, 5);
  pgd.name = "pgd-inf";
  const std::vector<AttackSpec> attacks = {pgd};
  ReportOptions ro;
  ro.eps_inf = 0.1;
  ro.eps_2 = 0.3;
  const auto r = build_report(models, attacks, f.data, ro, 1);
  ASSERT_TRUE(r.min_for("natural").has_value());
  EXPECT_EQ(*r.min_for("natural"), *r.accuracy("natural", "pgd-inf"));
  EXPECT_LE(*r.accuracy("natural", "pgd-inf"), r.natural[0]);
}

TEST(Report, GapsAreMarkedAndMinIsUnavailable) {
  const auto& f = trained();
  const std::vector<EvaluatedModel> models = {{"natural", f.params, {}}};
  auto broken = AttackSpec::pgd(Norm::linf, 0.1, 2);
  broken.name = "broken";
  broken.epsilon = -1.0;
  auto ok = identity_attack();
  const std::vector<AttackSpec> attacks = {ok, broken};
  ReportOptions ro;
  ro.eps_inf = 0.1;
  ro.eps_2 = 0.3;
  const auto r = build_report(models, attacks, f.data, ro, 1);
  EXPECT_FALSE(r.accuracy("natural", "broken").has_value());
  EXPECT_FALSE(r.cells[0][1].error.empty());
  EXPECT_FALSE(r.min_for("natural").has_value());
  EXPECT_NE(r.to_csv().find("NA"), std::string::npos);
  EXPECT_NE(r.to_json().find("broken"), std::string::npos);
}

TEST(Report, EmptyAttackListHasNoMin) {
  const auto& f = trained();
  const std::vector<EvaluatedModel> models = {{"natural", f.params, {}}};
  ReportOptions ro;
  ro.eps_inf = 0.1;
  ro.eps_2 = 0.3;
  const auto r = build_report(models, {}, f.data, ro, 1);
  EXPECT_FALSE(r.min_for("natural").has_value());
  EXPECT_GT(r.natural[0], 0.5);
}

TEST(Report, CsvIsDeterministicAcrossThreadCounts) {
  const auto& f = trained();
  const std::vector<EvaluatedModel> models = {{"natural", f.params, {}},
                                              {"noisy", f.params, NoiseSpec::gaussian(0.2)}};
  auto pgd = AttackSpec::pgd(Norm::linf, 0.1, 3);
  pgd.name = "pgd-inf";
  pgd.eot_samples = 2;
  auto cw = AttackSpec::cw(10);
  cw.name = "cw";
  cw.search_steps = 2;
  const std::vector<AttackSpec> attacks = {pgd, cw};
  ReportOptions ro;
  ro.eps_inf = 0.1;
  ro.eps_2 = 0.3;
  ro.eval.eot_samples = 3;
  ro.eps_sweep = {0.5, 2.0};
  const auto a = build_report(models, attacks, f.data, ro, 4);
  ro.threads = 3;
  const auto b = build_report(models, attacks, f.data, ro, 4);
  EXPECT_EQ(a.to_csv(), b.to_csv());
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_EQ(a.sweep_csv(), b.sweep_csv());
  EXPECT_NE(a.to_csv().find("defense,natural,pgd-inf,cw,min_acc"), std::string::npos);
  // sweep: one series for the PGD attack per defense, factors 0.5, 1, 2
  EXPECT_EQ(a.sweep.size(), 6u);
}
