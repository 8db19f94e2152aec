#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "normclash/model.hpp"
#include "normclash/noise.hpp"
#include "normclash/rng.hpp"
#include "normclash/tensor.hpp"

namespace normclash {

enum class Norm { l2, linf };

std::string_view to_string(Norm p);
// Accepts "2", "l2", "inf", "linf".
Norm parse_norm(std::string_view name);

enum class AttackFamily { pgd, cw };
enum class CwOptimizer { gradient_descent, adam };

std::string_view to_string(AttackFamily f);
AttackFamily parse_attack_family(std::string_view name);

struct AttackSpec {
  std::string name;
  AttackFamily family = AttackFamily::pgd;
  Norm norm = Norm::linf;  // C&W is always l2
  double epsilon = 0.0;    // PGD radius in input units
  double step_size = 0.0;  // 0 selects 2.5 * epsilon / iterations
  std::size_t iterations = 20;
  bool random_start = true;
  std::size_t eot_samples = 1;

  // C&W
  double initial_lambda = 1.0;
  std::size_t search_steps = 9;
  double lambda_min = 1e-3;
  double lambda_max = 1e6;
  double kappa = 0.0;
  double learning_rate = 0.1;
  CwOptimizer optimizer = CwOptimizer::adam;

  static AttackSpec pgd(Norm p, double epsilon, std::size_t iterations);
  static AttackSpec cw(std::size_t iterations);

  double effective_step() const noexcept;
  void validate() const;

  friend bool operator==(const AttackSpec&, const AttackSpec&) = default;
};

struct AttackResult {
  Tensor adversarial;             // [b, d], inside [0,1]^d
  std::vector<double> l2_norms;   // ||x_adv - x||_2 per sample
  std::vector<double> linf_norms; // ||x_adv - x||_inf per sample
  std::vector<int> predictions;
  std::vector<std::uint8_t> success;  // prediction != label

  std::size_t success_count() const;
};

// One recorded C&W iterate, for inspecting the search.
struct CwCandidate {
  std::size_t sample = 0;
  std::size_t search_step = 0;
  std::size_t iteration = 0;
  double lambda = 0.0;
  double l2 = 0.0;
  bool success = false;
  double min_coord = 0.0;  // range of the mapped iterate x + tau
  double max_coord = 0.0;
};

double l2_norm(std::span<const double> v);
double linf_norm(std::span<const double> v);

// argmax_{||delta||_p <= 1} <grad, delta>: sign(grad) for p = inf and
// grad / ||grad||_2 for p = 2. A zero gradient maps to zero.
void steepest_direction(std::span<const double> grad, Norm p, std::span<double> out);
std::vector<double> steepest_direction(std::span<const double> grad, Norm p);

// In-place projection of `point` onto B_p(center, epsilon) intersected with
// [0,1]^d (ball first, then the domain clamp).
void project(std::span<double> point, std::span<const double> center, Norm p, double epsilon);

// max(Z_y - max_{k != y} Z_k, -kappa)
double logit_margin(std::span<const double> logits, int label, double kappa);

// (1/n) sum_i grad_x CE(f(x + eta_i), y) per row; one draw sequence per row
// from streams[row]. Without noise it is the plain input gradient for any n.
Tensor eot_gradient(const ModelParams& params, const NoiseSpec& noise, const Tensor& x,
                    std::span<const int> labels, std::size_t n_samples, std::span<Rng> streams);
Tensor eot_gradient(const ModelParams& params, const NoiseSpec& noise, const Tensor& x,
                    std::span<const int> labels, std::size_t n_samples, const SampleStreams& streams);

AttackResult pgd_attack(const ModelParams& params, const NoiseSpec& noise, const Tensor& x,
                        std::span<const int> labels, const AttackSpec& spec,
                        const SampleStreams& streams);

AttackResult cw_attack(const ModelParams& params, const NoiseSpec& noise, const Tensor& x,
                       std::span<const int> labels, const AttackSpec& spec,
                       const SampleStreams& streams, std::vector<CwCandidate>* trace = nullptr);

AttackResult run_attack(const ModelParams& params, const NoiseSpec& noise, const Tensor& x,
                        std::span<const int> labels, const AttackSpec& spec,
                        const SampleStreams& streams);

}  // namespace normclash
