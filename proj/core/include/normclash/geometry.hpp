#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "normclash/attacks.hpp"

namespace normclash::geometry {

// ln Gamma(z) for z > 0 by the Lanczos approximation (g = 7, 9 terms),
// with the reflection formula below 1/2.
double log_gamma(double z);

struct BallSpec {
  Norm norm = Norm::l2;
  double radius = 1.0;
  std::size_t dim = 1;

  void validate() const;
};

// ln Vol(B_p,d(r)):  d ln(2r) for l_inf,  (d/2) ln pi + d ln r - ln Gamma(d/2 + 1) for l2.
double log_volume(const BallSpec& ball);

// Radius of the l2 ball whose volume equals that of the unit l_inf ball:
// (2 / sqrt(pi)) Gamma(d/2 + 1)^(1/d).
double equal_volume_radius(std::size_t d);

// eps_2 = eps_inf * equal_volume_radius(d)
double calibrate_epsilon(double eps_inf, std::size_t d);

// l2 norm of an l_inf-ball corner: eps_inf * sqrt(d).
double corner_distance(double eps_inf, std::size_t d);

// sqrt(2 / (pi e)), the limit of r2(d) / sqrt(d).
double stirling_ratio_limit();

enum class BoundMethod { monte_carlo, hoeffding_bound, asymptotic_bound };
std::string_view to_string(BoundMethod m);

struct IntersectionEstimate {
  BoundMethod method = BoundMethod::monte_carlo;
  double ratio = 0.0;        // Vol(B2 ∩ Binf) / Vol(Binf), or 0 when underflowing
  double log10_value = 0.0;  // log10 of the ratio or bound; -inf for zero hits
  bool trivial = false;      // bound carries no information (ratio <= 1 only)
  std::size_t samples = 0;   // monte-carlo only
  std::size_t hits = 0;
  double half_width = 0.0;   // 99% normal-approximation half-width
};

// log10 of exp(-(r2(d)^2 - d/3)^2 / d), the finite-d concentration bound
// with E|x1|^2 = 1/3. Returns 0 and trivial = true when r2^2 >= d/3.
IntersectionEstimate hoeffding_bound(std::size_t d);

// log10 of exp(-(2/(pi e) - 2/3)^2 d), the leading-order constant form.
IntersectionEstimate asymptotic_bound(std::size_t d);

// Fraction of x ~ U([-1,1]^d) with ||x||_2 <= r2(d). Samples are split into
// fixed shards with their own streams and summed in shard order, so the
// estimate does not depend on `threads`.
IntersectionEstimate monte_carlo_intersection(std::size_t d, std::size_t samples, std::uint64_t seed,
                                              std::size_t threads = 1);

}  // namespace normclash::geometry
