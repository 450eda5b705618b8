#pragma once

#include <span>

#include "tamed/model.hpp"

namespace tamed {

// Taming strength for a grid with n = 1/h cells per unit time.
// theta = 1/2 gives the Euler-order taming, theta = 1 the Milstein-order one.
struct TamingParams {
  double steps_per_unit_time = 1.0;  // n
  double theta = 1.0;

  // Throws ConfigError unless n > 0 and theta >= 1/2.
  void validate() const;

  // n = 2^level / T, so that h = 1/n.
  static TamingParams for_level(int level, double horizon, double theta);
};

// b / (1 + n^{-theta} |b|^{2 theta}) with |.| the Euclidean norm. The scale
// lies in (0, 1], and for theta in {1/2, 1}: |result| <= min(sqrt(n), |b|).
void tame_drift(std::span<const double> b, const TamingParams& params, std::span<double> out);
Vec tame_drift(std::span<const double> b, const TamingParams& params);

// Scale factor 1 / (1 + n^{-theta} |b|^{2 theta}) applied by tame_drift.
double taming_factor(std::span<const double> b, const TamingParams& params);

// x -> b(x) - lambda E[gamma(x, Z)]. Returns the plain drift for mean-zero
// marks. For mark-independent gamma the expectation is gamma(x) itself;
// otherwise the problem must declare JumpSpec::mark_expectation.
// Throws PreconditionError when the problem has no jumps and ConfigError
// ("compensator required") when no closed form is available.
VectorField compensate_drift(const SdeProblem& problem);

// x -> lambda E[gamma(x, Z)], or an empty function when no compensation applies.
VectorField jump_compensator(const SdeProblem& problem);

}  // namespace tamed
