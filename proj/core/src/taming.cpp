#include "tamed/taming.hpp"

#include <cmath>
#include <string>

#include "tamed/errors.hpp"

namespace tamed {

void TamingParams::validate() const {
  if (!(steps_per_unit_time > 0.0) || !std::isfinite(steps_per_unit_time)) {
    throw ConfigError("taming: n must be positive and finite");
  }
  if (!(theta >= 0.5) || !std::isfinite(theta)) {
    throw ConfigError("taming: theta must be >= 1/2, got " + std::to_string(theta));
  }
}

TamingParams TamingParams::for_level(int level, double horizon, double theta) {
  TamingParams p{std::ldexp(1.0, level) / horizon, theta};
  p.validate();
  return p;
}

double taming_factor(std::span<const double> b, const TamingParams& params) {
  double sq = 0.0;
  for (double v : b) sq += v * v;
  double penalty;
  if (params.theta == 1.0) {
    penalty = sq / params.steps_per_unit_time;
  } else if (params.theta == 0.5) {
    penalty = std::sqrt(sq) / std::sqrt(params.steps_per_unit_time);
  } else {
    penalty = std::pow(sq, params.theta) / std::pow(params.steps_per_unit_time, params.theta);
  }
  return 1.0 / (1.0 + penalty);
}

void tame_drift(std::span<const double> b, const TamingParams& params, std::span<double> out) {
  const double scale = taming_factor(b, params);
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = b[i] * scale;
}

Vec tame_drift(std::span<const double> b, const TamingParams& params) {
  Vec out(b.size());
  tame_drift(b, params, out);
  return out;
}

VectorField jump_compensator(const SdeProblem& problem) {
  if (!problem.jump || problem.jump->mark_mean_zero) return {};
  const JumpSpec& jump = *problem.jump;
  const double rate = jump.intensity;
  const std::size_t d = problem.dim_state;
  if (!jump.mark_dependent) {
    const MarkedField gamma = jump.coefficient;
    const double mark = jump.mark_law.mean();
    return [gamma, mark, rate, d](std::span<const double> x, std::span<double> out) {
      gamma(x, mark, out);
      for (std::size_t i = 0; i < d; ++i) out[i] *= rate;
    };
  }
  if (!jump.mark_expectation) {
    throw ConfigError(problem.name + ": compensator required for marks that are not mean-zero");
  }
  const VectorField expectation = jump.mark_expectation;
  return [expectation, rate, d](std::span<const double> x, std::span<double> out) {
    expectation(x, out);
    for (std::size_t i = 0; i < d; ++i) out[i] *= rate;
  };
}

VectorField compensate_drift(const SdeProblem& problem) {
  if (!problem.jump) throw PreconditionError(problem.name + ": compensate_drift needs a jump part");
  VectorField comp = jump_compensator(problem);
  if (!comp) return problem.drift;
  const VectorField drift = problem.drift;
  const std::size_t d = problem.dim_state;
  return [drift, comp, d](std::span<const double> x, std::span<double> out) {
    drift(x, out);
    Vec c(d);
    comp(x, c);
    for (std::size_t i = 0; i < d; ++i) out[i] -= c[i];
  };
}

}  // namespace tamed
