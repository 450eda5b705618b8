#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "tamed/model.hpp"
#include "tamed/noise.hpp"

namespace tamed::testing {

using Scalar = std::function<double(double)>;

// d = m = 1 problem from scalar callbacks, no jumps.
inline SdeProblem scalar_sde(std::string name, Scalar b, Scalar sigma, Scalar dsigma,
                             double x0 = 1.0) {
  SdeProblem p;
  p.name = std::move(name);
  p.drift = [b](std::span<const double> x, std::span<double> out) { out[0] = b(x[0]); };
  p.diffusion = [sigma](std::span<const double> x, std::span<double> out) { out[0] = sigma(x[0]); };
  p.diffusion_jacobian = [dsigma](std::span<const double> x, std::span<double> out) {
    out[0] = dsigma(x[0]);
  };
  p.initial_value = {x0};
  return p;
}

// Adds gamma(x, z) = c x z (mark_dependent) or gamma(x) = c x.
inline SdeProblem with_linear_jump(SdeProblem p, double c, double intensity,
                                   MarkDistribution law, bool mark_dependent) {
  JumpSpec j;
  j.intensity = intensity;
  j.mark_law = law;
  j.mark_dependent = mark_dependent;
  j.mark_mean_zero = mark_dependent && law.mean() == 0.0;
  const std::size_t d = p.dim_state;
  if (mark_dependent) {
    j.coefficient = [c, d](std::span<const double> x, double z, std::span<double> out) {
      for (std::size_t i = 0; i < d; ++i) out[i] = c * x[i] * z;
    };
    j.coefficient_jacobian = [c, d](std::span<const double>, double z, std::span<double> out) {
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t i = 0; i < d; ++i) out[i * d + i] = c * z;
    };
    const double mean = law.mean();
    j.mark_expectation = [c, d, mean](std::span<const double> x, std::span<double> out) {
      for (std::size_t i = 0; i < d; ++i) out[i] = c * x[i] * mean;
    };
  } else {
    j.coefficient = [c, d](std::span<const double> x, double, std::span<double> out) {
      for (std::size_t i = 0; i < d; ++i) out[i] = c * x[i];
    };
    j.coefficient_jacobian = [c, d](std::span<const double>, double, std::span<double> out) {
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t i = 0; i < d; ++i) out[i * d + i] = c;
    };
  }
  p.jump = std::move(j);
  return p;
}

// Hand-built cell for one-step checks.
struct ManualCell {
  double h = 0.0;
  std::vector<double> dw;
  std::vector<double> marks;
  std::vector<double> offsets;

  CellNoise view() const { return CellNoise{h, dw, marks, offsets}; }
};

// Classic fourth-order Runge-Kutta for a scalar autonomous ODE.
inline double rk4(const Scalar& f, double x0, double horizon, double step) {
  const auto steps = static_cast<long>(std::llround(horizon / step));
  double x = x0;
  for (long i = 0; i < steps; ++i) {
    const double k1 = f(x);
    const double k2 = f(x + 0.5 * step * k1);
    const double k3 = f(x + 0.5 * step * k2);
    const double k4 = f(x + step * k3);
    x += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Two-sided one-sample Kolmogorov-Smirnov p-value against a continuous CDF,
// using the asymptotic Kolmogorov series with Stephens' small-sample factor.
inline double ks_p_value(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double t = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  if (t < 0.2) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    p += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

// Two-sided critical value of the standard normal at significance 0.001.
inline constexpr double kZCritical001 = 3.2905267314918945;

}  // namespace tamed::testing
