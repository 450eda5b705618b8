#include "tamed/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tamed/errors.hpp"
#include "tamed/rng.hpp"

namespace tamed {

MarkDistribution MarkDistribution::normal(double mean, double variance) {
  if (!(variance > 0.0) || !std::isfinite(variance) || !std::isfinite(mean)) {
    throw ConfigError("normal mark law requires finite mean and variance > 0");
  }
  return MarkDistribution(NormalMarks{mean, variance});
}

MarkDistribution MarkDistribution::uniform(double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ConfigError("uniform mark law requires finite lo < hi");
  }
  return MarkDistribution(UniformMarks{lo, hi});
}

MarkDistribution MarkDistribution::degenerate(double value) {
  if (!std::isfinite(value)) throw ConfigError("degenerate mark must be finite");
  return MarkDistribution(DegenerateMarks{value});
}

namespace {
template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;
}  // namespace

double MarkDistribution::mean() const {
  return std::visit(Overloaded{[](const NormalMarks& n) { return n.mean; },
                               [](const UniformMarks& u) { return 0.5 * (u.lo + u.hi); },
                               [](const DegenerateMarks& d) { return d.value; }},
                    law_);
}

double MarkDistribution::variance() const {
  return std::visit(Overloaded{[](const NormalMarks& n) { return n.variance; },
                               [](const UniformMarks& u) {
                                 return (u.hi - u.lo) * (u.hi - u.lo) / 12.0;
                               },
                               [](const DegenerateMarks&) { return 0.0; }},
                    law_);
}

double MarkDistribution::from_uniform(double u) const {
  return std::visit(
      Overloaded{[u](const NormalMarks& n) { return n.mean + std::sqrt(n.variance) * normal_quantile(u); },
                 [u](const UniformMarks& m) { return m.lo + (m.hi - m.lo) * u; },
                 [](const DegenerateMarks& d) { return d.value; }},
      law_);
}

std::string MarkDistribution::describe() const {
  std::ostringstream os;
  std::visit(Overloaded{[&](const NormalMarks& n) {
                          os << "Normal(mean=" << n.mean << ", variance=" << n.variance << ")";
                        },
                        [&](const UniformMarks& u) {
                          os << "Uniform(" << u.lo << ", " << u.hi << ")";
                        },
                        [&](const DegenerateMarks& d) { os << "Degenerate(" << d.value << ")"; }},
             law_);
  return os.str();
}

void SdeProblem::validate() const {
  if (dim_state == 0 || dim_noise == 0) throw ConfigError(name + ": dimensions must be positive");
  if (!drift || !diffusion || !diffusion_jacobian) {
    throw ConfigError(name + ": drift, diffusion and diffusion_jacobian are required");
  }
  if (initial_value.size() != dim_state) {
    throw ConfigError(name + ": initial value has wrong dimension");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError(name + ": horizon must be > 0");
  if (!(growth_exponent >= 0.0)) throw ConfigError(name + ": growth exponent must be >= 0");
  if (jump) {
    if (!(jump->intensity >= 0.0) || !std::isfinite(jump->intensity)) {
      throw ConfigError(name + ": jump intensity must be finite and >= 0");
    }
    if (!jump->coefficient || !jump->coefficient_jacobian) {
      throw ConfigError(name + ": jump coefficient and its Jacobian are required");
    }
  }
}

SdeProblem SdeProblem::with_initial_value(Vec xi) const {
  SdeProblem copy = *this;
  copy.initial_value = std::move(xi);
  copy.validate();
  return copy;
}

Vec SdeProblem::eval_drift(std::span<const double> x) const {
  Vec out(dim_state);
  drift(x, out);
  return out;
}

Vec SdeProblem::eval_diffusion(std::span<const double> x) const {
  Vec out(dim_state * dim_noise);
  diffusion(x, out);
  return out;
}

Vec SdeProblem::eval_diffusion_jacobian(std::span<const double> x) const {
  Vec out(dim_state * dim_noise * dim_state);
  diffusion_jacobian(x, out);
  return out;
}

Vec SdeProblem::eval_jump(std::span<const double> x, double mark) const {
  Vec out(dim_state, 0.0);
  if (jump) jump->coefficient(x, mark, out);
  return out;
}

Vec SdeProblem::eval_jump_jacobian(std::span<const double> x, double mark) const {
  Vec out(dim_state * dim_state, 0.0);
  if (jump) jump->coefficient_jacobian(x, mark, out);
  return out;
}

// ---------------------------------------------------------------------------
// Builtin problems

namespace {

SdeProblem example1() {
  SdeProblem p;
  p.name = "example1";
  p.dim_state = 1;
  p.dim_noise = 1;
  p.drift = [](std::span<const double> x, std::span<double> out) {
    const double v = x[0];
    const double v2 = v * v;
    out[0] = v - v2 * v2 * v;
  };
  p.diffusion = [](std::span<const double> x, std::span<double> out) { out[0] = x[0]; };
  p.diffusion_jacobian = [](std::span<const double>, std::span<double> out) { out[0] = 1.0; };
  p.initial_value = {1.0};
  p.horizon = 1.0;
  p.growth_exponent = 3.0;
  return p;
}

SdeProblem example2(std::string name, MarkDistribution marks, double intensity) {
  SdeProblem p;
  p.name = std::move(name);
  p.dim_state = 1;
  p.dim_noise = 1;
  p.drift = [](std::span<const double> x, std::span<double> out) {
    out[0] = -0.10 * x[0] * x[0] * x[0];
  };
  p.diffusion = [](std::span<const double> x, std::span<double> out) { out[0] = x[0]; };
  p.diffusion_jacobian = [](std::span<const double>, std::span<double> out) { out[0] = 1.0; };

  JumpSpec jump;
  jump.intensity = intensity;
  jump.mark_law = marks;
  jump.coefficient = [](std::span<const double> x, double z, std::span<double> out) {
    out[0] = x[0] * z;
  };
  jump.coefficient_jacobian = [](std::span<const double>, double z, std::span<double> out) {
    out[0] = z;
  };
  jump.mark_mean_zero = marks.mean() == 0.0;
  jump.mark_dependent = true;
  const double mark_mean = marks.mean();
  jump.mark_expectation = [mark_mean](std::span<const double> x, std::span<double> out) {
    out[0] = x[0] * mark_mean;
  };
  p.jump = std::move(jump);
  p.initial_value = {1.0};
  p.horizon = 1.0;
  p.growth_exponent = 2.0;
  return p;
}

std::string canonical_name(std::string_view name) {
  std::string s(name);
  const std::string ascii = "lambda";
  if (auto pos = s.find(ascii); pos != std::string::npos) s.replace(pos, ascii.size(), "λ");
  return s;
}

}  // namespace

const std::vector<std::string>& builtin_problem_names() {
  static const std::vector<std::string> names = {
      "example1", "example2-normal-λ3", "example2-normal-λ5", "example2-uniform-λ3",
      "example2-uniform-λ5"};
  return names;
}

SdeProblem builtin_problem(std::string_view name) {
  const std::string key = canonical_name(name);
  const auto normal = MarkDistribution::normal(0.0, 0.125);
  const auto uniform = MarkDistribution::uniform(-0.25, 0.25);

  SdeProblem p;
  if (key == "example1") {
    p = example1();
  } else if (key == "example2-normal-λ3") {
    p = example2(key, normal, 3.0);
  } else if (key == "example2-normal-λ5") {
    p = example2(key, normal, 5.0);
  } else if (key == "example2-uniform-λ3") {
    p = example2(key, uniform, 3.0);
  } else if (key == "example2-uniform-λ5") {
    p = example2(key, uniform, 5.0);
  } else {
    std::string msg = "unknown problem '" + std::string(name) + "'; valid names:";
    for (const auto& n : builtin_problem_names()) msg += " " + n;
    throw ConfigError(msg);
  }
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// Structural checks

namespace {

std::vector<unsigned> first_primes(std::size_t count) {
  std::vector<unsigned> primes;
  for (unsigned c = 2; primes.size() < count; ++c) {
    if (std::none_of(primes.begin(), primes.end(), [c](unsigned p) { return c % p == 0; })) {
      primes.push_back(c);
    }
  }
  return primes;
}

double radical_inverse(std::size_t index, unsigned base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

void require_samples(const std::vector<Vec>& samples, std::size_t dim) {
  if (samples.empty()) throw PreconditionError("sample list must be nonempty");
  for (const auto& s : samples) {
    if (s.size() != dim) throw PreconditionError("sample has wrong dimension");
    for (double v : s) {
      if (!std::isfinite(v)) throw PreconditionError("samples must be finite");
    }
  }
}

}  // namespace

std::vector<Vec> default_samples(std::size_t dim, std::size_t count) {
  const auto primes = first_primes(dim);
  std::vector<Vec> out(count, Vec(dim));
  for (std::size_t s = 0; s < count; ++s) {
    for (std::size_t k = 0; k < dim; ++k) {
      out[s][k] = -2.0 + 4.0 * radical_inverse(s + 1, primes[k]);
    }
  }
  return out;
}

CommutativityReport check_diffusion_commutativity(const SdeProblem& problem,
                                                  const std::vector<Vec>& samples, double tol) {
  const std::size_t d = problem.dim_state;
  const std::size_t m = problem.dim_noise;
  require_samples(samples, d);

  CommutativityReport report;
  Vec sigma(d * m);
  Vec jac(d * m * d);
  for (const auto& x : samples) {
    problem.diffusion(x, sigma);
    problem.diffusion_jacobian(x, jac);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t k = j + 1; k < m; ++k) {
          double lhs = 0.0;
          double rhs = 0.0;
          for (std::size_t u = 0; u < d; ++u) {
            lhs += sigma[u * m + j] * jac[(i * m + k) * d + u];
            rhs += sigma[u * m + k] * jac[(i * m + j) * d + u];
          }
          report.max_violation = std::max(report.max_violation, std::abs(lhs - rhs));
        }
      }
    }
  }
  report.ok = report.max_violation <= tol;
  return report;
}

CommutativityReport check_jump_commutativity(const SdeProblem& problem,
                                             const std::vector<Vec>& samples, double tol) {
  CommutativityReport report;
  if (!problem.jump) return report;
  const JumpSpec& jump = *problem.jump;
  if (jump.mark_dependent) {
    throw PreconditionError("jump commutativity defined only for mark-independent gamma");
  }
  const std::size_t d = problem.dim_state;
  const std::size_t m = problem.dim_noise;
  require_samples(samples, d);

  const double mark = jump.mark_law.mean();
  Vec gamma(d);
  Vec gamma_jac(d * d);
  Vec sigma(d * m);
  Vec sigma_shifted(d * m);
  Vec shifted(d);
  for (const auto& x : samples) {
    jump.coefficient(x, mark, gamma);
    jump.coefficient_jacobian(x, mark, gamma_jac);
    problem.diffusion(x, sigma);
    for (std::size_t u = 0; u < d; ++u) shifted[u] = x[u] + gamma[u];
    problem.diffusion(shifted, sigma_shifted);
    for (std::size_t k = 0; k < d; ++k) {
      for (std::size_t j = 0; j < m; ++j) {
        double rhs = 0.0;
        for (std::size_t u = 0; u < d; ++u) rhs += gamma_jac[k * d + u] * sigma[u * m + j];
        const double lhs = sigma_shifted[k * m + j] - sigma[k * m + j];
        report.max_violation = std::max(report.max_violation, std::abs(lhs - rhs));
      }
    }
  }
  report.ok = report.max_violation <= tol;
  return report;
}

double jacobian_consistency(const SdeProblem& problem, const std::vector<Vec>& samples,
                            double step) {
  const std::size_t d = problem.dim_state;
  const std::size_t m = problem.dim_noise;
  require_samples(samples, d);

  double worst = 0.0;
  auto record = [&worst](double fd, double declared) {
    worst = std::max(worst, std::abs(fd - declared) / std::max(1.0, std::abs(declared)));
  };

  Vec plus(d * m), minus(d * m), jac(d * m * d), xp(d), xm(d);
  for (const auto& x : samples) {
    problem.diffusion_jacobian(x, jac);
    for (std::size_t u = 0; u < d; ++u) {
      xp = x;
      xm = x;
      xp[u] += step;
      xm[u] -= step;
      problem.diffusion(xp, plus);
      problem.diffusion(xm, minus);
      for (std::size_t ij = 0; ij < d * m; ++ij) {
        record((plus[ij] - minus[ij]) / (2.0 * step), jac[ij * d + u]);
      }
    }
  }

  if (!problem.jump) return worst;
  const JumpSpec& jump = *problem.jump;
  // Probe the mark law at a few quantiles.
  const double marks[] = {jump.mark_law.from_uniform(0.1), jump.mark_law.from_uniform(0.5),
                          jump.mark_law.from_uniform(0.9)};
  Vec gp(d), gm(d), gjac(d * d);
  for (const auto& x : samples) {
    for (double z : marks) {
      jump.coefficient_jacobian(x, z, gjac);
      for (std::size_t u = 0; u < d; ++u) {
        xp = x;
        xm = x;
        xp[u] += step;
        xm[u] -= step;
        jump.coefficient(xp, z, gp);
        jump.coefficient(xm, z, gm);
        for (std::size_t i = 0; i < d; ++i) record((gp[i] - gm[i]) / (2.0 * step), gjac[i * d + u]);
      }
    }
  }
  return worst;
}

}  // namespace tamed
