#include "tamed/schemes.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "tamed/errors.hpp"

namespace tamed {

namespace {

struct KindName {
  SchemeKind kind;
  std::string_view name;
  std::string_view kebab;
};

constexpr KindName kKindNames[] = {
    {SchemeKind::TamedEuler, "TamedEuler", "tamed-euler"},
    {SchemeKind::TamedMilsteinContinuous, "TamedMilsteinContinuous", "tamed-milstein-continuous"},
    {SchemeKind::TamedMilsteinJump1D, "TamedMilsteinJump1D", "tamed-milstein-jump-1d"},
    {SchemeKind::TamedMilsteinJumpCommutative, "TamedMilsteinJumpCommutative",
     "tamed-milstein-jump-commutative"},
    {SchemeKind::UntamedMilstein, "UntamedMilstein", "untamed-milstein"},
};

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

std::string_view to_string(SchemeKind kind) {
  for (const auto& k : kKindNames) {
    if (k.kind == kind) return k.name;
  }
  return "unknown";
}

SchemeKind parse_scheme_kind(std::string_view text) {
  for (const auto& k : kKindNames) {
    if (text == k.name || text == k.kebab) return k.kind;
  }
  std::string msg = "unknown scheme '" + std::string(text) + "'; valid:";
  for (const auto& k : kKindNames) msg += " " + std::string(k.kebab);
  throw ConfigError(msg);
}

bool is_tamed(SchemeKind kind) { return kind != SchemeKind::UntamedMilstein; }

SchemeSpec SchemeSpec::make(SchemeKind kind, int level, double horizon) {
  if (level < 0 || level > kMaxNoiseLevel) {
    throw ConfigError("scheme level must lie in [0, " + std::to_string(kMaxNoiseLevel) + "]");
  }
  const double theta = kind == SchemeKind::TamedEuler ? 0.5 : 1.0;
  return SchemeSpec{kind, level, TamingParams::for_level(level, horizon, theta)};
}

// ---------------------------------------------------------------------------

Stepper::Stepper(const SdeProblem& problem, const SchemeSpec& spec)
    : problem_(&problem), spec_(spec) {
  problem.validate();
  if (spec.level < 0 || spec.level > kMaxNoiseLevel) throw ConfigError("scheme level out of range");
  const std::string label = std::string(to_string(spec.kind)) + " on " + problem.name;
  const std::size_t d = problem.dim_state;
  const std::size_t m = problem.dim_noise;
  const bool active_jumps = problem.intensity() > 0.0;

  milstein_ = spec.kind != SchemeKind::TamedEuler;
  tamed_ = is_tamed(spec.kind);
  if (tamed_) spec.taming.validate();

  switch (spec.kind) {
    case SchemeKind::TamedEuler:
      break;
    case SchemeKind::TamedMilsteinContinuous:
    case SchemeKind::UntamedMilstein:
      if (active_jumps) throw UnsupportedScheme(label + ": scheme requires a jump-free problem");
      break;
    case SchemeKind::TamedMilsteinJump1D:
      if (d != 1 || m != 1) throw UnsupportedScheme(label + ": requires d = m = 1");
      break;
    case SchemeKind::TamedMilsteinJumpCommutative:
      if (problem.jump && problem.jump->mark_dependent) {
        throw UnsupportedScheme(label + ": mark-dependent jump coefficients are not supported");
      }
      break;
  }

  if (milstein_ && m > 1) {
    const auto report =
        check_diffusion_commutativity(problem, default_samples(d), kCommutativityTolerance);
    if (!report.ok) {
      throw UnsupportedScheme(label + ": diffusion is not commutative (violation " +
                              std::to_string(report.max_violation) + ")");
    }
  }
  if (spec.kind == SchemeKind::TamedMilsteinJumpCommutative && problem.jump) {
    const auto report =
        check_jump_commutativity(problem, default_samples(d), kCommutativityTolerance);
    if (!report.ok) {
      throw UnsupportedScheme(label + ": jump commutativity fails (violation " +
                              std::to_string(report.max_violation) + ")");
    }
    common_mark_ = problem.jump->mark_law.mean();
  }
  if (active_jumps) compensator_ = jump_compensator(problem);

  drift_.resize(d);
  sigma_.resize(d * m);
  jac_.resize(d * m * d);
  gamma_.resize(d);
  gamma_jac_.resize(d * d);
  shifted_.resize(d);
  sigma_shifted_.resize(d * m);
  gamma_shifted_.resize(d);
  comp_.resize(d);
  state_.resize(d);
  next_.resize(d);
}

void Stepper::base_step(std::span<const double> x, const CellNoise& cell, std::span<double> out) {
  const SdeProblem& p = *problem_;
  const std::size_t d = p.dim_state;
  const std::size_t m = p.dim_noise;
  const double h = cell.h;

  p.drift(x, drift_);
  const double scale = tamed_ ? taming_factor(drift_, spec_.taming) : 1.0;
  p.diffusion(x, sigma_);
  for (std::size_t i = 0; i < d; ++i) {
    out[i] = x[i] + (tamed_ ? drift_[i] * scale : drift_[i]) * h;
    double noise = 0.0;
    for (std::size_t j = 0; j < m; ++j) noise += sigma_[i * m + j] * cell.dw[j];
    out[i] += noise;
  }
  if (!milstein_) return;

  // 1/2 sum_{j,k} (L^j sigma^{(i,k)}) (dw^j dw^k - h 1{j = k}),
  // L^j = sum_u sigma^{(u,j)} d/dx^u.
  p.diffusion_jacobian(x, jac_);
  for (std::size_t i = 0; i < d; ++i) {
    double corr = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = 0; k < m; ++k) {
        double lj = 0.0;
        for (std::size_t u = 0; u < d; ++u) lj += sigma_[u * m + j] * jac_[(i * m + k) * d + u];
        const double iterated = cell.dw[j] * cell.dw[k] - (j == k ? h : 0.0);
        corr += lj * iterated;
      }
    }
    out[i] += 0.5 * corr;
  }
}

void Stepper::add_marked_jumps(std::span<const double> x, const CellNoise& cell,
                               std::span<double> out) {
  const std::size_t d = problem_->dim_state;
  for (std::size_t e = 0; e < cell.jump_count(); ++e) {
    problem_->jump->coefficient(x, cell.marks[e], gamma_);
    for (std::size_t i = 0; i < d; ++i) out[i] += gamma_[i];
  }
}

void Stepper::add_jump_1d(std::span<const double> x, const CellNoise& cell, std::span<double> out) {
  const JumpSpec& jump = *problem_->jump;
  const std::size_t count = cell.jump_count();
  const double dw = cell.dw[0];
  const double sigma = sigma_[0];  // sigma(x), left over from base_step

  jump_values_.resize(count);
  double sum_gamma = 0.0;
  double sum_diffusion_shift = 0.0;
  double sum_jump_sensitivity = 0.0;
  for (std::size_t e = 0; e < count; ++e) {
    const double z = cell.marks[e];
    const double offset = cell.offset(e, 0);  // w(tau) - w(lh)
    jump.coefficient(x, z, gamma_);
    jump.coefficient_jacobian(x, z, gamma_jac_);
    jump_values_[e] = gamma_[0];
    sum_gamma += gamma_[0];

    shifted_[0] = x[0] + gamma_[0];
    problem_->diffusion(shifted_, sigma_shifted_);
    sum_diffusion_shift += (sigma_shifted_[0] - sigma) * (dw - offset);
    sum_jump_sensitivity += gamma_jac_[0] * offset;
  }

  // Pairs of jumps inside the cell: the earlier one (i) moves the state
  // seen by the later one (j).
  double sum_pairs = 0.0;
  for (std::size_t j = 1; j < count; ++j) {
    const double zj = cell.marks[j];
    jump.coefficient(x, zj, gamma_);
    const double base = gamma_[0];
    for (std::size_t i = 0; i < j; ++i) {
      shifted_[0] = x[0] + jump_values_[i];
      jump.coefficient(shifted_, zj, gamma_shifted_);
      sum_pairs += gamma_shifted_[0] - base;
    }
  }

  out[0] += sum_gamma;
  out[0] += sum_diffusion_shift;
  out[0] += sigma * sum_jump_sensitivity;
  out[0] += sum_pairs;
}

void Stepper::add_jump_commutative(std::span<const double> x, const CellNoise& cell,
                                   std::span<double> out) {
  const SdeProblem& p = *problem_;
  const std::size_t d = p.dim_state;
  const std::size_t m = p.dim_noise;
  const double count = static_cast<double>(cell.jump_count());

  p.jump->coefficient(x, common_mark_, gamma_);
  for (std::size_t i = 0; i < d; ++i) shifted_[i] = x[i] + gamma_[i];
  p.diffusion(shifted_, sigma_shifted_);
  p.jump->coefficient(shifted_, common_mark_, gamma_shifted_);

  const double pair_count = 0.5 * (count * count - count);
  for (std::size_t i = 0; i < d; ++i) {
    out[i] += gamma_[i] * count;
    double cross = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      cross += (sigma_shifted_[i * m + j] - sigma_[i * m + j]) * count * cell.dw[j];
    }
    out[i] += cross;
    out[i] += (gamma_shifted_[i] - gamma_[i]) * pair_count;
  }
}

void Stepper::subtract_compensator(std::span<const double> x, double h, std::span<double> out) {
  compensator_(x, comp_);
  for (std::size_t i = 0; i < problem_->dim_state; ++i) out[i] -= comp_[i] * h;
}

void Stepper::step(std::span<const double> x, const CellNoise& cell, std::span<double> out) {
  base_step(x, cell, out);
  if (cell.jump_count() > 0) {
    switch (spec_.kind) {
      case SchemeKind::TamedEuler:
        add_marked_jumps(x, cell, out);
        break;
      case SchemeKind::TamedMilsteinJump1D:
        add_jump_1d(x, cell, out);
        break;
      case SchemeKind::TamedMilsteinJumpCommutative:
        add_jump_commutative(x, cell, out);
        break;
      case SchemeKind::TamedMilsteinContinuous:
      case SchemeKind::UntamedMilstein:
        throw UnsupportedScheme(std::string(to_string(spec_.kind)) + ": cell carries jumps");
    }
  }
  if (compensator_) subtract_compensator(x, cell.h, out);
}

Vec Stepper::step(std::span<const double> x, const CellNoise& cell) {
  Vec out(problem_->dim_state);
  step(x, cell, out);
  return out;
}

PathResult Stepper::simulate(const CoarseView& view, std::span<const double> x0,
                             bool keep_trajectory) {
  const std::size_t d = problem_->dim_state;
  const std::size_t cells = view.cells();
  PathResult result;
  state_.assign(x0.begin(), x0.end());
  result.sup_norm = norm(state_);
  if (keep_trajectory) {
    result.trajectory.emplace();
    result.trajectory->reserve((cells + 1) * d);
    result.trajectory->insert(result.trajectory->end(), state_.begin(), state_.end());
  }
  for (std::size_t k = 0; k < cells; ++k) {
    step(state_, view.cell(k), next_);
    std::swap(state_, next_);
    const double r = norm(state_);
    if (keep_trajectory) result.trajectory->insert(result.trajectory->end(), state_.begin(), state_.end());
    if (!std::isfinite(r) || r > kDivergenceThreshold) {
      result.diverged = true;
      result.divergence_index = k + 1;
      result.sup_norm = std::isfinite(r) ? std::max(result.sup_norm, r) : r;
      break;
    }
    result.sup_norm = std::max(result.sup_norm, r);
  }
  result.terminal_value = state_;
  return result;
}

// ---------------------------------------------------------------------------

namespace {

Vec checked_step(SchemeKind expected, const SdeProblem& problem, const SchemeSpec& spec,
                 std::span<const double> state, const CellNoise& cell) {
  if (spec.kind != expected) {
    throw PreconditionError("scheme spec kind is " + std::string(to_string(spec.kind)) +
                            ", expected " + std::string(to_string(expected)));
  }
  if (state.size() != problem.dim_state || cell.dw.size() != problem.dim_noise) {
    throw PreconditionError("state or noise dimension mismatch");
  }
  Stepper stepper(problem, spec);
  return stepper.step(state, cell);
}

}  // namespace

Vec step_tamed_euler(const SdeProblem& problem, const SchemeSpec& spec,
                     std::span<const double> state, const CellNoise& cell) {
  return checked_step(SchemeKind::TamedEuler, problem, spec, state, cell);
}

Vec step_tamed_milstein_continuous(const SdeProblem& problem, const SchemeSpec& spec,
                                   std::span<const double> state, const CellNoise& cell) {
  return checked_step(SchemeKind::TamedMilsteinContinuous, problem, spec, state, cell);
}

Vec step_tamed_milstein_jump_1d(const SdeProblem& problem, const SchemeSpec& spec,
                                std::span<const double> state, const CellNoise& cell) {
  return checked_step(SchemeKind::TamedMilsteinJump1D, problem, spec, state, cell);
}

Vec step_tamed_milstein_jump_commutative(const SdeProblem& problem, const SchemeSpec& spec,
                                         std::span<const double> state, const CellNoise& cell) {
  return checked_step(SchemeKind::TamedMilsteinJumpCommutative, problem, spec, state, cell);
}

Vec step_untamed_milstein(const SdeProblem& problem, const SchemeSpec& spec,
                          std::span<const double> state, const CellNoise& cell) {
  return checked_step(SchemeKind::UntamedMilstein, problem, spec, state, cell);
}

PathResult simulate_path(const SdeProblem& problem, const SchemeSpec& spec,
                         const NoiseRealization& noise, bool keep_trajectory) {
  if (spec.level > noise.level_max) {
    throw DomainError("simulate_path: scheme level " + std::to_string(spec.level) +
                      " exceeds noise level " + std::to_string(noise.level_max));
  }
  if (noise.dim_noise != problem.dim_noise) throw PreconditionError("noise dimension mismatch");
  Stepper stepper(problem, spec);
  const CoarseView view = coarsen(noise, spec.level);
  return stepper.simulate(view, problem.initial_value, keep_trajectory);
}

}  // namespace tamed
