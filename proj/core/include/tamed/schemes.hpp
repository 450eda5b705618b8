#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

#include "tamed/model.hpp"
#include "tamed/noise.hpp"
#include "tamed/taming.hpp"

namespace tamed {

enum class SchemeKind {
  TamedEuler,
  TamedMilsteinContinuous,
  TamedMilsteinJump1D,
  TamedMilsteinJumpCommutative,
  UntamedMilstein,
};

std::string_view to_string(SchemeKind kind);
// Accepts the enumerator names and kebab-case forms ("tamed-milstein-jump-1d").
SchemeKind parse_scheme_kind(std::string_view text);
bool is_tamed(SchemeKind kind);

struct SchemeSpec {
  SchemeKind kind = SchemeKind::TamedMilsteinContinuous;
  int level = 1;  // h = 2^-level T
  TamingParams taming;

  // theta = 1/2 for TamedEuler, 1 otherwise; n = 2^level / T.
  static SchemeSpec make(SchemeKind kind, int level, double horizon);
  double step(double horizon) const { return std::ldexp(horizon, -level); }
};

// Iterates stop once |x| exceeds this or turns non-finite.
inline constexpr double kDivergenceThreshold = 1e12;

// Tolerance for the structural commutativity checks run at construction.
inline constexpr double kCommutativityTolerance = 1e-9;

struct PathResult {
  Vec terminal_value;
  double sup_norm = 0.0;  // max over visited grid points of |x|
  bool diverged = false;
  std::size_t divergence_index = 0;  // first grid index past the threshold
  std::optional<Vec> trajectory;     // (cells + 1) x d, row-major, when requested
};

// One-step map of a scheme bound to a problem. Construction enforces the
// kind/problem compatibility rules (dimensions, jump structure, and the
// diffusion / jump commutativity conditions) and throws UnsupportedScheme on
// violation. The problem must outlive the stepper. Not thread-safe: each
// worker owns its own stepper.
class Stepper {
 public:
  Stepper(const SdeProblem& problem, const SchemeSpec& spec);

  const SchemeSpec& spec() const { return spec_; }

  void step(std::span<const double> x, const CellNoise& cell, std::span<double> out);
  Vec step(std::span<const double> x, const CellNoise& cell);

  // Runs the scheme over every cell of the view, starting from x0.
  PathResult simulate(const CoarseView& view, std::span<const double> x0,
                      bool keep_trajectory = false);

 private:
  void base_step(std::span<const double> x, const CellNoise& cell, std::span<double> out);
  void add_marked_jumps(std::span<const double> x, const CellNoise& cell, std::span<double> out);
  void add_jump_1d(std::span<const double> x, const CellNoise& cell, std::span<double> out);
  void add_jump_commutative(std::span<const double> x, const CellNoise& cell,
                            std::span<double> out);
  void subtract_compensator(std::span<const double> x, double h, std::span<double> out);

  const SdeProblem* problem_;
  SchemeSpec spec_;
  bool milstein_ = false;
  bool tamed_ = true;
  VectorField compensator_;
  double common_mark_ = 0.0;

  Vec drift_, sigma_, jac_, gamma_, gamma_jac_, shifted_, sigma_shifted_, gamma_shifted_, comp_;
  Vec jump_values_;
  Vec state_, next_;
};

// One-step kernels. Each checks that spec.kind matches and the problem is
// compatible, then applies a single step from `state` over `cell`.
Vec step_tamed_euler(const SdeProblem& problem, const SchemeSpec& spec,
                     std::span<const double> state, const CellNoise& cell);
Vec step_tamed_milstein_continuous(const SdeProblem& problem, const SchemeSpec& spec,
                                   std::span<const double> state, const CellNoise& cell);
Vec step_tamed_milstein_jump_1d(const SdeProblem& problem, const SchemeSpec& spec,
                                std::span<const double> state, const CellNoise& cell);
Vec step_tamed_milstein_jump_commutative(const SdeProblem& problem, const SchemeSpec& spec,
                                         std::span<const double> state, const CellNoise& cell);
Vec step_untamed_milstein(const SdeProblem& problem, const SchemeSpec& spec,
                          std::span<const double> state, const CellNoise& cell);

// Iterates the scheme from the problem's initial value over the noise seen
// at spec.level. Throws DomainError if spec.level > noise.level_max.
PathResult simulate_path(const SdeProblem& problem, const SchemeSpec& spec,
                         const NoiseRealization& noise, bool keep_trajectory = false);

}  // namespace tamed
