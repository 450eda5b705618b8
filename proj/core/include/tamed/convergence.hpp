#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tamed/model.hpp"
#include "tamed/schemes.hpp"

namespace tamed {

// Levels closer than this to the reference would measure reference error.
inline constexpr int kReferenceSeparation = 3;

// Tamed runs fail when more than this fraction of paths diverges.
inline constexpr double kMaxTamedDivergenceFraction = 1e-3;

// Two-sided 95% normal quantile used for every confidence half-width.
inline constexpr double kConfidenceZ = 1.959963984540054;

struct ConvergenceConfig {
  std::vector<int> levels;  // ascending coarse levels
  int reference_level = 16;
  std::size_t paths = 10000;
  std::vector<double> q_list{2.0};
  std::uint64_t master_seed = 0;
  SchemeKind kind = SchemeKind::TamedMilsteinContinuous;
  std::optional<SchemeKind> reference_kind;  // defaults to kind
  std::size_t workers = 0;                   // 0 = hardware concurrency

  // Throws ConfigError on empty/unsorted levels, reference_level below
  // max(levels) + kReferenceSeparation, zero paths, or q < 1.
  void validate() const;
};

struct ErrorRow {
  int level = 0;
  double h = 0.0;
  double q = 2.0;
  double error = 0.0;       // (mean |x_T^ref - x_T^level|^q)^(1/q)
  double half_width = 0.0;  // 95% half-width mapped through the 1/q power
  std::size_t paths_used = 0;
  std::size_t diverged = 0;
};

struct ErrorTable {
  std::vector<ErrorRow> rows;  // level-major, q-minor
  std::size_t total_paths = 0;

  const ErrorRow* find(int level, double q) const;
  std::vector<ErrorRow> column(double q) const;
};

struct RateFit {
  double q = 2.0;
  double slope = 0.0;  // empirical strong order
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<int> levels_used;
  std::vector<int> excluded_levels;  // zero error, log undefined
};

// Estimate of a moment with its 95% confidence half-width.
struct MomentEstimate {
  double value = 0.0;
  double half_width = 0.0;
};

// ((1/M) sum |e_i|^q)^(1/q). Throws DomainError on an empty list, negative or
// non-finite entries, or q < 1.
double lq_error(std::span<const double> absolute_errors, double q);

// lq_error together with its delta-method half-width.
MomentEstimate lq_error_with_ci(std::span<const double> absolute_errors, double q);

// Sample mean and 95% half-width of the given values.
MomentEstimate mean_with_ci(std::span<const double> values);

// Couples every level with the reference on one noise realization per path:
// path i draws its noise from (master_seed, i) at reference_level.
// Throws DivergenceError when a tamed scheme diverges on more than
// kMaxTamedDivergenceFraction of the paths.
ErrorTable run_strong_convergence(const SdeProblem& problem, const ConvergenceConfig& config);

// |x_T^ref - x_T^level| for each configured level on one path, nullopt where
// either run diverged.
std::vector<std::optional<double>> coupled_path_errors(const SdeProblem& problem,
                                                       const ConvergenceConfig& config,
                                                       std::uint64_t path_index);

// OLS of log2(error) against -level over the rows with this q.
// Throws DomainError when fewer than two usable levels remain.
RateFit fit_rate(const ErrorTable& table, double q);

struct MomentRow {
  int level = 0;
  double p = 2.0;
  double moment = 0.0;  // E sup_t |x_t^n|^p over grid points
  double half_width = 0.0;
  std::size_t paths_used = 0;
  std::size_t diverged = 0;
};

// Empirical p-th moments of the grid supremum per level. Diverged paths are
// excluded from the estimate and tallied; tamed schemes fail past
// kMaxTamedDivergenceFraction, untamed ones report the tally.
std::vector<MomentRow> moment_sweep(const SdeProblem& problem, SchemeKind kind,
                                    const std::vector<int>& levels, double p, std::size_t paths,
                                    std::uint64_t seed, std::size_t workers = 0);

}  // namespace tamed
