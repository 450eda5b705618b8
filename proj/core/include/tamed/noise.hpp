#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "tamed/model.hpp"

namespace tamed {

inline constexpr int kMaxNoiseLevel = 30;

// Left grid point of t on a grid with n cells per unit time: floor(n t) / n.
// Throws DomainError unless 0 <= t <= horizon and n >= 1.
double kappa(std::uint64_t n, double t, double horizon = 1.0);

struct JumpEvent {
  double time = 0.0;
  double mark = 0.0;
  Vec brownian_at_jump;   // w(time), m components
  std::size_t finest_cell = 0;
  Vec bridge_offset;      // w(time) - w(left edge of finest_cell)
};

// One coupled sample of the driving noise on [0, T].
struct NoiseRealization {
  int level_max = 0;
  std::size_t dim_noise = 1;
  double horizon = 1.0;
  Vec brownian_increments;  // cell-major: [cell * m + j]
  std::vector<JumpEvent> jump_events;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;

  std::size_t cells() const { return std::size_t{1} << level_max; }
  double step() const { return horizon / static_cast<double>(cells()); }

  // w_T, summed pairwise over the dyadic tree.
  Vec brownian_endpoint() const;
};

// Noise restricted to one grid cell [lh, lh + h).
struct CellNoise {
  double h = 0.0;
  std::span<const double> dw;       // m
  std::span<const double> marks;    // one per jump, in time order
  std::span<const double> offsets;  // jumps x m: w(tau_i) - w(lh)

  std::size_t jump_count() const { return marks.size(); }
  double offset(std::size_t jump, std::size_t component) const {
    return offsets[jump * dw.size() + component];
  }
};

// The realization seen through a grid of 2^level cells.
struct CoarseView {
  int level = 0;
  std::size_t dim_noise = 1;
  double h = 0.0;
  Vec increments;                      // cell-major, 2^level x m
  std::vector<std::size_t> jump_begin; // 2^level + 1 offsets into the jump arrays
  Vec jump_times;
  Vec jump_marks;
  Vec jump_offsets;                    // w(tau) - w(lh), jumps x m
  Vec jump_brownian;                   // w(tau), jumps x m

  std::size_t cells() const { return increments.size() / dim_noise; }
  CellNoise cell(std::size_t k) const;
};

// Draws one realization. Brownian increments, inter-arrival times, marks and
// bridge values come from separate substreams keyed by (seed, path_index),
// so the result is a pure function of its arguments.
NoiseRealization sample_noise(const SdeProblem& problem, int level_max, std::uint64_t seed,
                              std::uint64_t path_index = 0);
void sample_noise_into(const SdeProblem& problem, int level_max, std::uint64_t seed,
                       std::uint64_t path_index, NoiseRealization& out);

// Coarse increments are pairwise sums over the dyadic tree, so the pairwise
// total of any level reproduces the finest-level endpoint bitwise.
CoarseView coarsen(const NoiseRealization& noise, int level);
void coarsen_into(const NoiseRealization& noise, int level, CoarseView& out);

// Debug dump. Layout, all little-endian:
//   u64 level_max, u64 m, u64 jump count, u64 seed,
//   f64 horizon, f64 increments[2^level_max * m],
//   per jump: f64 time, f64 mark, f64 w(time)[m], f64 bridge offset[m].
void write_noise_binary(std::ostream& os, const NoiseRealization& noise);
NoiseRealization read_noise_binary(std::istream& is);

}  // namespace tamed
