#include "tamed/noise.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "tamed/errors.hpp"
#include "tamed/rng.hpp"
#include "tamed/summation.hpp"

namespace tamed {

double kappa(std::uint64_t n, double t, double horizon) {
  if (n == 0) throw DomainError("kappa: n must be >= 1");
  if (!(t >= 0.0 && t <= horizon)) {
    throw DomainError("kappa: t = " + std::to_string(t) + " outside [0, " +
                      std::to_string(horizon) + "]");
  }
  const double nd = static_cast<double>(n);
  return std::floor(nd * t) / nd;
}

Vec NoiseRealization::brownian_endpoint() const {
  Vec w(dim_noise);
  for (std::size_t j = 0; j < dim_noise; ++j) {
    w[j] = pairwise_sum_strided(brownian_increments, j, dim_noise);
  }
  return w;
}

CellNoise CoarseView::cell(std::size_t k) const {
  const std::size_t m = dim_noise;
  const std::size_t b = jump_begin[k];
  const std::size_t e = jump_begin[k + 1];
  CellNoise c;
  c.h = h;
  c.dw = std::span<const double>(increments).subspan(k * m, m);
  c.marks = std::span<const double>(jump_marks).subspan(b, e - b);
  c.offsets = std::span<const double>(jump_offsets).subspan(b * m, (e - b) * m);
  return c;
}

namespace {

std::size_t finest_cell_of(double t, double horizon, std::size_t cells) {
  const double pos = std::floor(t / horizon * static_cast<double>(cells));
  if (pos <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(pos), cells - 1);
}

}  // namespace

void sample_noise_into(const SdeProblem& problem, int level_max, std::uint64_t seed,
                       std::uint64_t path_index, NoiseRealization& out) {
  if (level_max < 0 || level_max > kMaxNoiseLevel) {
    throw ConfigError("level_max must lie in [0, " + std::to_string(kMaxNoiseLevel) + "], got " +
                      std::to_string(level_max));
  }
  const std::size_t m = problem.dim_noise;
  const double horizon = problem.horizon;

  out.level_max = level_max;
  out.dim_noise = m;
  out.horizon = horizon;
  out.seed = seed;
  out.path_index = path_index;

  const std::size_t cells = out.cells();
  const double h = out.step();
  const double sqrt_h = std::sqrt(h);

  out.brownian_increments.resize(cells * m);
  UniformStream gauss(seed, path_index, Stream::kBrownian);
  for (double& dw : out.brownian_increments) dw = sqrt_h * normal_quantile(gauss.next());

  out.jump_events.clear();
  const double rate = problem.intensity();
  if (!(rate > 0.0)) return;

  const MarkDistribution& law = problem.jump->mark_law;
  UniformStream arrivals(seed, path_index, Stream::kArrival);
  UniformStream marks(seed, path_index, Stream::kMark);
  UniformStream bridge(seed, path_index, Stream::kBridge);

  // Running w at the left edge of finest cells, advanced lazily as jump times grow.
  Vec w_left(m, 0.0);
  std::size_t w_cell = 0;

  double t = 0.0;
  for (;;) {
    double next = t - std::log(arrivals.next()) / rate;
    if (next <= t) next = std::nextafter(t, std::numeric_limits<double>::infinity());
    t = next;
    if (t > horizon) break;

    JumpEvent ev;
    ev.time = t;
    ev.mark = law.from_uniform(marks.next());
    ev.finest_cell = finest_cell_of(t, horizon, cells);
    for (; w_cell < ev.finest_cell; ++w_cell) {
      for (std::size_t j = 0; j < m; ++j) w_left[j] += out.brownian_increments[w_cell * m + j];
    }

    // Brownian bridge inside [a, a + h): mean linear in the increment,
    // variance (tau - a)(a + h - tau) / h.
    const double a = static_cast<double>(ev.finest_cell) * h;
    const double elapsed = std::clamp(t - a, 0.0, h);
    const double frac = elapsed / h;
    const double sd = std::sqrt(elapsed * (h - elapsed) / h);
    ev.bridge_offset.resize(m);
    ev.brownian_at_jump.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      const double dw = out.brownian_increments[ev.finest_cell * m + j];
      ev.bridge_offset[j] = frac * dw + sd * normal_quantile(bridge.next());
      ev.brownian_at_jump[j] = w_left[j] + ev.bridge_offset[j];
    }
    out.jump_events.push_back(std::move(ev));
  }
}

NoiseRealization sample_noise(const SdeProblem& problem, int level_max, std::uint64_t seed,
                              std::uint64_t path_index) {
  NoiseRealization out;
  sample_noise_into(problem, level_max, seed, path_index, out);
  return out;
}

void coarsen_into(const NoiseRealization& noise, int level, CoarseView& out) {
  if (level < 0 || level > noise.level_max) {
    throw DomainError("coarsen: level " + std::to_string(level) + " outside [0, " +
                      std::to_string(noise.level_max) + "]");
  }
  const std::size_t m = noise.dim_noise;
  const int shift = noise.level_max - level;
  const std::size_t cells = std::size_t{1} << level;

  out.level = level;
  out.dim_noise = m;
  out.h = noise.horizon / static_cast<double>(cells);

  out.increments.assign(noise.brownian_increments.begin(), noise.brownian_increments.end());
  std::size_t n = noise.cells();
  for (int r = 0; r < shift; ++r) {
    const std::size_t half = n / 2;
    for (std::size_t c = 0; c < half; ++c) {
      for (std::size_t j = 0; j < m; ++j) {
        out.increments[c * m + j] = out.increments[2 * c * m + j] + out.increments[(2 * c + 1) * m + j];
      }
    }
    n = half;
  }
  out.increments.resize(cells * m);

  const std::size_t jumps = noise.jump_events.size();
  out.jump_times.resize(jumps);
  out.jump_marks.resize(jumps);
  out.jump_offsets.resize(jumps * m);
  out.jump_brownian.resize(jumps * m);
  out.jump_begin.assign(cells + 1, 0);

  for (std::size_t e = 0; e < jumps; ++e) {
    const JumpEvent& ev = noise.jump_events[e];
    const std::size_t coarse = ev.finest_cell >> shift;
    const std::size_t first_fine = coarse << shift;
    out.jump_times[e] = ev.time;
    out.jump_marks[e] = ev.mark;
    for (std::size_t j = 0; j < m; ++j) {
      double partial = 0.0;
      for (std::size_t f = first_fine; f < ev.finest_cell; ++f) {
        partial += noise.brownian_increments[f * m + j];
      }
      out.jump_offsets[e * m + j] = partial + ev.bridge_offset[j];
      out.jump_brownian[e * m + j] = ev.brownian_at_jump[j];
    }
    ++out.jump_begin[coarse + 1];
  }
  for (std::size_t k = 0; k < cells; ++k) out.jump_begin[k + 1] += out.jump_begin[k];
}

CoarseView coarsen(const NoiseRealization& noise, int level) {
  CoarseView out;
  coarsen_into(noise, level, out);
  return out;
}

// ---------------------------------------------------------------------------
// Binary dump

namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(bytes), 8);
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& is) {
  unsigned char bytes[8];
  if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw ConfigError("truncated noise dump");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace

void write_noise_binary(std::ostream& os, const NoiseRealization& noise) {
  put_u64(os, static_cast<std::uint64_t>(noise.level_max));
  put_u64(os, noise.dim_noise);
  put_u64(os, noise.jump_events.size());
  put_u64(os, noise.seed);
  put_f64(os, noise.horizon);
  for (double v : noise.brownian_increments) put_f64(os, v);
  for (const auto& ev : noise.jump_events) {
    put_f64(os, ev.time);
    put_f64(os, ev.mark);
    for (double v : ev.brownian_at_jump) put_f64(os, v);
    for (double v : ev.bridge_offset) put_f64(os, v);
  }
}

NoiseRealization read_noise_binary(std::istream& is) {
  NoiseRealization noise;
  const std::uint64_t level = get_u64(is);
  if (level > static_cast<std::uint64_t>(kMaxNoiseLevel)) throw ConfigError("bad level in noise dump");
  noise.level_max = static_cast<int>(level);
  noise.dim_noise = get_u64(is);
  if (noise.dim_noise == 0 || noise.dim_noise > 4096) throw ConfigError("bad dimension in noise dump");
  const std::uint64_t jumps = get_u64(is);
  noise.seed = get_u64(is);
  noise.horizon = get_f64(is);
  noise.brownian_increments.resize(noise.cells() * noise.dim_noise);
  for (double& v : noise.brownian_increments) v = get_f64(is);
  for (std::uint64_t e = 0; e < jumps; ++e) {
    JumpEvent ev;
    ev.time = get_f64(is);
    ev.mark = get_f64(is);
    ev.brownian_at_jump.resize(noise.dim_noise);
    ev.bridge_offset.resize(noise.dim_noise);
    for (double& v : ev.brownian_at_jump) v = get_f64(is);
    for (double& v : ev.bridge_offset) v = get_f64(is);
    ev.finest_cell = finest_cell_of(ev.time, noise.horizon, noise.cells());
    noise.jump_events.push_back(std::move(ev));
  }
  return noise;
}

}  // namespace tamed
