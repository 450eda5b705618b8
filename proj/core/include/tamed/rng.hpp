#pragma once

#include <array>
#include <cstdint>

namespace tamed {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A draw is a
// pure function of (key, counter), so any stream position can be reached
// without replaying earlier draws.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block generate(Block counter, Key key);
};

// Independent substreams of one noise realization.
enum class Stream : std::uint32_t {
  kBrownian = 0,
  kArrival = 1,
  kMark = 2,
  kBridge = 3,
};

// Uniform draws on the open interval (0, 1) addressed by
// (seed, path index, stream id, draw index).
class UniformStream {
 public:
  UniformStream(std::uint64_t seed, std::uint64_t path, Stream stream);

  // The draw at an absolute position; independent of call order.
  double at(std::uint64_t index) const;

  // Sequential access: next() returns at(0), at(1), ...
  double next();

 private:
  Philox4x32::Key key_;
  std::uint32_t path_lo_;
  std::uint32_t stream_word_;
  std::uint64_t cursor_ = 0;
  std::uint64_t cached_block_ = ~std::uint64_t{0};
  std::array<double, 2> cache_{};
};

// Inverse standard normal CDF on (0, 1).
double normal_quantile(double u);

// 64-bit mixing function (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

}  // namespace tamed
