#include "tamed/summation.hpp"

namespace tamed {

double pairwise_sum(std::span<const double> values) {
  return pairwise_sum_strided(values, 0, 1);
}

double pairwise_sum_strided(std::span<const double> values, std::size_t offset,
                            std::size_t stride) {
  if (offset >= values.size()) return 0.0;
  std::vector<double> work;
  work.reserve((values.size() - offset + stride - 1) / stride);
  for (std::size_t i = offset; i < values.size(); i += stride) work.push_back(values[i]);
  std::size_t n = work.size();
  while (n > 1) {
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < half; ++i) work[i] = work[2 * i] + work[2 * i + 1];
    if (n % 2 == 1) {
      work[half] = work[n - 1];
      n = half + 1;
    } else {
      n = half;
    }
  }
  return work.front();
}

}  // namespace tamed
