#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tamed {

// Sums by repeatedly adding adjacent pairs (a trailing odd element is carried
// up unchanged). For 2^k inputs this is the dyadic tree used by coarsen().
// The association order depends only on the length, never on scheduling.
double pairwise_sum(std::span<const double> values);

// Pairwise sum of values[offset], values[offset + stride], ...
double pairwise_sum_strided(std::span<const double> values, std::size_t offset,
                            std::size_t stride);

}  // namespace tamed
