#pragma once

#include <cstdint>
#include <initializer_list>

namespace cibench {

/// Numerically stable logistic function.
double sigmoid(double x);

/// Mixes a seed with stream identifiers into an independent 64-bit seed
/// (SplitMix64 chaining).
std::uint64_t derive_seed(std::uint64_t seed,
                          std::initializer_list<std::uint64_t> stream);

}  // namespace cibench
