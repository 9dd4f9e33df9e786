#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace bubblelab {

// Fixed-order pairwise summation. The split points depend only on the length,
// so the result is reproducible bit for bit.
double pairwise_sum(std::span<const double> xs) noexcept;

// Sample mean with its standard error.
struct Estimate {
    double mean = 0.0;
    double std_err = 0.0;
    std::size_t n = 0;
};

Estimate estimate(std::span<const double> samples) noexcept;

// Bernoulli frequency with binomial standard error.
Estimate frequency(std::size_t hits, std::size_t n) noexcept;

inline double combined_se(const Estimate& a, const Estimate& b) noexcept {
    return std::hypot(a.std_err, b.std_err);
}

// |a - b| <= k * sqrt(se_a^2 + se_b^2), with a tiny absolute floor so that two
// exact values compare equal.
bool agree(const Estimate& a, const Estimate& b, double k = 3.0) noexcept;

// |a - target| <= k * se_a (plus the same floor).
bool within(const Estimate& a, double target, double k = 3.0) noexcept;

}  // namespace bubblelab
