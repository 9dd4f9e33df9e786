#include "bubblelab/stats.hpp"

#include <algorithm>

namespace bubblelab {

namespace {

constexpr std::size_t kLeaf = 64;
constexpr double kExactFloor = 1e-12;

}  // namespace

double pairwise_sum(std::span<const double> xs) noexcept {
    if (xs.size() <= kLeaf) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

Estimate estimate(std::span<const double> samples) noexcept {
    Estimate e;
    e.n = samples.size();
    if (e.n == 0) return e;
    e.mean = pairwise_sum(samples) / static_cast<double>(e.n);
    if (e.n < 2) return e;
    std::vector<double> sq(samples.size());
    std::transform(samples.begin(), samples.end(), sq.begin(), [m = e.mean](double x) {
        const double d = x - m;
        return d * d;
    });
    const double var = pairwise_sum(sq) / static_cast<double>(e.n - 1);
    e.std_err = std::sqrt(var / static_cast<double>(e.n));
    return e;
}

Estimate frequency(std::size_t hits, std::size_t n) noexcept {
    Estimate e;
    e.n = n;
    if (n == 0) return e;
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    e.mean = p;
    e.std_err = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    return e;
}

bool agree(const Estimate& a, const Estimate& b, double k) noexcept {
    return std::abs(a.mean - b.mean) <= k * combined_se(a, b) + kExactFloor;
}

bool within(const Estimate& a, double target, double k) noexcept {
    return std::abs(a.mean - target) <= k * a.std_err + kExactFloor;
}

}  // namespace bubblelab
