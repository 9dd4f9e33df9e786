#pragma once

#include <cmath>
#include <numbers>

namespace bubblelab {

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double norm_pdf(double z) {
    return std::exp(-0.5 * z * z) * (std::numbers::inv_sqrtpi / std::numbers::sqrt2);
}

}  // namespace bubblelab
