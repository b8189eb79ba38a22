#pragma once

#include <cmath>
#include <limits>

namespace lkconf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Standard normal CDF via erfc; absolute error well below 1e-7.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

// P{Y not in [lo, hi]} for Y ~ N(mu, sd^2). Degenerate interval gives 1.
inline double gaussian_miss(double lo, double hi, double mu, double sd) {
    if (lo <= -kInf && hi >= kInf) return 0.0;
    if (hi <= lo) return 1.0;
    return 1.0 - (normal_cdf((hi - mu) / sd) - normal_cdf((lo - mu) / sd));
}

}  // namespace lkconf
