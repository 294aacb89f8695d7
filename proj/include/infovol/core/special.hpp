#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "infovol/core/error.hpp"

namespace infovol::special {

/// Survival function of chi-squared with `df` degrees of freedom.
inline double chi2_sf(double x, double df) {
    if (!(df > 0.0)) throw ArgumentError("chi2_sf: df must be positive");
    if (x <= 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

/// Upper tail of F(d1, d2) at x.
inline double f_sf(double x, double d1, double d2) {
    if (x <= 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    // P(F > x) = I_{d2/(d2+d1 x)}(d2/2, d1/2)
    return boost::math::ibeta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * x));
}

/// Two-sided p-value of Student t with `df` degrees of freedom.
inline double student_t_two_sided(double t, double df) {
    if (std::isinf(t)) return 0.0;
    return boost::math::ibeta(0.5 * df, 0.5, df / (df + t * t));
}

/// Kolmogorov limiting distribution: P(K > lambda), K = sup|Brownian bridge|.
/// Uses the theta-function form for small lambda and the alternating series otherwise;
/// both are summed until terms fall below 1e-16.
inline double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    constexpr double pi = std::numbers::pi;
    if (lambda < 1.18) {
        const double c = pi * pi / (8.0 * lambda * lambda);
        double sum = 0.0;
        for (int k = 1; k < 100; ++k) {
            const double m = 2.0 * k - 1.0;
            const double term = std::exp(-m * m * c);
            sum += term;
            if (term < 1e-16 * sum) break;
        }
        return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * sum, 0.0, 1.0);
    }
    double sum = 0.0;
    for (int k = 1; k < 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace infovol::special
