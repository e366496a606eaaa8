#pragma once

#include <cmath>
#include <stdexcept>

namespace cluslasso {

/// Theoretical penalty level for the group lasso under Gaussian noise:
///   sigma * (2 / sqrt(n)) * sqrt(1 + sqrt(a) + a),  a = (4t + 4 log p) / m_min,
/// where m_min is the smallest group size and t the tail parameter.
inline double group_lasso_penalty_level(double sigma, double n, double p, double t,
                                        double m_min) {
    if (sigma <= 0.0 || n <= 0.0 || p <= 0.0 || m_min <= 0.0 || t < 0.0)
        throw std::invalid_argument("penalty level arguments must be positive");
    const double a = (4.0 * t + 4.0 * std::log(p)) / m_min;
    return sigma * (2.0 / std::sqrt(n)) * std::sqrt(1.0 + std::sqrt(a) + a);
}

/// Theoretical penalty level for the lasso on a reduced q-column design:
///   2 * max_col_scale * xi * sqrt((t^2 + 2 log q) / n),
/// with xi^2 = sigma^2 + B^2 the noise level inflated by the representation
/// bias, and max_col_scale the largest column root-mean-square.
inline double reduced_design_penalty_level(double max_col_scale, double xi, double n, double q,
                                           double t) {
    if (max_col_scale <= 0.0 || xi <= 0.0 || n <= 0.0 || q <= 0.0 || t < 0.0)
        throw std::invalid_argument("penalty level arguments must be positive");
    return 2.0 * max_col_scale * xi * std::sqrt((t * t + 2.0 * std::log(q)) / n);
}

}  // namespace cluslasso
