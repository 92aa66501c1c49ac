#pragma once

#include <cmath>

namespace sncv {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double sqrt_2_over_pi = 0.79788456080286535588;  // sqrt(2/pi)
inline constexpr double inv_sqrt2 = 0.70710678118654752440;
inline constexpr double half_log_2pi = 0.91893853320467274178;  // log(2*pi)/2

inline double norm_logpdf(double x) { return -0.5 * x * x - half_log_2pi; }

inline double norm_pdf(double x) { return std::exp(norm_logpdf(x)); }

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * inv_sqrt2); }

namespace detail {

// Tail factor S(t) in Phi(-t) = phi(t)/t * S(t), t > 0 large:
// S(t) = 1 - 1/t^2 + 3/t^4 - 15/t^6 + ... (alternating double factorials).
inline double normal_tail_series(double t) {
    const double u = 1.0 / (t * t);
    return 1.0 -
           u * (1.0 -
                3.0 * u *
                    (1.0 -
                     5.0 * u *
                         (1.0 -
                          7.0 * u *
                              (1.0 -
                               9.0 * u *
                                   (1.0 -
                                    11.0 * u *
                                        (1.0 - 13.0 * u * (1.0 - 15.0 * u * (1.0 - 17.0 * u))))))));
}

}  // namespace detail

// log Phi(x), safe against underflow: Phi underflows near x = -37.5, and the
// score/E-step formulas need log Phi far beyond that. Below -10 the Mills
// tail series gives full double precision.
inline double log_norm_cdf(double x) {
    if (x >= -10.0) return std::log(norm_cdf(x));
    const double t = -x;
    return norm_logpdf(x) - std::log(t) + std::log(detail::normal_tail_series(t));
}

// Mills-type ratio phi(x)/Phi(x). Positive, decreasing, equal to
// sqrt(2/pi) at 0. Direct evaluation is exact down to -30; past that the
// asymptotic series keeps relative error below 1e-12.
inline double mills_ratio(double x) {
    if (x >= -30.0) return norm_pdf(x) / norm_cdf(x);
    return -x / detail::normal_tail_series(-x);
}

}  // namespace sncv
