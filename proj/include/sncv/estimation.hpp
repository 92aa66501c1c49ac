#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

#include "sncv/distribution.hpp"
#include "sncv/errors.hpp"
#include "sncv/normal.hpp"
#include "sncv/penalty.hpp"

namespace sncv {

// Log-likelihood of the centred location-scale model:
//   l_inc = (n/2) log(2/(pi sigma^2)) - (1/2) sum b_i^2 + sum log Phi(alpha b_i)
// with b_i = z_i + delta sqrt(2/pi).
inline double loglik(const Params& p, std::span<const double> y, ShapeMap map = {}) {
    const std::size_t n = y.size();
    if (n == 0) throw std::invalid_argument("loglik: empty sample");
    const double sigma = sigma_of(p);
    const double alpha = alpha_of(p, map);
    const double delta = delta_of(p, map);
    const double shift = delta * sqrt_2_over_pi;
    double quad = 0.0, tail = 0.0;
    for (double yi : y) {
        const double b = (yi - p.mu) / sigma + shift;
        quad += b * b;
        tail += log_norm_cdf(alpha * b);
    }
    return 0.5 * static_cast<double>(n) * std::log(2.0 / (pi * sigma * sigma)) - 0.5 * quad + tail;
}

// Score components averaged by 1/n. d_theta accumulates the two
// sqrt(2/pi)-weighted pieces per observation so that they cancel exactly at
// theta = 0 (the symmetric point is a stationary point bit-for-bit).
struct GradVector {
    double d_mu = 0.0;
    double d_eta = 0.0;
    double d_theta = 0.0;
};

inline GradVector grad_loglik(const Params& p, std::span<const double> y, ShapeMap map = {}) {
    const std::size_t n = y.size();
    if (n == 0) throw std::invalid_argument("grad_loglik: empty sample");
    const double sigma = sigma_of(p);
    const double a = map.a;
    const double alpha = alpha_of(p, map);
    const double delta = delta_of(p, map);
    const double shift = delta * sqrt_2_over_pi;
    const double dalpha = a * std::cosh(a * p.theta);
    const double db = a * (1.0 - delta * delta) * sqrt_2_over_pi;  // d b_i / d theta
    double gm = 0.0, ge = 0.0, gt = 0.0;
    for (double yi : y) {
        const double z = (yi - p.mu) / sigma;
        const double b = z + shift;
        const double m = mills_ratio(alpha * b);
        gm += (b - m * alpha) / sigma;
        ge += (b - alpha * m) * z;
        gt += m * (dalpha * b + alpha * db) - b * db;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    return {gm * inv_n, ge * inv_n - 1.0, gt * inv_n};
}

inline double penalized_loglik(const Params& p, std::span<const double> y, double lambda,
                               const PenaltySpec& spec, ShapeMap map = {}) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("penalized_loglik: lambda must be >= 0");
    return loglik(p, y, map) - lambda * penalty_eval(spec, p.theta).value;
}

// Fisher information of (mu, eta, theta) at the symmetric point: the theta
// diagonal vanishes, which is the singularity the penalisation repairs.
inline std::array<std::array<double, 3>, 3> fisher_info_symmetry(std::size_t n, double sigma) {
    if (n == 0) throw std::invalid_argument("fisher_info_symmetry: n must be >= 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("fisher_info_symmetry: sigma must be positive");
    std::array<std::array<double, 3>, 3> info{};
    info[0][0] = static_cast<double>(n) / (sigma * sigma);
    info[1][1] = 2.0 * static_cast<double>(n);
    info[2][2] = 0.0;
    return info;
}

// Method-of-moments initial estimate. Sample skewness is the biased 1/n
// moment form; it is clamped strictly inside the attainable gamma1 range
// before inversion (the map diverges at the boundary).
struct InitialEstimate {
    Params params;
    double gamma1_raw = 0.0;
    bool clamped = false;
};

inline InitialEstimate mom_init(std::span<const double> y, ShapeMap map = {}) {
    const std::size_t n = y.size();
    if (n < 4) throw insufficient_data_error("mom_init: need at least 4 observations");
    const double nd = static_cast<double>(n);
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= nd;
    double m2 = 0.0, m3 = 0.0;
    for (double v : y) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= nd;
    m3 /= nd;
    if (!(m2 > 0.0)) throw degenerate_sample_error("mom_init: sample variance is zero");

    const double g_raw = m3 / (m2 * std::sqrt(m2));
    const double bound = gamma1_limit * (1.0 - 1e-6);
    double g = g_raw;
    bool clamped = false;
    if (!(std::abs(g) < bound)) {
        g = std::copysign(bound, g);
        clamped = true;
    }
    const double delta = gamma1_to_delta(g);
    const double alpha = delta / std::sqrt(1.0 - delta * delta);
    const double sigma = std::sqrt(m2 / (1.0 - 2.0 * delta * delta / pi));
    return {{mean, std::log(sigma), shape_to_theta(alpha, map)}, g_raw, clamped};
}

}  // namespace sncv
