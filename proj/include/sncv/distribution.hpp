#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sncv/normal.hpp"
#include "sncv/rng.hpp"

namespace sncv {

// Scaling constant of the hyperbolic shape transform alpha = sinh(a*theta).
// a = 1 recovers the Fisher transform of delta = tanh(theta).
struct ShapeMap {
    double a = 1.0;
};

// Model point in the unconstrained parametrisation: location mu, log-scale
// eta (sigma = exp(eta)), and hyperbolic shape theta.
struct Params {
    double mu = 0.0;
    double eta = 0.0;
    double theta = 0.0;
};

struct ModelMoments {
    double mean = 0.0;
    double variance = 1.0;
    double gamma1 = 0.0;
};

// Largest attainable |gamma1| of the family: the delta -> 1 limit of the
// skewness formula. Initialisers must clamp strictly inside it.
inline constexpr double gamma1_limit = 0.99527174643115620;

inline double sigma_of(const Params& p) { return std::exp(p.eta); }

struct ShapePair {
    double alpha = 0.0;
    double delta = 0.0;
};

inline ShapePair theta_to_shape(double theta, ShapeMap map = {}) {
    if (!(map.a > 0.0)) throw std::invalid_argument("theta_to_shape: map.a must be positive");
    if (!std::isfinite(theta)) throw std::invalid_argument("theta_to_shape: theta must be finite");
    return {std::sinh(map.a * theta), std::tanh(map.a * theta)};
}

inline double shape_to_theta(double alpha, ShapeMap map = {}) {
    if (!(map.a > 0.0)) throw std::invalid_argument("shape_to_theta: map.a must be positive");
    if (!std::isfinite(alpha)) throw std::invalid_argument("shape_to_theta: alpha must be finite");
    return std::asinh(alpha) / map.a;
}

inline double alpha_of(const Params& p, ShapeMap map = {}) { return std::sinh(map.a * p.theta); }
inline double delta_of(const Params& p, ShapeMap map = {}) { return std::tanh(map.a * p.theta); }

// Pearson skewness gamma1 of the model as a function of delta. Odd and
// strictly increasing on (-1, 1), bounded by gamma1_limit.
inline double delta_to_gamma1(double delta) {
    if (!(std::abs(delta) < 1.0)) throw std::domain_error("delta_to_gamma1: |delta| must be < 1");
    const double d2 = delta * delta;
    const double v = 1.0 - 2.0 * d2 / pi;
    return 0.5 * (4.0 - pi) * delta * d2 * std::pow(2.0 / pi, 1.5) / (v * std::sqrt(v));
}

inline double gamma1_to_delta(double gamma1) {
    if (!(std::abs(gamma1) < gamma1_limit))
        throw std::domain_error("gamma1_to_delta: |gamma1| must be < 0.995272");
    const double r = 2.0 * gamma1 / (4.0 - pi);
    const double c = std::cbrt(r);
    return std::sqrt(pi / 2.0) * c / std::sqrt(1.0 + c * c);
}

// Log-density of the centred location-scale model: with z = (y - mu)/sigma
// and b = z + delta*sqrt(2/pi), the density is (2/sigma) phi(b) Phi(alpha b).
// Never NaN: the deep tail of Phi goes through the underflow-safe log path.
inline double sn_logpdf(double y, const Params& p, ShapeMap map = {}) {
    const double sigma = sigma_of(p);
    const double alpha = alpha_of(p, map);
    const double delta = delta_of(p, map);
    const double b = (y - p.mu) / sigma + delta * sqrt_2_over_pi;
    return std::log(2.0) - p.eta + norm_logpdf(b) + log_norm_cdf(alpha * b);
}

inline ModelMoments model_moments(const Params& p, ShapeMap map = {}) {
    const double sigma = sigma_of(p);
    const double delta = delta_of(p, map);
    return {p.mu, sigma * sigma * (1.0 - 2.0 * delta * delta / pi), delta_to_gamma1(delta)};
}

// n i.i.d. draws via the half-normal representation
// X = delta*|N1| + sqrt(1-delta^2)*N2, Y = mu + sigma*(X - delta*sqrt(2/pi)).
// One Box-Muller pair per observation, so the stream is seed-deterministic.
inline std::vector<double> sample(std::size_t n, const Params& p, std::uint64_t seed, ShapeMap map = {}) {
    if (n == 0) throw std::invalid_argument("sample: n must be >= 1");
    const double sigma = sigma_of(p);
    const double delta = delta_of(p, map);
    const double comp = std::sqrt(1.0 - delta * delta);
    Rng rng(seed);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto [g1, g2] = rng.normal_pair();
        const double x = delta * std::abs(g1) + comp * g2;
        out[i] = p.mu + sigma * (x - delta * sqrt_2_over_pi);
    }
    return out;
}

}  // namespace sncv
