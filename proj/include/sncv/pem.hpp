#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sncv/distribution.hpp"
#include "sncv/errors.hpp"
#include "sncv/estimation.hpp"
#include "sncv/normal.hpp"
#include "sncv/penalty.hpp"

namespace sncv {

// Fixed penalty constants of the Q-based MPLE baseline.
inline constexpr double q_mple_lambda = 0.875913;
inline constexpr double q_mple_c2 = 0.856250;

struct PemOptions {
    double tol = 1e-8;          // relative change of l_incp that stops the EM loop
    int max_iter = 500;
    int newton_max_iter = 50;
    double newton_tol = 1e-10;  // |dPsi/dtheta| target of the inner solve
    double theta_bound = 10.0;  // hard safety bound on |theta|
};

struct TraceRow {
    int iteration = 0;
    double mu = 0.0;
    double eta = 0.0;
    double theta = 0.0;
    double penalized_loglik = 0.0;
};

struct FitResult {
    Params params;
    double lambda = 0.0;
    PenaltySpec penalty;
    double loglik = 0.0;
    double penalized_loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    bool hit_theta_bound = false;
    std::vector<TraceRow> trace;

    double sigma() const { return std::exp(params.eta); }
    double alpha(ShapeMap map = {}) const { return std::sinh(map.a * params.theta); }
};

// Raised when the objective turns non-finite; carries the iterate trace for
// post-mortem inspection.
struct numerical_error : std::runtime_error {
    std::vector<TraceRow> trace;
    numerical_error(const std::string& what, std::vector<TraceRow> t)
        : std::runtime_error(what), trace(std::move(t)) {}
};

// Moments of W | Y: a unit-variance normal with mean t truncated to (0, inf).
struct LatentMoments {
    double m1 = 0.0;
    double m2 = 0.0;
};

inline LatentMoments latent_moments(double t) {
    const double m = mills_ratio(t);
    return {t + m, 1.0 + t * (t + m)};
}

namespace detail {

// Posterior means E[W_i | y_i] at the previous iterate; the only E-step
// quantity the M-steps need.
inline std::vector<double> posterior_mean_w(const Params& prev, std::span<const double> y, ShapeMap map) {
    const double sigma = sigma_of(prev);
    const double alpha = alpha_of(prev, map);
    const double shift = delta_of(prev, map) * sqrt_2_over_pi;
    std::vector<double> c(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double t = alpha * ((y[i] - prev.mu) / sigma + shift);
        c[i] = t + mills_ratio(t);
    }
    return c;
}

inline double mu_step(const Params& prev, std::span<const double> y, std::span<const double> c,
                      ShapeMap map) {
    const double n = static_cast<double>(y.size());
    const double sigma = sigma_of(prev);
    const double alpha = alpha_of(prev, map);
    const double delta = delta_of(prev, map);
    double ybar = 0.0, csum = 0.0;
    for (double v : y) ybar += v;
    ybar /= n;
    for (double v : c) csum += v;
    return ybar + sigma * delta * sqrt_2_over_pi - sigma / n * (alpha / (1.0 + alpha * alpha)) * csum;
}

inline double sigma_step(double mu_new, const Params& prev, std::span<const double> y,
                         std::span<const double> c, ShapeMap map) {
    const double n = static_cast<double>(y.size());
    const double alpha = alpha_of(prev, map);
    const double delta = delta_of(prev, map);
    double dbar = 0.0, dc = 0.0, d2 = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - mu_new;
        dbar += d;
        dc += d * c[i];
        d2 += d * d;
    }
    dbar /= n;
    if (!(d2 > 0.0)) throw degenerate_sample_error("sigma_step: all observations equal the location");
    const double one_a2 = 1.0 + alpha * alpha;
    const double t = one_a2 * delta * sqrt_2_over_pi * dbar - alpha / n * dc;
    return 0.5 * t + std::sqrt(0.25 * t * t + one_a2 / n * d2);
}

// theta-dependent part of Psi given fresh (mu, sigma) and posterior means c:
//   Q(theta) = -(1+alpha^2)/2 * sum b_i^2 + alpha * sum c_i b_i - lambda pen(theta),
// reduced to the four data sums so each evaluation is O(1).
struct ThetaObjective {
    double n, sz, sz2, sc, scz;
    double lambda;
    PenaltySpec spec;
    double a;

    static ThetaObjective make(double mu_new, double sigma_new, std::span<const double> y,
                               std::span<const double> c, double lambda, const PenaltySpec& spec,
                               ShapeMap map) {
        ThetaObjective o{static_cast<double>(y.size()), 0.0, 0.0, 0.0, 0.0, lambda, spec, map.a};
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double z = (y[i] - mu_new) / sigma_new;
            o.sz += z;
            o.sz2 += z * z;
            o.sc += c[i];
            o.scz += c[i] * z;
        }
        return o;
    }

    double value(double theta) const {
        const double al = std::sinh(a * theta), de = std::tanh(a * theta);
        const double k = sqrt_2_over_pi;
        const double sb2 = sz2 + 2.0 * de * k * sz + n * de * de * k * k;
        const double scb = scz + de * k * sc;
        return -0.5 * (1.0 + al * al) * sb2 + al * scb - lambda * penalty_eval(spec, theta).value;
    }

    // first and second derivatives in theta
    std::pair<double, double> derivs(double theta) const {
        const double al = std::sinh(a * theta), de = std::tanh(a * theta);
        const double al1 = a * std::cosh(a * theta), al2 = a * a * al;
        const double de1 = a * (1.0 - de * de), de2 = -2.0 * a * de * de1;
        const double k = sqrt_2_over_pi;
        const double A = sz2 + 2.0 * de * k * sz + n * de * de * k * k;
        const double A1 = 2.0 * de1 * k * sz + 2.0 * n * de * de1 * k * k;
        const double A2 = 2.0 * de2 * k * sz + 2.0 * n * (de1 * de1 + de * de2) * k * k;
        const double B = scz + de * k * sc;
        const double B1 = de1 * k * sc;
        const double B2 = de2 * k * sc;
        const PenaltyEval pe = penalty_eval(spec, theta);
        const double d1 = -al * al1 * A - 0.5 * (1.0 + al * al) * A1 + al1 * B + al * B1 - lambda * pe.d1;
        const double d2 = -(al1 * al1 + al * al2) * A - 2.0 * al * al1 * A1 -
                          0.5 * (1.0 + al * al) * A2 + al2 * B + 2.0 * al1 * B1 + al * B2 -
                          lambda * pe.d2;
        return {d1, d2};
    }
};

inline double golden_section_max(const ThetaObjective& obj, double lo, double hi) {
    constexpr double inv_phi = 0.6180339887498948482;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = obj.value(x1), f2 = obj.value(x2);
    for (int it = 0; it < 120 && hi - lo > 1e-12; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = obj.value(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = obj.value(x1);
        }
    }
    return 0.5 * (lo + hi);
}

// Damped Newton ascent of Q from theta_start, clamped to the safety box;
// golden-section sweep as a last resort. Never returns a theta with lower Q
// than the start.
inline double theta_step(double theta_start, const ThetaObjective& obj, const PemOptions& opts) {
    const double bound = opts.theta_bound;
    double theta = std::clamp(theta_start, -bound, bound);
    double q = obj.value(theta);
    bool solved = false;
    for (int it = 0; it < opts.newton_max_iter; ++it) {
        const auto [f, fp] = obj.derivs(theta);
        if (std::abs(f) <= opts.newton_tol) {
            solved = true;
            break;
        }
        double step;
        if (fp < 0.0 && std::isfinite(fp)) {
            step = -f / fp;
        } else {
            step = (f > 0.0 ? 1.0 : -1.0);  // not locally concave: plain uphill probe
        }
        if (!std::isfinite(step)) break;
        step = std::clamp(step, -2.0 * bound, 2.0 * bound);
        bool moved = false;
        for (int h = 0; h < 60; ++h) {
            const double cand = std::clamp(theta + step, -bound, bound);
            if (cand == theta) break;
            const double qc = obj.value(cand);
            if (qc >= q) {
                theta = cand;
                q = qc;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    if (!solved) {
        const double g = golden_section_max(obj, -bound, bound);
        const double qg = obj.value(g);
        if (qg > q) {
            theta = g;
            q = qg;
        }
    }
    return theta;
}

}  // namespace detail

// Conditional expectation of the penalised complete-data log-likelihood given
// the previous iterate (the EM surrogate Psi).
inline double e_objective(const Params& params, const Params& prev, std::span<const double> y,
                          double lambda, const PenaltySpec& spec, ShapeMap map = {}) {
    const std::size_t n = y.size();
    if (n == 0) throw std::invalid_argument("e_objective: empty sample");
    const double sigma = sigma_of(params);
    const double alpha = alpha_of(params, map);
    const double shift = delta_of(params, map) * sqrt_2_over_pi;
    const double psigma = sigma_of(prev);
    const double palpha = alpha_of(prev, map);
    const double pshift = delta_of(prev, map) * sqrt_2_over_pi;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double b = (y[i] - params.mu) / sigma + shift;
        const double t = palpha * ((y[i] - prev.mu) / psigma + pshift);
        const double m = mills_ratio(t);
        const double r = t - alpha * b;
        acc += 0.5 * b * b + 0.5 * (1.0 + (r - alpha * b) * m + r * r);
    }
    const double nd = static_cast<double>(n);
    return -nd * std::log(pi) - nd * params.eta - acc - lambda * penalty_eval(spec, params.theta).value;
}

// One M-substep each, exposed for testing; pem_fit shares the E-step vector
// across the three.
inline double m_step_mu(const Params& prev, std::span<const double> y, ShapeMap map = {}) {
    if (y.empty()) throw std::invalid_argument("m_step_mu: empty sample");
    return detail::mu_step(prev, y, detail::posterior_mean_w(prev, y, map), map);
}

inline double m_step_sigma(double mu_new, const Params& prev, std::span<const double> y,
                           ShapeMap map = {}) {
    if (y.empty()) throw std::invalid_argument("m_step_sigma: empty sample");
    return detail::sigma_step(mu_new, prev, y, detail::posterior_mean_w(prev, y, map), map);
}

inline double m_step_theta(double mu_new, double eta_new, const Params& prev,
                           std::span<const double> y, double lambda, const PenaltySpec& spec,
                           const PemOptions& opts = {}, ShapeMap map = {}) {
    if (y.empty()) throw std::invalid_argument("m_step_theta: empty sample");
    const auto c = detail::posterior_mean_w(prev, y, map);
    const auto obj =
        detail::ThetaObjective::make(mu_new, std::exp(eta_new), y, c, lambda, spec, map);
    return detail::theta_step(prev.theta, obj, opts);
}

// Penalised EM. Alternates the E-step with the mu -> sigma -> theta substeps,
// verifying after each full iteration that l_incp did not decrease: a
// decrease rejects the theta substep, and if the decrease persists the loop
// terminates unconverged. After the loop the closed-form symmetric fit
// (mean, sd, theta = 0) is taken instead whenever it scores at least as high,
// so exact-zero solutions are returned exactly.
inline FitResult pem_fit(std::span<const double> y, double lambda, const PenaltySpec& spec = {},
                         std::optional<Params> init = std::nullopt, const PemOptions& opts = {},
                         ShapeMap map = {}) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("pem_fit: lambda must be >= 0");
    const std::size_t n = y.size();
    Params p;
    if (init) {
        if (n < 2) throw insufficient_data_error("pem_fit: need at least 2 observations");
        p = *init;
        p.theta = std::clamp(p.theta, -opts.theta_bound, opts.theta_bound);
    } else {
        p = mom_init(y, map).params;
        p.theta = std::clamp(p.theta, -opts.theta_bound, opts.theta_bound);
    }

    std::vector<TraceRow> trace;
    double lp = penalized_loglik(p, y, lambda, spec, map);
    trace.push_back({0, p.mu, p.eta, p.theta, lp});
    if (!std::isfinite(lp)) throw numerical_error("pem_fit: non-finite objective at start", trace);

    bool converged = false;
    int iters = 0;
    for (int v = 1; v <= opts.max_iter; ++v) {
        const auto c = detail::posterior_mean_w(p, y, map);
        Params cand;
        cand.mu = detail::mu_step(p, y, c, map);
        const double sig = detail::sigma_step(cand.mu, p, y, c, map);
        cand.eta = std::log(sig);
        const auto obj = detail::ThetaObjective::make(cand.mu, sig, y, c, lambda, spec, map);
        cand.theta = detail::theta_step(p.theta, obj, opts);

        const double slack = 1e-12 * std::abs(lp);
        double lp1 = penalized_loglik(cand, y, lambda, spec, map);
        if (!(lp1 >= lp - slack)) {
            cand.theta = p.theta;  // reject the theta substep, keep the ascent pair
            lp1 = penalized_loglik(cand, y, lambda, spec, map);
            if (!std::isfinite(lp1))
                throw numerical_error("pem_fit: non-finite objective", trace);
            if (!(lp1 >= lp - slack)) break;
        }
        if (!std::isfinite(lp1)) throw numerical_error("pem_fit: non-finite objective", trace);

        p = cand;
        iters = v;
        trace.push_back({v, p.mu, p.eta, p.theta, lp1});
        if (std::abs(lp1 - lp) < opts.tol * (std::abs(lp) + 1e-300)) {
            lp = lp1;
            converged = true;
            break;
        }
        lp = lp1;
    }

    // Closed-form best point of the theta = 0 submodel.
    if (n >= 2) {
        double mean = 0.0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : y) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        if (var > 0.0) {
            const Params sym{mean, 0.5 * std::log(var), 0.0};
            const double lps = penalized_loglik(sym, y, lambda, spec, map);
            if (lps >= lp) {
                p = sym;
                lp = lps;
                trace.push_back({iters, p.mu, p.eta, p.theta, lp});
            }
        }
    }

    FitResult out;
    out.params = p;
    out.lambda = lambda;
    out.penalty = spec;
    out.loglik = loglik(p, y, map);
    out.penalized_loglik = lp;
    out.iterations = iters;
    out.converged = converged;
    out.hit_theta_bound = std::abs(p.theta) >= opts.theta_bound * (1.0 - 1e-9);
    out.trace = std::move(trace);
    return out;
}

inline FitResult mle_fit(std::span<const double> y, const PemOptions& opts = {},
                         std::optional<Params> init = std::nullopt, ShapeMap map = {}) {
    return pem_fit(y, 0.0, PenaltySpec{}, init, opts, map);
}

inline FitResult q_mple_fit(std::span<const double> y, const PemOptions& opts = {},
                            std::optional<Params> init = std::nullopt, ShapeMap map = {}) {
    return pem_fit(y, q_mple_lambda, PenaltySpec{PenaltyKind::log_cauchy, q_mple_c2}, init, opts,
                   map);
}

}  // namespace sncv
