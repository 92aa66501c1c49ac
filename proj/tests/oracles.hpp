#pragma once

// Test-only reference implementations, kept independent of the library code
// paths they are used to check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace oracle {

// Adaptive Simpson quadrature.
inline double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double m,
                                   double b, double fa, double fm, double fb, double whole,
                                   double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(a, m, fa, flm, fm);
    const double right = simpson(m, b, fm, frm, fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson_rec(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12, int depth = 50) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    return adaptive_simpson_rec(f, a, m, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, depth);
}

// Mills ratio phi(x)/Phi(x) via the Lentz continued fraction for the upper
// tail of the normal distribution (valid for x < 0 with t = -x):
//   Q(t) = phi(t) / (t + 1/(t + 2/(t + 3/(t + ...))))
inline double mills_continued_fraction(double x) {
    const double t = -x;  // expect x << 0
    double den = t + 60.0;  // start deep and roll the ladder down
    for (int k = 59; k >= 1; --k) den = t + static_cast<double>(k) / den;
    // Phi(x) = Q(t) = phi(t)/den  =>  phi(x)/Phi(x) = den
    return den;
}

// Integrates over [pts[0], pts.back()] piecewise; the breakpoints let the
// caller resolve boundary layers the top-level Simpson probes would miss.
inline double integrate_breakpoints(const std::function<double(double)>& f,
                                    const std::vector<double>& pts, double tol = 1e-15) {
    double acc = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) acc += integrate(f, pts[i - 1], pts[i], tol);
    return acc;
}

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double richardson_diff(const std::function<double(double)>& f, double x, double h) {
    const double d1 = central_diff(f, x, h);
    const double d2 = central_diff(f, x, 0.5 * h);
    return (4.0 * d2 - d1) / 3.0;
}

inline double second_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

inline double mean(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

inline double variance(std::span<const double> v) {
    const double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return acc / static_cast<double>(v.size());
}

inline double skewness(std::span<const double> v) {
    const double m = mean(v);
    double m2 = 0.0, m3 = 0.0;
    for (double x : v) {
        const double d = x - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= static_cast<double>(v.size());
    m3 /= static_cast<double>(v.size());
    return m3 / (m2 * std::sqrt(m2));
}

// Kolmogorov-Smirnov statistic against a supplied CDF.
inline double ks_statistic(std::vector<double> v, const std::function<double(double)>& cdf) {
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double c = cdf(v[i]);
        d = std::max(d, std::abs(c - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - c));
    }
    return d;
}

// Nelder-Mead on R^3, with a few shrinking restarts; reference maximiser for
// the fits (pass f = objective to MAXIMISE).
inline std::array<double, 3> nelder_mead_max(const std::function<double(std::array<double, 3>)>& f,
                                             std::array<double, 3> start, double scale = 0.5,
                                             int restarts = 4, int iters = 2000) {
    auto neg = [&](const std::array<double, 3>& x) { return -f(x); };
    std::array<double, 3> best = start;
    double step = scale;
    for (int r = 0; r < restarts; ++r) {
        std::array<std::array<double, 3>, 4> pts;
        std::array<double, 4> val;
        pts[0] = best;
        for (int i = 1; i < 4; ++i) {
            pts[i] = best;
            pts[i][i - 1] += step;
        }
        for (int i = 0; i < 4; ++i) val[i] = neg(pts[i]);
        for (int it = 0; it < iters; ++it) {
            std::array<int, 4> ord{0, 1, 2, 3};
            std::sort(ord.begin(), ord.end(), [&](int a, int b) { return val[a] < val[b]; });
            const int lo = ord[0], hi = ord[3], nh = ord[2];
            if (std::abs(val[hi] - val[lo]) < 1e-13 * (std::abs(val[lo]) + 1e-13)) break;
            std::array<double, 3> cen{};
            for (int i = 0; i < 4; ++i)
                if (i != hi)
                    for (int d = 0; d < 3; ++d) cen[d] += pts[i][d] / 3.0;
            auto blend = [&](double t) {
                std::array<double, 3> p;
                for (int d = 0; d < 3; ++d) p[d] = cen[d] + t * (pts[hi][d] - cen[d]);
                return p;
            };
            const auto refl = blend(-1.0);
            const double vr = neg(refl);
            if (vr < val[lo]) {
                const auto exp_ = blend(-2.0);
                const double ve = neg(exp_);
                if (ve < vr) {
                    pts[hi] = exp_;
                    val[hi] = ve;
                } else {
                    pts[hi] = refl;
                    val[hi] = vr;
                }
            } else if (vr < val[nh]) {
                pts[hi] = refl;
                val[hi] = vr;
            } else {
                const auto con = blend(0.5);
                const double vc = neg(con);
                if (vc < val[hi]) {
                    pts[hi] = con;
                    val[hi] = vc;
                } else {
                    for (int i = 0; i < 4; ++i) {
                        if (i == lo) continue;
                        for (int d = 0; d < 3; ++d) pts[i][d] = 0.5 * (pts[i][d] + pts[lo][d]);
                        val[i] = neg(pts[i]);
                    }
                }
            }
        }
        int lo = 0;
        for (int i = 1; i < 4; ++i)
            if (val[i] < val[lo]) lo = i;
        best = pts[lo];
        step *= 0.25;
    }
    return best;
}

}  // namespace oracle
