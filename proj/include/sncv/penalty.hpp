#pragma once

#include <cmath>
#include <stdexcept>

namespace sncv {

enum class PenaltyKind { hyperbolic, ridge, log_cauchy };

// Shape penalty pen(theta): nonnegative, even, zero and flat at 0, divergent
// at +-infinity. log_cauchy carries the extra constant c2 (the bias-correction
// default from the literature).
struct PenaltySpec {
    PenaltyKind kind = PenaltyKind::hyperbolic;
    double c2 = 0.856250;
};

struct PenaltyEval {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

inline PenaltyEval penalty_eval(const PenaltySpec& spec, double theta) {
    switch (spec.kind) {
        case PenaltyKind::hyperbolic: {
            const double s = std::sinh(theta);
            return {s * s, std::sinh(2.0 * theta), 2.0 * std::cosh(2.0 * theta)};
        }
        case PenaltyKind::ridge:
            return {theta * theta, 2.0 * theta, 2.0};
        case PenaltyKind::log_cauchy: {
            if (!(spec.c2 > 0.0)) throw std::invalid_argument("penalty_eval: c2 must be positive");
            const double s = std::sinh(theta);
            const double den = 1.0 + spec.c2 * s * s;
            const double d1 = spec.c2 * std::sinh(2.0 * theta) / den;
            const double d2 =
                (2.0 * spec.c2 * std::cosh(2.0 * theta) * den -
                 spec.c2 * spec.c2 * std::sinh(2.0 * theta) * std::sinh(2.0 * theta)) /
                (den * den);
            return {std::log1p(spec.c2 * s * s), d1, d2};
        }
    }
    throw std::invalid_argument("penalty_eval: unknown penalty kind");
}

inline const char* penalty_name(PenaltyKind kind) {
    switch (kind) {
        case PenaltyKind::hyperbolic: return "hyperbolic";
        case PenaltyKind::ridge: return "ridge";
        case PenaltyKind::log_cauchy: return "log_cauchy";
    }
    return "unknown";
}

// Numeric check of the admissibility condition: value and slope vanish at 0,
// curvature at 0 is reported as-is (2 for hyperbolic/ridge, 2*c2 for
// log_cauchy), growth probed on a coarse ladder.
struct C1Report {
    double pen_at_zero = 0.0;
    double d1_at_zero = 0.0;
    double d2_at_zero = 0.0;
    bool grows = false;
};

inline C1Report check_c1(const PenaltySpec& spec) {
    const PenaltyEval at0 = penalty_eval(spec, 0.0);
    const double p1 = penalty_eval(spec, 1.0).value;
    const double p10 = penalty_eval(spec, 10.0).value;
    const double p20 = penalty_eval(spec, 20.0).value;
    return {at0.value, at0.d1, at0.d2, p20 > p10 && p10 > p1};
}

}  // namespace sncv
