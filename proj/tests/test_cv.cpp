#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "sncv/cv.hpp"
#include "sncv/distribution.hpp"
#include "sncv/pem.hpp"

using namespace sncv;

TEST_CASE("make_folds") {
    SUBCASE("even split") {
        const FoldPlan plan = make_folds(10, 5, 3);
        std::vector<std::size_t> sizes(5, 0);
        for (std::size_t f : plan.assignment) ++sizes[f];
        for (std::size_t s : sizes) CHECK(s == 2);
    }

    SUBCASE("ragged split differs by at most one") {
        const FoldPlan plan = make_folds(11, 5, 3);
        std::vector<std::size_t> sizes(5, 0);
        for (std::size_t f : plan.assignment) ++sizes[f];
        std::sort(sizes.begin(), sizes.end());
        CHECK(sizes.front() == 2);
        CHECK(sizes.back() == 3);
        std::size_t total = 0;
        for (std::size_t s : sizes) total += s;
        CHECK(total == 11);
    }

    SUBCASE("deterministic and seed sensitive") {
        CHECK(make_folds(40, 7, 9).assignment == make_folds(40, 7, 9).assignment);
        CHECK(make_folds(40, 7, 9).assignment != make_folds(40, 7, 10).assignment);
    }

    SUBCASE("validation") {
        CHECK_THROWS_AS(make_folds(5, 6, 1), std::invalid_argument);
        CHECK_THROWS_AS(make_folds(5, 1, 1), std::invalid_argument);
    }
}

TEST_CASE("lambda_grid") {
    const auto tiny = lambda_grid(100, 0.05, 2);
    CHECK(tiny == std::vector<double>{0.0, 5.0});

    const auto grid = lambda_grid(500, 0.1, 40);
    CHECK(grid.size() == 40);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == 0.1 * 500.0);
    CHECK(grid[1] == doctest::Approx(0.1 * 500.0 * 1e-4).epsilon(1e-12));
    for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);

    CHECK_THROWS_AS(lambda_grid(100, 0.05, 1), std::invalid_argument);
    CHECK_THROWS_AS(lambda_grid(100, 0.0, 10), std::invalid_argument);
}

TEST_CASE("cv_average_error") {
    const auto y = sample(120, Params{0.0, 0.0, 0.0}, 51);
    const FoldPlan plan = make_folds(y.size(), 6, 4);

    SUBCASE("deterministic") {
        const double a = cv_average_error(y, plan, 1.0);
        const double b = cv_average_error(y, plan, 1.0);
        CHECK(a == b);
        CHECK(std::isfinite(a));
    }

    SUBCASE("matches an independent per-fold recomputation") {
        for (double lambda : {0.0, 0.5, 3.0}) {
            const double got = cv_average_error(y, plan, lambda);
            const Params warm = mom_init(y).params;
            double acc = 0.0;
            for (std::size_t j = 0; j < plan.K; ++j) {
                std::vector<double> train, test;
                for (std::size_t i = 0; i < y.size(); ++i)
                    (plan.assignment[i] == j ? test : train).push_back(y[i]);
                const FitResult fit = pem_fit(train, lambda, PenaltySpec{}, warm);
                acc += loglik(fit.params, test);
            }
            CHECK(got == doctest::Approx(-acc / 6.0).epsilon(1e-9));
        }
    }

    SUBCASE("invariant under fold relabeling") {
        FoldPlan relabeled = plan;
        for (auto& f : relabeled.assignment) f = (f + 2) % plan.K;
        CHECK(cv_average_error(y, plan, 0.7) == cv_average_error(y, relabeled, 0.7));
    }

    SUBCASE("plan mismatch") {
        CHECK_THROWS_AS(cv_average_error(std::vector<double>{1.0, 2.0}, plan, 0.0),
                        std::invalid_argument);
    }
}

TEST_CASE("flatness above the lambda_r threshold for a symmetric truth") {
    // the threshold is the positive part of a fold statistic and is zero for
    // roughly half of all symmetric samples; the flatness mechanism is only
    // operative when it genuinely dominates, so condition the sample on a
    // comfortably positive value
    const Params truth{0.0, 0.0, 0.0};
    const std::size_t K = 10;
    std::vector<double> y;
    double lr = 0.0;
    std::uint64_t seed = 2027;
    for (;; ++seed) {
        y = sample(1000, truth, seed);
        const FoldPlan plan = make_folds(y.size(), K, seed + 1);
        lr = lambda_r(y, plan, truth);
        if (lr >= 5.0 && lr < 50.0) break;
    }

    const CVTrace trace = select_lambda(y, K, 0.1, 30, PenaltySpec{}, seed + 1);
    double flat_value = 0.0;
    bool have = false;
    std::size_t above = 0;
    for (std::size_t i = 0; i < trace.grid.size(); ++i) {
        if (trace.grid[i] < lr) continue;
        ++above;
        if (!have) {
            flat_value = trace.scores[i];
            have = true;
        } else {
            CHECK(trace.scores[i] == doctest::Approx(flat_value).epsilon(1e-6));
        }
    }
    CHECK(above >= 3);

    // mechanism: every fold fit above the threshold is the symmetric one
    for (const auto& cell : trace.per_fold) {
        if (trace.grid[cell.lambda_index] >= lr) CHECK(cell.theta == 0.0);
    }
}

TEST_CASE("lambda_r") {
    SUBCASE("clamps at zero when every standardized square exceeds one") {
        const std::vector<double> y{2.0, -2.0, 3.0, -3.0};
        const FoldPlan plan = make_folds(4, 2, 1);
        CHECK(lambda_r(y, plan, Params{0.0, 0.0, 0.0}) == 0.0);
    }

    SUBCASE("two-point direct value") {
        const std::vector<double> y{0.0, 0.0};
        const FoldPlan plan = make_folds(2, 2, 1);
        CHECK(lambda_r(y, plan, Params{0.0, 0.0, 0.0}) ==
              doctest::Approx(1.0 / pi).epsilon(1e-12));
    }

    SUBCASE("matches brute force") {
        const auto y = sample(57, Params{0.3, 0.2, 0.5}, 8);
        const FoldPlan plan = make_folds(y.size(), 5, 21);
        const Params p0{0.3, 0.2, 0.0};
        double best = 0.0;
        for (std::size_t j = 0; j < plan.K; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                if (plan.assignment[i] == j) continue;
                const double z = (y[i] - 0.3) / std::exp(0.2);
                s += 1.0 - z * z;
            }
            best = std::max(best, s / pi);
        }
        CHECK(lambda_r(y, plan, p0) == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("select_lambda") {
    const auto y = sample(300, Params{0.0, 0.0, 0.0}, 606);

    SUBCASE("deterministic trace") {
        const CVTrace a = select_lambda(y, 5, 0.05, 12, PenaltySpec{}, 3);
        const CVTrace b = select_lambda(y, 5, 0.05, 12, PenaltySpec{}, 3);
        CHECK(a.grid == b.grid);
        CHECK(a.scores == b.scores);
        CHECK(a.lambda_cv == b.lambda_cv);
    }

    SUBCASE("lambda_cv is the smallest minimizer") {
        const CVTrace trace = select_lambda(y, 5, 0.05, 12, PenaltySpec{}, 3);
        CHECK(trace.lambda_cv == trace.grid[trace.lambda_cv_index]);
        const double best = trace.scores[trace.lambda_cv_index];
        for (std::size_t i = 0; i < trace.grid.size(); ++i) {
            if (!trace.valid[i]) continue;
            CHECK(trace.scores[i] >= best - 1e-15 * std::abs(best));
            if (trace.scores[i] == best) CHECK(i >= trace.lambda_cv_index);
        }
    }

    SUBCASE("tie-break lands on the first point of a flat tail") {
        // symmetric sample, grid far above lambda_r: the upper tail of the
        // curve is exactly flat and ties must resolve to the smallest lambda
        const auto ys = sample(400, Params{0.0, 0.0, 0.0}, 13);
        const CVTrace trace = select_lambda(ys, 8, 0.2, 25, PenaltySpec{}, 5);
        std::size_t first_min = trace.grid.size();
        double best = 1e300;
        for (std::size_t i = 0; i < trace.grid.size(); ++i) {
            if (trace.scores[i] < best) {
                best = trace.scores[i];
                first_min = i;
            }
        }
        CHECK(trace.lambda_cv_index == first_min);
    }

    SUBCASE("leave-one-out smoke") {
        const auto small = sample(24, Params{0.0, 0.0, 0.5}, 77);
        const CVTrace trace = select_lambda(small, small.size(), 0.05, 6, PenaltySpec{}, 2);
        CHECK(trace.grid.size() == 6);
        CHECK(std::isfinite(trace.lambda_cv));
    }
}

TEST_CASE("cv_fit equals pem_fit at the selected lambda") {
    const auto y = sample(150, Params{0.2, 0.1, std::asinh(2.0)}, 31);
    const auto [fit, trace] = cv_fit(y, 5, 0.05, 10, PenaltySpec{}, 17);
    const FitResult refit = pem_fit(y, trace.lambda_cv);
    CHECK(fit.params.mu == refit.params.mu);
    CHECK(fit.params.eta == refit.params.eta);
    CHECK(fit.params.theta == refit.params.theta);
    CHECK(fit.lambda == trace.lambda_cv);
}

TEST_CASE("cv loses little to the MLE at strong skew") {
    std::vector<double> err_cv, err_mle;
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
        const auto y = sample(1000, Params{0.0, 0.0, std::asinh(4.0)}, derive_seed(123, {rep}));
        const auto [fit, trace] = cv_fit(y, 10, 0.05, 20, PenaltySpec{}, derive_seed(321, {rep}));
        err_cv.push_back(std::abs(fit.alpha() - 4.0));
        err_mle.push_back(std::abs(mle_fit(y).alpha() - 4.0));
    }
    std::sort(err_cv.begin(), err_cv.end());
    std::sort(err_mle.begin(), err_mle.end());
    const double med_cv = 0.5 * (err_cv[9] + err_cv[10]);
    const double med_mle = 0.5 * (err_mle[9] + err_mle[10]);
    CHECK(med_cv <= med_mle + 0.25);
}
