#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sncv/estimation.hpp"
#include "sncv/parallel.hpp"
#include "sncv/pem.hpp"
#include "sncv/rng.hpp"

namespace sncv {

// K-fold partition of [0, n): seeded shuffle, then round-robin, so fold sizes
// differ by at most one and the plan is reproducible.
struct FoldPlan {
    std::size_t n = 0;
    std::size_t K = 0;
    std::vector<std::size_t> assignment;  // index -> fold
    std::uint64_t seed = 0;
};

inline FoldPlan make_folds(std::size_t n, std::size_t K, std::uint64_t seed) {
    if (K < 2 || K > n) throw std::invalid_argument("make_folds: need 2 <= K <= n");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = rng.below(i + 1);
        std::swap(order[i], order[j]);
    }
    FoldPlan plan{n, K, std::vector<std::size_t>(n), seed};
    for (std::size_t pos = 0; pos < n; ++pos) plan.assignment[order[pos]] = pos % K;
    return plan;
}

struct FoldFitSummary {
    std::size_t lambda_index = 0;
    std::size_t fold = 0;
    double mu = 0.0;
    double eta = 0.0;
    double theta = 0.0;
    double heldout_loglik = 0.0;
    bool converged = false;
};

struct CVTrace {
    std::vector<double> grid;
    std::vector<double> scores;  // CV_a per grid point; NaN where invalid
    std::vector<bool> valid;
    double lambda_cv = 0.0;
    std::size_t lambda_cv_index = 0;
    double omega0 = 0.0;
    std::size_t K = 0;
    std::uint64_t seed = 0;
    std::vector<FoldFitSummary> per_fold;  // row-major: lambda index x fold
};

namespace detail {

struct FoldData {
    std::vector<double> train;
    std::vector<double> test;
};

inline std::vector<FoldData> split_folds(std::span<const double> y, const FoldPlan& plan) {
    if (plan.n != y.size() || plan.assignment.size() != y.size())
        throw std::invalid_argument("fold plan does not match the sample");
    std::vector<FoldData> folds(plan.K);
    for (std::size_t i = 0; i < y.size(); ++i) {
        for (std::size_t j = 0; j < plan.K; ++j) {
            (plan.assignment[i] == j ? folds[j].test : folds[j].train).push_back(y[i]);
        }
    }
    for (std::size_t j = 0; j < plan.K; ++j) {
        if (folds[j].test.empty() || folds[j].train.empty())
            throw std::invalid_argument("fold plan has an empty fold");
    }
    return folds;
}

inline FoldFitSummary fit_one_fold(const FoldData& fold, std::size_t lambda_index, std::size_t j,
                                   double lambda, const PenaltySpec& spec, const Params& warm,
                                   const PemOptions& opts, ShapeMap map) {
    const FitResult fit = pem_fit(fold.train, lambda, spec, warm, opts, map);
    return {lambda_index, j,       fit.params.mu,
            fit.params.eta,        fit.params.theta,
            loglik(fit.params, fold.test, map), fit.converged};
}

}  // namespace detail

// CV_a(lambda): average over folds of the held-out negative log-likelihood of
// the fold-trained penalised fit. Fold fits warm-start from the full-sample
// moment initialiser.
inline double cv_average_error(std::span<const double> y, const FoldPlan& plan, double lambda,
                               const PenaltySpec& spec = {}, const PemOptions& opts = {},
                               ShapeMap map = {}) {
    const auto folds = detail::split_folds(y, plan);
    const Params warm = mom_init(y, map).params;
    std::vector<double> held(plan.K);
    detail::parallel_for(plan.K, [&](std::size_t j) {
        try {
            held[j] = detail::fit_one_fold(folds[j], 0, j, lambda, spec, warm, opts, map)
                          .heldout_loglik;
        } catch (const numerical_error& e) {
            throw numerical_error("fold " + std::to_string(j) + ": " + e.what(), e.trace);
        }
    });
    // canonical summation order keeps the value invariant to fold relabeling
    std::sort(held.begin(), held.end());
    double acc = 0.0;
    for (double h : held) acc += h;
    return -acc / static_cast<double>(plan.K);
}

// {0} followed by a geometric ladder from omega0*n*1e-4 up to omega0*n.
inline std::vector<double> lambda_grid(std::size_t n, double omega0, std::size_t size) {
    if (size < 2) throw std::invalid_argument("lambda_grid: size must be >= 2");
    if (!(omega0 > 0.0) || n == 0) throw std::invalid_argument("lambda_grid: need omega0 > 0, n >= 1");
    const double top = omega0 * static_cast<double>(n);
    const std::size_t m = size - 1;
    std::vector<double> grid;
    grid.reserve(size);
    grid.push_back(0.0);
    if (m == 1) {
        grid.push_back(top);
        return grid;
    }
    for (std::size_t k = 0; k < m; ++k) {
        const double frac = static_cast<double>(m - 1 - k) / static_cast<double>(m - 1);
        grid.push_back(top * std::pow(1e-4, frac));
    }
    return grid;
}

// Evaluates CV_a over the grid and picks the smallest minimiser. A fold-fit
// failure invalidates that grid point only.
inline CVTrace select_lambda(std::span<const double> y, std::size_t K, double omega0,
                             std::size_t grid_size, const PenaltySpec& spec, std::uint64_t seed,
                             const PemOptions& opts = {}, ShapeMap map = {}) {
    const FoldPlan plan = make_folds(y.size(), K, seed);
    const auto folds = detail::split_folds(y, plan);
    const Params warm = mom_init(y, map).params;
    CVTrace trace;
    trace.grid = lambda_grid(y.size(), omega0, grid_size);
    trace.omega0 = omega0;
    trace.K = K;
    trace.seed = seed;

    const std::size_t L = trace.grid.size();
    std::vector<FoldFitSummary> cells(L * K);
    std::vector<unsigned char> failed(L * K, 0);
    detail::parallel_for(L * K, [&](std::size_t idx) {
        const std::size_t li = idx / K, j = idx % K;
        try {
            cells[idx] = detail::fit_one_fold(folds[j], li, j, trace.grid[li], spec, warm, opts, map);
        } catch (...) {
            failed[idx] = 1;
        }
    });

    trace.scores.assign(L, std::numeric_limits<double>::quiet_NaN());
    trace.valid.assign(L, true);
    std::vector<double> held(K);
    for (std::size_t li = 0; li < L; ++li) {
        for (std::size_t j = 0; j < K; ++j) {
            if (failed[li * K + j]) {
                trace.valid[li] = false;
                break;
            }
            held[j] = cells[li * K + j].heldout_loglik;
        }
        if (trace.valid[li]) {
            std::sort(held.begin(), held.end());
            double acc = 0.0;
            for (double h : held) acc += h;
            trace.scores[li] = -acc / static_cast<double>(K);
            for (std::size_t j = 0; j < K; ++j) trace.per_fold.push_back(cells[li * K + j]);
        }
    }

    bool found = false;
    for (std::size_t li = 0; li < L; ++li) {
        if (!trace.valid[li]) continue;
        if (!found || trace.scores[li] < trace.scores[trace.lambda_cv_index]) {
            trace.lambda_cv_index = li;
            found = true;
        }
    }
    if (!found) throw std::runtime_error("select_lambda: every grid point failed");
    trace.lambda_cv = trace.grid[trace.lambda_cv_index];
    return trace;
}

// Cross-validated MPLE: pick lambda_cv, refit on the full sample.
inline std::pair<FitResult, CVTrace> cv_fit(std::span<const double> y, std::size_t K, double omega0,
                                            std::size_t grid_size, const PenaltySpec& spec,
                                            std::uint64_t seed, const PemOptions& opts = {},
                                            ShapeMap map = {}) {
    CVTrace trace = select_lambda(y, K, omega0, grid_size, spec, seed, opts, map);
    FitResult fit = pem_fit(y, trace.lambda_cv, spec, std::nullopt, opts, map);
    return {std::move(fit), std::move(trace)};
}

// Flatness threshold of the CV curve for a symmetric truth: the largest
// training-set curvature statistic over folds, clipped at zero. Diagnostic
// only; params0 supplies the true location and scale.
inline double lambda_r(std::span<const double> y, const FoldPlan& plan, const Params& params0) {
    if (plan.n != y.size()) throw std::invalid_argument("lambda_r: plan does not match sample");
    const double sigma0 = sigma_of(params0);
    double best = 0.0;
    for (std::size_t j = 0; j < plan.K; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (plan.assignment[i] == j) continue;
            const double z = (y[i] - params0.mu) / sigma0;
            s += 1.0 - z * z;
        }
        best = std::max(best, s / pi);
    }
    return best;
}

}  // namespace sncv
