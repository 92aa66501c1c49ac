#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sncv/cv.hpp"
#include "sncv/format.hpp"
#include "sncv/parallel.hpp"
#include "sncv/pem.hpp"
#include "sncv/rng.hpp"

namespace sncv {

// Fixed value when lo == hi, otherwise U(lo, hi).
struct UniformLaw {
    double lo = 0.0;
    double hi = 0.0;
};

struct SimConfig {
    int setting = 1;
    std::vector<double> alphas;
    std::vector<std::size_t> sizes;
    std::size_t replicates = 20;
    std::size_t K = 10;
    double omega0 = 0.05;
    std::size_t grid_size = 40;
    std::uint64_t seed = 1;
    UniformLaw mu0_law{0.0, 0.0};
    UniformLaw sigma0_law{1.0, 1.0};
    PenaltySpec spec{};
    PemOptions opts{};
};

inline SimConfig setting1_config() {
    SimConfig cfg;
    cfg.setting = 1;
    cfg.alphas = {0.0, 2.0, 3.0, 4.0};
    cfg.sizes = {50, 100, 200, 300, 400, 500, 600, 1000};
    return cfg;
}

// Sizes follow the error-comparison figures (the n >= 500 regime); the
// text's smaller ladder ships as the "prose" preset.
inline SimConfig setting2_config() {
    SimConfig cfg;
    cfg.setting = 2;
    cfg.alphas = {0.0, 1.0, 2.0, 3.0, 5.0};
    cfg.sizes = {300, 400, 500, 600, 700, 1000};
    cfg.mu0_law = {-2.0, 2.0};
    cfg.sigma0_law = {0.5, 1.5};
    return cfg;
}

inline SimConfig setting2_prose_config() {
    SimConfig cfg = setting2_config();
    cfg.sizes = {50, 100, 200, 400};
    return cfg;
}

struct SimRecord {
    int setting = 0;
    double alpha0 = 0.0;
    std::size_t n = 0;
    std::size_t replicate = 0;
    std::string method;  // cv_mple | q_mple | mle
    double mu0 = 0.0;
    double sigma0 = 1.0;
    bool ok = false;
    double mu_hat = std::numeric_limits<double>::quiet_NaN();
    double sigma_hat = std::numeric_limits<double>::quiet_NaN();
    double alpha_hat = std::numeric_limits<double>::quiet_NaN();
    double theta_hat = std::numeric_limits<double>::quiet_NaN();
    double lambda = std::numeric_limits<double>::quiet_NaN();  // lambda_cv for cv_mple
    std::size_t iterations = 0;
    bool converged = false;
    bool hit_theta_bound = false;
    double err_mu = std::numeric_limits<double>::quiet_NaN();
    double err_sigma = std::numeric_limits<double>::quiet_NaN();
    double err_alpha = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline void validate_config(const SimConfig& cfg) {
    if (cfg.alphas.empty() || cfg.sizes.empty())
        throw std::invalid_argument("sim: alphas and sizes must be nonempty");
    if (cfg.replicates < 2) throw std::invalid_argument("sim: replicates must be >= 2");
    if (cfg.mu0_law.lo > cfg.mu0_law.hi || cfg.sigma0_law.lo > cfg.sigma0_law.hi)
        throw std::invalid_argument("sim: law bounds must satisfy lo <= hi");
    if (!(cfg.sigma0_law.lo > 0.0)) throw std::invalid_argument("sim: sigma0 law must be positive");
}

inline double draw_law(const UniformLaw& law, Rng& rng) {
    return law.lo == law.hi ? law.lo : rng.uniform(law.lo, law.hi);
}

inline void fill_from_fit(SimRecord& rec, const FitResult& fit) {
    rec.ok = true;
    rec.mu_hat = fit.params.mu;
    rec.sigma_hat = fit.sigma();
    rec.alpha_hat = fit.alpha();
    rec.theta_hat = fit.params.theta;
    rec.iterations = static_cast<std::size_t>(fit.iterations);
    rec.converged = fit.converged;
    rec.hit_theta_bound = fit.hit_theta_bound;
    rec.err_mu = rec.mu_hat - rec.mu0;
    rec.err_sigma = rec.sigma_hat - rec.sigma0;
    rec.err_alpha = rec.alpha_hat - rec.alpha0;
}

}  // namespace detail

// Setting 1: fixed (mu0, sigma0), cross-validated fits only; the object of
// interest is lambda_cv across (alpha0, n).
inline std::vector<SimRecord> run_setting1(const SimConfig& cfg) {
    detail::validate_config(cfg);
    const std::size_t cells = cfg.alphas.size() * cfg.sizes.size() * cfg.replicates;
    std::vector<SimRecord> records(cells);
    detail::parallel_for(cells, [&](std::size_t idx) {
        const std::size_t rep = idx % cfg.replicates;
        const std::size_t ni = (idx / cfg.replicates) % cfg.sizes.size();
        const std::size_t ai = idx / (cfg.replicates * cfg.sizes.size());
        SimRecord& rec = records[idx];
        rec.setting = cfg.setting;
        rec.alpha0 = cfg.alphas[ai];
        rec.n = cfg.sizes[ni];
        rec.replicate = rep;
        rec.method = "cv_mple";
        const std::uint64_t base = derive_seed(cfg.seed, {1u, ai, ni, rep});
        Rng prng(derive_seed(base, {0}));
        rec.mu0 = detail::draw_law(cfg.mu0_law, prng);
        rec.sigma0 = detail::draw_law(cfg.sigma0_law, prng);
        const Params truth{rec.mu0, std::log(rec.sigma0), std::asinh(rec.alpha0)};
        const auto y = sample(rec.n, truth, derive_seed(base, {1}));
        try {
            auto [fit, trace] =
                cv_fit(y, cfg.K, cfg.omega0, cfg.grid_size, cfg.spec, derive_seed(base, {2}), cfg.opts);
            detail::fill_from_fit(rec, fit);
            rec.lambda = trace.lambda_cv;
        } catch (...) {
            rec.ok = false;
        }
    });
    return records;
}

// Setting 2: (mu0, sigma0) drawn per replicate; each replicate is fitted by
// all three estimators.
inline std::vector<SimRecord> run_setting2(const SimConfig& cfg) {
    detail::validate_config(cfg);
    const std::size_t cells = cfg.alphas.size() * cfg.sizes.size() * cfg.replicates;
    std::vector<SimRecord> records(cells * 3);
    detail::parallel_for(cells, [&](std::size_t idx) {
        const std::size_t rep = idx % cfg.replicates;
        const std::size_t ni = (idx / cfg.replicates) % cfg.sizes.size();
        const std::size_t ai = idx / (cfg.replicates * cfg.sizes.size());
        const std::uint64_t base = derive_seed(cfg.seed, {2u, ai, ni, rep});
        Rng prng(derive_seed(base, {0}));
        const double mu0 = detail::draw_law(cfg.mu0_law, prng);
        const double sigma0 = detail::draw_law(cfg.sigma0_law, prng);
        const Params truth{mu0, std::log(sigma0), std::asinh(cfg.alphas[ai])};
        const auto y = sample(cfg.sizes[ni], truth, derive_seed(base, {1}));

        const char* methods[3] = {"cv_mple", "q_mple", "mle"};
        for (int m = 0; m < 3; ++m) {
            SimRecord& rec = records[idx * 3 + m];
            rec.setting = cfg.setting;
            rec.alpha0 = cfg.alphas[ai];
            rec.n = cfg.sizes[ni];
            rec.replicate = rep;
            rec.method = methods[m];
            rec.mu0 = mu0;
            rec.sigma0 = sigma0;
            try {
                if (m == 0) {
                    auto [fit, trace] = cv_fit(y, cfg.K, cfg.omega0, cfg.grid_size, cfg.spec,
                                               derive_seed(base, {2}), cfg.opts);
                    detail::fill_from_fit(rec, fit);
                    rec.lambda = trace.lambda_cv;
                } else if (m == 1) {
                    const FitResult fit = q_mple_fit(y, cfg.opts);
                    detail::fill_from_fit(rec, fit);
                    rec.lambda = fit.lambda;
                } else {
                    const FitResult fit = mle_fit(y, cfg.opts);
                    detail::fill_from_fit(rec, fit);
                    rec.lambda = 0.0;
                }
            } catch (...) {
                rec.ok = false;
            }
        }
    });
    return records;
}

struct SummaryRow {
    int setting = 0;
    double alpha0 = 0.0;
    std::size_t n = 0;
    std::string method;
    std::size_t replicates = 0;
    std::size_t failures = 0;
    double med_err_mu = 0.0, med_err_sigma = 0.0, med_err_alpha = 0.0;
    double se_err_mu = 0.0, se_err_sigma = 0.0, se_err_alpha = 0.0;
    bool degenerate_se = false;  // fewer than two usable replicates
    double mean_lambda_over_n = std::numeric_limits<double>::quiet_NaN();
    double var_lambda_over_n = std::numeric_limits<double>::quiet_NaN();
    double mean_lambda_over_sqrt_n = std::numeric_limits<double>::quiet_NaN();
    double var_lambda_over_sqrt_n = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

inline double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

inline double mean_of(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    return mean / static_cast<double>(v.size());
}

inline double var_of(const std::vector<double>& v) {
    const double s = sd_of(v);
    return s * s;
}

}  // namespace detail

// Per (setting, alpha0, n, method): median bias and the standard deviation of
// the errors, plus the lambda_cv scaling statistics for the cv rows.
inline std::vector<SummaryRow> summarize(const std::vector<SimRecord>& records) {
    if (records.empty()) throw std::invalid_argument("summarize: no records");
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto key_less = [&](std::size_t a, std::size_t b) {
        const SimRecord &ra = records[a], &rb = records[b];
        if (ra.setting != rb.setting) return ra.setting < rb.setting;
        if (ra.alpha0 != rb.alpha0) return ra.alpha0 < rb.alpha0;
        if (ra.n != rb.n) return ra.n < rb.n;
        return ra.method < rb.method;
    };
    std::stable_sort(order.begin(), order.end(), key_less);

    std::vector<SummaryRow> rows;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && !key_less(order[i], order[j]) && !key_less(order[j], order[i])) ++j;
        const SimRecord& head = records[order[i]];
        SummaryRow row;
        row.setting = head.setting;
        row.alpha0 = head.alpha0;
        row.n = head.n;
        row.method = head.method;
        std::vector<double> em, es, ea, ln, lsq;
        for (std::size_t k = i; k < j; ++k) {
            const SimRecord& r = records[order[k]];
            ++row.replicates;
            if (!r.ok) {
                ++row.failures;
                continue;
            }
            em.push_back(r.err_mu);
            es.push_back(r.err_sigma);
            ea.push_back(r.err_alpha);
            if (r.method == "cv_mple" && !std::isnan(r.lambda)) {
                ln.push_back(r.lambda / static_cast<double>(r.n));
                lsq.push_back(r.lambda / std::sqrt(static_cast<double>(r.n)));
            }
        }
        if (!em.empty()) {
            row.med_err_mu = detail::median_of(em);
            row.med_err_sigma = detail::median_of(es);
            row.med_err_alpha = detail::median_of(ea);
            row.se_err_mu = detail::sd_of(em);
            row.se_err_sigma = detail::sd_of(es);
            row.se_err_alpha = detail::sd_of(ea);
            row.degenerate_se = em.size() < 2;
        } else {
            row.degenerate_se = true;
        }
        if (!ln.empty()) {
            row.mean_lambda_over_n = detail::mean_of(ln);
            row.var_lambda_over_n = detail::var_of(ln);
            row.mean_lambda_over_sqrt_n = detail::mean_of(lsq);
            row.var_lambda_over_sqrt_n = detail::var_of(lsq);
        }
        rows.push_back(std::move(row));
        i = j;
    }
    return rows;
}

inline constexpr const char* records_schema = "sncv-records-v1";
inline constexpr const char* records_header =
    "setting,alpha0,n,replicate,method,mu0,sigma0,ok,mu_hat,sigma_hat,alpha_hat,theta_hat,"
    "lambda,iterations,converged,hit_theta_bound,err_mu,err_sigma,err_alpha";

inline constexpr const char* summary_schema = "sncv-summary-v1";
inline constexpr const char* summary_header =
    "setting,alpha0,n,method,replicates,failures,med_err_mu,med_err_sigma,med_err_alpha,"
    "se_err_mu,se_err_sigma,se_err_alpha,degenerate_se,mean_lambda_over_n,var_lambda_over_n,"
    "mean_lambda_over_sqrt_n,var_lambda_over_sqrt_n";

inline void write_records_csv(const std::vector<SimRecord>& records, std::ostream& os) {
    os << "# " << records_schema << "\n" << records_header << "\n";
    for (const SimRecord& r : records) {
        os << r.setting << ',' << format_double(r.alpha0) << ',' << r.n << ',' << r.replicate << ','
           << r.method << ',' << format_double(r.mu0) << ',' << format_double(r.sigma0) << ','
           << (r.ok ? 1 : 0) << ',' << format_double(r.mu_hat) << ',' << format_double(r.sigma_hat)
           << ',' << format_double(r.alpha_hat) << ',' << format_double(r.theta_hat) << ','
           << format_double(r.lambda) << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ','
           << (r.hit_theta_bound ? 1 : 0) << ',' << format_double(r.err_mu) << ','
           << format_double(r.err_sigma) << ',' << format_double(r.err_alpha) << '\n';
    }
}

inline void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& os) {
    os << "# " << summary_schema << "\n" << summary_header << "\n";
    for (const SummaryRow& r : rows) {
        os << r.setting << ',' << format_double(r.alpha0) << ',' << r.n << ',' << r.method << ','
           << r.replicates << ',' << r.failures << ',' << format_double(r.med_err_mu) << ','
           << format_double(r.med_err_sigma) << ',' << format_double(r.med_err_alpha) << ','
           << format_double(r.se_err_mu) << ',' << format_double(r.se_err_sigma) << ','
           << format_double(r.se_err_alpha) << ',' << (r.degenerate_se ? 1 : 0) << ','
           << format_double(r.mean_lambda_over_n) << ',' << format_double(r.var_lambda_over_n)
           << ',' << format_double(r.mean_lambda_over_sqrt_n) << ','
           << format_double(r.var_lambda_over_sqrt_n) << '\n';
    }
}

}  // namespace sncv
