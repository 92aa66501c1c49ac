#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "sncv/cv.hpp"
#include "sncv/kmeans.hpp"
#include "sncv/parallel.hpp"
#include "sncv/pem.hpp"
#include "sncv/rng.hpp"

namespace sncv {

struct parse_error : std::runtime_error {
    std::size_t line = 0;
    parse_error(const std::string& what, std::size_t l)
        : std::runtime_error("line " + std::to_string(l) + ": " + what), line(l) {}
};

struct Series {
    std::string name;
    std::vector<double> values;
    std::size_t dropped = 0;  // non-finite / missing cells removed
};

struct SeriesTable {
    std::vector<Series> entries;
};

struct LoadReport {
    std::size_t total_cells = 0;
    std::size_t used_cells = 0;
    std::size_t dropped_cells = 0;
    std::vector<std::pair<std::string, std::string>> excluded;  // name -> reason
};

enum class Layout { wide, long_form };

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(trim(cur));
    return out;
}

// missing/NA cells parse to NaN (dropped later); anything else non-numeric is
// a hard parse error.
inline double parse_cell(const std::string& cell, std::size_t line_no) {
    if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::string low;
    for (char c : cell) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (low == "na" || low == "nan" || low == "null") return std::numeric_limits<double>::quiet_NaN();
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &pos);
    } catch (...) {
        throw parse_error("cannot parse value '" + cell + "'", line_no);
    }
    if (pos != cell.size()) throw parse_error("cannot parse value '" + cell + "'", line_no);
    return v;
}

}  // namespace detail

// Reads a comma-separated table, header row required. Wide layout: one column
// per series. Long layout: (name, value) rows, series ordered by first
// appearance. Series with fewer than 4 finite values are excluded and
// reported; dropped-cell counts reconcile with the input.
inline SeriesTable load_series(std::istream& in, Layout layout, LoadReport* report = nullptr) {
    LoadReport local;
    LoadReport& rep = report ? *report : local;
    rep = LoadReport{};

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw parse_error("missing header row", 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = detail::split_csv_line(line);

    std::vector<Series> raw;
    if (layout == Layout::wide) {
        if (header.empty() || (header.size() == 1 && header[0].empty()))
            throw parse_error("empty header row", line_no);
        raw.resize(header.size());
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (header[c].empty()) throw parse_error("empty series name in header", line_no);
            raw[c].name = header[c];
        }
        for (std::size_t a = 0; a < header.size(); ++a)
            for (std::size_t b = a + 1; b < header.size(); ++b)
                if (header[a] == header[b])
                    throw parse_error("duplicate series name '" + header[a] + "'", line_no);
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (detail::trim(line).empty()) continue;
            const auto cells = detail::split_csv_line(line);
            if (cells.size() > header.size())
                throw parse_error("row has more cells than the header", line_no);
            for (std::size_t c = 0; c < header.size(); ++c) {
                ++rep.total_cells;
                const double v =
                    c < cells.size() ? detail::parse_cell(cells[c], line_no)
                                     : std::numeric_limits<double>::quiet_NaN();
                if (std::isfinite(v)) {
                    raw[c].values.push_back(v);
                    ++rep.used_cells;
                } else {
                    ++raw[c].dropped;
                    ++rep.dropped_cells;
                }
            }
        }
    } else {
        if (header.size() != 2)
            throw parse_error("long layout needs a (name,value) header", line_no);
        std::unordered_map<std::string, std::size_t> index;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (detail::trim(line).empty()) continue;
            const auto cells = detail::split_csv_line(line);
            if (cells.size() != 2) throw parse_error("long layout rows need 2 cells", line_no);
            if (cells[0].empty()) throw parse_error("empty series name", line_no);
            auto [it, inserted] = index.try_emplace(cells[0], raw.size());
            if (inserted) raw.push_back(Series{cells[0], {}, 0});
            Series& s = raw[it->second];
            ++rep.total_cells;
            const double v = detail::parse_cell(cells[1], line_no);
            if (std::isfinite(v)) {
                s.values.push_back(v);
                ++rep.used_cells;
            } else {
                ++s.dropped;
                ++rep.dropped_cells;
            }
        }
    }

    SeriesTable table;
    for (auto& s : raw) {
        if (s.values.size() >= 4) {
            table.entries.push_back(std::move(s));
        } else {
            rep.excluded.emplace_back(s.name, "fewer than 4 finite values (" +
                                                  std::to_string(s.values.size()) + ")");
        }
    }
    if (table.entries.empty()) throw std::invalid_argument("load_series: no usable series");
    return table;
}

enum class FitMethod { cv_mple, q_mple, mle };

inline const char* method_name(FitMethod m) {
    switch (m) {
        case FitMethod::cv_mple: return "cv_mple";
        case FitMethod::q_mple: return "q_mple";
        case FitMethod::mle: return "mle";
    }
    return "unknown";
}

struct FitAllOptions {
    std::size_t K = 10;
    double omega0 = 0.05;
    std::size_t grid_size = 40;
    PenaltySpec spec{};
    std::uint64_t seed = 1;
    PemOptions opts{};
};

struct SeriesFit {
    std::string name;
    bool ok = false;
    std::string error;
    double mu = std::numeric_limits<double>::quiet_NaN();
    double sigma = std::numeric_limits<double>::quiet_NaN();
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double theta = std::numeric_limits<double>::quiet_NaN();
    double lambda = std::numeric_limits<double>::quiet_NaN();  // lambda_cv for cv_mple
    bool converged = false;
};

// Fits every series independently. Per-series randomness is keyed by the
// series name, so fitting any subset reproduces the same rows.
inline std::vector<SeriesFit> fit_all(const SeriesTable& table, FitMethod method,
                                      const FitAllOptions& options = {}) {
    std::vector<SeriesFit> fits(table.entries.size());
    detail::parallel_for(table.entries.size(), [&](std::size_t i) {
        const Series& s = table.entries[i];
        SeriesFit& out = fits[i];
        out.name = s.name;
        try {
            if (method == FitMethod::cv_mple) {
                const std::uint64_t seed = derive_seed(options.seed, {fnv1a(s.name)});
                auto [fit, trace] = cv_fit(s.values, std::min(options.K, s.values.size()),
                                           options.omega0, options.grid_size, options.spec, seed,
                                           options.opts);
                out.mu = fit.params.mu;
                out.sigma = fit.sigma();
                out.alpha = fit.alpha();
                out.theta = fit.params.theta;
                out.lambda = trace.lambda_cv;
                out.converged = fit.converged;
            } else {
                const FitResult fit = method == FitMethod::q_mple
                                          ? q_mple_fit(s.values, options.opts)
                                          : mle_fit(s.values, options.opts);
                out.mu = fit.params.mu;
                out.sigma = fit.sigma();
                out.alpha = fit.alpha();
                out.theta = fit.params.theta;
                out.lambda = fit.lambda;
                out.converged = fit.converged;
            }
            out.ok = true;
        } catch (const std::exception& e) {
            out.ok = false;
            out.error = e.what();
        }
    });
    return fits;
}

inline std::size_t skew_count(const std::vector<SeriesFit>& fits, double threshold = 1.0) {
    std::size_t count = 0;
    for (const auto& f : fits)
        if (f.ok && std::abs(f.alpha) > threshold) ++count;
    return count;
}

// Clusters the fitted (mu, sigma, alpha) triples of the usable rows.
inline ClusterReport cluster_fits(const std::vector<SeriesFit>& fits, std::size_t k,
                                  std::uint64_t seed, std::size_t max_iter = 100) {
    std::vector<std::array<double, 3>> pts;
    for (const auto& f : fits)
        if (f.ok) pts.push_back({f.mu, f.sigma, f.alpha});
    return kmeans(pts, k, seed, max_iter);
}

}  // namespace sncv
