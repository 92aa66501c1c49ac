// Command-line front end: fitting, sampling, simulation presets, and the
// series clustering pipeline. Machine-first output (CSV / key-value text),
// deterministic under fixed seeds.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sncv/format.hpp"
#include "sncv/sncv.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_input = 2;
constexpr int exit_numerical = 3;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("SNCV_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0') return static_cast<std::uint64_t>(v);
    }
    return 1;
}

sncv::PenaltyKind parse_penalty(const std::string& name) {
    if (name == "hyperbolic") return sncv::PenaltyKind::hyperbolic;
    if (name == "ridge") return sncv::PenaltyKind::ridge;
    if (name == "log_cauchy") return sncv::PenaltyKind::log_cauchy;
    throw CLI::ValidationError("--penalty", "unknown penalty '" + name + "'");
}

std::vector<double> read_values(const std::string& path) {
    std::istream* in = &std::cin;
    std::ifstream file;
    if (path != "-") {
        file.open(path);
        if (!file) throw std::invalid_argument("cannot open input '" + path + "'");
        in = &file;
    }
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(*in, line)) {
        ++line_no;
        if (!line.empty() && line[0] == '#') continue;
        for (char& c : line)
            if (c == ',') c = ' ';
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(tok, &pos);
                if (pos != tok.size()) throw std::invalid_argument(tok);
                if (std::isfinite(v)) values.push_back(v);
            } catch (...) {
                throw std::invalid_argument("line " + std::to_string(line_no) +
                                            ": cannot parse value '" + tok + "'");
            }
        }
    }
    return values;
}

struct OutputFile {
    std::ostream* os = &std::cout;
    std::ofstream file;
    explicit OutputFile(const std::string& path) {
        if (path != "-") {
            file.open(path);
            if (!file) throw std::invalid_argument("cannot open output '" + path + "'");
            os = &file;
        }
    }
};

struct FitFlags {
    std::string method = "cv_mple";
    std::string penalty = "hyperbolic";
    double c2 = sncv::q_mple_c2;
    std::size_t K = 10;
    double omega0 = 0.05;
    std::size_t grid_size = 40;
    double tol = 1e-8;
    int max_iter = 500;
    double theta_bound = 10.0;
};

void add_fit_flags(CLI::App* cmd, FitFlags& f) {
    cmd->add_option("--method", f.method, "Estimator: cv_mple, q_mple or mle")
        ->check(CLI::IsMember({"cv_mple", "q_mple", "mle"}))
        ->capture_default_str();
    cmd->add_option("--penalty", f.penalty, "Penalty for cv_mple: hyperbolic, ridge or log_cauchy")
        ->check(CLI::IsMember({"hyperbolic", "ridge", "log_cauchy"}))
        ->capture_default_str();
    cmd->add_option("--c2", f.c2, "log_cauchy constant")->capture_default_str();
    cmd->add_option("--K", f.K, "Number of cross-validation folds")->capture_default_str();
    cmd->add_option("--omega0", f.omega0, "Upper bound of lambda/n for the grid")
        ->capture_default_str();
    cmd->add_option("--grid-size", f.grid_size, "Number of lambda grid points")
        ->capture_default_str();
    cmd->add_option("--tol", f.tol, "EM stopping tolerance")->capture_default_str();
    cmd->add_option("--max-iter", f.max_iter, "EM iteration cap")->capture_default_str();
    cmd->add_option("--theta-bound", f.theta_bound, "Safety bound on |theta|")
        ->capture_default_str();
}

void echo_kv(std::ostream& os, const std::string& prefix, const std::string& key,
             const std::string& value) {
    os << prefix << key << ": " << value << "\n";
}

int run_fit(const std::string& input, const std::string& output, const FitFlags& f,
            std::uint64_t seed, const std::string& format) {
    const auto y = read_values(input);
    if (y.size() < 4) {
        std::cerr << "fit: need at least 4 finite values, got " << y.size() << "\n";
        return exit_input;
    }
    sncv::PemOptions opts;
    opts.tol = f.tol;
    opts.max_iter = f.max_iter;
    opts.theta_bound = f.theta_bound;

    sncv::FitResult fit;
    std::optional<sncv::CVTrace> trace;
    const std::size_t k_eff = std::min<std::size_t>(f.K, y.size());
    if (f.method == "mle") {
        fit = sncv::mle_fit(y, opts);
    } else if (f.method == "q_mple") {
        fit = sncv::q_mple_fit(y, opts);
    } else {
        const sncv::PenaltySpec spec{parse_penalty(f.penalty), f.c2};
        auto [ft, tr] = sncv::cv_fit(y, k_eff, f.omega0, f.grid_size, spec, seed, opts);
        fit = std::move(ft);
        trace = std::move(tr);
    }

    OutputFile out(output);
    std::ostream& os = *out.os;
    const std::string hp = format == "kv" ? "" : "# ";
    os << hp << "sncv-fit-v1\n";
    echo_kv(os, hp, "method", f.method);
    echo_kv(os, hp, "penalty", f.method == "q_mple"
                                   ? "log_cauchy"
                                   : (f.method == "mle" ? "none" : f.penalty));
    echo_kv(os, hp, "lambda", sncv::format_double(fit.lambda));
    echo_kv(os, hp, "c2", sncv::format_double(f.method == "q_mple" ? sncv::q_mple_c2 : f.c2));
    if (f.method == "cv_mple") {
        echo_kv(os, hp, "K", std::to_string(k_eff));
        echo_kv(os, hp, "omega0", sncv::format_double(f.omega0));
        echo_kv(os, hp, "grid_size", std::to_string(f.grid_size));
        echo_kv(os, hp, "seed", std::to_string(seed));
    }
    echo_kv(os, hp, "tol", sncv::format_double(opts.tol));
    echo_kv(os, hp, "max_iter", std::to_string(opts.max_iter));
    echo_kv(os, hp, "theta_bound", sncv::format_double(opts.theta_bound));
    echo_kv(os, hp, "n", std::to_string(y.size()));

    if (format == "kv") {
        echo_kv(os, "", "mu", sncv::format_double(fit.params.mu));
        echo_kv(os, "", "sigma", sncv::format_double(fit.sigma()));
        echo_kv(os, "", "alpha", sncv::format_double(fit.alpha()));
        echo_kv(os, "", "theta", sncv::format_double(fit.params.theta));
        echo_kv(os, "", "loglik", sncv::format_double(fit.loglik));
        echo_kv(os, "", "penalized_loglik", sncv::format_double(fit.penalized_loglik));
        echo_kv(os, "", "iterations", std::to_string(fit.iterations));
        echo_kv(os, "", "converged", fit.converged ? "1" : "0");
        echo_kv(os, "", "hit_theta_bound", fit.hit_theta_bound ? "1" : "0");
    } else {
        os << "mu,sigma,alpha,theta,lambda,loglik,penalized_loglik,iterations,converged,"
              "hit_theta_bound\n";
        os << sncv::format_double(fit.params.mu) << ',' << sncv::format_double(fit.sigma()) << ','
           << sncv::format_double(fit.alpha()) << ',' << sncv::format_double(fit.params.theta)
           << ',' << sncv::format_double(fit.lambda) << ',' << sncv::format_double(fit.loglik)
           << ',' << sncv::format_double(fit.penalized_loglik) << ',' << fit.iterations << ','
           << (fit.converged ? 1 : 0) << ',' << (fit.hit_theta_bound ? 1 : 0) << '\n';
    }
    if (trace) {
        os << hp << "cv-trace\n";
        os << "lambda,cv_a,valid\n";
        for (std::size_t i = 0; i < trace->grid.size(); ++i) {
            os << sncv::format_double(trace->grid[i]) << ','
               << sncv::format_double(trace->scores[i]) << ',' << (trace->valid[i] ? 1 : 0)
               << '\n';
        }
    }
    return exit_ok;
}

int run_sample(double mu, double sigma, double alpha, std::size_t n, std::uint64_t seed,
               const std::string& output) {
    if (!(sigma > 0.0)) {
        std::cerr << "sample: sigma must be positive\n";
        return exit_input;
    }
    if (n == 0) {
        std::cerr << "sample: n must be >= 1\n";
        return exit_input;
    }
    const sncv::Params p{mu, std::log(sigma), std::asinh(alpha)};
    const auto y = sncv::sample(n, p, seed);
    OutputFile out(output);
    for (double v : y) *out.os << sncv::format_double(v) << '\n';
    return exit_ok;
}

int run_simulate(const std::string& preset, double scale, std::uint64_t seed,
                 const std::string& prefix, const FitFlags& f,
                 const std::vector<double>& alphas_override,
                 const std::vector<std::size_t>& sizes_override, std::size_t replicates_override) {
    sncv::SimConfig cfg;
    if (preset == "setting1") {
        cfg = sncv::setting1_config();
    } else if (preset == "setting2") {
        cfg = sncv::setting2_config();
    } else if (preset == "setting2prose") {
        cfg = sncv::setting2_prose_config();
    } else {
        std::cerr << "simulate: unknown preset '" << preset << "'\n";
        return exit_input;
    }
    cfg.seed = seed;
    cfg.K = f.K;
    cfg.omega0 = f.omega0;
    cfg.grid_size = f.grid_size;
    cfg.spec = sncv::PenaltySpec{parse_penalty(f.penalty), f.c2};
    cfg.opts.tol = f.tol;
    cfg.opts.max_iter = f.max_iter;
    cfg.opts.theta_bound = f.theta_bound;
    if (!alphas_override.empty()) cfg.alphas = alphas_override;
    if (!sizes_override.empty()) cfg.sizes = sizes_override;
    if (replicates_override > 0) cfg.replicates = replicates_override;
    if (scale != 1.0) {
        if (!(scale > 0.0)) {
            std::cerr << "simulate: --scale must be positive\n";
            return exit_input;
        }
        for (auto& n : cfg.sizes)
            n = std::max<std::size_t>(20, static_cast<std::size_t>(std::lround(
                                              static_cast<double>(n) * scale)));
        cfg.replicates = std::max<std::size_t>(
            2, static_cast<std::size_t>(std::lround(static_cast<double>(cfg.replicates) * scale)));
    }

    const auto records = cfg.setting == 1 ? sncv::run_setting1(cfg) : sncv::run_setting2(cfg);
    const auto summary = sncv::summarize(records);

    auto config_header = [&](std::ostream& os) {
        os << "# preset: " << preset << "\n# seed: " << seed << "\n# scale: "
           << sncv::format_double(scale) << "\n# replicates: " << cfg.replicates
           << "\n# K: " << cfg.K << "\n# omega0: " << sncv::format_double(cfg.omega0)
           << "\n# grid_size: " << cfg.grid_size << "\n# penalty: "
           << sncv::penalty_name(cfg.spec.kind) << "\n# alphas:";
        for (double a : cfg.alphas) os << ' ' << sncv::format_double(a);
        os << "\n# sizes:";
        for (auto n : cfg.sizes) os << ' ' << n;
        os << "\n";
    };

    std::ofstream rec_os(prefix + "_records.csv");
    if (!rec_os) {
        std::cerr << "simulate: cannot open '" << prefix << "_records.csv'\n";
        return exit_input;
    }
    config_header(rec_os);
    sncv::write_records_csv(records, rec_os);

    std::ofstream sum_os(prefix + "_summary.csv");
    if (!sum_os) {
        std::cerr << "simulate: cannot open '" << prefix << "_summary.csv'\n";
        return exit_input;
    }
    config_header(sum_os);
    sncv::write_summary_csv(summary, sum_os);
    return exit_ok;
}

int run_cluster(const std::string& input, const std::string& layout_name, const std::string& prefix,
                const FitFlags& f, std::size_t k, double threshold, std::uint64_t seed) {
    if (k == 0) {
        std::cerr << "cluster: --k must be >= 1\n";
        return exit_input;
    }
    std::ifstream file(input);
    if (!file) {
        std::cerr << "cluster: cannot open input '" << input << "'\n";
        return exit_input;
    }
    const sncv::Layout layout =
        layout_name == "long" ? sncv::Layout::long_form : sncv::Layout::wide;
    sncv::LoadReport report;
    const sncv::SeriesTable table = sncv::load_series(file, layout, &report);

    sncv::FitMethod method = sncv::FitMethod::cv_mple;
    if (f.method == "q_mple") method = sncv::FitMethod::q_mple;
    if (f.method == "mle") method = sncv::FitMethod::mle;

    sncv::FitAllOptions fit_opts;
    fit_opts.K = f.K;
    fit_opts.omega0 = f.omega0;
    fit_opts.grid_size = f.grid_size;
    fit_opts.spec = sncv::PenaltySpec{parse_penalty(f.penalty), f.c2};
    fit_opts.seed = seed;
    fit_opts.opts.tol = f.tol;
    fit_opts.opts.max_iter = f.max_iter;
    fit_opts.opts.theta_bound = f.theta_bound;

    const auto fits = sncv::fit_all(table, method, fit_opts);
    std::size_t usable = 0;
    for (const auto& ft : fits)
        if (ft.ok) ++usable;
    if (usable < k) {
        std::cerr << "cluster: only " << usable << " usable series for k = " << k << "\n";
        return exit_input;
    }
    const sncv::ClusterReport rep = sncv::cluster_fits(fits, k, seed);

    std::ofstream fits_os(prefix + "_fits.csv");
    if (!fits_os) {
        std::cerr << "cluster: cannot open '" << prefix << "_fits.csv'\n";
        return exit_input;
    }
    fits_os << "# sncv-fits-v1\n# method: " << f.method << "\n# seed: " << seed
            << "\n# k: " << k << "\n# layout: " << layout_name << "\n# threshold: "
            << sncv::format_double(threshold) << "\n";
    if (f.method == "cv_mple") {
        fits_os << "# penalty: " << f.penalty << "\n# K: " << f.K << "\n# omega0: "
                << sncv::format_double(f.omega0) << "\n# grid_size: " << f.grid_size << "\n";
    }
    fits_os << "# tol: " << sncv::format_double(f.tol) << "\n# max_iter: " << f.max_iter
            << "\n# theta_bound: " << sncv::format_double(f.theta_bound) << "\n";
    fits_os << "name,ok,mu,sigma,alpha,theta,lambda,converged,dropped_cells\n";
    for (std::size_t i = 0; i < fits.size(); ++i) {
        const auto& ft = fits[i];
        fits_os << ft.name << ',' << (ft.ok ? 1 : 0) << ',' << sncv::format_double(ft.mu) << ','
                << sncv::format_double(ft.sigma) << ',' << sncv::format_double(ft.alpha) << ','
                << sncv::format_double(ft.theta) << ',' << sncv::format_double(ft.lambda) << ','
                << (ft.converged ? 1 : 0) << ',' << table.entries[i].dropped << '\n';
    }

    std::ofstream rep_os(prefix + "_report.kv");
    if (!rep_os) {
        std::cerr << "cluster: cannot open '" << prefix << "_report.kv'\n";
        return exit_input;
    }
    rep_os << "sncv-cluster-report-v1\n";
    rep_os << "k: " << rep.k << "\nseed: " << rep.seed << "\ninertia: "
           << sncv::format_double(rep.inertia) << "\nseries_total: " << table.entries.size()
           << "\nseries_clustered: " << rep.assignment.size() << "\nskew_threshold: "
           << sncv::format_double(threshold) << "\nskew_count: "
           << sncv::skew_count(fits, threshold) << "\ndropped_cells: " << report.dropped_cells
           << "\nexcluded_series: " << report.excluded.size() << "\n";
    for (std::size_t c = 0; c < rep.k; ++c) {
        rep_os << "centre_" << c << ": " << sncv::format_double(rep.centres[c][0]) << ' '
               << sncv::format_double(rep.centres[c][1]) << ' '
               << sncv::format_double(rep.centres[c][2]) << "\nsize_" << c << ": " << rep.sizes[c]
               << "\n";
    }
    std::size_t pi = 0;
    for (const auto& ft : fits) {
        if (!ft.ok) continue;
        rep_os << "assign_" << ft.name << ": " << rep.assignment[pi++] << "\n";
    }
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Skew normal fitting via cross-validated maximum penalised likelihood"};
    app.require_subcommand(1);

    std::uint64_t seed = default_seed();

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Fit one sample read from a file or stdin");
    std::string fit_input = "-", fit_output = "-", fit_format = "csv";
    FitFlags fit_flags;
    fit_cmd->add_option("--input", fit_input, "Input path ('-' for stdin)")->capture_default_str();
    fit_cmd->add_option("--output", fit_output, "Output path ('-' for stdout)")
        ->capture_default_str();
    fit_cmd->add_option("--format", fit_format, "Output style")
        ->check(CLI::IsMember({"csv", "kv"}))
        ->capture_default_str();
    add_fit_flags(fit_cmd, fit_flags);
    fit_cmd->add_option("--seed", seed, "Fold seed (env SNCV_SEED overrides the default)");

    // sample
    auto* sample_cmd = app.add_subcommand("sample", "Draw from the model");
    double s_mu = 0.0, s_sigma = 1.0, s_alpha = 0.0;
    std::size_t s_n = 100;
    std::string sample_output = "-";
    sample_cmd->add_option("--mu", s_mu)->capture_default_str();
    sample_cmd->add_option("--sigma", s_sigma)->capture_default_str();
    sample_cmd->add_option("--alpha", s_alpha)->capture_default_str();
    sample_cmd->add_option("--n", s_n)->capture_default_str();
    sample_cmd->add_option("--seed", seed, "Sampling seed (env SNCV_SEED overrides the default)");
    sample_cmd->add_option("--output", sample_output)->capture_default_str();

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation preset");
    std::string preset;
    double scale = 1.0;
    std::string sim_prefix;
    FitFlags sim_flags;
    std::vector<double> alphas_override;
    std::vector<std::size_t> sizes_override;
    std::size_t replicates_override = 0;
    sim_cmd->add_option("preset", preset, "setting1, setting2 or setting2prose")->required();
    sim_cmd->add_option("--scale", scale, "Shrink sizes and replicates for desk runs")
        ->capture_default_str();
    sim_cmd->add_option("--output", sim_prefix, "Output prefix for _records.csv and _summary.csv")
        ->required();
    sim_cmd->add_option("--alphas", alphas_override, "Override the alpha0 ladder")
        ->delimiter(',');
    sim_cmd->add_option("--sizes", sizes_override, "Override the sample-size ladder")
        ->delimiter(',');
    sim_cmd->add_option("--replicates", replicates_override, "Override the replicate count");
    add_fit_flags(sim_cmd, sim_flags);
    sim_cmd->add_option("--seed", seed, "Master seed (env SNCV_SEED overrides the default)");

    // cluster
    auto* cluster_cmd = app.add_subcommand("cluster", "Fit every series and cluster the estimates");
    std::string cl_input, cl_layout = "wide", cl_prefix;
    std::size_t cl_k = 4;
    double cl_threshold = 1.0;
    FitFlags cl_flags;
    cluster_cmd->add_option("--input", cl_input, "Series table (CSV)")->required();
    cluster_cmd->add_option("--layout", cl_layout, "Table layout")
        ->check(CLI::IsMember({"wide", "long"}))
        ->capture_default_str();
    cluster_cmd->add_option("--output", cl_prefix, "Output prefix for _fits.csv and _report.kv")
        ->required();
    cluster_cmd->add_option("--k", cl_k, "Number of clusters")->capture_default_str();
    cluster_cmd->add_option("--threshold", cl_threshold, "Evident-skewness cutoff on |alpha|")
        ->capture_default_str();
    add_fit_flags(cluster_cmd, cl_flags);
    cluster_cmd->add_option("--seed", seed, "Master seed (env SNCV_SEED overrides the default)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return exit_input;
    }

    try {
        if (fit_cmd->parsed()) return run_fit(fit_input, fit_output, fit_flags, seed, fit_format);
        if (sample_cmd->parsed()) return run_sample(s_mu, s_sigma, s_alpha, s_n, seed, sample_output);
        if (sim_cmd->parsed())
            return run_simulate(preset, scale, seed, sim_prefix, sim_flags, alphas_override,
                                sizes_override, replicates_override);
        if (cluster_cmd->parsed())
            return run_cluster(cl_input, cl_layout, cl_prefix, cl_flags, cl_k, cl_threshold, seed);
    } catch (const sncv::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_input;
    }
    return exit_input;
}
