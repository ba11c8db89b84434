#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dimer/bulk.hpp"
#include "dimer/config.hpp"
#include "dimer/covariance.hpp"
#include "dimer/errors.hpp"
#include "dimer/greens.hpp"
#include "dimer/model.hpp"
#include "dimer/report.hpp"
#include "dimer/sim.hpp"
#include "dimer/strip.hpp"

// Experiment runner shared by the command-line tool and the end-to-end tests:
// maps flat configs onto engine inputs, dispatches, and writes the CSV/SVG
// artifacts. No argv handling here; the binary front end owns that.
namespace dimer::cli {

struct RunOptions {
    std::string out_dir = ".";
    bool plot = false;                       // --plot forces plots on
    std::optional<std::uint64_t> seed;       // --seed overrides the config key
};

inline std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

inline void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        fail("IoFailure", "cannot create output directory '" + dir + "': " + ec.message());
}

// Config keys mirror the spec fields verbatim; absent keys fall back to the
// field defaults (spring_k = 1, pin_k0 = 0, gammas and temps = 1).
inline ChainSpec chain_from_config(const Config& cfg) {
    ChainSpec s;
    s.n_sites = static_cast<int>(cfg.get_int("n_sites"));
    s.mass_a = cfg.get_double("mass_a");
    s.mass_b = cfg.get_double("mass_b");
    s.spring_k = cfg.get_double("spring_k", s.spring_k);
    s.pin_k0 = cfg.get_double("pin_k0", s.pin_k0);
    s.gamma_left = cfg.get_double("gamma_left", s.gamma_left);
    s.gamma_right = cfg.get_double("gamma_right", s.gamma_right);
    s.temp_left = cfg.get_double("temp_left", s.temp_left);
    s.temp_right = cfg.get_double("temp_right", s.temp_right);
    return s;
}

inline StripSpec strip_from_config(const Config& cfg) {
    StripSpec s;
    s.length = static_cast<int>(cfg.get_int("length"));
    s.width = static_cast<int>(cfg.get_int("width"));
    s.mass_a = cfg.get_double("mass_a");
    s.mass_b = cfg.get_double("mass_b");
    s.spring_k = cfg.get_double("spring_k", s.spring_k);
    s.gamma_left = cfg.get_double("gamma_left", s.gamma_left);
    s.gamma_right = cfg.get_double("gamma_right", s.gamma_right);
    s.temp_left = cfg.get_double("temp_left", s.temp_left);
    s.temp_right = cfg.get_double("temp_right", s.temp_right);
    return s;
}

inline SimConfig sim_from_config(const Config& cfg, const RunOptions& opts) {
    SimConfig c;
    c.n_steps = cfg.get_int("n_steps");
    if (c.n_steps <= 0)
        throw ConfigError(cfg.line_of("n_steps"), "n_steps must be positive");
    c.burn_in = cfg.get_int("burn_in", c.n_steps / 10);
    c.dt = cfg.get_double("dt", 0.0);
    c.block_size = cfg.get_int("block_size", 0);
    c.replicas = static_cast<int>(cfg.get_int("replicas", 1));
    c.lambda = cfg.get_double("lambda", 0.0);
    const std::string kind =
        cfg.get_choice("noise_kind", "none", {"none", "exchange", "flip"});
    c.noise_kind = kind == "exchange" ? NoiseKind::MomentumConserving
                 : kind == "flip"     ? NoiseKind::VelocityFlip
                                      : NoiseKind::None;
    const std::string sched =
        cfg.get_choice("scheduling", "bernoulli", {"bernoulli", "poisson"});
    c.scheduling =
        sched == "poisson" ? EventScheduling::PoissonCounts : EventScheduling::Bernoulli;
    c.seed = cfg.get_u64("seed", 1);
    if (opts.seed) c.seed = *opts.seed;
    return c;
}

// A typo'd key would otherwise silently fall back to a default; reject the
// first key no runner consumed, pointing at its line.
inline void reject_unused(const Config& cfg) {
    auto leftover = cfg.unused_keys();
    if (leftover.empty()) return;
    throw ConfigError(leftover.front().second,
                      "unknown key '" + leftover.front().first + "'");
}

inline bool plot_requested(const Config& cfg, const RunOptions& opts) {
    return cfg.get_bool("plot", false) || opts.plot;
}

namespace detail {

inline std::vector<ProfileRow> chain_rows(const ChainSpec& s,
                                          const Eigen::VectorXd& temps,
                                          const Eigen::VectorXd* errs) {
    std::vector<ProfileRow> rows;
    rows.reserve(temps.size());
    for (int i = 1; i <= static_cast<int>(temps.size()); ++i) {
        ProfileRow r;
        r.site = i;
        r.mass = s.mass_of(i);
        r.temperature = temps[i - 1];
        if (errs) r.stderr_temp = (*errs)[i - 1];
        rows.push_back(r);
    }
    return rows;
}

inline std::vector<CurrentRow> bond_rows(const Eigen::VectorXd& currents,
                                         const Eigen::VectorXd* errs) {
    std::vector<CurrentRow> rows;
    rows.reserve(currents.size());
    for (int i = 0; i < static_cast<int>(currents.size()); ++i) {
        CurrentRow r;
        r.bond = i + 1;
        r.current = currents[i];
        if (errs) r.stderr_current = (*errs)[i];
        rows.push_back(r);
    }
    return rows;
}

// One series per sublattice: odd sites (mass_a) and even sites (mass_b).
inline std::vector<PlotSeries> sublattice_series(const Eigen::VectorXd& temps) {
    PlotSeries odd{"odd sites", {}, {}}, even{"even sites", {}, {}};
    for (int i = 1; i <= static_cast<int>(temps.size()); ++i) {
        auto& s = (i % 2 == 1) ? odd : even;
        s.x.push_back(i);
        s.y.push_back(temps[i - 1]);
    }
    return {odd, even};
}

inline void emit_chain_report(const std::string& out_dir, bool plot,
                              const ChainSpec& spec,
                              const Eigen::VectorXd& temps,
                              const Eigen::VectorXd* temp_errs,
                              const Eigen::VectorXd& currents,
                              const Eigen::VectorXd* current_errs,
                              const std::string& title) {
    ensure_out_dir(out_dir);
    write_text_atomic(join_path(out_dir, "profile.csv"),
                      render_profile_csv(chain_rows(spec, temps, temp_errs)));
    write_text_atomic(join_path(out_dir, "current.csv"),
                      render_current_csv(bond_rows(currents, current_errs)));
    if (plot)
        write_text_atomic(join_path(out_dir, "plot.svg"),
                          render_svg_plot(title, "site", "temperature",
                                          sublattice_series(temps)));
}

inline void print_profile_summary(const char* mode, const SteadyProfile& prof) {
    const int n = static_cast<int>(prof.temperatures.size());
    std::printf("%s: n_sites=%d mean_current=%s\n", mode, n,
                format_number(prof.mean_current).c_str());
    if (n >= 4)
        std::printf("  bulk T_odd=%s T_even=%s\n",
                    format_number(bulk_sublattice_mean(prof.temperatures, true)).c_str(),
                    format_number(bulk_sublattice_mean(prof.temperatures, false)).c_str());
}

} // namespace detail

inline void run_solve(const Config& cfg, const RunOptions& opts) {
    const ChainSpec raw = chain_from_config(cfg);
    const bool plot = plot_requested(cfg, opts);
    reject_unused(cfg);
    const ValidatedSpec spec = validate_spec(raw);
    const CovarianceSolution sol = solve_stationary_covariance(build_system_matrices(spec));
    const SteadyProfile prof = profile_from_covariance(sol.cov, spec);
    detail::emit_chain_report(opts.out_dir, plot, raw, prof.temperatures, nullptr,
                              prof.bond_currents, nullptr, "steady-state temperature profile");
    detail::print_profile_summary("solve", prof);
}

inline void run_greens(const Config& cfg, const RunOptions& opts) {
    const ChainSpec raw = chain_from_config(cfg);
    QuadOptions quad;
    quad.abs_tol = cfg.get_double("quad_abs_tol", quad.abs_tol);
    quad.rel_tol = cfg.get_double("quad_rel_tol", quad.rel_tol);
    const bool plot = plot_requested(cfg, opts);
    reject_unused(cfg);
    const ValidatedSpec spec = validate_spec(raw);
    const SteadyProfile prof = greens_profile(spec, quad);
    detail::emit_chain_report(opts.out_dir, plot, raw, prof.temperatures, nullptr,
                              prof.bond_currents, nullptr,
                              "temperature profile (frequency-integral route)");
    detail::print_profile_summary("greens", prof);
}

inline void run_simulate(const Config& cfg, const RunOptions& opts) {
    const ChainSpec raw = chain_from_config(cfg);
    const SimConfig sim = sim_from_config(cfg, opts);
    const bool plot = plot_requested(cfg, opts);
    reject_unused(cfg);
    const ValidatedSpec spec = validate_spec(raw);
    const MeasuredProfile prof = run_ness(spec, sim);
    detail::emit_chain_report(opts.out_dir, plot, raw, prof.temperatures,
                              &prof.temp_stderr, prof.bond_currents,
                              &prof.current_stderr, "simulated temperature profile");
    std::printf("simulate: n_sites=%d replicas=%d blocks=%d\n",
                static_cast<int>(prof.temperatures.size()), prof.replicas, prof.blocks);
    std::printf("  mean_current=%s stderr=%s\n",
                format_number(prof.mean_current).c_str(),
                format_number(prof.mean_current_stderr).c_str());
}

inline Parity parity_from_config(const Config& cfg) {
    return cfg.get_choice("parity", "even", {"even", "odd"}) == "odd" ? Parity::Odd
                                                                      : Parity::Even;
}

// Shared by asymptotic and sweep: evaluate the infinite-chain formulas for
// one parameter point.
inline BulkResult bulk_point(Parity parity, const std::string& engine, double mass_a,
                             double mass_b, double gamma_l, double gamma_r,
                             double temp, double delta_t) {
    if (engine == "closed") {
        if (gamma_l != gamma_r)
            fail("ConfigError",
                 "closed-form engine requires gamma_left == gamma_right");
        return parity == Parity::Even
                   ? closed_form_even(mass_a, mass_b, gamma_l, temp, delta_t)
                   : closed_form_odd(mass_a, mass_b, gamma_l, temp, delta_t);
    }
    return parity == Parity::Even
               ? bulk_even(mass_a, mass_b, gamma_l, gamma_r, temp, delta_t)
               : bulk_odd(mass_a, mass_b, gamma_l, gamma_r, temp, delta_t);
}

inline void run_asymptotic(const Config& cfg, const RunOptions& opts) {
    double mass_a = cfg.get_double("mass_a");
    double mass_b = cfg.get_double("mass_b");
    if (cfg.get_bool("normalize", false)) {
        // Convenience rescale to the unit-cell mass convention m_a + m_b = 1;
        // gammas and temperatures are then read in the rescaled units.
        const double sum = mass_a + mass_b;
        if (!(sum > 0.0))
            throw ConfigError(cfg.line_of("mass_a"), "masses must have a positive sum");
        mass_a /= sum;
        mass_b /= sum;
    }
    if (cfg.has("gamma") && (cfg.has("gamma_left") || cfg.has("gamma_right")))
        throw ConfigError(cfg.line_of("gamma"),
                          "key 'gamma' conflicts with gamma_left/gamma_right");
    double gamma_l = cfg.get_double("gamma_left", 1.0);
    double gamma_r = cfg.get_double("gamma_right", 1.0);
    if (cfg.has("gamma")) {
        gamma_l = gamma_r = cfg.get_double("gamma");
    }
    const double temp_left = cfg.get_double("temp_left", 1.0);
    const double temp_right = cfg.get_double("temp_right", 1.0);
    const Parity parity = parity_from_config(cfg);
    const std::string engine =
        cfg.get_choice("engine", "quadrature", {"quadrature", "closed"});
    const bool plot = plot_requested(cfg, opts);
    reject_unused(cfg);

    const BulkResult r = bulk_point(parity, engine, mass_a, mass_b, gamma_l, gamma_r,
                                    0.5 * (temp_left + temp_right),
                                    temp_left - temp_right);

    ensure_out_dir(opts.out_dir);
    std::vector<ProfileRow> rows{
        {1, mass_a, r.t_odd.total, std::nullopt},
        {2, mass_b, r.t_even.total, std::nullopt},
    };
    write_text_atomic(join_path(opts.out_dir, "profile.csv"), render_profile_csv(rows));
    std::vector<CurrentRow> crows{{1, r.current.total, std::nullopt}};
    write_text_atomic(join_path(opts.out_dir, "current.csv"), render_current_csv(crows));
    if (plot) {
        std::vector<PlotSeries> series{
            {"odd sites", {1.0, 2.0}, {r.t_odd.total, r.t_odd.total}},
            {"even sites", {1.0, 2.0}, {r.t_even.total, r.t_even.total}},
        };
        write_text_atomic(join_path(opts.out_dir, "plot.svg"),
                          render_svg_plot("infinite-chain sublattice temperatures",
                                          "sublattice", "temperature", series));
    }

    std::printf("asymptotic(%s, %s): T_odd=%s T_even=%s J=%s\n",
                parity == Parity::Odd ? "odd" : "even", engine.c_str(),
                format_number(r.t_odd.total).c_str(),
                format_number(r.t_even.total).c_str(),
                format_number(r.current.total).c_str());
    if (r.current.has_branches)
        std::printf("  acoustic_J=%s optical_J=%s\n",
                    format_number(r.current.acoustic).c_str(),
                    format_number(r.current.optical).c_str());
}

inline void run_strip(const Config& cfg, const RunOptions& opts) {
    const StripSpec raw = strip_from_config(cfg);
    const std::string method =
        cfg.get_choice("method", "lyapunov", {"lyapunov", "simulate"});
    SimConfig sim;
    if (method == "simulate") sim = sim_from_config(cfg, opts);
    const bool plot = plot_requested(cfg, opts);
    reject_unused(cfg);

    const ValidatedStrip strip = validate_strip(raw);
    const bool stochastic = method == "simulate";
    const StripProfile prof = strip_profile(
        strip, stochastic ? StripMethod::Simulate : StripMethod::Lyapunov, sim);

    ensure_out_dir(opts.out_dir);
    std::vector<ProfileRow> rows;
    rows.reserve(raw.n_sites());
    for (int i = 1; i <= raw.length; ++i)
        for (int j = 1; j <= raw.width; ++j) {
            ProfileRow r;
            r.site = raw.site_index0(i, j) + 1;
            r.mass = raw.mass_of(i, j);
            r.temperature = prof.temperatures(i - 1, j - 1);
            if (stochastic) r.stderr_temp = prof.temp_stderr(i - 1, j - 1);
            rows.push_back(r);
        }
    write_text_atomic(join_path(opts.out_dir, "profile.csv"), render_profile_csv(rows));

    std::vector<CurrentRow> crows;
    for (int c = 0; c < static_cast<int>(prof.cut_currents.size()); ++c) {
        CurrentRow r;
        r.bond = c + 1;
        r.current = prof.cut_currents[c];
        if (stochastic) r.stderr_current = prof.cut_stderr[c];
        crows.push_back(r);
    }
    write_text_atomic(join_path(opts.out_dir, "current.csv"), render_current_csv(crows));

    if (plot) {
        PlotSeries odd{"odd layers", {}, {}}, even{"even layers", {}, {}};
        for (int i = 1; i <= raw.length; ++i) {
            auto& s = (i % 2 == 1) ? odd : even;
            s.x.push_back(i);
            s.y.push_back(prof.layer_means[i - 1]);
        }
        write_text_atomic(join_path(opts.out_dir, "plot.svg"),
                          render_svg_plot("strip layer-mean temperatures", "layer",
                                          "temperature", {odd, even}));
    }

    std::printf("strip: length=%d width=%d method=%s mean_current=%s\n", raw.length,
                raw.width, method.c_str(), format_number(prof.mean_current).c_str());
}

// One swept scalar; `gamma` moves both bath couplings together, `mass_a`
// keeps the unit-cell normalization by setting mass_b = 1 - mass_a.
struct SweepAxis {
    std::string param;
    double from = 0.0;
    double to = 0.0;
    long long points = 0;
};

inline void run_sweep(const Config& cfg, const RunOptions& opts) {
    SweepAxis axis;
    axis.param = cfg.get_choice(
        "param", "gamma",
        {"gamma", "gamma_left", "gamma_right", "mass_a", "temp_left", "temp_right"});
    axis.from = cfg.get_double("from");
    axis.to = cfg.get_double("to");
    axis.points = cfg.get_int("points");
    if (axis.points < 0)
        throw ConfigError(cfg.line_of("points"), "points must be >= 0");

    const bool sweeps_mass = axis.param == "mass_a";
    double mass_a = sweeps_mass ? 0.0 : cfg.get_double("mass_a");
    double mass_b = sweeps_mass ? 0.0 : cfg.get_double("mass_b");
    if (cfg.has("gamma") && (cfg.has("gamma_left") || cfg.has("gamma_right")))
        throw ConfigError(cfg.line_of("gamma"),
                          "key 'gamma' conflicts with gamma_left/gamma_right");
    double gamma_l = cfg.get_double("gamma_left", 1.0);
    double gamma_r = cfg.get_double("gamma_right", 1.0);
    if (cfg.has("gamma")) gamma_l = gamma_r = cfg.get_double("gamma");
    const double temp_left = cfg.get_double("temp_left", 1.0);
    const double temp_right = cfg.get_double("temp_right", 1.0);
    const Parity parity = parity_from_config(cfg);
    const std::string engine =
        cfg.get_choice("engine", "quadrature", {"quadrature", "closed"});
    const bool plot = plot_requested(cfg, opts);
    reject_unused(cfg);

    std::vector<double> values(axis.points);
    for (long long i = 0; i < axis.points; ++i)
        values[i] = axis.points == 1
                        ? axis.from
                        : axis.from + (axis.to - axis.from) * double(i) / double(axis.points - 1);

    std::vector<SweepRow> rows(axis.points);
    std::vector<std::pair<std::string, std::string>> failures(axis.points);
    std::atomic<long long> next{0};
    std::atomic<bool> failed{false};
    auto worker = [&]() {
        while (true) {
            const long long i = next.fetch_add(1);
            if (i >= axis.points) return;
            double ma = mass_a, mb = mass_b, gl = gamma_l, gr = gamma_r;
            double tl = temp_left, tr = temp_right;
            const double v = values[i];
            if (axis.param == "gamma") gl = gr = v;
            else if (axis.param == "gamma_left") gl = v;
            else if (axis.param == "gamma_right") gr = v;
            else if (axis.param == "temp_left") tl = v;
            else if (axis.param == "temp_right") tr = v;
            else { ma = v; mb = 1.0 - v; }
            try {
                const BulkResult r = bulk_point(parity, engine, ma, mb, gl, gr,
                                                0.5 * (tl + tr), tl - tr);
                SweepRow row;
                row.param = v;
                row.temp_odd = r.t_odd.total;
                row.temp_even = r.t_even.total;
                row.current = r.current.total;
                if (r.current.has_branches) {
                    row.acoustic_current = r.current.acoustic;
                    row.optical_current = r.current.optical;
                }
                rows[i] = row;
            } catch (const Error& e) {
                failures[i] = {e.code(), e.what()};
                failed.store(true);
            }
        }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned n_threads =
        static_cast<unsigned>(std::min<long long>(hw, std::max<long long>(1, axis.points)));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed.load()) {
        for (long long i = 0; i < axis.points; ++i)
            if (!failures[i].first.empty())
                fail(failures[i].first.c_str(),
                     "sweep point " + format_number(values[i]) + ": " + failures[i].second);
    }

    ensure_out_dir(opts.out_dir);
    write_text_atomic(join_path(opts.out_dir, "sweep.csv"), render_sweep_csv(rows));
    if (plot) {
        PlotSeries odd{"T_odd", {}, {}}, even{"T_even", {}, {}};
        for (const auto& r : rows) {
            odd.x.push_back(r.param);
            odd.y.push_back(r.temp_odd);
            even.x.push_back(r.param);
            even.y.push_back(r.temp_even);
        }
        write_text_atomic(join_path(opts.out_dir, "plot.svg"),
                          render_svg_plot("bulk temperatures vs " + axis.param,
                                          axis.param, "temperature", {odd, even}));
    }
    std::printf("sweep %s: %lld points (%s engine), wrote sweep.csv\n", axis.param.c_str(),
                static_cast<long long>(axis.points), engine.c_str());
}

// Returns true if `mode` names a subcommand. Used by tests to drive the full
// pipeline without spawning a process.
inline bool run_mode(const std::string& mode, const Config& cfg, const RunOptions& opts) {
    if (mode == "solve") run_solve(cfg, opts);
    else if (mode == "greens") run_greens(cfg, opts);
    else if (mode == "asymptotic") run_asymptotic(cfg, opts);
    else if (mode == "simulate") run_simulate(cfg, opts);
    else if (mode == "strip") run_strip(cfg, opts);
    else if (mode == "sweep") run_sweep(cfg, opts);
    else return false;
    return true;
}

} // namespace dimer::cli
