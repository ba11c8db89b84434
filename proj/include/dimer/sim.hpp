#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "dimer/errors.hpp"
#include "dimer/model.hpp"

namespace dimer {

// Generic open harmonic network: point masses, pairwise springs, per-site
// pinning (which also encodes springs to fixed walls), Langevin baths on a
// subset of sites. Site indices inside this struct are 0-based; the chain
// and strip builders translate from their 1-based interfaces.
struct SimBond {
    int a = 0, b = 0;
    double k = 1.0;
};

struct SimBath {
    int site = 0;
    double gamma = 0.0; // gamma = 0 degrades to a no-op (deterministic audit)
    double temp = 0.0;
};

struct OpenSystem {
    Eigen::VectorXd masses;
    Eigen::VectorXd pinning; // on-site spring constants (walls + k_o)
    std::vector<SimBond> bonds;
    std::vector<SimBath> baths;

    int size() const { return static_cast<int>(masses.size()); }
};

inline OpenSystem open_system_from(const ValidatedSpec& vs) {
    const ChainSpec& s = vs.get();
    OpenSystem sys;
    sys.masses.resize(s.n_sites);
    for (int i = 1; i <= s.n_sites; ++i) sys.masses(i - 1) = s.mass_of(i);
    sys.pinning = Eigen::VectorXd::Constant(s.n_sites, s.pin_k0);
    sys.pinning(0) += s.spring_k; // fixed wall q_0 = 0
    sys.pinning(s.n_sites - 1) += s.spring_k; // fixed wall q_{N+1} = 0
    for (int i = 0; i + 1 < s.n_sites; ++i)
        sys.bonds.push_back({i, i + 1, s.spring_k});
    sys.baths.push_back({0, s.gamma_left, s.temp_left});
    if (s.n_sites > 1)
        sys.baths.push_back({s.n_sites - 1, s.gamma_right, s.temp_right});
    else
        sys.baths.push_back({0, s.gamma_right, s.temp_right});
    return sys;
}

enum class NoiseKind { None, MomentumConserving, VelocityFlip };
enum class EventScheduling { Bernoulli, PoissonCounts };

struct SimConfig {
    double dt = 0.0;            // 0 -> 0.005 / (highest mode frequency bound)
    long long n_steps = 0;
    long long burn_in = 0;
    std::uint64_t seed = 1;
    double lambda = 0.0;        // events per bond (exchange) / site (flip) per unit time
    NoiseKind noise_kind = NoiseKind::None;
    long long block_size = 0;   // 0 -> measurement span / 50
    int replicas = 1;
    EventScheduling scheduling = EventScheduling::Bernoulli;
};

// Gershgorin bound on the highest mode frequency of M^{-1} Phi; the default
// step keeps omega_max * dt well inside the stability region.
inline double highest_frequency_bound(const OpenSystem& sys) {
    const int n = sys.size();
    Eigen::VectorXd row = sys.pinning;
    for (const SimBond& b : sys.bonds) {
        row(b.a) += 2.0 * b.k;
        row(b.b) += 2.0 * b.k;
    }
    double w2 = 0.0;
    for (int i = 0; i < n; ++i) w2 = std::max(w2, row(i) / sys.masses(i));
    return std::sqrt(std::max(w2, 1e-300));
}

inline double default_timestep(const OpenSystem& sys) {
    return 0.005 / highest_frequency_bound(sys);
}

namespace sim_detail {

inline SimConfig resolve_config(SimConfig cfg, const OpenSystem& sys) {
    if (cfg.dt == 0.0) cfg.dt = default_timestep(sys);
    if (!(cfg.dt > 0.0)) fail("ConfigError", "dt must be positive");
    if (cfg.n_steps <= 0) fail("ConfigError", "n_steps must be positive");
    if (cfg.burn_in < 0 || cfg.burn_in >= cfg.n_steps)
        fail("ConfigError", "burn_in must satisfy 0 <= burn_in < n_steps");
    if (cfg.lambda < 0.0) fail("ConfigError", "lambda must be nonnegative");
    if (cfg.noise_kind != NoiseKind::None && cfg.lambda * cfg.dt > 0.1)
        fail("ConfigError", "lambda * dt must not exceed 0.1 (event probability "
                            "validity)");
    const long long span = cfg.n_steps - cfg.burn_in;
    if (cfg.block_size == 0) cfg.block_size = std::max<long long>(1, span / 50);
    if (cfg.block_size < 0) fail("ConfigError", "block_size must be positive");
    if (cfg.replicas < 1) fail("ConfigError", "replicas must be >= 1");
    return cfg;
}

} // namespace sim_detail

// Integration state. `force` always holds the force at the current q; every
// API maintains that invariant, which lets consecutive steps share one force
// evaluation at no cost to the single-step contract.
struct SimState {
    Eigen::VectorXd q, p, force;
};

inline void compute_force(const OpenSystem& sys, const Eigen::VectorXd& q,
                          Eigen::VectorXd& force) {
    force = -(sys.pinning.array() * q.array()).matrix();
    for (const SimBond& b : sys.bonds) {
        const double f = b.k * (q(b.a) - q(b.b));
        force(b.a) -= f;
        force(b.b) += f;
    }
}

inline SimState make_state(const OpenSystem& sys) {
    SimState st;
    st.q = Eigen::VectorXd::Zero(sys.size());
    st.p = Eigen::VectorXd::Zero(sys.size());
    compute_force(sys, st.q, st.force);
    return st;
}

inline double total_energy(const OpenSystem& sys, const SimState& st) {
    double e = 0.0;
    for (int i = 0; i < sys.size(); ++i)
        e += st.p(i) * st.p(i) / (2.0 * sys.masses(i)) +
             0.5 * sys.pinning(i) * st.q(i) * st.q(i);
    for (const SimBond& b : sys.bonds) {
        const double d = st.q(b.a) - st.q(b.b);
        e += 0.5 * b.k * d * d;
    }
    return e;
}

// One time step: half-kick, drift, exact Ornstein-Uhlenbeck update of bath
// momenta over the full dt (p -> c p + sigma xi with c = exp(-gamma dt/m),
// sigma^2 = m T (1 - c^2)), half-kick. gamma = 0 reduces to plain velocity
// Verlet.
inline void sim_step(SimState& st, const OpenSystem& sys, double dt,
                     std::mt19937_64& rng) {
    // fresh distribution per step: no hidden cache survives across calls, so
    // trajectories depend only on (rng state, arguments)
    std::normal_distribution<double> normal(0.0, 1.0);
    st.p += 0.5 * dt * st.force;
    st.q += dt * (st.p.array() / sys.masses.array()).matrix();
    compute_force(sys, st.q, st.force);
    for (const SimBath& b : sys.baths) {
        if (b.gamma == 0.0) continue;
        const double m = sys.masses(b.site);
        const double c = std::exp(-b.gamma * dt / m);
        const double sigma = std::sqrt(std::max(0.0, m * b.temp * (1.0 - c * c)));
        st.p(b.site) = c * st.p(b.site) + sigma * normal(rng);
    }
    st.p += 0.5 * dt * st.force;
}

// Elastic-collision momentum exchange on bond (a, b): the unique nontrivial
// map conserving both total momentum and kinetic energy for unequal masses
// (a bare swap conserves only momentum). Involution.
inline void apply_momentum_exchange(SimState& st, const OpenSystem& sys,
                                    const SimBond& bond) {
    const double mi = sys.masses(bond.a), mj = sys.masses(bond.b);
    const double vi = st.p(bond.a) / mi, vj = st.p(bond.b) / mj;
    const double inv = 1.0 / (mi + mj);
    const double vi2 = ((mi - mj) * vi + 2.0 * mj * vj) * inv;
    const double vj2 = ((mj - mi) * vj + 2.0 * mi * vi) * inv;
    st.p(bond.a) = mi * vi2;
    st.p(bond.b) = mj * vj2;
}

inline void apply_velocity_flip(SimState& st, int site) {
    st.p(site) = -st.p(site);
}

struct MeasuredProfile {
    Eigen::VectorXd temperatures, temp_stderr;
    Eigen::VectorXd bond_currents, current_stderr;
    double mean_current = 0.0, mean_current_stderr = 0.0;
    int blocks = 0;
    int replicas = 1;
};

namespace sim_detail {

struct BlockStats {
    // one row per block, columns: N temperatures, B currents, 1 bond-mean
    std::vector<Eigen::VectorXd> block_means;

    void finalize(int n, int nbonds, MeasuredProfile& out) const {
        const int nb = static_cast<int>(block_means.size());
        if (nb < 20)
            fail("InsufficientBlocks",
                 "only " + std::to_string(nb) +
                     " full averaging blocks; need >= 20 (lengthen the run or "
                     "shrink block_size)");
        const int cols = n + nbonds + 1;
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(cols);
        for (const auto& b : block_means) mean += b;
        mean /= nb;
        Eigen::VectorXd var = Eigen::VectorXd::Zero(cols);
        for (const auto& b : block_means)
            var += (b - mean).cwiseProduct(b - mean);
        var /= double(nb) * double(nb - 1); // variance of the mean
        Eigen::VectorXd se = var.cwiseSqrt();

        out.temperatures = mean.head(n);
        out.temp_stderr = se.head(n);
        out.bond_currents = mean.segment(n, nbonds);
        out.current_stderr = se.segment(n, nbonds);
        out.mean_current = mean(cols - 1);
        out.mean_current_stderr = se(cols - 1);
        out.blocks = nb;
    }
};

inline void check_finite(const SimState& st, long long step) {
    if (!st.p.allFinite() || !st.q.allFinite())
        fail("NonFiniteState",
             "state blew up at step " + std::to_string(step) +
                 " (reduce dt or check the spec)");
}

inline MeasuredProfile run_single(const OpenSystem& sys, const SimConfig& cfg,
                                  std::uint64_t seed) {
    const int n = sys.size();
    const int nbonds = static_cast<int>(sys.bonds.size());
    std::mt19937_64 rng(seed);
    SimState st = make_state(sys);

    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const bool exchange = cfg.noise_kind == NoiseKind::MomentumConserving;
    const bool flip = cfg.noise_kind == NoiseKind::VelocityFlip;
    const int n_candidates = exchange ? nbonds : (flip ? n : 0);
    const double p_event = cfg.lambda * cfg.dt;
    std::poisson_distribution<int> poisson(
        std::max(1e-300, cfg.lambda * cfg.dt * std::max(1, n_candidates)));
    std::uniform_int_distribution<int> pick(0, std::max(0, n_candidates - 1));

    auto apply_candidate = [&](int c) {
        if (exchange)
            apply_momentum_exchange(st, sys, sys.bonds[c]);
        else if (flip)
            apply_velocity_flip(st, c);
    };
    auto noise_pass = [&] {
        if (n_candidates == 0 || cfg.lambda == 0.0) return;
        if (cfg.scheduling == EventScheduling::Bernoulli) {
            for (int c = 0; c < n_candidates; ++c)
                if (uni(rng) < p_event) apply_candidate(c);
        } else {
            // superposed Poisson processes: exact event counts per step,
            // applied at the step boundary
            const int events = poisson(rng);
            for (int e = 0; e < events; ++e) apply_candidate(pick(rng));
        }
    };

    BlockStats stats;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n + nbonds + 1);
    long long in_block = 0;

    for (long long step = 0; step < cfg.n_steps; ++step) {
        sim_step(st, sys, cfg.dt, rng);
        noise_pass();
        if ((step & 0xfff) == 0) check_finite(st, step);
        if (step < cfg.burn_in) continue;

        for (int i = 0; i < n; ++i)
            acc(i) += st.p(i) * st.p(i) / sys.masses(i);
        double bond_sum = 0.0;
        for (int bi = 0; bi < nbonds; ++bi) {
            const SimBond& b = sys.bonds[bi];
            const double j =
                b.k * (st.q(b.a) - st.q(b.b)) * st.p(b.a) / sys.masses(b.a);
            acc(n + bi) += j;
            bond_sum += j;
        }
        if (nbonds > 0) acc(n + nbonds) += bond_sum / nbonds;
        if (++in_block == cfg.block_size) {
            check_finite(st, step);
            stats.block_means.push_back(acc / double(cfg.block_size));
            acc.setZero();
            in_block = 0;
        }
    }

    MeasuredProfile out;
    stats.finalize(n, nbonds, out);
    return out;
}

inline MeasuredProfile merge_replicas(const std::vector<MeasuredProfile>& runs) {
    if (runs.size() == 1) return runs.front();
    const int n = static_cast<int>(runs.front().temperatures.size());
    const int nb = static_cast<int>(runs.front().bond_currents.size());
    MeasuredProfile out;
    out.temperatures = Eigen::VectorXd::Zero(n);
    out.temp_stderr = Eigen::VectorXd::Zero(n);
    out.bond_currents = Eigen::VectorXd::Zero(nb);
    out.current_stderr = Eigen::VectorXd::Zero(nb);
    out.replicas = static_cast<int>(runs.size());

    auto merge_one = [&](auto value_of, auto se_of, double& val, double& se) {
        double wsum = 0.0, xsum = 0.0;
        for (const MeasuredProfile& r : runs) {
            const double s = se_of(r);
            const double w = 1.0 / std::max(s * s, 1e-300);
            wsum += w;
            xsum += w * value_of(r);
        }
        val = xsum / wsum;
        se = 1.0 / std::sqrt(wsum);
    };

    for (int i = 0; i < n; ++i)
        merge_one([&](const MeasuredProfile& r) { return r.temperatures(i); },
                  [&](const MeasuredProfile& r) { return r.temp_stderr(i); },
                  out.temperatures(i), out.temp_stderr(i));
    for (int b = 0; b < nb; ++b)
        merge_one([&](const MeasuredProfile& r) { return r.bond_currents(b); },
                  [&](const MeasuredProfile& r) { return r.current_stderr(b); },
                  out.bond_currents(b), out.current_stderr(b));
    merge_one([](const MeasuredProfile& r) { return r.mean_current; },
              [](const MeasuredProfile& r) { return r.mean_current_stderr; },
              out.mean_current, out.mean_current_stderr);
    for (const MeasuredProfile& r : runs) out.blocks += r.blocks;
    return out;
}

} // namespace sim_detail

// Time-domain route to the steady profile: block-averaged site temperatures
// <p_i^2>/m_i and bond currents k <(q_i - q_{i+1}) p_i>/m_i with standard
// errors. Deterministic given (seed, config); replicas run concurrently on
// distinct seeds and merge by inverse-variance weighting.
inline MeasuredProfile run_ness(const OpenSystem& sys, const SimConfig& cfg_in) {
    const SimConfig cfg = sim_detail::resolve_config(cfg_in, sys);
    std::vector<MeasuredProfile> runs(cfg.replicas);
    if (cfg.replicas == 1) {
        runs[0] = sim_detail::run_single(sys, cfg, cfg.seed);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::pair<std::string, std::string>> errors(cfg.replicas);
        for (int r = 0; r < cfg.replicas; ++r)
            pool.emplace_back([&, r] {
                try {
                    runs[r] = sim_detail::run_single(
                        sys, cfg, cfg.seed + 0x9e3779b97f4a7c15ULL * (r + 1));
                } catch (const Error& e) {
                    errors[r] = {e.code(), e.what()};
                } catch (const std::exception& e) {
                    errors[r] = {"NonFiniteState", e.what()};
                }
            });
        for (auto& t : pool) t.join();
        for (const auto& [code, msg] : errors)
            if (!code.empty()) fail(code.c_str(), msg);
    }
    return sim_detail::merge_replicas(runs);
}

inline MeasuredProfile run_ness(const ValidatedSpec& spec, const SimConfig& cfg) {
    return run_ness(open_system_from(spec), cfg);
}

} // namespace dimer
