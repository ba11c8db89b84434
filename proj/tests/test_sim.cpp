#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "dimer/covariance.hpp"
#include "dimer/model.hpp"
#include "dimer/sim.hpp"

using namespace dimer;

namespace {

ChainSpec fig1a(int n) {
    ChainSpec s;
    s.n_sites = n;
    s.mass_a = 0.75;
    s.mass_b = 0.25;
    s.gamma_left = s.gamma_right = 1.0;
    s.temp_left = 1.5;
    s.temp_right = 0.5;
    return s;
}

// Lyapunov reference for the same spec.
SteadyProfile reference(const ValidatedSpec& spec) {
    const SystemMatrices m = build_system_matrices(spec);
    return profile_from_covariance(solve_stationary_covariance(m).cov, m);
}

struct Agreement {
    int within3 = 0;
    double worst = 0.0;
};

Agreement compare(const MeasuredProfile& sim, const SteadyProfile& ref) {
    Agreement a;
    for (int i = 0; i < ref.temperatures.size(); ++i) {
        const double se = std::max(sim.temp_stderr(i), 1e-12);
        const double z = std::abs(sim.temperatures(i) - ref.temperatures(i)) / se;
        a.worst = std::max(a.worst, z);
        if (z <= 3.0) ++a.within3;
    }
    return a;
}

} // namespace

TEST_CASE("momentum exchange is the elastic collision map", "[sim]") {
    OpenSystem sys;
    sys.masses = Eigen::Vector2d(0.5, 1.5);
    sys.pinning = Eigen::VectorXd::Zero(2);
    sys.bonds = {{0, 1, 1.0}};
    SimState st = make_state(sys);
    st.p << 1.0, 0.0;
    apply_momentum_exchange(st, sys, sys.bonds[0]);
    CHECK(st.p(0) == Catch::Approx(-0.5).margin(1e-15));
    CHECK(st.p(1) == Catch::Approx(1.5).margin(1e-15));
    // conserves momentum and kinetic energy exactly
    CHECK(st.p.sum() == Catch::Approx(1.0).margin(1e-15));
    const double ke = st.p(0) * st.p(0) / (2 * 0.5) + st.p(1) * st.p(1) / (2 * 1.5);
    CHECK(ke == Catch::Approx(1.0).margin(1e-14));
    // involution: applying it twice restores the state
    apply_momentum_exchange(st, sys, sys.bonds[0]);
    CHECK(st.p(0) == Catch::Approx(1.0).margin(1e-14));
    CHECK(st.p(1) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("velocity flip is an involution", "[sim]") {
    OpenSystem sys;
    sys.masses = Eigen::Vector2d(1.0, 2.0);
    sys.pinning = Eigen::VectorXd::Zero(2);
    SimState st = make_state(sys);
    st.p << 0.7, -0.2;
    apply_velocity_flip(st, 0);
    CHECK(st.p(0) == -0.7);
    apply_velocity_flip(st, 0);
    CHECK(st.p(0) == 0.7);
    CHECK(st.p(1) == -0.2);
}

TEST_CASE("bath-free integration conserves energy", "[sim]") {
    // Fixed-end chain, no baths: velocity Verlet holds energy to O(dt^2)
    // without secular drift.
    OpenSystem sys;
    const int n = 6;
    sys.masses.resize(n);
    for (int i = 0; i < n; ++i) sys.masses(i) = (i % 2 == 0) ? 0.75 : 0.25;
    sys.pinning = Eigen::VectorXd::Zero(n);
    sys.pinning(0) = sys.pinning(n - 1) = 1.0;
    for (int i = 0; i + 1 < n; ++i) sys.bonds.push_back({i, i + 1, 1.0});

    SimState st = make_state(sys);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        st.q(i) = 0.3 * normal(rng);
        st.p(i) = 0.3 * normal(rng);
    }
    compute_force(sys, st.q, st.force);
    const double e0 = total_energy(sys, st);
    const double dt = 1e-3;
    double worst = 0.0;
    for (int step = 0; step < 100000; ++step) {
        sim_step(st, sys, dt, rng);
        if (step % 1000 == 0)
            worst = std::max(worst, std::abs(total_energy(sys, st) - e0));
    }
    worst = std::max(worst, std::abs(total_energy(sys, st) - e0));
    // bounded shadow-energy oscillation, roughly (w_max dt)^2/8; drift would
    // accumulate orders of magnitude more over 1e5 steps
    CHECK(worst < 3e-6 * e0);
}

TEST_CASE("noise events conserve energy exactly without baths", "[sim]") {
    OpenSystem sys;
    const int n = 8;
    sys.masses.resize(n);
    for (int i = 0; i < n; ++i) sys.masses(i) = (i % 2 == 0) ? 0.5 : 1.5;
    sys.pinning = Eigen::VectorXd::Zero(n);
    sys.pinning(0) = sys.pinning(n - 1) = 1.0;
    for (int i = 0; i + 1 < n; ++i) sys.bonds.push_back({i, i + 1, 1.0});

    SimState st = make_state(sys);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < n; ++i) st.p(i) = normal(rng);
    const double e0 = total_energy(sys, st);
    std::uniform_int_distribution<int> pick_bond(0, n - 2), pick_site(0, n - 1);
    for (int rep = 0; rep < 500; ++rep) {
        apply_momentum_exchange(st, sys, sys.bonds[pick_bond(rng)]);
        apply_velocity_flip(st, pick_site(rng));
        CHECK(std::abs(total_energy(sys, st) - e0) < 1e-12 * e0);
    }
}

TEST_CASE("identical seeds reproduce bitwise identical results", "[sim]") {
    const ValidatedSpec spec = validate_spec(fig1a(6));
    SimConfig cfg;
    cfg.n_steps = 50000;
    cfg.burn_in = 5000;
    cfg.seed = 77;
    cfg.lambda = 0.4;
    cfg.noise_kind = NoiseKind::MomentumConserving;
    const MeasuredProfile a = run_ness(spec, cfg);
    const MeasuredProfile b = run_ness(spec, cfg);
    CHECK((a.temperatures - b.temperatures).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.bond_currents - b.bond_currents).cwiseAbs().maxCoeff() == 0.0);
    cfg.seed = 78;
    const MeasuredProfile c = run_ness(spec, cfg);
    CHECK((a.temperatures - c.temperatures).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("noise-free runs reproduce the covariance profile", "[sim]") {
    struct Case { int n; std::uint64_t seed; };
    for (const Case c : {Case{8, 11}, Case{16, 20260815}, Case{33, 4}}) {
        ChainSpec raw = fig1a(c.n);
        if (c.n == 33) raw.gamma_left = raw.gamma_right = 1.0;
        const ValidatedSpec spec = validate_spec(raw);
        SimConfig cfg;
        cfg.dt = 0.005;
        cfg.n_steps = 6'000'000;
        cfg.burn_in = 400'000;
        cfg.seed = c.seed;
        const MeasuredProfile sim = run_ness(spec, cfg);
        const Agreement agree = compare(sim, reference(spec));
        INFO("n = " << c.n << " worst z = " << agree.worst);
        CHECK(agree.within3 >= c.n - 1); // allow one marginal site
        CHECK(agree.worst < 5.0);
        // current agrees too
        const double jse = std::max(sim.mean_current_stderr, 1e-12);
        CHECK(std::abs(sim.mean_current - reference(spec).mean_current) < 5.0 * jse);
    }
}

TEST_CASE("both event schedulers sample the same process", "[sim]") {
    const ValidatedSpec spec = validate_spec(fig1a(8));
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.n_steps = 2'000'000;
    cfg.burn_in = 200'000;
    cfg.lambda = 1.0;
    cfg.noise_kind = NoiseKind::MomentumConserving;
    cfg.seed = 9;
    const MeasuredProfile bern = run_ness(spec, cfg);
    cfg.scheduling = EventScheduling::PoissonCounts;
    cfg.seed = 10;
    const MeasuredProfile pois = run_ness(spec, cfg);
    for (int i = 0; i < 8; ++i) {
        const double se = std::hypot(bern.temp_stderr(i), pois.temp_stderr(i));
        CHECK(std::abs(bern.temperatures(i) - pois.temperatures(i)) < 5.0 * se);
    }
}

TEST_CASE("equilibrium equipartition", "[sim]") {
    ChainSpec raw = fig1a(5);
    raw.temp_left = raw.temp_right = 1.2;
    const ValidatedSpec spec = validate_spec(raw);
    SimConfig cfg;
    cfg.dt = 0.005;
    cfg.n_steps = 3'000'000;
    cfg.burn_in = 200'000;
    cfg.seed = 15;
    const MeasuredProfile sim = run_ness(spec, cfg);
    for (int i = 0; i < 5; ++i) {
        const double se = std::max(sim.temp_stderr(i), 1e-12);
        CHECK(std::abs(sim.temperatures(i) - 1.2) < 4.0 * se);
    }
}

TEST_CASE("config validation failures carry stable codes", "[sim]") {
    const ValidatedSpec spec = validate_spec(fig1a(4));
    SimConfig cfg;
    cfg.n_steps = 1000;

    SECTION("burn-in must leave samples") {
        cfg.burn_in = 1000;
        try {
            run_ness(spec, cfg);
            FAIL("expected ConfigError");
        } catch (const Error& e) {
            CHECK(e.code() == "ConfigError");
        }
    }
    SECTION("event probability cap") {
        cfg.dt = 0.5;
        cfg.lambda = 1.0;
        cfg.noise_kind = NoiseKind::VelocityFlip;
        try {
            run_ness(spec, cfg);
            FAIL("expected ConfigError");
        } catch (const Error& e) {
            CHECK(e.code() == "ConfigError");
        }
    }
    SECTION("too few averaging blocks") {
        cfg.n_steps = 30000;
        cfg.burn_in = 0;
        cfg.block_size = 10000;
        try {
            run_ness(spec, cfg);
            FAIL("expected InsufficientBlocks");
        } catch (const Error& e) {
            CHECK(e.code() == "InsufficientBlocks");
        }
    }
}

TEST_CASE("a diverging trajectory is caught, not returned", "[sim]") {
    const ValidatedSpec spec = validate_spec(fig1a(6));
    SimConfig cfg;
    cfg.dt = 10.0; // far outside the stability region
    cfg.n_steps = 100000;
    cfg.burn_in = 0;
    try {
        run_ness(spec, cfg);
        FAIL("expected NonFiniteState");
    } catch (const Error& e) {
        CHECK(e.code() == "NonFiniteState");
    }
}

TEST_CASE("replicas shrink the error and keep determinism", "[sim]") {
    const ValidatedSpec spec = validate_spec(fig1a(4));
    SimConfig cfg;
    cfg.dt = 0.005;
    cfg.n_steps = 400'000;
    cfg.burn_in = 40'000;
    cfg.seed = 21;
    cfg.replicas = 3;
    const MeasuredProfile a = run_ness(spec, cfg);
    const MeasuredProfile b = run_ness(spec, cfg);
    CHECK(a.replicas == 3);
    CHECK((a.temperatures - b.temperatures).cwiseAbs().maxCoeff() == 0.0);

    cfg.replicas = 1;
    const MeasuredProfile single = run_ness(spec, cfg);
    CHECK(a.temp_stderr.mean() < single.temp_stderr.mean());
}
