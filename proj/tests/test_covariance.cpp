#include <catch_amalgamated.hpp>

#include <random>

#include "dimer/covariance.hpp"
#include "dimer/model.hpp"

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

ChainSpec random_spec(std::mt19937& rng, int n, bool equilibrium = false) {
    std::uniform_real_distribution<double> mass(0.2, 2.0), coupling(0.3, 2.5),
        spring(0.5, 2.0), temp(0.4, 2.0);
    ChainSpec s;
    s.n_sites = n;
    s.mass_a = mass(rng);
    s.mass_b = mass(rng);
    s.spring_k = spring(rng);
    s.pin_k0 = (rng() % 2) ? 0.3 : 0.0;
    s.gamma_left = coupling(rng);
    s.gamma_right = coupling(rng);
    s.temp_left = temp(rng);
    s.temp_right = equilibrium ? s.temp_left : temp(rng);
    return s;
}

} // namespace

TEST_CASE("N=2 covariance matches the exact rational fixture", "[covariance]") {
    const ValidatedSpec spec = validate_spec(fig1a(2));
    const Eigen::MatrixXd b = solve_stationary_covariance(build_system_matrices(spec)).cov;
    Eigen::Matrix4d want;
    want << 7.0 / 8, 3.0 / 8, 0.0, 1.0 / 24,
            3.0 / 8, 11.0 / 24, -1.0 / 8, 0.0,
            0.0, -1.0 / 8, 33.0 / 32, 1.0 / 32,
            1.0 / 24, 0.0, 1.0 / 32, 13.0 / 96;
    CHECK((b - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("N=4 temperatures and current match the exact rational fixture", "[covariance]") {
    const ValidatedSpec spec = validate_spec(fig1a(4));
    const SystemMatrices m = build_system_matrices(spec);
    const SteadyProfile prof = profile_from_covariance(solve_stationary_covariance(m).cov, m);
    const double want_t[4] = {1215.0 / 871, 4551.0 / 3484, 3455.0 / 3484, 466.0 / 871};
    for (int i = 0; i < 4; ++i)
        CHECK(prof.temperatures(i) == Catch::Approx(want_t[i]).epsilon(1e-12));
    for (int i = 0; i < 3; ++i)
        CHECK(prof.bond_currents(i) == Catch::Approx(122.0 / 871).epsilon(1e-12));
}

TEST_CASE("N=8 profile matches the frozen fixture", "[covariance]") {
    const ValidatedSpec spec = validate_spec(fig1a(8));
    const SystemMatrices m = build_system_matrices(spec);
    const SteadyProfile prof = profile_from_covariance(solve_stationary_covariance(m).cov, m);
    const double want_t[8] = {1.4043151693, 1.3206676305, 1.0346810413, 1.3010486822,
                              0.9957727364, 1.2900007436, 0.9426803805, 0.5318949436};
    for (int i = 0; i < 8; ++i)
        CHECK(std::abs(prof.temperatures(i) - want_t[i]) < 1e-9);
    CHECK(std::abs(prof.mean_current - 0.1275797743) < 1e-9);
}

TEST_CASE("Schur solve agrees with the vectorized oracle", "[covariance]") {
    std::mt19937 rng(2026);
    for (int n = 1; n <= 8; ++n) {
        for (int rep = 0; rep < 3; ++rep) {
            const ValidatedSpec spec = validate_spec(random_spec(rng, n));
            const SystemMatrices m = build_system_matrices(spec);
            const Eigen::MatrixXd fast = solve_stationary_covariance(m).cov;
            const Eigen::MatrixXd slow = kronecker_covariance(m).cov;
            INFO("n = " << n << " rep = " << rep);
            CHECK((fast - slow).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("vectorized oracle rejects chains past its size cap", "[covariance]") {
    const ValidatedSpec spec = validate_spec(fig1a(17));
    try {
        kronecker_covariance(build_system_matrices(spec));
        FAIL("expected TooLarge");
    } catch (const Error& e) {
        CHECK(e.code() == "TooLarge");
    }
}

TEST_CASE("equilibrium covariance is the Gibbs state", "[covariance]") {
    std::mt19937 rng(7);
    for (int rep = 0; rep < 6; ++rep) {
        const ValidatedSpec spec = validate_spec(random_spec(rng, 2 + int(rng() % 9), true));
        const SystemMatrices m = build_system_matrices(spec);
        const int n = m.n();
        const double temp = spec->temp_left;
        const Eigen::MatrixXd b = solve_stationary_covariance(m).cov;
        // b_pp = T M, b_qq = T Phi^{-1}, b_qp = 0
        for (int i = 0; i < n; ++i)
            CHECK(std::abs(b(n + i, n + i) - temp * m.masses(i)) < 1e-10);
        const Eigen::MatrixXd want_qq = temp * m.force.inverse();
        CHECK((b.topLeftCorner(n, n) - want_qq).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(b.topRightCorner(n, n).cwiseAbs().maxCoeff() < 1e-10);
        const SteadyProfile prof = profile_from_covariance(b, m);
        for (int i = 0; i + 1 < n; ++i)
            CHECK(std::abs(prof.bond_currents(i)) < 1e-10);
    }
}

TEST_CASE("current is positive and uniform across bonds when T_L > T_R", "[covariance]") {
    const ValidatedSpec spec = validate_spec(fig1a(32));
    const SystemMatrices m = build_system_matrices(spec);
    const SteadyProfile prof = profile_from_covariance(solve_stationary_covariance(m).cov, m);
    REQUIRE(prof.bond_currents.size() == 31);
    for (int i = 0; i < 31; ++i) {
        CHECK(prof.bond_currents(i) > 0.0);
        CHECK(prof.bond_currents(i) == Catch::Approx(prof.mean_current).epsilon(1e-10));
    }
    // profile oscillates with period two in the bulk; at these couplings the
    // lighter sublattice (even 1-based sites, odd 0-based indices) runs hotter
    for (int site = 9; site <= 24; site += 2) {
        CHECK(prof.temperatures(site) > prof.temperatures(site - 1));
        CHECK(prof.temperatures(site) > prof.temperatures(site + 1));
    }
}

TEST_CASE("temperatures are bracketed by the bath temperatures", "[covariance]") {
    std::mt19937 rng(99);
    for (int rep = 0; rep < 5; ++rep) {
        const ValidatedSpec spec = validate_spec(random_spec(rng, 3 + int(rng() % 10)));
        const SystemMatrices m = build_system_matrices(spec);
        const SteadyProfile prof =
            profile_from_covariance(solve_stationary_covariance(m).cov, m);
        // T_i = I_i T_L + (1-I_i) T_R with I_i in [0,1], so site temperatures
        // never leave the bath interval.
        const double lo = std::min(spec->temp_left, spec->temp_right) - 1e-9;
        const double hi = std::max(spec->temp_left, spec->temp_right) + 1e-9;
        for (int i = 0; i < m.n(); ++i) {
            CHECK(prof.temperatures(i) >= lo);
            CHECK(prof.temperatures(i) <= hi);
        }
    }
}

TEST_CASE("a zero-mode system is reported as unstable", "[covariance]") {
    // Free-floating pair (no walls, no pinning): uniform translation never
    // damps in position, so no stationary covariance exists.
    SystemMatrices m;
    m.masses = Eigen::Vector2d(1.0, 1.0);
    m.force.resize(2, 2);
    m.force << 1.0, -1.0, -1.0, 1.0;
    m.damping = Eigen::Vector2d(0.5, 0.5);
    m.baths = {{1, 0.5, 1.0}, {2, 0.5, 1.0}};
    try {
        solve_stationary_covariance(m);
        FAIL("expected UnstableDrift");
    } catch (const Error& e) {
        CHECK(e.code() == "UnstableDrift");
    }
}
