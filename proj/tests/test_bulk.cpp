#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "dimer/bulk.hpp"
#include "dimer/covariance.hpp"
#include "dimer/model.hpp"

using namespace dimer;

TEST_CASE("dispersion fixture at the zone boundary", "[bulk]") {
    const DispersionPoint d = dispersion(M_PI, 0.75, 0.25);
    CHECK(d.phi == Catch::Approx(0.5).epsilon(1e-14));
    CHECK(d.omega_minus * d.omega_minus == Catch::Approx(8.0 / 3.0).epsilon(1e-13));
    CHECK(d.omega_plus * d.omega_plus == Catch::Approx(8.0).epsilon(1e-13));
}

TEST_CASE("dispersion branches are ordered and monotone", "[bulk]") {
    double prev_minus = 0.0, prev_plus = dispersion(1e-8, 0.6, 0.4).omega_plus;
    for (int i = 1; i <= 100; ++i) {
        const double q = M_PI * i / 100.0;
        const DispersionPoint d = dispersion(q, 0.6, 0.4);
        CHECK(d.omega_minus > prev_minus);        // acoustic rises
        CHECK(d.omega_plus <= prev_plus + 1e-14); // optical falls
        CHECK(d.omega_plus > d.omega_minus);      // gap never closes
        prev_minus = d.omega_minus;
        prev_plus = d.omega_plus;
    }
    // acoustic branch starts at zero
    CHECK(dispersion(1e-9, 0.6, 0.4).omega_minus < 1e-8);
}

TEST_CASE("phase average of the oscillatory primitive", "[bulk]") {
    // 1/|A sin psi + B cos psi|^2 averages to 2/|A conj(B) - conj(A) B|.
    // A=1, B=i: |sin + i cos|^2 = 1 exactly, so the average is 1.
    auto one = [](double) { return 1.0; };
    const double r1 = oscillatory_average(
        one, [](double) { return std::complex<double>(1.0, 0.0); },
        [](double) { return std::complex<double>(0.0, 1.0); });
    CHECK(r1 == Catch::Approx(M_PI).epsilon(1e-12)); // integral of 1 over [0, pi]

    // A=1, B=2i: average is 2/|(-2i)-(2i)| = 1/2.
    const double r2 = oscillatory_average(
        one, [](double) { return std::complex<double>(1.0, 0.0); },
        [](double) { return std::complex<double>(0.0, 2.0); });
    CHECK(r2 == Catch::Approx(0.5 * M_PI).epsilon(1e-12));
}

TEST_CASE("bulk quadrature hits the frozen even-chain fixture", "[bulk]") {
    const BulkResult r = bulk_even(0.75, 0.25, 1.0, 1.0, 1.0, 1.0);
    CHECK(std::abs(r.t_odd.total - 1.00288563479563) < 1e-9);
    CHECK(std::abs(r.t_even.total - 1.29839497563895) < 1e-9);
    CHECK(std::abs(r.current.total - 0.127241635930986) < 1e-9);
    CHECK(r.t_odd.has_branches);
    CHECK(r.current.acoustic > r.current.optical); // acoustic modes carry most heat
}

TEST_CASE("bulk quadrature hits the frozen odd-chain fixture", "[bulk]") {
    const BulkResult r = bulk_odd(0.75, 0.25, 1.5, 0.5, 1.0, 1.0);
    CHECK(std::abs(r.t_odd.total - 0.984202987) < 1e-8);
    CHECK(std::abs(r.t_even.total - 1.103832371) < 1e-8);
    CHECK(std::abs(r.current.total - 0.131216087) < 1e-8);
}

TEST_CASE("band split is additive where available", "[bulk]") {
    const BulkResult r = bulk_even(0.6, 0.4, 0.8, 1.3, 1.2, 0.6);
    for (const BandSplit* s : {&r.t_odd, &r.t_even, &r.current}) {
        REQUIRE(s->has_branches);
        CHECK(s->total == Catch::Approx(s->offset + s->acoustic + s->optical).epsilon(1e-12));
    }
}

TEST_CASE("closed forms match quadrature", "[bulk]") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> mass(0.1, 0.9), coupling(0.1, 3.0);
    for (int rep = 0; rep < 10; ++rep) {
        const double ma = mass(rng);
        const double mb = 1.0 - ma;
        if (std::abs(ma - mb) < 0.05) continue;
        const double g = coupling(rng);
        INFO("ma = " << ma << " gamma = " << g);
        const BulkResult q_even = bulk_even(ma, mb, g, g, 1.0, 1.0);
        const BulkResult c_even = closed_form_even(ma, mb, g, 1.0, 1.0);
        CHECK(std::abs(q_even.t_odd.total - c_even.t_odd.total) < 1e-8);
        CHECK(std::abs(q_even.t_even.total - c_even.t_even.total) < 1e-8);
        CHECK(std::abs(q_even.current.total - c_even.current.total) < 1e-8);
        const BulkResult q_odd = bulk_odd(ma, mb, g, g, 1.0, 1.0);
        const BulkResult c_odd = closed_form_odd(ma, mb, g, 1.0, 1.0);
        CHECK(std::abs(q_odd.t_odd.total - c_odd.t_odd.total) < 1e-8);
        CHECK(std::abs(q_odd.current.total - c_odd.current.total) < 1e-8);
        CHECK_FALSE(c_even.t_odd.has_branches); // closed route knows totals only
    }
}

TEST_CASE("odd chains with equal couplings have a uniform bulk", "[bulk]") {
    const BulkResult r = closed_form_odd(0.75, 0.25, 1.0, 1.0, 1.0);
    CHECK(r.t_odd.total == r.t_even.total);
    CHECK(r.t_odd.total == 1.0); // (T_L + T_R)/2 exactly
}

TEST_CASE("sublattice temperature crossing sits at the frozen value", "[bulk]") {
    const double g = crossing_gamma(0.75, 0.25, Parity::Even, 0.1, 1.0);
    CHECK(std::abs(g - 0.4105837138978407) < 2e-6);
}

TEST_CASE("odd-chain crossing sits exactly at equal couplings", "[bulk]") {
    const double g = crossing_gamma(0.75, 0.25, Parity::Odd, 0.5, 2.0, 1.0);
    CHECK(std::abs(g - 1.0) < 2e-6);
}

TEST_CASE("bath swap mirrors the sublattice swap", "[bulk]") {
    // Reversing the chain relabels sublattices and swaps baths, so the bath
    // weights obey I_odd(ma, mb, gl, gr) = 1 - I_even(mb, ma, gr, gl).
    const double ma = 0.7, mb = 0.3, gl = 1.4, gr = 0.6;
    const BulkResult a = bulk_even(ma, mb, gl, gr, 1.0, 1.0);
    // same gradient: complementary weights sum the bath temperatures
    const BulkResult b = bulk_even(mb, ma, gr, gl, 1.0, 1.0);
    CHECK(std::abs(a.t_odd.total + b.t_even.total - 2.0) < 1e-9);
    CHECK(std::abs(a.t_even.total + b.t_odd.total - 2.0) < 1e-9);
    CHECK(std::abs(b.current.total - a.current.total) < 1e-9);
    // gradient reversed as well: the full mirror reproduces the profile
    const BulkResult c = bulk_even(mb, ma, gr, gl, 1.0, -1.0);
    CHECK(std::abs(c.t_even.total - a.t_odd.total) < 1e-9);
    CHECK(std::abs(c.t_odd.total - a.t_even.total) < 1e-9);
    CHECK(std::abs(c.current.total + a.current.total) < 1e-9);
}

TEST_CASE("equilibrium bulk is flat with zero current", "[bulk]") {
    const BulkResult r = bulk_even(0.75, 0.25, 0.9, 1.7, 1.3, 0.0);
    CHECK(r.t_odd.total == Catch::Approx(1.3).margin(1e-12));
    CHECK(r.t_even.total == Catch::Approx(1.3).margin(1e-12));
    CHECK(std::abs(r.current.total) < 1e-12);
}

TEST_CASE("bulk formulas demand the unit-cell normalization", "[bulk]") {
    try {
        bulk_even(0.75, 0.5, 1.0, 1.0, 1.0, 1.0);
        FAIL("expected ConfigError");
    } catch (const Error& e) {
        CHECK(e.code() == "ConfigError");
    }
    try {
        bulk_even(0.5, 0.5, 1.0, 1.0, 1.0, 1.0);
        FAIL("expected DegenerateBands");
    } catch (const Error& e) {
        CHECK(e.code() == "DegenerateBands");
    }
}

TEST_CASE("bulk values agree with a long finite chain", "[bulk]") {
    ChainSpec s;
    s.n_sites = 128;
    s.mass_a = 0.6;
    s.mass_b = 0.4;
    s.gamma_left = 0.9;
    s.gamma_right = 1.2;
    s.temp_left = 1.5;
    s.temp_right = 0.5;
    const SystemMatrices m = build_system_matrices(validate_spec(s));
    const SteadyProfile prof = profile_from_covariance(solve_stationary_covariance(m).cov, m);
    const BulkResult r = bulk_even(0.6, 0.4, 0.9, 1.2, 1.0, 1.0);
    CHECK(std::abs(bulk_sublattice_mean(prof.temperatures, true) - r.t_odd.total) < 1e-6);
    CHECK(std::abs(bulk_sublattice_mean(prof.temperatures, false) - r.t_even.total) < 1e-6);
    CHECK(std::abs(prof.mean_current - r.current.total) < 1e-6);
}
