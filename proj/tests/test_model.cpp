#include <catch_amalgamated.hpp>

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
} // namespace

TEST_CASE("spec validation accepts the reference chain", "[model]") {
    ChainSpec s = fig1a(32);
    REQUIRE_NOTHROW(validate_spec(s));
}

TEST_CASE("spec validation collects every violation", "[model]") {
    ChainSpec s;
    s.n_sites = 0;
    s.mass_a = -1.0;
    s.spring_k = 0.0;
    s.gamma_left = -0.5;
    s.temp_right = -2.0;
    try {
        validate_spec(s);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.has("ZeroSites"));
        CHECK(e.has("NonPositiveMass"));
        CHECK(e.has("NonPositiveSpring"));
        CHECK(e.has("NonPositiveDamping"));
        CHECK(e.has("NegativeTemperature"));
    }
}

TEST_CASE("masses alternate starting from sublattice a", "[model]") {
    const ValidatedSpec spec = validate_spec(fig1a(4));
    const SystemMatrices m = build_system_matrices(spec);
    REQUIRE(m.n() == 4);
    CHECK(m.masses(0) == 0.75);
    CHECK(m.masses(1) == 0.25);
    CHECK(m.masses(2) == 0.75);
    CHECK(m.masses(3) == 0.25);
}

TEST_CASE("force matrix is the fixed-end tridiagonal laplacian", "[model]") {
    ChainSpec s = fig1a(5);
    s.spring_k = 1.7;
    s.pin_k0 = 0.3;
    const SystemMatrices m = build_system_matrices(validate_spec(s));
    for (int i = 0; i < 5; ++i) {
        CHECK(m.force(i, i) == Catch::Approx(2.0 * 1.7 + 0.3));
        for (int j = 0; j < 5; ++j) {
            if (std::abs(i - j) == 1) CHECK(m.force(i, j) == Catch::Approx(-1.7));
            if (std::abs(i - j) > 1) CHECK(m.force(i, j) == 0.0);
        }
    }
    CHECK((m.force - m.force.transpose()).norm() == 0.0);
}

TEST_CASE("drift matrix has the block layout [[0,-M^-1],[Phi,Gamma M^-1]]", "[model]") {
    const ValidatedSpec spec = validate_spec(fig1a(3));
    const SystemMatrices m = build_system_matrices(spec);
    const Eigen::MatrixXd a = m.drift();
    const int n = 3;
    REQUIRE(a.rows() == 2 * n);
    // top-left zero, top-right -M^{-1}
    CHECK(a.topLeftCorner(n, n).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < n; ++i) {
        CHECK(a(i, n + i) == Catch::Approx(-1.0 / m.masses(i)));
        CHECK(a(n + i, n + i) == Catch::Approx(m.damping(i) / m.masses(i)));
    }
    CHECK((a.bottomLeftCorner(n, n) - m.force).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("diffusion is nonzero only at the bath momentum slots", "[model]") {
    ChainSpec s = fig1a(4);
    s.gamma_left = 0.8;
    s.gamma_right = 1.3;
    const SystemMatrices m = build_system_matrices(validate_spec(s));
    const Eigen::VectorXd d = m.diffusion_diagonal();
    REQUIRE(d.size() == 8);
    StateLayout layout{4};
    for (int i = 0; i < 8; ++i) {
        if (i == layout.momentum_index0(1))
            CHECK(d(i) == Catch::Approx(2.0 * 0.8 * 1.5));
        else if (i == layout.momentum_index0(4))
            CHECK(d(i) == Catch::Approx(2.0 * 1.3 * 0.5));
        else
            CHECK(d(i) == 0.0);
    }
}

TEST_CASE("state layout maps 1-based sites to position/momentum slots", "[model]") {
    StateLayout layout{6};
    CHECK(layout.dim() == 12);
    CHECK(layout.position_index0(1) == 0);
    CHECK(layout.position_index0(6) == 5);
    CHECK(layout.momentum_index0(1) == 6);
    CHECK(layout.momentum_index0(6) == 11);
}
