#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "dimer/errors.hpp"

namespace dimer {

enum class Sublattice { A, B };

// Physical description of a 1D alternating-mass chain with fixed ends
// (q_0 = q_{N+1} = 0) and Langevin baths on sites 1 and N. Sites are 1-based.
struct ChainSpec {
    int n_sites = 0;
    double mass_a = 1.0;
    double mass_b = 1.0;
    double spring_k = 1.0;
    double pin_k0 = 0.0; // on-site spring, 0 = unpinned
    double gamma_left = 1.0;
    double gamma_right = 1.0;
    double temp_left = 1.0;
    double temp_right = 1.0;
    Sublattice first_mass = Sublattice::A;

    double mass_of(int site) const {
        bool on_a = (site % 2) == 1;
        if (first_mass == Sublattice::B) on_a = !on_a;
        return on_a ? mass_a : mass_b;
    }
};

// Proof-of-validation wrapper: the only way to get one is validate_spec().
class ValidatedSpec {
public:
    const ChainSpec& get() const noexcept { return spec_; }
    const ChainSpec* operator->() const noexcept { return &spec_; }

private:
    friend ValidatedSpec validate_spec(const ChainSpec&);
    explicit ValidatedSpec(const ChainSpec& s) : spec_(s) {}
    ChainSpec spec_;
};

inline ValidatedSpec validate_spec(const ChainSpec& s) {
    std::vector<std::string> codes;
    std::string detail;
    auto flag = [&](const char* code, const std::string& what) {
        codes.emplace_back(code);
        if (!detail.empty()) detail += "; ";
        detail += what;
    };
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    auto nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };

    if (s.n_sites < 1)
        flag("ZeroSites", "n_sites must be >= 1, got " + std::to_string(s.n_sites));
    if (!positive(s.mass_a))
        flag("NonPositiveMass", "mass_a must be > 0");
    if (!positive(s.mass_b))
        flag("NonPositiveMass", "mass_b must be > 0");
    if (!positive(s.spring_k))
        flag("NonPositiveSpring", "spring_k must be > 0");
    if (!nonneg(s.pin_k0))
        flag("NonPositiveSpring", "pin_k0 must be >= 0");
    if (!positive(s.gamma_left))
        flag("NonPositiveDamping", "gamma_left must be > 0");
    if (!positive(s.gamma_right))
        flag("NonPositiveDamping", "gamma_right must be > 0");
    if (!nonneg(s.temp_left))
        flag("NegativeTemperature", "temp_left must be >= 0");
    if (!nonneg(s.temp_right))
        flag("NegativeTemperature", "temp_right must be >= 0");

    if (!codes.empty())
        throw ValidationError(codes, "invalid chain spec: " + detail);
    return ValidatedSpec(s);
}

// Coordinate ordering contract x = (q_1..q_N, p_1..p_N). Interfaces speak
// 1-based sites; the *0 accessors return 0-based storage indices.
struct StateLayout {
    int n_sites = 0;

    int dim() const noexcept { return 2 * n_sites; }
    int position_index(int site) const noexcept { return site; }          // 1-based
    int momentum_index(int site) const noexcept { return n_sites + site; } // 1-based
    int position_index0(int site) const noexcept { return site - 1; }
    int momentum_index0(int site) const noexcept { return n_sites + site - 1; }
};

// Per-site Langevin bath attachment.
struct BathAttachment {
    int site = 0; // 1-based
    double gamma = 0.0;
    double temp = 0.0;
};

// M, Phi, Gamma and the derived drift/diffusion of dx/dt = -a x + xi.
// Diagonal matrices are stored as their diagonals; drift() and
// diffusion() materialize the 2N-dimensional operators.
struct SystemMatrices {
    Eigen::VectorXd masses;  // diag of M
    Eigen::MatrixXd force;   // Phi, symmetric
    Eigen::VectorXd damping; // diag of Gamma
    std::vector<BathAttachment> baths;

    int n() const noexcept { return static_cast<int>(masses.size()); }

    // a = [[0, -M^-1], [Phi, Gamma M^-1]], so that <xx^T> solves a b + b a^T = d.
    Eigen::MatrixXd drift() const {
        const int N = n();
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * N, 2 * N);
        a.topRightCorner(N, N) = (-masses.cwiseInverse()).asDiagonal();
        a.bottomLeftCorner(N, N) = force;
        a.bottomRightCorner(N, N) =
            (damping.array() / masses.array()).matrix().asDiagonal();
        return a;
    }

    // d is diagonal; momentum entry of a bath site holds 2*gamma*T.
    Eigen::VectorXd diffusion_diagonal() const {
        const int N = n();
        Eigen::VectorXd d = Eigen::VectorXd::Zero(2 * N);
        for (const auto& b : baths)
            d[N + b.site - 1] += 2.0 * b.gamma * b.temp;
        return d;
    }

    Eigen::MatrixXd diffusion() const {
        return diffusion_diagonal().asDiagonal();
    }
};

inline SystemMatrices build_system_matrices(const ValidatedSpec& vs) {
    const ChainSpec& s = vs.get();
    const int N = s.n_sites;
    SystemMatrices m;

    m.masses.resize(N);
    for (int i = 1; i <= N; ++i) m.masses[i - 1] = s.mass_of(i);

    // Fixed ends make every diagonal entry 2k + k_o, including boundaries.
    m.force = Eigen::MatrixXd::Zero(N, N);
    for (int i = 0; i < N; ++i) {
        m.force(i, i) = 2.0 * s.spring_k + s.pin_k0;
        if (i + 1 < N) {
            m.force(i, i + 1) = -s.spring_k;
            m.force(i + 1, i) = -s.spring_k;
        }
    }

    m.damping = Eigen::VectorXd::Zero(N);
    m.damping[0] += s.gamma_left;
    m.damping[N - 1] += s.gamma_right; // N=1: both baths act on the single site

    m.baths.push_back({1, s.gamma_left, s.temp_left});
    m.baths.push_back({N, s.gamma_right, s.temp_right});
    return m;
}

} // namespace dimer
