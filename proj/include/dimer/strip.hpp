#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "dimer/covariance.hpp"
#include "dimer/errors.hpp"
#include "dimer/model.hpp"
#include "dimer/sim.hpp"

namespace dimer {

// N x W strip of scalar-displacement particles: checkerboard masses by the
// parity of i+j (even -> mass_a), nearest-neighbor springs, fixed ends in the
// longitudinal (i) direction, periodic wrap in the transverse (j) direction,
// baths on every site of layers i=1 and i=N.
//
// Wrap conventions: W=1 has no transverse bonds (a wrap would be a
// self-loop); W=2 keeps both wrap bonds, so transverse neighbors are doubly
// coupled (the literal periodic graph).
struct StripSpec {
    int length = 0; // N, longitudinal layers
    int width = 0;  // W, transverse ring size
    double mass_a = 1.0;
    double mass_b = 1.0;
    double spring_k = 1.0;
    double gamma_left = 1.0;
    double gamma_right = 1.0;
    double temp_left = 1.0;
    double temp_right = 1.0;

    // 1-based (i, j); i+j even -> mass_a
    double mass_of(int i, int j) const {
        return ((i + j) % 2 == 0) ? mass_a : mass_b;
    }
    int site_index0(int i, int j) const { return (i - 1) * width + (j - 1); }
    int n_sites() const { return length * width; }
};

class ValidatedStrip {
public:
    const StripSpec& get() const noexcept { return spec_; }
    const StripSpec* operator->() const noexcept { return &spec_; }

private:
    friend ValidatedStrip validate_strip(const StripSpec&);
    explicit ValidatedStrip(const StripSpec& s) : spec_(s) {}
    StripSpec spec_;
};

inline ValidatedStrip validate_strip(const StripSpec& s) {
    std::vector<std::string> codes;
    std::string detail;
    auto flag = [&](const char* code, const std::string& what) {
        codes.emplace_back(code);
        detail += (detail.empty() ? "" : "; ") + what;
    };
    if (s.length < 2) flag("ZeroSites", "strip length must be >= 2");
    if (s.width < 1) flag("ZeroSites", "strip width must be >= 1");
    if (!(s.mass_a > 0.0) || !(s.mass_b > 0.0))
        flag("NonPositiveMass", "masses must be positive");
    if (!(s.spring_k > 0.0)) flag("NonPositiveSpring", "spring_k must be positive");
    if (!(s.gamma_left > 0.0) || !(s.gamma_right > 0.0))
        flag("NonPositiveDamping", "bath couplings must be positive");
    if (s.temp_left < 0.0 || s.temp_right < 0.0)
        flag("NegativeTemperature", "bath temperatures must be nonnegative");
    if (!codes.empty()) throw ValidationError(codes, "invalid strip spec: " + detail);
    return ValidatedStrip(s);
}

namespace strip_detail {

// Longitudinal bonds first, grouped by cut index i (all j for cut i before
// cut i+1), then transverse bonds. The sim route relies on this ordering to
// aggregate per-cut currents.
inline std::vector<SimBond> strip_bonds(const StripSpec& s) {
    std::vector<SimBond> bonds;
    for (int i = 1; i < s.length; ++i)
        for (int j = 1; j <= s.width; ++j)
            bonds.push_back({s.site_index0(i, j), s.site_index0(i + 1, j), s.spring_k});
    if (s.width >= 2) {
        for (int i = 1; i <= s.length; ++i) {
            for (int j = 1; j < s.width; ++j)
                bonds.push_back({s.site_index0(i, j), s.site_index0(i, j + 1), s.spring_k});
            bonds.push_back({s.site_index0(i, s.width), s.site_index0(i, 1), s.spring_k});
        }
    }
    return bonds;
}

} // namespace strip_detail

inline OpenSystem open_system_from(const ValidatedStrip& vs) {
    const StripSpec& s = vs.get();
    OpenSystem sys;
    sys.masses.resize(s.n_sites());
    for (int i = 1; i <= s.length; ++i)
        for (int j = 1; j <= s.width; ++j)
            sys.masses(s.site_index0(i, j)) = s.mass_of(i, j);
    sys.pinning = Eigen::VectorXd::Zero(s.n_sites());
    for (int j = 1; j <= s.width; ++j) {
        sys.pinning(s.site_index0(1, j)) += s.spring_k; // fixed wall i=0
        sys.pinning(s.site_index0(s.length, j)) += s.spring_k; // wall i=N+1
    }
    sys.bonds = strip_detail::strip_bonds(s);
    for (int j = 1; j <= s.width; ++j) {
        sys.baths.push_back({s.site_index0(1, j), s.gamma_left, s.temp_left});
        sys.baths.push_back({s.site_index0(s.length, j), s.gamma_right, s.temp_right});
    }
    return sys;
}

// Dense matrices for the Lyapunov route (same layout contract as the chain:
// x = (q_1..q_M, p_1..p_M) with sites flattened row-major by layer).
inline SystemMatrices build_strip(const ValidatedStrip& vs) {
    const OpenSystem sys = open_system_from(vs);
    const int n = sys.size();
    SystemMatrices m;
    m.masses = sys.masses;
    m.force = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) m.force(i, i) = sys.pinning(i);
    for (const SimBond& b : sys.bonds) {
        m.force(b.a, b.a) += b.k;
        m.force(b.b, b.b) += b.k;
        m.force(b.a, b.b) -= b.k;
        m.force(b.b, b.a) -= b.k;
    }
    m.damping = Eigen::VectorXd::Zero(n);
    m.baths.clear();
    for (const SimBath& b : sys.baths) {
        m.damping(b.site) += b.gamma;
        m.baths.push_back({b.site + 1, b.gamma, b.temp}); // interface is 1-based
    }
    return m;
}

enum class StripMethod { Lyapunov, Simulate };

struct StripProfile {
    Eigen::MatrixXd temperatures; // length x width
    Eigen::MatrixXd temp_stderr;  // zeros for the deterministic route
    Eigen::VectorXd layer_means;  // length
    Eigen::VectorXd layer_stderr;
    Eigen::VectorXd cut_currents; // length-1 longitudinal cuts (summed over j)
    Eigen::VectorXd cut_stderr;
    double mean_current = 0.0;
    double mean_current_stderr = 0.0;
};

namespace strip_detail {

inline StripProfile from_covariance(const ValidatedStrip& vs) {
    const StripSpec& s = vs.get();
    const int n = s.n_sites();
    if (2 * n > 4000)
        fail("TooLarge", "Lyapunov route capped at 2*N*W <= 4000; got " +
                             std::to_string(2 * n) + " (use the simulate route)");
    SystemMatrices m = build_strip(vs);
    CovarianceSolution sol = solve_stationary_covariance(m);

    StripProfile out;
    out.temperatures.resize(s.length, s.width);
    out.temp_stderr = Eigen::MatrixXd::Zero(s.length, s.width);
    for (int i = 1; i <= s.length; ++i)
        for (int j = 1; j <= s.width; ++j) {
            const int a = s.site_index0(i, j);
            out.temperatures(i - 1, j - 1) = sol.cov(n + a, n + a) / m.masses(a);
        }
    out.layer_means = out.temperatures.rowwise().mean();
    out.layer_stderr = Eigen::VectorXd::Zero(s.length);

    out.cut_currents = Eigen::VectorXd::Zero(s.length - 1);
    out.cut_stderr = Eigen::VectorXd::Zero(s.length - 1);
    for (int i = 1; i < s.length; ++i) {
        double sum = 0.0;
        for (int j = 1; j <= s.width; ++j) {
            const int a = s.site_index0(i, j), b = s.site_index0(i + 1, j);
            sum += s.spring_k * (sol.cov(a, n + a) - sol.cov(b, n + a)) / m.masses(a);
        }
        out.cut_currents(i - 1) = sum;
    }
    out.mean_current = out.cut_currents.size() > 0 ? out.cut_currents.mean() : 0.0;
    out.mean_current_stderr = 0.0;
    return out;
}

inline StripProfile from_simulation(const ValidatedStrip& vs, const SimConfig& cfg) {
    const StripSpec& s = vs.get();
    OpenSystem sys = open_system_from(vs);
    MeasuredProfile mp = run_ness(sys, cfg);

    StripProfile out;
    out.temperatures.resize(s.length, s.width);
    out.temp_stderr.resize(s.length, s.width);
    for (int i = 1; i <= s.length; ++i)
        for (int j = 1; j <= s.width; ++j) {
            const int a = s.site_index0(i, j);
            out.temperatures(i - 1, j - 1) = mp.temperatures(a);
            out.temp_stderr(i - 1, j - 1) = mp.temp_stderr(a);
        }
    out.layer_means = out.temperatures.rowwise().mean();
    out.layer_stderr.resize(s.length);
    for (int i = 0; i < s.length; ++i)
        // treats transverse sites as independent; a mild approximation,
        // flagged in the docs
        out.layer_stderr(i) = out.temp_stderr.row(i).norm() / s.width;

    out.cut_currents = Eigen::VectorXd::Zero(s.length - 1);
    out.cut_stderr = Eigen::VectorXd::Zero(s.length - 1);
    for (int i = 0; i + 1 < s.length; ++i) {
        double sum = 0.0, var = 0.0;
        for (int j = 0; j < s.width; ++j) {
            const int bond = i * s.width + j; // longitudinal bonds come first
            sum += mp.bond_currents(bond);
            var += mp.current_stderr(bond) * mp.current_stderr(bond);
        }
        out.cut_currents(i) = sum;
        out.cut_stderr(i) = std::sqrt(var);
    }
    out.mean_current = out.cut_currents.size() > 0 ? out.cut_currents.mean() : 0.0;
    out.mean_current_stderr =
        out.cut_stderr.size() > 0 ? out.cut_stderr.mean() / std::sqrt(double(out.cut_stderr.size())) : 0.0;
    return out;
}

} // namespace strip_detail

inline StripProfile strip_profile(const ValidatedStrip& vs,
                                  StripMethod method = StripMethod::Lyapunov,
                                  const SimConfig& cfg = {}) {
    return method == StripMethod::Lyapunov
               ? strip_detail::from_covariance(vs)
               : strip_detail::from_simulation(vs, cfg);
}

} // namespace dimer
