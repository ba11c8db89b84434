#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <utility>

#include "dimer/errors.hpp"
#include "dimer/quad.hpp"

namespace dimer {

// N -> infinity bulk formulas. These live in the paper's scaled units
// (k = 1, m_a + m_b = 1); unscaled inputs are rejected rather than silently
// rescaled, the CLI offers an explicit normalization helper.

struct DispersionPoint {
    double phi;
    double omega_minus;
    double omega_plus;
};

inline void require_unit_mass_sum(double mass_a, double mass_b) {
    if (!(mass_a > 0.0) || !(mass_b > 0.0))
        fail("NonPositiveMass", "masses must be positive");
    if (std::abs(mass_a + mass_b - 1.0) > 1e-9)
        fail("ConfigError",
             "bulk formulas require the scaled units m_a + m_b = 1 "
             "(rescale masses, or use the CLI normalization helper)");
}

inline void require_distinct_masses(double mass_a, double mass_b) {
    if (std::abs(mass_a - mass_b) <= 1e-12)
        fail("DegenerateBands",
             "m_a = m_b closes the band gap; bulk sublattice formulas are "
             "singular there");
}

// phi(q) = sqrt(1 - 2 m_a m_b (1 - cos q)); omega_-^2 = (1-phi)/(m_a m_b),
// omega_+^2 = (1+phi)/(m_a m_b). The acoustic root is evaluated through
// 2(1-cos q)/(1+phi) = 4 sin^2(q/2)/(1+phi) to avoid the q -> 0 cancellation.
inline DispersionPoint dispersion(double q, double mass_a, double mass_b) {
    require_unit_mass_sum(mass_a, mass_b);
    require_distinct_masses(mass_a, mass_b);
    if (q < -1e-12 || q > M_PI + 1e-12)
        fail("ConfigError", "wavenumber q must lie in [0, pi]");
    q = std::clamp(q, 0.0, M_PI);
    const double mm = mass_a * mass_b;
    const double s = std::sin(0.5 * q);
    const double phi = std::sqrt(std::max(0.0, 1.0 - 4.0 * mm * s * s));
    // (1-phi)/(m_a m_b) = 4 sin^2(q/2)/(1+phi): the m_a m_b cancels exactly
    const double w_minus = 2.0 * s / std::sqrt(1.0 + phi);
    const double w_plus = std::sqrt((1.0 + phi) / mm);
    return {phi, w_minus, w_plus};
}

// Exact phase average: <1/|A sin(psi) + B cos(psi)|^2>_psi = 2/|A B* - A* B|.
// The reduction of the finite-N integrals replaces the fast N q oscillation
// by this average, so every bulk integral is int_0^pi C(q) c_norm / W(q) dq
// with W = |A B* - A* B| and c_norm = 2 (calibrated once against finite-N
// covariance solves, then frozen).
inline constexpr double kOscillatoryNorm = 2.0;

template <class CF, class AF, class BF>
double oscillatory_average(CF&& C, AF&& A, BF&& B, QuadOptions opt = {}) {
    auto f = [&](double q) {
        const std::complex<double> a = A(q);
        const std::complex<double> b = B(q);
        const double w = 2.0 * std::abs(std::imag(a * std::conj(b)));
        if (!std::isfinite(w) || w == 0.0)
            fail("VanishingWronskian",
                 "phase-average denominator vanished at q = " + std::to_string(q));
        return C(q) * (kOscillatoryNorm / w);
    };
    QuadResult r = integrate(f, 0.0, M_PI, opt);
    if (!r.converged)
        fail("QuadratureNotConverged",
             "bulk band integral error " + std::to_string(r.error) +
                 " above tolerance");
    return r.value;
}

enum class Parity { Even, Odd };

// One bulk observable split into its band contributions:
// total = offset + acoustic + optical. Quadrature engines resolve the split;
// the closed forms only know the total and mark the split unavailable.
struct BandSplit {
    double total = 0.0;
    double offset = 0.0;
    double acoustic = 0.0;
    double optical = 0.0;
    bool has_branches = true;
};

struct BulkResult {
    BandSplit t_odd;    // sublattice of sites 1,3,5,... (masses m_a)
    BandSplit t_even;   // sublattice of sites 2,4,6,... (masses m_b)
    BandSplit current;
    Parity parity = Parity::Even;
};

namespace bulk_detail {

enum class Branch { Acoustic, Optical };

struct Params {
    double ma, mb, gl, gr;
};

inline double branch_omega(const DispersionPoint& d, Branch br) {
    return br == Branch::Acoustic ? d.omega_minus : d.omega_plus;
}

// A(q), B(q) of the boundary-determinant decomposition
// Delta = A sin(phase) + B cos(phase) for each parity, with the fast phase
// averaged out. Only the combination |A B* - A* B| matters downstream.
inline std::pair<std::complex<double>, std::complex<double>>
decomposition(Parity parity, const Params& p, double q, double w) {
    const double w2 = w * w;
    const double alpha = 2.0 - p.ma * w2;
    const double beta = 2.0 - p.mb * w2;
    const double sq = std::sin(q), sh = std::sin(0.5 * q), ch = std::cos(0.5 * q);
    if (parity == Parity::Even) {
        std::complex<double> A(ch * (1.0 - p.gl * p.gr * w2) / sh,
                               -w * (p.gl * beta + p.gr * alpha) / sq);
        std::complex<double> B(1.0 + p.gl * p.gr * w2, 0.0);
        return {A, B};
    }
    std::complex<double> A((alpha * std::cos(q) - p.gl * p.gr * w2 * beta) / sq,
                           -w * (p.gl + p.gr) * ch / sh);
    std::complex<double> B(alpha, -w * (p.gl + p.gr));
    return {A, B};
}

enum class Observable { OddSites, EvenSites, Current };

// q-space integrand numerators (jacobian |domega/dq| already folded in).
inline double numerator(Parity parity, Observable what, const Params& p,
                        double q, double w, double phi) {
    const double w2 = w * w;
    const double alpha = 2.0 - p.ma * w2;
    const double beta = 2.0 - p.mb * w2;
    const double sq = std::sin(q);
    const double ch2 = std::cos(0.5 * q) * std::cos(0.5 * q);
    if (what == Observable::Current)
        return p.gl * p.gr * w * sq / (M_PI * phi);
    if (parity == Parity::Even) {
        if (what == Observable::OddSites)
            return p.ma * p.gl * w / (2.0 * M_PI * phi) *
                   (beta * beta + 4.0 * p.gr * p.gr * w2 * ch2) / sq;
        return p.mb * p.gl * w / (2.0 * M_PI * phi) *
               (4.0 * ch2 + p.gr * p.gr * w2 * alpha * alpha) / sq;
    }
    if (what == Observable::OddSites)
        return p.ma * p.gl * w / (2.0 * M_PI * phi) *
               (4.0 * ch2 + p.gr * p.gr * w2 * beta * beta) / sq;
    return p.mb * p.gl * w / (2.0 * M_PI * phi) *
           (alpha * alpha + 4.0 * p.gr * p.gr * w2 * ch2) / sq;
}

inline double branch_integral(Parity parity, Observable what, const Params& p,
                              Branch br, const QuadOptions& opt) {
    auto C = [&](double q) {
        const DispersionPoint d = dispersion(q, p.ma, p.mb);
        return numerator(parity, what, p, q, branch_omega(d, br), d.phi);
    };
    auto A = [&](double q) {
        const DispersionPoint d = dispersion(q, p.ma, p.mb);
        return decomposition(parity, p, q, branch_omega(d, br)).first;
    };
    auto B = [&](double q) {
        const DispersionPoint d = dispersion(q, p.ma, p.mb);
        return decomposition(parity, p, q, branch_omega(d, br)).second;
    };
    return oscillatory_average(C, A, B, opt);
}

inline BulkResult bulk_quadrature(Parity parity, double mass_a, double mass_b,
                                  double gamma_l, double gamma_r, double temp,
                                  double delta_t, const QuadOptions& opt) {
    require_unit_mass_sum(mass_a, mass_b);
    require_distinct_masses(mass_a, mass_b);
    if (!(gamma_l > 0.0) || !(gamma_r > 0.0))
        fail("NonPositiveDamping", "bath couplings must be positive");
    const double t_left = temp + 0.5 * delta_t;
    const double t_right = temp - 0.5 * delta_t;
    if (t_left < 0.0 || t_right < 0.0)
        fail("NegativeTemperature", "bath temperatures must be nonnegative");

    const Params p{mass_a, mass_b, gamma_l, gamma_r};
    auto assemble = [&](Observable what, double offset, double scale) {
        BandSplit s;
        s.offset = offset;
        s.acoustic = scale * branch_integral(parity, what, p, Branch::Acoustic, opt);
        s.optical = scale * branch_integral(parity, what, p, Branch::Optical, opt);
        s.total = s.offset + s.acoustic + s.optical;
        return s;
    };

    BulkResult r;
    r.parity = parity;
    r.t_odd = assemble(Observable::OddSites, t_right, delta_t);
    r.t_even = assemble(Observable::EvenSites, t_right, delta_t);
    r.current = assemble(Observable::Current, 0.0, delta_t);
    return r;
}

} // namespace bulk_detail

// Bulk sublattice temperatures and current of long even chains (N = 2L),
// band quadrature route.
inline BulkResult bulk_even(double mass_a, double mass_b, double gamma_l,
                            double gamma_r, double temp, double delta_t,
                            QuadOptions opt = {}) {
    return bulk_detail::bulk_quadrature(Parity::Even, mass_a, mass_b, gamma_l,
                                        gamma_r, temp, delta_t, opt);
}

// Same for long odd chains (N = 2L+1).
inline BulkResult bulk_odd(double mass_a, double mass_b, double gamma_l,
                           double gamma_r, double temp, double delta_t,
                           QuadOptions opt = {}) {
    return bulk_detail::bulk_quadrature(Parity::Odd, mass_a, mass_b, gamma_l,
                                        gamma_r, temp, delta_t, opt);
}

namespace bulk_detail {

// Left-bath weight of the even sublattice (sites 2,4,...) of an even chain
// with gamma_L = gamma_R = gamma, in closed form. mu = 2 m_a m_b,
// delta = m_a - m_b, bg = gamma^2/(m_a m_b).
inline double even_chain_even_site_weight(double ma, double mb, double gamma) {
    const double mu = 2.0 * ma * mb;
    const double delta = ma - mb;
    const double bg = gamma * gamma / (ma * mb);
    const double one_m_d = 1.0 - delta; // = 2 m_b
    const double r1 = 1.0 + 2.0 * bg;
    const double r2 = 1.0 + 2.0 * bg + 2.0 * bg * bg * mu;
    const double r3 = 1.0 + 2.0 * bg * mu;
    const double sd = std::sqrt(1.0 + delta * delta);

    const double num = -(1.0 + bg) + bg * (2.0 * delta - delta * delta) -
                       delta * delta * one_m_d * one_m_d * bg * bg / r3;
    const double term1 = num / (std::sqrt(r1) * std::sqrt(r2));
    const double term2 = bg * std::abs(delta) * one_m_d * one_m_d / (sd * r3);
    const double lead = ma * (1.0 + term1 + term2);
    const double tail = mb / r3 * (-std::abs(delta) / sd + std::sqrt(r2) / std::sqrt(r1));
    return lead + tail;
}

} // namespace bulk_detail

// Closed-form bulk observables of even chains at gamma_L = gamma_R = gamma.
// The odd-sublattice weight follows from reversing the chain, which swaps
// sublattices, masses, and baths: I_odd(m_a, m_b) = 1 - I_even(m_b, m_a).
// delta = 0 keeps the |delta| terms finite, so equal masses are allowed here.
inline BulkResult closed_form_even(double mass_a, double mass_b, double gamma,
                                   double temp, double delta_t) {
    require_unit_mass_sum(mass_a, mass_b);
    if (!(gamma > 0.0))
        fail("NonPositiveDamping", "bath coupling must be positive");
    const double t_right = temp - 0.5 * delta_t;

    const double i_even = bulk_detail::even_chain_even_site_weight(mass_a, mass_b, gamma);
    const double i_odd = 1.0 - bulk_detail::even_chain_even_site_weight(mass_b, mass_a, gamma);

    const double mu = 2.0 * mass_a * mass_b;
    const double delta = mass_a - mass_b;
    const double bg = gamma * gamma / (mass_a * mass_b);
    const double sd = std::sqrt(1.0 + delta * delta);
    const double r1 = 2.0 * bg + 1.0;
    const double r2 = r1 + 2.0 * bg * bg * mu;
    const double j_coef = gamma / (bg * bg * mu * (1.0 + 4.0 * gamma * gamma)) *
                          (r1 + 2.0 * bg * bg * mu * (1.0 + delta * delta - std::abs(delta) * sd) -
                           std::sqrt(r1 * r2));

    auto flat = [](double offset, double span) {
        BandSplit s;
        s.offset = offset;
        s.total = offset + span;
        s.has_branches = false;
        return s;
    };
    BulkResult r;
    r.parity = Parity::Even;
    r.t_odd = flat(t_right, i_odd * delta_t);
    r.t_even = flat(t_right, i_even * delta_t);
    r.current = flat(0.0, j_coef * delta_t);
    return r;
}

// Closed-form bulk observables of odd chains at gamma_L = gamma_R = gamma:
// both sublattices sit exactly at the mean temperature; the current comes
// from the explicit algebraic reduction of the band integrals.
inline BulkResult closed_form_odd(double mass_a, double mass_b, double gamma,
                                  double temp, double delta_t) {
    require_unit_mass_sum(mass_a, mass_b);
    if (!(gamma > 0.0))
        fail("NonPositiveDamping", "bath coupling must be positive");

    const double mu = 2.0 * mass_a * mass_b;
    const double delta = mass_a - mass_b;
    const double bg = gamma * gamma / (mass_a * mass_b);

    const double ca = delta / mass_b - delta * bg / mass_a;
    const double cb = 1.0 / mass_b + 2.0 * mass_b * bg / mass_a;
    const double cc = bg / mass_a;
    const double f = cb / (2.0 * cc) * std::sqrt(std::max(0.0, cb * cb - 4.0 * ca * cc));
    const double g = cc * mu;
    const double h = cb * cb / (2.0 * cc) - cc * (1.0 - mu) - ca;
    const double s1 = std::sqrt(std::max(0.0, (f + h) * (f + h) - g * g));
    const double s2 = std::sqrt(std::max(0.0, (f - h) * (f - h) - g * g));
    const double j_coef = gamma * cb / (g * g) * (1.0 - (s1 + s2) / (2.0 * f));

    auto flat = [](double offset, double span) {
        BandSplit s;
        s.offset = offset;
        s.total = offset + span;
        s.has_branches = false;
        return s;
    };
    BulkResult r;
    r.parity = Parity::Odd;
    r.t_odd = flat(temp, 0.0);
    r.t_even = flat(temp, 0.0);
    r.current = flat(0.0, j_coef * delta_t);
    return r;
}

// Root of T_odd(gamma) - T_even(gamma) on [lo, hi] by bisection to 1e-6.
// Even parity sweeps gamma_L = gamma_R = gamma; odd parity keeps gamma_L
// fixed and sweeps gamma_R (the crossing sits exactly at gamma_R = gamma_L).
inline double crossing_gamma(double mass_a, double mass_b, Parity parity,
                             double gamma_lo, double gamma_hi,
                             double fixed_gamma_left = 1.0,
                             QuadOptions opt = {}) {
    if (!(gamma_lo > 0.0) || !(gamma_hi > gamma_lo))
        fail("NonPositiveDamping", "need 0 < gamma_lo < gamma_hi");
    auto diff = [&](double g) {
        BulkResult r = (parity == Parity::Even)
                           ? bulk_even(mass_a, mass_b, g, g, 1.0, 1.0, opt)
                           : bulk_odd(mass_a, mass_b, fixed_gamma_left, g, 1.0,
                                      1.0, opt);
        return r.t_odd.total - r.t_even.total;
    };
    double lo = gamma_lo, hi = gamma_hi;
    double flo = diff(lo), fhi = diff(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        fail("NoSignChange",
             "T_odd - T_even does not change sign on the given range");
    while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        const double fm = diff(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace dimer
