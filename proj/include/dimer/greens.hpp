#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <utility>
#include <vector>

#include "dimer/errors.hpp"
#include "dimer/model.hpp"
#include "dimer/quad.hpp"

namespace dimer {

using Complex = std::complex<double>;

// Unit-cell transfer matrix in the monic convention c_j = (2k+k_o-m_j w^2)/k,
// so that D_j = c_j D_{j-1} - D_{j-2} generates the scaled chain determinants.
// At k=1, k_o=0 this is the textbook B = [[ab-1, -b], [a, -1]] with
// a = 2-m_a w^2, b = 2-m_b w^2.
struct TransferMatrix {
    Eigen::Matrix2d b;
    double trace() const { return b(0, 0) + b(1, 1); }
    double cos_q() const { return 0.5 * trace(); }
    bool in_band() const { return std::abs(cos_q()) <= 1.0; }
    double q() const { return std::acos(std::clamp(cos_q(), -1.0, 1.0)); }
};

inline TransferMatrix transfer_matrix(double omega, double mass_a, double mass_b,
                                      double spring_k = 1.0, double pin_k0 = 0.0) {
    const double w2 = omega * omega;
    const double ca = (2.0 * spring_k + pin_k0 - mass_a * w2) / spring_k;
    const double cb = (2.0 * spring_k + pin_k0 - mass_b * w2) / spring_k;
    TransferMatrix t;
    t.b << ca * cb - 1.0, -cb, ca, -1.0;
    return t;
}

// Positive band-edge frequencies of the infinite alternating chain, sorted:
// cos q = +1 gives the acoustic bottom / optical top pair, cos q = -1 the
// inner pair; roots of m_a m_b w^4 - c(m_a+m_b) w^2 + (c^2 - 4k^2)shape with
// c = 2k+k_o.
inline std::vector<double> band_edges(double mass_a, double mass_b,
                                      double spring_k = 1.0, double pin_k0 = 0.0) {
    const double c = 2.0 * spring_k + pin_k0;
    std::vector<double> w2;
    // cos q = -1: c_a c_b = 0
    w2.push_back(c / mass_a);
    w2.push_back(c / mass_b);
    // cos q = +1: c_a c_b = 4k^2, i.e. m_a m_b w^4 - c(m_a+m_b)w^2 + c^2-4k^2 = 0
    const double A = mass_a * mass_b;
    const double B = -c * (mass_a + mass_b);
    const double C = c * c - 4.0 * spring_k * spring_k;
    const double disc = B * B - 4.0 * A * C;
    if (disc >= 0.0) {
        const double r = std::sqrt(disc);
        for (double root : {(-B - r) / (2.0 * A), (-B + r) / (2.0 * A)})
            if (root > 0.0) w2.push_back(root);
    }
    std::vector<double> out;
    for (double v : w2)
        if (v > 0.0) out.push_back(std::sqrt(v));
    std::sort(out.begin(), out.end());
    return out;
}

namespace greens_detail {

// One value of a growing determinant sequence: man * 2^ex. Mantissas inside
// a sweep share the running exponent so the three-term recursion subtracts
// exactly; the sweep rescales both carried values when they leave
// [2^-512, 2^512].
struct ScaledSeq {
    std::vector<double> man;
    std::vector<long> ex;
};

// Monic determinant recursion over the site masses listed in `c` (already
// divided by k). Seeds (d_prev2, d_prev1) are the two values *before* the
// first listed site; out stores one entry per site plus the two seeds.
inline ScaledSeq run_recursion(const std::vector<double>& c) {
    ScaledSeq s;
    const int n = static_cast<int>(c.size());
    s.man.assign(n + 2, 0.0);
    s.ex.assign(n + 2, 0);
    double prev2 = 0.0, prev1 = 1.0; // D_{i,i-2} = 0, D_{i,i-1} = 1
    long e = 0;
    s.man[0] = prev2;
    s.man[1] = prev1;
    for (int j = 0; j < n; ++j) {
        double cur = c[j] * prev1 - prev2;
        double mag = std::max(std::abs(cur), std::abs(prev1));
        if (mag > 0x1p512) {
            cur = std::ldexp(cur, -512);
            prev1 = std::ldexp(prev1, -512);
            e += 512;
        } else if (mag > 0.0 && mag < 0x1p-512) {
            cur = std::ldexp(cur, 512);
            prev1 = std::ldexp(prev1, 512);
            e -= 512;
        }
        prev2 = prev1;
        prev1 = cur;
        s.man[j + 2] = cur;
        s.ex[j + 2] = e;
    }
    return s;
}

struct ScaledC {
    Complex m{0.0, 0.0};
    long e = 0;
};

inline ScaledC normalize(ScaledC v) {
    const double a = std::abs(v.m.real()) + std::abs(v.m.imag());
    if (a == 0.0) return {Complex(0.0, 0.0), 0};
    int k = 0;
    std::frexp(a, &k);
    if (k > 256 || k < -256) {
        v.m = Complex(std::ldexp(v.m.real(), -k), std::ldexp(v.m.imag(), -k));
        v.e += k;
    }
    return v;
}

// Accumulates sum of coef_t * man_t * 2^{ex_t} with exponent alignment.
struct ScaledSum {
    Complex m{0.0, 0.0};
    long e = 0;
    bool empty = true;

    void add(Complex coef, double man, long ex) {
        if (man == 0.0 || (coef.real() == 0.0 && coef.imag() == 0.0)) return;
        if (empty) {
            m = coef * man;
            e = ex;
            empty = false;
            return;
        }
        if (ex > e) {
            const long shift = e - ex;
            m = Complex(std::ldexp(m.real(), static_cast<int>(std::max<long>(shift, -2000))),
                        std::ldexp(m.imag(), static_cast<int>(std::max<long>(shift, -2000))));
            e = ex;
        }
        const long shift = std::max<long>(ex - e, -2000);
        m += coef * std::ldexp(man, static_cast<int>(shift));
    }

    ScaledC value() const { return normalize({m, e}); }
};

inline Complex ratio(const ScaledC& num, const ScaledC& den, long extra_pow2 = 0) {
    if (den.m == Complex(0.0, 0.0))
        fail("SolverBreakdown", "vanishing boundary determinant");
    Complex r = num.m / den.m;
    const long shift = num.e - den.e + extra_pow2;
    const int s = static_cast<int>(std::clamp<long>(shift, -4000, 4000));
    return Complex(std::ldexp(r.real(), s), std::ldexp(r.imag(), s));
}

} // namespace greens_detail

// Determinants f(l) = D_{1,2l} and g(l) = D_{1,2l-1} of the free chain
// [-M w^2 + Phi] with k=1, k_o=0 and first mass mass_a. Inside the bands
// these are the closed trig forms; in the gaps (|cos q| >= 1) the values are
// produced by the scaled recursion (matrix-power route), so they stay exact
// up to the range of double (then saturate to +-inf).
inline std::pair<double, double> determinants_f_g(int l, double omega,
                                                  double mass_a, double mass_b) {
    if (l < 0) fail("ZeroSites", "determinant index l must be >= 0");
    if (l == 0) return {1.0, 0.0};
    const double w2 = omega * omega;
    const double alpha = 2.0 - mass_a * w2;
    const TransferMatrix t = transfer_matrix(omega, mass_a, mass_b);
    const double cq = t.cos_q();
    if (std::abs(cq) < 1.0 - 1e-9) {
        const double q = std::acos(cq);
        const double f = std::sin((l + 0.5) * q) / std::sin(0.5 * q);
        const double g = alpha * std::sin(l * q) / std::sin(q);
        return {f, g};
    }
    // Gap / band-edge route: explicit scaled recursion over 2l sites.
    std::vector<double> c(2 * static_cast<size_t>(l));
    const double cb = 2.0 - mass_b * w2;
    for (int j = 0; j < 2 * l; ++j) c[j] = (j % 2 == 0) ? alpha : cb;
    greens_detail::ScaledSeq s = greens_detail::run_recursion(c);
    auto fetch = [&](int idx) {
        const double v = s.man[idx + 1];
        const long e = (idx + 1 >= 2) ? s.ex[idx + 1] : 0;
        if (v == 0.0) return 0.0;
        if (e > 2000) return v > 0 ? std::numeric_limits<double>::infinity()
                                   : -std::numeric_limits<double>::infinity();
        return std::ldexp(v, static_cast<int>(e));
    };
    return {fetch(2 * l), fetch(2 * l - 1)};
}

// Per-frequency determinant sweeps for one chain: everything needed to form
// G+_{i1} and G+_{iN} at every site in O(N).
class GreensWorkspace {
public:
    GreensWorkspace(const ValidatedSpec& spec, double omega)
        : spec_(&spec.get()), omega_(omega) {
        const ChainSpec& s = *spec_;
        const int n = s.n_sites;
        const double k = s.spring_k;
        gl_ = s.gamma_left / k;
        gr_ = s.gamma_right / k;

        std::vector<double> c(n);
        for (int i = 1; i <= n; ++i)
            c[i - 1] = (2.0 * k + s.pin_k0 - s.mass_of(i) * omega * omega) / k;

        p1_ = greens_detail::run_recursion(c); // D~_{1,j}, j = 0..n at offset+1
        std::vector<double> c2(c.begin() + 1, c.end());
        p2_ = greens_detail::run_recursion(c2); // D~_{2,j}, j = 1..n
        std::vector<double> cr(c.rbegin(), c.rend());
        s1_ = greens_detail::run_recursion(cr); // D~_{j,n}, j = n+1..1 reversed
        std::vector<double> cr2(cr.begin() + 1, cr.end());
        s2_ = greens_detail::run_recursion(cr2); // D~_{j,n-1}, j = n..1 reversed

        greens_detail::ScaledSum full;
        full.add({1.0, 0.0}, prefix1(n).first, prefix1(n).second);
        full.add({0.0, -omega_ * gr_}, prefix1(n - 1).first, prefix1(n - 1).second);
        full.add({0.0, -omega_ * gl_}, prefix2(n).first, prefix2(n).second);
        full.add({-omega_ * omega_ * gl_ * gr_, 0.0}, prefix2(n - 1).first,
                 prefix2(n - 1).second);
        delta_full_ = full.value();
        if (delta_full_.m == Complex(0.0, 0.0))
            fail("SolverBreakdown", "boundary determinant vanished at omega = " +
                                        std::to_string(omega_));
    }

    // Delta~_{1,l} = D~_{1,l} - i w gl~ D~_{2,l};  l = 0 means the empty block.
    greens_detail::ScaledC delta_left(int l) const {
        greens_detail::ScaledSum sum;
        sum.add({1.0, 0.0}, prefix1(l).first, prefix1(l).second);
        sum.add({0.0, -omega_ * gl_}, prefix2(l).first, prefix2(l).second);
        return sum.value();
    }

    // Delta~_{l,N} = D~_{l,N} - i w gr~ D~_{l,N-1};  l = N+1 means empty.
    greens_detail::ScaledC delta_right(int l) const {
        greens_detail::ScaledSum sum;
        sum.add({1.0, 0.0}, suffix_n(l).first, suffix_n(l).second);
        sum.add({0.0, -omega_ * gr_}, suffix_n1(l).first, suffix_n1(l).second);
        return sum.value();
    }

    greens_detail::ScaledC delta_full() const { return delta_full_; }

    // Cofactor expansion of the tridiagonal resolvent: the minor contributes
    // (-k)^{i-1} which joins the sign from the cofactor, so
    // G+_{i1} = k^{i-1} Delta_{i+1,N}/Delta_{1,N} = k^{-1} Delta~_{i+1,N}/Delta~_{1,N}
    Complex g_i1(int site) const {
        Complex r = greens_detail::ratio(delta_right(site + 1), delta_full_);
        return scale_by_k(r, -1);
    }

    // G+_{iN} = k^{N-i} Delta_{1,i-1}/Delta_{1,N} = k^{-1} Delta~_{1,i-1}/Delta~_{1,N}
    Complex g_iN(int site) const {
        Complex r = greens_detail::ratio(delta_left(site - 1), delta_full_);
        return scale_by_k(r, -1);
    }

private:
    std::pair<double, long> prefix1(int l) const { return at(p1_, l + 1); }
    std::pair<double, long> prefix2(int l) const { return at(p2_, l); } // l>=0; l=0 -> seed 0
    std::pair<double, long> suffix_n(int l) const {
        return at(s1_, spec_->n_sites - l + 2); // l = n+2 -> 0, n+1 -> 1, ...
    }
    std::pair<double, long> suffix_n1(int l) const {
        return at(s2_, spec_->n_sites - l + 1); // l = n+1 -> 0, n -> 1, ...
    }
    static std::pair<double, long> at(const greens_detail::ScaledSeq& s, int idx) {
        if (idx < 0) return {0.0, 0};
        return {s.man[idx], s.ex[idx]};
    }
    Complex scale_by_k(Complex v, int power) const {
        const double k = spec_->spring_k;
        if (k == 1.0 || v == Complex(0.0, 0.0)) return v;
        return v * std::pow(k, power);
    }

    const ChainSpec* spec_;
    double omega_, gl_, gr_;
    greens_detail::ScaledSeq p1_, p2_, s1_, s2_;
    greens_detail::ScaledC delta_full_;
};

// Full boundary determinant Delta_{1,N} of [-M w^2 + Phi - i w Gamma].
// Unpinned chains use the parity-explicit band forms; gaps, band edges and
// general k fall back to the recursion-assembled expression (exact in scaled
// arithmetic). k_o != 0 is rejected here; the Green's-function path handles
// pinning through the recursion directly.
inline Complex boundary_determinant(double omega, const ValidatedSpec& spec) {
    const ChainSpec& s = spec.get();
    if (s.pin_k0 != 0.0)
        fail("PinningUnsupported",
             "boundary_determinant requires k_o = 0; use the Green's-function "
             "recursion for pinned chains");
    const int n = s.n_sites;
    const double k = s.spring_k;
    const double w = omega, w2 = omega * omega;
    const double ma = s.mass_of(1), mb = s.mass_of(2 <= n ? 2 : 1);
    const double gl = s.gamma_left / k, gr = s.gamma_right / k;

    const TransferMatrix t = transfer_matrix(omega, ma, mb, k, 0.0);
    const double cq = t.cos_q();
    const double kn = std::pow(k, n);

    if (std::abs(cq) < 1.0 - 1e-9 && n >= 2) {
        const double q = std::acos(cq);
        const double alpha = 2.0 - (ma / k) * w2;
        const double beta = 2.0 - (mb / k) * w2;
        double re, im;
        if (n % 2 == 0) {
            re = (std::sin(0.5 * (n + 1) * q) - gl * gr * w2 * std::sin(0.5 * (n - 1) * q)) /
                 std::sin(0.5 * q);
            im = -w * (gl * beta + gr * alpha) * std::sin(0.5 * n * q) / std::sin(q);
        } else {
            re = (alpha * std::sin(0.5 * (n + 1) * q) -
                  gl * gr * w2 * beta * std::sin(0.5 * (n - 1) * q)) /
                 std::sin(q);
            im = -w * (gl + gr) * std::sin(0.5 * n * q) / std::sin(0.5 * q);
        }
        return kn * Complex(re, im);
    }

    GreensWorkspace ws(spec, omega);
    greens_detail::ScaledC d = ws.delta_full();
    const int shift = static_cast<int>(std::clamp<long>(d.e, -4000, 4000));
    return kn * Complex(std::ldexp(d.m.real(), shift), std::ldexp(d.m.imag(), shift));
}

// (G+_{i1}, G+_{iN}) at one frequency.
inline std::pair<Complex, Complex> green_elements(double omega,
                                                  const ValidatedSpec& spec,
                                                  int site) {
    const int n = spec->n_sites;
    if (site < 1 || site > n)
        fail("ZeroSites", "site index out of range");
    GreensWorkspace ws(spec, omega);
    return {ws.g_i1(site), ws.g_iN(site)};
}

struct SiteIntegrals {
    double left_fraction = 0.0;  // I_i: weight of T_L in T_i
    double right_fraction = 0.0; // I^_i: weight of T_R
    double left_error = 0.0;
    double right_error = 0.0;
};

namespace greens_detail {

// Frequency where the integrand has decayed to tail_eps * peak; panels end
// here and the exact 1/w-mapped tail integral takes over.
template <class F>
double choose_cutoff(F&& integrand, double top_edge, double peak,
                     double tail_eps = 1e-12) {
    double cut = 1.1 * top_edge;
    for (int i = 0; i < 64; ++i) {
        if (std::abs(integrand(cut)) <= tail_eps * peak) break;
        cut *= 2.0;
    }
    return cut;
}

template <class F>
QuadResult band_plus_tail(F&& integrand, const std::vector<double>& edges,
                          double cutoff, const QuadOptions& opt) {
    std::vector<double> pts{0.0};
    for (double e : edges)
        if (e < cutoff) pts.push_back(e);
    for (double g = 1.1 * edges.back(); g < cutoff; g *= 2.0) pts.push_back(g);
    pts.push_back(cutoff);
    std::sort(pts.begin(), pts.end());
    QuadResult finite = integrate_segments(integrand, pts, opt);
    QuadResult tail = integrate_upper_tail(integrand, cutoff, opt);
    finite.value += tail.value;
    finite.error += tail.error;
    finite.intervals += tail.intervals;
    finite.converged = finite.converged && tail.converged;
    return finite;
}

} // namespace greens_detail

// I_i = (2 m_i gamma_L / pi) int_0^inf w^2 |G+_{i1}|^2 dw and the mirrored
// I^_i; the (-inf,0) half is folded in by evenness. Site weights in the
// steady profile: T_i = I_i T_L + I^_i T_R.
inline SiteIntegrals site_integrals(const ValidatedSpec& spec, int site,
                                    QuadOptions opt = {}) {
    const ChainSpec& s = spec.get();
    if (site < 1 || site > s.n_sites)
        fail("ZeroSites", "site index out of range");
    const double mi = s.mass_of(site);

    auto left_integrand = [&](double w) {
        GreensWorkspace ws(spec, w);
        const Complex g = ws.g_i1(site);
        return w * w * std::norm(g);
    };
    auto right_integrand = [&](double w) {
        GreensWorkspace ws(spec, w);
        const Complex g = ws.g_iN(site);
        return w * w * std::norm(g);
    };

    std::vector<double> edges = band_edges(s.mass_a, s.mass_b, s.spring_k, s.pin_k0);
    if (edges.empty()) edges.push_back(2.0);
    const double top = edges.back();

    auto run = [&](auto&& f) {
        // crude peak estimate from samples inside each inter-edge segment
        double peak = 0.0;
        std::vector<double> pts{0.0};
        pts.insert(pts.end(), edges.begin(), edges.end());
        for (size_t i = 0; i + 1 < pts.size(); ++i)
            for (int j = 1; j <= 4; ++j)
                peak = std::max(peak,
                                std::abs(f(pts[i] + (pts[i + 1] - pts[i]) * j / 5.0)));
        const double cut = greens_detail::choose_cutoff(f, top, peak);
        QuadResult r = greens_detail::band_plus_tail(f, edges, cut, opt);
        if (!r.converged)
            fail("QuadratureNotConverged",
                 "site integral error " + std::to_string(r.error) +
                     " above tolerance after " + std::to_string(r.intervals) +
                     " panels");
        return r;
    };

    QuadResult left = run(left_integrand);
    QuadResult right = run(right_integrand);

    SiteIntegrals out;
    const double pref_l = 2.0 * mi * s.gamma_left / M_PI;
    const double pref_r = 2.0 * mi * s.gamma_right / M_PI;
    out.left_fraction = pref_l * left.value;
    out.right_fraction = pref_r * right.value;
    out.left_error = pref_l * left.error;
    out.right_error = pref_r * right.error;
    return out;
}

// Whole-profile reconstruction through the frequency route. Bond currents in
// a steady state are uniform, so every bond carries J = (gamma_R/m_N) dT I_N.
inline SteadyProfile greens_profile(const ValidatedSpec& spec, QuadOptions opt = {}) {
    const ChainSpec& s = spec.get();
    SteadyProfile out;
    out.temperatures.resize(s.n_sites);
    double i_last = 0.0;
    for (int i = 1; i <= s.n_sites; ++i) {
        SiteIntegrals si = site_integrals(spec, i, opt);
        out.temperatures[i - 1] =
            si.left_fraction * s.temp_left + si.right_fraction * s.temp_right;
        if (i == s.n_sites) i_last = si.left_fraction;
    }
    const double j = s.gamma_right / s.mass_of(s.n_sites) *
                     (s.temp_left - s.temp_right) * i_last;
    out.bond_currents = Eigen::VectorXd::Constant(std::max(0, s.n_sites - 1), j);
    out.mean_current = j;
    return out;
}

} // namespace dimer
