#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "dimer/errors.hpp"
#include "dimer/model.hpp"

namespace dimer {

struct CovarianceSolution {
    Eigen::MatrixXd cov;    // 2N x 2N symmetric, <x_i x_j>
    double residual = 0.0;  // max|a b + b a^T - d| / max|d|
};

// Bartels-Stewart on the complex Schur form of the drift. Solves
// a b + b a^T = d with d = diffusion. Triangular reduction:
// a = U T U^H, b = U Y U^T, then T Y + Y T^T = U^H d conj(U), solved
// column-by-column from the right.
inline CovarianceSolution solve_stationary_covariance(const SystemMatrices& m,
                                                      double tol = 1e-10) {
    using CMat = Eigen::MatrixXcd;
    const int n = 2 * m.n();
    const Eigen::MatrixXd a = m.drift();
    const Eigen::VectorXd dvec = m.diffusion_diagonal();

    Eigen::ComplexSchur<CMat> schur(a.cast<std::complex<double>>(), true);
    if (schur.info() != Eigen::Success)
        fail("SolverBreakdown", "Schur iteration did not converge");
    const CMat& T = schur.matrixT();
    const CMat& U = schur.matrixU();

    // zero modes round to ~1e-16, so test against a relative floor rather
    // than exact positivity
    double espread = 1.0;
    for (int i = 0; i < n; ++i) espread = std::max(espread, std::abs(T(i, i)));
    for (int i = 0; i < n; ++i) {
        if (!(T(i, i).real() > 1e-12 * espread))
            fail("UnstableDrift",
                 "drift eigenvalue with non-positive real part (" +
                     std::to_string(T(i, i).real()) + "); stationary state undefined");
    }

    CMat F = U.adjoint() * dvec.asDiagonal() * U.conjugate();
    CMat Y(n, n);
    CMat Twork = T;
    for (int j = n - 1; j >= 0; --j) {
        Eigen::VectorXcd rhs = F.col(j);
        const int tail = n - 1 - j;
        if (tail > 0)
            rhs.noalias() -= Y.rightCols(tail) * T.row(j).tail(tail).transpose();
        Twork.diagonal() = T.diagonal().array() + T(j, j);
        Y.col(j) = Twork.triangularView<Eigen::Upper>().solve(rhs);
    }

    CMat bc = U * Y * U.transpose();
    Eigen::MatrixXd b = bc.real();

    const double scale = b.cwiseAbs().maxCoeff();
    const double ghost = bc.imag().cwiseAbs().maxCoeff();
    const double asym = (b - b.transpose()).cwiseAbs().maxCoeff();
    if (!b.allFinite() || ghost > 1e-8 * (scale + 1.0) || asym > 1e-8 * (scale + 1.0))
        fail("SolverBreakdown", "covariance reconstruction lost symmetry/reality");
    b = 0.5 * (b + b.transpose()).eval();

    CovarianceSolution out;
    out.cov = std::move(b);
    const double dscale = dvec.cwiseAbs().maxCoeff();
    out.residual =
        (a * out.cov + out.cov * a.transpose() - Eigen::MatrixXd(dvec.asDiagonal()))
            .cwiseAbs()
            .maxCoeff() /
        dscale;
    if (!(out.residual <= tol))
        fail("SolverBreakdown",
             "Lyapunov residual " + std::to_string(out.residual) + " above tolerance");
    return out;
}

// Brute-force oracle: vectorize a b + b a^T = d column-major into
// (I (x) a + a (x) I) vec(b) = vec(d) and solve the dense (2N)^2 system.
inline CovarianceSolution kronecker_covariance(const SystemMatrices& m) {
    if (m.n() > 16)
        fail("TooLarge", "kronecker oracle capped at N <= 16, got N = " +
                             std::to_string(m.n()));
    const int n = 2 * m.n();
    const Eigen::MatrixXd a = m.drift();
    const Eigen::VectorXd dvec = m.diffusion_diagonal();

    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * n, n * n);
    for (int c = 0; c < n; ++c) // I (x) a: block-diagonal copies, vec(a b)
        K.block(c * n, c * n, n, n) += a;
    for (int r = 0; r < n; ++r) // a (x) I: vec(b a^T)
        for (int c = 0; c < n; ++c)
            for (int k = 0; k < n; ++k)
                K(c * n + r, k * n + r) += a(c, k);

    Eigen::VectorXd dv = Eigen::VectorXd::Zero(n * n);
    for (int i = 0; i < n; ++i) dv[i * n + i] = dvec[i];

    Eigen::VectorXd x = K.partialPivLu().solve(dv);
    Eigen::MatrixXd b = Eigen::Map<Eigen::MatrixXd>(x.data(), n, n);
    b = 0.5 * (b + b.transpose()).eval();

    CovarianceSolution out;
    out.cov = std::move(b);
    out.residual = (a * out.cov + out.cov * a.transpose() -
                    Eigen::MatrixXd(dvec.asDiagonal()))
                       .cwiseAbs()
                       .maxCoeff() /
                   dvec.cwiseAbs().maxCoeff();
    return out;
}

struct SteadyProfile {
    Eigen::VectorXd temperatures;  // N
    Eigen::VectorXd bond_currents; // N-1
    double mean_current = 0.0;
};

// T_i = <p_i^2>/m_i. Bond current J_i = k <(q_i - q_{i+1}) p_i>/m_i, positive
// when heat flows left to right; the per-bond coupling is read off Phi so the
// same expression serves pinned chains and general graphs.
inline SteadyProfile profile_from_covariance(const Eigen::MatrixXd& cov,
                                             const SystemMatrices& m) {
    const int N = m.n();
    SteadyProfile out;
    out.temperatures.resize(N);
    for (int i = 0; i < N; ++i)
        out.temperatures[i] = cov(N + i, N + i) / m.masses[i];

    out.bond_currents.resize(std::max(0, N - 1));
    for (int i = 0; i + 1 < N; ++i) {
        const double k = -m.force(i, i + 1);
        out.bond_currents[i] = k * (cov(i, N + i) - cov(i + 1, N + i)) / m.masses[i];
    }
    out.mean_current =
        (N > 1) ? out.bond_currents.mean() : 0.0;
    return out;
}

inline SteadyProfile profile_from_covariance(const Eigen::MatrixXd& cov,
                                             const ValidatedSpec& spec) {
    return profile_from_covariance(cov, build_system_matrices(spec));
}

// Mean temperature over the central window of one sublattice; `odd` selects
// sites 1,3,5,... The window keeps `half_width` unit cells on each side of
// the chain midpoint.
inline double bulk_sublattice_mean(const Eigen::VectorXd& temperatures, bool odd,
                                   int half_width = 6) {
    const int N = static_cast<int>(temperatures.size());
    const int mid = N / 2;
    int lo = std::max(1, mid - 2 * half_width);
    int hi = std::min(N, mid + 2 * half_width);
    double sum = 0.0;
    int count = 0;
    for (int site = lo; site <= hi; ++site) {
        if ((site % 2 == 1) != odd) continue;
        sum += temperatures[site - 1];
        ++count;
    }
    return count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
}

} // namespace dimer
