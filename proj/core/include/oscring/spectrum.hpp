#pragma once

#include <vector>

#include <Eigen/Dense>

#include "oscring/model.hpp"

namespace oscring {

/// Inner product used for all solvability projections: linear in the first
/// slot, conjugate-linear in the second, <u, w> = sum_i conj(w_i) u_i.
inline Complex inner(const Eigen::VectorXcd& u, const Eigen::VectorXcd& w) {
    return (w.adjoint() * u)(0, 0);
}

/// Per-mode reduction of the ring linearization at the origin:
/// sum_m e^{i m phi} (M_m(0) + p K_m).
Eigen::MatrixXcd symbol_matrix(const RingModel& model, double p, double phi);

/// Closed eigenvalue curves lambda(phi) of the symbol matrix, sampled on a
/// uniform phi grid and threaded into branches by continuity.
struct SpectrumCurve {
    std::vector<double> phi;                      ///< grid points in [0, 2pi)
    std::vector<std::vector<Complex>> branches;   ///< branches[b][i] = lambda_b(phi[i])
    double parameter = 0.0;

    int num_branches() const { return static_cast<int>(branches.size()); }
    double max_real() const;
    /// Distance from z to the sampled curve (min over all branch samples).
    double distance_to(Complex z) const;
};

/// Sample the asymptotic spectrum curves at `num_phi` >= 16 grid points.
SpectrumCurve continuous_spectrum(const RingModel& model, double p, int num_phi);

/// All N*n eigenvalues of the origin linearization, computed mode by mode at
/// phi_j = 2 pi j / N. Equal (as a set) to the dense-Jacobian spectrum.
std::vector<Complex> discrete_spectrum(const RingModel& model, double p);

/// Data at the destabilization point of the continuous spectrum: the curve
/// touches the imaginary axis at i*omega0 tangentially at phi0 for p = p_c.
struct CriticalData {
    double p_c = 0.0;
    double phi0 = 0.0;
    double omega0 = 0.0;
    double kappa1 = 0.0;       ///< transport speed, <L1 v0, v1>
    Eigen::VectorXcd v0;       ///< critical eigenvector, |v0| = 1
    Eigen::VectorXcd v1;       ///< adjoint eigenvector, <v0, v1> = 1
};

/// phi0-weighted sums of the coupling matrices with weights 1, m, m^2 (base
/// matrices) and 1 (slope matrices).
struct CouplingMoments {
    Eigen::MatrixXcd L0, L1, L2, LK;
};

/// Moments of M_m(p) = M_m(0) + p*K_m; the default evaluates at the model's
/// base point. Pass the critical parameter to get the moments entering the
/// amplitude equation.
CouplingMoments coupling_moments(const RingModel& model, double phi0, double p = 0.0);

struct CriticalSearchOptions {
    int coarse_samples = 512;
    double value_tol = 1e-10;    ///< |max Re lambda| at acceptance
    double tangency_tol = 1e-6;  ///< |Re dlambda/dphi| at phi0
    double simple_tol = 1e-6;    ///< min distance of the second eigenvalue to i*omega0
    double fd_step = 1e-5;       ///< phi step for derivative checks
};

/// Locate (p_c, phi0) in [p_lo, p_hi] by bisection on max_phi Re lambda with
/// golden-section refinement of the argmax per p. Requires a sign change of
/// the max real part over the bracket. By convention omega0 >= 0 (the
/// conjugate tangency at 2pi - phi0 is the same point).
CriticalData find_critical(const RingModel& model, double p_lo, double p_hi,
                           const CriticalSearchOptions& opts = {});

/// | <L1 v0, v1> - (1/i) dlambda/dphi(phi0) | with a central finite
/// difference on the critical branch; a direct numerical verification that
/// the projected moment reproduces the curve's slope.
double lemma1_check(const RingModel& model, const CriticalData& critical);

} // namespace oscring
