#pragma once

#include <Eigen/Dense>

#include "oscring/spectrum.hpp"

namespace oscring {

struct GLField;

/// Everything needed to write down and evaluate the reduced amplitude
/// equation at a critical point: the projected coefficients, the critical
/// and adjoint eigenvectors, the slaved third-harmonic vector, and the cubic
/// response vectors of the nonlinearity.
struct AmplitudeCoefficients {
    double kappa1 = 0.0;   ///< transport speed (real)
    Complex kappa2;        ///< parameter gain, <LK v0, v1>
    Complex kappa3;        ///< diffusion, <L2 v0, v1>
    Complex zeta;          ///< cubic saturation, <h1(v0), v1>
    double omega0 = 0.0;
    double phi0 = 0.0;
    Eigen::VectorXcd v0, v1, v2;
    Eigen::VectorXcd h1_v0; ///< first-harmonic cubic response (|A|^2 A convention)
    Eigen::VectorXcd h2_v0; ///< third-harmonic cubic response (A^3 convention)
};

struct CubicProbe {
    Eigen::VectorXcd first_harmonic; ///< h1(v0)
    Eigen::VectorXcd third_harmonic; ///< h2(v0)
};

/// Extract the cubic response of the nonlinearity along the critical mode by
/// phase-Fourier probing: h is evaluated on windows y_m = alpha e^{i m phi0}
/// v0 + c.c. for alpha = rho e^{i psi} over 8 phases and radii rho = 1e-2 and
/// 2e-2; the e^{i psi} and e^{3 i psi} Fourier bins divided by rho^3 give
/// h1(v0) and h2(v0), Richardson-extrapolated across the radii to cancel the
/// O(rho^5) contamination. Exact to rounding for an exactly cubic h.
/// Throws NumericalError when the probe detects quadratic terms or the two
/// radii disagree after extrapolation ("nonlinearity not cubic at origin").
/// `p` is the parameter handed to the nonlinearity callback.
CubicProbe probe_cubic(const RingModel& model, const Eigen::VectorXcd& v0, double phi0,
                       double p = 0.0);

/// Assemble all amplitude-equation coefficients at a critical point. The
/// third-harmonic vector v2 solves
///   [3 i omega0 Id - sum_m M_m(0) e^{3 i m phi0}] v2 = h2(v0),
/// which requires the nonresonance condition (smallest singular value of the
/// left-hand matrix > 1e-6); otherwise throws NumericalError
/// ("nonresonance condition violated").
AmplitudeCoefficients gl_coefficients(const RingModel& model, const CriticalData& critical);

/// Map an amplitude field u back to an oscillator state of a ring with
/// N = round(1/epsilon) nodes:
///   y_j(t) = eps e^{i(omega0 t + phi0 j)} v0 A + eps^3 e^{3i(...)} v2 A^3 + c.c.
/// with A = u at xi = (kappa1 eps t + eps j) mod 1, evaluated by
/// trigonometric interpolation from the periodic grid.
Eigen::VectorXd reconstruct(const AmplitudeCoefficients& coeffs, const GLField& u_field,
                            double epsilon, double t);

} // namespace oscring
