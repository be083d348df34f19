#include "oscring/amplitude.hpp"

#include <cmath>
#include <numbers>

#include "oscring/glsolver.hpp"

namespace oscring {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// h evaluated on the window y_m = alpha e^{i m phi0} v0 + c.c.
Eigen::VectorXd probe_sample(const RingModel& model, const Eigen::VectorXcd& v0, double phi0,
                             double p, Complex alpha) {
    Eigen::MatrixXd window(model.n, model.window_width());
    for (int m = -model.R; m <= model.R; ++m) {
        Eigen::VectorXcd column = alpha * std::exp(Complex(0.0, m * phi0)) * v0;
        window.col(m + model.R) = 2.0 * column.real();
    }
    return model.nonlinearity ? model.nonlinearity(window, p) : Eigen::VectorXd::Zero(model.n);
}

struct HarmonicBins {
    Eigen::VectorXcd c0, c1, c2, c3;
};

/// Fourier bins of psi -> h(rho e^{i psi}) over 8 equispaced phases.
HarmonicBins harmonic_bins(const RingModel& model, const Eigen::VectorXcd& v0, double phi0,
                           double p, double rho) {
    const int phases = 8;
    HarmonicBins bins;
    bins.c0 = Eigen::VectorXcd::Zero(model.n);
    bins.c1 = bins.c0;
    bins.c2 = bins.c0;
    bins.c3 = bins.c0;
    for (int k = 0; k < phases; ++k) {
        const double psi = kTwoPi * k / phases;
        Eigen::VectorXd g = probe_sample(model, v0, phi0, p, std::polar(rho, psi));
        bins.c0 += g.cast<Complex>();
        bins.c1 += std::exp(Complex(0.0, -psi)) * g.cast<Complex>();
        bins.c2 += std::exp(Complex(0.0, -2.0 * psi)) * g.cast<Complex>();
        bins.c3 += std::exp(Complex(0.0, -3.0 * psi)) * g.cast<Complex>();
    }
    bins.c0 /= phases;
    bins.c1 /= phases;
    bins.c2 /= phases;
    bins.c3 /= phases;
    return bins;
}

double rel_diff(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    return (a - b).norm() / std::max(a.norm(), 1e-12);
}

} // namespace

CubicProbe probe_cubic(const RingModel& model, const Eigen::VectorXcd& v0, double phi0, double p) {
    const double rho1 = 1e-2, rho2 = 2e-2;
    HarmonicBins lo = harmonic_bins(model, v0, phi0, p, rho1);
    HarmonicBins hi = harmonic_bins(model, v0, phi0, p, rho2);

    // A quadratic term scales the even bins as rho^2; extrapolating the
    // rho^2-normalized bins kills legitimate quartic content and leaves
    // exactly the forbidden quadratic coefficient.
    Eigen::VectorXcd quad0 = (4.0 * lo.c0 / (rho1 * rho1) - hi.c0 / (rho2 * rho2)) / 3.0;
    Eigen::VectorXcd quad2 = (4.0 * lo.c2 / (rho1 * rho1) - hi.c2 / (rho2 * rho2)) / 3.0;
    if (quad0.norm() > 1e-8 || quad2.norm() > 1e-8)
        throw NumericalError("nonlinearity not cubic at origin: quadratic terms detected (|c0| = " +
                             std::to_string(quad0.norm()) + ", |c2| = " + std::to_string(quad2.norm()) + ")");

    Eigen::VectorXcd h1_lo = lo.c1 / (rho1 * rho1 * rho1);
    Eigen::VectorXcd h1_hi = hi.c1 / (rho2 * rho2 * rho2);
    Eigen::VectorXcd h2_lo = lo.c3 / (rho1 * rho1 * rho1);
    Eigen::VectorXcd h2_hi = hi.c3 / (rho2 * rho2 * rho2);

    CubicProbe probe;
    probe.first_harmonic = (4.0 * h1_lo - h1_hi) / 3.0;  // cancels the O(rho^2) quintic leak
    probe.third_harmonic = (4.0 * h2_lo - h2_hi) / 3.0;
    if (rel_diff(probe.first_harmonic, h1_lo) > 1e-3 || rel_diff(probe.third_harmonic, h2_lo) > 1e-3)
        throw NumericalError("nonlinearity not cubic at origin: probe radii disagree");
    return probe;
}

AmplitudeCoefficients gl_coefficients(const RingModel& model, const CriticalData& critical) {
    CouplingMoments mom = coupling_moments(model, critical.phi0, critical.p_c);
    AmplitudeCoefficients coeffs;
    coeffs.kappa1 = critical.kappa1;
    coeffs.omega0 = critical.omega0;
    coeffs.phi0 = critical.phi0;
    coeffs.v0 = critical.v0;
    coeffs.v1 = critical.v1;
    coeffs.kappa2 = inner(mom.LK * critical.v0, critical.v1);
    coeffs.kappa3 = inner(mom.L2 * critical.v0, critical.v1);

    CubicProbe probe = probe_cubic(model, critical.v0, critical.phi0, critical.p_c);
    coeffs.h1_v0 = probe.first_harmonic;
    coeffs.h2_v0 = probe.third_harmonic;
    coeffs.zeta = inner(probe.first_harmonic, critical.v1);

    Eigen::MatrixXcd resonance =
        Complex(0.0, 3.0 * critical.omega0) * Eigen::MatrixXcd::Identity(model.n, model.n) -
        symbol_matrix(model, critical.p_c, 3.0 * critical.phi0);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(resonance, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.singularValues()(model.n - 1) <= 1e-6)
        throw NumericalError("nonresonance condition violated: third-harmonic matrix singular value " +
                             std::to_string(svd.singularValues()(model.n - 1)));
    coeffs.v2 = svd.solve(probe.third_harmonic);
    return coeffs;
}

Eigen::VectorXd reconstruct(const AmplitudeCoefficients& coeffs, const GLField& u_field,
                            double epsilon, double t) {
    if (epsilon <= 0.0) throw ConfigError("reconstruct needs epsilon > 0");
    if (u_field.size() == 0) throw ConfigError("reconstruct needs a nonempty amplitude field");
    const int N = static_cast<int>(std::lround(1.0 / epsilon));
    const int n = static_cast<int>(coeffs.v0.size());
    const int M = u_field.size();

    // Plain DFT; M is a few hundred at most and this runs once per snapshot.
    Eigen::VectorXcd modes(M);
    for (int q = 0; q < M; ++q) {
        Complex acc = 0.0;
        for (int i = 0; i < M; ++i)
            acc += u_field.values[static_cast<size_t>(i)] *
                   std::exp(Complex(0.0, -kTwoPi * q * i / M));
        modes(q) = acc / static_cast<double>(M);
    }

    Eigen::VectorXd state(N * n);
    for (int j = 0; j < N; ++j) {
        const double xi = std::fmod(coeffs.kappa1 * epsilon * t + epsilon * j, 1.0);
        Complex amplitude = 0.0;
        for (int q = 0; q < M; ++q) {
            int wave = q <= M / 2 ? q : q - M;  // signed mode for interpolation between grid points
            amplitude += modes(q) * std::exp(Complex(0.0, kTwoPi * wave * xi));
        }
        const Complex carrier = std::exp(Complex(0.0, coeffs.omega0 * t + coeffs.phi0 * j));
        Eigen::VectorXcd y = epsilon * carrier * amplitude * coeffs.v0 +
                             std::pow(epsilon, 3) * carrier * carrier * carrier *
                                 (amplitude * amplitude * amplitude) * coeffs.v2;
        state.segment(j * n, n) = 2.0 * y.real();
    }
    return state;
}

} // namespace oscring
