#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "oscring/amplitude.hpp"
#include "oscring/errors.hpp"

namespace oscring {

/// Periodic complex field u(xi) on xi in [0,1), sampled at xi_i = i/M with M
/// a power of two.
struct GLField {
    std::vector<Complex> values;
    double time = 0.0; ///< slow time T2

    int size() const { return static_cast<int>(values.size()); }

    /// Fraction of spectral energy in the top third of modes; large values
    /// mean the grid no longer resolves the field.
    double spectral_tail_fraction() const;
};

/// Uniform field u = c.
GLField constant_field(int grid, Complex c);

/// Small random field: independent complex Gaussian per grid point scaled to
/// the given amplitude. Deterministic in the seed.
GLField random_field(int grid, double amplitude, std::uint64_t seed);

struct GLOptions {
    /// Permit Re kappa3 < 0 (anti-diffusive); the 2/3-rule mask then acts as
    /// the explicit spectral cutoff.
    bool allow_antidiffusive = false;
    double blowup_threshold = 1e6;
};

/// Pseudo-spectral exponential time-differencing (fourth order) stepper for
/// d_T2 u = r kappa2 u + (kappa3/2) d_xi^2 u + zeta u |u|^2 on the periodic
/// grid. The linear part is applied exactly per Fourier mode; the cubic term
/// is evaluated in physical space with 2/3-rule dealiasing.
class GLStepper {
public:
    GLStepper(int grid, double r, const AmplitudeCoefficients& coeffs, double dt,
              const GLOptions& options = {});

    void step(GLField& field) const;

    int grid() const { return grid_; }
    double dt() const { return dt_; }

private:
    void nonlinear(const std::vector<Complex>& spectral, std::vector<Complex>& out) const;

    int grid_ = 0;
    double dt_ = 0.0;
    Complex zeta_;
    GLOptions options_;
    std::vector<Complex> exp_full_, exp_half_, q_, f1_, f2_, f3_;
    std::vector<char> dealias_keep_;
};

/// One ETD step of width dt (convenience wrapper around GLStepper).
GLField gl_step(const GLField& field, double r, const AmplitudeCoefficients& coeffs,
                double dt, const GLOptions& options = {});

/// rate(q) = r kappa2 - (kappa3/2)(2 pi q)^2 for q in [-q_max, q_max]; the
/// zero state is linearly stable iff all real parts are negative.
std::vector<std::pair<int, Complex>> gl_linear_growth_rates(double r,
                                                            const AmplitudeCoefficients& coeffs,
                                                            int q_max);

using GLObserver = std::function<void(const GLField&)>;

struct GLRunInfo {
    int steps = 0;
    bool resolution_warning = false;
    double max_abs = 0.0;
};

/// Repeated stepping to t_end with an observer invoked every
/// `observer_stride` steps (and on the initial state). Throws NumericalError
/// with the blow-up time if |u| exceeds the threshold.
GLField gl_integrate(GLField field, double r, const AmplitudeCoefficients& coeffs,
                     double t_end, double dt, int observer_stride = 0,
                     const GLObserver& observer = {}, const GLOptions& options = {},
                     GLRunInfo* info = nullptr);

} // namespace oscring
