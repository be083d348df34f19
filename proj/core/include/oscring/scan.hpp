#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oscring/amplitude.hpp"
#include "oscring/simulate.hpp"
#include "oscring/spectrum.hpp"

namespace oscring {

/// Builds the ring of a given size with everything else fixed.
using ModelFamily = std::function<RingModel(int N)>;

/// First parameter value at which a discrete mode crosses the imaginary axis.
struct HopfPoint {
    double p_hopf = 0.0;
    int mode = 0;       ///< index j of the crossing mode, phi_j = 2*pi*j/N
    double omega = 0.0; ///< imaginary part of the crossing eigenvalue
};

struct HopfSearchOptions {
    double p_max = 10.0;
    double tol = 1e-8;
    bool cross_validate = true; ///< re-check against the dense origin Jacobian at p_hopf +- 1e-4
};

/// Per-mode bisection on max Re lambda_j(p) over [0, p_max]; the smallest
/// crossing over modes wins. Throws NumericalError("no Hopf in range") when
/// no mode crosses below p_max.
HopfPoint find_k_hopf(const RingModel& model, const HopfSearchOptions& options = {});

struct ChaosScanOptions {
    double step = 1e-3;       ///< outward scan increment
    double bisect_tol = 1e-4;
    double p_max = 1.0;
    double noise = 1e-6;      ///< reseeding perturbation amplitude
    ClassifyProtocol protocol = ClassifyProtocol::production();
    std::function<void(double p, const Classification&)> on_classified;
};

struct ChaosScanResult {
    double p_chaos = 0.0;        ///< first chaotic parameter, bracketed to bisect_tol
    double p_last_regular = 0.0; ///< lower end of the final bracket
    bool converged = false;      ///< false when undetermined labels blocked the bisection
    std::string note;
    std::vector<std::pair<double, AttractorLabel>> path; ///< every classified point, in visit order
};

/// Attractor-following continuation upward from p_start: classify, advance by
/// `step` reseeding from the previous final state plus seeded noise, then
/// bisect the first regular->chaotic bracket down to bisect_tol. Throws
/// NumericalError("no transition found") when the scan exhausts p_max.
ChaosScanResult find_k_chaos(const RingModel& model, double p_start,
                             const ChaosScanOptions& options = {});

struct ScanRecord {
    int N = 0;
    double k_hopf = 0.0;
    double k_chaos = 0.0;
    double k_rescaled = 0.0; ///< (k_chaos - k_hopf) * N^2
    std::string diagnostics;
};

struct ScalingOptions {
    HopfSearchOptions hopf;
    ChaosScanOptions chaos;
    bool skip_chaos = false; ///< Hopf-only run; k_chaos and k_rescaled are NaN
    int threads = 0;         ///< worker pool size for the per-N cells (0 = hardware)
};

struct ScalingResult {
    std::vector<ScanRecord> records;
    double slope = 0.0;      ///< log-log fit of (k_chaos - k_hopf) against N
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Measure [k_hopf(N), k_chaos(N)] per ring size (cells run in parallel) and
/// fit the power law interval ~ N^slope; the 1/N^2 collapse of the transition
/// window shows up as slope ~ -2.
ScalingResult scaling_experiment(const ModelFamily& family, const std::vector<int>& sizes,
                                 const ScalingOptions& options = {});

struct TransitionInterval {
    double r_hopf = 0.0;  ///< onset of the first unstable GL mode
    double r_chaos = 0.0; ///< onset of sustained GL chaos (NaN when none found)
    std::string note;

    double width() const { return r_chaos - r_hopf; }
};

struct GLTransitionOptions {
    int grid = 256;
    double dt = 1e-3;
    double t_settle = 200.0;     ///< per-r settling time before the divergence probe
    double t_probe = 100.0;      ///< window over which the divergence rate is measured
    double divergence_rate = 1e-3;
    double r_max = 40.0;
    double r_step = 0.5;
    double bisect_tol = 1e-2;
    std::uint64_t seed = 0x5eed;
};

/// Locate [r_hopf, r_chaos] in the rescaled bifurcation parameter of the
/// amplitude equation. r_hopf comes from the linear growth rates; r_chaos
/// from the first r at which two nearby GL fields separate at a rate above
/// `divergence_rate` (a leading-Lyapunov proxy). Because p - p_c = r/N^2 up
/// to the kappa normalization, a finite interval here is the N-free image of
/// the 1/N^2 ring transition window. When no chaos is found below r_max,
/// r_chaos is NaN and the note explains.
TransitionInterval gl_transition_interval(const AmplitudeCoefficients& coeffs,
                                          const GLTransitionOptions& options = {});

/// Least-squares line y = slope*x + intercept; returns {slope, intercept, r^2}.
std::array<double, 3> fit_line(const std::vector<double>& x, const std::vector<double>& y);

} // namespace oscring
