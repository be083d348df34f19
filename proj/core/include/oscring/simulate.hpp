#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oscring/model.hpp"

namespace oscring {

struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    const RingModel* model = nullptr;
    double parameter = 0.0;
    double dt = 0.0;
    std::string method;
    int rejected_steps = 0;

    int size() const { return static_cast<int>(times.size()); }
};

struct IntegrateOptions {
    std::string method = "rk4";   ///< "rk4" (fixed step) or "rk45" (embedded adaptive)
    double abs_tol = 1e-9;        ///< rk45 only
    double rel_tol = 1e-9;        ///< rk45 only
    int store_stride = 1;         ///< keep every k-th step; 0 stores only the final state
};

using StateObserver = std::function<void(double t, const Eigen::VectorXd& y)>;

/// Integrate the ring ODE from y0 to t_end. Fixed-step classical RK4 by
/// default; the adaptive 5(4) pair adjusts dt between the given value and
/// machine limits to meet the tolerances. Throws NumericalError with the
/// time stamp on non-finite states.
Trajectory integrate(const RingModel& model, const Eigen::VectorXd& y0, double p,
                     double t_end, double dt, const IntegrateOptions& options = {},
                     const StateObserver& observer = {});

/// Storage-free fixed-step RK4 straight to the final state.
Eigen::VectorXd integrate_to(const RingEvaluator& eval, Eigen::VectorXd y,
                             double t_span, double dt);

struct LyapunovOptions {
    double t_transient = 5e3;
    double t_total = 5e4;        ///< includes the transient
    double renorm_interval = 1.0;
    double dt = 0.01;
    int history_stride = 1;      ///< keep every k-th renormalization in the history
};

/// CI-sized variant of the production defaults above (10x shorter runs).
LyapunovOptions lyapunov_ci_options();

struct LyapunovResult {
    std::vector<double> exponents;  ///< descending
    int num_exponents = 0;
    /// Running estimates: convergence_history[i][j] is exponent j after the
    /// i-th kept renormalization past the transient.
    std::vector<std::vector<double>> convergence_history;
    double t_transient = 0.0, t_total = 0.0, renorm_interval = 0.0;

    /// Spread of the running estimate of exponent i over the last 20% of the
    /// history; a cheap reliability gauge for the user.
    double standard_error(int i) const;
};

/// Benettin/QR estimate of the leading `num_exponents` Lyapunov exponents:
/// state plus tangent frame integrated under the analytic banded Jacobian,
/// reorthonormalized by modified Gram-Schmidt every renorm_interval. Log
/// stretch factors accumulate only after t_transient. On tangent collapse
/// the renormalization interval is halved, at most 4 times.
LyapunovResult lyapunov_spectrum(const RingModel& model, double p, int num_exponents,
                                 const Eigen::VectorXd& y0, const LyapunovOptions& options = {});

struct SectionSpec {
    int node = 0;
    int component = 0;
    double level = 0.0;
    int direction = +1; ///< +1 upward, -1 downward, 0 both
};

struct SectionCrossing {
    double t;
    Eigen::VectorXd state;
};

/// Sign-change detection of state[node, component] - level along a stored
/// trajectory, refined by cubic Hermite interpolation of the bracketing step.
std::vector<SectionCrossing> poincare_section(const Trajectory& trajectory,
                                              const SectionSpec& spec);

enum class AttractorLabel { equilibrium, periodic, torus, chaotic, undetermined };

std::string to_string(AttractorLabel label);

struct ClassifyProtocol {
    double t_transient = 5e3;
    double t_total = 5e4;          ///< Lyapunov run length when the section is inconclusive
    double dt = 0.01;
    int section_crossings = 400;   ///< samples collected for the return map
    double section_t_max = 2e4;    ///< give up collecting crossings after this span
    double cluster_tol = 1e-4;
    int max_period = 16;
    double chaos_threshold = 1e-3; ///< largest exponent above -> chaotic
    double undetermined_low = 1e-4;
    double equilibrium_tol = 1e-6;
    double curve_dimension_max = 1.2; ///< correlation-dimension bound for "torus"
    std::uint64_t seed = 0x5eed;

    static ClassifyProtocol production();
    static ClassifyProtocol ci();
};

struct Classification {
    AttractorLabel label = AttractorLabel::undetermined;
    double largest_exponent = 0.0;  ///< NaN when the Lyapunov stage was skipped
    int section_clusters = 0;
    double section_dimension = 0.0;
    Eigen::VectorXd final_state;
    std::string detail;
};

/// Decision tree: decayed-to-origin -> equilibrium; few section clusters ->
/// periodic; section points filling a closed curve -> torus; otherwise the
/// largest Lyapunov exponent decides (chaotic above the threshold,
/// undetermined inside the [low, threshold) gap). If y0 is empty the run
/// starts from seeded small noise.
Classification classify_attractor(const RingModel& model, double p,
                                  const ClassifyProtocol& protocol,
                                  const Eigen::VectorXd& y0 = {});

} // namespace oscring
