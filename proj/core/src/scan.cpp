#include "oscring/scan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "oscring/glsolver.hpp"
#include "oscring/parallel.hpp"

namespace oscring {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double mode_max_real(const RingModel& model, double p, double phi) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(symbol_matrix(model, p, phi), false);
    if (solver.info() != Eigen::Success)
        throw NumericalError("eigenvalue solver failed during Hopf search");
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < model.n; ++i) best = std::max(best, solver.eigenvalues()(i).real());
    return best;
}

double dense_max_real(const RingModel& model, double p) {
    Eigen::MatrixXd jac = ring_jacobian(model, Eigen::VectorXd::Zero(model.dim()), p).dense();
    Eigen::EigenSolver<Eigen::MatrixXd> solver(jac, false);
    if (solver.info() != Eigen::Success)
        throw NumericalError("dense eigenvalue solver failed during Hopf cross-validation");
    return solver.eigenvalues().real().maxCoeff();
}

Eigen::VectorXd perturbed(const Eigen::VectorXd& state, double amplitude, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, amplitude);
    Eigen::VectorXd out = state;
    for (int i = 0; i < out.size(); ++i) out(i) += gauss(rng);
    return out;
}

/// Exponential separation rate of two nearby GL fields after settling on the
/// attractor; positive and large when the GL dynamics is chaotic.
double gl_divergence_rate(double r, const AmplitudeCoefficients& coeffs,
                          const GLTransitionOptions& options) {
    GLField base = random_field(options.grid, 1e-3, options.seed);
    base = gl_integrate(std::move(base), r, coeffs, options.t_settle, options.dt);

    const double delta0 = 1e-8;
    GLField shadow = base;
    std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> gauss(0.0, delta0 / std::sqrt(2.0));
    for (auto& v : shadow.values) v += Complex(gauss(rng), gauss(rng));

    GLStepper stepper(options.grid, r, coeffs, options.dt);
    const auto steps = static_cast<long long>(std::llround(options.t_probe / options.dt));
    double log_growth = 0.0;
    double separation = delta0 * std::sqrt(static_cast<double>(options.grid));
    const double renorm_every = 1.0;
    const auto renorm_steps = static_cast<long long>(std::llround(renorm_every / options.dt));
    for (long long s = 1; s <= steps; ++s) {
        stepper.step(base);
        stepper.step(shadow);
        if (s % renorm_steps == 0 || s == steps) {
            double dist = 0.0;
            for (int i = 0; i < options.grid; ++i)
                dist += std::norm(shadow.values[static_cast<size_t>(i)] -
                                  base.values[static_cast<size_t>(i)]);
            dist = std::sqrt(dist);
            if (dist <= 0.0) return -std::numeric_limits<double>::infinity();
            log_growth += std::log(dist / separation);
            // rescale the shadow back onto the delta0 shell around base
            const double shrink = separation / dist;
            for (int i = 0; i < options.grid; ++i) {
                auto& v = shadow.values[static_cast<size_t>(i)];
                const auto& b = base.values[static_cast<size_t>(i)];
                v = b + (v - b) * shrink;
            }
        }
    }
    return log_growth / options.t_probe;
}

} // namespace

HopfPoint find_k_hopf(const RingModel& model, const HopfSearchOptions& options) {
    HopfPoint best;
    best.p_hopf = std::numeric_limits<double>::infinity();
    for (int j = 0; j < model.N; ++j) {
        const double phi = kTwoPi * j / model.N;
        if (mode_max_real(model, 0.0, phi) >= 0.0)
            throw ConfigError("mode " + std::to_string(j) + " is already unstable at p = 0");
        if (mode_max_real(model, options.p_max, phi) < 0.0) continue;  // no crossing in range
        double lo = 0.0, hi = options.p_max;
        while (hi - lo > options.tol) {
            const double mid = 0.5 * (lo + hi);
            (mode_max_real(model, mid, phi) < 0.0 ? lo : hi) = mid;
        }
        const double p_cross = 0.5 * (lo + hi);
        if (p_cross < best.p_hopf) {
            best.p_hopf = p_cross;
            best.mode = j;
            Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(symbol_matrix(model, p_cross, phi),
                                                               false);
            int lead = 0;
            for (int i = 1; i < model.n; ++i)
                if (solver.eigenvalues()(i).real() > solver.eigenvalues()(lead).real()) lead = i;
            best.omega = std::abs(solver.eigenvalues()(lead).imag());
        }
    }
    if (!std::isfinite(best.p_hopf))
        throw NumericalError("no Hopf in range: no mode crossing below p = " +
                             std::to_string(options.p_max));
    if (options.cross_validate) {
        const double margin = 1e-4;
        const double below = dense_max_real(model, best.p_hopf - margin);
        const double above = dense_max_real(model, best.p_hopf + margin);
        if (!(below < 0.0 && above > 0.0)) {
            std::ostringstream msg;
            msg << "Hopf cross-validation failed: dense spectrum gives max Re " << below
                << " at p_hopf - 1e-4 and " << above << " at p_hopf + 1e-4";
            throw NumericalError(msg.str());
        }
    }
    return best;
}

ChaosScanResult find_k_chaos(const RingModel& model, double p_start,
                             const ChaosScanOptions& options) {
    ChaosScanResult result;
    std::uint64_t cell = 0;
    std::vector<double> undetermined;
    auto classify_from = [&](double p, const Eigen::VectorXd& seed_state) {
        Eigen::VectorXd y0;
        if (seed_state.size() > 0)
            y0 = perturbed(seed_state, options.noise, options.protocol.seed + 0x1000 * ++cell);
        Classification c = classify_attractor(model, p, options.protocol, y0);
        result.path.emplace_back(p, c.label);
        if (c.label == AttractorLabel::undetermined) undetermined.push_back(p);
        if (options.on_classified) options.on_classified(p, c);
        return c;
    };

    Classification current = classify_from(p_start, {});
    if (current.label == AttractorLabel::chaotic) {
        result.p_chaos = p_start;
        result.p_last_regular = p_start;
        result.converged = false;
        result.note = "already chaotic at the scan start; no lower bracket";
        return result;
    }

    double p_lo = p_start;
    Eigen::VectorXd state_lo = current.final_state;
    double p_hi = std::numeric_limits<double>::quiet_NaN();
    for (double p = p_start + options.step; p <= options.p_max + 1e-12; p += options.step) {
        Classification c = classify_from(p, state_lo);
        if (c.label == AttractorLabel::chaotic) {
            p_hi = p;
            break;
        }
        p_lo = p;
        state_lo = c.final_state;
    }
    if (!std::isfinite(p_hi))
        throw NumericalError("no transition found: scan reached p = " +
                             std::to_string(options.p_max) + " without a chaotic label");

    // Bisect [p_lo, p_hi]; undetermined midpoints side with "not chaotic" to
    // keep the upper end certainly chaotic, and are reported in the note.
    while (p_hi - p_lo > options.bisect_tol) {
        const double mid = 0.5 * (p_lo + p_hi);
        Classification c = classify_from(mid, state_lo);
        if (c.label == AttractorLabel::chaotic) {
            p_hi = mid;
        } else {
            p_lo = mid;
            state_lo = c.final_state;
        }
    }
    result.p_chaos = p_hi;
    result.p_last_regular = p_lo;
    result.converged = undetermined.empty();
    if (!undetermined.empty()) {
        std::ostringstream note;
        note << undetermined.size() << " undetermined label(s) in the bracket; onset is an "
             << "interval [" << p_lo << ", " << p_hi << "] rather than a point";
        result.note = note.str();
    }
    return result;
}

ScalingResult scaling_experiment(const ModelFamily& family, const std::vector<int>& sizes,
                                 const ScalingOptions& options) {
    ScalingResult result;
    result.records.resize(sizes.size());
    parallel_for(
        static_cast<int>(sizes.size()),
        [&](int idx) {
            const int N = sizes[static_cast<size_t>(idx)];
            ScanRecord& record = result.records[static_cast<size_t>(idx)];
            record.N = N;
            RingModel model = family(N);
            std::ostringstream diag;
            try {
                HopfPoint hopf = find_k_hopf(model, options.hopf);
                record.k_hopf = hopf.p_hopf;
                diag << "hopf: mode " << hopf.mode << ", bisection tol " << options.hopf.tol;
                if (options.skip_chaos) {
                    record.k_chaos = std::numeric_limits<double>::quiet_NaN();
                    record.k_rescaled = std::numeric_limits<double>::quiet_NaN();
                    diag << "; chaos scan skipped";
                } else {
                    ChaosScanResult chaos =
                        find_k_chaos(model, hopf.p_hopf + options.chaos.step, options.chaos);
                    record.k_chaos = chaos.p_chaos;
                    record.k_rescaled = (chaos.p_chaos - hopf.p_hopf) * N * N;
                    diag << "; chaos: continuation step " << options.chaos.step << ", bisection tol "
                         << options.chaos.bisect_tol << ", " << chaos.path.size() << " cells";
                    if (!chaos.note.empty()) diag << "; " << chaos.note;
                }
            } catch (const std::exception& err) {
                record.k_hopf = std::numeric_limits<double>::quiet_NaN();
                record.k_chaos = std::numeric_limits<double>::quiet_NaN();
                record.k_rescaled = std::numeric_limits<double>::quiet_NaN();
                diag << "failed: " << err.what();
            }
            record.diagnostics = diag.str();
        },
        options.threads);

    std::vector<double> log_n, log_interval;
    for (const auto& record : result.records) {
        const double interval = record.k_chaos - record.k_hopf;
        if (std::isfinite(interval) && interval > 0.0) {
            log_n.push_back(std::log(static_cast<double>(record.N)));
            log_interval.push_back(std::log(interval));
        }
    }
    if (log_n.size() >= 2) {
        auto fit = fit_line(log_n, log_interval);
        result.slope = fit[0];
        result.intercept = fit[1];
        result.r_squared = fit[2];
    }
    return result;
}

TransitionInterval gl_transition_interval(const AmplitudeCoefficients& coeffs,
                                          const GLTransitionOptions& options) {
    TransitionInterval interval;
    interval.r_chaos = std::numeric_limits<double>::quiet_NaN();
    if (coeffs.zeta.real() >= 0.0)
        throw ConfigError("gl_transition_interval needs a supercritical reduction (Re zeta < 0)");

    // The homogeneous zero state destabilizes where the most unstable linear
    // mode crosses; scan modes at unit r and scale (rates are linear in r for
    // q = 0 and affine for the rest).
    double r_hopf = std::numeric_limits<double>::infinity();
    if (coeffs.kappa2.real() <= 0.0)
        throw ConfigError("gl_transition_interval needs Re kappa2 > 0 so that r destabilizes");
    for (auto [q, rate] : gl_linear_growth_rates(1.0, coeffs, options.grid / 3)) {
        // Re rate(q; r) = r Re kappa2 - (Re kappa3 / 2)(2 pi q)^2
        const double diffusion = 0.5 * coeffs.kappa3.real() * std::pow(kTwoPi * q, 2);
        r_hopf = std::min(r_hopf, diffusion / coeffs.kappa2.real());
    }
    interval.r_hopf = r_hopf;  // q = 0 gives 0 for the periodic domain

    double r_last_regular = interval.r_hopf;
    double r_chaotic = std::numeric_limits<double>::quiet_NaN();
    for (double r = interval.r_hopf + options.r_step; r <= options.r_max + 1e-12;
         r += options.r_step) {
        if (gl_divergence_rate(r, coeffs, options) > options.divergence_rate) {
            r_chaotic = r;
            break;
        }
        r_last_regular = r;
    }
    if (!std::isfinite(r_chaotic)) {
        std::ostringstream note;
        note << "no spatio-temporal chaos below r = " << options.r_max
             << "; reporting the upper bound only";
        interval.note = note.str();
        return interval;
    }
    double lo = r_last_regular, hi = r_chaotic;
    while (hi - lo > options.bisect_tol) {
        const double mid = 0.5 * (lo + hi);
        (gl_divergence_rate(mid, coeffs, options) > options.divergence_rate ? hi : lo) = mid;
    }
    interval.r_chaos = hi;
    return interval;
}

std::array<double, 3> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ConfigError("fit_line needs >= 2 points");
    const auto count = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    const double denom = count * sxx - sx * sx;
    if (denom == 0.0) throw ConfigError("fit_line: degenerate abscissae");
    const double slope = (count * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / count;
    const double ss_tot = syy - sy * sy / count;
    double ss_res = 0.0;
    for (size_t i = 0; i < x.size(); ++i) ss_res += std::pow(y[i] - slope * x[i] - intercept, 2);
    const double r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return {slope, intercept, r2};
}

} // namespace oscring
