#include "oscring/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace oscring {

namespace {

struct RK4Workspace {
    Eigen::VectorXd k1, k2, k3, k4, tmp;

    explicit RK4Workspace(int dim) : k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim) {}
};

void rk4_step(const RingEvaluator& eval, Eigen::VectorXd& y, double dt, RK4Workspace& ws) {
    eval.rhs(y.data(), ws.k1.data());
    ws.tmp = y + (0.5 * dt) * ws.k1;
    eval.rhs(ws.tmp.data(), ws.k2.data());
    ws.tmp = y + (0.5 * dt) * ws.k2;
    eval.rhs(ws.tmp.data(), ws.k3.data());
    ws.tmp = y + dt * ws.k3;
    eval.rhs(ws.tmp.data(), ws.k4.data());
    y += (dt / 6.0) * (ws.k1 + 2.0 * ws.k2 + 2.0 * ws.k3 + ws.k4);
}

/// State and tangent frame advanced through the same RK4 stages, so the QR
/// bookkeeping sees the tangent flow of the discrete map actually iterated.
struct TangentWorkspace {
    Eigen::VectorXd k1, k2, k3, k4, ytmp;
    Eigen::MatrixXd K1, K2, K3, K4, Vtmp;

    TangentWorkspace(int dim, int cols)
        : k1(dim), k2(dim), k3(dim), k4(dim), ytmp(dim), K1(dim, cols), K2(dim, cols),
          K3(dim, cols), K4(dim, cols), Vtmp(dim, cols) {}
};

void rk4_tangent_step(const RingEvaluator& eval, Eigen::VectorXd& y, Eigen::MatrixXd& V, double dt,
                      TangentWorkspace& ws) {
    const int cols = static_cast<int>(V.cols());
    eval.rhs(y.data(), ws.k1.data());
    eval.apply_jacobian(y.data(), V.data(), ws.K1.data(), cols);
    ws.ytmp = y + (0.5 * dt) * ws.k1;
    ws.Vtmp = V + (0.5 * dt) * ws.K1;
    eval.rhs(ws.ytmp.data(), ws.k2.data());
    eval.apply_jacobian(ws.ytmp.data(), ws.Vtmp.data(), ws.K2.data(), cols);
    ws.ytmp = y + (0.5 * dt) * ws.k2;
    ws.Vtmp = V + (0.5 * dt) * ws.K2;
    eval.rhs(ws.ytmp.data(), ws.k3.data());
    eval.apply_jacobian(ws.ytmp.data(), ws.Vtmp.data(), ws.K3.data(), cols);
    ws.ytmp = y + dt * ws.k3;
    ws.Vtmp = V + dt * ws.K3;
    eval.rhs(ws.ytmp.data(), ws.k4.data());
    eval.apply_jacobian(ws.ytmp.data(), ws.Vtmp.data(), ws.K4.data(), cols);
    y += (dt / 6.0) * (ws.k1 + 2.0 * ws.k2 + 2.0 * ws.k3 + ws.k4);
    V += (dt / 6.0) * (ws.K1 + 2.0 * ws.K2 + 2.0 * ws.K3 + ws.K4);
}

[[noreturn]] void throw_nonfinite(double t) {
    std::ostringstream msg;
    msg << "non-finite state at t = " << t;
    throw NumericalError(msg.str());
}

/// Modified Gram-Schmidt in place; returns the diagonal stretch factors.
/// A factor below the collapse floor is reported via `collapsed`.
Eigen::VectorXd gram_schmidt(Eigen::MatrixXd& V, bool* collapsed) {
    const int cols = static_cast<int>(V.cols());
    Eigen::VectorXd stretch(cols);
    *collapsed = false;
    for (int i = 0; i < cols; ++i) {
        const double r = V.col(i).norm();
        stretch(i) = r;
        if (!(r > 1e-150)) {
            *collapsed = true;
            return stretch;
        }
        V.col(i) /= r;
        for (int j = i + 1; j < cols; ++j) V.col(j) -= V.col(i).dot(V.col(j)) * V.col(i);
    }
    return stretch;
}

/// Cubic Hermite interpolation of one step [0, h] at fraction theta.
double hermite_scalar(double y0, double d0, double y1, double d1, double h, double theta) {
    const double t2 = theta * theta, t3 = t2 * theta;
    return (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + theta) * h * d0 +
           (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1;
}

/// Streaming sign-change detector with cubic Hermite refinement; needs the
/// derivative at each sample, which the integrators have anyway.
class SectionDetector {
public:
    SectionDetector(const SectionSpec& spec, int n) : spec_(spec), index_(spec.node * n + spec.component) {}

    /// Returns true and fills `crossing` when [previous, current] brackets
    /// the section with the requested direction.
    bool feed(double t, const Eigen::VectorXd& y, const Eigen::VectorXd& f,
              SectionCrossing* crossing) {
        const double w = y(index_) - spec_.level;
        bool hit = false;
        if (primed_) {
            const bool upward = w_prev_ < 0.0 && w >= 0.0;
            const bool downward = w_prev_ > 0.0 && w <= 0.0;
            if ((spec_.direction >= 0 && upward) || (spec_.direction <= 0 && downward)) {
                const double h = t - t_prev_;
                double lo = 0.0, hi = 1.0;
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double wm = hermite_scalar(w_prev_, f_prev_(index_), w, f(index_), h, mid);
                    // keep the sub-interval that still brackets the crossing
                    if ((wm >= 0.0) == (w >= 0.0)) hi = mid;
                    else lo = mid;
                }
                const double theta = 0.5 * (lo + hi);
                crossing->t = t_prev_ + theta * h;
                crossing->state.resize(y.size());
                for (int i = 0; i < y.size(); ++i)
                    crossing->state(i) = hermite_scalar(y_prev_(i), f_prev_(i), y(i), f(i), h, theta);
                hit = true;
            }
        }
        t_prev_ = t;
        w_prev_ = w;
        y_prev_ = y;
        f_prev_ = f;
        primed_ = true;
        return hit;
    }

private:
    SectionSpec spec_;
    int index_;
    bool primed_ = false;
    double t_prev_ = 0.0, w_prev_ = 0.0;
    Eigen::VectorXd y_prev_, f_prev_;
};

/// Greedy clustering by distance to the first member of each cluster;
/// returns cluster sizes. Caps the cluster list at `max_clusters` + 1 so
/// callers can tell "too many" from an exact count.
std::vector<int> cluster_points(const std::vector<Eigen::VectorXd>& points, double tol,
                                int max_clusters) {
    std::vector<Eigen::VectorXd> reps;
    std::vector<int> counts;
    for (const auto& pt : points) {
        bool found = false;
        for (size_t c = 0; c < reps.size(); ++c) {
            if ((pt - reps[c]).lpNorm<Eigen::Infinity>() <= tol) {
                ++counts[c];
                found = true;
                break;
            }
        }
        if (!found) {
            if (static_cast<int>(reps.size()) > max_clusters) break;
            reps.push_back(pt);
            counts.push_back(1);
        }
    }
    return counts;
}

/// Two-radius correlation-sum slope of the section point cloud; ~1 for
/// points filling a closed curve, ~0 for clusters, larger for chaotic sheets.
double correlation_dimension(const std::vector<Eigen::VectorXd>& points) {
    const int count = static_cast<int>(points.size());
    if (count < 32) return 0.0;
    std::vector<double> dists;
    dists.reserve(static_cast<size_t>(count) * (count - 1) / 2);
    for (int i = 0; i < count; ++i)
        for (int j = i + 1; j < count; ++j) {
            double d = (points[static_cast<size_t>(i)] - points[static_cast<size_t>(j)]).norm();
            if (d > 0.0) dists.push_back(d);
        }
    if (dists.size() < 64) return 0.0;
    std::sort(dists.begin(), dists.end());
    const double r1 = dists[dists.size() / 10];
    const double r2 = dists[dists.size() / 3];
    if (!(r2 > r1 * 1.0001)) return 0.0;
    const auto c1 = std::upper_bound(dists.begin(), dists.end(), r1) - dists.begin();
    const auto c2 = std::upper_bound(dists.begin(), dists.end(), r2) - dists.begin();
    if (c1 == 0 || c2 <= c1) return 0.0;
    return std::log(static_cast<double>(c2) / static_cast<double>(c1)) / std::log(r2 / r1);
}

} // namespace

Eigen::VectorXd integrate_to(const RingEvaluator& eval, Eigen::VectorXd y, double t_span,
                             double dt) {
    RK4Workspace ws(eval.dim());
    const auto steps = static_cast<long long>(std::floor(t_span / dt + 1e-9));
    for (long long s = 0; s < steps; ++s) {
        rk4_step(eval, y, dt, ws);
        if (s % 1024 == 0 && !y.allFinite()) throw_nonfinite(static_cast<double>(s + 1) * dt);
    }
    const double rest = t_span - static_cast<double>(steps) * dt;
    if (rest > 1e-12) rk4_step(eval, y, rest, ws);
    if (!y.allFinite()) throw_nonfinite(t_span);
    return y;
}

Trajectory integrate(const RingModel& model, const Eigen::VectorXd& y0, double p, double t_end,
                     double dt, const IntegrateOptions& options, const StateObserver& observer) {
    if (dt <= 0.0) throw ConfigError("integrate needs dt > 0");
    if (y0.size() != model.dim()) throw ConfigError("initial state has wrong dimension");
    if (options.method != "rk4" && options.method != "rk45")
        throw ConfigError("unknown integration method '" + options.method + "'");
    RingEvaluator eval(model, p);
    Trajectory traj;
    traj.model = &model;
    traj.parameter = p;
    traj.dt = dt;
    traj.method = options.method;

    Eigen::VectorXd y = y0;
    double t = 0.0;
    long long accepted = 0;
    auto record = [&](bool force) {
        if (options.store_stride > 0 && accepted % options.store_stride == 0) force = true;
        if (force) {
            if (!traj.times.empty() && traj.times.back() == t) return;
            traj.times.push_back(t);
            traj.states.push_back(y);
        }
    };
    if (options.store_stride > 0) record(true);
    if (observer) observer(t, y);

    if (options.method == "rk4") {
        RK4Workspace ws(eval.dim());
        const auto steps = static_cast<long long>(std::floor(t_end / dt + 1e-9));
        const double rest = t_end - static_cast<double>(steps) * dt;
        for (long long s = 0; s < steps; ++s) {
            rk4_step(eval, y, dt, ws);
            t = static_cast<double>(s + 1) * dt;
            if (!y.allFinite()) throw_nonfinite(t);
            ++accepted;
            record(false);
            if (observer) observer(t, y);
        }
        if (rest > 1e-12) {
            rk4_step(eval, y, rest, ws);
            t = t_end;
            if (!y.allFinite()) throw_nonfinite(t);
            ++accepted;
            record(false);
            if (observer) observer(t, y);
        }
        record(true);
        return traj;
    }

    // Dormand-Prince 5(4) embedded pair.
    static const double A[7][6] = {
        {},
        {1.0 / 5},
        {3.0 / 40, 9.0 / 40},
        {44.0 / 45, -56.0 / 15, 32.0 / 9},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
        {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
    static const double E[7] = {71.0 / 57600,    0.0,        -71.0 / 16695, 71.0 / 1920,
                                -17253.0 / 339200, 22.0 / 525, -1.0 / 40};
    std::array<Eigen::VectorXd, 7> k;
    for (auto& stage : k) stage.resize(eval.dim());
    Eigen::VectorXd ytmp(eval.dim()), ynew(eval.dim()), yerr(eval.dim());
    double h = dt;
    while (t < t_end - 1e-12) {
        h = std::min(h, t_end - t);
        eval.rhs(y.data(), k[0].data());
        for (int stage = 1; stage < 7; ++stage) {
            ytmp = y;
            for (int prev = 0; prev < stage; ++prev)
                if (A[stage][prev] != 0.0) ytmp += (h * A[stage][prev]) * k[static_cast<size_t>(prev)];
            eval.rhs(ytmp.data(), k[static_cast<size_t>(stage)].data());
        }
        ynew = ytmp;  // stage 7 abscissa uses the 5th-order weights: ytmp is already y_{n+1}
        yerr.setZero();
        for (int stage = 0; stage < 7; ++stage)
            if (E[stage] != 0.0) yerr += (h * E[stage]) * k[static_cast<size_t>(stage)];
        double err = 0.0;
        for (int i = 0; i < eval.dim(); ++i) {
            const double scale =
                options.abs_tol + options.rel_tol * std::max(std::abs(y(i)), std::abs(ynew(i)));
            err += std::pow(yerr(i) / scale, 2);
        }
        err = std::sqrt(err / eval.dim());
        if (err <= 1.0) {
            t += h;
            y = ynew;
            if (!y.allFinite()) throw_nonfinite(t);
            ++accepted;
            record(false);
            if (observer) observer(t, y);
        } else {
            ++traj.rejected_steps;
        }
        const double factor = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        h *= std::clamp(factor, 0.2, 5.0);
        if (h < 1e-14) throw NumericalError("adaptive step size underflow at t = " + std::to_string(t));
    }
    record(true);
    return traj;
}

LyapunovOptions lyapunov_ci_options() {
    LyapunovOptions options;
    options.t_transient = 5e2;
    options.t_total = 5e3;
    return options;
}

double LyapunovResult::standard_error(int i) const {
    const auto total = convergence_history.size();
    if (total < 5) return std::numeric_limits<double>::quiet_NaN();
    const size_t start = total - std::max<size_t>(total / 5, 2);
    double mean = 0.0;
    for (size_t s = start; s < total; ++s) mean += convergence_history[s][static_cast<size_t>(i)];
    mean /= static_cast<double>(total - start);
    double var = 0.0;
    for (size_t s = start; s < total; ++s)
        var += std::pow(convergence_history[s][static_cast<size_t>(i)] - mean, 2);
    return std::sqrt(var / static_cast<double>(total - start));
}

LyapunovResult lyapunov_spectrum(const RingModel& model, double p, int num_exponents,
                                 const Eigen::VectorXd& y0, const LyapunovOptions& options) {
    if (num_exponents < 1 || num_exponents > model.dim())
        throw ConfigError("num_exponents must be in [1, N*n]");
    if (!(options.t_total > options.t_transient))
        throw ConfigError("lyapunov run needs t_total > t_transient");
    if (y0.size() != model.dim()) throw ConfigError("initial state has wrong dimension");

    RingEvaluator eval(model, p);
    const int dim = eval.dim();
    Eigen::VectorXd y = y0;
    Eigen::MatrixXd V = Eigen::MatrixXd::Identity(dim, num_exponents);
    TangentWorkspace ws(dim, num_exponents);

    LyapunovResult result;
    result.num_exponents = num_exponents;
    result.t_transient = options.t_transient;
    result.t_total = options.t_total;
    result.renorm_interval = options.renorm_interval;

    double interval = options.renorm_interval;
    int halvings = 0;
    Eigen::VectorXd logsum = Eigen::VectorXd::Zero(num_exponents);
    double t = 0.0, t_accum_start = options.t_transient;
    long long renorms_kept = 0;

    while (t < options.t_total - 1e-9) {
        const double span = std::min(interval, options.t_total - t);
        auto steps = static_cast<long long>(std::llround(span / options.dt));
        if (steps < 1) steps = 1;
        const double dt = span / static_cast<double>(steps);
        for (long long s = 0; s < steps; ++s) rk4_tangent_step(eval, y, V, dt, ws);
        t += span;
        if (!y.allFinite() || !V.allFinite()) throw_nonfinite(t);

        bool collapsed = false;
        Eigen::VectorXd stretch = gram_schmidt(V, &collapsed);
        if (collapsed) {
            if (++halvings > 4)
                throw NumericalError("tangent collapse persisted after halving the "
                                     "renormalization interval 4 times");
            interval /= 2.0;
            result.renorm_interval = interval;
            V = Eigen::MatrixXd::Identity(dim, num_exponents);
            logsum.setZero();
            t_accum_start = std::max(t, options.t_transient);
            result.convergence_history.clear();
            continue;
        }
        if (t > options.t_transient + 1e-9) {
            for (int i = 0; i < num_exponents; ++i) logsum(i) += std::log(stretch(i));
            ++renorms_kept;
            if (options.history_stride > 0 && renorms_kept % options.history_stride == 0) {
                std::vector<double> estimate(static_cast<size_t>(num_exponents));
                for (int i = 0; i < num_exponents; ++i)
                    estimate[static_cast<size_t>(i)] = logsum(i) / (t - t_accum_start);
                result.convergence_history.push_back(std::move(estimate));
            }
        } else if (t >= options.t_transient - 1e-9) {
            t_accum_start = t;
        }
    }
    if (t <= t_accum_start + 1e-9)
        throw NumericalError("no accumulation window left after transient and collapses");

    result.exponents.resize(static_cast<size_t>(num_exponents));
    for (int i = 0; i < num_exponents; ++i)
        result.exponents[static_cast<size_t>(i)] = logsum(i) / (t - t_accum_start);
    std::sort(result.exponents.begin(), result.exponents.end(), std::greater<double>());
    return result;
}

std::vector<SectionCrossing> poincare_section(const Trajectory& trajectory,
                                              const SectionSpec& spec) {
    if (!trajectory.model) throw ConfigError("trajectory carries no model reference");
    const RingModel& model = *trajectory.model;
    if (spec.node < 0 || spec.node >= model.N || spec.component < 0 || spec.component >= model.n)
        throw ConfigError("section index out of range");
    RingEvaluator eval(model, trajectory.parameter);
    SectionDetector detector(spec, model.n);
    std::vector<SectionCrossing> crossings;
    Eigen::VectorXd f(model.dim());
    SectionCrossing hit;
    for (int i = 0; i < trajectory.size(); ++i) {
        eval.rhs(trajectory.states[static_cast<size_t>(i)].data(), f.data());
        if (detector.feed(trajectory.times[static_cast<size_t>(i)],
                          trajectory.states[static_cast<size_t>(i)], f, &hit))
            crossings.push_back(hit);
    }
    return crossings;
}

std::string to_string(AttractorLabel label) {
    switch (label) {
        case AttractorLabel::equilibrium: return "equilibrium";
        case AttractorLabel::periodic: return "periodic";
        case AttractorLabel::torus: return "torus";
        case AttractorLabel::chaotic: return "chaotic";
        default: return "undetermined";
    }
}

ClassifyProtocol ClassifyProtocol::production() { return {}; }

ClassifyProtocol ClassifyProtocol::ci() {
    ClassifyProtocol protocol;
    protocol.t_transient = 5e2;
    protocol.t_total = 5e3;
    protocol.section_crossings = 150;
    protocol.section_t_max = 2e3;
    return protocol;
}

Classification classify_attractor(const RingModel& model, double p,
                                  const ClassifyProtocol& protocol, const Eigen::VectorXd& y0) {
    RingEvaluator eval(model, p);
    const int dim = model.dim();
    Eigen::VectorXd y;
    if (y0.size() == 0) {
        std::mt19937_64 rng(protocol.seed);
        std::uniform_real_distribution<double> uniform(-1e-3, 1e-3);
        y.resize(dim);
        for (int i = 0; i < dim; ++i) y(i) = uniform(rng);
    } else if (y0.size() == dim) {
        y = y0;
    } else {
        throw ConfigError("initial state has wrong dimension");
    }

    Classification out;
    out.largest_exponent = std::numeric_limits<double>::quiet_NaN();

    y = integrate_to(eval, std::move(y), protocol.t_transient, protocol.dt);
    if (y.norm() < protocol.equilibrium_tol) {
        out.label = AttractorLabel::equilibrium;
        out.final_state = y;
        out.detail = "decayed to the origin during the transient";
        return out;
    }

    // Section stage: collect return-map points; stop early once a small
    // cluster count is confirmed by repeated visits.
    SectionSpec spec;  // x-component of node 0, upward through zero
    SectionDetector detector(spec, model.n);
    std::vector<Eigen::VectorXd> points;
    RK4Workspace ws(dim);
    Eigen::VectorXd f(dim);
    double t = 0.0;
    double peak = 0.0;
    SectionCrossing hit;
    eval.rhs(y.data(), f.data());
    detector.feed(t, y, f, &hit);
    const auto max_steps = static_cast<long long>(protocol.section_t_max / protocol.dt);
    for (long long s = 0; s < max_steps; ++s) {
        rk4_step(eval, y, protocol.dt, ws);
        t += protocol.dt;
        eval.rhs(y.data(), f.data());
        if (detector.feed(t, y, f, &hit)) {
            points.push_back(hit.state);
            if (static_cast<int>(points.size()) >= protocol.section_crossings) break;
            if (points.size() >= 120 && points.size() % 40 == 0) {
                // confirmation window: the most recent 80 crossings
                std::vector<Eigen::VectorXd> recent(points.end() - 80, points.end());
                auto counts = cluster_points(recent, protocol.cluster_tol, protocol.max_period);
                if (static_cast<int>(counts.size()) <= protocol.max_period &&
                    *std::min_element(counts.begin(), counts.end()) >= 3)
                    break;
            }
        }
        peak = std::max(peak, y.lpNorm<Eigen::Infinity>());
        if (s % 1024 == 0 && !y.allFinite()) throw_nonfinite(t);
    }
    out.final_state = y;
    if (peak < protocol.equilibrium_tol && points.empty()) {
        out.label = AttractorLabel::equilibrium;
        out.detail = "state stayed below the equilibrium tolerance";
        return out;
    }

    const size_t tail_start = points.size() / 3;
    std::vector<Eigen::VectorXd> tail(points.begin() + static_cast<std::ptrdiff_t>(tail_start),
                                      points.end());
    auto counts = cluster_points(tail, protocol.cluster_tol, protocol.max_period);
    out.section_clusters = static_cast<int>(counts.size());
    const bool few_clusters = !tail.empty() &&
                              static_cast<int>(counts.size()) <= protocol.max_period &&
                              static_cast<int>(tail.size()) >= 3 * static_cast<int>(counts.size());
    if (few_clusters) {
        out.label = AttractorLabel::periodic;
        std::ostringstream detail;
        detail << counts.size() << " section cluster(s) over " << tail.size() << " crossings";
        out.detail = detail.str();
        return out;
    }
    out.section_dimension = correlation_dimension(tail);

    // Lyapunov stage decides between chaos and a regular densely-sampled
    // section; run from the current (settled) state.
    LyapunovOptions lyap;
    lyap.t_transient = protocol.t_transient;
    lyap.t_total = protocol.t_total;
    lyap.dt = protocol.dt;
    LyapunovResult lyapunov = lyapunov_spectrum(model, p, std::min(2, dim), y, lyap);
    out.largest_exponent = lyapunov.exponents.front();
    std::ostringstream detail;
    detail << "lambda1 = " << out.largest_exponent << ", section dimension = "
           << out.section_dimension << " over " << tail.size() << " crossings";
    out.detail = detail.str();
    if (out.largest_exponent > protocol.chaos_threshold) {
        out.label = AttractorLabel::chaotic;
    } else if (out.largest_exponent >= protocol.undetermined_low) {
        out.label = AttractorLabel::undetermined;
    } else if (out.section_dimension > 0.0 && out.section_dimension <= protocol.curve_dimension_max) {
        out.label = AttractorLabel::torus;
    } else if (tail.empty()) {
        // no crossings at all: a non-decaying state that never cuts the
        // section; treat as periodic in a rotated frame
        out.label = AttractorLabel::periodic;
    } else {
        out.label = AttractorLabel::undetermined;
    }
    return out;
}

} // namespace oscring
