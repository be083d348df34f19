#include "oscring/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace oscring {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<Complex> eigenvalues_at(const RingModel& model, double p, double phi) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(symbol_matrix(model, p, phi), false);
    if (solver.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "eigenvalue solver failed at phi = " << phi << ", p = " << p;
        throw NumericalError(msg.str());
    }
    std::vector<Complex> ev(static_cast<size_t>(model.n));
    for (int i = 0; i < model.n; ++i) ev[static_cast<size_t>(i)] = solver.eigenvalues()(i);
    return ev;
}

double max_real_at(const RingModel& model, double p, double phi) {
    double best = -std::numeric_limits<double>::infinity();
    for (Complex ev : eigenvalues_at(model, p, phi)) best = std::max(best, ev.real());
    return best;
}

/// Greedy assignment of `candidates` to `predicted`, most-confident pair
/// first: repeatedly match the globally closest (branch, candidate) pair.
std::vector<int> match_branches(const std::vector<Complex>& predicted,
                                const std::vector<Complex>& candidates) {
    const int n = static_cast<int>(predicted.size());
    std::vector<int> assignment(static_cast<size_t>(n), -1);
    std::vector<bool> used(static_cast<size_t>(n), false);
    for (int round = 0; round < n; ++round) {
        double best = std::numeric_limits<double>::infinity();
        int bb = -1, bc = -1;
        for (int b = 0; b < n; ++b) {
            if (assignment[static_cast<size_t>(b)] >= 0) continue;
            for (int c = 0; c < n; ++c) {
                if (used[static_cast<size_t>(c)]) continue;
                double dist = std::abs(candidates[static_cast<size_t>(c)] - predicted[static_cast<size_t>(b)]);
                if (dist < best) {
                    best = dist;
                    bb = b;
                    bc = c;
                }
            }
        }
        assignment[static_cast<size_t>(bb)] = bc;
        used[static_cast<size_t>(bc)] = true;
    }
    return assignment;
}

/// Maximize f over [lo, hi] by golden-section; returns argmax.
template <typename F>
double golden_max(F&& f, double lo, double hi, double tol = 1e-12) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    return (a + b) / 2.0;
}

struct PhiMax {
    double phi;
    double value;
};

/// max over phi of max Re lambda(phi) at fixed p: coarse grid argmax, then
/// golden-section refinement within the bracketing grid cells.
PhiMax maximize_over_phi(const RingModel& model, double p, int samples) {
    double best_val = -std::numeric_limits<double>::infinity();
    int best_i = 0;
    const double h = kTwoPi / samples;
    for (int i = 0; i < samples; ++i) {
        double v = max_real_at(model, p, i * h);
        if (v > best_val) {
            best_val = v;
            best_i = i;
        }
    }
    auto f = [&](double phi) { return max_real_at(model, p, phi); };
    double phi = golden_max(f, (best_i - 1) * h, (best_i + 1) * h);
    return {std::fmod(phi + kTwoPi, kTwoPi), f(phi)};
}

Complex eigenvalue_near(const RingModel& model, double p, double phi, Complex target) {
    Complex best;
    double dist = std::numeric_limits<double>::infinity();
    for (Complex ev : eigenvalues_at(model, p, phi)) {
        if (std::abs(ev - target) < dist) {
            dist = std::abs(ev - target);
            best = ev;
        }
    }
    return best;
}

} // namespace

Eigen::MatrixXcd symbol_matrix(const RingModel& model, double p, double phi) {
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(model.n, model.n);
    for (int m = -model.R; m <= model.R; ++m)
        s += std::exp(Complex(0.0, m * phi)) * model.coupling_at(m, p);
    return s;
}

double SpectrumCurve::max_real() const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& branch : branches)
        for (Complex ev : branch) best = std::max(best, ev.real());
    return best;
}

double SpectrumCurve::distance_to(Complex z) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& branch : branches)
        for (Complex ev : branch) best = std::min(best, std::abs(ev - z));
    return best;
}

SpectrumCurve continuous_spectrum(const RingModel& model, double p, int num_phi) {
    if (num_phi < 16) throw ConfigError("continuous_spectrum needs at least 16 phi samples");
    SpectrumCurve curve;
    curve.parameter = p;
    curve.phi.resize(static_cast<size_t>(num_phi));
    curve.branches.assign(static_cast<size_t>(model.n),
                          std::vector<Complex>(static_cast<size_t>(num_phi)));
    const double h = kTwoPi / num_phi;
    for (int i = 0; i < num_phi; ++i) {
        curve.phi[static_cast<size_t>(i)] = i * h;
        auto ev = eigenvalues_at(model, p, i * h);
        if (i == 0) {
            // Deterministic branch seeds: sort by (Re, Im).
            std::sort(ev.begin(), ev.end(), [](Complex a, Complex b) {
                return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
            });
            for (int b = 0; b < model.n; ++b)
                curve.branches[static_cast<size_t>(b)][0] = ev[static_cast<size_t>(b)];
            continue;
        }
        std::vector<Complex> predicted(static_cast<size_t>(model.n));
        for (int b = 0; b < model.n; ++b) {
            const auto& br = curve.branches[static_cast<size_t>(b)];
            predicted[static_cast<size_t>(b)] =
                i >= 2 ? 2.0 * br[static_cast<size_t>(i - 1)] - br[static_cast<size_t>(i - 2)]
                       : br[static_cast<size_t>(i - 1)];
        }
        auto assignment = match_branches(predicted, ev);
        // Near-degeneracy guard: when a branch jumps by far more than its
        // recent secant suggests, re-derive the assignment by threading
        // through a 4x refined sub-grid between the two samples.
        bool suspicious = false;
        for (int b = 0; b < model.n && !suspicious; ++b) {
            const auto& br = curve.branches[static_cast<size_t>(b)];
            double jump = std::abs(ev[static_cast<size_t>(assignment[static_cast<size_t>(b)])] -
                                   br[static_cast<size_t>(i - 1)]);
            double secant = i >= 2 ? std::abs(br[static_cast<size_t>(i - 1)] - br[static_cast<size_t>(i - 2)])
                                   : jump;
            if (jump > 10.0 * (secant + 1e-12)) suspicious = true;
        }
        if (suspicious) {
            std::vector<Complex> walker(static_cast<size_t>(model.n));
            for (int b = 0; b < model.n; ++b)
                walker[static_cast<size_t>(b)] = curve.branches[static_cast<size_t>(b)][static_cast<size_t>(i - 1)];
            for (int sub = 1; sub <= 4; ++sub) {
                auto fine = eigenvalues_at(model, p, (i - 1) * h + sub * h / 4.0);
                auto sub_assign = match_branches(walker, fine);
                for (int b = 0; b < model.n; ++b)
                    walker[static_cast<size_t>(b)] = fine[static_cast<size_t>(sub_assign[static_cast<size_t>(b)])];
            }
            assignment = match_branches(walker, ev);
        }
        for (int b = 0; b < model.n; ++b)
            curve.branches[static_cast<size_t>(b)][static_cast<size_t>(i)] =
                ev[static_cast<size_t>(assignment[static_cast<size_t>(b)])];
    }
    return curve;
}

std::vector<Complex> discrete_spectrum(const RingModel& model, double p) {
    std::vector<Complex> all;
    all.reserve(static_cast<size_t>(model.dim()));
    for (int j = 1; j <= model.N; ++j) {
        for (Complex ev : eigenvalues_at(model, p, kTwoPi * j / model.N)) all.push_back(ev);
    }
    return all;
}

CouplingMoments coupling_moments(const RingModel& model, double phi0, double p) {
    CouplingMoments mom;
    mom.L0 = Eigen::MatrixXcd::Zero(model.n, model.n);
    mom.L1 = mom.L0;
    mom.L2 = mom.L0;
    mom.LK = mom.L0;
    for (int m = -model.R; m <= model.R; ++m) {
        Complex w = std::exp(Complex(0.0, m * phi0));
        Eigen::MatrixXd block = model.coupling_at(m, p);
        mom.L0 += w * block;
        mom.L1 += (w * static_cast<double>(m)) * block;
        mom.L2 += (w * static_cast<double>(m * m)) * block;
        mom.LK += w * model.slope_block(m);
    }
    return mom;
}

CriticalData find_critical(const RingModel& model, double p_lo, double p_hi,
                           const CriticalSearchOptions& opts) {
    if (!(p_lo < p_hi)) throw ConfigError("critical search needs p_lo < p_hi");
    PhiMax lo = maximize_over_phi(model, p_lo, opts.coarse_samples);
    PhiMax hi = maximize_over_phi(model, p_hi, opts.coarse_samples);
    if (lo.value >= 0.0 || hi.value <= 0.0) {
        std::ostringstream msg;
        msg << "critical point not bracketed: max Re lambda = " << lo.value << " at p = " << p_lo
            << " and " << hi.value << " at p = " << p_hi;
        throw ConfigError(msg.str());
    }
    double a = p_lo, b = p_hi;
    PhiMax mid = lo;
    double p_c = p_lo;
    for (int iter = 0; iter < 200; ++iter) {
        p_c = (a + b) / 2.0;
        mid = maximize_over_phi(model, p_c, opts.coarse_samples);
        if (std::abs(mid.value) < opts.value_tol) break;
        (mid.value < 0.0 ? a : b) = p_c;
        if (b - a < 1e-15 * std::max(1.0, std::abs(b))) break;
    }
    if (std::abs(mid.value) >= opts.value_tol)
        throw NumericalError("critical bisection stalled: |max Re lambda| = " +
                             std::to_string(std::abs(mid.value)));

    double phi0 = mid.phi;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(symbol_matrix(model, p_c, phi0), true);
    if (solver.info() != Eigen::Success) throw NumericalError("eigensolver failed at critical point");
    int lead = 0;
    for (int i = 1; i < model.n; ++i)
        if (solver.eigenvalues()(i).real() > solver.eigenvalues()(lead).real()) lead = i;
    // Conjugate tangencies at +-phi0 are the same point; report the one with
    // omega0 >= 0 (rounding-level imaginary parts stay put).
    if (solver.eigenvalues()(lead).imag() < -1e-12) {
        phi0 = kTwoPi - phi0;
        solver.compute(symbol_matrix(model, p_c, phi0), true);
        lead = 0;
        for (int i = 1; i < model.n; ++i)
            if (solver.eigenvalues()(i).real() > solver.eigenvalues()(lead).real()) lead = i;
    }
    const Complex lambda_c = solver.eigenvalues()(lead);
    const double omega0 = lambda_c.imag();

    for (int i = 0; i < model.n; ++i) {
        if (i == lead) continue;
        if (std::abs(solver.eigenvalues()(i) - Complex(0.0, omega0)) < opts.simple_tol)
            throw NumericalError("regular point assumption violated: critical eigenvalue not simple");
    }
    const double re_slope =
        (eigenvalue_near(model, p_c, phi0 + opts.fd_step, lambda_c).real() -
         eigenvalue_near(model, p_c, phi0 - opts.fd_step, lambda_c).real()) /
        (2.0 * opts.fd_step);
    if (std::abs(re_slope) > opts.tangency_tol)
        throw NumericalError("tangency condition violated: Re dlambda/dphi = " +
                             std::to_string(re_slope));

    CriticalData crit;
    crit.p_c = p_c;
    crit.phi0 = phi0;
    crit.omega0 = omega0;
    crit.v0 = solver.eigenvectors().col(lead);
    crit.v0 /= crit.v0.norm();

    Eigen::MatrixXcd adj = symbol_matrix(model, p_c, phi0).adjoint();
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> asolver(adj, true);
    if (asolver.info() != Eigen::Success) throw NumericalError("adjoint eigensolver failed");
    int alead = 0;
    double adist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < model.n; ++i) {
        double dist = std::abs(asolver.eigenvalues()(i) - std::conj(lambda_c));
        if (dist < adist) {
            adist = dist;
            alead = i;
        }
    }
    crit.v1 = asolver.eigenvectors().col(alead);
    Complex overlap = inner(crit.v0, crit.v1);
    if (std::abs(overlap) < 1e-12)
        throw NumericalError("critical eigenvectors nearly orthogonal; cannot normalize <v0,v1>=1");
    crit.v1 /= std::conj(overlap);

    Complex kappa1 = inner(coupling_moments(model, phi0, p_c).L1 * crit.v0, crit.v1);
    if (std::abs(kappa1.imag()) > 1e-6)
        throw NumericalError("transport coefficient has spurious imaginary part " +
                             std::to_string(kappa1.imag()));
    crit.kappa1 = kappa1.real();
    return crit;
}

double lemma1_check(const RingModel& model, const CriticalData& critical) {
    const double step = 1e-5;
    const Complex lambda_c(0.0, critical.omega0);
    Complex plus = eigenvalue_near(model, critical.p_c, critical.phi0 + step, lambda_c);
    Complex minus = eigenvalue_near(model, critical.p_c, critical.phi0 - step, lambda_c);
    Complex dlambda = (plus - minus) / (2.0 * step);
    Complex projected =
        inner(coupling_moments(model, critical.phi0, critical.p_c).L1 * critical.v0, critical.v1);
    return std::abs(projected - dlambda / Complex(0.0, 1.0));
}

} // namespace oscring
