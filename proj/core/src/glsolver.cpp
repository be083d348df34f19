#include "oscring/glsolver.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <unsupported/Eigen/FFT>

namespace oscring {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_power_of_two(int m) { return m > 0 && (m & (m - 1)) == 0; }

int signed_wave(int q, int grid) { return q <= grid / 2 ? q : q - grid; }

/// phi_k(z) = (e^z - sum_{j<k} z^j/j!) / z^k, evaluated by Taylor series near
/// zero where the closed form cancels catastrophically.
Complex phi_fn(int k, Complex z) {
    if (std::abs(z) <= 0.5) {
        // factorial start 1/k!, term_j = z^j / (k+j)!
        Complex sum = 0.0, term = 1.0;
        for (int j = 1; j <= k; ++j) term /= static_cast<double>(j);
        sum = term;
        for (int j = 1; j <= 22; ++j) {
            term *= z / static_cast<double>(k + j);
            sum += term;
        }
        return sum;
    }
    Complex ez = std::exp(z);
    switch (k) {
        case 1: return (ez - 1.0) / z;
        case 2: return (ez - 1.0 - z) / (z * z);
        default: return (ez - 1.0 - z - 0.5 * z * z) / (z * z * z);
    }
}

} // namespace

double GLField::spectral_tail_fraction() const {
    if (values.empty()) return 0.0;
    Eigen::FFT<double> fft;
    std::vector<Complex> spectral;
    std::vector<Complex> input = values;
    fft.fwd(spectral, input);
    const int grid = static_cast<int>(values.size());
    double total = 0.0, tail = 0.0;
    for (int q = 0; q < grid; ++q) {
        const double energy = std::norm(spectral[static_cast<size_t>(q)]);
        total += energy;
        if (3 * std::abs(signed_wave(q, grid)) >= grid) tail += energy;
    }
    return total > 0.0 ? tail / total : 0.0;
}

GLField constant_field(int grid, Complex c) {
    if (!is_power_of_two(grid)) throw ConfigError("GL grid size must be a power of two");
    GLField field;
    field.values.assign(static_cast<size_t>(grid), c);
    return field;
}

GLField random_field(int grid, double amplitude, std::uint64_t seed) {
    if (!is_power_of_two(grid)) throw ConfigError("GL grid size must be a power of two");
    GLField field;
    field.values.resize(static_cast<size_t>(grid));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(2.0));
    for (auto& v : field.values) {
        const double re = gauss(rng), im = gauss(rng);
        v = amplitude * Complex(re, im);
    }
    return field;
}

GLStepper::GLStepper(int grid, double r, const AmplitudeCoefficients& coeffs, double dt,
                     const GLOptions& options)
    : grid_(grid), dt_(dt), zeta_(coeffs.zeta), options_(options) {
    if (!is_power_of_two(grid)) throw ConfigError("GL grid size must be a power of two");
    if (grid < 8) throw ConfigError("GL grid size must be at least 8");
    if (dt <= 0.0) throw ConfigError("GL step size must be positive");
    if (coeffs.kappa3.real() < 0.0 && !options.allow_antidiffusive)
        throw ConfigError("anti-diffusive amplitude equation: ill-posed beyond cutoff "
                          "(Re kappa3 < 0; set the spectral-cutoff option to force)");
    const auto size = static_cast<size_t>(grid);
    exp_full_.resize(size);
    exp_half_.resize(size);
    q_.resize(size);
    f1_.resize(size);
    f2_.resize(size);
    f3_.resize(size);
    dealias_keep_.assign(size, 0);
    for (int q = 0; q < grid; ++q) {
        const double wave = kTwoPi * signed_wave(q, grid);
        const Complex rate = r * coeffs.kappa2 - 0.5 * coeffs.kappa3 * wave * wave;
        const Complex z = dt * rate;
        exp_full_[static_cast<size_t>(q)] = std::exp(z);
        exp_half_[static_cast<size_t>(q)] = std::exp(0.5 * z);
        q_[static_cast<size_t>(q)] = 0.5 * dt * phi_fn(1, 0.5 * z);
        const Complex p1 = phi_fn(1, z), p2 = phi_fn(2, z), p3 = phi_fn(3, z);
        f1_[static_cast<size_t>(q)] = dt * (p1 - 3.0 * p2 + 4.0 * p3);
        f2_[static_cast<size_t>(q)] = dt * (2.0 * p2 - 4.0 * p3);
        f3_[static_cast<size_t>(q)] = dt * (4.0 * p3 - p2);
        dealias_keep_[static_cast<size_t>(q)] = 3 * std::abs(signed_wave(q, grid)) < grid ? 1 : 0;
    }
}

/// N(u) = FFT[zeta * u |u|^2] with the 2/3-rule mask applied to both the
/// input copy and the result.
void GLStepper::nonlinear(const std::vector<Complex>& spectral, std::vector<Complex>& out) const {
    thread_local Eigen::FFT<double> fft;
    const auto size = spectral.size();
    std::vector<Complex> masked(size);
    for (size_t q = 0; q < size; ++q) masked[q] = dealias_keep_[q] ? spectral[q] : Complex(0.0);
    std::vector<Complex> phys;
    fft.inv(phys, masked);
    for (auto& u : phys) u *= zeta_ * std::norm(u);
    fft.fwd(out, phys);
    for (size_t q = 0; q < size; ++q)
        if (!dealias_keep_[q]) out[q] = 0.0;
}

void GLStepper::step(GLField& field) const {
    if (field.size() != grid_)
        throw ConfigError("field size does not match the stepper grid");
    thread_local Eigen::FFT<double> fft;
    const auto size = static_cast<size_t>(grid_);
    std::vector<Complex> v;
    fft.fwd(v, field.values);

    std::vector<Complex> nv(size), na(size), nb(size), nc(size), a(size), b(size), c(size);
    nonlinear(v, nv);
    for (size_t q = 0; q < size; ++q) a[q] = exp_half_[q] * v[q] + q_[q] * nv[q];
    nonlinear(a, na);
    for (size_t q = 0; q < size; ++q) b[q] = exp_half_[q] * v[q] + q_[q] * na[q];
    nonlinear(b, nb);
    for (size_t q = 0; q < size; ++q) c[q] = exp_half_[q] * a[q] + q_[q] * (2.0 * nb[q] - nv[q]);
    nonlinear(c, nc);
    for (size_t q = 0; q < size; ++q)
        v[q] = exp_full_[q] * v[q] + f1_[q] * nv[q] + f2_[q] * (na[q] + nb[q]) + f3_[q] * nc[q];

    fft.inv(field.values, v);
    field.time += dt_;

    double peak = 0.0;
    for (const auto& u : field.values) peak = std::max(peak, std::abs(u));
    if (!std::isfinite(peak) || peak > options_.blowup_threshold) {
        std::ostringstream msg;
        msg << "amplitude blow-up at T2 = " << field.time << " (max |u| = " << peak << ")";
        throw NumericalError(msg.str());
    }
}

GLField gl_step(const GLField& field, double r, const AmplitudeCoefficients& coeffs, double dt,
                const GLOptions& options) {
    GLStepper stepper(field.size(), r, coeffs, dt, options);
    GLField next = field;
    stepper.step(next);
    return next;
}

std::vector<std::pair<int, Complex>> gl_linear_growth_rates(double r,
                                                            const AmplitudeCoefficients& coeffs,
                                                            int q_max) {
    std::vector<std::pair<int, Complex>> rates;
    rates.reserve(static_cast<size_t>(2 * q_max + 1));
    for (int q = -q_max; q <= q_max; ++q) {
        const double wave = kTwoPi * q;
        rates.emplace_back(q, r * coeffs.kappa2 - 0.5 * coeffs.kappa3 * wave * wave);
    }
    return rates;
}

GLField gl_integrate(GLField field, double r, const AmplitudeCoefficients& coeffs, double t_end,
                     double dt, int observer_stride, const GLObserver& observer,
                     const GLOptions& options, GLRunInfo* info) {
    GLStepper stepper(field.size(), r, coeffs, dt, options);
    const auto num_steps = static_cast<long long>(std::floor(t_end / dt + 1e-9));
    GLRunInfo run;
    if (observer) observer(field);
    auto note = [&run](const GLField& f) {
        for (const auto& u : f.values) run.max_abs = std::max(run.max_abs, std::abs(u));
        if (f.spectral_tail_fraction() > 1e-6) run.resolution_warning = true;
    };
    // the initial state only feeds max_abs: a rough (e.g. white-noise) start
    // is the user's choice, the tail warning is about evolved fields
    for (const auto& u : field.values) run.max_abs = std::max(run.max_abs, std::abs(u));
    for (long long s = 1; s <= num_steps; ++s) {
        stepper.step(field);
        ++run.steps;
        if (observer_stride > 0 && s % observer_stride == 0) {
            note(field);
            if (observer) observer(field);
        }
    }
    note(field);
    if (info) *info = run;
    return field;
}

} // namespace oscring
