#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "helpers.hpp"
#include "oscring/amplitude.hpp"
#include "oscring/errors.hpp"
#include "oscring/glsolver.hpp"
#include "oscring/spectrum.hpp"

using namespace oscring;

namespace {

const AmplitudeCoefficients& duffing_coeffs() {
    static AmplitudeCoefficients coeffs = [] {
        RingModel model = make_duffing_ring({}, 30);
        return gl_coefficients(model, find_critical(model, 0.0, 1.0));
    }();
    return coeffs;
}

std::vector<Complex> dft(const std::vector<Complex>& values) {
    const int grid = static_cast<int>(values.size());
    std::vector<Complex> modes(values.size());
    for (int q = 0; q < grid; ++q) {
        Complex acc = 0.0;
        for (int i = 0; i < grid; ++i)
            acc += values[static_cast<size_t>(i)] *
                   std::exp(Complex(0.0, -2.0 * M_PI * q * i / grid));
        modes[static_cast<size_t>(q)] = acc / static_cast<double>(grid);
    }
    return modes;
}

GLField mode_field(int grid, const std::vector<std::pair<int, Complex>>& modes) {
    GLField field = constant_field(grid, 0.0);
    for (int i = 0; i < grid; ++i)
        for (const auto& [wave, amp] : modes)
            field.values[static_cast<size_t>(i)] +=
                amp * std::exp(Complex(0.0, 2.0 * M_PI * wave * i / grid));
    return field;
}

} // namespace

TEST_CASE("plane wave with balanced gain persists") {
    const AmplitudeCoefficients& coeffs = duffing_coeffs();
    const int grid = 64, q = 1;
    const double wave2 = std::pow(2.0 * M_PI * q, 2);
    // pick r so that the saturated amplitude satisfies -Re zeta rho^2 = 1
    const double r = (0.5 * coeffs.kappa3.real() * wave2 + 1.0) / coeffs.kappa2.real();
    const double rho = std::sqrt((r * coeffs.kappa2.real() - 0.5 * coeffs.kappa3.real() * wave2) /
                                 (-coeffs.zeta.real()));
    const Complex sigma =
        r * coeffs.kappa2 - 0.5 * coeffs.kappa3 * wave2 + coeffs.zeta * rho * rho;
    REQUIRE(std::abs(sigma.real()) < 1e-12);

    GLField field = mode_field(grid, {{q, Complex(rho, 0.0)}});
    const double t_end = 5.0, dt = 1e-3;
    field = gl_integrate(field, r, coeffs, t_end, dt);

    double worst = 0.0;
    Complex drift = std::exp(Complex(0.0, sigma.imag() * t_end));
    for (int i = 0; i < grid; ++i) {
        Complex expected = rho * std::exp(Complex(0.0, 2.0 * M_PI * q * i / grid)) * drift;
        worst = std::max(worst, std::abs(field.values[static_cast<size_t>(i)] - expected));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("tiny fields follow the per-mode linear rates") {
    const AmplitudeCoefficients& coeffs = duffing_coeffs();
    const int grid = 32;
    const double r = 2.0, t_end = 0.1, dt = 1e-3;
    const Complex a0(1e-8, 3e-9), a3(-4e-9, 1e-8);
    GLField field = mode_field(grid, {{0, a0}, {3, a3}});
    field = gl_integrate(field, r, coeffs, t_end, dt);

    auto rates = gl_linear_growth_rates(r, coeffs, 3);
    Complex rate0, rate3;
    for (const auto& [q, rate] : rates) {
        if (q == 0) rate0 = rate;
        if (q == 3) rate3 = rate;
    }
    CHECK(std::abs(rate0 - r * coeffs.kappa2) < 1e-15);
    CHECK(std::abs(rate3 - (r * coeffs.kappa2 -
                            0.5 * coeffs.kappa3 * std::pow(2.0 * M_PI * 3, 2))) < 1e-12);

    std::vector<Complex> modes = dft(field.values);
    Complex want0 = a0 * std::exp(rate0 * t_end);
    Complex want3 = a3 * std::exp(rate3 * t_end);
    CHECK(std::abs(modes[0] - want0) / std::abs(want0) < 1e-9);
    CHECK(std::abs(modes[3] - want3) / std::abs(want3) < 1e-9);
}

TEST_CASE("step halving shows at least 3.5th order") {
    const AmplitudeCoefficients& coeffs = duffing_coeffs();
    const int grid = 32;
    const double r = 2.0, t_end = 0.25;
    GLField start = mode_field(grid, {{0, 0.25}, {1, Complex(0.6, 0.1)}, {-2, 0.1}});

    auto run = [&](double dt) { return gl_integrate(start, r, coeffs, t_end, dt); };
    GLField ref = run(t_end / 1600);
    auto err = [&](const GLField& field) {
        double worst = 0.0;
        for (size_t i = 0; i < field.values.size(); ++i)
            worst = std::max(worst, std::abs(field.values[i] - ref.values[i]));
        return worst;
    };
    double coarse = err(run(t_end / 100));
    double fine = err(run(t_end / 200));
    REQUIRE(fine > 0.0);
    double order = std::log2(coarse / fine);
    CHECK(order >= 3.5);
}

TEST_CASE("zero field is an exact fixed point") {
    GLField field = constant_field(16, 0.0);
    field = gl_integrate(field, 3.0, duffing_coeffs(), 0.1, 1e-3);
    for (const Complex& u : field.values) CHECK(std::abs(u) == 0.0);
    CHECK(field.time == doctest::Approx(0.1));
}

TEST_CASE("flow commutes with global phase and grid rotation") {
    const AmplitudeCoefficients& coeffs = duffing_coeffs();
    const int grid = 32;
    const double r = 0.5, t_end = 0.5, dt = 1e-3;
    GLField base = random_field(grid, 0.1, 99);

    GLField evolved = gl_integrate(base, r, coeffs, t_end, dt);

    Complex phase = std::polar(1.0, 1.13);
    GLField phased = base;
    for (auto& u : phased.values) u *= phase;
    phased = gl_integrate(phased, r, coeffs, t_end, dt);
    for (size_t i = 0; i < phased.values.size(); ++i)
        CHECK(std::abs(phased.values[i] - phase * evolved.values[i]) < 1e-12);

    const int shift = 5;
    GLField shifted = base;
    for (int i = 0; i < grid; ++i)
        shifted.values[static_cast<size_t>(i)] =
            base.values[static_cast<size_t>((i + shift) % grid)];
    shifted = gl_integrate(shifted, r, coeffs, t_end, dt);
    for (int i = 0; i < grid; ++i)
        CHECK(std::abs(shifted.values[static_cast<size_t>(i)] -
                       evolved.values[static_cast<size_t>((i + shift) % grid)]) < 1e-12);
}

TEST_CASE("L2 balance law holds along the flow") {
    const AmplitudeCoefficients& coeffs = duffing_coeffs();
    const int grid = 32;
    const double r = 1.0, dt = 1e-4;
    GLField u0 = mode_field(grid, {{0, 0.4}, {1, 0.3}, {-2, Complex(0.2, 0.1)}});

    GLStepper stepper(grid, r, coeffs, dt);
    GLField u1 = u0;
    stepper.step(u1);
    GLField u2 = u1;
    stepper.step(u2);

    auto mean_sq = [&](const GLField& f) {
        double acc = 0.0;
        for (const Complex& u : f.values) acc += std::norm(u);
        return acc / grid;
    };
    auto balance = [&](const GLField& f) {
        std::vector<Complex> modes = dft(f.values);
        double energy = 0.0, gradient = 0.0;
        for (int q = 0; q < grid; ++q) {
            int wave = q <= grid / 2 ? q : q - grid;
            energy += std::norm(modes[static_cast<size_t>(q)]);
            gradient += std::pow(2.0 * M_PI * wave, 2) * std::norm(modes[static_cast<size_t>(q)]);
        }
        double quartic = 0.0;
        for (const Complex& u : f.values) quartic += std::norm(u) * std::norm(u);
        quartic /= grid;
        return 2.0 * r * coeffs.kappa2.real() * energy - coeffs.kappa3.real() * gradient +
               2.0 * coeffs.zeta.real() * quartic;
    };

    double observed = (mean_sq(u2) - mean_sq(u0)) / (2.0 * dt);
    double predicted = balance(u1);
    CHECK(observed == doctest::Approx(predicted).epsilon(1e-4));
}

TEST_CASE("observer cadence and run info") {
    const AmplitudeCoefficients& coeffs = duffing_coeffs();
    int calls = 0;
    GLRunInfo info;
    GLField field = gl_integrate(constant_field(16, 0.2), 1.0, coeffs, 0.1, 1e-3, 10,
                                 [&](const GLField&) { ++calls; }, {}, &info);
    CHECK(calls == 11); // initial state plus every tenth step
    CHECK(info.steps == 100);
    CHECK(info.max_abs > 0.0);
    CHECK(field.time == doctest::Approx(0.1));

    calls = 0;
    gl_integrate(constant_field(16, 0.2), 1.0, coeffs, 0.05, 1e-3, 0,
                 [&](const GLField&) { ++calls; });
    CHECK(calls == 1); // stride 0: only the initial state
}

TEST_CASE("blow-up is reported with the failure time") {
    AmplitudeCoefficients runaway = duffing_coeffs();
    runaway.zeta = -runaway.zeta; // Re zeta > 0: cubic term feeds the instability
    GLOptions options;
    options.blowup_threshold = 10.0;
    CHECK_THROWS_WITH_AS(
        gl_integrate(constant_field(16, 1.0), 5.0, runaway, 10.0, 1e-3, 0, {}, options),
        doctest::Contains("blow-up"), NumericalError);
}

TEST_CASE("anti-diffusive coefficients need the explicit opt-in") {
    AmplitudeCoefficients bad = duffing_coeffs();
    bad.kappa3 = Complex(-0.15, 0.0);
    CHECK_THROWS_AS(GLStepper(32, 1.0, bad, 1e-3), ConfigError);
    GLOptions options;
    options.allow_antidiffusive = true;
    CHECK_NOTHROW(GLStepper(32, 1.0, bad, 1e-3, options));
}

TEST_CASE("field constructors and validation") {
    CHECK_THROWS_AS(constant_field(24, 0.0), ConfigError);
    CHECK_THROWS_AS(random_field(12, 0.1, 1), ConfigError);
    CHECK_THROWS_AS(GLStepper(4, 1.0, duffing_coeffs(), 1e-3), ConfigError);
    CHECK_THROWS_AS(GLStepper(32, 1.0, duffing_coeffs(), 0.0), ConfigError);

    GLField a = random_field(32, 0.1, 42);
    GLField b = random_field(32, 0.1, 42);
    GLField c = random_field(32, 0.1, 43);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);

    GLStepper stepper(32, 1.0, duffing_coeffs(), 1e-3);
    GLField wrong = constant_field(16, 0.1);
    CHECK_THROWS_AS(stepper.step(wrong), ConfigError);

    // gl_step is one stepper application
    GLField once = constant_field(32, 0.3);
    GLField via_stepper = once;
    stepper.step(via_stepper);
    GLField via_wrapper = gl_step(once, 1.0, duffing_coeffs(), 1e-3);
    for (size_t i = 0; i < via_stepper.values.size(); ++i)
        CHECK(std::abs(via_stepper.values[i] - via_wrapper.values[i]) == 0.0);
}

TEST_CASE("spectral tail fraction flags unresolved fields") {
    GLField smooth = mode_field(32, {{1, 0.5}});
    CHECK(smooth.spectral_tail_fraction() < 1e-20);

    GLField rough = constant_field(32, 0.0);
    for (int i = 0; i < 32; ++i) rough.values[static_cast<size_t>(i)] = (i % 2 == 0) ? 1.0 : -1.0;
    CHECK(rough.spectral_tail_fraction() == doctest::Approx(1.0));
}
