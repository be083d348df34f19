#include <doctest.h>

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "oscring/amplitude.hpp"
#include "oscring/errors.hpp"
#include "oscring/glsolver.hpp"

using namespace oscring;

namespace {

CriticalData duffing_critical() {
    static CriticalData critical = find_critical(make_duffing_ring({}, 30), 0.0, 1.0);
    return critical;
}

} // namespace

TEST_CASE("cubic probe recovers the analytic harmonics of the duffing term") {
    RingModel model = make_duffing_ring({}, 12);
    Eigen::VectorXcd v0(2);
    v0 << Complex(0.8, 0.1), Complex(0.3, -0.55); // no special structure required
    CubicProbe probe = probe_cubic(model, v0, 1.1);

    Complex vx = v0(0);
    Eigen::VectorXcd h1(2), h2(2);
    h1 << 0.0, -3.0 * std::norm(vx) * vx;
    h2 << 0.0, -vx * vx * vx;
    CHECK((probe.first_harmonic - h1).norm() < 1e-12);
    CHECK((probe.third_harmonic - h2).norm() < 1e-12);
}

TEST_CASE("cubic probe rejects quadratic and strongly quintic terms") {
    Eigen::VectorXcd v0(2);
    v0 << Complex(0.9, 0.0), Complex(0.2, 0.4);

    RingModel quadratic = make_duffing_ring({}, 8);
    quadratic.builtin = BuiltinNonlinearity::custom;
    quadratic.nonlinearity_jacobian = {};
    quadratic.nonlinearity = [](const Eigen::MatrixXd& window, double) {
        double x = window(0, 1);
        return Eigen::Vector2d(0.0, x * x);
    };
    CHECK_THROWS_AS(probe_cubic(quadratic, v0, 1.1), NumericalError);

    RingModel quintic = make_duffing_ring({}, 8);
    quintic.builtin = BuiltinNonlinearity::custom;
    quintic.nonlinearity_jacobian = {};
    quintic.nonlinearity = [](const Eigen::MatrixXd& window, double) {
        double x = window(0, 1);
        return Eigen::Vector2d(0.0, -x * x * x + 100.0 * std::pow(x, 5));
    };
    CHECK_THROWS_AS(probe_cubic(quintic, v0, 1.1), NumericalError);
}

TEST_CASE("amplitude coefficients of the duffing ring match the frozen reference") {
    RingModel model = make_duffing_ring({}, 30);
    AmplitudeCoefficients coeffs = gl_coefficients(model, duffing_critical());

    CHECK(coeffs.kappa1 == doctest::Approx(testutil::kKappa1).epsilon(1e-6));
    CHECK(std::abs(coeffs.kappa2 - testutil::kKappa2) < 1e-6);
    CHECK(std::abs(coeffs.kappa3 - testutil::kKappa3) < 1e-6);
    CHECK(std::abs(coeffs.zeta - testutil::kZeta) < 1e-6);
    CHECK(std::abs(coeffs.v2(0) - testutil::kV2x) < 1e-6);
    CHECK(std::abs(coeffs.v2(1) - testutil::kV2z) < 1e-6);

    // cubic response vectors agree with the closed form in v0
    Complex vx = coeffs.v0(0);
    CHECK(std::abs(coeffs.h1_v0(1) + 3.0 * std::norm(vx) * vx) < 1e-10);
    CHECK(std::abs(coeffs.h2_v0(1) + vx * vx * vx) < 1e-10);
    CHECK(std::abs(coeffs.h1_v0(0)) < 1e-12);
    CHECK(std::abs(coeffs.h2_v0(0)) < 1e-12);

    // the slaved vector solves its defining linear system
    Eigen::MatrixXcd resonance =
        Complex(0.0, 3.0 * coeffs.omega0) * Eigen::MatrixXcd::Identity(2, 2) -
        symbol_matrix(model, duffing_critical().p_c, 3.0 * coeffs.phi0);
    CHECK((resonance * coeffs.v2 - coeffs.h2_v0).norm() < 1e-10);
}

TEST_CASE("projected coefficients are gauge invariant") {
    RingModel model = make_duffing_ring({}, 30);
    CriticalData critical = duffing_critical();
    AmplitudeCoefficients base = gl_coefficients(model, critical);

    Complex phase = std::polar(1.0, 0.83);
    CriticalData rotated = critical;
    rotated.v0 = phase * critical.v0;
    rotated.v1 = phase * critical.v1; // keeps <v0, v1> = 1
    AmplitudeCoefficients turned = gl_coefficients(model, rotated);

    CHECK(std::abs(turned.kappa2 - base.kappa2) < 1e-12);
    CHECK(std::abs(turned.kappa3 - base.kappa3) < 1e-12);
    CHECK(std::abs(turned.zeta - base.zeta) < 1e-10);
    CHECK((turned.v2 - phase * phase * phase * base.v2).norm() < 1e-10);
}

TEST_CASE("resonant third harmonic is rejected") {
    // scalar chain: omega0 = 0 and phi0 = 0, so the third-harmonic matrix
    // coincides with the (singular) critical symbol
    RingModel model = testutil::make_scalar_model(8);
    model.builtin = BuiltinNonlinearity::custom;
    model.nonlinearity = [](const Eigen::MatrixXd& window, double) {
        double u = window(0, 1);
        return Eigen::VectorXd::Constant(1, -u * u * u);
    };
    CriticalData critical = find_critical(model, -0.5, 0.5);
    CHECK_THROWS_WITH_AS(gl_coefficients(model, critical),
                         doctest::Contains("nonresonance"), NumericalError);
}

TEST_CASE("reconstruction evaluates the two-scale ansatz") {
    RingModel model = make_duffing_ring({}, 30);
    AmplitudeCoefficients coeffs = gl_coefficients(model, duffing_critical());

    const int N = 30;
    const double eps = 1.0 / N;
    const double t = 7.3;

    SUBCASE("constant amplitude field") {
        Complex c(0.31, -0.12);
        Eigen::VectorXd state = reconstruct(coeffs, constant_field(16, c), eps, t);
        REQUIRE(state.size() == 2 * N);
        for (int j : {0, 7, 19}) {
            Complex carrier = std::exp(Complex(0.0, coeffs.omega0 * t + coeffs.phi0 * j));
            Eigen::VectorXcd y = eps * carrier * c * coeffs.v0 +
                                 std::pow(eps, 3) * std::pow(carrier, 3) * (c * c * c) * coeffs.v2;
            CHECK(std::abs(state(2 * j) - 2.0 * y(0).real()) < 1e-14);
            CHECK(std::abs(state(2 * j + 1) - 2.0 * y(1).real()) < 1e-14);
        }
    }

    SUBCASE("single Fourier mode uses exact trigonometric interpolation") {
        const int grid = 16;
        Complex c(0.2, 0.05);
        GLField field = constant_field(grid, 0.0);
        for (int i = 0; i < grid; ++i)
            field.values[static_cast<size_t>(i)] = c * std::exp(Complex(0.0, 2.0 * M_PI * i / grid));
        Eigen::VectorXd state = reconstruct(coeffs, field, eps, t);
        for (int j : {2, 11}) {
            double xi = std::fmod(coeffs.kappa1 * eps * t + eps * j, 1.0);
            Complex amp = c * std::exp(Complex(0.0, 2.0 * M_PI * xi));
            Complex carrier = std::exp(Complex(0.0, coeffs.omega0 * t + coeffs.phi0 * j));
            Eigen::VectorXcd y = eps * carrier * amp * coeffs.v0 +
                                 std::pow(eps, 3) * std::pow(carrier, 3) * std::pow(amp, 3) * coeffs.v2;
            CHECK(std::abs(state(2 * j) - 2.0 * y(0).real()) < 1e-13);
            CHECK(std::abs(state(2 * j + 1) - 2.0 * y(1).real()) < 1e-13);
        }
    }

    SUBCASE("bad arguments") {
        CHECK_THROWS_AS(reconstruct(coeffs, constant_field(8, 0.1), 0.0, 0.0), ConfigError);
        CHECK_THROWS_AS(reconstruct(coeffs, GLField{}, eps, 0.0), ConfigError);
    }
}
