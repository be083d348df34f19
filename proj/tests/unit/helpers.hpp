#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "oscring/model.hpp"

namespace testutil {

using oscring::Complex;

// Frozen reference values for the Duffing ring at a = 0.1, d = 0.3 (continuum
// critical point), computed with an independent high-precision script.
inline constexpr double kPhi0 = 1.2432390514784317;
inline constexpr double kCritical = 0.1398683298050514;
inline constexpr double kOmega0 = 0.4414389337104416;
inline constexpr double kKappa1 = 0.15;
inline const Complex kKappa2{0.7274007335531838, 1.0154168659163687};
inline const Complex kKappa3{0.15, 0.0};
inline const Complex kZeta{-0.8662957700739883, 2.54944454012885};
inline const Complex kV2x{0.49112118, 0.16688192};
inline const Complex kV2z{-0.22100453, 0.65040003};

/// Closed-form critical coupling of the Duffing ring per mode angle phi,
/// from splitting lambda = i*omega in lambda^2 + d lambda + a + k(1 - e^{i phi}) = 0.
inline double duffing_hopf_k(double phi, double a = 0.1, double d = 0.3) {
    double c = 1.0 - std::cos(phi);
    double s2 = std::sin(phi) * std::sin(phi);
    return (d * d * c + std::sqrt(std::pow(d, 4) * c * c + 4.0 * a * d * d * s2)) / (2.0 * s2);
}

/// Minimum of the closed form over the discrete modes of an N-ring.
inline double duffing_hopf_k_discrete(int N, double a = 0.1, double d = 0.3) {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 1; j < N; ++j) {
        double phi = 2.0 * M_PI * j / N;
        if (std::abs(std::sin(phi)) < 1e-12) continue;
        best = std::min(best, duffing_hopf_k(phi, a, d));
    }
    return best;
}

/// Greedy max pairing distance between two eigenvalue multisets.
inline double pairing_distance(std::vector<Complex> a, std::vector<Complex> b) {
    double worst = 0.0;
    for (const Complex& z : a) {
        double best = std::numeric_limits<double>::infinity();
        size_t best_j = 0;
        for (size_t j = 0; j < b.size(); ++j) {
            double dist = std::abs(z - b[j]);
            if (dist < best) {
                best = dist;
                best_j = j;
            }
        }
        worst = std::max(worst, best);
        b.erase(b.begin() + static_cast<long>(best_j));
    }
    return worst;
}

/// Scalar drift-diffusion chain: lambda(phi) = p - 1 + e^{i phi}; critical
/// point p_c = 0, phi0 = 0, omega0 = 0, kappa1 = 1.
inline oscring::RingModel make_scalar_model(int N) {
    oscring::RingModel model;
    model.n = 1;
    model.N = N;
    model.R = 1;
    model.coupling_base = {Eigen::MatrixXd::Zero(1, 1), -Eigen::MatrixXd::Ones(1, 1),
                           Eigen::MatrixXd::Ones(1, 1)};
    model.coupling_slope = {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Ones(1, 1),
                            Eigen::MatrixXd::Zero(1, 1)};
    oscring::set_builtin_nonlinearity(model, oscring::BuiltinNonlinearity::none);
    return model;
}

/// Symmetric next-neighbor coupling: M_1 = M_{-1}, so the transport speed
/// kappa1 vanishes at any critical point.
inline oscring::RingModel make_symmetric_model(int N) {
    oscring::RingModel model;
    model.n = 1;
    model.N = N;
    model.R = 1;
    Eigen::MatrixXd s = 0.3 * Eigen::MatrixXd::Ones(1, 1);
    model.coupling_base = {s, -Eigen::MatrixXd::Ones(1, 1), s};
    model.coupling_slope = {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Ones(1, 1),
                            Eigen::MatrixXd::Zero(1, 1)};
    oscring::set_builtin_nonlinearity(model, oscring::BuiltinNonlinearity::none);
    return model;
}

inline Eigen::VectorXd seeded_state(int dim, double amplitude, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-amplitude, amplitude);
    Eigen::VectorXd y(dim);
    for (int i = 0; i < dim; ++i) y[i] = uniform(rng);
    return y;
}

} // namespace testutil
