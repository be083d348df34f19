// Microbenchmarks for the hot paths of the long dynamical runs: the packed
// ring right-hand side, the matrix-free tangent-batch Jacobian, the fixed
// RK4 march, and one ETD step of the amplitude-equation solver.

#include <cmath>

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "oscring/amplitude.hpp"
#include "oscring/glsolver.hpp"
#include "oscring/model.hpp"
#include "oscring/simulate.hpp"
#include "oscring/spectrum.hpp"

using namespace oscring;

namespace {

Eigen::VectorXd bench_state(int dim) {
    Eigen::VectorXd y(dim);
    for (int i = 0; i < dim; ++i) y(i) = 0.1 * std::sin(0.7 * i + 0.3);
    return y;
}

void bm_ring_rhs(benchmark::State& state) {
    int N = static_cast<int>(state.range(0));
    RingModel model = make_duffing_ring({}, N);
    RingEvaluator eval(model, 0.2);
    Eigen::VectorXd y = bench_state(2 * N), out(2 * N);
    for (auto _ : state) {
        eval.rhs(y.data(), out.data());
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * N);
}
BENCHMARK(bm_ring_rhs)->Arg(30)->Arg(256);

void bm_apply_jacobian(benchmark::State& state) {
    int N = 30;
    int cols = static_cast<int>(state.range(0));
    RingModel model = make_duffing_ring({}, N);
    RingEvaluator eval(model, 0.2);
    Eigen::VectorXd y = bench_state(2 * N);
    Eigen::MatrixXd tangent = Eigen::MatrixXd::Identity(2 * N, cols), out(2 * N, cols);
    for (auto _ : state) {
        eval.apply_jacobian(y.data(), tangent.data(), out.data(), cols);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * cols);
}
BENCHMARK(bm_apply_jacobian)->Arg(2)->Arg(60);

void bm_rk4_march(benchmark::State& state) {
    int N = 30;
    RingModel model = make_duffing_ring({}, N);
    RingEvaluator eval(model, 0.2);
    Eigen::VectorXd y = bench_state(2 * N);
    for (auto _ : state) {
        Eigen::VectorXd out = integrate_to(eval, y, 1.0, 0.01); // 100 steps
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(bm_rk4_march);

void bm_gl_step(benchmark::State& state) {
    static const AmplitudeCoefficients coeffs = [] {
        RingModel model = make_duffing_ring({}, 30);
        return gl_coefficients(model, find_critical(model, 0.0, 1.0));
    }();
    int grid = static_cast<int>(state.range(0));
    GLStepper stepper(grid, 2.0, coeffs, 1e-3);
    GLField field = random_field(grid, 0.1, 0x5eed);
    for (auto _ : state) {
        stepper.step(field);
        benchmark::DoNotOptimize(field.values.data());
    }
    state.SetItemsProcessed(state.iterations() * grid);
}
BENCHMARK(bm_gl_step)->Arg(64)->Arg(256);

} // namespace

BENCHMARK_MAIN();
