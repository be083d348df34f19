#include "oscring/model.hpp"

#include <cmath>
#include <sstream>

namespace oscring {

Eigen::VectorXd eval_h(const RingModel& model, const Eigen::MatrixXd& window, double p) {
    if (!model.nonlinearity) return Eigen::VectorXd::Zero(model.n);
    Eigen::VectorXd h = model.nonlinearity(window, p);
    if (h.size() != model.n)
        throw ConfigError("nonlinearity returned a vector of size " + std::to_string(h.size()) +
                          ", expected " + std::to_string(model.n));
    return h;
}

/// d h / d window, block m+R = d h / d y_{j+m}; finite differences unless the
/// model supplies the analytic callback.
std::vector<Eigen::MatrixXd> window_jacobian(const RingModel& model, const Eigen::MatrixXd& window,
                                             double p, double state_scale) {
    if (model.nonlinearity_jacobian) {
        auto blocks = model.nonlinearity_jacobian(window, p);
        if (static_cast<int>(blocks.size()) != model.window_width())
            throw ConfigError("nonlinearity jacobian returned wrong number of blocks");
        return blocks;
    }
    const double step = 1e-6 * std::max(1.0, state_scale);
    std::vector<Eigen::MatrixXd> blocks(static_cast<size_t>(model.window_width()),
                                        Eigen::MatrixXd::Zero(model.n, model.n));
    Eigen::MatrixXd w = window;
    for (int c = 0; c < model.window_width(); ++c) {
        for (int r = 0; r < model.n; ++r) {
            const double saved = w(r, c);
            w(r, c) = saved + step;
            Eigen::VectorXd hp = eval_h(model, w, p);
            w(r, c) = saved - step;
            Eigen::VectorXd hm = eval_h(model, w, p);
            w(r, c) = saved;
            blocks[static_cast<size_t>(c)].col(r) = (hp - hm) / (2.0 * step);
        }
    }
    return blocks;
}

Eigen::MatrixXd RingModel::window(const Eigen::VectorXd& state, int j) const {
    Eigen::MatrixXd w(n, window_width());
    for (int m = -R; m <= R; ++m)
        w.col(m + R) = state.segment(wrap(j + m) * n, n);
    return w;
}

void validate_model(const RingModel& model, double p) {
    if (model.n < 1) throw ConfigError("state dimension n must be >= 1");
    if (model.N < 1) throw ConfigError("ring size N must be >= 1");
    if (model.R < 0) throw ConfigError("coupling range R must be >= 0");
    const auto width = static_cast<size_t>(model.window_width());
    if (model.coupling_base.size() != width)
        throw ConfigError("expected " + std::to_string(width) + " base coupling blocks, got " +
                          std::to_string(model.coupling_base.size()));
    if (model.coupling_slope.size() != width)
        throw ConfigError("expected " + std::to_string(width) + " slope coupling blocks, got " +
                          std::to_string(model.coupling_slope.size()));
    for (size_t i = 0; i < width; ++i) {
        if (model.coupling_base[i].rows() != model.n || model.coupling_base[i].cols() != model.n)
            throw ConfigError("base coupling block " + std::to_string(i) + " is not n x n");
        if (model.coupling_slope[i].rows() != model.n || model.coupling_slope[i].cols() != model.n)
            throw ConfigError("slope coupling block " + std::to_string(i) + " is not n x n");
    }
    if (!model.nonlinearity) {
        if (model.builtin == BuiltinNonlinearity::none) return;
        throw ConfigError("model has no nonlinearity callback");
    }

    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(model.n, model.window_width());
    if (eval_h(model, zero, p).norm() != 0.0)
        throw ConfigError("nonlinearity does not vanish at the origin");
    // The origin must also be a first-order zero, otherwise it would shift
    // the linear part the coupling matrices are supposed to own.
    const double delta = 1e-4;
    Eigen::MatrixXd w = zero;
    for (int c = 0; c < model.window_width(); ++c) {
        for (int r = 0; r < model.n; ++r) {
            w(r, c) = delta;
            const double slope = eval_h(model, w, p).norm() / delta;
            w(r, c) = 0.0;
            if (slope >= 1e-6) {
                std::ostringstream msg;
                msg << "nonlinearity has nonzero derivative at the origin (direction " << r << ","
                    << c - model.R << ": |h|/delta = " << slope << ")";
                throw ConfigError(msg.str());
            }
        }
    }
}

void set_builtin_nonlinearity(RingModel& model, BuiltinNonlinearity builtin) {
    model.builtin = builtin;
    switch (builtin) {
        case BuiltinNonlinearity::none:
            model.nonlinearity = nullptr;
            model.nonlinearity_jacobian = nullptr;
            return;
        case BuiltinNonlinearity::duffing_cubic: {
            if (model.n != 2)
                throw ConfigError("duffing_cubic nonlinearity needs per-node dimension 2");
            const int center = model.R;
            model.nonlinearity = [center](const Eigen::MatrixXd& window, double) {
                Eigen::VectorXd h = Eigen::VectorXd::Zero(2);
                const double x = window(0, center);
                h(1) = -x * x * x;
                return h;
            };
            model.nonlinearity_jacobian = [center](const Eigen::MatrixXd& window, double) {
                std::vector<Eigen::MatrixXd> blocks(static_cast<size_t>(window.cols()),
                                                    Eigen::MatrixXd::Zero(2, 2));
                const double x = window(0, center);
                blocks[static_cast<size_t>(center)](1, 0) = -3.0 * x * x;
                return blocks;
            };
            return;
        }
        case BuiltinNonlinearity::custom:
            throw ConfigError("custom nonlinearities must be attached directly");
    }
    throw ConfigError("unknown builtin nonlinearity");
}

BuiltinNonlinearity builtin_from_name(const std::string& name) {
    if (name == "none") return BuiltinNonlinearity::none;
    if (name == "duffing_cubic") return BuiltinNonlinearity::duffing_cubic;
    throw ConfigError("unknown nonlinearity '" + name + "' (builtins: duffing_cubic, none)");
}

std::string builtin_name(BuiltinNonlinearity builtin) {
    switch (builtin) {
        case BuiltinNonlinearity::none: return "none";
        case BuiltinNonlinearity::duffing_cubic: return "duffing_cubic";
        default: return "custom";
    }
}

RingModel make_duffing_ring(const DuffingRingParams& params, int N) {
    if (N < 2) throw ConfigError("Duffing ring needs N >= 2 nodes");
    if (params.a <= 0 || params.d <= 0)
        throw ConfigError("Duffing parameters require a > 0 and d > 0");
    RingModel model;
    model.n = 2;
    model.N = N;
    model.R = 1;
    model.parameter_label = "k";
    model.coupling_base.assign(3, Eigen::MatrixXd::Zero(2, 2));
    model.coupling_slope.assign(3, Eigen::MatrixXd::Zero(2, 2));
    Eigen::MatrixXd m0(2, 2), m1(2, 2);
    m0 << 0, 1, -(params.a + params.k), -params.d;
    m1 << 0, 0, params.k, 0;
    model.coupling_base[1] = m0;
    model.coupling_base[2] = m1;
    // p shifts the coupling strength away from params.k
    Eigen::MatrixXd k0(2, 2), k1(2, 2);
    k0 << 0, 0, -1, 0;
    k1 << 0, 0, 1, 0;
    model.coupling_slope[1] = k0;
    model.coupling_slope[2] = k1;
    set_builtin_nonlinearity(model, BuiltinNonlinearity::duffing_cubic);
    return model;
}

Eigen::VectorXd ring_vector_field(const RingModel& model, const Eigen::VectorXd& state, double p) {
    if (state.size() != model.dim())
        throw ConfigError("state has size " + std::to_string(state.size()) + ", expected " +
                          std::to_string(model.dim()));
    Eigen::VectorXd out(model.dim());
    RingEvaluator(model, p).rhs(state, out);
    return out;
}

Eigen::VectorXd rotate_state(const RingModel& model, const Eigen::VectorXd& state, int shift) {
    Eigen::VectorXd out(state.size());
    for (int j = 0; j < model.N; ++j)
        out.segment(j * model.n, model.n) = state.segment(model.wrap(j + shift) * model.n, model.n);
    return out;
}

BandedBlockMatrix::BandedBlockMatrix(int N, int n, int R)
    : N_(N), n_(n), R_(R), storage_(Eigen::MatrixXd::Zero(n, N * (2 * R + 1) * n)) {}

Eigen::Block<Eigen::MatrixXd> BandedBlockMatrix::block(int j, int m) {
    const int c = (j * (2 * R_ + 1) + (m + R_)) * n_;
    return Eigen::Block<Eigen::MatrixXd>(storage_, 0, c, n_, n_);
}

Eigen::Block<const Eigen::MatrixXd> BandedBlockMatrix::block(int j, int m) const {
    const int c = (j * (2 * R_ + 1) + (m + R_)) * n_;
    return Eigen::Block<const Eigen::MatrixXd>(storage_, 0, c, n_, n_);
}

Eigen::VectorXd BandedBlockMatrix::apply(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(rows());
    for (int j = 0; j < N_; ++j) {
        auto target = out.segment(j * n_, n_);
        for (int m = -R_; m <= R_; ++m) {
            int src = ((j + m) % N_ + N_) % N_;
            target.noalias() += block(j, m) * v.segment(src * n_, n_);
        }
    }
    return out;
}

Eigen::MatrixXd BandedBlockMatrix::dense() const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows(), rows());
    for (int j = 0; j < N_; ++j) {
        for (int m = -R_; m <= R_; ++m) {
            int src = ((j + m) % N_ + N_) % N_;
            out.block(j * n_, src * n_, n_, n_) += block(j, m);
        }
    }
    return out;
}

BandedBlockMatrix ring_jacobian(const RingModel& model, const Eigen::VectorXd& state, double p) {
    if (state.size() != model.dim())
        throw ConfigError("state has size " + std::to_string(state.size()) + ", expected " +
                          std::to_string(model.dim()));
    BandedBlockMatrix jac(model.N, model.n, model.R);
    std::vector<Eigen::MatrixXd> linear(static_cast<size_t>(model.window_width()));
    for (int m = -model.R; m <= model.R; ++m)
        linear[static_cast<size_t>(m + model.R)] = model.coupling_at(m, p);
    const bool has_h = static_cast<bool>(model.nonlinearity);
    const double scale = has_h ? state.cwiseAbs().maxCoeff() : 0.0;
    for (int j = 0; j < model.N; ++j) {
        std::vector<Eigen::MatrixXd> hblocks;
        if (has_h) hblocks = window_jacobian(model, model.window(state, j), p, scale);
        for (int m = -model.R; m <= model.R; ++m) {
            auto b = jac.block(j, m);
            b = linear[static_cast<size_t>(m + model.R)];
            if (has_h) b += hblocks[static_cast<size_t>(m + model.R)];
        }
    }
    return jac;
}

RingEvaluator::RingEvaluator(const RingModel& model, double p)
    : model_(&model), p_(p), dim_(model.dim()) {
    const int n = model.n, width = model.window_width();
    blocks_.assign(static_cast<size_t>(width * n * n), 0.0);
    for (int m = -model.R; m <= model.R; ++m) {
        Eigen::MatrixXd b = model.coupling_at(m, p);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                blocks_[static_cast<size_t>(((m + model.R) * n + r) * n + c)] = b(r, c);
    }
    if (model.builtin == BuiltinNonlinearity::duffing_cubic && n == 2 && model.R == 1) {
        // Fast path requires the exact Duffing sparsity; anything else (say a
        // hand-edited model file reusing the builtin cubic) takes the generic path.
        auto at = [&](int m, int r, int c) {
            return blocks_[static_cast<size_t>(((m + 1) * 2 + r) * 2 + c)];
        };
        duffing_ = at(-1, 0, 0) == 0 && at(-1, 0, 1) == 0 && at(-1, 1, 0) == 0 &&
                   at(-1, 1, 1) == 0 && at(0, 0, 0) == 0 && at(0, 0, 1) == 1 &&
                   at(1, 0, 0) == 0 && at(1, 0, 1) == 0 && at(1, 1, 1) == 0;
        duff_lin_xx_ = at(0, 1, 0);
        duff_damp_ = at(0, 1, 1);
        duff_fwd_ = at(1, 1, 0);
    }
}

void RingEvaluator::rhs(const double* y, double* out) const {
    if (duffing_) {
        const int N = model_->N;
        const double lin = duff_lin_xx_, damp = duff_damp_, fwd = duff_fwd_;
        for (int j = 0; j < N - 1; ++j) {
            const double x = y[2 * j], z = y[2 * j + 1], xn = y[2 * j + 2];
            out[2 * j] = z;
            out[2 * j + 1] = (lin - x * x) * x + damp * z + fwd * xn;
        }
        const double x = y[2 * N - 2], z = y[2 * N - 1];
        out[2 * N - 2] = z;
        out[2 * N - 1] = (lin - x * x) * x + damp * z + fwd * y[0];
        return;
    }
    rhs_generic(y, out);
}

void RingEvaluator::rhs_generic(const double* y, double* out) const {
    const int n = model_->n, N = model_->N, R = model_->R;
    Eigen::Map<const Eigen::VectorXd> state(y, dim_);
    Eigen::Map<Eigen::VectorXd> result(out, dim_);
    result.setZero();
    Eigen::MatrixXd window(n, model_->window_width());
    for (int j = 0; j < N; ++j) {
        auto target = result.segment(j * n, n);
        for (int m = -R; m <= R; ++m) {
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
                b(blocks_.data() + static_cast<size_t>((m + R) * n * n), n, n);
            const auto neighbor = state.segment(model_->wrap(j + m) * n, n);
            target.noalias() += b * neighbor;
            window.col(m + R) = neighbor;
        }
        if (model_->nonlinearity) target += eval_h(*model_, window, p_);
    }
}

void RingEvaluator::apply_jacobian(const double* y, const double* v, double* out, int cols) const {
    if (duffing_) {
        const int N = model_->N;
        const double lin = duff_lin_xx_, damp = duff_damp_, fwd = duff_fwd_;
        for (int c = 0; c < cols; ++c) {
            const double* vc = v + static_cast<std::ptrdiff_t>(c) * dim_;
            double* oc = out + static_cast<std::ptrdiff_t>(c) * dim_;
            for (int j = 0; j < N - 1; ++j) {
                const double x = y[2 * j];
                oc[2 * j] = vc[2 * j + 1];
                oc[2 * j + 1] = (lin - 3.0 * x * x) * vc[2 * j] + damp * vc[2 * j + 1] + fwd * vc[2 * j + 2];
            }
            const double x = y[2 * N - 2];
            oc[2 * N - 2] = vc[2 * N - 1];
            oc[2 * N - 1] = (lin - 3.0 * x * x) * vc[2 * N - 2] + damp * vc[2 * N - 1] + fwd * vc[0];
        }
        return;
    }
    apply_jacobian_generic(y, v, out, cols);
}

void RingEvaluator::apply_jacobian_generic(const double* y, const double* v, double* out,
                                           int cols) const {
    Eigen::Map<const Eigen::VectorXd> state(y, dim_);
    BandedBlockMatrix jac = ring_jacobian(*model_, state, p_);
    for (int c = 0; c < cols; ++c) {
        Eigen::Map<const Eigen::VectorXd> vc(v + static_cast<std::ptrdiff_t>(c) * dim_, dim_);
        Eigen::Map<Eigen::VectorXd> oc(out + static_cast<std::ptrdiff_t>(c) * dim_, dim_);
        oc = jac.apply(vc);
    }
}

} // namespace oscring
