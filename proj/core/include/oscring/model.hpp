#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oscring/errors.hpp"

namespace oscring {

using Complex = std::complex<double>;

/// Nonlinear term evaluated on a neighbor window. The window is an
/// n x (2R+1) matrix whose column r holds the state of node j+r-R, so the
/// center node sits in column R. Returns the n-vector contribution to node j.
using Nonlinearity =
    std::function<Eigen::VectorXd(const Eigen::MatrixXd& window, double p)>;

/// Optional analytic window derivative: block m+R is d h / d y_{j+m}, n x n.
using NonlinearityJacobian =
    std::function<std::vector<Eigen::MatrixXd>(const Eigen::MatrixXd& window, double p)>;

/// Builtin nonlinearities get a fast path in the integrators and a name in
/// model files; custom callbacks always go through the std::function.
enum class BuiltinNonlinearity { none, duffing_cubic, custom };

/// Ring of N identical nodes with state dimension n, coupled to neighbors
/// -R..R. The linear part at scan parameter p is M_m(0) + p*K_m per offset m;
/// the nonlinear part is a window callback that vanishes (with zero first
/// derivative) at the origin, so the all-zero state is always an equilibrium.
struct RingModel {
    int n = 0; ///< per-node state dimension
    int N = 0; ///< number of nodes
    int R = 0; ///< coupling range

    /// M_m at the base parameter value, indexed by m+R (size 2R+1).
    std::vector<Eigen::MatrixXd> coupling_base;
    /// dM_m/dp, indexed by m+R (size 2R+1).
    std::vector<Eigen::MatrixXd> coupling_slope;

    Nonlinearity nonlinearity;
    NonlinearityJacobian nonlinearity_jacobian; ///< empty -> finite differences
    BuiltinNonlinearity builtin = BuiltinNonlinearity::custom;
    std::vector<double> nonlinearity_params;

    std::string parameter_label = "p";

    int dim() const { return N * n; }
    int window_width() const { return 2 * R + 1; }

    /// Non-negative remainder, valid for any j (also negative).
    int wrap(int j) const {
        int r = j % N;
        return r < 0 ? r + N : r;
    }

    const Eigen::MatrixXd& base_block(int m) const { return coupling_base[static_cast<size_t>(m + R)]; }
    const Eigen::MatrixXd& slope_block(int m) const { return coupling_slope[static_cast<size_t>(m + R)]; }

    /// M_m(0) + p*K_m
    Eigen::MatrixXd coupling_at(int m, double p) const {
        return base_block(m) + p * slope_block(m);
    }

    /// Gather the window of node j (columns ordered by offset -R..R).
    Eigen::MatrixXd window(const Eigen::VectorXd& state, int j) const;
};

/// Structural checks plus the numeric origin conditions on h:
/// h(0,p) == 0 exactly and ||h(delta*e,p)||/delta < 1e-6 at delta = 1e-4
/// for every unit direction e of the window. Throws ConfigError.
void validate_model(const RingModel& model, double p = 0.0);

/// h evaluated on a neighbor window; zero when the model has no nonlinearity.
Eigen::VectorXd eval_h(const RingModel& model, const Eigen::MatrixXd& window, double p);

/// d h / d window, block m+R = d h / d y_{j+m}; central finite differences
/// with step 1e-6 * max(1, state_scale) unless the model supplies the
/// analytic callback.
std::vector<Eigen::MatrixXd> window_jacobian(const RingModel& model,
                                             const Eigen::MatrixXd& window, double p,
                                             double state_scale = 1.0);

/// Install the callbacks of a named builtin on a model whose n/R are already
/// set. "duffing_cubic" needs n = 2 and acts on the center node only.
void set_builtin_nonlinearity(RingModel& model, BuiltinNonlinearity builtin);

/// Name lookup for model files; unknown names are rejected.
BuiltinNonlinearity builtin_from_name(const std::string& name);
std::string builtin_name(BuiltinNonlinearity builtin);

/// Single-well Duffing node x'' + d x' + a x + x^3 = 0 with unidirectional
/// next-neighbor coupling k(x_{j+1} - x_j). State per node is (x, z = x').
struct DuffingRingParams {
    double a = 0.1; ///< stiffness, > 0
    double d = 0.3; ///< damping, > 0
    double k = 0.0; ///< base coupling; the scan parameter p is the offset from it
};

/// Build the Duffing ring as a RingModel with n=2, R=1. The model's scan
/// parameter p shifts the coupling, so the effective coupling is params.k + p;
/// with params.k = 0 the parameter is the absolute coupling strength.
RingModel make_duffing_ring(const DuffingRingParams& params, int N);

/// Right-hand side of the ring ODE at parameter p.
Eigen::VectorXd ring_vector_field(const RingModel& model, const Eigen::VectorXd& state, double p);

/// Rotate node blocks by `shift` positions: node j of the result is node
/// j+shift of the input. The ring equations commute with this map.
Eigen::VectorXd rotate_state(const RingModel& model, const Eigen::VectorXd& state, int shift);

/// Block matrix with 2R+1 block diagonals of an N-node ring; storage and
/// mat-vec cost are O(N R n^2) instead of O(N^2 n^2) for the dense form.
class BandedBlockMatrix {
public:
    BandedBlockMatrix(int N, int n, int R);

    int nodes() const { return N_; }
    int block_size() const { return n_; }
    int range() const { return R_; }
    int rows() const { return N_ * n_; }

    /// Block coupling node j to node j+m, m in [-R, R].
    Eigen::Block<Eigen::MatrixXd> block(int j, int m);
    Eigen::Block<const Eigen::MatrixXd> block(int j, int m) const;

    Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
    Eigen::MatrixXd dense() const;

private:
    int N_, n_, R_;
    // blocks for node j laid side by side: storage_.middleCols(j*(2R+1)*n + (m+R)*n, n)
    Eigen::MatrixXd storage_;
};

/// Jacobian of ring_vector_field at (state, p). Uses the analytic window
/// derivative when the model supplies one, otherwise central finite
/// differences with step 1e-6 * max(1, ||state||_inf).
BandedBlockMatrix ring_jacobian(const RingModel& model, const Eigen::VectorXd& state, double p);

/// Hot-path evaluator bound to one (model, p): coupling blocks are packed
/// once, builtin nonlinearities are inlined, and the Jacobian is applied
/// matrix-free to a batch of tangent columns.
class RingEvaluator {
public:
    RingEvaluator(const RingModel& model, double p);

    int dim() const { return dim_; }
    const RingModel& model() const { return *model_; }
    double parameter() const { return p_; }

    /// out = f(y); out must not alias y.
    void rhs(const double* y, double* out) const;

    /// out = J(y) * V for cols column-major tangent vectors; out must not alias V.
    void apply_jacobian(const double* y, const double* v, double* out, int cols) const;

    void rhs(const Eigen::VectorXd& y, Eigen::VectorXd& out) const { rhs(y.data(), out.data()); }

private:
    void rhs_generic(const double* y, double* out) const;
    void apply_jacobian_generic(const double* y, const double* v, double* out, int cols) const;

    const RingModel* model_;
    double p_ = 0.0;
    int dim_ = 0;
    std::vector<double> blocks_;  // (2R+1) row-major n x n coupling blocks at p
    bool duffing_ = false;
    double duff_lin_xx_ = 0.0, duff_damp_ = 0.0, duff_fwd_ = 0.0; // -(a+k), -d, k
};

} // namespace oscring
