#include "oscring_cli/dispatch.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "oscring/amplitude.hpp"
#include "oscring/errors.hpp"
#include "oscring/glsolver.hpp"
#include "oscring/model.hpp"
#include "oscring/model_io.hpp"
#include "oscring/scan.hpp"
#include "oscring/simulate.hpp"
#include "oscring/spectrum.hpp"

namespace oscring::cli {

namespace {

using nlohmann::json;

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

json cpx(Complex z) { return json::array({z.real(), z.imag()}); }

json cvec(const Eigen::VectorXcd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(cpx(v[i]));
    return out;
}

/// Writes either to a file (validated up front) or to the fallback stream
/// when the path is empty or "-".
class OutputTarget {
public:
    OutputTarget(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (!path.empty() && path != "-") {
            file_.open(path);
            if (!file_) throw ConfigError("cannot open output file '" + path + "'");
            stream_ = &file_;
        }
    }
    std::ostream& stream() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

/// Flat JSON config support for CLI11: top-level keys are global options,
/// one level of nesting scopes keys to a subcommand. Values may be scalars
/// or arrays of scalars. Command-line flags take precedence (CLI11 default).
class JsonConfigReader : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override {
        return "{}\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            input >> j;
        } catch (const json::parse_error& err) {
            throw CLI::FileError(std::string("config file: ") + err.what());
        }
        if (!j.is_object()) throw CLI::FileError("config file: top level must be an object");
        std::vector<CLI::ConfigItem> items;
        collect(j, {}, items);
        return items;
    }

private:
    static std::string scalar(const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number_integer()) return std::to_string(v.get<long long>());
        if (v.is_number()) return fmt(v.get<double>());
        throw CLI::FileError("config file: values must be scalars or arrays of scalars");
    }

    static void collect(const json& j, std::vector<std::string> parents,
                        std::vector<CLI::ConfigItem>& items) {
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                auto scoped = parents;
                scoped.push_back(key);
                collect(value, scoped, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array())
                for (const auto& element : value) item.inputs.push_back(scalar(element));
            else
                item.inputs.push_back(scalar(value));
            items.push_back(std::move(item));
        }
    }
};

struct GlobalOpts {
    std::string model = "duffing";
    int num_nodes = 30;
    double a = 0.1;
    double d = 0.3;
    double k_base = 0.0;
    std::uint64_t seed = 0x5eed;
    int threads = 0;
    std::string profile = "production";

    bool ci() const { return profile == "ci"; }

    RingModel load() const {
        if (model == "duffing") {
            if (num_nodes < 2) throw ConfigError("--n must be at least 2");
            return make_duffing_ring({a, d, k_base}, num_nodes);
        }
        return load_model(model);
    }

    ClassifyProtocol protocol() const {
        ClassifyProtocol proto = ci() ? ClassifyProtocol::ci() : ClassifyProtocol::production();
        proto.seed = seed;
        return proto;
    }

    LyapunovOptions lyapunov() const {
        return ci() ? lyapunov_ci_options() : LyapunovOptions{};
    }
};

Eigen::VectorXd seeded_state(int dim, double amplitude, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-amplitude, amplitude);
    Eigen::VectorXd y(dim);
    for (int i = 0; i < dim; ++i) y[i] = uniform(rng);
    return y;
}

// --------------------------------------------------------------------------
// subcommand actions

void run_spectrum(const GlobalOpts& g, double p, int num_phi, const std::string& out_path,
                  std::ostream& fallback) {
    RingModel model = g.load();
    SpectrumCurve curve = continuous_spectrum(model, p, num_phi);
    OutputTarget out(out_path, fallback);
    out.stream() << "phi,branch,re_lambda,im_lambda\n";
    for (size_t b = 0; b < curve.branches.size(); ++b)
        for (size_t i = 0; i < curve.phi.size(); ++i) {
            Complex lambda = curve.branches[b][i];
            out.stream() << fmt(curve.phi[i]) << ',' << b << ',' << fmt(lambda.real()) << ','
                         << fmt(lambda.imag()) << '\n';
        }
}

void run_critical(const GlobalOpts& g, double p_lo, double p_hi, const std::string& out_path,
                  std::ostream& fallback) {
    RingModel model = g.load();
    CriticalData critical = find_critical(model, p_lo, p_hi);
    json j;
    j["p_c"] = critical.p_c;
    j["phi0"] = critical.phi0;
    j["omega0"] = critical.omega0;
    j["kappa1"] = critical.kappa1;
    j["v0"] = cvec(critical.v0);
    j["v1"] = cvec(critical.v1);
    OutputTarget out(out_path, fallback);
    out.stream() << j.dump(2) << '\n';
}

void run_coeffs(const GlobalOpts& g, double p_lo, double p_hi, const std::string& out_path,
                std::ostream& fallback) {
    RingModel model = g.load();
    CriticalData critical = find_critical(model, p_lo, p_hi);
    AmplitudeCoefficients coeffs = gl_coefficients(model, critical);
    json j;
    j["kappa1"] = coeffs.kappa1;
    j["kappa2"] = cpx(coeffs.kappa2);
    j["kappa3"] = cpx(coeffs.kappa3);
    j["zeta"] = cpx(coeffs.zeta);
    j["v2"] = cvec(coeffs.v2);
    j["p_c"] = critical.p_c;
    j["phi0"] = coeffs.phi0;
    j["omega0"] = coeffs.omega0;
    OutputTarget out(out_path, fallback);
    out.stream() << j.dump(2) << '\n';
}

void run_gl(const GlobalOpts& g, double r, double t_end, double dt, int grid,
            const std::string& snapshots_path, int snapshot_stride, std::ostream& fallback) {
    RingModel model = g.load();
    CriticalData critical = find_critical(model, 0.0, 10.0);
    AmplitudeCoefficients coeffs = gl_coefficients(model, critical);

    GLField field = random_field(grid, 1e-3, g.seed);
    std::unique_ptr<OutputTarget> snapshots;
    GLObserver observer;
    if (!snapshots_path.empty()) {
        snapshots = std::make_unique<OutputTarget>(snapshots_path, fallback);
        snapshots->stream() << "T2,xi,re_u,im_u\n";
        observer = [&snapshots, grid](const GLField& u) {
            for (int i = 0; i < grid; ++i)
                snapshots->stream() << fmt(u.time) << ',' << fmt(static_cast<double>(i) / grid)
                                    << ',' << fmt(u.values[i].real()) << ','
                                    << fmt(u.values[i].imag()) << '\n';
        };
    }
    if (snapshot_stride <= 0)
        snapshot_stride = std::max(1, static_cast<int>(std::lround(t_end / dt / 100.0)));

    GLRunInfo info;
    field = gl_integrate(std::move(field), r, coeffs, t_end, dt, snapshot_stride, observer, {},
                         &info);

    double l2 = 0.0;
    for (Complex u : field.values) l2 += std::norm(u);
    l2 = std::sqrt(l2 / grid);
    json j;
    j["r"] = r;
    j["t_end"] = field.time;
    j["dt"] = dt;
    j["grid"] = grid;
    j["steps"] = info.steps;
    j["max_abs"] = info.max_abs;
    j["l2_final"] = l2;
    j["resolution_warning"] = info.resolution_warning;
    fallback << j.dump(2) << '\n';
}

void run_simulate(const GlobalOpts& g, double p, double t_end, double dt,
                  const std::string& method, int stride, double init_amplitude,
                  const std::string& out_path, std::ostream& fallback) {
    RingModel model = g.load();
    Eigen::VectorXd y0 = seeded_state(model.dim(), init_amplitude, g.seed);
    IntegrateOptions options;
    options.method = method;
    options.store_stride = stride;
    Trajectory trajectory = integrate(model, y0, p, t_end, dt, options);
    OutputTarget out(out_path, fallback);
    out.stream() << "t";
    for (int i = 0; i < model.dim(); ++i) out.stream() << ",y" << i;
    out.stream() << '\n';
    for (int s = 0; s < trajectory.size(); ++s) {
        out.stream() << fmt(trajectory.times[s]);
        for (int i = 0; i < model.dim(); ++i)
            out.stream() << ',' << fmt(trajectory.states[s][i]);
        out.stream() << '\n';
    }
}

void run_lyapunov(const GlobalOpts& g, double p, int num_exponents, int history_stride,
                  double init_amplitude, const std::string& out_path, std::ostream& fallback) {
    RingModel model = g.load();
    Eigen::VectorXd y0 = seeded_state(model.dim(), init_amplitude, g.seed);
    LyapunovOptions options = g.lyapunov();
    options.history_stride = history_stride;
    LyapunovResult result = lyapunov_spectrum(model, p, num_exponents, y0, options);
    json j;
    j["p"] = p;
    j["num_exponents"] = result.num_exponents;
    j["exponents"] = result.exponents;
    j["t_transient"] = result.t_transient;
    j["t_total"] = result.t_total;
    j["renorm_interval"] = result.renorm_interval;
    json errors = json::array();
    for (int i = 0; i < result.num_exponents; ++i) errors.push_back(result.standard_error(i));
    j["standard_errors"] = errors;
    j["convergence_history"] = result.convergence_history;
    OutputTarget out(out_path, fallback);
    out.stream() << j.dump(2) << '\n';
}

ScalingResult run_records(const GlobalOpts& g, const std::vector<int>& n_list, bool skip_chaos,
                          double p_max) {
    if (g.model != "duffing")
        throw ConfigError("scanning over N requires the builtin duffing family");
    double a = g.a, d = g.d, k_base = g.k_base;
    ModelFamily family = [a, d, k_base](int N) {
        return make_duffing_ring({a, d, k_base}, N);
    };
    ScalingOptions options;
    options.skip_chaos = skip_chaos;
    options.threads = g.threads;
    options.chaos.protocol = g.protocol();
    options.chaos.p_max = p_max;
    if (g.ci()) {
        options.chaos.step = 5e-3;
        options.chaos.bisect_tol = 1e-3;
    }
    return scaling_experiment(family, n_list, options);
}

void write_records_csv(const ScalingResult& result, const std::string& path,
                       std::ostream& fallback) {
    OutputTarget out(path, fallback);
    out.stream() << "N,k_H,k_Ch,k_Re\n";
    for (const ScanRecord& rec : result.records)
        out.stream() << rec.N << ',' << fmt(rec.k_hopf) << ',' << fmt(rec.k_chaos) << ','
                     << fmt(rec.k_rescaled) << '\n';
}

void run_scan(const GlobalOpts& g, const std::vector<int>& n_list, const std::string& out_path,
              bool skip_chaos, double p_max, std::ostream& fallback) {
    ScalingResult result = run_records(g, n_list, skip_chaos, p_max);
    write_records_csv(result, out_path, fallback);
    json j;
    j["rows"] = result.records.size();
    j["out"] = out_path;
    json diag = json::array();
    for (const ScanRecord& rec : result.records)
        if (!rec.diagnostics.empty()) diag.push_back({{"N", rec.N}, {"note", rec.diagnostics}});
    if (!diag.empty()) j["diagnostics"] = diag;
    fallback << j.dump(2) << '\n';
}

std::vector<ScanRecord> read_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open records file '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line.rfind("N,k_H,k_Ch,k_Re", 0) != 0)
        throw ConfigError("records file '" + path + "': expected header N,k_H,k_Ch,k_Re");
    std::vector<ScanRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        try {
            if (cells.size() != 4) throw std::invalid_argument("need 4 columns");
            ScanRecord rec;
            rec.N = std::stoi(cells[0]);
            rec.k_hopf = std::stod(cells[1]); // stod accepts "nan" from skip-chaos runs
            rec.k_chaos = std::stod(cells[2]);
            rec.k_rescaled = std::stod(cells[3]);
            records.push_back(rec);
        } catch (const std::exception&) {
            throw ConfigError("records file '" + path + "': malformed row '" + line + "'");
        }
    }
    return records;
}

void run_scaling(const GlobalOpts& g, const std::vector<int>& n_list,
                 const std::string& records_path, const std::string& out_path, double p_max,
                 std::ostream& fallback) {
    std::vector<ScanRecord> records;
    json j;
    if (!records_path.empty()) {
        records = read_records_csv(records_path);
    } else {
        if (n_list.empty()) throw ConfigError("scaling needs --n-list or --records");
        ScalingResult result = run_records(g, n_list, false, p_max);
        records = result.records;
        if (!out_path.empty()) write_records_csv(result, out_path, fallback);
        j["slope"] = result.slope;
        j["intercept"] = result.intercept;
        j["r_squared"] = result.r_squared;
    }
    double min_kre = std::numeric_limits<double>::quiet_NaN();
    double max_kre = min_kre;
    json rows = json::array();
    for (const ScanRecord& rec : records) {
        rows.push_back({{"N", rec.N},
                        {"k_H", rec.k_hopf},
                        {"k_Ch", rec.k_chaos},
                        {"k_Re", rec.k_rescaled}});
        if (!std::isfinite(rec.k_rescaled)) continue;
        if (!std::isfinite(min_kre) || rec.k_rescaled < min_kre) min_kre = rec.k_rescaled;
        if (!std::isfinite(max_kre) || rec.k_rescaled > max_kre) max_kre = rec.k_rescaled;
    }
    j["min_kRe"] = min_kre;
    j["max_kRe"] = max_kre;
    j["ratio"] = max_kre / min_kre;
    j["records"] = rows;
    fallback << j.dump(2) << '\n';
}

int run_verify(const GlobalOpts& g, std::ostream& out) {
    RingModel model = g.load();
    struct Check {
        std::string name;
        double value;
        double bound;
    };
    std::vector<Check> checks;

    CriticalData critical = find_critical(model, 0.0, 10.0);
    checks.push_back({"lemma1-residual", lemma1_check(model, critical), 1e-5});

    // mode-reduced vs dense origin-Jacobian eigenvalues, greedy pairing
    {
        std::vector<Complex> modes = discrete_spectrum(model, critical.p_c);
        Eigen::MatrixXd dense =
            ring_jacobian(model, Eigen::VectorXd::Zero(model.dim()), critical.p_c).dense();
        Eigen::VectorXcd dense_eig = dense.eigenvalues();
        double worst = 0.0;
        std::vector<bool> used(modes.size(), false);
        for (Eigen::Index i = 0; i < dense_eig.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            size_t best_j = 0;
            for (size_t jj = 0; jj < modes.size(); ++jj) {
                if (used[jj]) continue;
                double dist = std::abs(dense_eig[i] - modes[jj]);
                if (dist < best) {
                    best = dist;
                    best_j = jj;
                }
            }
            used[best_j] = true;
            worst = std::max(worst, best);
        }
        checks.push_back({"spectrum-mode-vs-dense", worst, 1e-8});
    }

    // plane-wave persistence in the amplitude equation
    {
        AmplitudeCoefficients coeffs = gl_coefficients(model, critical);
        if (coeffs.zeta.real() >= 0.0)
            throw NumericalError("verify: reduction is not supercritical (Re zeta >= 0)");
        int q = 1, grid = 128;
        double kq = 2.0 * M_PI * q;
        double r = (coeffs.kappa3.real() / 2.0 * kq * kq + 1.0) / coeffs.kappa2.real();
        double rho2 = (r * coeffs.kappa2.real() - coeffs.kappa3.real() / 2.0 * kq * kq) /
                      (-coeffs.zeta.real());
        double rho = std::sqrt(rho2);
        Complex omega = r * coeffs.kappa2 - coeffs.kappa3 / 2.0 * (kq * kq) +
                        coeffs.zeta * rho2; // purely imaginary by construction
        GLField field = constant_field(grid, 0.0);
        for (int i = 0; i < grid; ++i)
            field.values[i] = rho * std::exp(Complex(0.0, kq * i / grid));
        double t_end = 10.0, dt = 1e-3;
        field = gl_integrate(std::move(field), r, coeffs, t_end, dt);
        double err = 0.0;
        Complex phase = std::exp(omega * t_end);
        for (int i = 0; i < grid; ++i) {
            Complex exact = rho * std::exp(Complex(0.0, kq * i / grid)) * phase;
            err = std::max(err, std::abs(field.values[i] - exact));
        }
        checks.push_back({"gl-plane-wave", err, 1e-6});
    }

    // Lyapunov sum rule against the time-averaged Jacobian trace
    {
        double p = critical.p_c + 0.5;
        int dim = model.dim();
        LyapunovOptions options = g.lyapunov();
        Eigen::VectorXd y0 = seeded_state(dim, 0.1, g.seed);
        LyapunovResult result = lyapunov_spectrum(model, p, dim, y0, options);
        double sum = 0.0;
        for (double le : result.exponents) sum += le;

        RingEvaluator eval(model, p);
        Eigen::VectorXd y = integrate_to(eval, y0, options.t_transient, options.dt);
        double trace = 0.0;
        int samples = 200;
        for (int s = 0; s < samples; ++s) {
            y = integrate_to(eval, y, 1.0, options.dt);
            trace += ring_jacobian(model, y, p).dense().trace();
        }
        trace /= samples;
        checks.push_back({"lyapunov-sum-rule", std::abs(sum - trace),
                          std::max(0.01 * std::abs(trace), 0.02)});
    }

    bool all_pass = true;
    for (const Check& check : checks) {
        bool pass = check.value < check.bound;
        all_pass = all_pass && pass;
        char line[160];
        std::snprintf(line, sizeof line, "%-4s %-24s %.3e < %.0e", pass ? "PASS" : "FAIL",
                      check.name.c_str(), check.value, check.bound);
        out << line << '\n';
    }
    if (!all_pass) throw NumericalError("verification failed");
    return 0;
}

} // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"coupled-oscillator ring toolkit: spectra, amplitude equations, chaos scans",
                 "oscring"};
    app.fallthrough();
    app.set_version_flag("--version", "0.1.0");
    app.set_config("--config", "", "JSON config file; command-line flags take precedence");
    app.config_formatter(std::make_shared<JsonConfigReader>());
    app.allow_config_extras(false);
    app.require_subcommand(0, 1);

    auto g = std::make_shared<GlobalOpts>();
    app.add_option("--model", g->model, "builtin name ('duffing') or model JSON path")
        ->capture_default_str();
    app.add_option("--n", g->num_nodes, "ring size for the builtin model")->capture_default_str();
    app.add_option("--a", g->a, "duffing stiffness")->capture_default_str();
    app.add_option("--d", g->d, "duffing damping")->capture_default_str();
    app.add_option("--k-base", g->k_base, "duffing base coupling (p offsets it)")
        ->capture_default_str();
    app.add_option("--seed", g->seed, "RNG seed for initial conditions")->capture_default_str();
    app.add_option("--threads", g->threads, "worker pool size, 0 = hardware")
        ->capture_default_str();
    app.add_option("--profile", g->profile, "run-length profile")
        ->check(CLI::IsMember({"ci", "production"}))
        ->capture_default_str();

    std::function<void()> action;

    {
        auto* cmd = app.add_subcommand("spectrum", "asymptotic continuous spectrum as CSV");
        auto p = std::make_shared<double>(0.0);
        auto num_phi = std::make_shared<int>(512);
        auto out_path = std::make_shared<std::string>("-");
        cmd->add_option("--p", *p, "coupling parameter")->capture_default_str();
        cmd->add_option("--num-phi", *num_phi, "phi grid size")->capture_default_str();
        cmd->add_option("--out", *out_path, "output CSV ('-' = stdout)")->capture_default_str();
        cmd->callback([&, p, num_phi, out_path] {
            action = [&, p, num_phi, out_path] { run_spectrum(*g, *p, *num_phi, *out_path, out); };
        });
    }
    {
        auto* cmd = app.add_subcommand("critical", "locate the destabilization point (JSON)");
        auto p_lo = std::make_shared<double>(0.0);
        auto p_hi = std::make_shared<double>(10.0);
        auto out_path = std::make_shared<std::string>("-");
        cmd->add_option("--p-lo", *p_lo, "bracket lower end")->capture_default_str();
        cmd->add_option("--p-hi", *p_hi, "bracket upper end")->capture_default_str();
        cmd->add_option("--out", *out_path, "output JSON ('-' = stdout)")->capture_default_str();
        cmd->callback([&, p_lo, p_hi, out_path] {
            action = [&, p_lo, p_hi, out_path] { run_critical(*g, *p_lo, *p_hi, *out_path, out); };
        });
    }
    {
        auto* cmd = app.add_subcommand("coeffs", "amplitude-equation coefficients (JSON)");
        auto p_lo = std::make_shared<double>(0.0);
        auto p_hi = std::make_shared<double>(10.0);
        auto out_path = std::make_shared<std::string>("-");
        cmd->add_option("--p-lo", *p_lo, "bracket lower end")->capture_default_str();
        cmd->add_option("--p-hi", *p_hi, "bracket upper end")->capture_default_str();
        cmd->add_option("--out", *out_path, "output JSON ('-' = stdout)")->capture_default_str();
        cmd->callback([&, p_lo, p_hi, out_path] {
            action = [&, p_lo, p_hi, out_path] { run_coeffs(*g, *p_lo, *p_hi, *out_path, out); };
        });
    }
    {
        auto* cmd = app.add_subcommand("gl", "integrate the reduced amplitude equation");
        auto r = std::make_shared<double>(1.0);
        auto t_end = std::make_shared<double>(50.0);
        auto dt = std::make_shared<double>(1e-3);
        auto grid = std::make_shared<int>(256);
        auto snapshots = std::make_shared<std::string>();
        auto stride = std::make_shared<int>(0);
        cmd->add_option("--r", *r, "rescaled bifurcation parameter")->capture_default_str();
        cmd->add_option("--t-end", *t_end, "slow-time horizon T2")->capture_default_str();
        cmd->add_option("--dt", *dt, "time step in T2 units")->capture_default_str();
        cmd->add_option("--grid", *grid, "spatial grid size (power of two)")
            ->capture_default_str();
        cmd->add_option("--snapshots", *snapshots, "CSV path for field snapshots");
        cmd->add_option("--snapshot-stride", *stride,
                        "steps between snapshots (0 = about 100 snapshots)")
            ->capture_default_str();
        cmd->callback([&, r, t_end, dt, grid, snapshots, stride] {
            action = [&, r, t_end, dt, grid, snapshots, stride] {
                run_gl(*g, *r, *t_end, *dt, *grid, *snapshots, *stride, out);
            };
        });
    }
    {
        auto* cmd = app.add_subcommand("simulate", "integrate the ring ODE to CSV");
        auto p = std::make_shared<double>(0.0);
        auto t_end = std::make_shared<double>(1000.0);
        auto dt = std::make_shared<double>(0.01);
        auto method = std::make_shared<std::string>("rk4");
        auto stride = std::make_shared<int>(10);
        auto amplitude = std::make_shared<double>(0.1);
        auto out_path = std::make_shared<std::string>("-");
        cmd->add_option("--p", *p, "coupling parameter")->required();
        cmd->add_option("--t-end", *t_end, "integration horizon")->capture_default_str();
        cmd->add_option("--dt", *dt, "step size (rk45: initial step)")->capture_default_str();
        cmd->add_option("--method", *method, "integrator")
            ->check(CLI::IsMember({"rk4", "rk45"}))
            ->capture_default_str();
        cmd->add_option("--stride", *stride, "keep every k-th step (0 = final only)")
            ->capture_default_str();
        cmd->add_option("--init-amplitude", *amplitude, "uniform initial-condition amplitude")
            ->capture_default_str();
        cmd->add_option("--out", *out_path, "output CSV ('-' = stdout)")->capture_default_str();
        cmd->callback([&, p, t_end, dt, method, stride, amplitude, out_path] {
            action = [&, p, t_end, dt, method, stride, amplitude, out_path] {
                run_simulate(*g, *p, *t_end, *dt, *method, *stride, *amplitude, *out_path, out);
            };
        });
    }
    {
        auto* cmd = app.add_subcommand("lyapunov", "Lyapunov spectrum via Benettin/QR (JSON)");
        auto p = std::make_shared<double>(0.0);
        auto count = std::make_shared<int>(2);
        auto history_stride = std::make_shared<int>(1);
        auto amplitude = std::make_shared<double>(0.1);
        auto out_path = std::make_shared<std::string>("-");
        cmd->add_option("--p", *p, "coupling parameter")->required();
        cmd->add_option("--num-exponents", *count, "leading exponents to compute")
            ->capture_default_str();
        cmd->add_option("--history-stride", *history_stride,
                        "keep every k-th renormalization in the history")
            ->capture_default_str();
        cmd->add_option("--init-amplitude", *amplitude, "uniform initial-condition amplitude")
            ->capture_default_str();
        cmd->add_option("--out", *out_path, "output JSON ('-' = stdout)")->capture_default_str();
        cmd->callback([&, p, count, history_stride, amplitude, out_path] {
            action = [&, p, count, history_stride, amplitude, out_path] {
                run_lyapunov(*g, *p, *count, *history_stride, *amplitude, *out_path, out);
            };
        });
    }
    {
        auto* cmd = app.add_subcommand("scan", "Hopf and chaos onsets per ring size (CSV)");
        auto n_list = std::make_shared<std::vector<int>>();
        auto out_path = std::make_shared<std::string>("records.csv");
        auto skip_chaos = std::make_shared<bool>(false);
        auto p_max = std::make_shared<double>(1.0);
        cmd->add_option("--n-list", *n_list, "ring sizes, e.g. 5,10,15")
            ->required()
            ->delimiter(',');
        cmd->add_option("--out", *out_path, "records CSV path")->capture_default_str();
        cmd->add_flag("--skip-chaos", *skip_chaos, "Hopf points only");
        cmd->add_option("--p-max", *p_max, "chaos-scan upper bound")->capture_default_str();
        cmd->callback([&, n_list, out_path, skip_chaos, p_max] {
            action = [&, n_list, out_path, skip_chaos, p_max] {
                run_scan(*g, *n_list, *out_path, *skip_chaos, *p_max, out);
            };
        });
    }
    {
        auto* cmd = app.add_subcommand("scaling",
                                       "aggregate transition intervals (JSON summary)");
        auto n_list = std::make_shared<std::vector<int>>();
        auto records = std::make_shared<std::string>();
        auto out_path = std::make_shared<std::string>();
        auto p_max = std::make_shared<double>(1.0);
        cmd->add_option("--n-list", *n_list, "ring sizes to compute")->delimiter(',');
        cmd->add_option("--records", *records, "aggregate an existing records CSV instead");
        cmd->add_option("--out", *out_path, "also write records CSV here");
        cmd->add_option("--p-max", *p_max, "chaos-scan upper bound")->capture_default_str();
        cmd->callback([&, n_list, records, out_path, p_max] {
            action = [&, n_list, records, out_path, p_max] {
                run_scaling(*g, *n_list, *records, *out_path, *p_max, out);
            };
        });
    }
    {
        auto* cmd = app.add_subcommand("verify", "built-in cross-check suite (PASS/FAIL)");
        cmd->callback([&] {
            action = [&] { run_verify(*g, out); };
        });
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back(); // drop program name
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << app.version() << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << app.help() << '\n';
        err << json{{"error", e.what()}, {"type", "config"}}.dump() << '\n';
        return 2;
    }

    if (!action) {
        err << app.help() << '\n';
        err << json{{"error", "missing subcommand"}, {"type", "config"}}.dump() << '\n';
        return 2;
    }
    try {
        action();
    } catch (const ConfigError& e) {
        err << json{{"error", e.what()}, {"type", "config"}}.dump() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        err << json{{"error", e.what()}, {"type", "numerical"}}.dump() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << json{{"error", e.what()}, {"type", "internal"}}.dump() << '\n';
        return 3;
    }
    return 0;
}

int dispatch(int argc, const char* const* argv) {
    std::vector<std::string> args(argv, argv + argc);
    return dispatch(args, std::cout, std::cerr);
}

} // namespace oscring::cli
