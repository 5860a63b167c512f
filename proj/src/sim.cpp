#include "icl/sim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "icl/csv.hpp"
#include "icl/estimator.hpp"
#include "icl/memory.hpp"

namespace icl {

std::string method_name(Method m) {
    switch (m) {
        case Method::gradient: return "gradient";
        case Method::integral_cl: return "integral_cl";
        case Method::derivative_cl: return "derivative_cl";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    if (name == "gradient") return Method::gradient;
    if (name == "integral_cl") return Method::integral_cl;
    if (name == "derivative_cl") return Method::derivative_cl;
    throw std::invalid_argument("unknown method: " + name);
}

StabilityBounds stability_bounds(const Gains& gains, double lambda_bar,
                                 std::optional<double> t_excite) {
    StabilityBounds b;
    b.beta1 = 0.5 * std::min(1.0, 1.0 / gains.Gamma_max_eig());
    b.beta2 = 0.5 * std::max(1.0, 1.0 / gains.Gamma_min_eig());
    b.lambda1 = std::min(gains.K_min_eig(), gains.k_cl() * lambda_bar) / b.beta2;
    b.t_excite = t_excite;
    return b;
}

double lyapunov(const Vec& e, const Vec& theta_tilde, const Gains& gains) {
    return 0.5 * e.squaredNorm() +
           0.5 * theta_tilde.dot(gains.Gamma_inv() * theta_tilde);
}

std::optional<double> exponential_envelope(double t, const StabilityBounds& bounds,
                                           double eta0_norm) {
    if (!bounds.t_excite) return std::nullopt;
    return (bounds.beta2 / bounds.beta1) * std::exp(bounds.lambda1 * *bounds.t_excite) *
           eta0_norm * std::exp(-bounds.lambda1 * t);
}

Vec rk4_step(const std::function<Vec(const Vec&, double)>& f, const Vec& y,
             double t, double h) {
    const Vec k1 = f(y, t);
    const Vec k2 = f(y + 0.5 * h * k1, t + 0.5 * h);
    const Vec k3 = f(y + 0.5 * h * k2, t + 0.5 * h);
    const Vec k4 = f(y + h * k3, t + h);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vec add_measurement_noise(const Vec& x_true, double sigma, std::mt19937_64& rng) {
    if (sigma < 0.0) throw std::invalid_argument("noise sigma must be non-negative");
    if (sigma == 0.0) return x_true;
    std::normal_distribution<double> gauss(0.0, sigma);
    Vec x = x_true;
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += gauss(rng);
    return x;
}

TrialResult run_trial(const TrialConfig& cfg) {
    return run_trial(cfg, find_model(cfg.model), benchmark_trajectory());
}

TrialResult run_trial(const TrialConfig& cfg, const PlantModel& model,
                      const DesiredTrajectory& traj) {
    if (!(cfg.step_h > 0.0)) throw std::invalid_argument("step_h must be positive");
    if (!(cfg.duration > cfg.delta_t)) {
        throw std::invalid_argument("duration must exceed delta_t");
    }
    if (cfg.noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be non-negative");

    const int n = model.n;
    const int m = model.m;
    const Gains gains(cfg.K, cfg.Gamma, cfg.k_cl);
    const Vec theta_true = model.true_theta;

    Vec x = cfg.x0.size() ? cfg.x0 : Vec::Zero(n);
    Vec th = cfg.theta_hat0.size() ? cfg.theta_hat0 : Vec::Zero(m);
    if (x.size() != n || th.size() != m) {
        throw std::invalid_argument("x0/theta_hat0 dimension mismatch");
    }

    const double h = cfg.step_h;
    const long steps = std::lround(cfg.duration / h);
    const long record_every = std::max(1L, std::lround(0.5 * cfg.delta_t / h));
    const auto half_filter =
        static_cast<long>(std::llround(cfg.filter_window / (2.0 * h)));

    IntegrationBuffer buffer(cfg.delta_t);
    HistoryStack stack(static_cast<std::size_t>(cfg.stack_capacity), m);
    std::mt19937_64 rng(cfg.seed);

    // Stage-weighted average of the measured regressor over the step that
    // ended at the current sample time; zero for the first sample.
    Mat Ybar_trail = Mat::Zero(n, m);

    TrialResult result;
    result.eta0_norm = std::sqrt((x - traj.value(0.0)).squaredNorm() +
                                 (theta_true - th).squaredNorm());

    const auto log_state = [&](double t) {
        result.t.push_back(t);
        result.e.push_back(x - traj.value(t));
        result.theta_tilde.push_back(theta_true - th);
        result.lambda_min.push_back(stack.lambda_min());
        result.V.push_back(lyapunov(result.e.back(), result.theta_tilde.back(), gains));
        result.stack_size.push_back(static_cast<int>(stack.size()));
    };

    for (long k = 0;; ++k) {
        const double t = k * h;

        const Vec x_meas = add_measurement_noise(x, cfg.noise_sigma, rng);
        if (result.first_noise.size() < 3) {
            result.first_noise.push_back(x_meas - x);
        }
        const Vec xd = traj.value(t);
        const Vec xd_dot = traj.rate(t);
        const Mat Y_meas = model.eval_regressor(x_meas, t);
        const Vec u = xd_dot - Y_meas * th - gains.K() * (x_meas - xd);
        if (!u.allFinite()) {
            result.diverged = true;
            result.diverged_t = t;
            break;
        }
        buffer.push({t, x_meas, Y_meas, u, Ybar_trail});

        if (k > 0 && k % record_every == 0 && cfg.method != Method::gradient) {
            if (cfg.method == Method::integral_cl && t > cfg.delta_t + 0.25 * h) {
                if (auto wi = window_integrals(buffer, t)) {
                    StackEntry cand{t, wi->script_Y, wi->x_now - wi->x_lag, wi->script_U};
                    const bool accepted = stack.try_record(cand);
                    if (cfg.collect_diagnostics) {
                        RecordingDiagnostic d;
                        d.t = t;
                        d.ftc_residual =
                            (cand.dx - cand.Y * theta_true - cand.u).norm();
                        d.equivalence_residual =
                            (icl_term(stack, th, gains) -
                             gains.k_cl() * (gains.Gamma() *
                                             (stack.gram() * (theta_true - th))))
                                .norm();
                        d.theta_hat_norm = th.norm();
                        d.accepted = accepted;
                        result.diagnostics.push_back(d);
                    }
                }
            } else if (cfg.method == Method::derivative_cl) {
                const double t_q = t - static_cast<double>(half_filter + 1) * h;
                if (t_q > 0.0) {
                    if (auto xdot = estimate_state_derivative(buffer, cfg.filter_window, t_q)) {
                        if (const WindowSample* s = buffer.sample_at(t_q)) {
                            stack.try_record({t_q, s->Y, *xdot, s->u});
                        }
                    }
                }
            }
            if (!result.t_excite && stack.lambda_min() >= cfg.lambda_bar) {
                result.t_excite = t;
            }
        }

        // Concurrent-learning sum under zero-order hold over the step.
        Vec cl = Vec::Zero(m);
        if (cfg.method == Method::integral_cl) {
            cl = icl_term(stack, th, gains);
        } else if (cfg.method == Method::derivative_cl) {
            cl = dcl_term(stack, th, gains);
        }

        if (k % cfg.log_every == 0 || k == steps) log_state(t);
        if (k == steps) break;

        // Augmented dynamics. u and the CL sum are held constant over the
        // step; the plant substages propagate the true parameters while the
        // gradient term sees the measured (noise-offset) state.
        const Vec nu = x_meas - x;
        Mat Ybar = Mat::Zero(n, m);
        const auto fx = [&](const Vec& xs, double ts) {
            return Vec(model.eval_regressor(xs, ts) * theta_true + u);
        };
        // The stage-weighted sum of the measured regressors reproduces the
        // x increment exactly for the noiseless flow: the same evaluations
        // enter the integrator and the window quadrature.
        const auto fth = [&](const Vec& xs, double ts, double w) {
            const Vec xm = xs + nu;
            const Mat Ym = model.eval_regressor(xm, ts);
            Ybar += (w / 6.0) * Ym;
            return Vec(gains.Gamma() * (Ym.transpose() * (xm - traj.value(ts))) + cl);
        };
        const Vec k1x = fx(x, t);
        const Vec k1t = fth(x, t, 1.0);
        const Vec x2 = x + 0.5 * h * k1x;
        const Vec k2x = fx(x2, t + 0.5 * h);
        const Vec k2t = fth(x2, t + 0.5 * h, 2.0);
        const Vec x3 = x + 0.5 * h * k2x;
        const Vec k3x = fx(x3, t + 0.5 * h);
        const Vec k3t = fth(x3, t + 0.5 * h, 2.0);
        const Vec x4 = x + h * k3x;
        const Vec k4x = fx(x4, t + h);
        const Vec k4t = fth(x4, t + h, 1.0);
        x += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        th += (h / 6.0) * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
        Ybar_trail = Ybar;

        if (!x.allFinite() || !th.allFinite() || x.norm() > 1e6 || th.norm() > 1e9) {
            result.diverged = true;
            result.diverged_t = t + h;
            log_state(t + h <= cfg.duration ? t + h : cfg.duration);
            break;
        }
    }

    result.bounds = stability_bounds(gains, cfg.lambda_bar, result.t_excite);
    result.envelope.reserve(result.t.size());
    for (double t : result.t) {
        const auto env = exponential_envelope(t, result.bounds, result.eta0_norm);
        result.envelope.push_back(env ? *env : std::numeric_limits<double>::quiet_NaN());
    }
    return result;
}

void write_trial_csv(const TrialResult& result, std::ostream& os) {
    const auto n = result.e.empty() ? 0 : result.e.front().size();
    const auto m = result.theta_tilde.empty() ? 0 : result.theta_tilde.front().size();
    os << "t";
    for (Eigen::Index i = 0; i < n; ++i) os << ",e" << (i + 1);
    for (Eigen::Index i = 0; i < m; ++i) os << ",thetatilde" << (i + 1);
    os << ",lambda_min,V,envelope\n";
    for (std::size_t k = 0; k < result.t.size(); ++k) {
        os << csv_double(result.t[k]);
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << csv_double(result.e[k](i));
        for (Eigen::Index i = 0; i < m; ++i) os << ',' << csv_double(result.theta_tilde[k](i));
        os << ',' << csv_double(result.lambda_min[k]) << ',' << csv_double(result.V[k])
           << ',' << csv_double(result.envelope[k]) << '\n';
    }
}

void write_excitation_csv(const TrialResult& result, std::ostream& os) {
    os << "t,lambda_min,stack_size\n";
    for (std::size_t k = 0; k < result.t.size(); ++k) {
        os << csv_double(result.t[k]) << ',' << csv_double(result.lambda_min[k]) << ','
           << result.stack_size[k] << '\n';
    }
}

}  // namespace icl
