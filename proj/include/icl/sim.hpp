#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "icl/gains.hpp"
#include "icl/model.hpp"
#include "icl/types.hpp"

namespace icl {

enum class Method { gradient, integral_cl, derivative_cl };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct TrialConfig {
    std::string model = "benchmark_system";
    Method method = Method::integral_cl;
    Mat K;
    Mat Gamma;
    double k_cl = 0.1;
    double delta_t = 0.5;
    double noise_sigma = 0.0;
    double step_h = 0.0004;
    double duration = 100.0;
    Vec x0;          // defaults to zeros(n)
    Vec theta_hat0;  // defaults to zeros(m)
    std::uint64_t seed = 0;
    double lambda_bar = 1e-4;       // excitation threshold
    double filter_window = 0.5;     // derivative baseline only
    int stack_capacity = 20;
    int log_every = 25;             // decimation of the logged series
    bool collect_diagnostics = false;
};

/// Constants of the exponential decay certificate.
struct StabilityBounds {
    double beta1 = 0.0;   // 0.5 * min{1, lambda_min(Gamma^-1)}
    double beta2 = 0.0;   // 0.5 * max{1, lambda_max(Gamma^-1)}
    double lambda1 = 0.0; // (1/beta2) * min{lambda_min(K), k_cl * lambda_bar}
    std::optional<double> t_excite;
};

StabilityBounds stability_bounds(const Gains& gains, double lambda_bar,
                                 std::optional<double> t_excite);

/// V = 0.5 e^T e + 0.5 theta_tilde^T Gamma^-1 theta_tilde.
double lyapunov(const Vec& e, const Vec& theta_tilde, const Gains& gains);

/// Right-hand side of the decay certificate
///   (beta2/beta1) exp(lambda1 T) ||eta(0)|| exp(-lambda1 t).
/// Not applicable before excitation has been declared.
std::optional<double> exponential_envelope(double t, const StabilityBounds& bounds,
                                           double eta0_norm);

/// One classical fixed-step RK4 step of y' = f(y, t).
Vec rk4_step(const std::function<Vec(const Vec&, double)>& f, const Vec& y,
             double t, double h);

/// Measurement model: x + nu, nu ~ N(0, sigma^2 I). sigma = 0 returns the
/// input unchanged and consumes no randomness.
Vec add_measurement_noise(const Vec& x_true, double sigma, std::mt19937_64& rng);

/// Per-recording-instant instrumentation (noiseless verification runs).
struct RecordingDiagnostic {
    double t = 0.0;
    double ftc_residual = 0.0;          // ||dx - script_Y theta - script_U||
    double equivalence_residual = 0.0;  // ||icl_term - k_cl Gamma gram theta_tilde||
    double theta_hat_norm = 0.0;
    bool accepted = false;
};

struct TrialResult {
    std::vector<double> t;
    std::vector<Vec> e;            // true tracking error x - xd
    std::vector<Vec> theta_tilde;  // theta - theta_hat
    std::vector<double> lambda_min;
    std::vector<double> V;
    std::vector<double> envelope;  // NaN before excitation is declared
    std::vector<int> stack_size;
    std::optional<double> t_excite;
    StabilityBounds bounds;
    double eta0_norm = 0.0;
    Vec rms_e;      // steady-state window RMS, empty if not covered
    Vec rms_theta;
    bool diverged = false;
    double diverged_t = 0.0;
    std::vector<Vec> first_noise;  // first three measurement-noise draws
    std::vector<RecordingDiagnostic> diagnostics;
};

// Runs one closed-loop trial. The single-argument form resolves the model
// from the catalog and pairs it with the benchmark trajectory.
TrialResult run_trial(const TrialConfig& cfg);
TrialResult run_trial(const TrialConfig& cfg, const PlantModel& model,
                      const DesiredTrajectory& traj);

// CSV with columns t, e1..en, thetatilde1..m, lambda_min, V, envelope.
void write_trial_csv(const TrialResult& result, std::ostream& os);
// CSV with columns t, lambda_min, stack_size.
void write_excitation_csv(const TrialResult& result, std::ostream& os);

}  // namespace icl
