#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "icl/sim.hpp"
#include "icl/types.hpp"

namespace icl {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

/// Monte Carlo configuration. Defaults reproduce the benchmark robustness
/// comparison: uniform gain sampling, sigma = 0.3 measurement noise,
/// 0.0004 s steps over 100 s, stack size 20, steady-state window [60, 100].
struct McConfig {
    std::string model = "benchmark_system";
    int trial_count = 200;
    Range k_range{0.1, 15.0};
    Range gamma_range{0.3, 3.0};
    Range kcl_range{0.002, 0.2};
    Range delta_t_range{0.01, 1.0};
    double noise_sigma = 0.3;
    double step_h = 0.0004;
    double duration = 100.0;
    int stack_capacity = 20;
    double rms_t_start = 60.0;
    double rms_t_end = 100.0;
    std::uint64_t master_seed = 1;
    int parallelism = 0;  // 0 -> hardware concurrency
    std::string output_dir = "out";
    double lambda_bar = 1e-4;
    int log_every = 25;
};

// Flat key = value config file; unknown keys are ignored so a run manifest
// can be fed back in directly.
McConfig load_mc_config(const std::string& path);

struct TrialRecord {
    int index = 0;
    Method method = Method::integral_cl;
    double K_s = 0.0;
    double Gamma_s = 0.0;
    double k_cl = 0.0;
    double delta_t = 0.0;
    bool diverged = false;
    Vec rms_e;
    Vec rms_theta;
};

struct McSummary {
    std::vector<TrialRecord> trials;  // 2 per trial index (integral, derivative)
    Vec mean_rms_e_icl, mean_rms_theta_icl;
    Vec mean_rms_e_dcl, mean_rms_theta_dcl;
    int diverged_icl = 0;
    int diverged_dcl = 0;
    std::vector<double> mean_t;
    std::vector<Vec> mean_e_icl, mean_theta_icl;
    std::vector<Vec> mean_e_dcl, mean_theta_dcl;
};

/// One paired gain draw: identical (K_s, Gamma_s, k_cl, delta_t) and noise
/// sub-seed for both methods; the derivative config additionally carries
/// filter_window = min{0.5, delta_t}.
std::pair<TrialConfig, TrialConfig> sample_trial_config(std::mt19937_64& rng,
                                                        const McConfig& mc,
                                                        int trial_index);

/// Per-channel RMS over samples with t in [t_a, t_b].
Vec rms_window(const std::vector<double>& t, const std::vector<Vec>& series,
               double t_a, double t_b);

McSummary run_monte_carlo(const McConfig& mc);

/// Writes summary.csv, trials.csv, mean_trajectories.csv and manifest.txt
/// under dir (created if needed).
void emit_outputs(const McSummary& summary, const McConfig& mc, const std::string& dir);

}  // namespace icl
