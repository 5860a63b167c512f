// Command line front end: single closed-loop trials, the Monte Carlo
// robustness comparison, and a quick invariant check.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "icl/harness.hpp"
#include "icl/model.hpp"
#include "icl/sim.hpp"

namespace {

std::string default_output_dir() {
    if (const char* env = std::getenv("ICL_OUTPUT_DIR")) return env;
    return "out";
}

int cmd_trial(const icl::TrialConfig& cfg, const std::string& out_dir) {
    const icl::TrialResult result = icl::run_trial(cfg);

    std::filesystem::create_directories(out_dir);
    const auto trial_path = std::filesystem::path(out_dir) / "trial.csv";
    const auto excite_path = std::filesystem::path(out_dir) / "excitation.csv";
    {
        std::ofstream os(trial_path, std::ios::binary);
        icl::write_trial_csv(result, os);
    }
    {
        std::ofstream os(excite_path, std::ios::binary);
        icl::write_excitation_csv(result, os);
    }

    std::cout << "method: " << icl::method_name(cfg.method) << '\n';
    if (result.diverged) {
        std::cout << "diverged at t = " << result.diverged_t << '\n';
    }
    if (result.t_excite) {
        std::cout << "T_excite: " << *result.t_excite << " s\n";
    } else {
        std::cout << "T_excite: not reached\n";
    }
    if (!result.theta_tilde.empty()) {
        std::cout << "final |theta_tilde|: " << result.theta_tilde.back().norm() << '\n';
        std::cout << "final |e|: " << result.e.back().norm() << '\n';
    }
    std::cout << "wrote " << trial_path.string() << " and " << excite_path.string() << '\n';
    return result.diverged ? 1 : 0;
}

int cmd_monte_carlo(const icl::McConfig& mc) {
    const icl::McSummary summary = icl::run_monte_carlo(mc);
    icl::emit_outputs(summary, mc, mc.output_dir);

    const auto print_row = [](const char* name, const icl::Vec& e, const icl::Vec& th) {
        if (e.size() == 0) return;
        std::cout << name;
        for (Eigen::Index i = 0; i < e.size(); ++i) std::cout << '\t' << e(i);
        for (Eigen::Index i = 0; i < th.size(); ++i) std::cout << '\t' << th(i);
        std::cout << '\n';
    };
    std::cout << "mean steady-state RMS (e1 e2 theta1..theta4)\n";
    print_row("integral  ", summary.mean_rms_e_icl, summary.mean_rms_theta_icl);
    print_row("derivative", summary.mean_rms_e_dcl, summary.mean_rms_theta_dcl);
    std::cout << "diverged: integral " << summary.diverged_icl << ", derivative "
              << summary.diverged_dcl << '\n';
    std::cout << "outputs in " << mc.output_dir << '\n';
    return 0;
}

int cmd_check() {
    // Small fast configuration exercising the main invariants.
    const icl::PlantModel& model = icl::find_model("benchmark_system");
    icl::TrialConfig cfg;
    cfg.method = icl::Method::integral_cl;
    cfg.K = 10.0 * icl::Mat::Identity(2, 2);
    cfg.Gamma = icl::Mat::Identity(4, 4);
    cfg.k_cl = 0.1;
    cfg.delta_t = 0.5;
    cfg.noise_sigma = 0.0;
    cfg.step_h = 0.0004;
    cfg.duration = 8.0;
    cfg.log_every = 1;
    cfg.collect_diagnostics = true;
    const icl::TrialResult r = icl::run_trial(cfg);

    int failures = 0;
    const auto report = [&](const char* name, bool ok, double value) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << " (" << value << ")\n";
        if (!ok) ++failures;
    };

    double max_ftc = 0.0, max_equiv = 0.0;
    for (const auto& d : r.diagnostics) {
        max_ftc = std::max(max_ftc, d.ftc_residual);
        max_equiv =
            std::max(max_equiv, d.equivalence_residual / (1.0 + d.theta_hat_norm));
    }
    report("window-integral identity residual <= 1e-5", max_ftc <= 1e-5, max_ftc);
    report("update-law equivalence residual <= 1e-6*(1+|theta_hat|)", max_equiv <= 1e-6,
           max_equiv);

    double worst_dv = -1e300;
    for (std::size_t k = 0; k + 1 < r.V.size(); ++k) {
        worst_dv = std::max(worst_dv, r.V[k + 1] - r.V[k] - 1e-9 * (1.0 + r.V[k]));
    }
    report("Lyapunov value non-increasing", worst_dv <= 0.0, worst_dv);

    bool lam_monotone = true;
    for (std::size_t k = 0; k + 1 < r.lambda_min.size(); ++k) {
        if (r.lambda_min[k + 1] < r.lambda_min[k] - 1e-12) lam_monotone = false;
    }
    report("lambda_min non-decreasing", lam_monotone, r.lambda_min.back());
    report("excitation declared", r.t_excite.has_value(),
           r.t_excite ? *r.t_excite : -1.0);
    report("no divergence", !r.diverged, r.diverged_t);
    (void)model;
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Integral concurrent-learning adaptive control simulator"};
    app.require_subcommand(1);

    // trial
    auto* trial = app.add_subcommand("trial", "Run a single closed-loop trial");
    std::string method = "integral_cl";
    std::string model_name = "benchmark_system";
    double Ks = 10.0, Gammas = 1.0, kcl = 0.1, delta_t = 0.5, sigma = 0.0;
    double step = 0.0004, duration = 100.0, lambda_bar = 1e-4, filter_window = 0.5;
    std::uint64_t seed = 0;
    int stack_capacity = 20, log_every = 25;
    std::string trial_out = default_output_dir();
    trial->add_option("--method", method, "gradient | integral_cl | derivative_cl");
    trial->add_option("--model", model_name, "model name");
    trial->add_option("--Ks", Ks, "feedback gain scale (K = Ks I)");
    trial->add_option("--Gammas", Gammas, "adaptation gain scale (Gamma = Gammas I)");
    trial->add_option("--kcl", kcl, "concurrent-learning gain");
    trial->add_option("--delta-t", delta_t, "integration window (s)");
    trial->add_option("--noise-sigma", sigma, "measurement noise std dev");
    trial->add_option("--step", step, "integrator step (s)");
    trial->add_option("--duration", duration, "trial length (s)");
    trial->add_option("--seed", seed, "noise seed");
    trial->add_option("--lambda-bar", lambda_bar, "excitation threshold");
    trial->add_option("--filter-window", filter_window, "derivative filter window (s)");
    trial->add_option("--stack-capacity", stack_capacity, "history stack size");
    trial->add_option("--log-every", log_every, "logging decimation (steps)");
    trial->add_option("--out", trial_out, "output directory");

    // monte-carlo
    auto* mcc = app.add_subcommand("monte-carlo", "Run the Monte Carlo comparison");
    std::string config_path;
    int trials = 50;
    bool full = false;
    std::uint64_t master_seed = 1;
    int parallelism = 0;
    double mc_sigma = 0.3;
    std::string mc_out = default_output_dir();
    mcc->add_option("--config", config_path, "flat key = value config file");
    mcc->add_option("--trials", trials, "trial count (default 50)");
    mcc->add_flag("--full", full, "run the full 200-trial configuration");
    mcc->add_option("--seed", master_seed, "master seed");
    mcc->add_option("--parallelism", parallelism, "worker threads (0 = hardware)");
    mcc->add_option("--noise-sigma", mc_sigma, "measurement noise std dev");
    mcc->add_option("--output-dir", mc_out, "output directory");

    // check
    auto* check = app.add_subcommand("check", "Run the fast invariant suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*trial) {
            const icl::PlantModel& model = icl::find_model(model_name);
            icl::TrialConfig cfg;
            cfg.model = model_name;
            cfg.method = icl::parse_method(method);
            cfg.K = Ks * icl::Mat::Identity(model.n, model.n);
            cfg.Gamma = Gammas * icl::Mat::Identity(model.m, model.m);
            cfg.k_cl = kcl;
            cfg.delta_t = delta_t;
            cfg.noise_sigma = sigma;
            cfg.step_h = step;
            cfg.duration = duration;
            cfg.seed = seed;
            cfg.lambda_bar = lambda_bar;
            cfg.filter_window = std::min(filter_window, delta_t);
            cfg.stack_capacity = stack_capacity;
            cfg.log_every = log_every;
            return cmd_trial(cfg, trial_out);
        }
        if (*mcc) {
            icl::McConfig mc;
            if (!config_path.empty()) mc = icl::load_mc_config(config_path);
            if (mcc->count("--trials") || config_path.empty()) mc.trial_count = trials;
            if (full) mc.trial_count = 200;
            if (mcc->count("--seed") || config_path.empty()) mc.master_seed = master_seed;
            if (mcc->count("--parallelism")) mc.parallelism = parallelism;
            if (mcc->count("--noise-sigma")) mc.noise_sigma = mc_sigma;
            if (mcc->count("--output-dir") || config_path.empty()) mc.output_dir = mc_out;
            return cmd_monte_carlo(mc);
        }
        if (*check) return cmd_check();
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 2;
    }
    return 0;
}
