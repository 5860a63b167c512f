#include "icl/harness.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "icl/csv.hpp"
#include "icl/model.hpp"

namespace icl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

void validate(const McConfig& mc) {
    const auto check_range = [](const Range& r, const char* name) {
        if (!(r.lo < r.hi)) {
            throw std::invalid_argument(std::string(name) + ": lower bound must be below upper");
        }
    };
    check_range(mc.k_range, "k_range");
    check_range(mc.gamma_range, "gamma_range");
    check_range(mc.kcl_range, "kcl_range");
    check_range(mc.delta_t_range, "delta_t_range");
    if (mc.trial_count < 1) throw std::invalid_argument("trial_count must be >= 1");
    if (mc.noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be non-negative");
    if (!(mc.step_h > 0.0)) throw std::invalid_argument("step_h must be positive");
    if (!(mc.rms_t_start < mc.rms_t_end)) {
        throw std::invalid_argument("rms window must be non-empty");
    }
    if (mc.rms_t_start >= mc.duration) {
        throw std::invalid_argument("rms window must start before the trial ends");
    }
}

}  // namespace

McConfig load_mc_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    McConfig mc;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty()) continue;
        if (key == "model") mc.model = val;
        else if (key == "trial_count") mc.trial_count = std::stoi(val);
        else if (key == "k_min") mc.k_range.lo = std::stod(val);
        else if (key == "k_max") mc.k_range.hi = std::stod(val);
        else if (key == "gamma_min") mc.gamma_range.lo = std::stod(val);
        else if (key == "gamma_max") mc.gamma_range.hi = std::stod(val);
        else if (key == "kcl_min") mc.kcl_range.lo = std::stod(val);
        else if (key == "kcl_max") mc.kcl_range.hi = std::stod(val);
        else if (key == "delta_t_min") mc.delta_t_range.lo = std::stod(val);
        else if (key == "delta_t_max") mc.delta_t_range.hi = std::stod(val);
        else if (key == "noise_sigma") mc.noise_sigma = std::stod(val);
        else if (key == "step_h") mc.step_h = std::stod(val);
        else if (key == "duration") mc.duration = std::stod(val);
        else if (key == "stack_capacity") mc.stack_capacity = std::stoi(val);
        else if (key == "rms_t_start") mc.rms_t_start = std::stod(val);
        else if (key == "rms_t_end") mc.rms_t_end = std::stod(val);
        else if (key == "master_seed") mc.master_seed = std::stoull(val);
        else if (key == "parallelism") mc.parallelism = std::stoi(val);
        else if (key == "output_dir") mc.output_dir = val;
        else if (key == "lambda_bar") mc.lambda_bar = std::stod(val);
        else if (key == "log_every") mc.log_every = std::stoi(val);
        // unknown keys (e.g. manifest trial echoes) are ignored
    }
    return mc;
}

std::pair<TrialConfig, TrialConfig> sample_trial_config(std::mt19937_64& rng,
                                                        const McConfig& mc,
                                                        int trial_index) {
    const auto draw = [&rng](const Range& r) {
        return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
    };
    const double K_s = draw(mc.k_range);
    const double Gamma_s = draw(mc.gamma_range);
    const double k_cl = draw(mc.kcl_range);
    const double delta_t = draw(mc.delta_t_range);

    const PlantModel& model = find_model(mc.model);
    TrialConfig base;
    base.model = mc.model;
    base.K = K_s * Mat::Identity(model.n, model.n);
    base.Gamma = Gamma_s * Mat::Identity(model.m, model.m);
    base.k_cl = k_cl;
    base.delta_t = delta_t;
    base.noise_sigma = mc.noise_sigma;
    base.step_h = mc.step_h;
    base.duration = mc.duration;
    base.seed = splitmix64(mc.master_seed ^ (0x51ed2701ULL + static_cast<std::uint64_t>(trial_index)));
    base.lambda_bar = mc.lambda_bar;
    base.filter_window = std::min(0.5, delta_t);
    base.stack_capacity = mc.stack_capacity;
    base.log_every = mc.log_every;

    TrialConfig icl_cfg = base;
    icl_cfg.method = Method::integral_cl;
    TrialConfig dcl_cfg = base;
    dcl_cfg.method = Method::derivative_cl;
    return {icl_cfg, dcl_cfg};
}

Vec rms_window(const std::vector<double>& t, const std::vector<Vec>& series,
               double t_a, double t_b) {
    if (t.size() != series.size()) {
        throw std::invalid_argument("rms_window: time grid and series size mismatch");
    }
    Vec acc;
    long count = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < t_a || t[k] > t_b) continue;
        if (count == 0) acc = Vec::Zero(series[k].size());
        acc += series[k].cwiseAbs2();
        ++count;
    }
    if (count == 0) throw std::invalid_argument("rms_window: no samples cover the window");
    return (acc / static_cast<double>(count)).cwiseSqrt();
}

McSummary run_monte_carlo(const McConfig& mc) {
    validate(mc);
    const PlantModel& model = find_model(mc.model);
    const DesiredTrajectory traj = benchmark_trajectory();

    std::mt19937_64 rng(mc.master_seed);
    struct Draw {
        TrialConfig cfg;
        double K_s, Gamma_s;
    };
    std::vector<Draw> runs;  // 2 per trial, integral first
    runs.reserve(2 * static_cast<std::size_t>(mc.trial_count));
    for (int i = 0; i < mc.trial_count; ++i) {
        auto [icl_cfg, dcl_cfg] = sample_trial_config(rng, mc, i);
        const double K_s = icl_cfg.K(0, 0);
        const double Gamma_s = icl_cfg.Gamma(0, 0);
        runs.push_back({std::move(icl_cfg), K_s, Gamma_s});
        runs.push_back({std::move(dcl_cfg), K_s, Gamma_s});
    }

    struct RunOutput {
        TrialRecord record;
        std::vector<double> t;
        std::vector<Vec> e, theta_tilde;
        bool usable = false;
    };
    std::vector<RunOutput> outputs(runs.size());

    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= runs.size()) return;
            const Draw& d = runs[i];
            TrialResult r = run_trial(d.cfg, model, traj);
            RunOutput& out = outputs[i];
            out.record.index = static_cast<int>(i / 2);
            out.record.method = d.cfg.method;
            out.record.K_s = d.K_s;
            out.record.Gamma_s = d.Gamma_s;
            out.record.k_cl = d.cfg.k_cl;
            out.record.delta_t = d.cfg.delta_t;
            out.record.diverged = r.diverged;
            if (!r.diverged) {
                out.record.rms_e = rms_window(r.t, r.e, mc.rms_t_start, mc.rms_t_end);
                out.record.rms_theta =
                    rms_window(r.t, r.theta_tilde, mc.rms_t_start, mc.rms_t_end);
                out.t = std::move(r.t);
                out.e = std::move(r.e);
                out.theta_tilde = std::move(r.theta_tilde);
                out.usable = true;
            } else {
                const double nan = std::numeric_limits<double>::quiet_NaN();
                out.record.rms_e = Vec::Constant(model.n, nan);
                out.record.rms_theta = Vec::Constant(model.m, nan);
            }
        }
    };

    unsigned pool = mc.parallelism > 0 ? static_cast<unsigned>(mc.parallelism)
                                       : std::max(1u, std::thread::hardware_concurrency());
    pool = std::min<unsigned>(pool, static_cast<unsigned>(runs.size()));
    std::vector<std::thread> threads;
    for (unsigned i = 0; i + 1 < pool; ++i) threads.emplace_back(worker);
    worker();
    for (auto& th : threads) th.join();

    // Deterministic ordered aggregation by trial index.
    McSummary summary;
    Vec sum_e_icl = Vec::Zero(model.n), sum_th_icl = Vec::Zero(model.m);
    Vec sum_e_dcl = Vec::Zero(model.n), sum_th_dcl = Vec::Zero(model.m);
    int kept_icl = 0, kept_dcl = 0;
    for (RunOutput& out : outputs) {
        const bool is_icl = out.record.method == Method::integral_cl;
        if (out.record.diverged) {
            (is_icl ? summary.diverged_icl : summary.diverged_dcl) += 1;
        } else if (is_icl) {
            sum_e_icl += out.record.rms_e;
            sum_th_icl += out.record.rms_theta;
            ++kept_icl;
        } else {
            sum_e_dcl += out.record.rms_e;
            sum_th_dcl += out.record.rms_theta;
            ++kept_dcl;
        }
        summary.trials.push_back(out.record);
    }
    if (kept_icl > 0) {
        summary.mean_rms_e_icl = sum_e_icl / kept_icl;
        summary.mean_rms_theta_icl = sum_th_icl / kept_icl;
    }
    if (kept_dcl > 0) {
        summary.mean_rms_e_dcl = sum_e_dcl / kept_dcl;
        summary.mean_rms_theta_dcl = sum_th_dcl / kept_dcl;
    }

    // Mean trajectories over non-diverged runs (shared decimated grid).
    for (const RunOutput& out : outputs) {
        if (!out.usable) continue;
        if (summary.mean_t.empty()) {
            summary.mean_t = out.t;
            summary.mean_e_icl.assign(out.t.size(), Vec::Zero(model.n));
            summary.mean_theta_icl.assign(out.t.size(), Vec::Zero(model.m));
            summary.mean_e_dcl.assign(out.t.size(), Vec::Zero(model.n));
            summary.mean_theta_dcl.assign(out.t.size(), Vec::Zero(model.m));
        }
        const bool is_icl = out.record.method == Method::integral_cl;
        auto& me = is_icl ? summary.mean_e_icl : summary.mean_e_dcl;
        auto& mt = is_icl ? summary.mean_theta_icl : summary.mean_theta_dcl;
        for (std::size_t k = 0; k < out.t.size() && k < me.size(); ++k) {
            me[k] += out.e[k];
            mt[k] += out.theta_tilde[k];
        }
    }
    for (auto& v : summary.mean_e_icl) v /= std::max(1, kept_icl);
    for (auto& v : summary.mean_theta_icl) v /= std::max(1, kept_icl);
    for (auto& v : summary.mean_e_dcl) v /= std::max(1, kept_dcl);
    for (auto& v : summary.mean_theta_dcl) v /= std::max(1, kept_dcl);
    return summary;
}

void emit_outputs(const McSummary& summary, const McConfig& mc, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    const auto open = [&](const std::string& name) {
        std::ofstream os(fs::path(dir) / name, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
        return os;
    };

    {
        auto os = open("summary.csv");
        os << "method,e1,e2,theta1,theta2,theta3,theta4\n";
        const auto row = [&](const char* name, const Vec& e, const Vec& th) {
            if (e.size() == 0) return;
            os << name;
            for (Eigen::Index i = 0; i < e.size(); ++i) os << ',' << csv_double(e(i));
            for (Eigen::Index i = 0; i < th.size(); ++i) os << ',' << csv_double(th(i));
            os << '\n';
        };
        row("integral", summary.mean_rms_e_icl, summary.mean_rms_theta_icl);
        row("derivative", summary.mean_rms_e_dcl, summary.mean_rms_theta_dcl);
    }

    {
        auto os = open("trials.csv");
        os << "trial,method,K_s,Gamma_s,k_cl,delta_t,diverged";
        const Eigen::Index n = summary.trials.empty() ? 2 : summary.trials.front().rms_e.size();
        const Eigen::Index m = summary.trials.empty() ? 4 : summary.trials.front().rms_theta.size();
        for (Eigen::Index i = 0; i < n; ++i) os << ",rms_e" << (i + 1);
        for (Eigen::Index i = 0; i < m; ++i) os << ",rms_theta" << (i + 1);
        os << '\n';
        for (const TrialRecord& r : summary.trials) {
            os << r.index << ',' << method_name(r.method) << ',' << csv_double(r.K_s) << ','
               << csv_double(r.Gamma_s) << ',' << csv_double(r.k_cl) << ','
               << csv_double(r.delta_t) << ',' << (r.diverged ? 1 : 0);
            for (Eigen::Index i = 0; i < r.rms_e.size(); ++i) os << ',' << csv_double(r.rms_e(i));
            for (Eigen::Index i = 0; i < r.rms_theta.size(); ++i)
                os << ',' << csv_double(r.rms_theta(i));
            os << '\n';
        }
    }

    {
        auto os = open("mean_trajectories.csv");
        const Eigen::Index n = summary.mean_e_icl.empty() ? 2 : summary.mean_e_icl.front().size();
        const Eigen::Index m =
            summary.mean_theta_icl.empty() ? 4 : summary.mean_theta_icl.front().size();
        os << "t";
        for (Eigen::Index i = 0; i < n; ++i) os << ",icl_e" << (i + 1);
        for (Eigen::Index i = 0; i < m; ++i) os << ",icl_theta" << (i + 1);
        for (Eigen::Index i = 0; i < n; ++i) os << ",dcl_e" << (i + 1);
        for (Eigen::Index i = 0; i < m; ++i) os << ",dcl_theta" << (i + 1);
        os << '\n';
        for (std::size_t k = 0; k < summary.mean_t.size(); ++k) {
            os << csv_double(summary.mean_t[k]);
            for (Eigen::Index i = 0; i < n; ++i) os << ',' << csv_double(summary.mean_e_icl[k](i));
            for (Eigen::Index i = 0; i < m; ++i)
                os << ',' << csv_double(summary.mean_theta_icl[k](i));
            for (Eigen::Index i = 0; i < n; ++i) os << ',' << csv_double(summary.mean_e_dcl[k](i));
            for (Eigen::Index i = 0; i < m; ++i)
                os << ',' << csv_double(summary.mean_theta_dcl[k](i));
            os << '\n';
        }
    }

    {
        auto os = open("manifest.txt");
        os << "model = " << mc.model << '\n'
           << "trial_count = " << mc.trial_count << '\n'
           << "k_min = " << csv_double(mc.k_range.lo) << '\n'
           << "k_max = " << csv_double(mc.k_range.hi) << '\n'
           << "gamma_min = " << csv_double(mc.gamma_range.lo) << '\n'
           << "gamma_max = " << csv_double(mc.gamma_range.hi) << '\n'
           << "kcl_min = " << csv_double(mc.kcl_range.lo) << '\n'
           << "kcl_max = " << csv_double(mc.kcl_range.hi) << '\n'
           << "delta_t_min = " << csv_double(mc.delta_t_range.lo) << '\n'
           << "delta_t_max = " << csv_double(mc.delta_t_range.hi) << '\n'
           << "noise_sigma = " << csv_double(mc.noise_sigma) << '\n'
           << "step_h = " << csv_double(mc.step_h) << '\n'
           << "duration = " << csv_double(mc.duration) << '\n'
           << "stack_capacity = " << mc.stack_capacity << '\n'
           << "rms_t_start = " << csv_double(mc.rms_t_start) << '\n'
           << "rms_t_end = " << csv_double(mc.rms_t_end) << '\n'
           << "master_seed = " << mc.master_seed << '\n'
           << "parallelism = " << mc.parallelism << '\n'
           << "output_dir = " << mc.output_dir << '\n'
           << "lambda_bar = " << csv_double(mc.lambda_bar) << '\n'
           << "log_every = " << mc.log_every << '\n'
           << "build = " <<
#if defined(__VERSION__)
            "gxx " __VERSION__
#else
            "unknown"
#endif
           << '\n';
        os << "diverged.integral = " << summary.diverged_icl << '\n';
        os << "diverged.derivative = " << summary.diverged_dcl << '\n';
        for (const TrialRecord& r : summary.trials) {
            if (r.method != Method::integral_cl) continue;  // draws are shared per pair
            os << "trial." << r.index << ".K_s = " << csv_double(r.K_s) << '\n'
               << "trial." << r.index << ".Gamma_s = " << csv_double(r.Gamma_s) << '\n'
               << "trial." << r.index << ".k_cl = " << csv_double(r.k_cl) << '\n'
               << "trial." << r.index << ".delta_t = " << csv_double(r.delta_t) << '\n';
        }
    }
}

}  // namespace icl
