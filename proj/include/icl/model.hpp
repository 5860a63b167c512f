#pragma once

#include <functional>
#include <string>
#include <vector>

#include "icl/types.hpp"

namespace icl {

/// Linearly parameterized plant: xdot = Y(x,t) * theta + u.
/// The true parameter vector is carried for simulation and metrics only;
/// estimator code never touches it.
struct PlantModel {
    int n = 0;  // state dimension
    int m = 0;  // parameter dimension
    std::function<Mat(const Vec&, double)> regressor;
    Vec true_theta;
    std::string name;

    // Y(x,t), with input validation. Output is always n x m.
    Mat eval_regressor(const Vec& x, double t) const;

    // f(x,t) = Y(x,t) * true_theta. Simulator/metrics use only.
    Vec eval_drift(const Vec& x, double t) const;
};

/// Desired trajectory with its analytic time derivative. The controller
/// consumes the analytic rate directly, never a numerical difference.
struct DesiredTrajectory {
    std::function<Vec(double)> value;
    std::function<Vec(double)> rate;
};

// Model catalog, keyed by name. The two-state four-parameter benchmark
// system ("benchmark_system") is registered by default.
const PlantModel& find_model(const std::string& name);
void register_model(PlantModel model);
std::vector<std::string> model_names();

// Benchmark desired trajectory: 10(1 - e^{-0.1t}) [sin 2t, 0.4 cos 3t]^T.
DesiredTrajectory benchmark_trajectory();

}  // namespace icl
