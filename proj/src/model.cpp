#include "icl/model.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace icl {

Mat PlantModel::eval_regressor(const Vec& x, double t) const {
    if (x.size() != n) {
        throw std::invalid_argument("eval_regressor: state has size " +
                                    std::to_string(x.size()) + ", expected " + std::to_string(n));
    }
    if (!x.allFinite() || !std::isfinite(t)) {
        throw std::domain_error("eval_regressor: non-finite input");
    }
    Mat Y = regressor(x, t);
    if (Y.rows() != n || Y.cols() != m) {
        throw std::logic_error("regressor returned wrong dimensions for model " + name);
    }
    return Y;
}

Vec PlantModel::eval_drift(const Vec& x, double t) const {
    return eval_regressor(x, t) * true_theta;
}

namespace {

PlantModel make_benchmark_system() {
    PlantModel model;
    model.n = 2;
    model.m = 4;
    model.name = "benchmark_system";
    model.true_theta = (Vec(4) << 5.0, 10.0, 15.0, 20.0).finished();
    model.regressor = [](const Vec& x, double t) {
        Mat Y(2, 4);
        Y << x(0) * x(0), std::sin(x(1)), 0.0, 0.0,
             0.0, x(1) * std::sin(t), x(0), x(0) * x(1);
        return Y;
    };
    return model;
}

std::map<std::string, PlantModel>& catalog() {
    static std::map<std::string, PlantModel> models = [] {
        std::map<std::string, PlantModel> c;
        PlantModel model = make_benchmark_system();
        c.emplace(model.name, std::move(model));
        return c;
    }();
    return models;
}

std::mutex& catalog_mutex() {
    static std::mutex mtx;
    return mtx;
}

}  // namespace

const PlantModel& find_model(const std::string& name) {
    std::lock_guard<std::mutex> lock(catalog_mutex());
    auto it = catalog().find(name);
    if (it == catalog().end()) {
        throw std::invalid_argument("unknown model: " + name);
    }
    return it->second;
}

void register_model(PlantModel model) {
    if (model.n <= 0 || model.m <= 0 || !model.regressor ||
        model.true_theta.size() != model.m) {
        throw std::invalid_argument("register_model: inconsistent model definition");
    }
    std::lock_guard<std::mutex> lock(catalog_mutex());
    catalog()[model.name] = std::move(model);
}

std::vector<std::string> model_names() {
    std::lock_guard<std::mutex> lock(catalog_mutex());
    std::vector<std::string> names;
    for (const auto& [k, v] : catalog()) names.push_back(k);
    return names;
}

DesiredTrajectory benchmark_trajectory() {
    DesiredTrajectory traj;
    traj.value = [](double t) {
        const double a = 10.0 * (1.0 - std::exp(-0.1 * t));
        return (Vec(2) << a * std::sin(2.0 * t), a * 0.4 * std::cos(3.0 * t)).finished();
    };
    traj.rate = [](double t) {
        const double a = 10.0 * (1.0 - std::exp(-0.1 * t));
        const double adot = std::exp(-0.1 * t);  // d/dt of 10(1 - e^{-0.1t})
        return (Vec(2) << adot * std::sin(2.0 * t) + a * 2.0 * std::cos(2.0 * t),
                          adot * 0.4 * std::cos(3.0 * t) - a * 1.2 * std::sin(3.0 * t))
            .finished();
    };
    return traj;
}

}  // namespace icl
