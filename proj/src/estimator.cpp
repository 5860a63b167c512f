#include "icl/estimator.hpp"

#include <cmath>
#include <stdexcept>

namespace icl {

Vec control_input(const Vec& x_meas, double t, const Vec& theta_hat,
                  const DesiredTrajectory& traj, const Gains& gains,
                  const PlantModel& model) {
    const Mat Y = model.eval_regressor(x_meas, t);
    const Vec e = x_meas - traj.value(t);
    return traj.rate(t) - Y * theta_hat - gains.K() * e;
}

Vec gradient_term(const Mat& Y, const Vec& e, const Gains& gains) {
    if (Y.rows() != e.size() || Y.cols() != gains.Gamma().rows()) {
        throw std::invalid_argument("gradient_term: dimension mismatch");
    }
    return gains.Gamma() * (Y.transpose() * e);
}

namespace {

// Shared form of both concurrent-learning corrections; the two update laws
// differ only in what the stack entries hold.
Vec cl_correction(const HistoryStack& stack, const Vec& theta_hat, const Gains& gains) {
    Vec acc = Vec::Zero(theta_hat.size());
    for (const StackEntry& entry : stack.entries()) {
        acc.noalias() += entry.Y.transpose() * (entry.dx - entry.u - entry.Y * theta_hat);
    }
    return gains.k_cl() * (gains.Gamma() * acc);
}

}  // namespace

Vec icl_term(const HistoryStack& stack, const Vec& theta_hat, const Gains& gains) {
    return cl_correction(stack, theta_hat, gains);
}

Vec dcl_term(const HistoryStack& stack, const Vec& theta_hat, const Gains& gains) {
    return cl_correction(stack, theta_hat, gains);
}

std::optional<Vec> estimate_state_derivative(const IntegrationBuffer& buffer,
                                             double filter_window, double t_query) {
    const auto& s = buffer.samples();
    if (s.size() < 3) return std::nullopt;
    const double h = s[1].t - s[0].t;
    const auto iq = static_cast<std::ptrdiff_t>(std::llround((t_query - s[0].t) / h));
    if (iq < 0 || iq >= static_cast<std::ptrdiff_t>(s.size())) return std::nullopt;
    if (std::abs(s[iq].t - t_query) > 0.25 * h) return std::nullopt;

    const auto half = static_cast<std::ptrdiff_t>(std::llround(filter_window / (2.0 * h)));
    const std::ptrdiff_t lo = iq - 1 - half;
    const std::ptrdiff_t hi = iq + 1 + half;
    if (lo < 0 || hi >= static_cast<std::ptrdiff_t>(s.size())) return std::nullopt;

    const auto filtered = [&](std::ptrdiff_t center) {
        Vec acc = Vec::Zero(s[center].x.size());
        for (std::ptrdiff_t i = center - half; i <= center + half; ++i) acc += s[i].x;
        return Vec(acc / static_cast<double>(2 * half + 1));
    };
    const Vec ahead = filtered(iq + 1);
    const Vec behind = filtered(iq - 1);
    return Vec((ahead - behind) / (s[iq + 1].t - s[iq - 1].t));
}

}  // namespace icl
