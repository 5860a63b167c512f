#pragma once

#include <optional>

#include "icl/gains.hpp"
#include "icl/memory.hpp"
#include "icl/model.hpp"
#include "icl/types.hpp"

namespace icl {

/// Tracking controller u = xd_dot - Y(x,t) theta_hat - K (x - xd).
Vec control_input(const Vec& x_meas, double t, const Vec& theta_hat,
                  const DesiredTrajectory& traj, const Gains& gains,
                  const PlantModel& model);

/// Gradient part of the update law: Gamma * Y^T * e.
Vec gradient_term(const Mat& Y, const Vec& e, const Gains& gains);

/// Integral concurrent-learning correction:
///   k_cl * Gamma * sum_i Y_i^T (dx_i - U_i - Y_i theta_hat)
/// where the stack entries carry window integrals. Empty stack gives zero.
Vec icl_term(const HistoryStack& stack, const Vec& theta_hat, const Gains& gains);

/// Derivative-based baseline correction:
///   k_cl * Gamma * sum_i Y_i^T (xdot_i - u_i - Y_i theta_hat)
/// with pointwise regressors and state-derivative estimates in the stack.
Vec dcl_term(const HistoryStack& stack, const Vec& theta_hat, const Gains& gains);

/// Central difference of the moving-average (boxcar) filtered state at
/// t_query. Requires the buffer to be uniformly sampled and to span the
/// filter window plus one step on each side of the query; returns nullopt
/// when it does not.
std::optional<Vec> estimate_state_derivative(const IntegrationBuffer& buffer,
                                             double filter_window, double t_query);

}  // namespace icl
