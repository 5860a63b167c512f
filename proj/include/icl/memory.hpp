#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "icl/types.hpp"

namespace icl {

/// One buffered measurement: time, measured state, regressor evaluated at
/// the measured state, and the applied control. Ybar, when provided, is the
/// integrator's stage-weighted average regressor over the step ending at t;
/// it makes the window quadrature agree with the discrete flow instead of
/// carrying the O(h^2) node-rule error.
struct WindowSample {
    double t = 0.0;
    Vec x;
    Mat Y;
    Vec u;
    Mat Ybar;  // empty when no step average is available
};

/// Sliding buffer of samples over the last delta_t seconds (plus a small
/// trailing slack for interpolation and central differences).
class IntegrationBuffer {
public:
    explicit IntegrationBuffer(double span);

    // Appends a sample. Time must be strictly increasing.
    void push(WindowSample sample);

    const std::deque<WindowSample>& samples() const { return samples_; }
    double span() const { return span_; }

    // Sample whose time is within half a step of t, or nullptr.
    const WindowSample* sample_at(double t) const;

private:
    std::deque<WindowSample> samples_;
    double span_;
};

struct WindowIntegrals {
    Mat script_Y;  // integral of Y over [t - delta_t, t]
    Vec script_U;  // integral of u over the same window
    Vec x_now;
    Vec x_lag;     // x(t - delta_t); linearly interpolated off-grid
};

/// Window integrals at the buffer's latest time. For t_now <= span the
/// piecewise definition applies and exact zeros are returned with
/// x_lag = x(0). Returns nullopt when the buffer does not cover the window.
std::optional<WindowIntegrals> window_integrals(const IntegrationBuffer& buffer,
                                                double t_now);

/// One recorded data tuple. For the integral formulation Y is the window
/// integral of the regressor, dx = x(t_i) - x(t_i - delta_t) and u the
/// window integral of the control. The derivative baseline reuses the same
/// layout with Y the pointwise regressor, dx the state-derivative estimate
/// and u the pointwise control.
struct StackEntry {
    double t = 0.0;
    Mat Y;
    Vec dx;
    Vec u;
};

/// Fixed-capacity history stack with a cached gram matrix sum_i Y_i^T Y_i.
/// Replacement is lambda_min-greedy: a full stack accepts a candidate only
/// when the best single replacement improves lambda_min by a relative
/// margin, so lambda_min is non-decreasing over the stack's lifetime.
class HistoryStack {
public:
    HistoryStack(std::size_t capacity, int m, double eps_rec = 0.01);

    bool try_record(StackEntry candidate);

    double lambda_min() const { return lambda_min_; }
    const Mat& gram() const { return gram_; }
    const std::vector<StackEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }

private:
    void refresh();  // recompute gram and lambda_min from entries

    std::size_t capacity_;
    double eps_rec_;
    std::vector<StackEntry> entries_;
    Mat gram_;
    double lambda_min_ = 0.0;
};

}  // namespace icl
