#include "icl/memory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "icl/gains.hpp"

namespace icl {

IntegrationBuffer::IntegrationBuffer(double span) : span_(span) {
    if (!(span > 0.0)) {
        throw std::invalid_argument("IntegrationBuffer: span must be positive");
    }
}

void IntegrationBuffer::push(WindowSample sample) {
    if (!samples_.empty() && !(sample.t > samples_.back().t)) {
        throw std::invalid_argument("IntegrationBuffer: sample times must be strictly increasing");
    }
    samples_.push_back(std::move(sample));
    const double t_now = samples_.back().t;
    // Retain t >= t_now - span - 2h, h inferred from the leading spacing.
    while (samples_.size() > 2) {
        const double h = samples_[1].t - samples_[0].t;
        if (samples_.front().t >= t_now - span_ - 2.0 * h - 0.5 * h) break;
        samples_.pop_front();
    }
}

const WindowSample* IntegrationBuffer::sample_at(double t) const {
    if (samples_.size() < 2) {
        if (samples_.size() == 1 && samples_[0].t == t) return &samples_[0];
        return nullptr;
    }
    const double h = samples_[1].t - samples_[0].t;
    const auto idx = static_cast<std::ptrdiff_t>(std::llround((t - samples_[0].t) / h));
    if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(samples_.size())) return nullptr;
    if (std::abs(samples_[idx].t - t) > 0.25 * h) return nullptr;
    return &samples_[idx];
}

std::optional<WindowIntegrals> window_integrals(const IntegrationBuffer& buffer,
                                                double t_now) {
    const auto& s = buffer.samples();
    if (s.empty()) return std::nullopt;
    const WindowSample& latest = s.back();
    const auto n = latest.x.size();
    const auto m = latest.Y.cols();

    if (t_now <= buffer.span()) {
        // Piecewise branch: exact zeros, x_lag = x(0).
        WindowIntegrals out;
        out.script_Y = Mat::Zero(n, m);
        out.script_U = Vec::Zero(n);
        out.x_now = latest.x;
        out.x_lag = s.front().x;
        return out;
    }

    const double t0 = t_now - buffer.span();
    const double tol = 1e-9 * std::max(1.0, t_now);
    if (s.front().t > t0 + tol) return std::nullopt;  // window not covered

    // First index at or after the window start.
    std::size_t j = 0;
    while (j < s.size() && s[j].t < t0 - tol) ++j;
    if (j >= s.size()) return std::nullopt;

    WindowIntegrals out;
    out.script_Y = Mat::Zero(n, m);
    out.script_U = Vec::Zero(n);
    out.x_now = latest.x;

    // Full intervals integrate the regressor from the step-average samples
    // when present (exact against the discrete flow) and fall back to the
    // composite trapezoid rule otherwise. The control is zero-order held
    // between samples; the matching rectangle sum integrates it exactly.
    if (s[j].t > t0 + tol) {
        // Window start falls between samples j-1 and j: interpolate the
        // regressor and the lagged state, and account for the control held
        // at its sample-(j-1) value over the partial interval.
        const WindowSample& a = s[j - 1];
        const WindowSample& b = s[j];
        const double alpha = (t0 - a.t) / (b.t - a.t);
        const Mat Y0 = (1.0 - alpha) * a.Y + alpha * b.Y;
        out.x_lag = (1.0 - alpha) * a.x + alpha * b.x;
        out.script_Y += 0.5 * (b.t - t0) * (Y0 + b.Y);
        out.script_U += (b.t - t0) * a.u;
    } else {
        out.x_lag = s[j].x;
    }

    for (std::size_t i = j; i + 1 < s.size(); ++i) {
        const double dt_i = s[i + 1].t - s[i].t;
        if (s[i + 1].Ybar.size() != 0) {
            out.script_Y += dt_i * s[i + 1].Ybar;
        } else {
            out.script_Y += 0.5 * dt_i * (s[i].Y + s[i + 1].Y);
        }
        out.script_U += dt_i * s[i].u;
    }
    return out;
}

HistoryStack::HistoryStack(std::size_t capacity, int m, double eps_rec)
    : capacity_(capacity), eps_rec_(eps_rec), gram_(Mat::Zero(m, m)) {
    if (capacity == 0) {
        throw std::invalid_argument("HistoryStack: capacity must be positive");
    }
    entries_.reserve(capacity);
}

void HistoryStack::refresh() {
    gram_.setZero();
    for (const StackEntry& e : entries_) {
        gram_ += e.Y.transpose() * e.Y;
    }
    lambda_min_ = entries_.empty() ? 0.0 : min_eigenvalue(gram_);
}

bool HistoryStack::try_record(StackEntry candidate) {
    if (candidate.Y.cols() != gram_.cols()) {
        throw std::invalid_argument("HistoryStack: candidate dimension mismatch");
    }
    if (entries_.size() < capacity_) {
        entries_.push_back(std::move(candidate));
        refresh();
        return true;
    }
    // Full: find the replacement that maximizes lambda_min of the new gram.
    const Mat cand_gram = candidate.Y.transpose() * candidate.Y;
    double best = -1.0;
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const Mat g = gram_ - entries_[i].Y.transpose() * entries_[i].Y + cand_gram;
        const double lm = min_eigenvalue(g);
        if (lm > best) {
            best = lm;
            best_idx = i;
        }
    }
    if (best <= lambda_min_ * (1.0 + eps_rec_)) return false;
    entries_[best_idx] = std::move(candidate);
    refresh();
    // Guard against eigensolver jitter making the cache dip below the old value.
    lambda_min_ = std::max(lambda_min_, best);
    return true;
}

}  // namespace icl
