#include <doctest.h>

#include <cmath>
#include <random>

#include "icl/gains.hpp"
#include "icl/memory.hpp"

using icl::HistoryStack;
using icl::IntegrationBuffer;
using icl::Mat;
using icl::StackEntry;
using icl::Vec;
using icl::WindowSample;

namespace {

WindowSample make_sample(double t, const Vec& x, const Mat& Y, const Vec& u) {
    return {t, x, Y, u};
}

}  // namespace

TEST_CASE("buffer ordering and eviction") {
    IntegrationBuffer buf(0.5);
    buf.push(make_sample(0.0, Vec::Zero(2), Mat::Zero(2, 4), Vec::Zero(2)));
    CHECK(buf.samples().size() == 1);

    CHECK_THROWS_AS(buf.push(make_sample(0.0, Vec::Zero(2), Mat::Zero(2, 4), Vec::Zero(2))),
                    std::invalid_argument);

    const double h = 0.0004;
    for (int k = 1; k <= 5000; ++k) {
        buf.push(make_sample(k * h, Vec::Zero(2), Mat::Zero(2, 4), Vec::Zero(2)));
    }
    // Capacity tracks delta_t / h plus the trailing slack, never more.
    CHECK(buf.samples().size() <= 1250 + 5);
    CHECK(buf.samples().size() >= 1250);
}

TEST_CASE("window integrals") {
    const int n = 2, m = 4;
    const double dt = 0.5, h = 0.01;

    SUBCASE("piecewise-zero branch is bitwise zero") {
        IntegrationBuffer buf(dt);
        for (int k = 0; k <= 25; ++k) {
            const double t = k * h;
            buf.push(make_sample(t, Vec((Vec(2) << t, -t).finished()),
                                 Mat::Constant(n, m, 1.0), Vec::Ones(n)));
        }
        const auto wi = icl::window_integrals(buf, 0.25);
        REQUIRE(wi.has_value());
        CHECK(wi->script_Y.isZero(0.0));
        CHECK(wi->script_U.isZero(0.0));
        CHECK(wi->x_lag(0) == 0.0);   // x(0)
        CHECK(wi->x_now(0) == 0.25);
    }

    SUBCASE("constant input integrates exactly") {
        IntegrationBuffer buf(dt);
        const Vec c = (Vec(2) << 2.0, -3.0).finished();
        double t_now = 0.0;
        for (int k = 0; k <= 100; ++k) {
            t_now = k * h;
            buf.push(make_sample(t_now, Vec::Zero(n), Mat::Zero(n, m), c));
        }
        const auto wi = icl::window_integrals(buf, t_now);
        REQUIRE(wi.has_value());
        CHECK((wi->script_U - c * dt).norm() < 1e-14);
    }

    SUBCASE("linear integrand is exact, including off-grid window start") {
        // h does not divide dt: the window start falls between samples.
        const double h2 = 0.003;
        IntegrationBuffer buf(dt);
        double t_now = 0.0;
        for (int k = 0; k <= 300; ++k) {
            t_now = k * h2;
            buf.push(make_sample(t_now, Vec((Vec(2) << t_now, 1.0).finished()),
                                 Mat::Constant(n, m, t_now), Vec::Zero(n)));
        }
        const auto wi = icl::window_integrals(buf, t_now);
        REQUIRE(wi.has_value());
        const double exact = 0.5 * (t_now * t_now - (t_now - dt) * (t_now - dt));
        CHECK(std::abs(wi->script_Y(0, 0) - exact) < 1e-12);
        CHECK(std::abs(wi->x_lag(0) - (t_now - dt)) < 1e-12);
    }

    SUBCASE("step averages override the trapezoid when provided") {
        // Quadratic integrand: Y(t) = t^2. The exact interval average is
        // (b^3 - a^3) / (3h); with it supplied, the integral is exact where
        // the trapezoid alone would carry an O(h^2) error.
        IntegrationBuffer buf(dt);
        double t_now = 0.0;
        for (int k = 0; k <= 100; ++k) {
            t_now = k * h;
            const double a = (k - 1) * h;
            const Mat Ybar =
                k == 0 ? Mat()
                       : Mat(Mat::Constant(n, m, (t_now * t_now * t_now - a * a * a) /
                                                     (3.0 * h)));
            buf.push({t_now, Vec::Zero(n), Mat::Constant(n, m, t_now * t_now),
                      Vec::Zero(n), Ybar});
        }
        const auto wi = icl::window_integrals(buf, t_now);
        REQUIRE(wi.has_value());
        const double lo = t_now - dt;
        const double exact = (t_now * t_now * t_now - lo * lo * lo) / 3.0;
        CHECK(std::abs(wi->script_Y(0, 0) - exact) < 1e-12);
    }

    SUBCASE("not ready when the window is uncovered") {
        IntegrationBuffer buf(dt);
        // Start sampling late so the buffer cannot reach t_now - dt.
        for (int k = 0; k <= 10; ++k) {
            buf.push(make_sample(1.0 + k * h, Vec::Zero(n), Mat::Zero(n, m), Vec::Zero(n)));
        }
        CHECK_FALSE(icl::window_integrals(buf, 1.0 + 10 * h).has_value());
    }
}

TEST_CASE("history stack recording policy") {
    SUBCASE("accepts until full") {
        HistoryStack stack(2, 4);
        const StackEntry e{1.0, Mat::Identity(4, 4).topRows(2), Vec::Zero(2), Vec::Zero(2)};
        CHECK(stack.try_record(e));
        CHECK(stack.size() == 1);
    }

    SUBCASE("duplicate of an existing entry cannot improve lambda_min") {
        HistoryStack stack(2, 2);
        Mat Y(1, 2);
        Y << 1.0, 0.5;
        const StackEntry e{1.0, Y, Vec::Zero(1), Vec::Zero(1)};
        CHECK(stack.try_record(e));
        CHECK(stack.try_record({2.0, Y, Vec::Zero(1), Vec::Zero(1)}));
        CHECK_FALSE(stack.try_record({3.0, Y, Vec::Zero(1), Vec::Zero(1)}));
    }

    SUBCASE("rank-completing candidate replaces a redundant entry") {
        HistoryStack stack(2, 2);
        Mat Ya(1, 2), Yb(1, 2);
        Ya << 1.0, 0.0;
        Yb << 0.0, 1.0;
        stack.try_record({1.0, Ya, Vec::Zero(1), Vec::Zero(1)});
        stack.try_record({2.0, Ya, Vec::Zero(1), Vec::Zero(1)});
        CHECK(stack.lambda_min() == doctest::Approx(0.0));
        CHECK(stack.try_record({3.0, Yb, Vec::Zero(1), Vec::Zero(1)}));
        CHECK(stack.lambda_min() == doctest::Approx(1.0));
    }
}

TEST_CASE("excitation metric") {
    HistoryStack stack(4, 3);
    CHECK(stack.lambda_min() == 0.0);
    stack.try_record({1.0, Mat::Identity(3, 3), Vec::Zero(3), Vec::Zero(3)});
    CHECK(stack.lambda_min() == doctest::Approx(1.0));
    stack.try_record({2.0, Mat::Identity(3, 3), Vec::Zero(3), Vec::Zero(3)});
    CHECK(stack.lambda_min() == doctest::Approx(2.0));
}

TEST_CASE("gram cache and monotonicity over random recording sequences") {
    std::mt19937 rng(42);
    std::normal_distribution<double> gauss;
    std::uniform_int_distribution<int> mdist(1, 4);
    std::uniform_int_distribution<int> ndist(1, 3);
    std::uniform_int_distribution<int> capdist(1, 20);

    for (int rep = 0; rep < 20; ++rep) {
        const int m = mdist(rng);
        const int n = ndist(rng);
        HistoryStack stack(static_cast<std::size_t>(capdist(rng)), m);
        double prev_lambda = 0.0;
        for (int step = 0; step < 40; ++step) {
            Mat Y(n, m);
            for (int i = 0; i < Y.size(); ++i) Y.data()[i] = gauss(rng);
            stack.try_record({double(step), Y, Vec(Vec::Zero(n)), Vec(Vec::Zero(n))});

            // Cache equals brute-force recomputation.
            Mat brute = Mat::Zero(m, m);
            for (const StackEntry& e : stack.entries()) brute += e.Y.transpose() * e.Y;
            const double scale = std::max(1.0, brute.cwiseAbs().maxCoeff());
            CHECK((stack.gram() - brute).cwiseAbs().maxCoeff() <= 1e-10 * scale);

            // Gram stays symmetric PSD and lambda_min never decreases.
            CHECK((stack.gram() - stack.gram().transpose()).cwiseAbs().maxCoeff() <=
                  1e-12 * scale);
            CHECK(stack.lambda_min() >= -1e-12 * scale);
            CHECK(stack.lambda_min() >= prev_lambda - 1e-10 * scale);
            prev_lambda = stack.lambda_min();
        }
    }
}
