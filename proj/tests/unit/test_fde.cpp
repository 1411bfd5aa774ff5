#include "fspike/error.hpp"
#include "fspike/fde.hpp"
#include "fspike/special.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

using namespace fspike;

namespace {

const RhsFn decay = [](double, std::span<const double> y, std::span<double> dy) {
    for (std::size_t i = 0; i < y.size(); ++i) dy[i] = -y[i];
};

double max_error_vs_ml(double a, int n) {
    const FractionalOrder alpha(a);
    const TimeGrid grid(0.0, 1.0, n);
    const double y0[] = {1.0};
    const auto traj = solve_caputo_forward(decay, y0, grid, alpha);
    double err = 0.0;
    for (int k = 0; k <= n; ++k)
        err = std::max(err, std::abs(traj.value(k)[0] - mittag_leffler(alpha, -std::pow(grid.at(k), a))));
    return err;
}

} // namespace

TEST_CASE("time grid") {
    const TimeGrid g(0.0, 1.0, 3);
    CHECK(g.step() == doctest::Approx(1.0 / 3.0));
    CHECK(g.at(3) == 1.0);
    for (int k = 0; k < 3; ++k) CHECK(g.at(k) < g.at(k + 1));
    CHECK(g.nearest_index(0.34) == 1);
    CHECK(g.nearest_index(-5.0) == 0);
    CHECK(g.nearest_index(7.0) == 3);
    CHECK_THROWS_AS(TimeGrid(0.0, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid(1.0, 1.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(FractionalOrder(0.0), std::invalid_argument);
    CHECK_THROWS_AS(FractionalOrder(1.2), std::invalid_argument);
    CHECK_NOTHROW(FractionalOrder(1.0));
}

TEST_CASE("ABM weights") {
    for (int k = 1; k < 6; ++k) CHECK(abm_weight(k, k - 1, 1.0, FractionalOrder(1.0)) == 1.0);
    CHECK(abm_weight(5, 4, 1.0, FractionalOrder(0.5)) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(abm_weight(5, 3, 1.0, FractionalOrder(0.5)) ==
          doctest::Approx(2.0 * (std::sqrt(2.0) - 1.0)).epsilon(1e-15));
    CHECK(abm_weight(5, 3, 1.0, FractionalOrder(0.5)) == doctest::Approx(0.828427).epsilon(1e-6));
    CHECK_THROWS_AS(abm_weight(3, 3, 1.0, FractionalOrder(0.5)), std::invalid_argument);
    CHECK_THROWS_AS(abm_weight(2, 5, 1.0, FractionalOrder(0.5)), std::invalid_argument);

    for (double a : {0.3, 0.7, 1.0}) {
        const FractionalOrder alpha(a);
        const double h = 0.01;
        for (int k : {1, 7, 100}) {
            double sum = 0.0;
            double prev = std::numeric_limits<double>::infinity();
            for (int j = k - 1; j >= 0; --j) {
                const double w = abm_weight(k, j, h, alpha);
                CHECK(w > 0.0);
                if (a < 1.0) CHECK(w < prev);
                prev = w;
                sum += w;
            }
            CHECK(sum == doctest::Approx(std::pow(h, a) * std::pow(k, a) / a).epsilon(1e-12));
        }
    }
}

TEST_CASE("predictor weights normalise by gamma") {
    const FractionalOrder alpha(0.6);
    const auto c = predictor_weights(10, 0.1, alpha);
    REQUIRE(c.size() == 11);
    CHECK(c[0] == 0.0);
    for (int m = 1; m <= 10; ++m)
        CHECK(c[m] == doctest::Approx(abm_weight(10, 10 - m, 0.1, alpha) / gamma_fn(0.6)).epsilon(1e-13));
    const auto c1 = predictor_weights(4, 0.25, FractionalOrder(1.0));
    for (int m = 1; m <= 4; ++m) CHECK(c1[m] == 0.25);
    CHECK(adjoint_quadrature_weight(0.1, alpha) == doctest::Approx(c[1]).epsilon(1e-13));
}

TEST_CASE("zero dynamics keep the initial value") {
    const RhsFn zero = [](double, std::span<const double>, std::span<double> dy) {
        std::fill(dy.begin(), dy.end(), 0.0);
    };
    const TimeGrid grid(0.0, 2.0, 50);
    const double y0[] = {3.5, -1.0};
    const auto f = solve_caputo_forward(zero, y0, grid, FractionalOrder(0.4));
    const auto b = solve_caputo_backward(zero, y0, grid, FractionalOrder(0.4));
    for (int k = 0; k <= 50; ++k) {
        CHECK(f.value(k)[0] == 3.5);
        CHECK(f.value(k)[1] == -1.0);
        CHECK(b.value(k)[0] == 3.5);
        CHECK(b.value(k)[1] == -1.0);
    }
    CHECK(f.size() == 51);
    CHECK(f.rhs_values().size() == 102);
}

TEST_CASE("integer order decay matches the exponential") {
    const TimeGrid grid(0.0, 1.0, 1000);
    const double y0[] = {1.0};
    const auto traj = solve_caputo_forward(decay, y0, grid, FractionalOrder(1.0));
    CHECK(std::abs(traj.value(1000)[0] - std::exp(-1.0)) < 1e-3);
    const auto back = solve_caputo_backward(decay, y0, grid, FractionalOrder(1.0));
    CHECK(std::abs(back.value(0)[0] - std::exp(-1.0)) < 1e-3);
}

TEST_CASE("ABM equals Euler at alpha = 1") {
    const RhsFn f = [](double t, std::span<const double> y, std::span<double> dy) {
        dy[0] = -0.5 * y[0] + std::sin(3.0 * t) * y[1];
        dy[1] = y[0] * y[0] - y[1];
    };
    const TimeGrid grid(0.0, 3.0, 300);
    const double y0[] = {0.3, -0.8};
    SolverOptions euler;
    euler.method = Method::euler;
    const auto a = solve_caputo_forward(f, y0, grid, FractionalOrder(1.0));
    const auto e = solve_caputo_forward(f, y0, grid, FractionalOrder(1.0), euler);
    for (int k = 0; k <= 300; ++k)
        for (int i = 0; i < 2; ++i) CHECK(std::abs(a.value(k)[i] - e.value(k)[i]) < 1e-12);
}

TEST_CASE("fractional decay converges to the Mittag-Leffler solution") {
    for (double a : {0.4, 0.6, 0.8, 1.0}) {
        double prev = std::numeric_limits<double>::infinity();
        for (int n : {125, 250, 500, 1000}) {
            const double err = max_error_vs_ml(a, n);
            INFO("alpha = " << a << ", N = " << n << ", err = " << err);
            CHECK(err < prev);
            prev = err;
        }
        CHECK(prev < 5e-3);
    }
}

TEST_CASE("backward solve mirrors the forward solve") {
    const FractionalOrder alpha(0.6);
    const TimeGrid grid(0.0, 1.0, 400);
    const double one[] = {1.0};
    const auto fwd = solve_caputo_forward(decay, one, grid, alpha);
    const auto back = solve_caputo_backward(decay, one, grid, alpha);
    for (int k = 0; k <= 400; ++k) CHECK(back.value(k)[0] == doctest::Approx(fwd.value(400 - k)[0]).epsilon(1e-12));
    CHECK(std::abs(back.value(0)[0] - mittag_leffler(alpha, -1.0)) < 5e-3);
}

TEST_CASE("short memory window") {
    const FractionalOrder alpha(0.5);
    const TimeGrid grid(0.0, 1.0, 40);
    const double y0[] = {1.0};
    SolverOptions full_window;
    full_window.memory_window = 40;
    const auto full = solve_caputo_forward(decay, y0, grid, alpha);
    const auto same = solve_caputo_forward(decay, y0, grid, alpha, full_window);
    for (int k = 0; k <= 40; ++k) CHECK(full.value(k)[0] == same.value(k)[0]);

    // Hand-rolled truncated sum over j in [max(0, k - K), k - 1].
    const int K = 5;
    SolverOptions opts;
    opts.memory_window = K;
    const auto cut = solve_caputo_forward(decay, y0, grid, alpha, opts);
    std::vector<double> y(41), f(41);
    y[0] = 1.0;
    f[0] = -1.0;
    for (int k = 1; k <= 40; ++k) {
        double s = 0.0;
        for (int j = std::max(0, k - K); j < k; ++j) s += abm_weight(k, j, grid.step(), alpha) * f[j];
        y[k] = 1.0 + s / std::tgamma(0.5);
        f[k] = -y[k];
    }
    for (int k = 0; k <= 40; ++k) CHECK(cut.value(k)[0] == doctest::Approx(y[k]).epsilon(1e-12));
    CHECK(cut.value(40)[0] != full.value(40)[0]);
}

TEST_CASE("solver option validation") {
    const TimeGrid grid(0.0, 1.0, 10);
    SolverOptions euler;
    euler.method = Method::euler;
    CHECK_THROWS_AS(euler.validate(grid, FractionalOrder(0.9)), std::invalid_argument);
    CHECK_NOTHROW(euler.validate(grid, FractionalOrder(1.0)));
    SolverOptions w;
    w.memory_window = 0;
    CHECK_THROWS_AS(w.validate(grid, FractionalOrder(0.5)), std::invalid_argument);
    w.memory_window = 11;
    CHECK_THROWS_AS(w.validate(grid, FractionalOrder(0.5)), std::invalid_argument);
    w.memory_window = 10;
    CHECK_NOTHROW(w.validate(grid, FractionalOrder(0.5)));
}

TEST_CASE("divergence reports the step") {
    const RhsFn blowup = [](double t, std::span<const double>, std::span<double> dy) {
        dy[0] = t > 0.5 ? std::numeric_limits<double>::infinity() : 1.0;
    };
    const TimeGrid grid(0.0, 1.0, 10);
    const double y0[] = {0.0};
    try {
        solve_caputo_forward(blowup, y0, grid, FractionalOrder(0.7));
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.step() == 6);
        CHECK(e.kind() == ErrorKind::numerical);
    }
}

TEST_CASE("discrete adjoint is the transpose of the predictor") {
    // y' = -p y with L = y_N; dL/dp = sum_k c_1 lambda_k (-y_k).
    for (double a : {1.0, 0.7, 0.35}) {
        const FractionalOrder alpha(a);
        const TimeGrid grid(0.0, 2.0, 64);
        const double y0[] = {1.3};
        auto run = [&](double p) {
            const RhsFn f = [p](double, std::span<const double> y, std::span<double> dy) { dy[0] = -p * y[0]; };
            return solve_caputo_forward(f, y0, grid, alpha);
        };
        const double p = 0.9;
        const auto traj = run(p);
        const double terminal[] = {1.0};
        const VjpFn vjp = [p](int, std::span<const double> v, std::span<double> out) { out[0] = -p * v[0]; };
        const auto lam = solve_caputo_adjoint(vjp, terminal, grid, alpha);
        CHECK(lam.value(64)[0] == 1.0);
        double grad = 0.0;
        for (int k = 0; k < 64; ++k) grad += adjoint_quadrature_weight(grid.step(), alpha) * lam.value(k)[0] * -traj.value(k)[0];
        const double eps = 1e-6;
        const double fd = (run(p + eps).value(64)[0] - run(p - eps).value(64)[0]) / (2 * eps);
        INFO("alpha = " << a);
        CHECK(grad == doctest::Approx(fd).epsilon(1e-7));
    }
}
