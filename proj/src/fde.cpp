#include "fspike/fde.hpp"

#include "fspike/error.hpp"
#include "fspike/kernels.hpp"
#include "fspike/special.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fspike {

TimeGrid::TimeGrid(double a, double b, int steps) : a_(a), b_(b), n_(steps) {
    if (steps < 1) throw std::invalid_argument("TimeGrid: number of steps must be >= 1");
    if (!std::isfinite(a) || !std::isfinite(b) || !(b > a))
        throw std::invalid_argument("TimeGrid: need finite a < b");
    h_ = (b - a) / steps;
    if (!(h_ > 0.0)) throw std::invalid_argument("TimeGrid: step size underflows");
}

TimeGrid TimeGrid::with_step(double a, double h, int steps) {
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("TimeGrid: step must be > 0");
    TimeGrid g(a, a + h * steps, steps);
    g.h_ = h;
    return g;
}

int TimeGrid::nearest_index(double t) const noexcept {
    const double k = std::round((t - a_) / h_);
    if (!(k > 0.0)) return 0;
    if (k >= n_) return n_;
    return static_cast<int>(k);
}

FractionalOrder::FractionalOrder(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("fractional order must lie in (0, 1], got " +
                                    std::to_string(alpha));
}

void SolverOptions::validate(const TimeGrid& grid, FractionalOrder alpha) const {
    if (method == Method::euler && !alpha.is_integer())
        throw std::invalid_argument("euler solver requires alpha = 1");
    if (memory_window) {
        if (method == Method::euler)
            throw std::invalid_argument("memory_window applies to the abm_predictor only");
        if (*memory_window < 1 || *memory_window > grid.steps())
            throw std::invalid_argument("memory_window must satisfy 1 <= K <= N");
    }
}

Trajectory::Trajectory(TimeGrid grid, std::size_t dim)
    : grid_(grid), dim_(dim),
      values_(make_buffer(grid.points() * dim, AllocCategory::trajectory)),
      rhs_(make_buffer(grid.points() * dim, AllocCategory::trajectory)) {}

double abm_weight(int k, int j, double h, FractionalOrder alpha) {
    if (j >= k) throw std::invalid_argument("abm_weight: need j < k");
    if (j < 0) throw std::invalid_argument("abm_weight: need j >= 0");
    if (!(h > 0.0)) throw std::invalid_argument("abm_weight: need h > 0");
    const double a = alpha.value();
    const double m = static_cast<double>(k - j);
    return std::pow(h, a) / a * (std::pow(m, a) - std::pow(m - 1.0, a));
}

std::vector<double> predictor_weights(int steps, double h, FractionalOrder alpha) {
    std::vector<double> c(static_cast<std::size_t>(steps) + 1, 0.0);
    const double a = alpha.value();
    if (alpha.is_integer()) {
        std::fill(c.begin() + 1, c.end(), h);
        return c;
    }
    const double scale = std::pow(h, a) / (a * gamma_fn(a));
    for (int m = 1; m <= steps; ++m)
        c[m] = scale * (std::pow(static_cast<double>(m), a) - std::pow(m - 1.0, a));
    return c;
}

double adjoint_quadrature_weight(double h, FractionalOrder alpha) {
    if (alpha.is_integer()) return h;
    return std::pow(h, alpha.value()) / gamma_fn(alpha.value() + 1.0);
}

namespace {

void check_finite(std::span<const double> v, int step, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x))
            throw DivergenceError(step, -1,
                                  std::string(what) + ": non-finite value at step " +
                                      std::to_string(step));
    }
}

} // namespace

Trajectory solve_caputo_forward(const RhsFn& rhs, std::span<const double> y0,
                                const TimeGrid& grid, FractionalOrder alpha,
                                const SolverOptions& opts, const ProjectionFn& project) {
    opts.validate(grid, alpha);
    const int n = grid.steps();
    const std::size_t d = y0.size();
    Trajectory traj(grid, d);
    Buffer jump = make_buffer(d, AllocCategory::scratch);
    Buffer raw = make_buffer(d, AllocCategory::scratch);

    const auto finish_state = [&](int k) {
        auto y = traj.value(k);
        if (project) {
            std::copy(y.begin(), y.end(), raw.begin());
            project(k, y);
            for (std::size_t i = 0; i < d; ++i) jump[i] += y[i] - raw[i];
        }
        // rhs sees the state first so it can report a more specific location.
        rhs(grid.at(k), y, traj.rhs(k));
        check_finite(y, k, "state");
        check_finite(traj.rhs(k), k, "right-hand side");
    };

    std::copy(y0.begin(), y0.end(), traj.value(0).begin());
    finish_state(0);

    if (opts.method == Method::euler) {
        const double h = grid.step();
        for (int k = 1; k <= n; ++k) {
            auto prev = traj.value(k - 1);
            auto f = traj.rhs(k - 1);
            auto y = traj.value(k);
            for (std::size_t i = 0; i < d; ++i) y[i] = prev[i] + h * f[i];
            finish_state(k);
        }
        return traj;
    }

    const auto c = predictor_weights(n, grid.step(), alpha);
    for (int k = 1; k <= n; ++k) {
        const int lo = opts.memory_window ? std::max(0, k - *opts.memory_window) : 0;
        auto y = traj.value(k);
        for (std::size_t i = 0; i < d; ++i) y[i] = y0[i] + jump[i];
        kernels::history_sum(y, c, traj.rhs_values(), k, lo, k - 1);
        finish_state(k);
    }
    return traj;
}

Trajectory solve_caputo_backward(const RhsFn& rhs, std::span<const double> lambda_b,
                                 const TimeGrid& grid, FractionalOrder alpha,
                                 const SolverOptions& opts) {
    opts.validate(grid, alpha);
    const int n = grid.steps();
    const std::size_t d = lambda_b.size();
    Trajectory traj(grid, d);

    const auto finish_state = [&](int k) {
        check_finite(traj.value(k), k, "adjoint state");
        rhs(grid.at(k), traj.value(k), traj.rhs(k));
        check_finite(traj.rhs(k), k, "adjoint right-hand side");
    };

    std::copy(lambda_b.begin(), lambda_b.end(), traj.value(n).begin());
    finish_state(n);

    if (opts.method == Method::euler) {
        const double h = grid.step();
        for (int k = n - 1; k >= 0; --k) {
            auto next = traj.value(k + 1);
            auto g = traj.rhs(k + 1);
            auto lam = traj.value(k);
            for (std::size_t i = 0; i < d; ++i) lam[i] = next[i] + h * g[i];
            finish_state(k);
        }
        return traj;
    }

    const auto c = predictor_weights(n, grid.step(), alpha);
    for (int k = n - 1; k >= 0; --k) {
        const int hi = opts.memory_window ? std::min(n, k + *opts.memory_window) : n;
        auto lam = traj.value(k);
        std::copy(lambda_b.begin(), lambda_b.end(), lam.begin());
        kernels::history_sum(lam, c, traj.rhs_values(), k, k + 1, hi);
        finish_state(k);
    }
    return traj;
}

Trajectory solve_caputo_adjoint(const VjpFn& vjp, std::span<const double> terminal,
                                const TimeGrid& grid, FractionalOrder alpha,
                                const SolverOptions& opts) {
    opts.validate(grid, alpha);
    const int n = grid.steps();
    const std::size_t d = terminal.size();
    Trajectory traj(grid, d);

    const auto finish_state = [&](int k) {
        check_finite(traj.value(k), k, "adjoint state");
        vjp(k, traj.value(k), traj.rhs(k));
        check_finite(traj.rhs(k), k, "adjoint right-hand side");
    };

    // g_N stays zero: f(t_N, y_N) is stored but never feeds y_0..y_N.
    std::copy(terminal.begin(), terminal.end(), traj.value(n).begin());

    if (opts.method == Method::euler) {
        const double h = grid.step();
        std::copy(terminal.begin(), terminal.end(), traj.value(n - 1).begin());
        finish_state(n - 1);
        for (int k = n - 2; k >= 0; --k) {
            auto next = traj.value(k + 1);
            auto g = traj.rhs(k + 1);
            auto lam = traj.value(k);
            for (std::size_t i = 0; i < d; ++i) lam[i] = next[i] + h * g[i];
            finish_state(k);
        }
        return traj;
    }

    const auto c = predictor_weights(n, grid.step(), alpha);
    for (int k = n - 1; k >= 0; --k) {
        const int window = opts.memory_window ? *opts.memory_window : n;
        const double terminal_weight = (n - k <= window) ? c[n - k] / c[1] : 0.0;
        auto lam = traj.value(k);
        for (std::size_t i = 0; i < d; ++i) lam[i] = terminal_weight * terminal[i];
        const int hi = std::min(n - 1, k + window);
        if (hi >= k + 1) kernels::history_sum(lam, c, traj.rhs_values(), k, k + 1, hi);
        finish_state(k);
    }
    return traj;
}

} // namespace fspike
