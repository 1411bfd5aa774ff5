#pragma once

// Numerical fractional calculus for Caputo systems of order alpha in (0, 1]:
// explicit ABM-predictor and Euler integrators for the left derivative, the
// time-mirrored integrator for the right derivative, and the exact transpose
// of the predictor used by reverse-mode sweeps.

#include "fspike/tracking.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace fspike {

// Uniform grid t_k = a + k h, k = 0..N.
class TimeGrid {
public:
    TimeGrid(double a, double b, int steps);
    static TimeGrid with_step(double a, double h, int steps);

    double start() const noexcept { return a_; }
    double end() const noexcept { return b_; }
    double step() const noexcept { return h_; }
    int steps() const noexcept { return n_; }
    std::size_t points() const noexcept { return static_cast<std::size_t>(n_) + 1; }

    double at(int k) const noexcept { return k == n_ ? b_ : a_ + k * h_; }
    // Grid index nearest to t, clamped to [0, N].
    int nearest_index(double t) const noexcept;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    double a_ = 0.0;
    double b_ = 1.0;
    int n_ = 1;
    double h_ = 1.0;
};

class FractionalOrder {
public:
    explicit FractionalOrder(double alpha);
    double value() const noexcept { return alpha_; }
    bool is_integer() const noexcept { return alpha_ == 1.0; }

    friend bool operator==(const FractionalOrder&, const FractionalOrder&) = default;

private:
    double alpha_;
};

enum class Method { abm_predictor, euler };

struct SolverOptions {
    Method method = Method::abm_predictor;
    // Short-memory window K: only the K most recent history terms are kept.
    std::optional<int> memory_window;

    void validate(const TimeGrid& grid, FractionalOrder alpha) const;
};

// State and stored right-hand side at every grid point, flattened row-major.
class Trajectory {
public:
    Trajectory(TimeGrid grid, std::size_t dim);

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return grid_.points(); }

    std::span<const double> value(int k) const { return {values_.data() + k * dim_, dim_}; }
    std::span<double> value(int k) { return {values_.data() + k * dim_, dim_}; }
    std::span<const double> rhs(int k) const { return {rhs_.data() + k * dim_, dim_}; }
    std::span<double> rhs(int k) { return {rhs_.data() + k * dim_, dim_}; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> rhs_values() const noexcept { return rhs_; }

private:
    TimeGrid grid_;
    std::size_t dim_;
    Buffer values_;
    Buffer rhs_;
};

// f(t, y) -> dy. Must fill all of dy.
using RhsFn = std::function<void(double t, std::span<const double> y, std::span<double> dy)>;

// Applied to y_k right after it is formed (hard reset, clamping, ...). The jump
// it introduces is carried into all later steps.
using ProjectionFn = std::function<void(int k, std::span<double> y)>;

// Vector-Jacobian product at grid point k: out = (df/dy (t_k, y_k))^T v.
using VjpFn = std::function<void(int k, std::span<const double> v, std::span<double> out)>;

// mu_{j,k} = (h^alpha / alpha) [(k - j)^alpha - (k - 1 - j)^alpha].
double abm_weight(int k, int j, double h, FractionalOrder alpha);

// Normalized predictor weights c_m = mu_{k-m,k} / Gamma(alpha), m = 1..N.
// Entry 0 is unused and set to zero.
std::vector<double> predictor_weights(int steps, double h, FractionalOrder alpha);

// Integrates ^C D^alpha_{a+} y = f(t, y), y(a) = y0.
Trajectory solve_caputo_forward(const RhsFn& rhs, std::span<const double> y0,
                                const TimeGrid& grid, FractionalOrder alpha,
                                const SolverOptions& opts = {}, const ProjectionFn& project = {});

// Integrates ^C D^alpha_{b-} lambda = g(t, lambda), lambda(b) = lambda_b, from b
// down to a with the predictor weights mirrored under t -> b - t.
Trajectory solve_caputo_backward(const RhsFn& rhs, std::span<const double> lambda_b,
                                 const TimeGrid& grid, FractionalOrder alpha,
                                 const SolverOptions& opts = {});

// Exact transpose of the forward predictor. Given the cotangent of the final
// state y_N, returns lambda with lambda[N] = terminal and, for k < N,
//
//   lambda[k] = (c_{N-k} / c_1) terminal + sum_{j=k+1}^{N-1} c_{j-k} g_j,
//   g_j = vjp(j, lambda[j]),
//
// so that c_1 * lambda[k] is the cotangent of the stored f(t_k, y_k). This is
// the mirrored scheme of solve_caputo_backward with the terminal value entering
// through the memory kernel; at alpha = 1 it is reverse-time Euler. rhs(k)
// holds g_k (zero at k = N, whose evaluation never feeds the forward solution).
Trajectory solve_caputo_adjoint(const VjpFn& vjp, std::span<const double> terminal,
                                const TimeGrid& grid, FractionalOrder alpha,
                                const SolverOptions& opts = {});

// Quadrature weight pairing lambda[k] from solve_caputo_adjoint with df/dparam
// at t_k: c_1 = h^alpha / Gamma(alpha + 1) (= h at alpha = 1).
double adjoint_quadrature_weight(double h, FractionalOrder alpha);

} // namespace fspike
