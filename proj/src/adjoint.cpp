#include "fspike/adjoint.hpp"

#include "fspike/error.hpp"
#include "fspike/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fspike {

GradientSet GradientSet::zeros_like(const NetworkSpec& spec) {
    GradientSet g;
    g.dW.reserve(spec.layers.size());
    for (const auto& l : spec.layers) g.dW.emplace_back(l.out_dim(), l.in_dim());
    return g;
}

bool GradientSet::all_finite() const {
    for (const auto& m : dW)
        for (double v : m.values())
            if (!std::isfinite(v)) return false;
    return true;
}

void GradientSet::set_zero() {
    for (auto& m : dW) std::fill(m.values().begin(), m.values().end(), 0.0);
}

void GradientSet::add(const GradientSet& other) {
    if (other.dW.size() != dW.size()) throw std::invalid_argument("GradientSet::add: layer count");
    for (std::size_t l = 0; l < dW.size(); ++l) {
        if (!dW[l].same_shape(other.dW[l])) throw std::invalid_argument("GradientSet::add: shape");
        auto dst = dW[l].values();
        auto src = other.dW[l].values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
}

void adjoint_rhs_at(const NetworkSpec& spec, const SampleState& forward, int k,
                    std::span<const double> lambda, std::span<double> out) {
    const std::size_t dim = spec.state_dim();
    if (lambda.size() != dim || out.size() != dim)
        throw std::invalid_argument("adjoint_rhs: adjoint vector has wrong size");
    if (k < 0 || k > forward.grid().steps() || forward.trajectory().dim() != dim)
        throw std::logic_error("adjoint_rhs: forward state missing at grid point " + std::to_string(k));

    thread_local std::vector<double> surrogate;
    thread_local std::vector<double> upstream;
    const std::size_t n_layers = spec.layers.size();
    const auto lambda_s = lambda.subspan(spec.s_sum_offset(), spec.output_dim());

    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto& layer = spec.layers[l];
        const auto& p = layer.neuron;
        const std::size_t n = layer.out_dim();
        const std::size_t off = spec.membrane_offset(l);
        const auto u = forward.membrane(spec, l, k);
        const auto lam = lambda.subspan(off, n);
        auto o = out.subspan(off, n);

        surrogate.resize(n);
        for (std::size_t i = 0; i < n; ++i) surrogate[i] = surrogate_grad(p.surrogate, u[i] - p.theta);

        // Gradient reaching S_l from downstream: layer l+1's input, or S_sum.
        upstream.assign(n, 0.0);
        if (l + 1 < n_layers) {
            const auto& next = spec.layers[l + 1];
            const auto lam_next = lambda.subspan(spec.membrane_offset(l + 1), next.out_dim());
            kernels::matvec_transpose_accumulate(upstream, next.weight.values(), lam_next);
            const double scale = next.neuron.resistance / next.neuron.tau_alpha;
            for (double& v : upstream) v *= scale;
        } else {
            std::copy(lambda_s.begin(), lambda_s.end(), upstream.begin());
        }

        const double leak = p.model == NeuronModel::lif ? 1.0 : 0.0;
        const bool soft = p.reset == ResetMode::soft_subtract;
        for (std::size_t i = 0; i < n; ++i) {
            double self = leak;
            if (soft && surrogate[i] != 0.0) self += p.theta * surrogate[i];
            double v = -self / p.tau_alpha * lam[i];
            if (surrogate[i] != 0.0) v += surrogate[i] * upstream[i];
            o[i] = v;
        }
    }
    auto o_s = out.subspan(spec.s_sum_offset(), spec.output_dim());
    std::fill(o_s.begin(), o_s.end(), 0.0);
}

void adjoint_rhs(const NetworkSpec& spec, const SampleState& forward, double t,
                 std::span<const double> lambda, std::span<double> out) {
    adjoint_rhs_at(spec, forward, forward.grid().nearest_index(t), lambda, out);
}

std::vector<double> terminal_condition(const NetworkSpec& spec, std::span<const double> loss_grad,
                                       TerminalSlot slot) {
    if (loss_grad.size() != spec.output_dim())
        throw std::invalid_argument("loss gradient has size " + std::to_string(loss_grad.size()) +
                                    ", expected " + std::to_string(spec.output_dim()));
    std::vector<double> terminal(spec.state_dim(), 0.0);
    const std::size_t off = slot == TerminalSlot::s_sum ? spec.s_sum_offset()
                                                        : spec.membrane_offset(spec.layers.size() - 1);
    std::copy(loss_grad.begin(), loss_grad.end(), terminal.begin() + off);
    return terminal;
}

AdjointTrajectory backward_accumulate(const NetworkSpec& spec, const SampleState& forward,
                                      std::span<const double> loss_grad, const TimeGrid& grid,
                                      const SolverOptions& opts, const BackwardOptions& bopts,
                                      GradientSet& grads) {
    if (!(grid == forward.grid()))
        throw std::invalid_argument("backward: grid differs from the forward pass grid");
    for (const auto& l : spec.layers)
        if (l.neuron.reset == ResetMode::hard_zero)
            throw std::invalid_argument("backward: hard_zero reset has no adjoint; use soft_subtract");
    if (grads.dW.size() != spec.layers.size())
        throw std::invalid_argument("backward: gradient set does not match the network");

    const auto terminal = terminal_condition(spec, loss_grad, bopts.terminal);
    const double weight = bopts.scheme == AdjointScheme::discrete
                              ? adjoint_quadrature_weight(grid.step(), spec.alpha)
                              : grid.step();

    std::size_t widest = 0;
    for (const auto& l : spec.layers) widest = std::max(widest, l.in_dim());
    Buffer x = make_buffer(widest, AllocCategory::scratch);

    // dW_l += weight * (R_l / tau_l) lambda_{U_l}(t_k) X_l(t_k)^T
    const auto accumulate = [&](int k, std::span<const double> lambda) {
        for (std::size_t l = 0; l < spec.layers.size(); ++l) {
            const auto& layer = spec.layers[l];
            const auto lam = lambda.subspan(spec.membrane_offset(l), layer.out_dim());
            auto xl = std::span<double>(x).first(layer.in_dim());
            forward.layer_input(spec, l, k, xl);
            kernels::outer_accumulate(grads.dW[l].values(),
                                      weight * layer.neuron.resistance / layer.neuron.tau_alpha, lam, xl);
        }
    };

    if (bopts.scheme == AdjointScheme::discrete) {
        const auto vjp = [&](int k, std::span<const double> v, std::span<double> out) {
            adjoint_rhs_at(spec, forward, k, v, out);
            accumulate(k, v);
        };
        AdjointTrajectory result{solve_caputo_adjoint(vjp, terminal, grid, spec.alpha, opts)};
        if (!grads.all_finite()) throw DivergenceError(0, -1, "backward: non-finite gradient");
        return result;
    }

    const auto rhs = [&](double t, std::span<const double> lam, std::span<double> out) {
        adjoint_rhs(spec, forward, t, lam, out);
    };
    AdjointTrajectory result{solve_caputo_backward(rhs, terminal, grid, spec.alpha, opts)};
    for (int k = 0; k < grid.steps(); ++k) accumulate(k, result.lambda.value(k));
    if (!grads.all_finite()) throw DivergenceError(0, -1, "backward: non-finite gradient");
    return result;
}

GradientSet backward(const NetworkSpec& spec, const SampleState& forward,
                     std::span<const double> loss_grad, const TimeGrid& grid,
                     const SolverOptions& opts, const BackwardOptions& bopts) {
    auto grads = GradientSet::zeros_like(spec);
    backward_accumulate(spec, forward, loss_grad, grid, opts, bopts, grads);
    return grads;
}

} // namespace fspike
