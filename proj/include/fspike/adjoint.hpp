#pragma once

// Gradients of a loss on S_sum(b) (or U_L(b)) with respect to every weight
// matrix, computed by integrating the adjoint system backward in time:
//
//   ^C D^alpha_{b-} lambda = (df/dy)^T lambda,     dL/dW = int lambda^T df/dW dt
//
// where f is the packed network dynamics and every dH/dU inside the Jacobian
// is replaced by the layer's surrogate gradient. Only one parameter-sized
// accumulator per layer exists during a backward pass; storage growing with
// the number of steps is limited to the adjoint trajectory.

#include "fspike/fde.hpp"
#include "fspike/matrix.hpp"
#include "fspike/network.hpp"

#include <span>
#include <vector>

namespace fspike {

struct GradientSet {
    std::vector<Matrix> dW;

    static GradientSet zeros_like(const NetworkSpec& spec);
    bool all_finite() const;
    void set_zero();
    // this += other, entry by entry.
    void add(const GradientSet& other);
};

enum class AdjointScheme {
    // Exact transpose of the forward predictor: the terminal value enters
    // through the memory kernel and lambda[k] pairs with df/dW at t_k. Agrees
    // with finite differences of the discrete forward pass.
    discrete,
    // Literal continuous adjoint: right-Caputo solve holding lambda(b) fixed,
    // then a left-rectangle quadrature with weight h.
    continuous,
};

enum class TerminalSlot { s_sum, membrane_last };

struct BackwardOptions {
    AdjointScheme scheme = AdjointScheme::discrete;
    TerminalSlot terminal = TerminalSlot::s_sum;
};

// Adjoint state over the grid in the forward packing [U_1..U_L, S_sum].
struct AdjointTrajectory {
    Trajectory lambda;
};

// (df/dy)^T lambda at the stored forward state nearest to t.
void adjoint_rhs(const NetworkSpec& spec, const SampleState& forward, double t,
                 std::span<const double> lambda, std::span<double> out);
// Same at grid point k.
void adjoint_rhs_at(const NetworkSpec& spec, const SampleState& forward, int k,
                    std::span<const double> lambda, std::span<double> out);

// Packed terminal condition (0, ..., 0, loss_grad) or, for membrane_last,
// loss_grad in the U_L slot.
std::vector<double> terminal_condition(const NetworkSpec& spec, std::span<const double> loss_grad,
                                       TerminalSlot slot);

// Accumulates dL/dW into `grads` (which must be shaped like spec).
AdjointTrajectory backward_accumulate(const NetworkSpec& spec, const SampleState& forward,
                                      std::span<const double> loss_grad, const TimeGrid& grid,
                                      const SolverOptions& opts, const BackwardOptions& bopts,
                                      GradientSet& grads);

GradientSet backward(const NetworkSpec& spec, const SampleState& forward,
                     std::span<const double> loss_grad, const TimeGrid& grid,
                     const SolverOptions& opts = {}, const BackwardOptions& bopts = {});

} // namespace fspike
