#pragma once

#include "fspike/fde.hpp"
#include "fspike/surrogate.hpp"

#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace fspike {

enum class ResetMode { soft_subtract, hard_zero };
enum class NeuronModel { lif, if_ };

struct NeuronParams {
    FractionalOrder alpha{1.0};
    double tau_alpha = 2.0;
    double resistance = 1.0;
    double theta = 1.0; // may be +infinity to disable firing
    ResetMode reset = ResetMode::soft_subtract;
    NeuronModel model = NeuronModel::lif;
    SurrogateSpec surrogate{};

    void validate() const;
};

// Heaviside with H(0) = 1: fires when u >= theta.
inline double spike(double u, double theta) { return u - theta >= 0.0 ? 1.0 : 0.0; }

// out[i] = H(u[i] - theta).
void generate_spikes(std::span<const double> u, double theta, std::span<double> out);
std::vector<double> generate_spikes(std::span<const double> u, double theta);

// dU for one population:
//   lif: (-U + R I - S theta) / tau
//   if_: (R I - S theta) / tau
// With hard_zero reset the -S theta term is omitted; the reset happens as a
// projection after each step (see simulate_neuron).
void membrane_rhs(const NeuronParams& p, std::span<const double> u, std::span<const double> current,
                  std::span<const double> spikes, std::span<double> out);

// Constant-current steady state R I (leaky model, no firing).
double steady_state_voltage(const NeuronParams& p, double current);

// Closed-form relaxation under constant current with firing disabled:
// U(t) = R I + (U0 - R I) E_alpha(-(t - a)^alpha / tau). rhs(k) holds the
// matching Caputo derivative (R I - U) / tau.
Trajectory relaxation_curve(const NeuronParams& p, double current, double u0, const TimeGrid& grid);

// Single-neuron simulation driven by current(t).
struct NeuronRun {
    Trajectory membrane;           // dim 1
    std::vector<double> spike_times; // grid times where U >= theta
};

NeuronRun simulate_neuron(const NeuronParams& p, const std::function<double(double)>& current,
                          double u0, const TimeGrid& grid, const SolverOptions& opts = {});

std::string_view to_string(ResetMode mode);
std::string_view to_string(NeuronModel model);
ResetMode parse_reset_mode(std::string_view name);
NeuronModel parse_neuron_model(std::string_view name);

} // namespace fspike
