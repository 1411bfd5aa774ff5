#include "fspike/neuron.hpp"

#include "fspike/special.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fspike {

void NeuronParams::validate() const {
    if (!(tau_alpha > 0.0) || !std::isfinite(tau_alpha))
        throw std::invalid_argument("tau_alpha must be positive and finite");
    if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
    if (!(resistance > 0.0) || !std::isfinite(resistance))
        throw std::invalid_argument("membrane resistance must be positive and finite");
    surrogate.validate();
}

void generate_spikes(std::span<const double> u, double theta, std::span<double> out) {
    if (u.size() != out.size()) throw std::invalid_argument("generate_spikes: dimension mismatch");
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = spike(u[i], theta);
}

std::vector<double> generate_spikes(std::span<const double> u, double theta) {
    std::vector<double> out(u.size());
    generate_spikes(u, theta, out);
    return out;
}

void membrane_rhs(const NeuronParams& p, std::span<const double> u, std::span<const double> current,
                  std::span<const double> spikes, std::span<double> out) {
    const std::size_t d = u.size();
    if (current.size() != d || spikes.size() != d || out.size() != d)
        throw std::invalid_argument("membrane_rhs: dimension mismatch");
    const double inv_tau = 1.0 / p.tau_alpha;
    const bool leak = p.model == NeuronModel::lif;
    const bool soft = p.reset == ResetMode::soft_subtract;
    for (std::size_t i = 0; i < d; ++i) {
        double v = p.resistance * current[i];
        if (leak) v -= u[i];
        if (soft && spikes[i] != 0.0) v -= spikes[i] * p.theta;
        out[i] = v * inv_tau;
    }
}

double steady_state_voltage(const NeuronParams& p, double current) {
    return p.resistance * current;
}

Trajectory relaxation_curve(const NeuronParams& p, double current, double u0, const TimeGrid& grid) {
    Trajectory traj(grid, 1);
    const double target = steady_state_voltage(p, current);
    const double a = p.alpha.value();
    for (int k = 0; k <= grid.steps(); ++k) {
        const double t = grid.at(k) - grid.start();
        const double ml = t == 0.0 ? 1.0 : mittag_leffler(p.alpha, -std::pow(t, a) / p.tau_alpha);
        const double u = target + (u0 - target) * ml;
        traj.value(k)[0] = u;
        traj.rhs(k)[0] = (target - u) / p.tau_alpha;
    }
    return traj;
}

NeuronRun simulate_neuron(const NeuronParams& p, const std::function<double(double)>& current,
                          double u0, const TimeGrid& grid, const SolverOptions& opts) {
    p.validate();
    const auto rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
        const double i_in = current(t);
        const double s = spike(y[0], p.theta);
        membrane_rhs(p, y, std::span<const double>(&i_in, 1), std::span<const double>(&s, 1), dy);
    };
    // With hard reset the spike is read from the pre-projection potential.
    std::vector<double> hard_spikes;
    ProjectionFn project;
    if (p.reset == ResetMode::hard_zero) {
        project = [&](int k, std::span<double> y) {
            if (spike(y[0], p.theta) != 0.0) {
                hard_spikes.push_back(grid.at(k));
                y[0] = 0.0;
            }
        };
    }
    const double y0[1] = {u0};
    NeuronRun run{solve_caputo_forward(rhs, y0, grid, p.alpha, opts, project), {}};
    if (p.reset == ResetMode::hard_zero) {
        run.spike_times = std::move(hard_spikes);
    } else {
        for (int k = 0; k <= grid.steps(); ++k)
            if (spike(run.membrane.value(k)[0], p.theta) != 0.0) run.spike_times.push_back(grid.at(k));
    }
    return run;
}

std::string_view to_string(ResetMode mode) {
    return mode == ResetMode::soft_subtract ? "soft_subtract" : "hard_zero";
}

std::string_view to_string(NeuronModel model) { return model == NeuronModel::lif ? "lif" : "if"; }

ResetMode parse_reset_mode(std::string_view name) {
    if (name == "soft_subtract" || name == "soft") return ResetMode::soft_subtract;
    if (name == "hard_zero" || name == "hard") return ResetMode::hard_zero;
    throw std::invalid_argument("unknown reset mode '" + std::string(name) + "'");
}

NeuronModel parse_neuron_model(std::string_view name) {
    if (name == "lif") return NeuronModel::lif;
    if (name == "if" || name == "if_") return NeuronModel::if_;
    throw std::invalid_argument("unknown neuron model '" + std::string(name) + "'");
}

} // namespace fspike
