#include "fspike/network.hpp"

#include "fspike/error.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace fspike {

void NetworkSpec::validate() const {
    if (layers.empty()) throw std::invalid_argument("network needs at least one layer");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        if (layer.out_dim() == 0 || layer.in_dim() == 0)
            throw std::invalid_argument("layer " + std::to_string(l) + " has an empty weight matrix");
        if (l > 0 && layer.in_dim() != layers[l - 1].out_dim())
            throw std::invalid_argument("layer " + std::to_string(l) + " input dim " +
                                        std::to_string(layer.in_dim()) +
                                        " does not match previous output dim " +
                                        std::to_string(layers[l - 1].out_dim()));
        if (!(layer.neuron.alpha == alpha))
            throw std::invalid_argument("layer " + std::to_string(l) +
                                        " fractional order differs from the network's");
        layer.neuron.validate();
        for (double w : layer.weight.values())
            if (!std::isfinite(w))
                throw std::invalid_argument("layer " + std::to_string(l) + " has non-finite weights");
    }
}

std::size_t NetworkSpec::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size();
    return n;
}

std::size_t NetworkSpec::state_dim() const { return s_sum_offset() + output_dim(); }

std::size_t NetworkSpec::membrane_offset(std::size_t layer) const {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l) off += layers[l].out_dim();
    return off;
}

std::size_t NetworkSpec::s_sum_offset() const { return membrane_offset(layers.size()); }

NetworkSpec make_network(std::span<const std::size_t> dims, const NeuronParams& neuron,
                         FractionalOrder alpha, std::uint64_t seed, double gain) {
    if (dims.size() < 2) throw std::invalid_argument("make_network: need input and output dims");
    NetworkSpec spec;
    spec.alpha = alpha;
    std::mt19937_64 rng(seed);
    for (std::size_t l = 1; l < dims.size(); ++l) {
        LayerSpec layer{Matrix(dims[l], dims[l - 1]), neuron};
        layer.neuron.alpha = alpha;
        const double bound = gain / std::sqrt(static_cast<double>(dims[l - 1]));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& w : layer.weight.values()) w = dist(rng);
        spec.layers.push_back(std::move(layer));
    }
    spec.validate();
    return spec;
}

double spike_value(SpikeMode mode, const NeuronParams& p, double u) {
    if (mode == SpikeMode::smooth) return surrogate_primitive(p.surrogate, u - p.theta);
    return spike(u, p.theta);
}

SampleInput::SampleInput(std::span<const double> data, int frames, std::size_t features,
                         std::size_t stride)
    : data_(data), frames_(frames), features_(features), stride_(stride) {
    if (frames < 1) throw std::invalid_argument("SampleInput: need at least one frame");
    if (data.size() < (static_cast<std::size_t>(frames) - 1) * stride + features)
        throw std::invalid_argument("SampleInput: data span too short for the frame layout");
}

int input_frame_index(const TimeGrid& grid, int frames, int k) {
    const int n = grid.steps();
    if (frames == n) return std::min(k, n - 1);
    if (frames == n + 1) return k;
    throw std::invalid_argument("input has " + std::to_string(frames) + " frames; grid with " +
                                std::to_string(n) + " steps needs " + std::to_string(n) + " or " +
                                std::to_string(n + 1));
}

InputTensor::InputTensor(int frames, int batch, std::size_t features)
    : frames_(frames), batch_(batch), features_(features),
      data_(static_cast<std::size_t>(frames) * batch * features, 0.0) {
    if (frames < 1 || batch < 1) throw std::invalid_argument("InputTensor: need frames, batch >= 1");
}

SampleInput InputTensor::sample(int b) const {
    const std::size_t start = static_cast<std::size_t>(b) * features_;
    return SampleInput(std::span<const double>(data_).subspan(start), frames_, features_,
                       static_cast<std::size_t>(batch_) * features_);
}

namespace {

// Work arrays reused across right-hand-side evaluations of one sample.
struct DynamicsScratch {
    std::vector<double> spikes_prev;
    std::vector<double> spikes_cur;
    std::vector<double> current;
};

void concat_dynamics_impl(const NetworkSpec& spec, std::span<const double> state,
                          std::span<const double> input, std::span<double> out,
                          DynamicsScratch& scratch, int step) {
    if (state.size() != spec.state_dim() || out.size() != state.size())
        throw std::invalid_argument("concat_dynamics: packed state has size " +
                                    std::to_string(state.size()) + ", expected " +
                                    std::to_string(spec.state_dim()));
    if (input.size() != spec.input_dim())
        throw std::invalid_argument("concat_dynamics: input has size " + std::to_string(input.size()) +
                                    ", expected " + std::to_string(spec.input_dim()));
    std::size_t off = 0;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const auto& layer = spec.layers[l];
        const std::size_t n = layer.out_dim();
        const auto u = state.subspan(off, n);
        for (double v : u)
            if (!std::isfinite(v))
                throw DivergenceError(step, static_cast<int>(l),
                                      "membrane potential of layer " + std::to_string(l) +
                                          " is non-finite at step " + std::to_string(step));

        scratch.spikes_cur.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            scratch.spikes_cur[i] = spike_value(spec.spike_mode, layer.neuron, u[i]);

        scratch.current.assign(n, 0.0);
        const std::span<const double> x = l == 0 ? input : std::span<const double>(scratch.spikes_prev);
        kernels::matvec_accumulate(scratch.current, layer.weight.values(), x);
        const auto du = out.subspan(off, n);
        membrane_rhs(layer.neuron, u, scratch.current, scratch.spikes_cur, du);
        for (double v : du)
            if (!std::isfinite(v))
                throw DivergenceError(step, static_cast<int>(l),
                                      "membrane derivative of layer " + std::to_string(l) +
                                          " is non-finite at step " + std::to_string(step));

        std::swap(scratch.spikes_prev, scratch.spikes_cur);
        off += n;
    }
    // spikes_prev now holds S_L.
    std::copy(scratch.spikes_prev.begin(), scratch.spikes_prev.end(), out.begin() + off);
}

} // namespace

void concat_dynamics(const NetworkSpec& spec, std::span<const double> state,
                     std::span<const double> input, std::span<double> out) {
    DynamicsScratch scratch;
    concat_dynamics_impl(spec, state, input, out, scratch, -1);
}

void concat_dynamics(const NetworkSpec& spec, double t, std::span<const double> state,
                     const std::function<std::span<const double>(double)>& input_fn,
                     std::span<double> out) {
    concat_dynamics(spec, state, input_fn(t), out);
}

std::span<const double> SampleState::membrane(const NetworkSpec& spec, std::size_t layer, int k) const {
    return traj_.value(k).subspan(spec.membrane_offset(layer), spec.layers[layer].out_dim());
}

std::span<const double> SampleState::s_sum(const NetworkSpec& spec, int k) const {
    return traj_.value(k).subspan(spec.s_sum_offset(), spec.output_dim());
}

void SampleState::spikes(const NetworkSpec& spec, std::size_t layer, int k, std::span<double> out) const {
    const auto u = membrane(spec, layer, k);
    const auto& p = spec.layers[layer].neuron;
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = spike_value(spec.spike_mode, p, u[i]);
}

void SampleState::layer_input(const NetworkSpec& spec, std::size_t layer, int k,
                              std::span<double> out) const {
    if (layer == 0) {
        const auto frame = input_.frame(input_frame_index(grid(), input_.frames(), k));
        std::copy(frame.begin(), frame.end(), out.begin());
    } else {
        spikes(spec, layer - 1, k, out);
    }
}

std::vector<double> SampleState::spike_totals(const NetworkSpec& spec) const {
    std::vector<double> totals(spec.layers.size(), 0.0);
    std::vector<double> s;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        s.resize(spec.layers[l].out_dim());
        for (int k = 0; k < grid().steps(); ++k) {
            spikes(spec, l, k, s);
            for (double v : s) totals[l] += v;
        }
    }
    return totals;
}

SampleState forward_sample(const NetworkSpec& spec, const SampleInput& input, const TimeGrid& grid,
                           const SolverOptions& opts) {
    if (input.features() != spec.input_dim())
        throw std::invalid_argument("forward: input features " + std::to_string(input.features()) +
                                    " do not match network input dim " +
                                    std::to_string(spec.input_dim()));
    input_frame_index(grid, input.frames(), 0); // validates the frame count

    DynamicsScratch scratch;
    const auto rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
        const int k = grid.nearest_index(t);
        const auto x = input.frame(input_frame_index(grid, input.frames(), k));
        concat_dynamics_impl(spec, y, x, dy, scratch, k);
    };

    bool any_hard = false;
    for (const auto& l : spec.layers) any_hard |= l.neuron.reset == ResetMode::hard_zero;
    ProjectionFn project;
    if (any_hard) {
        project = [&spec](int, std::span<double> y) {
            std::size_t off = 0;
            for (const auto& layer : spec.layers) {
                if (layer.neuron.reset == ResetMode::hard_zero)
                    for (std::size_t i = 0; i < layer.out_dim(); ++i)
                        if (spike(y[off + i], layer.neuron.theta) != 0.0) y[off + i] = 0.0;
                off += layer.out_dim();
            }
        };
    }

    std::vector<double> y0(spec.state_dim(), 0.0);
    return SampleState(solve_caputo_forward(rhs, y0, grid, spec.alpha, opts, project), input);
}

NetworkState forward(const NetworkSpec& spec, const InputTensor& input, const TimeGrid& grid,
                     const SolverOptions& opts, kernels::Exec exec) {
    spec.validate();
    std::vector<std::optional<SampleState>> slots(static_cast<std::size_t>(input.batch()));
    kernels::for_each_index(exec, input.batch(), [&](int b) {
        slots[b].emplace(forward_sample(spec, input.sample(b), grid, opts));
    });
    NetworkState state;
    state.samples.reserve(slots.size());
    for (auto& s : slots) state.samples.push_back(std::move(*s));
    return state;
}

std::size_t predict_class(std::span<const double> counts) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < counts.size(); ++i)
        if (counts[i] > counts[best]) best = i;
    return best;
}

} // namespace fspike
