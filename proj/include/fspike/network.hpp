#pragma once

// Dense multi-layer fractional spiking network. The coupled system
//
//   tau_l D^alpha U_l = -U_l + R W_l X_l - S_l theta_l,   l = 1..L
//   D^alpha S_sum     = S_L
//
// with X_1 the raw input and X_l = S_{l-1}, is integrated as one flat state
// packed as [U_1, ..., U_L, S_sum]. Spikes are algebraic functions of U and
// are recomputed wherever needed instead of being stored.

#include "fspike/fde.hpp"
#include "fspike/kernels.hpp"
#include "fspike/matrix.hpp"
#include "fspike/neuron.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace fspike {

// heaviside: production forward pass. smooth: spikes replaced by the
// surrogate's primitive so the forward map is differentiable (gradcheck).
enum class SpikeMode { heaviside, smooth };

struct LayerSpec {
    Matrix weight; // out x in
    NeuronParams neuron;

    std::size_t in_dim() const noexcept { return weight.cols(); }
    std::size_t out_dim() const noexcept { return weight.rows(); }
};

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    FractionalOrder alpha{1.0};
    SpikeMode spike_mode = SpikeMode::heaviside;

    void validate() const;

    std::size_t input_dim() const { return layers.front().in_dim(); }
    std::size_t output_dim() const { return layers.back().out_dim(); }
    std::size_t parameter_count() const;

    // Packed-state layout.
    std::size_t state_dim() const;
    std::size_t membrane_offset(std::size_t layer) const;
    std::size_t s_sum_offset() const;
};

// Layer stack with dims[0] inputs and one layer per following entry. Weights
// are drawn uniformly from [-1/sqrt(in), 1/sqrt(in)] and scaled by `gain`.
NetworkSpec make_network(std::span<const std::size_t> dims, const NeuronParams& neuron,
                         FractionalOrder alpha, std::uint64_t seed, double gain = 1.0);

// Spike value of one neuron in the given mode.
double spike_value(SpikeMode mode, const NeuronParams& p, double u);

// Input frames of one sample: frame(k) is features() values starting at
// data[k * stride].
class SampleInput {
public:
    SampleInput(std::span<const double> data, int frames, std::size_t features, std::size_t stride);
    static SampleInput contiguous(std::span<const double> data, int frames, std::size_t features) {
        return SampleInput(data, frames, features, features);
    }

    int frames() const noexcept { return frames_; }
    std::size_t features() const noexcept { return features_; }
    std::span<const double> frame(int k) const { return {data_.data() + k * stride_, features_}; }

private:
    std::span<const double> data_;
    int frames_;
    std::size_t features_;
    std::size_t stride_;
};

// Zero-order hold: frame k drives [t_k, t_{k+1}). Accepts N frames (the last
// one is also held at t_N) or N + 1 frames (one per grid point).
int input_frame_index(const TimeGrid& grid, int frames, int k);

// Real-valued input batch laid out T x batch x features.
class InputTensor {
public:
    InputTensor(int frames, int batch, std::size_t features);

    int frames() const noexcept { return frames_; }
    int batch() const noexcept { return batch_; }
    std::size_t features() const noexcept { return features_; }

    std::span<double> frame(int t, int b) { return {data_.data() + offset(t, b), features_}; }
    std::span<const double> frame(int t, int b) const {
        return {data_.data() + offset(t, b), features_};
    }
    SampleInput sample(int b) const;
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

private:
    std::size_t offset(int t, int b) const {
        return (static_cast<std::size_t>(t) * batch_ + b) * features_;
    }
    int frames_;
    int batch_;
    std::size_t features_;
    std::vector<double> data_;
};

// Packed derivative of the coupled system at one point. `input` is X_1(t).
void concat_dynamics(const NetworkSpec& spec, std::span<const double> state,
                     std::span<const double> input, std::span<double> out);
void concat_dynamics(const NetworkSpec& spec, double t, std::span<const double> state,
                     const std::function<std::span<const double>(double)>& input_fn,
                     std::span<double> out);

// Forward result for one sample: the packed trajectory plus its input.
class SampleState {
public:
    SampleState(Trajectory traj, SampleInput input) : traj_(std::move(traj)), input_(input) {}

    const Trajectory& trajectory() const noexcept { return traj_; }
    const TimeGrid& grid() const noexcept { return traj_.grid(); }
    const SampleInput& input() const noexcept { return input_; }

    std::span<const double> membrane(const NetworkSpec& spec, std::size_t layer, int k) const;
    std::span<const double> s_sum(const NetworkSpec& spec, int k) const;
    std::span<const double> counts(const NetworkSpec& spec) const {
        return s_sum(spec, grid().steps());
    }
    // S_out of `layer` at grid point k.
    void spikes(const NetworkSpec& spec, std::size_t layer, int k, std::span<double> out) const;
    // X_l(t_k): the input frame for layer 0, otherwise the previous layer's spikes.
    void layer_input(const NetworkSpec& spec, std::size_t layer, int k, std::span<double> out) const;
    // Sum of S_out over grid points 0..N-1, per layer.
    std::vector<double> spike_totals(const NetworkSpec& spec) const;

private:
    Trajectory traj_;
    SampleInput input_;
};

struct NetworkState {
    std::vector<SampleState> samples;
};

SampleState forward_sample(const NetworkSpec& spec, const SampleInput& input, const TimeGrid& grid,
                           const SolverOptions& opts = {});

NetworkState forward(const NetworkSpec& spec, const InputTensor& input, const TimeGrid& grid,
                     const SolverOptions& opts = {}, kernels::Exec exec = kernels::Exec::parallel);

// Index of the largest count; ties go to the lowest index.
std::size_t predict_class(std::span<const double> counts);

} // namespace fspike
