#pragma once

// Losses on output spike counts, SGD/Adam, the batched training loop,
// evaluation and the adjoint-vs-finite-difference gradient check.

#include "fspike/adjoint.hpp"
#include "fspike/data_io.hpp"
#include "fspike/network.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace fspike {

enum class LossKind { cross_entropy_on_counts, mse_on_counts };
enum class OptimizerKind { sgd, adam };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);
std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view name);

struct LossResult {
    double loss = 0.0;         // mean over the batch
    std::vector<double> grad;  // d loss / d counts, batch x classes
};

// counts is batch x classes. mse compares against one_hot * target_count.
LossResult loss_and_grad(LossKind kind, std::span<const double> counts, std::size_t classes,
                         std::span<const int> labels, double target_count = 1.0);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

class Optimizer {
public:
    Optimizer(const OptimizerConfig& cfg, const NetworkSpec& spec);
    void step(NetworkSpec& spec, const GradientSet& grads);
    long steps() const noexcept { return t_; }

private:
    OptimizerConfig cfg_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    long t_ = 0;
};

enum class Encoding { bernoulli, poisson, direct };

std::string_view to_string(Encoding e);
Encoding parse_encoding(std::string_view name);

struct TrainConfig {
    int epochs = 30;
    int batch_size = 32;
    OptimizerConfig optimizer{};
    LossKind loss = LossKind::cross_entropy_on_counts;
    std::optional<double> target_count; // mse target; defaults to T
    std::uint64_t seed = 0;
    int T = 8;
    double time_interval = 1.0;
    SolverOptions solver{};
    BackwardOptions backward{};
    Encoding encoding = Encoding::bernoulli;
    // Per-batch gradient partials; fixed so results do not depend on the
    // thread count.
    int grad_chunks = 8;
    kernels::Exec exec = kernels::Exec::parallel;

    void validate() const;
    TimeGrid grid() const { return TimeGrid::with_step(0.0, time_interval, T); }
    double mse_target() const { return target_count.value_or(static_cast<double>(T)); }
};

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    std::optional<double> test_accuracy;
    double seconds = 0.0;
    std::size_t peak_tracked_bytes = 0; // allocator high-water mark
    std::size_t peak_rss_bytes = 0;     // process VmHWM, 0 when unavailable
    std::vector<double> firing_rates;   // per layer, training forward passes
};

struct RunMetrics {
    std::vector<EpochMetrics> epochs;
};

// Called after each epoch; used for streaming metrics.
using EpochCallback = std::function<void(const EpochMetrics&)>;

// Builds the network input for samples [first, first + count) of `data`.
// `stream` separates encoding draws (epoch number while training).
InputTensor encode_batch(const Dataset& data, std::span<const std::size_t> indices, const TrainConfig& cfg,
                         std::uint64_t stream, const Corruption& corruption = {});

struct BatchResult {
    double loss = 0.0;
    std::size_t correct = 0;
    GradientSet grads;
    std::vector<double> spike_totals; // per layer, summed over the batch
};

// Forward, loss and adjoint backward over one batch. Gradients are reduced
// in a fixed order and are identical for serial and parallel execution.
BatchResult batch_gradient(const NetworkSpec& spec, const InputTensor& input, std::span<const int> labels,
                           const TrainConfig& cfg);

struct TrainResult {
    NetworkSpec spec;
    RunMetrics metrics;
};

TrainResult train_loop(NetworkSpec spec, const Dataset& train, const TrainConfig& cfg,
                       const Dataset* test = nullptr, const EpochCallback& on_epoch = {});

struct EvalResult {
    double accuracy = 0.0;
    double loss = 0.0;
    std::vector<std::size_t> confusion; // classes x classes, row = true label
    std::size_t classes = 0;
    std::vector<double> firing_rates;
};

// Encoding draws use a fixed evaluation stream, so repeated evaluations agree.
EvalResult evaluate(const NetworkSpec& spec, const Dataset& data, const TrainConfig& cfg,
                    const Corruption& corruption = {});

// Firing rates = spike totals / (T * neurons * samples).
std::vector<double> firing_rates(const NetworkSpec& spec, std::span<const double> totals, int T,
                                 std::size_t samples);

struct GradcheckReport {
    double max_rel_error = 0.0;
    double mean_rel_error = 0.0;
    std::size_t layer = 0;
    std::size_t row = 0;
    std::size_t col = 0;
    double adjoint_at_max = 0.0;
    double numeric_at_max = 0.0;
    std::size_t checked = 0;
};

// |a - b| / max(|a|, |b|, floor) with floor guarding entries where both
// gradients vanish.
double relative_error(double a, double b, double floor = 1e-8);

// Central differences over every weight with the network in smooth mode.
GradcheckReport gradcheck(const NetworkSpec& spec, const SampleInput& sample, int label,
                          const TrainConfig& cfg, double epsilon = 1e-4);

// Process peak resident set size in bytes, 0 when unavailable.
std::size_t peak_rss_bytes();

} // namespace fspike
