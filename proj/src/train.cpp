#include "fspike/train.hpp"

#include "fspike/error.hpp"
#include "fspike/kernels.hpp"
#include "fspike/tracking.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fspike {

namespace {

// Encoding stream used by evaluate(); training epochs use 1, 2, ...
constexpr std::uint64_t kEvalStream = 0x65766131ULL;

} // namespace

std::string_view to_string(LossKind kind) {
    return kind == LossKind::mse_on_counts ? "mse_on_counts" : "cross_entropy_on_counts";
}

LossKind parse_loss_kind(std::string_view name) {
    if (name == "cross_entropy_on_counts" || name == "cross_entropy") return LossKind::cross_entropy_on_counts;
    if (name == "mse_on_counts" || name == "mse") return LossKind::mse_on_counts;
    throw std::invalid_argument("unknown loss '" + std::string(name) +
                                "' (expected cross_entropy_on_counts or mse_on_counts)");
}

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer_kind(std::string_view name) {
    if (name == "sgd") return OptimizerKind::sgd;
    if (name == "adam") return OptimizerKind::adam;
    throw std::invalid_argument("unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

std::string_view to_string(Encoding e) {
    switch (e) {
    case Encoding::bernoulli: return "bernoulli";
    case Encoding::poisson: return "poisson";
    case Encoding::direct: return "direct";
    }
    return "bernoulli";
}

Encoding parse_encoding(std::string_view name) {
    for (auto e : {Encoding::bernoulli, Encoding::poisson, Encoding::direct})
        if (to_string(e) == name) return e;
    throw std::invalid_argument("unknown encoding '" + std::string(name) + "' (expected bernoulli, poisson or direct)");
}

LossResult loss_and_grad(LossKind kind, std::span<const double> counts, std::size_t classes,
                         std::span<const int> labels, double target_count) {
    if (classes == 0) throw std::invalid_argument("loss: zero classes");
    if (counts.size() != labels.size() * classes)
        throw std::invalid_argument("loss: counts hold " + std::to_string(counts.size()) + " values for " +
                                    std::to_string(labels.size()) + " labels x " + std::to_string(classes) +
                                    " classes");
    const std::size_t batch = labels.size();
    LossResult r;
    r.grad.assign(counts.size(), 0.0);
    if (batch == 0) return r;
    const double inv_b = 1.0 / static_cast<double>(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        const int y = labels[b];
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            throw std::invalid_argument("loss: label " + std::to_string(y) + " out of range [0, " +
                                        std::to_string(classes) + ")");
        const auto c = counts.subspan(b * classes, classes);
        auto g = std::span<double>(r.grad).subspan(b * classes, classes);
        if (kind == LossKind::cross_entropy_on_counts) {
            const double top = *std::max_element(c.begin(), c.end());
            double z = 0.0;
            for (double v : c) z += std::exp(v - top);
            const double log_z = top + std::log(z);
            r.loss += (log_z - c[y]) * inv_b;
            for (std::size_t i = 0; i < classes; ++i)
                g[i] = (std::exp(c[i] - log_z) - (static_cast<int>(i) == y ? 1.0 : 0.0)) * inv_b;
        } else {
            double sq = 0.0;
            for (std::size_t i = 0; i < classes; ++i) {
                const double d = c[i] - (static_cast<int>(i) == y ? target_count : 0.0);
                sq += d * d;
                g[i] = 2.0 * d / static_cast<double>(classes) * inv_b;
            }
            r.loss += sq / static_cast<double>(classes) * inv_b;
        }
    }
    return r;
}

void OptimizerConfig::validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("optimizer: learning rate must be >= 0");
    if (kind == OptimizerKind::adam) {
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
            throw std::invalid_argument("optimizer: betas must lie in [0, 1)");
        if (!(eps > 0.0)) throw std::invalid_argument("optimizer: eps must be > 0");
    }
}

Optimizer::Optimizer(const OptimizerConfig& cfg, const NetworkSpec& spec) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.kind == OptimizerKind::adam) {
        for (const auto& l : spec.layers) {
            m_.emplace_back(l.weight.size(), 0.0);
            v_.emplace_back(l.weight.size(), 0.0);
        }
    }
}

void Optimizer::step(NetworkSpec& spec, const GradientSet& grads) {
    if (grads.dW.size() != spec.layers.size()) throw std::invalid_argument("optimizer: gradient/layer mismatch");
    ++t_;
    if (cfg_.kind == OptimizerKind::sgd) {
        for (std::size_t l = 0; l < spec.layers.size(); ++l) {
            auto w = spec.layers[l].weight.values();
            auto g = grads.dW[l].values();
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg_.lr * g[i];
        }
        return;
    }
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        auto w = spec.layers[l].weight.values();
        auto g = grads.dW[l].values();
        auto& m = m_[l];
        auto& v = v_[l];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            w[i] -= cfg_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.eps);
        }
    }
}

void TrainConfig::validate() const {
    if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (T < 1) throw std::invalid_argument("train: T must be >= 1");
    if (!(time_interval > 0.0) || !std::isfinite(time_interval))
        throw std::invalid_argument("train: time_interval must be > 0");
    if (grad_chunks < 1) throw std::invalid_argument("train: grad_chunks must be >= 1");
    if (target_count && !std::isfinite(*target_count)) throw std::invalid_argument("train: bad target_count");
    optimizer.validate();
}

InputTensor encode_batch(const Dataset& data, std::span<const std::size_t> indices, const TrainConfig& cfg,
                         std::uint64_t stream, const Corruption& corruption) {
    const int batch = static_cast<int>(indices.size());
    const std::size_t f = data.feature_dim;
    InputTensor input(cfg.T, batch, f);
    const std::size_t stride = static_cast<std::size_t>(batch) * f;
    const std::uint64_t stream_seed = sample_seed(cfg.seed, stream);
    std::size_t clamped = 0;
    for (int b = 0; b < batch; ++b) {
        const std::size_t i = indices[b];
        const auto x = data.sample(i);
        auto dst = input.data().subspan(static_cast<std::size_t>(b) * f);
        if (cfg.encoding == Encoding::direct) {
            for (int t = 0; t < cfg.T; ++t) std::copy(x.begin(), x.end(), dst.begin() + t * stride);
        } else {
            clamped += encode_sample(x, cfg.T, sample_seed(stream_seed, i), dst, stride);
        }
        corrupt_sample(corruption, i, cfg.T, f, dst, stride);
    }
    if (clamped > 0) warn("encode: clamped " + std::to_string(clamped) + " intensities into [0, 1]");
    return input;
}

std::vector<double> firing_rates(const NetworkSpec& spec, std::span<const double> totals, int T,
                                 std::size_t samples) {
    std::vector<double> rates(spec.layers.size(), 0.0);
    if (samples == 0) return rates;
    for (std::size_t l = 0; l < spec.layers.size(); ++l)
        rates[l] = totals[l] / (static_cast<double>(T) * static_cast<double>(spec.layers[l].out_dim()) *
                                static_cast<double>(samples));
    return rates;
}

namespace {

// Output counts, batch x classes, for the labels' class range.
std::vector<double> gather_counts(const NetworkSpec& spec, const NetworkState& state, std::size_t classes) {
    std::vector<double> counts;
    counts.reserve(state.samples.size() * classes);
    for (const auto& s : state.samples) {
        const auto c = s.counts(spec);
        counts.insert(counts.end(), c.begin(), c.begin() + static_cast<std::ptrdiff_t>(classes));
    }
    return counts;
}

void check_dims(const NetworkSpec& spec, const Dataset& data) {
    data.validate();
    if (data.feature_dim != spec.input_dim())
        throw std::invalid_argument("dataset has " + std::to_string(data.feature_dim) +
                                    " features but the network expects " + std::to_string(spec.input_dim()));
    if (data.classes > spec.output_dim())
        throw std::invalid_argument("dataset has " + std::to_string(data.classes) + " classes but the network has " +
                                    std::to_string(spec.output_dim()) + " outputs");
}

void add_totals(std::vector<double>& acc, const std::vector<double>& part) {
    if (acc.empty()) acc.assign(part.size(), 0.0);
    for (std::size_t i = 0; i < part.size(); ++i) acc[i] += part[i];
}

} // namespace

BatchResult batch_gradient(const NetworkSpec& spec, const InputTensor& input, std::span<const int> labels,
                           const TrainConfig& cfg) {
    const int batch = input.batch();
    if (static_cast<std::size_t>(batch) != labels.size()) throw std::invalid_argument("batch: label count mismatch");
    const TimeGrid grid = cfg.grid();
    const std::size_t classes = spec.output_dim();

    const NetworkState state = forward(spec, input, grid, cfg.solver, cfg.exec);
    const auto counts = gather_counts(spec, state, classes);
    LossResult lr = loss_and_grad(cfg.loss, counts, classes, labels, cfg.mse_target());

    BatchResult out;
    out.loss = lr.loss;
    for (int b = 0; b < batch; ++b)
        if (predict_class(std::span(counts).subspan(b * classes, classes)) == static_cast<std::size_t>(labels[b]))
            ++out.correct;
    for (const auto& s : state.samples) add_totals(out.spike_totals, s.spike_totals(spec));

    if (!std::isfinite(lr.loss)) {
        out.grads = GradientSet::zeros_like(spec);
        return out;
    }

    const int chunks = std::min(cfg.grad_chunks, std::max(batch, 1));
    std::vector<GradientSet> partial(static_cast<std::size_t>(chunks));
    kernels::for_each_index(cfg.exec, chunks, [&](int c) {
        auto& g = partial[static_cast<std::size_t>(c)];
        g = GradientSet::zeros_like(spec);
        const int lo = c * batch / chunks;
        const int hi = (c + 1) * batch / chunks;
        for (int b = lo; b < hi; ++b)
            backward_accumulate(spec, state.samples[static_cast<std::size_t>(b)],
                                std::span<const double>(lr.grad).subspan(b * classes, classes), grid, cfg.solver,
                                cfg.backward, g);
    });
    out.grads = std::move(partial.front());
    for (std::size_t c = 1; c < partial.size(); ++c) out.grads.add(partial[c]);
    return out;
}

std::size_t peak_rss_bytes() {
    std::ifstream in("/proc/self/status");
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("VmHWM:", 0) == 0) {
            std::istringstream s(line.substr(6));
            std::size_t kb = 0;
            s >> kb;
            return kb * 1024;
        }
    }
    return 0;
}

TrainResult train_loop(NetworkSpec spec, const Dataset& train, const TrainConfig& cfg, const Dataset* test,
                       const EpochCallback& on_epoch) {
    cfg.validate();
    spec.validate();
    check_dims(spec, train);
    if (test) check_dims(spec, *test);

    Optimizer opt(cfg.optimizer, spec);
    RunMetrics metrics;
    std::vector<std::size_t> order(train.size());
    const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        reset_tracked_peak();
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 shuffle_rng(sample_seed(cfg.seed ^ 0x5348554646ULL, static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        std::vector<double> totals;
        std::vector<int> labels;
        for (std::size_t first = 0, batch_no = 0; first < order.size(); first += bs, ++batch_no) {
            const auto idx = std::span(order).subspan(first, std::min(bs, order.size() - first));
            labels.clear();
            for (std::size_t i : idx) labels.push_back(train.labels[i]);
            const InputTensor input = encode_batch(train, idx, cfg, static_cast<std::uint64_t>(epoch));
            BatchResult r = batch_gradient(spec, input, labels, cfg);
            if (!std::isfinite(r.loss) || !r.grads.all_finite())
                throw DivergenceError(static_cast<int>(batch_no), -1,
                                      "training diverged at epoch " + std::to_string(epoch) + ", batch " +
                                          std::to_string(batch_no) + " (non-finite loss or gradient)");
            loss_sum += r.loss * static_cast<double>(idx.size());
            correct += r.correct;
            add_totals(totals, r.spike_totals);
            opt.step(spec, r.grads);
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = loss_sum / static_cast<double>(train.size());
        m.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
        m.firing_rates = firing_rates(spec, totals, cfg.T, train.size());
        if (test) m.test_accuracy = evaluate(spec, *test, cfg).accuracy;
        m.peak_tracked_bytes = tracked_peak_bytes();
        m.peak_rss_bytes = peak_rss_bytes();
        m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        metrics.epochs.push_back(m);
        if (on_epoch) on_epoch(m);
    }
    return {std::move(spec), std::move(metrics)};
}

EvalResult evaluate(const NetworkSpec& spec, const Dataset& data, const TrainConfig& cfg,
                    const Corruption& corruption) {
    cfg.validate();
    spec.validate();
    check_dims(spec, data);
    const std::size_t classes = spec.output_dim();
    EvalResult r;
    r.classes = classes;
    r.confusion.assign(classes * classes, 0);
    const TimeGrid grid = cfg.grid();
    const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
    std::vector<std::size_t> idx;
    std::vector<int> labels;
    std::vector<double> totals;
    std::size_t correct = 0;
    double loss_sum = 0.0;
    for (std::size_t first = 0; first < data.size(); first += bs) {
        const std::size_t n = std::min(bs, data.size() - first);
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), first);
        labels.assign(data.labels.begin() + static_cast<std::ptrdiff_t>(first),
                      data.labels.begin() + static_cast<std::ptrdiff_t>(first + n));
        const InputTensor input = encode_batch(data, idx, cfg, kEvalStream, corruption);
        const NetworkState state = forward(spec, input, grid, cfg.solver, cfg.exec);
        const auto counts = gather_counts(spec, state, classes);
        loss_sum += loss_and_grad(cfg.loss, counts, classes, labels, cfg.mse_target()).loss * static_cast<double>(n);
        for (std::size_t b = 0; b < n; ++b) {
            const std::size_t pred = predict_class(std::span(counts).subspan(b * classes, classes));
            const auto y = static_cast<std::size_t>(labels[b]);
            ++r.confusion[y * classes + pred];
            if (pred == y) ++correct;
        }
        for (const auto& s : state.samples) add_totals(totals, s.spike_totals(spec));
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    r.loss = loss_sum / static_cast<double>(data.size());
    r.firing_rates = firing_rates(spec, totals, cfg.T, data.size());
    return r;
}

double relative_error(double a, double b, double floor) {
    const double scale = std::max({std::abs(a), std::abs(b), floor});
    return std::abs(a - b) / scale;
}

GradcheckReport gradcheck(const NetworkSpec& spec_in, const SampleInput& sample, int label, const TrainConfig& cfg,
                          double epsilon) {
    cfg.validate();
    if (!(epsilon > 0.0)) throw std::invalid_argument("gradcheck: epsilon must be > 0");
    NetworkSpec spec = spec_in;
    spec.spike_mode = SpikeMode::smooth;
    spec.validate();
    if (spec.parameter_count() >= 5000)
        throw std::invalid_argument("gradcheck: network has " + std::to_string(spec.parameter_count()) +
                                    " parameters; the check is limited to fewer than 5000");
    const TimeGrid grid = cfg.grid();
    const std::size_t classes = spec.output_dim();
    const int labels[1] = {label};

    auto loss_of = [&](const NetworkSpec& s) {
        const SampleState st = forward_sample(s, sample, grid, cfg.solver);
        return loss_and_grad(cfg.loss, st.counts(s), classes, labels, cfg.mse_target()).loss;
    };

    const SampleState st = forward_sample(spec, sample, grid, cfg.solver);
    const LossResult lr = loss_and_grad(cfg.loss, st.counts(spec), classes, labels, cfg.mse_target());
    const GradientSet g = backward(spec, st, lr.grad, grid, cfg.solver, cfg.backward);

    GradcheckReport rep;
    double sum = 0.0;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        auto& w = spec.layers[l].weight;
        for (std::size_t r = 0; r < w.rows(); ++r) {
            for (std::size_t c = 0; c < w.cols(); ++c) {
                const double saved = w(r, c);
                w(r, c) = saved + epsilon;
                const double up = loss_of(spec);
                w(r, c) = saved - epsilon;
                const double down = loss_of(spec);
                w(r, c) = saved;
                const double numeric = (up - down) / (2.0 * epsilon);
                const double adj = g.dW[l](r, c);
                const double e = relative_error(adj, numeric);
                sum += e;
                ++rep.checked;
                if (e > rep.max_rel_error || rep.checked == 1) {
                    rep.max_rel_error = e;
                    rep.layer = l;
                    rep.row = r;
                    rep.col = c;
                    rep.adjoint_at_max = adj;
                    rep.numeric_at_max = numeric;
                }
            }
        }
    }
    rep.mean_rel_error = rep.checked ? sum / static_cast<double>(rep.checked) : 0.0;
    return rep;
}

} // namespace fspike
