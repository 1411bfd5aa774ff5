#pragma once

// Spike encoders, corruptions for robustness sweeps, IDX/CSV dataset readers
// and the checkpoint container.
//
// Every random operation draws from a generator seeded per sample with
// sample_seed(seed, index), so results do not depend on batching or on the
// number of threads.

#include "fspike/network.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fspike {

// splitmix64 finalizer over (seed, index).
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index);

// Receives non-fatal diagnostics (clamped intensities). Defaults to stderr.
using WarningHandler = std::function<void(std::string_view)>;
void set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

// Binary spikes laid out T x batch x features.
class SpikeTensor {
public:
    SpikeTensor(int frames, int batch, std::size_t features);

    int frames() const noexcept { return frames_; }
    int batch() const noexcept { return batch_; }
    std::size_t features() const noexcept { return features_; }

    std::uint8_t at(int t, int b, std::size_t f) const { return data_[offset(t, b) + f]; }
    std::span<std::uint8_t> frame(int t, int b) { return {data_.data() + offset(t, b), features_}; }
    std::span<const std::uint8_t> frame(int t, int b) const {
        return {data_.data() + offset(t, b), features_};
    }
    std::span<const std::uint8_t> data() const noexcept { return data_; }

    InputTensor to_input() const;

private:
    std::size_t offset(int t, int b) const {
        return (static_cast<std::size_t>(t) * batch_ + b) * features_;
    }
    int frames_;
    int batch_;
    std::size_t features_;
    std::vector<std::uint8_t> data_;
};

// intensities holds batch x features values. Each (t, sample, feature) fires
// independently with probability equal to the intensity; values outside
// [0, 1] are clamped with a warning.
SpikeTensor encode_bernoulli(std::span<const double> intensities, std::size_t features, int frames,
                             std::uint64_t seed);
// Rate coding: per-step firing probability min(rate, 1).
SpikeTensor encode_poisson(std::span<const double> rates, std::size_t features, int frames,
                           std::uint64_t seed);

// Bernoulli-encodes one sample into frames out[t * stride + f]. Returns the
// number of clamped intensities.
std::size_t encode_sample(std::span<const double> intensities, int frames, std::uint64_t seed,
                          std::span<double> out, std::size_t stride);

enum class CorruptionKind { none, gaussian, discard, occlude };

struct Corruption {
    CorruptionKind kind = CorruptionKind::none;
    // sigma for gaussian, drop probability for discard, covered area fraction
    // for occlude.
    double level = 0.0;
    std::uint64_t seed = 0;
    // Feature grid for occlusion; 0 means a square grid.
    std::size_t rows = 0;
    std::size_t cols = 0;

    void validate() const;
};

std::string_view to_string(CorruptionKind kind);
CorruptionKind parse_corruption_kind(std::string_view name);

// Corrupts one encoded sample in place (frames at out[t * stride + f]).
void corrupt_sample(const Corruption& c, std::uint64_t index, int frames, std::size_t features,
                    std::span<double> data, std::size_t stride);

// spikes + N(0, sigma^2), real-valued.
InputTensor inject_gaussian_noise(const SpikeTensor& spikes, double sigma, std::uint64_t seed);
// Zeroes each spike with probability p.
SpikeTensor discard_spikes(const SpikeTensor& spikes, double p, std::uint64_t seed);
// Zeroes a centred square covering `fraction` of the rows x cols grid.
SpikeTensor occlude(const SpikeTensor& spikes, double fraction, std::size_t rows, std::size_t cols);

// Labelled samples with intensities in [0, 1], n x feature_dim row-major.
struct Dataset {
    std::vector<double> features;
    std::vector<int> labels;
    std::size_t feature_dim = 0;
    std::size_t classes = 0;
    std::size_t rows = 0; // image grid, 0 when not an image
    std::size_t cols = 0;

    std::size_t size() const noexcept { return labels.size(); }
    std::span<const double> sample(std::size_t i) const {
        return {features.data() + i * feature_dim, feature_dim};
    }
    // First n samples (or all when n exceeds the size).
    Dataset head(std::size_t n) const;
    void validate() const;
};

// Raw IDX array.
struct IdxArray {
    std::uint8_t type_code = 0; // 0x08: unsigned byte
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> data;
};

IdxArray parse_idx(std::span<const std::uint8_t> bytes);
IdxArray load_idx(const std::filesystem::path& path);

struct IdxImages {
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> pixels; // count x (rows * cols), scaled by 1/255
};

IdxImages load_idx_images(const std::filesystem::path& path);
std::vector<int> load_idx_labels(const std::filesystem::path& path);
Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels);

// Header row, one sample per line, label in the last column.
Dataset load_csv_dataset(const std::filesystem::path& path);

inline constexpr int kCheckpointVersion = 1;

// Text header (version, architecture, payload offsets) followed by the
// weights as little-endian float64 in layer order, row-major.
void save_checkpoint(const NetworkSpec& spec, const std::filesystem::path& path);
NetworkSpec load_checkpoint(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_checkpoint(const NetworkSpec& spec);
NetworkSpec parse_checkpoint(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, std::string_view text);

} // namespace fspike
