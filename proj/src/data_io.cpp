#include "fspike/data_io.hpp"

#include "fspike/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fspike {

namespace {

std::mutex g_warning_mutex;
WarningHandler g_warning_handler;

// Uniform double in [0, 1) from the top 53 bits.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

} // namespace

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void set_warning_handler(WarningHandler handler) {
    std::lock_guard lock(g_warning_mutex);
    g_warning_handler = std::move(handler);
}

void warn(std::string_view message) {
    std::lock_guard lock(g_warning_mutex);
    if (g_warning_handler)
        g_warning_handler(message);
    else
        std::cerr << "warning: " << message << '\n';
}

SpikeTensor::SpikeTensor(int frames, int batch, std::size_t features)
    : frames_(frames), batch_(batch), features_(features) {
    if (frames < 1 || batch < 0) throw std::invalid_argument("SpikeTensor: need frames >= 1, batch >= 0");
    data_.assign(static_cast<std::size_t>(frames) * batch * features, 0);
}

InputTensor SpikeTensor::to_input() const {
    InputTensor out(frames_, batch_, features_);
    std::transform(data_.begin(), data_.end(), out.data().begin(),
                   [](std::uint8_t v) { return static_cast<double>(v); });
    return out;
}

std::size_t encode_sample(std::span<const double> intensities, int frames, std::uint64_t seed,
                          std::span<double> out, std::size_t stride) {
    const std::size_t f = intensities.size();
    if (frames < 1) throw std::invalid_argument("encode: frames must be >= 1");
    if (f > stride || out.size() < (frames - 1) * stride + f)
        throw std::invalid_argument("encode: output too small");
    std::size_t clamped = 0;
    for (double p : intensities)
        if (!(p >= 0.0 && p <= 1.0)) ++clamped;
    std::mt19937_64 rng(seed);
    for (int t = 0; t < frames; ++t) {
        double* row = out.data() + t * stride;
        for (std::size_t i = 0; i < f; ++i) {
            const double p = std::clamp(std::isnan(intensities[i]) ? 0.0 : intensities[i], 0.0, 1.0);
            row[i] = unit(rng) < p ? 1.0 : 0.0;
        }
    }
    return clamped;
}

namespace {

SpikeTensor encode_batch(std::span<const double> intensities, std::size_t features, int frames,
                         std::uint64_t seed, const char* name) {
    if (features == 0 || intensities.size() % features != 0)
        throw std::invalid_argument(std::string(name) + ": intensity count is not a multiple of features");
    const int batch = static_cast<int>(intensities.size() / features);
    SpikeTensor out(frames, batch, features);
    std::vector<double> frames_buf(static_cast<std::size_t>(frames) * features);
    std::size_t clamped = 0;
    for (int b = 0; b < batch; ++b) {
        clamped += encode_sample(intensities.subspan(b * features, features), frames,
                                 sample_seed(seed, b), frames_buf, features);
        for (int t = 0; t < frames; ++t) {
            auto dst = out.frame(t, b);
            for (std::size_t i = 0; i < features; ++i)
                dst[i] = static_cast<std::uint8_t>(frames_buf[t * features + i]);
        }
    }
    if (clamped > 0)
        warn(std::string(name) + ": clamped " + std::to_string(clamped) + " values into [0, 1]");
    return out;
}

} // namespace

SpikeTensor encode_bernoulli(std::span<const double> intensities, std::size_t features, int frames,
                             std::uint64_t seed) {
    return encode_batch(intensities, features, frames, seed, "encode_bernoulli");
}

SpikeTensor encode_poisson(std::span<const double> rates, std::size_t features, int frames,
                           std::uint64_t seed) {
    return encode_batch(rates, features, frames, seed, "encode_poisson");
}

void Corruption::validate() const {
    switch (kind) {
    case CorruptionKind::none: return;
    case CorruptionKind::gaussian:
        if (!(level >= 0.0) || !std::isfinite(level))
            throw std::invalid_argument("gaussian corruption: sigma must be finite and >= 0");
        return;
    case CorruptionKind::discard:
    case CorruptionKind::occlude:
        if (!(level >= 0.0 && level <= 1.0))
            throw std::invalid_argument(std::string(to_string(kind)) + " corruption: level must be in [0, 1]");
        return;
    }
}

std::string_view to_string(CorruptionKind kind) {
    switch (kind) {
    case CorruptionKind::none: return "none";
    case CorruptionKind::gaussian: return "gaussian";
    case CorruptionKind::discard: return "discard";
    case CorruptionKind::occlude: return "occlude";
    }
    return "none";
}

CorruptionKind parse_corruption_kind(std::string_view name) {
    for (auto k : {CorruptionKind::none, CorruptionKind::gaussian, CorruptionKind::discard,
                   CorruptionKind::occlude})
        if (to_string(k) == name) return k;
    throw std::invalid_argument("unknown corruption '" + std::string(name) +
                                "' (expected none, gaussian, discard or occlude)");
}

namespace {

struct Box {
    std::size_t r0, r1, c0, c1, cols;
};

Box occlusion_box(double fraction, std::size_t features, std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) {
        const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(features))));
        if (side * side != features)
            throw std::invalid_argument("occlude: feature count is not a square grid; give rows and cols");
        rows = cols = side;
    }
    if (rows * cols != features) throw std::invalid_argument("occlude: rows * cols != features");
    const double s = std::sqrt(fraction);
    const auto h = static_cast<std::size_t>(std::llround(s * static_cast<double>(rows)));
    const auto w = static_cast<std::size_t>(std::llround(s * static_cast<double>(cols)));
    const std::size_t r0 = (rows - h) / 2;
    const std::size_t c0 = (cols - w) / 2;
    return {r0, r0 + h, c0, c0 + w, cols};
}

} // namespace

void corrupt_sample(const Corruption& c, std::uint64_t index, int frames, std::size_t features,
                    std::span<double> data, std::size_t stride) {
    c.validate();
    if (features > stride || data.size() < (frames - 1) * stride + features)
        throw std::invalid_argument("corrupt_sample: data too small");
    switch (c.kind) {
    case CorruptionKind::none: return;
    case CorruptionKind::gaussian: {
        std::mt19937_64 rng(sample_seed(c.seed, index));
        std::normal_distribution<double> noise(0.0, 1.0);
        for (int t = 0; t < frames; ++t)
            for (std::size_t i = 0; i < features; ++i) data[t * stride + i] += c.level * noise(rng);
        return;
    }
    case CorruptionKind::discard: {
        std::mt19937_64 rng(sample_seed(c.seed, index));
        for (int t = 0; t < frames; ++t)
            for (std::size_t i = 0; i < features; ++i)
                if (unit(rng) < c.level) data[t * stride + i] = 0.0;
        return;
    }
    case CorruptionKind::occlude: {
        const Box box = occlusion_box(c.level, features, c.rows, c.cols);
        for (int t = 0; t < frames; ++t)
            for (std::size_t r = box.r0; r < box.r1; ++r)
                for (std::size_t col = box.c0; col < box.c1; ++col) data[t * stride + r * box.cols + col] = 0.0;
        return;
    }
    }
}

namespace {

// Applies a corruption to each sample of a spike tensor through a real buffer.
template <class Out, class Store>
void corrupt_tensor(const SpikeTensor& spikes, const Corruption& c, Out& out, Store store) {
    const std::size_t f = spikes.features();
    std::vector<double> buf(static_cast<std::size_t>(spikes.frames()) * f);
    for (int b = 0; b < spikes.batch(); ++b) {
        for (int t = 0; t < spikes.frames(); ++t) {
            auto src = spikes.frame(t, b);
            std::copy(src.begin(), src.end(), buf.begin() + t * f);
        }
        corrupt_sample(c, static_cast<std::uint64_t>(b), spikes.frames(), f, buf, f);
        for (int t = 0; t < spikes.frames(); ++t) store(out, t, b, std::span<const double>(buf).subspan(t * f, f));
    }
}

} // namespace

InputTensor inject_gaussian_noise(const SpikeTensor& spikes, double sigma, std::uint64_t seed) {
    InputTensor out(spikes.frames(), spikes.batch(), spikes.features());
    corrupt_tensor(spikes, Corruption{CorruptionKind::gaussian, sigma, seed}, out,
                   [](InputTensor& o, int t, int b, std::span<const double> v) {
                       std::copy(v.begin(), v.end(), o.frame(t, b).begin());
                   });
    return out;
}

namespace {

void store_bytes(SpikeTensor& o, int t, int b, std::span<const double> v) {
    auto dst = o.frame(t, b);
    for (std::size_t i = 0; i < v.size(); ++i) dst[i] = static_cast<std::uint8_t>(v[i]);
}

} // namespace

SpikeTensor discard_spikes(const SpikeTensor& spikes, double p, std::uint64_t seed) {
    SpikeTensor out(spikes.frames(), spikes.batch(), spikes.features());
    corrupt_tensor(spikes, Corruption{CorruptionKind::discard, p, seed}, out, store_bytes);
    return out;
}

SpikeTensor occlude(const SpikeTensor& spikes, double fraction, std::size_t rows, std::size_t cols) {
    SpikeTensor out(spikes.frames(), spikes.batch(), spikes.features());
    corrupt_tensor(spikes, Corruption{CorruptionKind::occlude, fraction, 0, rows, cols}, out, store_bytes);
    return out;
}

Dataset Dataset::head(std::size_t n) const {
    Dataset d = *this;
    n = std::min(n, size());
    d.labels.resize(n);
    d.features.resize(n * feature_dim);
    return d;
}

void Dataset::validate() const {
    if (size() == 0) throw std::invalid_argument("dataset is empty");
    if (feature_dim == 0 || features.size() != size() * feature_dim)
        throw std::invalid_argument("dataset: feature array does not match sample count");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            throw std::invalid_argument("dataset: label " + std::to_string(y) + " out of range");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

IdxArray parse_idx(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) throw FormatError(bytes.size(), "IDX: file too short for the magic number");
    if (bytes[0] != 0 || bytes[1] != 0) throw FormatError(0, "IDX: bad magic number");
    IdxArray out;
    out.type_code = bytes[2];
    if (out.type_code != 0x08) throw FormatError(2, "IDX: only unsigned-byte payloads are supported");
    const std::size_t ndims = bytes[3];
    if (ndims == 0) throw FormatError(3, "IDX: zero dimensions");
    std::size_t offset = 4;
    std::size_t count = 1;
    for (std::size_t d = 0; d < ndims; ++d) {
        if (bytes.size() < offset + 4) throw FormatError(bytes.size(), "IDX: truncated dimension header");
        const std::uint32_t v = (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
                                (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
        out.dims.push_back(v);
        count *= v;
        offset += 4;
    }
    if (bytes.size() < offset + count)
        throw FormatError(bytes.size(), "IDX: truncated payload, expected " + std::to_string(count) +
                                            " bytes after offset " + std::to_string(offset));
    if (bytes.size() > offset + count) throw FormatError(offset + count, "IDX: trailing bytes after payload");
    out.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
    return out;
}

IdxArray load_idx(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return parse_idx(bytes);
    } catch (const FormatError& e) {
        throw FormatError(e.offset(), path.string() + ": " + std::string(e.what()).substr(0, std::string(e.what()).rfind(" (byte")));
    }
}

IdxImages load_idx_images(const std::filesystem::path& path) {
    const auto arr = load_idx(path);
    if (arr.dims.size() != 3) throw FormatError(3, path.string() + ": expected an image file (magic 0x00000803)");
    IdxImages img;
    img.count = arr.dims[0];
    img.rows = arr.dims[1];
    img.cols = arr.dims[2];
    img.pixels.resize(arr.data.size());
    std::transform(arr.data.begin(), arr.data.end(), img.pixels.begin(),
                   [](std::uint8_t v) { return static_cast<double>(v) / 255.0; });
    return img;
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
    const auto arr = load_idx(path);
    if (arr.dims.size() != 1) throw FormatError(3, path.string() + ": expected a label file (magic 0x00000801)");
    return {arr.data.begin(), arr.data.end()};
}

Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels) {
    auto img = load_idx_images(images);
    auto lab = load_idx_labels(labels);
    if (lab.size() != img.count)
        throw FormatError(4, labels.string() + ": " + std::to_string(lab.size()) + " labels for " +
                                 std::to_string(img.count) + " images");
    Dataset d;
    d.features = std::move(img.pixels);
    d.labels = std::move(lab);
    d.feature_dim = img.rows * img.cols;
    d.rows = img.rows;
    d.cols = img.cols;
    int top = 0;
    for (int y : d.labels) top = std::max(top, y);
    d.classes = std::max<std::size_t>(10, static_cast<std::size_t>(top) + 1);
    return d;
}

Dataset load_csv_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError(0, path.string() + ": missing header row");
    const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (columns < 2) throw FormatError(0, path.string() + ": need at least one feature and a label column");
    Dataset d;
    d.feature_dim = columns - 1;
    std::size_t offset = line.size() + 1;
    int line_no = 1;
    int top = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            offset += 1;
            continue;
        }
        std::size_t col = 0;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (true) {
            const char* comma = std::find(p, end, ',');
            if (col + 1 < columns) {
                double v = 0.0;
                auto [ptr, ec] = std::from_chars(p, comma, v);
                if (ec != std::errc() || ptr != comma)
                    throw FormatError(offset + (p - line.data()),
                                      path.string() + ": bad number on line " + std::to_string(line_no));
                d.features.push_back(v);
            } else {
                int y = 0;
                auto [ptr, ec] = std::from_chars(p, comma, y);
                if (ec != std::errc() || ptr != comma || y < 0)
                    throw FormatError(offset + (p - line.data()),
                                      path.string() + ": bad label on line " + std::to_string(line_no));
                d.labels.push_back(y);
                top = std::max(top, y);
            }
            ++col;
            if (comma == end) break;
            p = comma + 1;
        }
        if (col != columns)
            throw FormatError(offset, path.string() + ": line " + std::to_string(line_no) + " has " +
                                          std::to_string(col) + " columns, expected " + std::to_string(columns));
        offset += line.size() + 1;
    }
    if (d.labels.empty()) throw FormatError(offset, path.string() + ": no samples");
    d.classes = static_cast<std::size_t>(top) + 1;
    return d;
}

// Checkpoint container.

namespace {

constexpr std::string_view kMagic = "FSPIKE-CHECKPOINT";

std::string_view to_string(SpikeMode mode) { return mode == SpikeMode::smooth ? "smooth" : "heaviside"; }

double parse_double(const std::string& s, std::size_t offset, const std::string& field) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw FormatError(offset, "checkpoint: bad value '" + s + "' for " + field);
    return v;
}

std::size_t parse_size(const std::string& s, std::size_t offset, const std::string& field) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw FormatError(offset, "checkpoint: bad value '" + s + "' for " + field);
    return v;
}

} // namespace

std::vector<std::uint8_t> serialize_checkpoint(const NetworkSpec& spec) {
    spec.validate();
    std::ostringstream h;
    h << kMagic << ' ' << kCheckpointVersion << '\n';
    h << "alpha " << format_double(spec.alpha.value()) << '\n';
    h << "spike_mode " << to_string(spec.spike_mode) << '\n';
    h << "layers " << spec.layers.size() << '\n';
    std::size_t offset = 0;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const auto& layer = spec.layers[l];
        const auto& p = layer.neuron;
        const std::size_t bytes = layer.weight.size() * 8;
        h << "layer " << l << " in " << layer.in_dim() << " out " << layer.out_dim() << " model "
          << to_string(p.model) << " reset " << to_string(p.reset) << " alpha " << format_double(p.alpha.value())
          << " tau " << format_double(p.tau_alpha) << " resistance " << format_double(p.resistance)
          << " theta " << format_double(p.theta) << " surrogate " << to_string(p.surrogate.kind) << ' '
          << format_double(p.surrogate.scale) << " offset " << offset << " bytes " << bytes << '\n';
        offset += bytes;
    }
    h << "END\n";
    const std::string header = h.str();
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + offset);
    for (const auto& layer : spec.layers) {
        for (double v : layer.weight.values()) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, 8);
            for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
        }
    }
    return out;
}

NetworkSpec parse_checkpoint(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    auto next_line = [&](std::size_t& start) {
        start = pos;
        const auto nl = std::find(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end(), '\n');
        if (nl == bytes.end()) throw FormatError(pos, "checkpoint: header is not terminated");
        std::string line(bytes.begin() + static_cast<std::ptrdiff_t>(pos), nl);
        pos = static_cast<std::size_t>(nl - bytes.begin()) + 1;
        return line;
    };

    std::size_t at = 0;
    {
        if (bytes.empty()) throw FormatError(0, "checkpoint: empty file");
        std::istringstream first(next_line(at));
        std::string magic;
        std::string version;
        first >> magic >> version;
        if (magic != kMagic) throw FormatError(0, "checkpoint: not a checkpoint file (bad magic)");
        int v = 0;
        auto [ptr, ec] = std::from_chars(version.data(), version.data() + version.size(), v);
        if (ec != std::errc() || ptr != version.data() + version.size())
            throw FormatError(kMagic.size() + 1, "checkpoint: unreadable format version '" + version + "'");
        if (v != kCheckpointVersion)
            throw FormatError(kMagic.size() + 1, "checkpoint: unsupported format version " + std::to_string(v) +
                                                     " (this build reads version " +
                                                     std::to_string(kCheckpointVersion) + ")");
    }

    NetworkSpec spec;
    std::optional<double> alpha;
    std::size_t n_layers = 0;
    bool have_count = false;
    struct Slot {
        std::size_t offset, bytes;
    };
    std::vector<Slot> slots;
    while (true) {
        std::string line = next_line(at);
        if (line == "END") break;
        std::istringstream in(line);
        std::string key;
        in >> key;
        if (key == "alpha") {
            std::string v;
            in >> v;
            alpha = parse_double(v, at, "alpha");
        } else if (key == "spike_mode") {
            std::string v;
            in >> v;
            if (v == "heaviside") spec.spike_mode = SpikeMode::heaviside;
            else if (v == "smooth") spec.spike_mode = SpikeMode::smooth;
            else throw FormatError(at, "checkpoint: unknown spike_mode '" + v + "'");
        } else if (key == "layers") {
            std::string v;
            in >> v;
            n_layers = parse_size(v, at, "layers");
            have_count = true;
        } else if (key == "layer") {
            std::string idx;
            in >> idx;
            const std::size_t l = parse_size(idx, at, "layer index");
            if (l != spec.layers.size()) throw FormatError(at, "checkpoint: layer " + idx + " out of order");
            const std::string where = "layer " + idx;
            std::size_t in_dim = 0, out_dim = 0, off = 0, nbytes = 0;
            NeuronParams p;
            std::string k;
            int seen = 0;
            while (in >> k) {
                std::string v;
                if (!(in >> v)) throw FormatError(at, "checkpoint: " + where + ": missing value for " + k);
                try {
                    if (k == "in") in_dim = parse_size(v, at, where + " in");
                    else if (k == "out") out_dim = parse_size(v, at, where + " out");
                    else if (k == "model") p.model = parse_neuron_model(v);
                    else if (k == "reset") p.reset = parse_reset_mode(v);
                    else if (k == "alpha") p.alpha = FractionalOrder(parse_double(v, at, where + " alpha"));
                    else if (k == "tau") p.tau_alpha = parse_double(v, at, where + " tau");
                    else if (k == "resistance") p.resistance = parse_double(v, at, where + " resistance");
                    else if (k == "theta") p.theta = parse_double(v, at, where + " theta");
                    else if (k == "surrogate") {
                        p.surrogate.kind = parse_surrogate_kind(v);
                        std::string scale;
                        if (!(in >> scale)) throw FormatError(at, "checkpoint: " + where + ": missing surrogate scale");
                        p.surrogate.scale = parse_double(scale, at, where + " surrogate scale");
                    } else if (k == "offset") off = parse_size(v, at, where + " offset");
                    else if (k == "bytes") nbytes = parse_size(v, at, where + " bytes");
                    else throw FormatError(at, "checkpoint: " + where + ": unknown field '" + k + "'");
                } catch (const std::invalid_argument& e) {
                    throw FormatError(at, "checkpoint: " + where + ": " + e.what());
                }
                ++seen;
            }
            if (seen != 11) throw FormatError(at, "checkpoint: " + where + ": incomplete layer record");
            if (nbytes != in_dim * out_dim * 8)
                throw FormatError(at, "checkpoint: " + where + ": byte count " + std::to_string(nbytes) +
                                          " does not match " + std::to_string(out_dim) + "x" +
                                          std::to_string(in_dim) + " weights");
            const std::size_t expected = slots.empty() ? 0 : slots.back().offset + slots.back().bytes;
            if (off != expected)
                throw FormatError(at, "checkpoint: " + where + ": offset " + std::to_string(off) +
                                          " inconsistent, expected " + std::to_string(expected));
            slots.push_back({off, nbytes});
            spec.layers.push_back(LayerSpec{Matrix(out_dim, in_dim), p});
        } else {
            throw FormatError(at, "checkpoint: unknown header line '" + line + "'");
        }
    }
    if (!alpha || !have_count) throw FormatError(at, "checkpoint: header lacks alpha or layers");
    if (n_layers != spec.layers.size())
        throw FormatError(at, "checkpoint: header declares " + std::to_string(n_layers) + " layers, found " +
                                  std::to_string(spec.layers.size()));
    try {
        spec.alpha = FractionalOrder(*alpha);
    } catch (const std::invalid_argument& e) {
        throw FormatError(at, std::string("checkpoint: ") + e.what());
    }

    const std::size_t payload = pos;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const std::size_t begin = payload + slots[l].offset;
        if (bytes.size() < begin + slots[l].bytes)
            throw FormatError(bytes.size(), "checkpoint: payload truncated in layer " + std::to_string(l) +
                                                ": need " + std::to_string(slots[l].bytes) + " bytes, have " +
                                                std::to_string(bytes.size() > begin ? bytes.size() - begin : 0));
        auto w = spec.layers[l].weight.values();
        for (std::size_t i = 0; i < w.size(); ++i) {
            std::uint64_t bits = 0;
            for (int b = 0; b < 8; ++b) bits |= std::uint64_t{bytes[begin + i * 8 + b]} << (8 * b);
            std::memcpy(&w[i], &bits, 8);
        }
    }
    const std::size_t end = payload + (slots.empty() ? 0 : slots.back().offset + slots.back().bytes);
    if (bytes.size() != end) throw FormatError(end, "checkpoint: unexpected bytes after the last layer");
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(payload, std::string("checkpoint: ") + e.what());
    }
    return spec;
}

void save_checkpoint(const NetworkSpec& spec, const std::filesystem::path& path) {
    write_file(path, serialize_checkpoint(spec));
}

NetworkSpec load_checkpoint(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return parse_checkpoint(bytes);
}

} // namespace fspike
