#include "fspike/config.hpp"

#include "fspike/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace fspike {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

Error bad_value(const std::string& name, const std::string& value, const char* expected) {
    return Error(ErrorKind::usage, "config " + name + ": '" + value + "' is not " + expected);
}

} // namespace

const std::vector<ConfigKey>& config_schema() {
    static const std::vector<ConfigKey> schema = {
        {"network.dims", "784,128,10", "layer widths, input first"},
        {"network.alpha", "1.0", "fractional order in (0, 1]"},
        {"network.seed", "0", "weight initialisation seed"},
        {"network.gain", "1.0", "initial weight scale"},
        {"network.checkpoint", "", "start from this checkpoint instead of a fresh network"},
        {"neuron.model", "lif", "lif or if"},
        {"neuron.tau", "2.0", "membrane time constant"},
        {"neuron.theta", "1.0", "firing threshold (inf disables firing)"},
        {"neuron.resistance", "1.0", "membrane resistance"},
        {"neuron.reset", "soft_subtract", "soft_subtract or hard_zero"},
        {"neuron.surrogate", "sigmoid", "sigmoid, arctan, piecewise_linear or gaussian"},
        {"neuron.surrogate_scale", "", "surrogate sharpness; empty for the family default"},
        {"solver.method", "abm_predictor", "abm_predictor or euler"},
        {"solver.memory_window", "0", "short-memory window K; 0 keeps the full history"},
        {"solver.adjoint", "discrete", "discrete or continuous"},
        {"train.epochs", "30", ""},
        {"train.batch_size", "32", ""},
        {"train.optimizer", "adam", "adam or sgd"},
        {"train.lr", "0.001", ""},
        {"train.beta1", "0.9", ""},
        {"train.beta2", "0.999", ""},
        {"train.eps", "1e-8", ""},
        {"train.loss", "cross_entropy_on_counts", "cross_entropy_on_counts or mse_on_counts"},
        {"train.target_count", "", "mse target count; empty for T"},
        {"train.seed", "0", "shuffling and encoding seed"},
        {"train.T", "8", "spike timesteps"},
        {"train.time_interval", "1.0", "grid spacing h"},
        {"train.encoding", "bernoulli", "bernoulli, poisson or direct"},
        {"train.grad_chunks", "8", "per-batch gradient partials"},
        {"data.format", "idx", "idx or csv"},
        {"data.train_images", "", ""},
        {"data.train_labels", "", ""},
        {"data.test_images", "", ""},
        {"data.test_labels", "", ""},
        {"data.train_csv", "", ""},
        {"data.test_csv", "", ""},
        {"data.limit_train", "0", "use only the first n training samples; 0 for all"},
        {"data.limit_test", "0", "use only the first n test samples; 0 for all"},
        {"output.dir", "out", "directory for every artifact of the run"},
        {"fde.rhs", "decay", "decay (D y = -lambda y) or constant (D y = drive)"},
        {"fde.alpha", "1.0", ""},
        {"fde.t_end", "1.0", ""},
        {"fde.steps", "1000", ""},
        {"fde.y0", "1.0", ""},
        {"fde.lambda", "1.0", ""},
        {"fde.drive", "1.0", ""},
        {"fde.method", "abm_predictor", "abm_predictor or euler"},
        {"sim.drive", "constant", "constant, step or noisy"},
        {"sim.current", "1.5", "drive amplitude"},
        {"sim.step_time", "5.0", "onset of the step drive"},
        {"sim.noise_sigma", "0.2", "std of the noisy drive"},
        {"sim.noise_seed", "0", ""},
        {"sim.t_end", "20.0", ""},
        {"sim.steps", "2000", ""},
        {"sim.u0", "0.0", ""},
        {"gradcheck.epsilon", "1e-4", ""},
        {"gradcheck.threshold", "1e-3", "fail above this max relative error"},
        {"gradcheck.input_seed", "0", "seed of the random input currents"},
        {"gradcheck.label", "0", ""},
        {"robustness.corruption", "gaussian", "gaussian, discard or occlude"},
        {"robustness.levels", "0,0.2,0.4,0.6", ""},
        {"robustness.seed", "0", ""},
        {"energy.e_mac", "4.6e-12", "joules per MAC"},
        {"energy.e_ac", "0.9e-12", "joules per AC"},
        {"energy.timesteps", "0", "0 for train.T"},
        {"energy.rates", "", "per-layer firing rates; empty to read energy.metrics"},
        {"energy.metrics", "", "metrics.jsonl whose last record supplies firing rates"},
        {"energy.mac_first", "true", "cost the first layer as MAC"},
    };
    return schema;
}

Config::Config() {
    for (const auto& k : config_schema()) values_[k.name] = k.default_value;
}

void Config::set(const std::string& name, const std::string& value) {
    auto it = values_.find(name);
    if (it == values_.end()) {
        const auto dot = name.find('.');
        if (dot == std::string::npos)
            throw Error(ErrorKind::usage, "config key '" + name + "' has no section (expected section.key)");
        throw Error(ErrorKind::usage, "unknown config key '" + name + "'");
    }
    it->second = value;
    explicit_[name] = true;
}

void Config::apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw Error(ErrorKind::usage, "override '" + std::string(assignment) + "' is not section.key=value");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::merge(const Config& other) {
    for (const auto& [k, v] : other.explicit_) set(k, other.values_.at(k));
}

Config Config::parse(std::string_view text, std::string_view origin) {
    Config cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        const std::string where = std::string(origin) + ":" + std::to_string(line_no);
        if (t.front() == '[') {
            if (t.back() != ']') throw Error(ErrorKind::usage, where + ": unterminated section header");
            section = trim(std::string_view(t).substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::usage, where + ": expected key = value");
        if (section.empty()) throw Error(ErrorKind::usage, where + ": key outside of a [section]");
        const std::string key = section + "." + trim(std::string_view(t).substr(0, eq));
        try {
            cfg.set(key, trim(std::string_view(t).substr(eq + 1)));
        } catch (const Error& e) {
            throw Error(ErrorKind::usage, where + ": " + e.what());
        }
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

const std::string& Config::get(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw std::logic_error("config key not in schema: " + name);
    return it->second;
}

double Config::get_double(const std::string& name) const {
    const auto& v = get(name);
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size()) throw bad_value(name, v, "a number");
    return out;
}

long long Config::get_int(const std::string& name) const {
    const auto& v = get(name);
    long long out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size()) throw bad_value(name, v, "an integer");
    return out;
}

std::uint64_t Config::get_u64(const std::string& name) const {
    const auto& v = get(name);
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size())
        throw bad_value(name, v, "a non-negative integer");
    return out;
}

bool Config::get_bool(const std::string& name) const {
    const auto& v = get(name);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw bad_value(name, v, "a boolean");
}

std::vector<double> Config::get_doubles(const std::string& name) const {
    std::vector<double> out;
    std::stringstream ss(get(name));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        double v = 0.0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (t.empty() || ec != std::errc() || p != t.data() + t.size())
            throw bad_value(name, get(name), "a comma-separated list of numbers");
        out.push_back(v);
    }
    return out;
}

std::vector<std::size_t> Config::get_sizes(const std::string& name) const {
    std::vector<std::size_t> out;
    for (double v : get_doubles(name)) {
        if (!(v >= 1.0) || v != static_cast<double>(static_cast<std::size_t>(v)))
            throw bad_value(name, get(name), "a list of positive integers");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

std::string Config::to_ini() const {
    std::ostringstream out;
    std::string section;
    for (const auto& k : config_schema()) {
        const auto dot = k.name.find('.');
        const std::string s = k.name.substr(0, dot);
        if (s != section) {
            if (!section.empty()) out << '\n';
            out << '[' << s << "]\n";
            section = s;
        }
        out << k.name.substr(dot + 1) << " = " << values_.at(k.name) << '\n';
    }
    return out.str();
}

} // namespace fspike
