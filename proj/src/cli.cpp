#include "fspike/cli.hpp"

#include "fspike/energy.hpp"
#include "fspike/error.hpp"
#include "fspike/neuron.hpp"
#include "fspike/special.hpp"
#include "fspike/svg_plot.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <limits>
#include <random>
#include <sstream>

namespace fspike {

namespace fs = std::filesystem;
using nlohmann::json;

NeuronParams neuron_from_config(const Config& cfg) {
    NeuronParams p;
    p.alpha = FractionalOrder(cfg.get_double("network.alpha"));
    p.model = parse_neuron_model(cfg.get("neuron.model"));
    p.tau_alpha = cfg.get_double("neuron.tau");
    p.theta = cfg.get_double("neuron.theta");
    p.resistance = cfg.get_double("neuron.resistance");
    p.reset = parse_reset_mode(cfg.get("neuron.reset"));
    p.surrogate = SurrogateSpec::with_default_scale(parse_surrogate_kind(cfg.get("neuron.surrogate")));
    if (!cfg.get("neuron.surrogate_scale").empty()) p.surrogate.scale = cfg.get_double("neuron.surrogate_scale");
    p.validate();
    return p;
}

NetworkSpec network_from_config(const Config& cfg) {
    if (!cfg.get("network.checkpoint").empty()) return load_checkpoint(cfg.get("network.checkpoint"));
    const auto dims = cfg.get_sizes("network.dims");
    if (dims.size() < 2) throw Error(ErrorKind::usage, "config network.dims: need at least an input and one layer");
    const NeuronParams p = neuron_from_config(cfg);
    return make_network(dims, p, p.alpha, cfg.get_u64("network.seed"), cfg.get_double("network.gain"));
}

TrainConfig train_config_from(const Config& cfg) {
    TrainConfig t;
    t.epochs = static_cast<int>(cfg.get_int("train.epochs"));
    t.batch_size = static_cast<int>(cfg.get_int("train.batch_size"));
    t.optimizer.kind = parse_optimizer_kind(cfg.get("train.optimizer"));
    t.optimizer.lr = cfg.get_double("train.lr");
    t.optimizer.beta1 = cfg.get_double("train.beta1");
    t.optimizer.beta2 = cfg.get_double("train.beta2");
    t.optimizer.eps = cfg.get_double("train.eps");
    t.loss = parse_loss_kind(cfg.get("train.loss"));
    if (!cfg.get("train.target_count").empty()) t.target_count = cfg.get_double("train.target_count");
    t.seed = cfg.get_u64("train.seed");
    t.T = static_cast<int>(cfg.get_int("train.T"));
    t.time_interval = cfg.get_double("train.time_interval");
    t.encoding = parse_encoding(cfg.get("train.encoding"));
    t.grad_chunks = static_cast<int>(cfg.get_int("train.grad_chunks"));

    const std::string method = cfg.get("solver.method");
    if (method == "abm_predictor") t.solver.method = Method::abm_predictor;
    else if (method == "euler") t.solver.method = Method::euler;
    else throw Error(ErrorKind::usage, "config solver.method: '" + method + "' is not abm_predictor or euler");
    const auto window = cfg.get_int("solver.memory_window");
    if (window < 0) throw Error(ErrorKind::usage, "config solver.memory_window: must be >= 0");
    if (window > 0) t.solver.memory_window = static_cast<int>(window);
    const std::string adj = cfg.get("solver.adjoint");
    if (adj == "discrete") t.backward.scheme = AdjointScheme::discrete;
    else if (adj == "continuous") t.backward.scheme = AdjointScheme::continuous;
    else throw Error(ErrorKind::usage, "config solver.adjoint: '" + adj + "' is not discrete or continuous");
    t.validate();
    return t;
}

Dataset dataset_from_config(const Config& cfg, const std::string& split) {
    const std::string format = cfg.get("data.format");
    const auto limit = static_cast<std::size_t>(cfg.get_u64("data.limit_" + split));
    Dataset d;
    if (format == "idx") {
        const auto& images = cfg.get("data." + split + "_images");
        const auto& labels = cfg.get("data." + split + "_labels");
        if (images.empty() && labels.empty()) return d;
        if (images.empty() || labels.empty())
            throw Error(ErrorKind::usage, "config data." + split + "_images and data." + split +
                                              "_labels must be given together");
        d = load_idx_dataset(images, labels);
    } else if (format == "csv") {
        const auto& path = cfg.get("data." + split + "_csv");
        if (path.empty()) return d;
        d = load_csv_dataset(path);
    } else {
        throw Error(ErrorKind::usage, "config data.format: '" + format + "' is not idx or csv");
    }
    return limit > 0 ? d.head(limit) : d;
}

namespace {

struct Context {
    Config cfg;
    fs::path out_dir;
    std::ostream& out;
};

std::string csv_num(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

fs::path prepare_output(const Config& cfg) {
    const fs::path dir = cfg.get("output.dir");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    write_text(dir / "effective_config.ini", cfg.to_ini());
    return dir;
}

void emit(std::ostream& out, const json& j) { out << j.dump() << std::endl; }

json firing_json(const std::vector<double>& rates) { return json(rates); }

int cmd_solve_fde(Context& c) {
    const FractionalOrder alpha(c.cfg.get_double("fde.alpha"));
    const double t_end = c.cfg.get_double("fde.t_end");
    const int steps = static_cast<int>(c.cfg.get_int("fde.steps"));
    const double y0 = c.cfg.get_double("fde.y0");
    const double lambda = c.cfg.get_double("fde.lambda");
    const double drive = c.cfg.get_double("fde.drive");
    const std::string kind = c.cfg.get("fde.rhs");
    SolverOptions opts;
    if (c.cfg.get("fde.method") == "euler") opts.method = Method::euler;
    else if (c.cfg.get("fde.method") != "abm_predictor")
        throw Error(ErrorKind::usage, "config fde.method: '" + c.cfg.get("fde.method") + "' is not abm_predictor or euler");

    RhsFn rhs;
    std::function<double(double)> reference;
    if (kind == "decay") {
        rhs = [&](double, std::span<const double> y, std::span<double> dy) { dy[0] = -lambda * y[0]; };
        reference = [&](double t) { return y0 * mittag_leffler(alpha, -lambda * std::pow(t, alpha.value())); };
    } else if (kind == "constant") {
        rhs = [&](double, std::span<const double>, std::span<double> dy) { dy[0] = drive; };
        reference = [&](double t) { return y0 + drive * std::pow(t, alpha.value()) / gamma_fn(alpha.value() + 1.0); };
    } else {
        throw Error(ErrorKind::usage, "config fde.rhs: '" + kind + "' is not decay or constant");
    }
    const TimeGrid grid(0.0, t_end, steps);
    const double init[1] = {y0};
    const Trajectory traj = solve_caputo_forward(rhs, init, grid, alpha, opts);

    std::ostringstream csv;
    csv << "t,y,reference,abs_error\n";
    double max_err = 0.0, last_err = 0.0;
    for (int k = 0; k <= steps; ++k) {
        const double t = grid.at(k);
        const double y = traj.value(k)[0];
        const double ref = reference(t);
        last_err = std::abs(y - ref);
        max_err = std::max(max_err, last_err);
        csv << csv_num(t) << ',' << csv_num(y) << ',' << csv_num(ref) << ',' << csv_num(last_err) << '\n';
    }
    write_text(c.out_dir / "solution.csv", csv.str());
    emit(c.out, {{"command", "solve-fde"}, {"rhs", kind}, {"alpha", alpha.value()}, {"steps", steps},
                 {"max_abs_error", max_err}, {"final_abs_error", last_err},
                 {"csv", (c.out_dir / "solution.csv").string()}});
    return 0;
}

int cmd_simulate_neuron(Context& c) {
    const NeuronParams p = neuron_from_config(c.cfg);
    const double t_end = c.cfg.get_double("sim.t_end");
    const int steps = static_cast<int>(c.cfg.get_int("sim.steps"));
    const double amp = c.cfg.get_double("sim.current");
    const double u0 = c.cfg.get_double("sim.u0");
    const std::string drive = c.cfg.get("sim.drive");
    const TimeGrid grid(0.0, t_end, steps);

    std::function<double(double)> current;
    std::vector<double> noise;
    if (drive == "constant") {
        current = [amp](double) { return amp; };
    } else if (drive == "step") {
        const double onset = c.cfg.get_double("sim.step_time");
        current = [amp, onset](double t) { return t >= onset ? amp : 0.0; };
    } else if (drive == "noisy") {
        std::mt19937_64 rng(c.cfg.get_u64("sim.noise_seed"));
        std::normal_distribution<double> n(0.0, c.cfg.get_double("sim.noise_sigma"));
        noise.resize(grid.points());
        for (auto& v : noise) v = amp + n(rng);
        current = [&noise, &grid](double t) {
            const double k = std::floor((t - grid.start()) / grid.step() + 1e-9);
            return noise[static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(grid.steps())))];
        };
    } else {
        throw Error(ErrorKind::usage, "config sim.drive: '" + drive + "' is not constant, step or noisy");
    }

    const NeuronRun run = simulate_neuron(p, current, u0, grid);
    std::optional<Trajectory> ref;
    if (drive == "constant") ref = relaxation_curve(p, amp, u0, grid);

    std::ostringstream csv;
    csv << "t,u,current,reference_no_firing\n";
    for (int k = 0; k <= steps; ++k) {
        const double t = grid.at(k);
        csv << csv_num(t) << ',' << csv_num(run.membrane.value(k)[0]) << ',' << csv_num(current(t)) << ',';
        if (ref) csv << csv_num(ref->value(k)[0]);
        csv << '\n';
    }
    write_text(c.out_dir / "membrane.csv", csv.str());
    std::ostringstream spikes;
    spikes << "spike_time\n";
    for (double t : run.spike_times) spikes << csv_num(t) << '\n';
    write_text(c.out_dir / "spikes.csv", spikes.str());
    emit(c.out, {{"command", "simulate-neuron"}, {"alpha", p.alpha.value()}, {"drive", drive},
                 {"spikes", run.spike_times.size()}, {"final_u", run.membrane.value(steps)[0]},
                 {"csv", (c.out_dir / "membrane.csv").string()}});
    return 0;
}

void write_confusion(const fs::path& path, const EvalResult& r) {
    std::ostringstream csv;
    csv << "true\\pred";
    for (std::size_t j = 0; j < r.classes; ++j) csv << ',' << j;
    csv << '\n';
    for (std::size_t i = 0; i < r.classes; ++i) {
        csv << i;
        for (std::size_t j = 0; j < r.classes; ++j) csv << ',' << r.confusion[i * r.classes + j];
        csv << '\n';
    }
    write_text(path, csv.str());
}

json epoch_json(const EpochMetrics& m) {
    json j = {{"epoch", m.epoch},
              {"train_loss", m.train_loss},
              {"train_accuracy", m.train_accuracy},
              {"seconds", m.seconds},
              {"peak_tracked_bytes", m.peak_tracked_bytes},
              {"peak_rss_bytes", m.peak_rss_bytes},
              {"firing_rates", firing_json(m.firing_rates)}};
    j["test_accuracy"] = m.test_accuracy ? json(*m.test_accuracy) : json(nullptr);
    return j;
}

Dataset require_dataset(const Config& cfg, const std::string& split) {
    Dataset d = dataset_from_config(cfg, split);
    if (d.size() == 0)
        throw Error(ErrorKind::usage, "no " + split + " data configured (set data." + split + "_images/labels or data." +
                                          split + "_csv)");
    return d;
}

int cmd_train(Context& c) {
    const TrainConfig tc = train_config_from(c.cfg);
    const Dataset train = require_dataset(c.cfg, "train");
    const Dataset test = dataset_from_config(c.cfg, "test");
    const NetworkSpec init = network_from_config(c.cfg);

    std::ofstream metrics(c.out_dir / "metrics.jsonl");
    if (!metrics) throw IoError("cannot create " + (c.out_dir / "metrics.jsonl").string());
    const auto result = train_loop(init, train, tc, test.size() ? &test : nullptr, [&](const EpochMetrics& m) {
        const json j = epoch_json(m);
        metrics << j.dump() << std::endl;
        emit(c.out, j);
    });
    save_checkpoint(result.spec, c.out_dir / "checkpoint.fspk");
    const EvalResult ev = evaluate(result.spec, test.size() ? test : train, tc);
    write_confusion(c.out_dir / "confusion.csv", ev);
    emit(c.out, {{"command", "train"}, {"checkpoint", (c.out_dir / "checkpoint.fspk").string()},
                 {"eval_split", test.size() ? "test" : "train"}, {"accuracy", ev.accuracy},
                 {"firing_rates", ev.firing_rates}});
    return 0;
}

NetworkSpec require_checkpoint(const Config& cfg) {
    if (cfg.get("network.checkpoint").empty())
        throw Error(ErrorKind::usage, "config network.checkpoint: a trained checkpoint is required");
    return load_checkpoint(cfg.get("network.checkpoint"));
}

int cmd_eval(Context& c) {
    const TrainConfig tc = train_config_from(c.cfg);
    const NetworkSpec spec = require_checkpoint(c.cfg);
    const Dataset test = require_dataset(c.cfg, "test");
    const EvalResult ev = evaluate(spec, test, tc);
    write_confusion(c.out_dir / "confusion.csv", ev);
    const json j = {{"command", "eval"}, {"samples", test.size()}, {"accuracy", ev.accuracy},
                    {"loss", ev.loss}, {"firing_rates", ev.firing_rates}};
    write_text(c.out_dir / "eval.json", j.dump(2) + "\n");
    emit(c.out, j);
    return 0;
}

int cmd_gradcheck(Context& c) {
    const TrainConfig tc = train_config_from(c.cfg);
    const NetworkSpec spec = network_from_config(c.cfg);
    const double eps = c.cfg.get_double("gradcheck.epsilon");
    const double threshold = c.cfg.get_double("gradcheck.threshold");
    const int label = static_cast<int>(c.cfg.get_int("gradcheck.label"));

    std::vector<double> input(static_cast<std::size_t>(tc.T) * spec.input_dim());
    std::mt19937_64 rng(c.cfg.get_u64("gradcheck.input_seed"));
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (auto& v : input) v = u(rng);
    const auto sample = SampleInput::contiguous(input, tc.T, spec.input_dim());
    const GradcheckReport r = gradcheck(spec, sample, label, tc, eps);

    const bool ok = r.max_rel_error <= threshold;
    const json j = {{"command", "gradcheck"},
                    {"parameters", r.checked},
                    {"max_rel_error", r.max_rel_error},
                    {"mean_rel_error", r.mean_rel_error},
                    {"worst", {{"layer", r.layer}, {"row", r.row}, {"col", r.col},
                               {"adjoint", r.adjoint_at_max}, {"finite_difference", r.numeric_at_max}}},
                    {"threshold", threshold},
                    {"passed", ok}};
    write_text(c.out_dir / "gradcheck.json", j.dump(2) + "\n");
    emit(c.out, j);
    if (!ok)
        throw Error(ErrorKind::numerical, "gradcheck: max relative error " + csv_num(r.max_rel_error) +
                                              " exceeds threshold " + csv_num(threshold));
    return 0;
}

int cmd_robustness(Context& c) {
    const TrainConfig tc = train_config_from(c.cfg);
    const NetworkSpec spec = require_checkpoint(c.cfg);
    const Dataset test = require_dataset(c.cfg, "test");
    Corruption corr;
    corr.kind = parse_corruption_kind(c.cfg.get("robustness.corruption"));
    corr.seed = c.cfg.get_u64("robustness.seed");
    corr.rows = test.rows;
    corr.cols = test.cols;
    std::ostringstream csv;
    csv << "level,accuracy\n";
    json rows = json::array();
    for (double level : c.cfg.get_doubles("robustness.levels")) {
        corr.level = level;
        const EvalResult ev = evaluate(spec, test, tc, corr);
        csv << csv_num(level) << ',' << csv_num(ev.accuracy) << '\n';
        rows.push_back({{"level", level}, {"accuracy", ev.accuracy}});
    }
    write_text(c.out_dir / "robustness.csv", csv.str());
    emit(c.out, {{"command", "robustness"}, {"corruption", to_string(corr.kind)}, {"results", rows}});
    return 0;
}

std::vector<double> rates_from_metrics(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open metrics file " + path.string());
    std::string line, last;
    while (std::getline(in, line))
        if (!line.empty()) last = line;
    if (last.empty()) throw FormatError(0, path.string() + ": no metrics records");
    try {
        return json::parse(last).at("firing_rates").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw FormatError(0, path.string() + ": last record has no firing_rates (" + e.what() + ")");
    }
}

int cmd_energy(Context& c) {
    const NetworkSpec spec = require_checkpoint(c.cfg);
    EnergyModel model;
    model.e_mac = c.cfg.get_double("energy.e_mac");
    model.e_ac = c.cfg.get_double("energy.e_ac");
    const auto steps = c.cfg.get_int("energy.timesteps");
    model.timesteps = static_cast<int>(steps > 0 ? steps : c.cfg.get_int("train.T"));
    std::vector<double> rates;
    if (!c.cfg.get("energy.rates").empty()) rates = c.cfg.get_doubles("energy.rates");
    else if (!c.cfg.get("energy.metrics").empty()) rates = rates_from_metrics(c.cfg.get("energy.metrics"));
    else throw Error(ErrorKind::usage, "config energy.rates or energy.metrics must supply firing rates");

    const auto costs = network_costs(spec, rates, c.cfg.get_bool("energy.mac_first"));
    const EnergyReport rep = estimate_energy(costs, model);
    std::ostringstream csv;
    csv << "layer,op,flops,rate,joules\n";
    json layers = json::array();
    for (std::size_t i = 0; i < costs.size(); ++i) {
        csv << costs[i].name << ',' << to_string(costs[i].op) << ',' << csv_num(costs[i].flops) << ','
            << csv_num(costs[i].rate) << ',' << csv_num(rep.layers[i].joules) << '\n';
        layers.push_back({{"layer", costs[i].name}, {"op", to_string(costs[i].op)}, {"joules", rep.layers[i].joules}});
    }
    csv << "total,,,," << csv_num(rep.total) << '\n';
    write_text(c.out_dir / "energy.csv", csv.str());
    json j = {{"command", "energy"}, {"total_joules", rep.total}, {"total_mJ", rep.total * 1e3},
              {"timesteps", model.timesteps}, {"layers", layers}};
    if (c.cfg.is_set("energy.e_mac") || c.cfg.is_set("energy.e_ac"))
        j["note"] = "per-operation energies overridden by configuration";
    emit(c.out, j);
    return 0;
}

struct PlotArgs {
    std::string input;
    std::string x;
    std::vector<std::string> y;
    std::string output;
    std::string title;
};

int cmd_plot(const PlotArgs& a, std::ostream& out) {
    const CsvTable t = read_csv_table(a.input);
    const auto xi = t.column_index(a.x);
    std::vector<PlotSeries> series;
    std::vector<std::string> ys = a.y;
    if (ys.empty())
        for (const auto& h : t.header)
            if (h != a.x) ys.push_back(h);
    for (const auto& name : ys) series.push_back({name, t.columns[xi], t.columns[t.column_index(name)]});
    PlotOptions opts;
    opts.title = a.title.empty() ? fs::path(a.input).filename().string() : a.title;
    opts.x_label = a.x;
    const std::string out_path = a.output.empty() ? fs::path(a.input).replace_extension(".svg").string() : a.output;
    write_text(out_path, render_svg(series, opts));
    emit(out, {{"command", "plot"}, {"svg", out_path}, {"series", ys}});
    return 0;
}

void report_error(std::ostream& err, ErrorKind kind, const std::string& message) {
    const json j = {{"error", {{"kind", to_string(kind)}, {"message", message}, {"exit_code", exit_code_for(kind)}}}};
    err << j.dump() << std::endl;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fractional-order spiking neural networks"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Expand help for every subcommand");

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "Configuration file (INI)");
        sub->add_option("-s,--set", overrides, "Override a key: section.key=value (repeatable)");
        sub->add_option("-o,--out", out_dir, "Output directory (same as output.dir)");
    };
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"solve-fde", "Integrate a built-in fractional ODE and compare with its closed form"},
        {"simulate-neuron", "Simulate a single fractional LIF/IF neuron"},
        {"train", "Train a network and write metrics, checkpoint and confusion matrix"},
        {"eval", "Evaluate a checkpoint on the test split"},
        {"gradcheck", "Compare adjoint gradients with central finite differences"},
        {"robustness", "Accuracy of a checkpoint under increasing input corruption"},
        {"energy", "Inference energy estimate from a checkpoint and firing rates"},
    };
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        subs[name] = app.add_subcommand(name, help);
        add_common(subs[name]);
    }
    PlotArgs plot;
    CLI::App* plot_cmd = app.add_subcommand("plot", "Render CSV columns as an SVG line chart");
    plot_cmd->add_option("input", plot.input, "CSV file")->required();
    plot_cmd->add_option("--x", plot.x, "x column")->required();
    plot_cmd->add_option("--y", plot.y, "y columns (default: all others)")->delimiter(',');
    plot_cmd->add_option("--output", plot.output, "SVG path (default: input with .svg)");
    plot_cmd->add_option("--title", plot.title, "Chart title");

    std::vector<std::string> argv_rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        report_error(err, ErrorKind::usage, e.what());
        return exit_code_for(ErrorKind::usage);
    }

    try {
        if (plot_cmd->parsed()) return cmd_plot(plot, out);
        Config cfg = config_path.empty() ? Config() : Config::load(config_path);
        for (const auto& o : overrides) cfg.apply_override(o);
        if (!out_dir.empty()) cfg.set("output.dir", out_dir);
        Context ctx{cfg, prepare_output(cfg), out};
        if (subs["solve-fde"]->parsed()) return cmd_solve_fde(ctx);
        if (subs["simulate-neuron"]->parsed()) return cmd_simulate_neuron(ctx);
        if (subs["train"]->parsed()) return cmd_train(ctx);
        if (subs["eval"]->parsed()) return cmd_eval(ctx);
        if (subs["gradcheck"]->parsed()) return cmd_gradcheck(ctx);
        if (subs["robustness"]->parsed()) return cmd_robustness(ctx);
        if (subs["energy"]->parsed()) return cmd_energy(ctx);
        report_error(err, ErrorKind::usage, "no subcommand");
        return 1;
    } catch (const Error& e) {
        report_error(err, e.kind(), e.what());
        return exit_code_for(e.kind());
    } catch (const std::invalid_argument& e) {
        report_error(err, ErrorKind::usage, e.what());
        return exit_code_for(ErrorKind::usage);
    } catch (const std::exception& e) {
        report_error(err, ErrorKind::numerical, e.what());
        return exit_code_for(ErrorKind::numerical);
    }
}

int run_cli(int argc, char** argv) {
    return run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

} // namespace fspike
