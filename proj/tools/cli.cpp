#include "cli.hpp"

#include "spikeglm/estimator.hpp"
#include "spikeglm/io.hpp"
#include "spikeglm/model.hpp"
#include "spikeglm/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>

namespace spikeglm::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Options of one subcommand. Each value can come from its flag or from the
// JSON config file (keys are the long flag names); a flag on the command line
// wins over the file. The merged values are echoed as the effective config.
class Settings {
public:
    explicit Settings(CLI::App* app) : app_(app)
    {
        app_->add_option("--config", config_path_, "JSON file with option values (flags override)");
    }

    template <class T>
    void bind(const std::string& name, T& target, const std::string& help)
    {
        auto* opt = app_->add_option("--" + name, target, help)->capture_default_str();
        add(name, opt, target);
    }

    void flag(const std::string& name, bool& target, const std::string& help)
    {
        auto* opt = app_->add_flag("--" + name, target, help);
        add(name, opt, target);
    }

    // Reads the config file, if any. Call after parsing.
    void merge()
    {
        if (config_path_.empty())
            return;
        std::ifstream in(config_path_);
        if (!in)
            throw UsageError("cannot open config file '" + config_path_ + "'");
        json cfg;
        try {
            cfg = json::parse(in);
        } catch (const json::parse_error& e) {
            throw UsageError("config file '" + config_path_ + "': " + e.what());
        }
        if (!cfg.is_object())
            throw UsageError("config file '" + config_path_ + "': expected an object");
        for (const auto& [key, value] : cfg.items()) {
            auto it = std::find_if(entries_.begin(), entries_.end(),
                                   [&](const Entry& e) { return e.name == key; });
            if (it == entries_.end())
                throw UsageError("config file '" + config_path_ + "': unknown option '" + key +
                                 "' for '" + app_->get_name() + "'");
            if (it->opt->count() > 0)
                continue;
            try {
                it->load(value);
            } catch (const json::exception&) {
                throw UsageError("config file '" + config_path_ + "': bad value for '" + key + "'");
            }
            it->from_config = true;
        }
    }

    bool given(const std::string& name) const
    {
        for (const auto& e : entries_)
            if (e.name == name)
                return e.opt->count() > 0 || e.from_config;
        return false;
    }

    json effective() const
    {
        json j = json::object();
        for (const auto& e : entries_)
            e.store(j);
        return j;
    }

private:
    struct Entry {
        std::string name;
        CLI::Option* opt;
        std::function<void(const json&)> load;
        std::function<void(json&)> store;
        bool from_config = false;
    };

    template <class T>
    void add(const std::string& name, CLI::Option* opt, T& target)
    {
        entries_.push_back({name, opt, [&target](const json& v) { target = v.get<T>(); },
                            [&target, name](json& j) { j[name] = target; }});
    }

    CLI::App* app_;
    std::string config_path_;
    std::vector<Entry> entries_;
};

struct Shared {
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::string out_dir = ".";
};

void bind_shared(Settings& s, Shared& shared)
{
    s.bind("seed", shared.seed, "Random seed");
    s.bind("threads", shared.threads, "Worker threads (0 = all available)");
    s.bind("out-dir", shared.out_dir, "Directory for output files");
}

fs::path output_path(const Shared& shared, const std::string& file)
{
    fs::create_directories(shared.out_dir);
    return fs::path(shared.out_dir) / file;
}

std::string fmt(double v)
{
    return format_double(v);
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    Shared shared;
    std::string preset = "paper-fig2";
    std::string spec;
    std::size_t K = 0;
};

int cmd_simulate(SimulateArgs& a, const Settings& settings, bool seed_given, std::ostream& out)
{
    NetworkSpec spec = a.spec.empty() ? preset_spec(a.preset) : load_network_spec(a.spec);
    if (a.K > 0)
        spec.K = a.K;
    const std::uint64_t seed = seed_given ? a.shared.seed : spec.seed;
    Experiment ex = simulate_experiment(spec, seed);
    const auto& train = ex.generation.train;

    ModelDocument doc;
    doc.kind = "ground-truth";
    doc.theta = ex.network.theta;
    doc.unknown = {ex.network.kernels, ex.delta_u, spec.prior};
    doc.seed = seed;
    doc.config = settings.effective();
    doc.config["seed"] = seed;
    doc.config["network"] = network_spec_to_json(ex.network.spec);
    doc.config["generation"] = {{"saturated", ex.generation.saturated},
                                {"max_tau_lambda", ex.generation.max_tau_lambda}};

    const auto spikes_path = output_path(a.shared, "spikes.csv");
    const auto truth_path = output_path(a.shared, "truth.json");
    write_spike_csv(train, spikes_path.string());
    write_model(doc, truth_path.string());

    out << "simulated " << train.bins() << " bins x " << train.neurons() << " neurons (tau "
        << fmt(train.tau()) << ", seed " << seed << ")\n";
    out << "spikes per neuron:";
    for (std::size_t c = 0; c < train.neurons(); ++c)
        out << ' ' << train.total(c);
    out << "\nmax tau*lambda: " << fmt(ex.generation.max_tau_lambda) << " (saturated pairs "
        << ex.generation.saturated << ")\n";
    out << "wrote " << spikes_path.string() << " and " << truth_path.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    Shared shared;
    std::string spikes;
    std::string gamma = "from-truth";
    std::string truth;
    std::size_t I = 2;
    std::size_t M = 5;
    std::size_t Q = 50;
    std::size_t R = 5;
    double l = 1.0;
    double em_tol = 1e-6;
    int em_max_iters = 100;
    double inner_tol = 1e-8;
    int inner_max_iters = 200;
    bool no_baseline = false;
    double prior_shape = 50.0;
    double prior_scale = 0.0;
};

UnknownKernels kernels_from_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot open gamma file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError("gamma file '" + path + "': " + e.what());
    }
    if (j.is_object() && j.contains("format"))
        return model_from_json(j).unknown.kernels;
    // Bare form: {"gamma": [neuron][source][lag]}.
    if (!j.is_object() || j.size() != 1 || !j.contains("gamma"))
        throw FormatError("gamma file '" + path + "': expected a model document or {\"gamma\": ...}");
    const auto g = j.at("gamma").get<std::vector<std::vector<std::vector<double>>>>();
    if (g.empty() || g[0].empty() || g[0][0].empty())
        throw FormatError("gamma file '" + path + "': empty gamma table");
    UnknownKernels k(g.size(), g[0].size(), g[0][0].size());
    for (std::size_t c = 0; c < g.size(); ++c) {
        if (g[c].size() != k.sources())
            throw FormatError("gamma file '" + path + "': ragged source dimension");
        for (std::size_t i = 0; i < k.sources(); ++i) {
            if (g[c][i].size() != k.memory())
                throw FormatError("gamma file '" + path + "': ragged lag dimension");
            for (std::size_t m = 1; m <= k.memory(); ++m)
                k(c, i, m) = g[c][i][m - 1];
        }
    }
    k.validate();
    return k;
}

void check_dim(const Settings& s, const char* name, std::size_t flag_value, std::size_t actual)
{
    if (s.given(name) && flag_value != actual)
        throw UsageError(std::string("--") + name + " " + std::to_string(flag_value) +
                         " disagrees with the gamma kernels (" + std::to_string(actual) + ")");
}

int cmd_fit(FitArgs& a, Settings& settings, std::ostream& out)
{
    if (a.spikes.empty())
        throw UsageError("fit: --spikes is required");
    const SpikeTrain train = read_spike_csv(a.spikes);

    std::optional<ModelDocument> truth;
    if (!a.truth.empty())
        truth = read_model(a.truth);

    UnknownKernels kernels;
    if (a.gamma == "zero") {
        kernels = UnknownKernels(train.neurons(), a.I, a.M);
    } else if (a.gamma == "from-truth") {
        if (!truth)
            throw UsageError("fit: --gamma from-truth needs --truth <model document>");
        kernels = truth->unknown.kernels;
    } else {
        kernels = kernels_from_file(a.gamma);
    }
    check_dim(settings, "I", a.I, kernels.sources());
    check_dim(settings, "M", a.M, kernels.memory());
    a.I = kernels.sources();
    a.M = kernels.memory();
    if (kernels.neurons() != train.neurons())
        throw UsageError("fit: gamma kernels cover " + std::to_string(kernels.neurons()) +
                         " neurons but the spike file has " + std::to_string(train.neurons()));
    if (truth) {
        if (!settings.given("Q"))
            a.Q = truth->theta.intrinsic_len();
        if (!settings.given("R"))
            a.R = truth->theta.extrinsic_len();
        if (!settings.given("prior-shape"))
            a.prior_shape = truth->unknown.prior.shape;
    }
    // Scale 0 selects the zero-mean prior, matching mean-centred activities.
    const LogGammaPrior prior =
        a.prior_scale > 0.0 ? LogGammaPrior{a.prior_shape, a.prior_scale} : zero_mean_prior(a.prior_shape);

    FitConfig cfg;
    cfg.Q = a.Q;
    cfg.R = a.R;
    cfg.M = a.M;
    cfg.I = a.I;
    cfg.l = a.l;
    cfg.em_max_iters = a.em_max_iters;
    cfg.inner_max_iters = a.inner_max_iters;
    cfg.em_tol = a.em_tol;
    cfg.inner_tol = a.inner_tol;
    cfg.seed = a.shared.seed;
    cfg.threads = a.shared.threads;

    json effective = settings.effective();
    effective["prior-scale-used"] = prior.scale;

    FitResult fit = em_fit(train, kernels, prior, cfg);
    ModelDocument doc;
    doc.kind = "fit";
    doc.theta = fit.theta;
    doc.unknown = {kernels, fit.delta_u, prior};
    doc.report = fit.report;
    doc.config = effective;
    doc.seed = cfg.seed;
    const auto model_path = output_path(a.shared, "model.json");
    const auto trace_path = output_path(a.shared, "trace.csv");
    write_model(doc, model_path.string());
    write_trace_csv(fit.report, trace_path.string());

    out << std::setprecision(10);
    out << "with unknowns: final loglik " << fit.report.ll_trace.back() << " after "
        << fit.report.em_iters << " EM iterations" << (fit.report.converged ? "" : " (not converged)")
        << '\n';
    if (!a.no_baseline) {
        FitResult base = fit_without_unknowns(train, cfg, &fit.report.m_sweeps);
        ModelDocument bdoc;
        bdoc.kind = "baseline";
        bdoc.theta = base.theta;
        bdoc.unknown = {kernels, Grid<double>(kernels.sources(), train.bins()), prior};
        bdoc.report = base.report;
        bdoc.config = effective;
        bdoc.seed = cfg.seed;
        write_model(bdoc, output_path(a.shared, "baseline.json").string());
        write_trace_csv(base.report, output_path(a.shared, "baseline_trace.csv").string());
        const double gap = fit.report.ll_trace.back() - base.report.ll_trace.back();
        out << "without unknowns: final loglik " << base.report.ll_trace.back() << '\n';
        out << "gain from unknowns: " << gap << '\n';
    }
    out << fit.report.identifiability_summary() << '\n';
    if (!fit.report.inner_converged)
        out << "note: some inner solves stopped at their sweep cap\n";
    out << "wrote " << model_path.string() << " and " << trace_path.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    Shared shared;
    std::string model;
    std::string spikes;
    bool exclude_partial_tail = false;
};

SpikeTrain drop_last_bin(const SpikeTrain& t)
{
    SpikeTrain out(t.bins() - 1, t.neurons(), t.tau(), t.start_time());
    for (std::size_t k = 0; k + 1 < t.bins(); ++k)
        for (std::size_t c = 0; c < t.neurons(); ++c)
            out.set(k, c, t(k, c));
    return out;
}

int cmd_eval(EvalArgs& a, std::ostream& out)
{
    if (a.model.empty() || a.spikes.empty())
        throw UsageError("eval: --model and --spikes are required");
    ModelDocument doc = read_model(a.model);
    SpikeTrain train = read_spike_csv(a.spikes);
    if (doc.theta.neurons() != train.neurons())
        throw UsageError("eval: model has " + std::to_string(doc.theta.neurons()) +
                         " neurons but the spike file has " + std::to_string(train.neurons()));
    if (doc.unknown.delta_u.cols() != train.bins())
        throw UsageError("eval: model activities cover " +
                         std::to_string(doc.unknown.delta_u.cols()) + " bins but the spike file has " +
                         std::to_string(train.bins()));
    Grid<double> du = doc.unknown.delta_u;
    if (a.exclude_partial_tail && train.partial_tail() && train.bins() > 1) {
        train = drop_last_bin(train);
        Grid<double> cut(du.rows(), train.bins());
        for (std::size_t i = 0; i < du.rows(); ++i)
            for (std::size_t k = 0; k < train.bins(); ++k)
                cut(i, k) = du(i, k);
        du = std::move(cut);
    }
    const unsigned threads = a.shared.threads;
    const auto omega = omega_table(doc.theta, train, threads);
    const auto lam_u = lambda_u_table(doc.unknown.kernels, du, train.bins(), threads);
    const double total = log_likelihood(train, omega, lam_u);
    const auto per = log_likelihood_per_neuron(train, omega, lam_u);
    out << std::setprecision(17);
    out << "loglik " << total << '\n';
    for (std::size_t c = 0; c < per.size(); ++c)
        out << "neuron " << c + 1 << ' ' << per[c] << '\n';
    return 0;
}

// ---------------------------------------------------------------- rebin / bin

struct RebinArgs {
    Shared shared;
    std::string spikes;
    std::size_t factor = 1;
    std::string out_file = "spikes_rebinned.csv";
};

int cmd_rebin(RebinArgs& a, std::ostream& out)
{
    if (a.spikes.empty())
        throw UsageError("rebin: --spikes is required");
    if (a.factor == 0)
        throw UsageError("rebin: --factor must be at least 1");
    const SpikeTrain in = read_spike_csv(a.spikes);
    const SpikeTrain r = rebin(in, a.factor);
    const auto path = output_path(a.shared, a.out_file);
    write_spike_csv(r, path.string());
    out << "rebinned " << in.bins() << " -> " << r.bins() << " bins (tau " << fmt(r.tau()) << ")"
        << (r.partial_tail() ? ", last bin partial" : "") << '\n';
    out << "wrote " << path.string() << '\n';
    return 0;
}

struct BinArgs {
    Shared shared;
    std::string events;
    double tau = 0.05;
    std::string mode = "binary";
    std::string out_file = "spikes.csv";
};

int cmd_bin(BinArgs& a, std::ostream& out)
{
    if (a.events.empty())
        throw UsageError("bin: --events is required");
    if (a.mode != "binary" && a.mode != "count")
        throw UsageError("bin: --mode must be binary or count");
    const EventList ev = read_event_csv(a.events);
    const auto b = bin_events(ev, a.tau, a.mode == "binary" ? BinMode::binary : BinMode::count);
    const auto path = output_path(a.shared, a.out_file);
    write_spike_csv(b.train, path.string());
    out << "binned " << ev.events.size() << " events into " << b.train.bins() << " bins x "
        << b.train.neurons() << " neurons";
    if (a.mode == "binary")
        out << " (" << b.clipped << " clipped)";
    out << "\nwrote " << path.string() << '\n';
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Point-process GLM fitting with latent unknown inputs", "spikeglm"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* sim_app = app.add_subcommand("simulate", "Generate a spike train and its ground truth");
    Settings sim_s(sim_app);
    bind_shared(sim_s, sim.shared);
    sim_s.bind("preset", sim.preset, "Built-in network preset");
    sim_s.bind("spec", sim.spec, "Network spec JSON file (overrides --preset)");
    sim_s.bind("K", sim.K, "Number of bins (0 = from the network)");

    FitArgs fit;
    auto* fit_app = app.add_subcommand("fit", "Fit the model with and without unknowns");
    Settings fit_s(fit_app);
    bind_shared(fit_s, fit.shared);
    fit_s.bind("spikes", fit.spikes, "Spike CSV");
    fit_s.bind("gamma", fit.gamma, "Unknown kernels: a JSON file, 'zero' or 'from-truth'");
    fit_s.bind("truth", fit.truth, "Ground-truth model document");
    fit_s.bind("I", fit.I, "Unknown sources");
    fit_s.bind("M", fit.M, "Unknown kernel memory");
    fit_s.bind("Q", fit.Q, "Intrinsic memory");
    fit_s.bind("R", fit.R, "Extrinsic memory");
    fit_s.bind("l", fit.l, "E-step relaxation in (0, 2)");
    fit_s.bind("em-tol", fit.em_tol, "Relative log-likelihood change that stops EM");
    fit_s.bind("em-max-iters", fit.em_max_iters, "EM iteration cap");
    fit_s.bind("inner-tol", fit.inner_tol, "Inner fixed-point tolerance");
    fit_s.bind("inner-max-iters", fit.inner_max_iters, "Inner sweep cap");
    fit_s.flag("no-baseline", fit.no_baseline, "Skip the fit without unknowns");
    fit_s.bind("prior-shape", fit.prior_shape, "log-Gamma prior shape");
    fit_s.bind("prior-scale", fit.prior_scale, "log-Gamma prior scale (0 = zero-mean scale)");

    EvalArgs ev;
    auto* eval_app = app.add_subcommand("eval", "Log-likelihood of a model on a spike train");
    Settings eval_s(eval_app);
    bind_shared(eval_s, ev.shared);
    eval_s.bind("model", ev.model, "Model document");
    eval_s.bind("spikes", ev.spikes, "Spike CSV");
    eval_s.flag("exclude-partial-tail", ev.exclude_partial_tail,
                "Drop a flagged partial last bin before evaluating");

    RebinArgs rb;
    auto* rebin_app = app.add_subcommand("rebin", "Sum consecutive bins of a spike train");
    Settings rebin_s(rebin_app);
    bind_shared(rebin_s, rb.shared);
    rebin_s.bind("spikes", rb.spikes, "Spike CSV");
    rebin_s.bind("factor", rb.factor, "Bins per output bin");
    rebin_s.bind("out", rb.out_file, "Output file name inside --out-dir");

    BinArgs bn;
    auto* bin_app = app.add_subcommand("bin", "Bin an event-list CSV into a spike train");
    Settings bin_s(bin_app);
    bind_shared(bin_s, bn.shared);
    bin_s.bind("events", bn.events, "Event CSV");
    bin_s.bind("tau", bn.tau, "Bin width in seconds");
    bin_s.bind("mode", bn.mode, "binary or count");
    bin_s.bind("out", bn.out_file, "Output file name inside --out-dir");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (sim_app->parsed()) {
            sim_s.merge();
            return cmd_simulate(sim, sim_s, sim_s.given("seed"), out);
        }
        if (fit_app->parsed()) {
            fit_s.merge();
            return cmd_fit(fit, fit_s, out);
        }
        if (eval_app->parsed()) {
            eval_s.merge();
            return cmd_eval(ev, out);
        }
        if (rebin_app->parsed()) {
            rebin_s.merge();
            return cmd_rebin(rb, out);
        }
        if (bin_app->parsed()) {
            bin_s.merge();
            return cmd_bin(bn, out);
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace spikeglm::cli
