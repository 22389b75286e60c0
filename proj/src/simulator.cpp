#include "spikeglm/simulator.hpp"

#include "spikeglm/model.hpp"

#include "presets_generated.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace spikeglm {

using nlohmann::json;

double KernelShape::at(std::size_t lag) const
{
    if (lag == 0 || (length != 0 && lag > length))
        return 0.0;
    const double x = static_cast<double>(lag - 1);
    switch (family) {
    case KernelFamily::zero:
        return 0.0;
    case KernelFamily::sinc: {
        const double arg = std::numbers::pi * x / width;
        return arg == 0.0 ? -amplitude : -amplitude * std::sin(arg) / arg;
    }
    case KernelFamily::exponential:
        return amplitude * std::exp(-x / width);
    }
    return 0.0;
}

void NetworkSpec::validate() const
{
    if (C == 0)
        throw ArgumentError("network spec: need at least one neuron");
    if (alpha.size() != C)
        throw ArgumentError("network spec: alpha must have one entry per neuron");
    if (intrinsic.size() != C)
        throw ArgumentError("network spec: intrinsic needs one kernel per neuron");
    if (K == 0)
        throw ArgumentError("network spec: K must be at least 1");
    if (!(tau > 0.0))
        throw ArgumentError("network spec: tau must be positive");
    if (!(max_saturated_fraction >= 0.0 && max_saturated_fraction <= 1.0))
        throw ArgumentError("network spec: max_saturated_fraction must lie in [0, 1]");
    prior.validate();
    for (const auto& k : intrinsic)
        if (!(k.width > 0.0))
            throw ArgumentError("network spec: kernel width must be positive");
    for (const auto& e : extrinsic_edges) {
        if (e.source >= C || e.target >= C)
            throw ArgumentError("network spec: extrinsic edge endpoint out of range");
        if (e.source == e.target)
            throw ArgumentError("network spec: extrinsic edge must connect two distinct neurons");
        if (e.sign != 1 && e.sign != -1)
            throw ArgumentError("network spec: extrinsic edge sign must be +1 or -1");
        if (!(e.shape.amplitude >= 0.0) || !(e.shape.width > 0.0))
            throw ArgumentError("network spec: extrinsic amplitude must be >= 0, width > 0");
    }
    for (const auto& e : unknown_edges) {
        if (e.source >= I || e.target >= C)
            throw ArgumentError("network spec: unknown edge endpoint out of range");
        if (e.shape.family == KernelFamily::sinc)
            throw ArgumentError("network spec: unknown kernels must be non-negative");
        if (!(e.shape.amplitude >= 0.0) || !(e.shape.width > 0.0))
            throw ArgumentError("network spec: unknown amplitude must be >= 0, width > 0");
    }
}

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why)
{
    throw FormatError("network spec field '" + field + "': " + why);
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where)
{
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed)
            ok = ok || key == a;
        if (!ok)
            bad_field(where + key, "unknown field");
    }
}

template <class T>
T get_field(const json& obj, const std::string& key, const std::string& where)
{
    if (!obj.contains(key))
        bad_field(where + key, "missing");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        bad_field(where + key, e.what());
    }
}

template <class T>
T get_field_or(const json& obj, const std::string& key, T fallback, const std::string& where)
{
    return obj.contains(key) ? get_field<T>(obj, key, where) : fallback;
}

KernelFamily family_from_string(const std::string& s, const std::string& where)
{
    if (s == "zero")
        return KernelFamily::zero;
    if (s == "sinc")
        return KernelFamily::sinc;
    if (s == "exponential")
        return KernelFamily::exponential;
    bad_field(where + "family", "expected zero, sinc or exponential, got '" + s + "'");
}

const char* family_name(KernelFamily f)
{
    switch (f) {
    case KernelFamily::zero:
        return "zero";
    case KernelFamily::sinc:
        return "sinc";
    case KernelFamily::exponential:
        return "exponential";
    }
    return "zero";
}

KernelShape shape_from_json(const json& obj, const std::string& where)
{
    KernelShape s;
    s.family = family_from_string(get_field<std::string>(obj, "family", where), where);
    s.amplitude = get_field_or<double>(obj, "amplitude", 0.0, where);
    s.width = get_field_or<double>(obj, "width", 1.0, where);
    s.length = get_field_or<std::size_t>(obj, "length", 0, where);
    return s;
}

json shape_to_json(const KernelShape& s)
{
    json j = {{"family", family_name(s.family)}, {"amplitude", s.amplitude}, {"width", s.width}};
    if (s.length != 0)
        j["length"] = s.length;
    return j;
}

std::size_t one_based(const json& obj, const std::string& key, std::size_t limit,
                      const std::string& where)
{
    const auto v = get_field<long long>(obj, key, where);
    if (v < 1 || static_cast<std::size_t>(v) > limit)
        bad_field(where + key, "id " + std::to_string(v) + " outside 1.." + std::to_string(limit));
    return static_cast<std::size_t>(v - 1);
}

}  // namespace

NetworkSpec network_spec_from_json(const json& doc)
{
    if (!doc.is_object())
        throw FormatError("network spec: document must be an object");
    reject_unknown_keys(doc,
                        {"name", "notes", "neurons", "unknowns", "Q", "R", "M", "alpha",
                         "intrinsic", "extrinsic_edges", "unknown_edges", "prior", "tau", "K",
                         "seed", "max_saturated_fraction"},
                        "");
    NetworkSpec s;
    s.name = get_field_or<std::string>(doc, "name", "custom", "");
    s.C = get_field<std::size_t>(doc, "neurons", "");
    s.I = get_field<std::size_t>(doc, "unknowns", "");
    s.Q = get_field<std::size_t>(doc, "Q", "");
    s.R = get_field<std::size_t>(doc, "R", "");
    s.M = get_field<std::size_t>(doc, "M", "");
    s.alpha = get_field<std::vector<double>>(doc, "alpha", "");
    s.tau = get_field_or<double>(doc, "tau", s.tau, "");
    s.K = get_field_or<std::size_t>(doc, "K", s.K, "");
    s.seed = get_field_or<std::uint64_t>(doc, "seed", s.seed, "");
    s.max_saturated_fraction =
        get_field_or<double>(doc, "max_saturated_fraction", s.max_saturated_fraction, "");

    if (doc.contains("prior")) {
        const auto& p = doc.at("prior");
        reject_unknown_keys(p, {"shape", "scale"}, "prior.");
        s.prior.shape = get_field<double>(p, "shape", "prior.");
        s.prior.scale = get_field<double>(p, "scale", "prior.");
    }

    if (!doc.contains("intrinsic"))
        bad_field("intrinsic", "missing");
    const auto& intr = doc.at("intrinsic");
    if (intr.is_object()) {
        reject_unknown_keys(intr, {"family", "amplitude", "width", "length"}, "intrinsic.");
        s.intrinsic.assign(s.C, shape_from_json(intr, "intrinsic."));
    } else if (intr.is_array()) {
        for (std::size_t n = 0; n < intr.size(); ++n) {
            const std::string where = "intrinsic[" + std::to_string(n) + "].";
            reject_unknown_keys(intr[n], {"family", "amplitude", "width", "length"}, where);
            s.intrinsic.push_back(shape_from_json(intr[n], where));
        }
    } else {
        bad_field("intrinsic", "expected an object or an array of objects");
    }

    for (std::size_t n = 0; doc.contains("extrinsic_edges") && n < doc.at("extrinsic_edges").size();
         ++n) {
        const auto& e = doc.at("extrinsic_edges")[n];
        const std::string where = "extrinsic_edges[" + std::to_string(n) + "].";
        reject_unknown_keys(e, {"source", "target", "sign", "family", "amplitude", "width", "length"},
                            where);
        ExtrinsicEdge edge;
        edge.source = one_based(e, "source", s.C, where);
        edge.target = one_based(e, "target", s.C, where);
        edge.sign = get_field<int>(e, "sign", where);
        edge.shape = shape_from_json(e, where);
        s.extrinsic_edges.push_back(edge);
    }
    for (std::size_t n = 0; doc.contains("unknown_edges") && n < doc.at("unknown_edges").size();
         ++n) {
        const auto& e = doc.at("unknown_edges")[n];
        const std::string where = "unknown_edges[" + std::to_string(n) + "].";
        reject_unknown_keys(e, {"source", "target", "family", "amplitude", "width", "length"}, where);
        UnknownEdge edge;
        edge.source = one_based(e, "source", s.I, where);
        edge.target = one_based(e, "target", s.C, where);
        edge.shape = shape_from_json(e, where);
        s.unknown_edges.push_back(edge);
    }
    try {
        s.validate();
    } catch (const ArgumentError& e) {
        throw FormatError(e.what());
    }
    return s;
}

json network_spec_to_json(const NetworkSpec& s)
{
    json doc = {{"name", s.name},
                {"neurons", s.C},
                {"unknowns", s.I},
                {"Q", s.Q},
                {"R", s.R},
                {"M", s.M},
                {"alpha", s.alpha},
                {"prior", {{"shape", s.prior.shape}, {"scale", s.prior.scale}}},
                {"tau", s.tau},
                {"K", s.K},
                {"seed", s.seed},
                {"max_saturated_fraction", s.max_saturated_fraction}};
    json intr = json::array();
    for (const auto& k : s.intrinsic)
        intr.push_back(shape_to_json(k));
    doc["intrinsic"] = intr;
    json ext = json::array();
    for (const auto& e : s.extrinsic_edges) {
        json j = shape_to_json(e.shape);
        j["source"] = e.source + 1;
        j["target"] = e.target + 1;
        j["sign"] = e.sign;
        ext.push_back(j);
    }
    doc["extrinsic_edges"] = ext;
    json unk = json::array();
    for (const auto& e : s.unknown_edges) {
        json j = shape_to_json(e.shape);
        j["source"] = e.source + 1;
        j["target"] = e.target + 1;
        unk.push_back(j);
    }
    doc["unknown_edges"] = unk;
    return doc;
}

NetworkSpec load_network_spec(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot open network spec '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError("network spec '" + path + "': " + e.what());
    }
    return network_spec_from_json(doc);
}

std::vector<std::string> preset_names()
{
    std::vector<std::string> names;
    for (const auto& p : presets::all)
        names.emplace_back(p.name);
    return names;
}

NetworkSpec preset_spec(std::string_view name)
{
    for (const auto& p : presets::all)
        if (p.name == name)
            return network_spec_from_json(json::parse(p.text));
    throw ArgumentError("unknown preset '" + std::string(name) + "'");
}

Network build_artificial_network(const NetworkSpec& spec)
{
    spec.validate();
    Network net{ModelTheta(spec.C, spec.Q, spec.R), UnknownKernels(spec.C, spec.I, spec.M), spec};
    for (std::size_t c = 0; c < spec.C; ++c) {
        net.theta.alpha(c) = spec.alpha[c];
        for (std::size_t lag = 1; lag <= spec.Q; ++lag)
            net.theta.intrinsic(c, lag) = spec.intrinsic[c].at(lag);
    }
    for (const auto& e : spec.extrinsic_edges)
        for (std::size_t lag = 1; lag <= spec.R; ++lag)
            net.theta.extrinsic(e.target, e.source, lag) += e.sign * e.shape.at(lag);
    for (const auto& e : spec.unknown_edges)
        for (std::size_t lag = 1; lag <= spec.M; ++lag)
            net.kernels(e.target, e.source, lag) += e.shape.at(lag);
    net.theta.validate();
    net.kernels.validate();
    return net;
}

Network build_artificial_network(std::string_view preset)
{
    return build_artificial_network(preset_spec(preset));
}

std::vector<double> sample_log_gamma(double shape, double scale, std::size_t n,
                                     std::mt19937_64& rng, bool mean_center)
{
    LogGammaPrior{shape, scale}.validate();
    std::gamma_distribution<double> gamma(shape, scale);
    std::vector<double> out(n);
    for (double& u : out)
        u = std::log(gamma(rng));
    if (mean_center && n > 0) {
        double mean = 0.0;
        for (double u : out)
            mean += u;
        mean /= static_cast<double>(n);
        for (double& u : out)
            u -= mean;
    }
    return out;
}

std::vector<double> sample_log_gamma(double shape, double scale, std::size_t n, std::uint64_t seed,
                                     bool mean_center)
{
    std::mt19937_64 rng(seed);
    return sample_log_gamma(shape, scale, n, rng, mean_center);
}

GenerationResult generate_spikes(const ModelTheta& theta, const UnknownKernels& kernels,
                                 const Grid<double>& delta_u, double tau, std::size_t bins,
                                 std::mt19937_64& rng, const GenerationOptions& options)
{
    const std::size_t C = theta.neurons();
    if (kernels.neurons() != C)
        throw ArgumentError("generate_spikes: kernels do not match the neuron count");
    if (delta_u.rows() != kernels.sources() || delta_u.cols() != bins)
        throw ArgumentError("generate_spikes: activity table must be I x K");
    theta.validate();
    kernels.validate();

    GenerationResult res{SpikeTrain(bins, C, tau), 0, 0.0, {}};
    if (options.record_intensity)
        res.intensity = Grid<double>(C, bins);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t k = 0; k < bins; ++k) {
        for (std::size_t c = 0; c < C; ++c) {
            const double log_lam =
                log_omega(theta, res.train, c, k) + log_lambda_u(kernels, delta_u, c, k);
            const double lam = std::exp(log_lam);
            if (!std::isfinite(lam))
                throw NumericRangeError("generate_spikes: intensity overflow at neuron " +
                                        std::to_string(c) + ", bin " + std::to_string(k));
            const double p = tau * lam;
            if (options.record_intensity)
                res.intensity(c, k) = lam;
            res.max_tau_lambda = std::max(res.max_tau_lambda, p);
            if (p >= 1.0)
                ++res.saturated;
            if (unif(rng) < p)
                res.train.set(k, c, 1);
        }
    }
    const double frac = static_cast<double>(res.saturated) / static_cast<double>(bins * C);
    if (frac > options.max_saturated_fraction) {
        std::ostringstream os;
        os << "tau * lambda >= 1 in " << res.saturated << " of " << bins * C
           << " (bin, neuron) pairs (fraction " << frac << " > " << options.max_saturated_fraction
           << "); use a smaller tau";
        throw GenerationError(os.str());
    }
    return res;
}

GenerationResult generate_spikes(const ModelTheta& theta, const UnknownKernels& kernels,
                                 const Grid<double>& delta_u, double tau, std::size_t bins,
                                 std::uint64_t seed, const GenerationOptions& options)
{
    std::mt19937_64 rng(seed);
    return generate_spikes(theta, kernels, delta_u, tau, bins, rng, options);
}

Experiment simulate_experiment(const NetworkSpec& spec, std::uint64_t seed)
{
    Experiment ex{build_artificial_network(spec), Grid<double>(spec.I, spec.K), {}};
    std::mt19937_64 rng(seed);
    const auto u = sample_log_gamma(spec.prior.shape, spec.prior.scale, spec.I * spec.K, rng, true);
    std::copy(u.begin(), u.end(), ex.delta_u.data().begin());
    GenerationOptions opts;
    opts.max_saturated_fraction = spec.max_saturated_fraction;
    ex.generation = generate_spikes(ex.network.theta, ex.network.kernels, ex.delta_u, spec.tau,
                                    spec.K, rng, opts);
    ex.network.spec.seed = seed;
    return ex;
}

Experiment simulate_experiment(std::string_view preset, std::uint64_t seed)
{
    return simulate_experiment(preset_spec(preset), seed);
}

}  // namespace spikeglm
