#include "spikeglm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace spikeglm {

using nlohmann::json;

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------- parsing

namespace {

std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep))
        out.push_back(trim(cell));
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

[[noreturn]] void fail_at(const std::string& what, std::size_t line, const std::string& why)
{
    throw FormatError(what + " line " + std::to_string(line) + ": " + why);
}

bool parse_double(const std::string& s, double& out)
{
    if (s.empty())
        return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

template <class Int>
bool parse_int(const std::string& s, Int& out)
{
    if (s.empty())
        return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw FormatError("cannot open '" + path + "' for writing");
    return out;
}

void finish_write(std::ofstream& out, const std::string& path)
{
    out.flush();
    if (!out)
        throw FormatError("write to '" + path + "' failed");
}

}  // namespace

// ---------------------------------------------------------------- events

void EventList::validate() const
{
    if (!(duration > 0.0) || !std::isfinite(duration))
        throw FormatError("event list: duration must be positive and finite");
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < events.size(); ++n) {
        const auto& e = events[n];
        const std::string where = "event " + std::to_string(n + 1) + ": ";
        if (e.neuron >= neurons)
            throw FormatError(where + "neuron id " + std::to_string(e.neuron + 1) +
                              " outside 1.." + std::to_string(neurons));
        if (!(e.time >= 0.0 && e.time < duration))
            throw FormatError(where + "timestamp " + format_double(e.time) +
                              " outside [0, duration)");
        if (e.time < prev)
            throw FormatError(where + "timestamps not sorted");
        prev = e.time;
    }
}

BinnedEvents bin_events(const EventList& events, double tau, BinMode mode)
{
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw ArgumentError("bin_events: tau must be positive");
    events.validate();
    const auto bins = static_cast<std::size_t>(std::ceil(events.duration / tau));
    BinnedEvents out{SpikeTrain(std::max<std::size_t>(bins, 1), events.neurons, tau), 0};
    for (const auto& e : events.events) {
        auto k = static_cast<std::size_t>(std::floor(e.time / tau));
        k = std::min(k, out.train.bins() - 1);
        const int cur = out.train(k, e.neuron);
        if (mode == BinMode::binary && cur >= 1)
            ++out.clipped;
        else
            out.train.set(k, e.neuron, cur + 1);
    }
    return out;
}

SpikeTrain rebin(const SpikeTrain& train, std::size_t factor)
{
    if (factor == 0)
        throw ArgumentError("rebin: factor must be at least 1");
    if (factor == 1)
        return train;
    const std::size_t K = train.bins();
    const std::size_t Kp = (K + factor - 1) / factor;
    SpikeTrain out(Kp, train.neurons(), train.tau() * static_cast<double>(factor), train.start_time());
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t c = 0; c < train.neurons(); ++c)
            out.set(k / factor, c, out(k / factor, c) + train(k, c));
    out.set_partial_tail(train.partial_tail() || K % factor != 0);
    return out;
}

EventList read_event_csv(std::istream& in)
{
    const std::string what = "event csv";
    EventList list;
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line))
        throw FormatError(what + ": empty input, expected 'duration=<seconds>'");
    ++lineno;
    bool have_duration = false;
    bool have_neurons = false;
    for (const auto& field : split(trim(line), ',')) {
        auto eq = field.find('=');
        if (eq == std::string::npos)
            fail_at(what, lineno, "expected key=value in header, got '" + field + "'");
        const std::string key = trim(field.substr(0, eq));
        const std::string val = trim(field.substr(eq + 1));
        if (key == "duration") {
            if (!parse_double(val, list.duration))
                fail_at(what, lineno, "bad duration '" + val + "'");
            have_duration = true;
        } else if (key == "neurons") {
            if (!parse_int(val, list.neurons) || list.neurons == 0)
                fail_at(what, lineno, "bad neuron count '" + val + "'");
            have_neurons = true;
        } else {
            fail_at(what, lineno, "unknown header key '" + key + "'");
        }
    }
    if (!have_duration)
        fail_at(what, lineno, "missing duration");
    if (!(list.duration > 0.0) || !std::isfinite(list.duration))
        fail_at(what, lineno, "duration must be positive");

    std::size_t max_id = 0;
    double prev = -std::numeric_limits<double>::infinity();
    bool first_row = true;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty())
            continue;
        auto cells = split(t, ',');
        if (first_row && cells.size() == 2 && cells[0] == "neuron" && cells[1] == "timestamp") {
            first_row = false;
            continue;
        }
        first_row = false;
        if (cells.size() != 2)
            fail_at(what, lineno, "expected 2 columns, got " + std::to_string(cells.size()));
        std::size_t id = 0;
        double time = 0.0;
        if (!parse_int(cells[0], id) || id == 0)
            fail_at(what, lineno, "bad neuron id '" + cells[0] + "'");
        if (have_neurons && id > list.neurons)
            fail_at(what, lineno, "neuron id " + cells[0] + " exceeds neurons=" +
                                      std::to_string(list.neurons));
        if (!parse_double(cells[1], time))
            fail_at(what, lineno, "bad timestamp '" + cells[1] + "'");
        if (!(time >= 0.0 && time < list.duration))
            fail_at(what, lineno, "timestamp " + cells[1] + " outside [0, duration)");
        if (time < prev)
            fail_at(what, lineno, "timestamps not sorted");
        prev = time;
        max_id = std::max(max_id, id);
        list.events.push_back({id - 1, time});
    }
    if (!have_neurons)
        list.neurons = max_id;
    if (list.neurons == 0)
        throw FormatError(what + ": no events and no 'neurons=' header, neuron count unknown");
    return list;
}

EventList read_event_csv(const std::string& path)
{
    auto in = open_in(path);
    return read_event_csv(in);
}

void write_event_csv(const EventList& events, std::ostream& out)
{
    out << "duration=" << format_double(events.duration) << ",neurons=" << events.neurons << '\n';
    out << "neuron,timestamp\n";
    for (const auto& e : events.events)
        out << e.neuron + 1 << ',' << format_double(e.time) << '\n';
}

// ---------------------------------------------------------------- spike matrix

SpikeTrain read_spike_csv(std::istream& in)
{
    const std::string what = "spike csv";
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line))
        throw FormatError(what + ": empty input, expected 'tau=<value>'");
    ++lineno;
    double tau = 0.0;
    double start = 0.0;
    bool partial = false;
    bool have_tau = false;
    for (const auto& field : split(trim(line), ',')) {
        auto eq = field.find('=');
        if (eq == std::string::npos)
            fail_at(what, lineno, "expected key=value in header, got '" + field + "'");
        const std::string key = trim(field.substr(0, eq));
        const std::string val = trim(field.substr(eq + 1));
        if (key == "tau") {
            if (!parse_double(val, tau) || !(tau > 0.0) || !std::isfinite(tau))
                fail_at(what, lineno, "bad tau '" + val + "'");
            have_tau = true;
        } else if (key == "start") {
            if (!parse_double(val, start) || !std::isfinite(start))
                fail_at(what, lineno, "bad start '" + val + "'");
        } else if (key == "partial_tail") {
            if (val != "0" && val != "1")
                fail_at(what, lineno, "partial_tail must be 0 or 1");
            partial = val == "1";
        } else {
            fail_at(what, lineno, "unknown header key '" + key + "'");
        }
    }
    if (!have_tau)
        fail_at(what, lineno, "missing tau");

    std::vector<int> counts;
    std::size_t cols = 0;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty())
            continue;
        auto cells = split(t, ',');
        if (rows == 0)
            cols = cells.size();
        else if (cells.size() != cols)
            fail_at(what, lineno, "expected " + std::to_string(cols) + " columns, got " +
                                      std::to_string(cells.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            int v = 0;
            if (!parse_int(cells[c], v))
                fail_at(what, lineno, "column " + std::to_string(c + 1) + ": bad integer '" +
                                          cells[c] + "'");
            if (v < 0)
                fail_at(what, lineno, "column " + std::to_string(c + 1) + ": negative count");
            counts.push_back(v);
        }
        ++rows;
    }
    if (rows == 0)
        throw FormatError(what + ": no bins");
    SpikeTrain train(rows, cols, tau, start);
    for (std::size_t k = 0; k < rows; ++k)
        for (std::size_t c = 0; c < cols; ++c)
            train.set(k, c, counts[k * cols + c]);
    train.set_partial_tail(partial);
    return train;
}

SpikeTrain read_spike_csv(const std::string& path)
{
    auto in = open_in(path);
    return read_spike_csv(in);
}

void write_spike_csv(const SpikeTrain& train, std::ostream& out)
{
    out << "tau=" << format_double(train.tau());
    if (train.start_time() != 0.0)
        out << ",start=" << format_double(train.start_time());
    if (train.partial_tail())
        out << ",partial_tail=1";
    out << '\n';
    for (std::size_t k = 0; k < train.bins(); ++k) {
        auto row = train.bin(k);
        for (std::size_t c = 0; c < row.size(); ++c)
            out << (c ? "," : "") << row[c];
        out << '\n';
    }
}

void write_spike_csv(const SpikeTrain& train, const std::string& path)
{
    auto out = open_out(path);
    write_spike_csv(train, out);
    finish_write(out, path);
}

// ---------------------------------------------------------------- model documents

namespace {

constexpr const char* kFormat = "spikeglm-model";
constexpr int kVersion = 1;

[[noreturn]] void bad_field(const std::string& field, const std::string& why)
{
    throw FormatError("model document field '" + field + "': " + why);
}

void require_object(const json& j, const std::string& where)
{
    if (!j.is_object())
        bad_field(where.empty() ? "<root>" : where, "expected an object");
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where)
{
    for (const auto& [key, _] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            bad_field(where + key, "unknown field");
    }
}

const json& field(const json& obj, const std::string& key, const std::string& where)
{
    if (!obj.contains(key))
        bad_field(where + key, "missing");
    return obj.at(key);
}

template <class T>
T get(const json& obj, const std::string& key, const std::string& where)
{
    const json& v = field(obj, key, where);
    try {
        return v.get<T>();
    } catch (const json::exception& e) {
        bad_field(where + key, e.what());
    }
}

std::vector<double> get_vector(const json& obj, const std::string& key, const std::string& where,
                               std::size_t expected)
{
    auto v = get<std::vector<double>>(obj, key, where);
    if (v.size() != expected)
        bad_field(where + key, "expected " + std::to_string(expected) + " entries, got " +
                                   std::to_string(v.size()));
    return v;
}

template <class T>
std::vector<std::vector<T>> get_table(const json& obj, const std::string& key,
                                      const std::string& where, std::size_t rows, std::size_t cols)
{
    auto v = get<std::vector<std::vector<T>>>(obj, key, where);
    if (v.size() != rows)
        bad_field(where + key, "expected " + std::to_string(rows) + " rows, got " +
                                   std::to_string(v.size()));
    for (std::size_t r = 0; r < rows; ++r)
        if (v[r].size() != cols)
            bad_field(where + key, "row " + std::to_string(r + 1) + ": expected " +
                                       std::to_string(cols) + " columns, got " +
                                       std::to_string(v[r].size()));
    return v;
}

json report_to_json(const FitReport& r)
{
    json e_free = json::array();
    for (std::size_t i = 0; i < r.e_free.rows(); ++i) {
        auto row = r.e_free.row(i);
        e_free.push_back(std::vector<int>(row.begin(), row.end()));
    }
    json m_free = json::array();
    for (const auto& row : r.m_free)
        m_free.push_back(std::vector<int>(row.begin(), row.end()));
    return {{"ll_trace", r.ll_trace},
            {"penalized_trace", r.penalized_trace},
            {"m_sweeps", r.m_sweeps},
            {"e_sweeps", r.e_sweeps},
            {"converged", r.converged},
            {"em_iters", r.em_iters},
            {"inner_converged", r.inner_converged},
            {"e_residual", r.e_residual},
            {"m_residual", r.m_residual},
            {"e_free", e_free},
            {"m_free", m_free},
            {"wall_time", r.wall_time},
            {"seed", r.seed}};
}

std::uint8_t mask_cell(int v, const std::string& where)
{
    if (v != 0 && v != 1)
        bad_field(where, "mask entries must be 0 or 1");
    return static_cast<std::uint8_t>(v);
}

FitReport report_from_json(const json& j, std::size_t C, std::size_t D, std::size_t I, std::size_t K)
{
    const std::string w = "report.";
    require_object(j, "report");
    reject_unknown(j,
                   {"ll_trace", "penalized_trace", "m_sweeps", "e_sweeps", "converged", "em_iters",
                    "inner_converged", "e_residual", "m_residual", "e_free", "m_free", "wall_time",
                    "seed"},
                   w);
    FitReport r;
    r.ll_trace = get<std::vector<double>>(j, "ll_trace", w);
    r.penalized_trace = get<std::vector<double>>(j, "penalized_trace", w);
    r.m_sweeps = get<std::vector<int>>(j, "m_sweeps", w);
    r.e_sweeps = get<std::vector<int>>(j, "e_sweeps", w);
    r.converged = get<bool>(j, "converged", w);
    r.em_iters = get<int>(j, "em_iters", w);
    r.inner_converged = get<bool>(j, "inner_converged", w);
    r.e_residual = get<double>(j, "e_residual", w);
    r.m_residual = get<double>(j, "m_residual", w);
    r.wall_time = get<double>(j, "wall_time", w);
    r.seed = get<std::uint64_t>(j, "seed", w);
    if (!r.penalized_trace.empty() && r.penalized_trace.size() != r.ll_trace.size())
        bad_field(w + "penalized_trace", "length differs from ll_trace");

    // Baselines carry no E-step mask.
    const auto e_rows = field(j, "e_free", w).size();
    const std::size_t er = e_rows == 0 ? 0 : I;
    const auto e = get_table<int>(j, "e_free", w, er, er == 0 ? 0 : K);
    r.e_free = Mask(er, er == 0 ? 0 : K);
    for (std::size_t i = 0; i < er; ++i)
        for (std::size_t k = 0; k < K; ++k)
            r.e_free(i, k) = mask_cell(e[i][k], w + "e_free");
    const auto m = get_table<int>(j, "m_free", w, C, D);
    r.m_free.assign(C, std::vector<std::uint8_t>(D));
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t d = 0; d < D; ++d)
            r.m_free[c][d] = mask_cell(m[c][d], w + "m_free");
    return r;
}

}  // namespace

json model_to_json(const ModelDocument& doc)
{
    const auto& th = doc.theta;
    const auto& un = doc.unknown;
    const std::size_t C = th.neurons(), Q = th.intrinsic_len(), R = th.extrinsic_len();
    const std::size_t I = un.kernels.sources(), M = un.kernels.memory(), K = un.delta_u.cols();

    json intrinsic = json::array();
    for (std::size_t c = 0; c < C; ++c) {
        std::vector<double> row(Q);
        for (std::size_t q = 1; q <= Q; ++q)
            row[q - 1] = th.intrinsic(c, q);
        intrinsic.push_back(row);
    }
    json extrinsic = json::array();
    for (std::size_t t = 0; t < C; ++t) {
        json per_source = json::array();
        for (std::size_t s = 0; s < C; ++s) {
            std::vector<double> row(R);
            for (std::size_t r = 1; r <= R; ++r)
                row[r - 1] = th.extrinsic(t, s, r);
            per_source.push_back(row);
        }
        extrinsic.push_back(per_source);
    }
    json gamma = json::array();
    for (std::size_t c = 0; c < C; ++c) {
        json per_source = json::array();
        for (std::size_t i = 0; i < I; ++i) {
            std::vector<double> row(M);
            for (std::size_t m = 1; m <= M; ++m)
                row[m - 1] = un.kernels(c, i, m);
            per_source.push_back(row);
        }
        gamma.push_back(per_source);
    }
    json delta_u = json::array();
    for (std::size_t i = 0; i < un.delta_u.rows(); ++i) {
        auto row = un.delta_u.row(i);
        delta_u.push_back(std::vector<double>(row.begin(), row.end()));
    }

    json j = {{"format", kFormat},
              {"version", kVersion},
              {"kind", doc.kind},
              {"dims", {{"C", C}, {"Q", Q}, {"R", R}, {"I", I}, {"M", M}, {"K", K}}},
              {"seed", doc.seed},
              {"config", doc.config},
              {"theta", {{"alpha", th.alpha_values()}, {"intrinsic", intrinsic}, {"extrinsic", extrinsic}}},
              {"unknown",
               {{"gamma", gamma},
                {"delta_u", delta_u},
                {"prior", {{"shape", un.prior.shape}, {"scale", un.prior.scale}}}}}};
    if (doc.report)
        j["report"] = report_to_json(*doc.report);
    return j;
}

ModelDocument model_from_json(const json& j)
{
    require_object(j, "");
    reject_unknown(j, {"format", "version", "kind", "dims", "seed", "config", "theta", "unknown", "report"},
                   "");
    if (get<std::string>(j, "format", "") != kFormat)
        bad_field("format", std::string("expected '") + kFormat + "'");
    if (get<int>(j, "version", "") != kVersion)
        bad_field("version", "unsupported version");

    ModelDocument doc;
    doc.kind = get<std::string>(j, "kind", "");
    if (doc.kind != "ground-truth" && doc.kind != "fit" && doc.kind != "baseline")
        bad_field("kind", "expected ground-truth, fit or baseline");
    doc.seed = get<std::uint64_t>(j, "seed", "");
    doc.config = field(j, "config", "");
    require_object(doc.config, "config");

    const json& dims = field(j, "dims", "");
    require_object(dims, "dims");
    reject_unknown(dims, {"C", "Q", "R", "I", "M", "K"}, "dims.");
    const auto C = get<std::size_t>(dims, "C", "dims.");
    const auto Q = get<std::size_t>(dims, "Q", "dims.");
    const auto R = get<std::size_t>(dims, "R", "dims.");
    const auto I = get<std::size_t>(dims, "I", "dims.");
    const auto M = get<std::size_t>(dims, "M", "dims.");
    const auto K = get<std::size_t>(dims, "K", "dims.");
    if (C == 0)
        bad_field("dims.C", "must be at least 1");

    const json& th = field(j, "theta", "");
    require_object(th, "theta");
    reject_unknown(th, {"alpha", "intrinsic", "extrinsic"}, "theta.");
    doc.theta = ModelTheta(C, Q, R);
    const auto alpha = get_vector(th, "alpha", "theta.", C);
    const auto intr = get_table<double>(th, "intrinsic", "theta.", C, Q);
    const auto ext = get<std::vector<std::vector<std::vector<double>>>>(th, "extrinsic", "theta.");
    if (ext.size() != C)
        bad_field("theta.extrinsic", "expected " + std::to_string(C) + " targets");
    for (std::size_t c = 0; c < C; ++c) {
        doc.theta.alpha(c) = alpha[c];
        for (std::size_t q = 1; q <= Q; ++q)
            doc.theta.intrinsic(c, q) = intr[c][q - 1];
        if (ext[c].size() != C)
            bad_field("theta.extrinsic", "target " + std::to_string(c + 1) + ": expected " +
                                             std::to_string(C) + " sources");
        for (std::size_t s = 0; s < C; ++s) {
            if (ext[c][s].size() != R)
                bad_field("theta.extrinsic", "expected " + std::to_string(R) + " lags per edge");
            for (std::size_t r = 1; r <= R; ++r)
                doc.theta.extrinsic(c, s, r) = ext[c][s][r - 1];
        }
    }
    try {
        doc.theta.validate();
    } catch (const ArgumentError& e) {
        bad_field("theta", e.what());
    }

    const json& un = field(j, "unknown", "");
    require_object(un, "unknown");
    reject_unknown(un, {"gamma", "delta_u", "prior"}, "unknown.");
    const auto gamma = get<std::vector<std::vector<std::vector<double>>>>(un, "gamma", "unknown.");
    if (gamma.size() != C)
        bad_field("unknown.gamma", "expected " + std::to_string(C) + " neurons");
    doc.unknown.kernels = UnknownKernels(C, I, M);
    for (std::size_t c = 0; c < C; ++c) {
        if (gamma[c].size() != I)
            bad_field("unknown.gamma", "expected " + std::to_string(I) + " sources per neuron");
        for (std::size_t i = 0; i < I; ++i) {
            if (gamma[c][i].size() != M)
                bad_field("unknown.gamma", "expected " + std::to_string(M) + " lags per kernel");
            for (std::size_t m = 1; m <= M; ++m)
                doc.unknown.kernels(c, i, m) = gamma[c][i][m - 1];
        }
    }
    try {
        doc.unknown.kernels.validate();
    } catch (const ArgumentError& e) {
        bad_field("unknown.gamma", e.what());
    }
    const auto du = get_table<double>(un, "delta_u", "unknown.", I, K);
    doc.unknown.delta_u = Grid<double>(I, K);
    for (std::size_t i = 0; i < I; ++i)
        for (std::size_t k = 0; k < K; ++k)
            doc.unknown.delta_u(i, k) = du[i][k];
    const json& pr = field(un, "prior", "unknown.");
    require_object(pr, "unknown.prior");
    reject_unknown(pr, {"shape", "scale"}, "unknown.prior.");
    doc.unknown.prior.shape = get<double>(pr, "shape", "unknown.prior.");
    doc.unknown.prior.scale = get<double>(pr, "scale", "unknown.prior.");
    try {
        doc.unknown.prior.validate();
    } catch (const ArgumentError& e) {
        bad_field("unknown.prior", e.what());
    }

    if (j.contains("report"))
        doc.report = report_from_json(j.at("report"), C, doc.theta.dim(), I, K);
    return doc;
}

void write_model(const ModelDocument& doc, const std::string& path)
{
    auto out = open_out(path);
    out << model_to_json(doc).dump(2) << '\n';
    finish_write(out, path);
}

ModelDocument read_model(const std::string& path)
{
    auto in = open_in(path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError("model document '" + path + "': " + e.what());
    }
    return model_from_json(j);
}

// ---------------------------------------------------------------- traces

void write_trace_csv(const FitReport& report, std::ostream& out)
{
    out << "iter,loglik,penalized\n";
    for (std::size_t n = 0; n < report.ll_trace.size(); ++n) {
        const double pen = n < report.penalized_trace.size()
                               ? report.penalized_trace[n]
                               : std::numeric_limits<double>::quiet_NaN();
        out << n << ',' << format_double(report.ll_trace[n]) << ',' << format_double(pen) << '\n';
    }
}

void write_trace_csv(const FitReport& report, const std::string& path)
{
    auto out = open_out(path);
    write_trace_csv(report, out);
    finish_write(out, path);
}

}  // namespace spikeglm
