#pragma once

// Spike-train and model file formats, event binning and rebinning.

#include "spikeglm/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spikeglm {

struct Event {
    std::size_t neuron = 0;  // 0-based
    double time = 0.0;       // seconds from the start of the recording
};

struct EventList {
    std::vector<Event> events;  // sorted by time
    double duration = 0.0;
    std::size_t neurons = 0;

    // Throws FormatError naming the offending event (1-based position).
    void validate() const;
};

enum class BinMode { binary, count };

struct BinnedEvents {
    SpikeTrain train;
    std::size_t clipped = 0;  // events dropped by binary clipping
};

// K = ceil(duration / tau) bins.
BinnedEvents bin_events(const EventList& events, double tau, BinMode mode);

// Sums consecutive groups of `factor` bins; a shorter trailing group is kept
// and flagged through SpikeTrain::partial_tail().
SpikeTrain rebin(const SpikeTrain& train, std::size_t factor);

// Event CSV: first line `duration=<seconds>`, optional header `neuron,timestamp`,
// then one `neuron,timestamp` row per event with 1-based neuron ids.
EventList read_event_csv(std::istream& in);
EventList read_event_csv(const std::string& path);
void write_event_csv(const EventList& events, std::ostream& out);

// Spike matrix CSV: header `tau=<value>` (optionally followed by
// `,start=<value>` and `,partial_tail=1`), then one row per bin with one
// integer column per neuron.
SpikeTrain read_spike_csv(std::istream& in);
SpikeTrain read_spike_csv(const std::string& path);
void write_spike_csv(const SpikeTrain& train, std::ostream& out);
void write_spike_csv(const SpikeTrain& train, const std::string& path);

// Model document: parameters, unknown kernels and activities, optional fit
// report, plus the effective configuration that produced it.
struct ModelDocument {
    std::string kind;  // "ground-truth", "fit" or "baseline"
    ModelTheta theta;
    UnknownModel unknown;
    std::optional<FitReport> report;
    nlohmann::json config = nlohmann::json::object();
    std::uint64_t seed = 0;

    bool operator==(const ModelDocument&) const = default;
};

nlohmann::json model_to_json(const ModelDocument& doc);
ModelDocument model_from_json(const nlohmann::json& j);
void write_model(const ModelDocument& doc, const std::string& path);
ModelDocument read_model(const std::string& path);

// `iter,loglik,penalized`; penalized is `nan` when the report has none.
void write_trace_csv(const FitReport& report, std::ostream& out);
void write_trace_csv(const FitReport& report, const std::string& path);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace spikeglm
