#pragma once

// Spike-train generator for networks with unknown-source injections.

#include "spikeglm/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace spikeglm {

enum class KernelFamily { zero, sinc, exponential };

// Kernel value at lag q (1-based):
//   sinc:        -amplitude * sinc(pi (q-1) / width)   (negative at lag 1)
//   exponential:  amplitude * exp(-(q-1) / width)
// Lags beyond `length` are zero; length 0 means the full memory.
struct KernelShape {
    KernelFamily family = KernelFamily::zero;
    double amplitude = 0.0;
    double width = 1.0;
    std::size_t length = 0;

    double at(std::size_t lag) const;
};

struct ExtrinsicEdge {
    std::size_t source = 0;  // 0-based
    std::size_t target = 0;
    int sign = 1;
    KernelShape shape;
};

struct UnknownEdge {
    std::size_t source = 0;  // unknown source index, 0-based
    std::size_t target = 0;
    KernelShape shape;
};

struct NetworkSpec {
    std::string name;
    std::size_t C = 0;
    std::size_t I = 0;
    std::size_t Q = 0;
    std::size_t R = 0;
    std::size_t M = 0;
    std::vector<double> alpha;
    std::vector<KernelShape> intrinsic;  // one per neuron
    std::vector<ExtrinsicEdge> extrinsic_edges;
    std::vector<UnknownEdge> unknown_edges;
    LogGammaPrior prior;
    double tau = 0.05;
    std::size_t K = 500;
    std::uint64_t seed = 1;
    // Largest tolerated fraction of (bin, neuron) pairs with tau * lambda >= 1.
    double max_saturated_fraction = 0.02;

    void validate() const;
};

// Preset and network documents use 1-based neuron and source ids.
NetworkSpec network_spec_from_json(const nlohmann::json& doc);
nlohmann::json network_spec_to_json(const NetworkSpec& spec);
NetworkSpec load_network_spec(const std::string& path);
NetworkSpec preset_spec(std::string_view name);
std::vector<std::string> preset_names();

struct Network {
    ModelTheta theta;
    UnknownKernels kernels;
    NetworkSpec spec;
};

Network build_artificial_network(const NetworkSpec& spec);
Network build_artificial_network(std::string_view preset);

// U = log G, G ~ Gamma(shape, scale); optionally shifted to zero sample mean.
std::vector<double> sample_log_gamma(double shape, double scale, std::size_t n, std::uint64_t seed,
                                     bool mean_center);
std::vector<double> sample_log_gamma(double shape, double scale, std::size_t n,
                                     std::mt19937_64& rng, bool mean_center);

struct GenerationOptions {
    double max_saturated_fraction = 0.02;
    bool record_intensity = false;
};

struct GenerationResult {
    SpikeTrain train;
    std::size_t saturated = 0;     // (bin, neuron) pairs with tau * lambda >= 1
    double max_tau_lambda = 0.0;
    Grid<double> intensity;        // C x K, when requested
};

// Bernoulli thinning per bin: a spike is emitted iff u < tau * lambda^c(k),
// with lambda computed from the realized history and the given activities.
// Draws one uniform per (bin, neuron) in bin-major order.
GenerationResult generate_spikes(const ModelTheta& theta, const UnknownKernels& kernels,
                                 const Grid<double>& delta_u, double tau, std::size_t bins,
                                 std::mt19937_64& rng, const GenerationOptions& options = {});
GenerationResult generate_spikes(const ModelTheta& theta, const UnknownKernels& kernels,
                                 const Grid<double>& delta_u, double tau, std::size_t bins,
                                 std::uint64_t seed, const GenerationOptions& options = {});

struct Experiment {
    Network network;
    Grid<double> delta_u;  // I x K, ground truth
    GenerationResult generation;
};

// Build the network, draw I x K mean-centred log-Gamma activities, then
// generate K bins, all from one generator seeded with `seed`.
Experiment simulate_experiment(const NetworkSpec& spec, std::uint64_t seed);
Experiment simulate_experiment(std::string_view preset, std::uint64_t seed);

}  // namespace spikeglm
