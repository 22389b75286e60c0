#pragma once

// Core value types shared by every module.
//
// Index conventions: neurons, bins and unknown sources are 0-based; history
// lags are 1-based (lag q means "q bins in the past"), matching the kernels'
// natural indexing.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spikeglm {

class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericRangeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dense row-major 2-D table.
template <class T>
class Grid {
public:
    Grid() = default;
    Grid(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool operator==(const Grid&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using Mask = Grid<std::uint8_t>;

// Binned spike counts: K bins x C neurons.
class SpikeTrain {
public:
    SpikeTrain() = default;
    SpikeTrain(std::size_t bins, std::size_t neurons, double tau, double start_time = 0.0);

    std::size_t bins() const { return bins_; }
    std::size_t neurons() const { return neurons_; }
    double tau() const { return tau_; }
    double start_time() const { return start_time_; }

    int operator()(std::size_t k, std::size_t c) const { return counts_[k * neurons_ + c]; }
    void set(std::size_t k, std::size_t c, int value);

    std::span<const int> bin(std::size_t k) const { return {counts_.data() + k * neurons_, neurons_}; }
    const std::vector<int>& counts() const { return counts_; }

    long long total(std::size_t c) const;
    long long total() const;

    // Set when the last bin was built from fewer native bins than the others
    // (trailing group of a rebin).
    bool partial_tail() const { return partial_tail_; }
    void set_partial_tail(bool flag) { partial_tail_ = flag; }

    bool operator==(const SpikeTrain&) const = default;

private:
    std::size_t bins_ = 0;
    std::size_t neurons_ = 0;
    double tau_ = 1.0;
    double start_time_ = 0.0;
    bool partial_tail_ = false;
    std::vector<int> counts_;
};

// GLM parameters: spontaneous log-rates, intrinsic (self-history) kernels and
// extrinsic (cross-neuron) kernels. extrinsic(c, c, r) is unused and kept 0.
class ModelTheta {
public:
    ModelTheta() = default;
    ModelTheta(std::size_t neurons, std::size_t intrinsic_len, std::size_t extrinsic_len);

    std::size_t neurons() const { return neurons_; }
    std::size_t intrinsic_len() const { return q_; }
    std::size_t extrinsic_len() const { return r_; }
    // Length of the per-neuron parameter vector: 1 + Q + (C-1)R.
    std::size_t dim() const;

    double& alpha(std::size_t c) { return alpha_[c]; }
    double alpha(std::size_t c) const { return alpha_[c]; }
    double& intrinsic(std::size_t c, std::size_t lag) { return intrinsic_[c * q_ + lag - 1]; }
    double intrinsic(std::size_t c, std::size_t lag) const { return intrinsic_[c * q_ + lag - 1]; }
    double& extrinsic(std::size_t target, std::size_t source, std::size_t lag)
    {
        return extrinsic_[(target * neurons_ + source) * r_ + lag - 1];
    }
    double extrinsic(std::size_t target, std::size_t source, std::size_t lag) const
    {
        return extrinsic_[(target * neurons_ + source) * r_ + lag - 1];
    }

    const std::vector<double>& alpha_values() const { return alpha_; }
    const std::vector<double>& intrinsic_values() const { return intrinsic_; }
    const std::vector<double>& extrinsic_values() const { return extrinsic_; }

    // Throws ArgumentError on non-finite entries or a non-zero self edge.
    void validate() const;

    bool operator==(const ModelTheta&) const = default;

private:
    std::size_t neurons_ = 0;
    std::size_t q_ = 0;
    std::size_t r_ = 0;
    std::vector<double> alpha_;
    std::vector<double> intrinsic_;
    std::vector<double> extrinsic_;
};

// Exponentiated parameters, one length-D vector per neuron. Slot order is
// [constant, intrinsic lags 1..Q, then for each other neuron c' in increasing
// order its extrinsic lags 1..R]; covariate vectors use the same order.
using MuView = std::vector<std::vector<double>>;

// Fixed non-negative coupling kernels gamma_m^i(c) from unknown sources.
class UnknownKernels {
public:
    UnknownKernels() = default;
    UnknownKernels(std::size_t neurons, std::size_t sources, std::size_t memory);

    std::size_t neurons() const { return neurons_; }
    std::size_t sources() const { return sources_; }
    std::size_t memory() const { return memory_; }

    double& operator()(std::size_t c, std::size_t i, std::size_t lag)
    {
        return gamma_[(c * sources_ + i) * memory_ + lag - 1];
    }
    double operator()(std::size_t c, std::size_t i, std::size_t lag) const
    {
        return gamma_[(c * sources_ + i) * memory_ + lag - 1];
    }
    const std::vector<double>& values() const { return gamma_; }

    bool all_zero() const;
    // Throws ArgumentError when any entry is negative or non-finite.
    void validate() const;

    bool operator==(const UnknownKernels&) const = default;

private:
    std::size_t neurons_ = 0;
    std::size_t sources_ = 0;
    std::size_t memory_ = 0;
    std::vector<double> gamma_;
};

// log-Gamma prior on each unknown activity: density proportional to
// exp(shape * u - e^u / scale).
struct LogGammaPrior {
    double shape = 50.0;
    double scale = 1.0;

    void validate() const;
    bool operator==(const LogGammaPrior&) const = default;
};

// Kernels, prior and latent activities (I x K table of Delta U).
struct UnknownModel {
    UnknownKernels kernels;
    Grid<double> delta_u;
    LogGammaPrior prior;

    std::size_t sources() const { return kernels.sources(); }
    bool operator==(const UnknownModel&) const = default;
};

struct FitConfig {
    std::size_t Q = 1;
    std::size_t R = 1;
    std::size_t M = 1;
    std::size_t I = 1;
    double l = 1.0;
    int em_max_iters = 100;
    int inner_max_iters = 200;
    double em_tol = 1e-6;
    double inner_tol = 1e-8;
    std::uint64_t seed = 1;
    unsigned threads = 0;

    void validate() const;
};

struct FitReport {
    std::vector<double> ll_trace;
    std::vector<double> penalized_trace;
    // Sweeps spent by the M-step at initialization and in each EM iteration;
    // the no-unknowns baseline replays this schedule.
    std::vector<int> m_sweeps;
    std::vector<int> e_sweeps;
    bool converged = false;
    int em_iters = 0;
    bool inner_converged = true;
    double e_residual = 0.0;
    double m_residual = 0.0;
    Mask e_free;                              // I x K
    std::vector<std::vector<std::uint8_t>> m_free;  // C x D
    double wall_time = 0.0;
    std::uint64_t seed = 0;

    std::size_t pinned_unknowns() const;
    std::size_t pinned_parameters() const;
    bool fully_unidentifiable() const;
    std::string identifiability_summary() const;

    bool operator==(const FitReport&) const = default;
};

}  // namespace spikeglm
