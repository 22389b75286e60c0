#include "spikeglm/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace spikeglm {

SpikeTrain::SpikeTrain(std::size_t bins, std::size_t neurons, double tau, double start_time)
    : bins_(bins), neurons_(neurons), tau_(tau), start_time_(start_time), counts_(bins * neurons, 0)
{
    if (bins == 0 || neurons == 0)
        throw ArgumentError("SpikeTrain: need at least one bin and one neuron");
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw ArgumentError("SpikeTrain: tau must be positive and finite");
}

void SpikeTrain::set(std::size_t k, std::size_t c, int value)
{
    if (k >= bins_ || c >= neurons_)
        throw ArgumentError("SpikeTrain::set: index out of range");
    if (value < 0)
        throw ArgumentError("SpikeTrain::set: negative spike count");
    counts_[k * neurons_ + c] = value;
}

long long SpikeTrain::total(std::size_t c) const
{
    long long s = 0;
    for (std::size_t k = 0; k < bins_; ++k)
        s += counts_[k * neurons_ + c];
    return s;
}

long long SpikeTrain::total() const
{
    return std::accumulate(counts_.begin(), counts_.end(), 0LL);
}

ModelTheta::ModelTheta(std::size_t neurons, std::size_t intrinsic_len, std::size_t extrinsic_len)
    : neurons_(neurons),
      q_(intrinsic_len),
      r_(extrinsic_len),
      alpha_(neurons, 0.0),
      intrinsic_(neurons * intrinsic_len, 0.0),
      extrinsic_(neurons * neurons * extrinsic_len, 0.0)
{
    if (neurons == 0)
        throw ArgumentError("ModelTheta: need at least one neuron");
}

std::size_t ModelTheta::dim() const
{
    return 1 + q_ + (neurons_ - 1) * r_;
}

void ModelTheta::validate() const
{
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(alpha_.begin(), alpha_.end(), finite) ||
        !std::all_of(intrinsic_.begin(), intrinsic_.end(), finite) ||
        !std::all_of(extrinsic_.begin(), extrinsic_.end(), finite))
        throw ArgumentError("ModelTheta: non-finite parameter");
    for (std::size_t c = 0; c < neurons_; ++c)
        for (std::size_t r = 1; r <= r_; ++r)
            if (extrinsic(c, c, r) != 0.0)
                throw ArgumentError("ModelTheta: self extrinsic kernel must be zero");
}

UnknownKernels::UnknownKernels(std::size_t neurons, std::size_t sources, std::size_t memory)
    : neurons_(neurons), sources_(sources), memory_(memory), gamma_(neurons * sources * memory, 0.0)
{
}

bool UnknownKernels::all_zero() const
{
    return std::all_of(gamma_.begin(), gamma_.end(), [](double g) { return g == 0.0; });
}

void UnknownKernels::validate() const
{
    for (double g : gamma_)
        if (!(g >= 0.0) || !std::isfinite(g))
            throw ArgumentError("UnknownKernels: gamma must be finite and non-negative");
}

void LogGammaPrior::validate() const
{
    if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale))
        throw ArgumentError("LogGammaPrior: shape and scale must be positive");
}

void FitConfig::validate() const
{
    if (!(l > 0.0 && l < 2.0))
        throw ArgumentError("FitConfig: relaxation l must lie in (0, 2)");
    if (!(em_tol > 0.0) || !(inner_tol > 0.0))
        throw ArgumentError("FitConfig: tolerances must be positive");
    if (em_max_iters < 1 || inner_max_iters < 1)
        throw ArgumentError("FitConfig: iteration caps must be positive");
    if (I < 1 || M < 1)
        throw ArgumentError("FitConfig: I and M must be positive");
}

std::size_t FitReport::pinned_unknowns() const
{
    return static_cast<std::size_t>(std::count(e_free.data().begin(), e_free.data().end(), 0));
}

std::size_t FitReport::pinned_parameters() const
{
    std::size_t n = 0;
    for (const auto& row : m_free)
        n += static_cast<std::size_t>(std::count(row.begin(), row.end(), 0));
    return n;
}

bool FitReport::fully_unidentifiable() const
{
    std::size_t total = e_free.size();
    for (const auto& row : m_free)
        total += row.size();
    return pinned_unknowns() + pinned_parameters() == total;
}

std::string FitReport::identifiability_summary() const
{
    std::size_t m_total = 0;
    for (const auto& row : m_free)
        m_total += row.size();
    std::ostringstream os;
    os << "pinned unknown activities: " << pinned_unknowns() << " / " << e_free.size();
    if (pinned_unknowns() > 0)
        os << " (no spikes in their coupling window; held at zero)";
    os << "\npinned model parameters: " << pinned_parameters() << " / " << m_total;
    if (pinned_parameters() > 0)
        os << " (no spike co-occurs with the covariate; held at zero, consider rebinning to a larger tau)";
    return os.str();
}

}  // namespace spikeglm
