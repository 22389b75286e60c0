#pragma once

// Covariate embedding, the factorized conditional intensity
// lambda = lambda_U * omega, and likelihood evaluators.

#include "spikeglm/types.hpp"

#include <cstddef>
#include <vector>

namespace spikeglm {

// 1 + Q + (C-1)R.
std::size_t covariate_dim(std::size_t neurons, std::size_t Q, std::size_t R);

// Slot of intrinsic lag q (1-based) / of extrinsic (source, lag) for `target`.
std::size_t intrinsic_slot(std::size_t lag);
std::size_t extrinsic_slot(std::size_t target, std::size_t source, std::size_t lag, std::size_t Q,
                           std::size_t R);

// Dense covariate vector Y^c(k); missing history contributes 0.
std::vector<double> covariate_vector(const SpikeTrain& train, std::size_t c, std::size_t k,
                                     std::size_t Q, std::size_t R);

// Sparse, precomputed covariates for every (c, k). Slot 0 (the constant) is
// implicit; only non-zero history slots are stored.
class CovariateDesign {
public:
    CovariateDesign() = default;
    CovariateDesign(const SpikeTrain& train, std::size_t Q, std::size_t R);

    std::size_t neurons() const { return rows_.size(); }
    std::size_t bins() const { return bins_; }
    std::size_t dim() const { return dim_; }
    std::size_t Q() const { return q_; }
    std::size_t R() const { return r_; }

    struct Entry {
        std::uint32_t slot;
        double value;
    };
    std::span<const Entry> row(std::size_t c, std::size_t k) const
    {
        const auto& r = rows_[c];
        return {r.entries.data() + r.offsets[k], r.offsets[k + 1] - r.offsets[k]};
    }

private:
    struct NeuronRows {
        std::vector<std::size_t> offsets;
        std::vector<Entry> entries;
    };
    std::size_t bins_ = 0;
    std::size_t dim_ = 0;
    std::size_t q_ = 0;
    std::size_t r_ = 0;
    std::vector<NeuronRows> rows_;
};

MuView to_mu(const ModelTheta& theta);
ModelTheta from_mu(const MuView& mu, std::size_t neurons, std::size_t Q, std::size_t R);

// Linear predictor of log omega^c(k). Only bins before k are read, so a train
// that is still being generated may be passed.
double log_omega(const ModelTheta& theta, const SpikeTrain& train, std::size_t c, std::size_t k);
double omega(const ModelTheta& theta, const SpikeTrain& train, std::size_t c, std::size_t k);
// Product form prod_l (mu_l)^{Y_l}.
double omega_product(const MuView& mu, const SpikeTrain& train, std::size_t c, std::size_t k,
                     std::size_t Q, std::size_t R);

double log_lambda_u(const UnknownKernels& kernels, const Grid<double>& delta_u, std::size_t c,
                    std::size_t k);
double lambda_u(const UnknownModel& unknown, std::size_t c, std::size_t k);

double cif(const ModelTheta& theta, const UnknownModel& unknown, const SpikeTrain& train,
           std::size_t c, std::size_t k);

// Tables over all (c, k), stored C x K.
Grid<double> omega_table(const ModelTheta& theta, const SpikeTrain& train, unsigned threads = 1);
Grid<double> omega_table(const MuView& mu, const CovariateDesign& design, unsigned threads = 1);
Grid<double> lambda_u_table(const UnknownKernels& kernels, const Grid<double>& log_nu,
                            std::size_t bins, unsigned threads = 1);

// sum_c sum_k [dN log lambda - tau lambda], count-factorial constants dropped.
double log_likelihood(const ModelTheta& theta, const UnknownModel& unknown, const SpikeTrain& train,
                      unsigned threads = 1);
double log_likelihood(const SpikeTrain& train, const Grid<double>& omega,
                      const Grid<double>& lambda_u);
std::vector<double> log_likelihood_per_neuron(const SpikeTrain& train, const Grid<double>& omega,
                                              const Grid<double>& lambda_u);

// Hard-EM objective in the unknowns: data term in lambda_U plus the log-Gamma
// log-prior (up to constants).
double penalized_objective(const ModelTheta& theta, const UnknownModel& unknown,
                           const SpikeTrain& train, unsigned threads = 1);
double penalized_objective(const SpikeTrain& train, const Grid<double>& omega,
                           const Grid<double>& lambda_u, const Grid<double>& delta_u,
                           const LogGammaPrior& prior);

// Shifts each source's activities to zero mean and folds the shift into
// alpha. Leaves the intensity unchanged on every bin with a full unknown
// history (k > M).
void center_unknowns(ModelTheta& theta, const UnknownKernels& kernels, Grid<double>& delta_u);

// E[Delta U] under the prior: digamma(shape) + log(scale).
double prior_mean(const LogGammaPrior& prior);

// Prior with the given shape whose scale puts E[Delta U] at 0, the gauge of
// mean-centred simulated activities.
LogGammaPrior zero_mean_prior(double shape);

}  // namespace spikeglm
