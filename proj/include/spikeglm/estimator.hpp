#pragma once

// Multiplicative fixed-point solvers for the unknown activities ("E-step")
// and the GLM parameters ("M-step"), and the alternating EM driver.
//
// Both solvers use synchronous (Jacobi) sweeps: every coordinate of the next
// iterate is computed from the previous iterate only, so coordinates are
// updated in parallel and results do not depend on the worker count.

#include "spikeglm/model.hpp"
#include "spikeglm/types.hpp"

#include <cstdint>
#include <vector>

namespace spikeglm {

// Per-(source, bin) constants of the unknown-activity fixed point. All tables
// are I x K and constant for a given train, kernels and prior.
struct EStepWorkspace {
    Grid<double> numer;  // sum_c sum_m dN_{q+m} gamma_m(c) + shape
    Grid<double> denom;  // spike-count weighted kernel overlap; 0 => unidentifiable
    Grid<double> t_exp;  // fixed-point exponent, meaningful where free
    Mask free;
    double relaxation = 1.0;
};

EStepWorkspace e_step_precompute(const SpikeTrain& train, const UnknownKernels& kernels,
                                 const LogGammaPrior& prior, double l);

// One synchronous sweep nu -> G(nu). Pinned entries come out as 1.
Grid<double> e_step_update(const Grid<double>& nu, const EStepWorkspace& ws,
                           const Grid<double>& omega, const SpikeTrain& train,
                           const UnknownKernels& kernels, const LogGammaPrior& prior,
                           unsigned threads = 1);

// Gradient of the penalized objective with respect to Delta U_q^i (the
// stationarity condition of the E-step), evaluated at nu. Zero on pinned
// entries.
Grid<double> e_step_stationarity(const Grid<double>& nu, const EStepWorkspace& ws,
                                 const Grid<double>& omega, const SpikeTrain& train,
                                 const UnknownKernels& kernels, const LogGammaPrior& prior);

struct EStepResult {
    Grid<double> nu;
    int iters = 0;
    double max_rel_change = 0.0;
    double residual = 0.0;  // max |stationarity| over free entries
    bool converged = false;
};

EStepResult run_e_step(const Grid<double>& nu_init, const EStepWorkspace& ws,
                       const Grid<double>& omega, const SpikeTrain& train,
                       const UnknownKernels& kernels, const LogGammaPrior& prior,
                       const FitConfig& config);

// Per-(neuron, slot) constants of the GLM fixed point with the counting
// approximation for the exponent.
struct MStepWorkspace {
    CovariateDesign design;
    std::vector<std::vector<double>> numer;  // sum_k dN_k Y_j(k)
    std::vector<std::vector<double>> b_exp;
    std::vector<std::vector<std::uint8_t>> free;
};

MStepWorkspace m_step_precompute(const SpikeTrain& train, std::size_t Q, std::size_t R);

MuView m_step_update(const MuView& mu, const MStepWorkspace& ws, const Grid<double>& lambda_u,
                     const SpikeTrain& train, unsigned threads = 1);

// d(log-likelihood)/d(log mu_j^c) = sum_k Y_j (dN_k - tau lambda^c(k)).
std::vector<std::vector<double>> log_mu_gradient(const MuView& mu, const MStepWorkspace& ws,
                                                 const Grid<double>& lambda_u,
                                                 const SpikeTrain& train);

struct MStepResult {
    MuView mu;
    int iters = 0;
    double max_rel_change = 0.0;
    double gradient = 0.0;  // max |gradient| over free slots
    bool converged = false;
};

MStepResult run_m_step(const MuView& mu_init, const MStepWorkspace& ws,
                       const Grid<double>& lambda_u, const SpikeTrain& train,
                       const FitConfig& config);

struct FitResult {
    ModelTheta theta;
    Grid<double> delta_u;  // I x K; all zero for the no-unknowns fit
    FitReport report;
};

FitResult em_fit(const SpikeTrain& train, const UnknownKernels& kernels,
                 const LogGammaPrior& prior, const FitConfig& config);

// GLM fit with lambda_U == 1. When `sweep_schedule` is given (the m_sweeps of
// an em_fit report) the M-step is run in segments of exactly those caps and a
// likelihood is traced after each, so both traces cover the same M-step
// budget. Otherwise em_max_iters + 1 segments of inner_max_iters are used,
// stopping once a segment converges.
FitResult fit_without_unknowns(const SpikeTrain& train, const FitConfig& config,
                               const std::vector<int>* sweep_schedule = nullptr);

// Spectral radius of the Jacobian of the E-step map at a fixed point nu_hat.
// The exponent is the exact-curvature one, l * n / (sum_p A_qp + nu_q/scale),
// for which the predicted radius is |1 - l|. The Jacobian is taken by central
// differences over the free entries; the radius by power iteration on J^2.
// Only for small problems (free entries <= 200).
double contraction_diagnostic(const Grid<double>& nu_hat, const EStepWorkspace& ws,
                              const Grid<double>& omega, const SpikeTrain& train,
                              const UnknownKernels& kernels, const LogGammaPrior& prior, double l);

}  // namespace spikeglm
