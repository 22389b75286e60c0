#include "spikeglm/model.hpp"

#include "parallel.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace spikeglm {

namespace {

void check_index(const SpikeTrain& train, std::size_t c, std::size_t k)
{
    if (c >= train.neurons() || k >= train.bins())
        throw ArgumentError("neuron " + std::to_string(c) + " / bin " + std::to_string(k) +
                            " out of range");
}

void check_theta(const ModelTheta& theta, const SpikeTrain& train)
{
    if (theta.neurons() != train.neurons())
        throw ArgumentError("ModelTheta has " + std::to_string(theta.neurons()) +
                            " neurons, spike train has " + std::to_string(train.neurons()));
}

void check_unknown(const UnknownModel& unknown, const SpikeTrain& train)
{
    if (unknown.kernels.neurons() != train.neurons())
        throw ArgumentError("unknown kernels do not match the spike train's neuron count");
    if (unknown.delta_u.rows() != unknown.kernels.sources() ||
        unknown.delta_u.cols() != train.bins())
        throw ArgumentError("unknown activity table must be I x K");
}

double checked_exp(double x, const char* what, std::size_t c, std::size_t k)
{
    const double v = std::exp(x);
    if (!std::isfinite(v) || v <= 0.0)
        throw NumericRangeError(std::string(what) + " out of range at neuron " + std::to_string(c) +
                                ", bin " + std::to_string(k) + " (log value " + std::to_string(x) +
                                ")");
    return v;
}

}  // namespace

std::size_t covariate_dim(std::size_t neurons, std::size_t Q, std::size_t R)
{
    if (neurons == 0)
        throw ArgumentError("covariate_dim: need at least one neuron");
    return 1 + Q + (neurons - 1) * R;
}

std::size_t intrinsic_slot(std::size_t lag)
{
    return lag;
}

std::size_t extrinsic_slot(std::size_t target, std::size_t source, std::size_t lag, std::size_t Q,
                           std::size_t R)
{
    const std::size_t rank = source < target ? source : source - 1;
    return 1 + Q + rank * R + (lag - 1);
}

std::vector<double> covariate_vector(const SpikeTrain& train, std::size_t c, std::size_t k,
                                     std::size_t Q, std::size_t R)
{
    check_index(train, c, k);
    std::vector<double> y(covariate_dim(train.neurons(), Q, R), 0.0);
    y[0] = 1.0;
    for (std::size_t lag = 1; lag <= std::min(k, Q); ++lag)
        y[intrinsic_slot(lag)] = train(k - lag, c);
    for (std::size_t src = 0; src < train.neurons(); ++src) {
        if (src == c)
            continue;
        for (std::size_t lag = 1; lag <= std::min(k, R); ++lag)
            y[extrinsic_slot(c, src, lag, Q, R)] = train(k - lag, src);
    }
    return y;
}

CovariateDesign::CovariateDesign(const SpikeTrain& train, std::size_t Q, std::size_t R)
    : bins_(train.bins()), dim_(covariate_dim(train.neurons(), Q, R)), q_(Q), r_(R),
      rows_(train.neurons())
{
    const std::size_t C = train.neurons();
    for (std::size_t c = 0; c < C; ++c) {
        auto& nr = rows_[c];
        nr.offsets.reserve(bins_ + 1);
        nr.offsets.push_back(0);
        for (std::size_t k = 0; k < bins_; ++k) {
            for (std::size_t lag = 1; lag <= std::min(k, Q); ++lag)
                if (int n = train(k - lag, c); n != 0)
                    nr.entries.push_back({static_cast<std::uint32_t>(intrinsic_slot(lag)),
                                          static_cast<double>(n)});
            for (std::size_t src = 0; src < C; ++src) {
                if (src == c)
                    continue;
                for (std::size_t lag = 1; lag <= std::min(k, R); ++lag)
                    if (int n = train(k - lag, src); n != 0)
                        nr.entries.push_back(
                            {static_cast<std::uint32_t>(extrinsic_slot(c, src, lag, Q, R)),
                             static_cast<double>(n)});
            }
            nr.offsets.push_back(nr.entries.size());
        }
    }
}

MuView to_mu(const ModelTheta& theta)
{
    const std::size_t C = theta.neurons();
    const std::size_t Q = theta.intrinsic_len();
    const std::size_t R = theta.extrinsic_len();
    MuView mu(C, std::vector<double>(theta.dim()));
    for (std::size_t c = 0; c < C; ++c) {
        auto& m = mu[c];
        m[0] = std::exp(theta.alpha(c));
        for (std::size_t lag = 1; lag <= Q; ++lag)
            m[intrinsic_slot(lag)] = std::exp(theta.intrinsic(c, lag));
        for (std::size_t src = 0; src < C; ++src) {
            if (src == c)
                continue;
            for (std::size_t lag = 1; lag <= R; ++lag)
                m[extrinsic_slot(c, src, lag, Q, R)] = std::exp(theta.extrinsic(c, src, lag));
        }
    }
    return mu;
}

ModelTheta from_mu(const MuView& mu, std::size_t neurons, std::size_t Q, std::size_t R)
{
    ModelTheta theta(neurons, Q, R);
    if (mu.size() != neurons)
        throw ArgumentError("from_mu: expected one vector per neuron");
    for (std::size_t c = 0; c < neurons; ++c) {
        const auto& m = mu[c];
        if (m.size() != theta.dim())
            throw ArgumentError("from_mu: vector length does not match 1 + Q + (C-1)R");
        for (double v : m)
            if (!(v > 0.0) || !std::isfinite(v))
                throw NumericRangeError("from_mu: mu entries must be positive and finite");
        theta.alpha(c) = std::log(m[0]);
        for (std::size_t lag = 1; lag <= Q; ++lag)
            theta.intrinsic(c, lag) = std::log(m[intrinsic_slot(lag)]);
        for (std::size_t src = 0; src < neurons; ++src) {
            if (src == c)
                continue;
            for (std::size_t lag = 1; lag <= R; ++lag)
                theta.extrinsic(c, src, lag) = std::log(m[extrinsic_slot(c, src, lag, Q, R)]);
        }
    }
    return theta;
}

double log_omega(const ModelTheta& theta, const SpikeTrain& train, std::size_t c, std::size_t k)
{
    check_theta(theta, train);
    check_index(train, c, k);
    const std::size_t Q = theta.intrinsic_len();
    const std::size_t R = theta.extrinsic_len();
    double eta = theta.alpha(c);
    for (std::size_t lag = 1; lag <= std::min(k, Q); ++lag)
        eta += theta.intrinsic(c, lag) * train(k - lag, c);
    for (std::size_t src = 0; src < train.neurons(); ++src) {
        if (src == c)
            continue;
        for (std::size_t lag = 1; lag <= std::min(k, R); ++lag)
            eta += theta.extrinsic(c, src, lag) * train(k - lag, src);
    }
    return eta;
}

double omega(const ModelTheta& theta, const SpikeTrain& train, std::size_t c, std::size_t k)
{
    return checked_exp(log_omega(theta, train, c, k), "omega", c, k);
}

double omega_product(const MuView& mu, const SpikeTrain& train, std::size_t c, std::size_t k,
                     std::size_t Q, std::size_t R)
{
    const auto y = covariate_vector(train, c, k, Q, R);
    if (c >= mu.size() || mu[c].size() != y.size())
        throw ArgumentError("omega_product: mu does not match the covariate dimension");
    double prod = 1.0;
    for (std::size_t l = 0; l < y.size(); ++l)
        if (y[l] != 0.0)
            prod *= std::pow(mu[c][l], y[l]);
    if (!std::isfinite(prod) || prod <= 0.0)
        throw NumericRangeError("omega_product out of range at neuron " + std::to_string(c) +
                                ", bin " + std::to_string(k));
    return prod;
}

double log_lambda_u(const UnknownKernels& kernels, const Grid<double>& delta_u, std::size_t c,
                    std::size_t k)
{
    const std::size_t M = kernels.memory();
    double s = 0.0;
    for (std::size_t i = 0; i < kernels.sources(); ++i)
        for (std::size_t lag = 1; lag <= std::min(k, M); ++lag)
            s += kernels(c, i, lag) * delta_u(i, k - lag);
    return s;
}

double lambda_u(const UnknownModel& unknown, std::size_t c, std::size_t k)
{
    if (c >= unknown.kernels.neurons() || k >= unknown.delta_u.cols())
        throw ArgumentError("lambda_u: index out of range");
    return checked_exp(log_lambda_u(unknown.kernels, unknown.delta_u, c, k), "lambda_U", c, k);
}

double cif(const ModelTheta& theta, const UnknownModel& unknown, const SpikeTrain& train,
           std::size_t c, std::size_t k)
{
    check_unknown(unknown, train);
    const double lam = lambda_u(unknown, c, k) * omega(theta, train, c, k);
    if (!std::isfinite(lam))
        throw NumericRangeError("intensity out of range at neuron " + std::to_string(c) +
                                ", bin " + std::to_string(k));
    return lam;
}

Grid<double> omega_table(const ModelTheta& theta, const SpikeTrain& train, unsigned threads)
{
    check_theta(theta, train);
    Grid<double> out(train.neurons(), train.bins());
    detail::parallel_for(train.neurons(), threads, [&](std::size_t c) {
        for (std::size_t k = 0; k < train.bins(); ++k)
            out(c, k) = omega(theta, train, c, k);
    });
    return out;
}

Grid<double> omega_table(const MuView& mu, const CovariateDesign& design, unsigned threads)
{
    const std::size_t C = design.neurons();
    if (mu.size() != C)
        throw ArgumentError("omega_table: mu does not match the design");
    Grid<double> out(C, design.bins());
    detail::parallel_for(C, threads, [&](std::size_t c) {
        std::vector<double> log_mu(mu[c].size());
        std::transform(mu[c].begin(), mu[c].end(), log_mu.begin(),
                       [](double m) { return std::log(m); });
        for (std::size_t k = 0; k < design.bins(); ++k) {
            double eta = log_mu[0];
            for (const auto& e : design.row(c, k))
                eta += e.value * log_mu[e.slot];
            out(c, k) = checked_exp(eta, "omega", c, k);
        }
    });
    return out;
}

Grid<double> lambda_u_table(const UnknownKernels& kernels, const Grid<double>& log_nu,
                            std::size_t bins, unsigned threads)
{
    if (log_nu.rows() != kernels.sources() || log_nu.cols() != bins)
        throw ArgumentError("lambda_u_table: activity table must be I x K");
    const std::size_t C = kernels.neurons();
    Grid<double> out(C, bins);
    detail::parallel_for(bins, threads, [&](std::size_t k) {
        for (std::size_t c = 0; c < C; ++c)
            out(c, k) = checked_exp(log_lambda_u(kernels, log_nu, c, k), "lambda_U", c, k);
    });
    return out;
}

std::vector<double> log_likelihood_per_neuron(const SpikeTrain& train, const Grid<double>& omega,
                                              const Grid<double>& lambda_u)
{
    const std::size_t C = train.neurons();
    const std::size_t K = train.bins();
    if (omega.rows() != C || omega.cols() != K || lambda_u.rows() != C || lambda_u.cols() != K)
        throw ArgumentError("log_likelihood: intensity tables must be C x K");
    const double tau = train.tau();
    std::vector<double> out(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double lam = lambda_u(c, k) * omega(c, k);
            if (int n = train(k, c); n != 0)
                s += n * std::log(lam);
            s -= tau * lam;
        }
        out[c] = s;
    }
    return out;
}

double log_likelihood(const SpikeTrain& train, const Grid<double>& omega,
                      const Grid<double>& lambda_u)
{
    double s = 0.0;
    for (double v : log_likelihood_per_neuron(train, omega, lambda_u))
        s += v;
    if (!std::isfinite(s))
        throw NumericRangeError("log-likelihood is not finite");
    return s;
}

double log_likelihood(const ModelTheta& theta, const UnknownModel& unknown, const SpikeTrain& train,
                      unsigned threads)
{
    check_theta(theta, train);
    check_unknown(unknown, train);
    const auto om = omega_table(theta, train, threads);
    const auto lu = lambda_u_table(unknown.kernels, unknown.delta_u, train.bins(), threads);
    return log_likelihood(train, om, lu);
}

double penalized_objective(const SpikeTrain& train, const Grid<double>& omega,
                           const Grid<double>& lambda_u, const Grid<double>& delta_u,
                           const LogGammaPrior& prior)
{
    const std::size_t C = train.neurons();
    const std::size_t K = train.bins();
    const double tau = train.tau();
    double data = 0.0;
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t k = 0; k < K; ++k) {
            const double lu = lambda_u(c, k);
            if (int n = train(k, c); n != 0)
                data += n * std::log(lu);
            data -= omega(c, k) * tau * lu;
        }
    double penalty = 0.0;
    for (std::size_t i = 0; i < delta_u.rows(); ++i)
        for (std::size_t k = 0; k < delta_u.cols(); ++k)
            penalty += prior.shape * delta_u(i, k) - std::exp(delta_u(i, k)) / prior.scale;
    const double total = data + penalty;
    if (!std::isfinite(total))
        throw NumericRangeError("penalized objective is not finite");
    return total;
}

double penalized_objective(const ModelTheta& theta, const UnknownModel& unknown,
                           const SpikeTrain& train, unsigned threads)
{
    check_theta(theta, train);
    check_unknown(unknown, train);
    unknown.prior.validate();
    const auto om = omega_table(theta, train, threads);
    const auto lu = lambda_u_table(unknown.kernels, unknown.delta_u, train.bins(), threads);
    return penalized_objective(train, om, lu, unknown.delta_u, unknown.prior);
}

void center_unknowns(ModelTheta& theta, const UnknownKernels& kernels, Grid<double>& delta_u)
{
    if (delta_u.rows() != kernels.sources() || theta.neurons() != kernels.neurons())
        throw ArgumentError("center_unknowns: dimension mismatch");
    for (std::size_t i = 0; i < delta_u.rows(); ++i) {
        double mean = 0.0;
        for (double v : delta_u.row(i))
            mean += v;
        mean /= static_cast<double>(delta_u.cols());
        for (double& v : delta_u.row(i))
            v -= mean;
        for (std::size_t c = 0; c < kernels.neurons(); ++c) {
            double mass = 0.0;
            for (std::size_t lag = 1; lag <= kernels.memory(); ++lag)
                mass += kernels(c, i, lag);
            theta.alpha(c) += mean * mass;
        }
    }
}

double prior_mean(const LogGammaPrior& prior)
{
    prior.validate();
    return boost::math::digamma(prior.shape) + std::log(prior.scale);
}

LogGammaPrior zero_mean_prior(double shape)
{
    LogGammaPrior p{shape, 1.0};
    p.validate();
    p.scale = std::exp(-boost::math::digamma(shape));
    return p;
}

}  // namespace spikeglm
