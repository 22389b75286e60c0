#include "spikeglm/estimator.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <string>

namespace spikeglm {

namespace {

// Sum of a source's kernel over the lags that fit before bin k:
// sum_{m=1}^{min(M,k)} gamma_m^i(c).
double kernel_mass_before(const UnknownKernels& kernels, std::size_t c, std::size_t i, std::size_t k)
{
    double s = 0.0;
    for (std::size_t lag = 1; lag <= std::min(kernels.memory(), k); ++lag)
        s += kernels(c, i, lag);
    return s;
}

void check_e_inputs(const Grid<double>& nu, const EStepWorkspace& ws, const Grid<double>& omega,
                    const SpikeTrain& train, const UnknownKernels& kernels)
{
    const std::size_t I = kernels.sources();
    const std::size_t K = train.bins();
    if (nu.rows() != I || nu.cols() != K || ws.numer.rows() != I || ws.numer.cols() != K)
        throw ArgumentError("E-step: activity tables must be I x K");
    if (omega.rows() != train.neurons() || omega.cols() != K)
        throw ArgumentError("E-step: omega cache must be C x K");
    if (kernels.neurons() != train.neurons())
        throw ArgumentError("E-step: kernels do not match the neuron count");
}

Grid<double> log_of(const Grid<double>& g)
{
    Grid<double> out(g.rows(), g.cols());
    std::transform(g.data().begin(), g.data().end(), out.data().begin(),
                   [](double v) { return std::log(v); });
    return out;
}

// sum_c sum_m gamma_m^i(c) omega^c(q+m) tau lambda_U^c(q+m): the expected
// spike mass that unknown (i, q) acts on.
double coupled_intensity(const UnknownKernels& kernels, const Grid<double>& omega,
                         const Grid<double>& lambda_u, double tau, std::size_t i, std::size_t q)
{
    const std::size_t K = omega.cols();
    const std::size_t span = std::min(kernels.memory(), K - 1 - q);
    double s = 0.0;
    for (std::size_t c = 0; c < kernels.neurons(); ++c)
        for (std::size_t lag = 1; lag <= span; ++lag)
            s += kernels(c, i, lag) * omega(c, q + lag) * tau * lambda_u(c, q + lag);
    return s;
}

double max_relative_change(const std::vector<double>& before, const std::vector<double>& after)
{
    double worst = 0.0;
    for (std::size_t n = 0; n < before.size(); ++n)
        worst = std::max(worst, std::abs(after[n] - before[n]) / before[n]);
    return worst;
}

// Intensity-weighted covariate sums sum_k Y_j(k) tau lambda^c(k) for one neuron.
std::vector<double> m_denominator(const std::vector<double>& mu, const MStepWorkspace& ws,
                                  const Grid<double>& lambda_u, double tau, std::size_t c)
{
    const auto& design = ws.design;
    std::vector<double> log_mu(mu.size());
    std::transform(mu.begin(), mu.end(), log_mu.begin(), [](double m) { return std::log(m); });
    std::vector<double> den(mu.size(), 0.0);
    for (std::size_t k = 0; k < design.bins(); ++k) {
        const auto row = design.row(c, k);
        double eta = log_mu[0];
        for (const auto& e : row)
            eta += e.value * log_mu[e.slot];
        const double lam = tau * lambda_u(c, k) * std::exp(eta);
        den[0] += lam;
        for (const auto& e : row)
            den[e.slot] += e.value * lam;
    }
    return den;
}

void check_m_inputs(const MuView& mu, const MStepWorkspace& ws, const Grid<double>& lambda_u,
                    const SpikeTrain& train)
{
    const std::size_t C = train.neurons();
    if (ws.design.neurons() != C || ws.design.bins() != train.bins())
        throw ArgumentError("M-step: workspace does not match the spike train");
    if (mu.size() != C)
        throw ArgumentError("M-step: expected one mu vector per neuron");
    for (const auto& m : mu)
        if (m.size() != ws.design.dim())
            throw ArgumentError("M-step: mu length does not match 1 + Q + (C-1)R");
    if (lambda_u.rows() != C || lambda_u.cols() != train.bins())
        throw ArgumentError("M-step: lambda_U cache must be C x K");
}

std::vector<double> flatten(const MuView& mu)
{
    std::vector<double> out;
    for (const auto& m : mu)
        out.insert(out.end(), m.begin(), m.end());
    return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

EStepWorkspace e_step_precompute(const SpikeTrain& train, const UnknownKernels& kernels,
                                 const LogGammaPrior& prior, double l)
{
    kernels.validate();
    prior.validate();
    if (kernels.neurons() != train.neurons())
        throw ArgumentError("e_step_precompute: kernels do not match the neuron count");
    if (!(l > 0.0 && l < 2.0))
        throw ArgumentError("e_step_precompute: relaxation l must lie in (0, 2)");

    const std::size_t I = kernels.sources();
    const std::size_t K = train.bins();
    const std::size_t C = train.neurons();
    EStepWorkspace ws{Grid<double>(I, K), Grid<double>(I, K), Grid<double>(I, K), Mask(I, K), l};
    for (std::size_t i = 0; i < I; ++i) {
        for (std::size_t q = 0; q < K; ++q) {
            const std::size_t span = std::min(kernels.memory(), K - 1 - q);
            double numer = prior.shape;
            double denom = 0.0;
            for (std::size_t c = 0; c < C; ++c)
                for (std::size_t lag = 1; lag <= span; ++lag) {
                    const std::size_t k = q + lag;
                    const double w = train(k, c) * kernels(c, i, lag);
                    numer += w;
                    denom += w * kernel_mass_before(kernels, c, i, k);
                }
            ws.numer(i, q) = numer;
            ws.denom(i, q) = denom;
            ws.free(i, q) = denom > 0.0 ? 1 : 0;
            // The prior's curvature enters the exponent through its counted
            // value at the fixed point, nu/scale ~ shape.
            ws.t_exp(i, q) = denom > 0.0 ? l * numer / (denom + prior.shape) : 0.0;
        }
    }
    return ws;
}

Grid<double> e_step_update(const Grid<double>& nu, const EStepWorkspace& ws,
                           const Grid<double>& omega, const SpikeTrain& train,
                           const UnknownKernels& kernels, const LogGammaPrior& prior,
                           unsigned threads)
{
    check_e_inputs(nu, ws, omega, train, kernels);
    const std::size_t I = kernels.sources();
    const std::size_t K = train.bins();
    const auto lam_u = lambda_u_table(kernels, log_of(nu), K, threads);
    Grid<double> next(I, K, 1.0);
    detail::parallel_for(I * K, threads, [&](std::size_t n) {
        const std::size_t i = n / K;
        const std::size_t q = n % K;
        if (!ws.free(i, q))
            return;
        const double s = coupled_intensity(kernels, omega, lam_u, train.tau(), i, q);
        const double ratio = ws.numer(i, q) / (s + nu(i, q) / prior.scale);
        const double v = nu(i, q) * std::pow(ratio, ws.t_exp(i, q));
        if (!std::isfinite(v) || v <= 0.0)
            throw NumericRangeError("E-step update out of range at bin " + std::to_string(q) +
                                    ", source " + std::to_string(i));
        next(i, q) = v;
    });
    return next;
}

Grid<double> e_step_stationarity(const Grid<double>& nu, const EStepWorkspace& ws,
                                 const Grid<double>& omega, const SpikeTrain& train,
                                 const UnknownKernels& kernels, const LogGammaPrior& prior)
{
    check_e_inputs(nu, ws, omega, train, kernels);
    const std::size_t I = kernels.sources();
    const std::size_t K = train.bins();
    const auto lam_u = lambda_u_table(kernels, log_of(nu), K);
    Grid<double> out(I, K, 0.0);
    for (std::size_t i = 0; i < I; ++i)
        for (std::size_t q = 0; q < K; ++q)
            if (ws.free(i, q))
                out(i, q) = ws.numer(i, q) - nu(i, q) / prior.scale -
                            coupled_intensity(kernels, omega, lam_u, train.tau(), i, q);
    return out;
}

EStepResult run_e_step(const Grid<double>& nu_init, const EStepWorkspace& ws,
                       const Grid<double>& omega, const SpikeTrain& train,
                       const UnknownKernels& kernels, const LogGammaPrior& prior,
                       const FitConfig& config)
{
    check_e_inputs(nu_init, ws, omega, train, kernels);
    EStepResult res;
    res.nu = nu_init;
    for (std::size_t n = 0; n < res.nu.size(); ++n)
        if (!ws.free.data()[n])
            res.nu.data()[n] = 1.0;

    for (int it = 1; it <= config.inner_max_iters; ++it) {
        Grid<double> next;
        try {
            next = e_step_update(res.nu, ws, omega, train, kernels, prior, config.threads);
        } catch (const NumericRangeError& e) {
            throw NumericRangeError(std::string(e.what()) + ", sweep " + std::to_string(it));
        }
        res.max_rel_change = max_relative_change(res.nu.data(), next.data());
        res.nu = std::move(next);
        res.iters = it;
        if (res.max_rel_change < config.inner_tol) {
            res.converged = true;
            break;
        }
    }
    const auto st = e_step_stationarity(res.nu, ws, omega, train, kernels, prior);
    for (double v : st.data())
        res.residual = std::max(res.residual, std::abs(v));
    return res;
}

MStepWorkspace m_step_precompute(const SpikeTrain& train, std::size_t Q, std::size_t R)
{
    MStepWorkspace ws;
    ws.design = CovariateDesign(train, Q, R);
    const std::size_t C = train.neurons();
    const std::size_t D = ws.design.dim();
    ws.numer.assign(C, std::vector<double>(D, 0.0));
    ws.b_exp.assign(C, std::vector<double>(D, 0.0));
    ws.free.assign(C, std::vector<std::uint8_t>(D, 0));
    for (std::size_t c = 0; c < C; ++c) {
        std::vector<double> den(D, 0.0);
        auto& numer = ws.numer[c];
        for (std::size_t k = 0; k < train.bins(); ++k) {
            const int n = train(k, c);
            if (n == 0)
                continue;
            const auto row = ws.design.row(c, k);
            double y_sum = 1.0;
            for (const auto& e : row)
                y_sum += e.value;
            numer[0] += n;
            den[0] += n * y_sum;
            for (const auto& e : row) {
                numer[e.slot] += n * e.value;
                den[e.slot] += n * e.value * y_sum;
            }
        }
        for (std::size_t j = 0; j < D; ++j) {
            if (den[j] > 0.0) {
                ws.free[c][j] = 1;
                ws.b_exp[c][j] = numer[j] / den[j];
            }
        }
    }
    return ws;
}

MuView m_step_update(const MuView& mu, const MStepWorkspace& ws, const Grid<double>& lambda_u,
                     const SpikeTrain& train, unsigned threads)
{
    check_m_inputs(mu, ws, lambda_u, train);
    const std::size_t C = train.neurons();
    MuView next(C);
    detail::parallel_for(C, threads, [&](std::size_t c) {
        const auto den = m_denominator(mu[c], ws, lambda_u, train.tau(), c);
        auto& out = next[c];
        out.assign(mu[c].size(), 1.0);
        for (std::size_t j = 0; j < out.size(); ++j) {
            if (!ws.free[c][j])
                continue;
            const double v = mu[c][j] * std::pow(ws.numer[c][j] / den[j], ws.b_exp[c][j]);
            if (!std::isfinite(v) || v <= 0.0)
                throw NumericRangeError("M-step update out of range at neuron " +
                                        std::to_string(c) + ", slot " + std::to_string(j));
            out[j] = v;
        }
    });
    return next;
}

std::vector<std::vector<double>> log_mu_gradient(const MuView& mu, const MStepWorkspace& ws,
                                                 const Grid<double>& lambda_u,
                                                 const SpikeTrain& train)
{
    check_m_inputs(mu, ws, lambda_u, train);
    std::vector<std::vector<double>> grad(train.neurons());
    for (std::size_t c = 0; c < train.neurons(); ++c) {
        const auto den = m_denominator(mu[c], ws, lambda_u, train.tau(), c);
        grad[c].resize(den.size());
        for (std::size_t j = 0; j < den.size(); ++j)
            grad[c][j] = ws.numer[c][j] - den[j];
    }
    return grad;
}

MStepResult run_m_step(const MuView& mu_init, const MStepWorkspace& ws,
                       const Grid<double>& lambda_u, const SpikeTrain& train,
                       const FitConfig& config)
{
    check_m_inputs(mu_init, ws, lambda_u, train);
    MStepResult res;
    res.mu = mu_init;
    for (std::size_t c = 0; c < res.mu.size(); ++c)
        for (std::size_t j = 0; j < res.mu[c].size(); ++j)
            if (!ws.free[c][j])
                res.mu[c][j] = 1.0;

    for (int it = 1; it <= config.inner_max_iters; ++it) {
        MuView next;
        try {
            next = m_step_update(res.mu, ws, lambda_u, train, config.threads);
        } catch (const NumericRangeError& e) {
            throw NumericRangeError(std::string(e.what()) + ", sweep " + std::to_string(it));
        }
        res.max_rel_change = max_relative_change(flatten(res.mu), flatten(next));
        res.mu = std::move(next);
        res.iters = it;
        if (res.max_rel_change < config.inner_tol) {
            res.converged = true;
            break;
        }
    }
    const auto grad = log_mu_gradient(res.mu, ws, lambda_u, train);
    for (std::size_t c = 0; c < grad.size(); ++c)
        for (std::size_t j = 0; j < grad[c].size(); ++j)
            if (ws.free[c][j])
                res.gradient = std::max(res.gradient, std::abs(grad[c][j]));
    return res;
}

FitResult em_fit(const SpikeTrain& train, const UnknownKernels& kernels,
                 const LogGammaPrior& prior, const FitConfig& config)
{
    const auto t0 = std::chrono::steady_clock::now();
    config.validate();
    kernels.validate();
    prior.validate();
    const std::size_t C = train.neurons();
    const std::size_t K = train.bins();
    const std::size_t I = kernels.sources();
    if (kernels.neurons() != C)
        throw ArgumentError("em_fit: gamma has " + std::to_string(kernels.neurons()) +
                            " neurons, spike train has " + std::to_string(C));
    if (I != config.I || kernels.memory() != config.M)
        throw ArgumentError("em_fit: gamma dimensions disagree with the configured I and M");
    if (I >= C)
        throw ArgumentError("em_fit: the number of unknown sources must be smaller than C");

    const auto es = e_step_precompute(train, kernels, prior, config.l);
    const auto ms = m_step_precompute(train, config.Q, config.R);

    FitResult out;
    auto& rep = out.report;
    rep.seed = config.seed;
    rep.e_free = es.free;
    rep.m_free = ms.free;

    // Initial activities: iid U[-1, 1], drawn in (source, bin) order; pinned
    // entries stay at zero.
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Grid<double> delta_u(I, K);
    for (std::size_t n = 0; n < delta_u.size(); ++n) {
        const double u = unif(rng);
        delta_u.data()[n] = es.free.data()[n] ? u : 0.0;
    }
    Grid<double> nu(I, K);
    std::transform(delta_u.data().begin(), delta_u.data().end(), nu.data().begin(),
                   [](double u) { return std::exp(u); });

    auto lam_u = lambda_u_table(kernels, delta_u, K, config.threads);
    MuView mu(C, std::vector<double>(ms.design.dim(), 1.0));
    auto mres = run_m_step(mu, ms, lam_u, train, config);
    mu = std::move(mres.mu);
    rep.m_sweeps.push_back(mres.iters);
    rep.e_sweeps.push_back(0);
    rep.inner_converged = mres.converged;
    rep.m_residual = mres.gradient;
    auto om = omega_table(mu, ms.design, config.threads);
    double ll = log_likelihood(train, om, lam_u);
    rep.ll_trace.push_back(ll);
    rep.penalized_trace.push_back(penalized_objective(train, om, lam_u, delta_u, prior));

    for (int it = 1; it <= config.em_max_iters; ++it) {
        auto eres = run_e_step(nu, es, om, train, kernels, prior, config);
        nu = std::move(eres.nu);
        std::transform(nu.data().begin(), nu.data().end(), delta_u.data().begin(),
                       [](double v) { return std::log(v); });
        lam_u = lambda_u_table(kernels, delta_u, K, config.threads);

        mres = run_m_step(mu, ms, lam_u, train, config);
        mu = std::move(mres.mu);
        om = omega_table(mu, ms.design, config.threads);

        rep.e_sweeps.push_back(eres.iters);
        rep.m_sweeps.push_back(mres.iters);
        rep.inner_converged = eres.converged && mres.converged;
        rep.e_residual = eres.residual;
        rep.m_residual = mres.gradient;
        rep.em_iters = it;

        const double ll_new = log_likelihood(train, om, lam_u);
        rep.ll_trace.push_back(ll_new);
        rep.penalized_trace.push_back(penalized_objective(train, om, lam_u, delta_u, prior));
        const double rel = std::abs(ll_new - ll) / (1.0 + std::abs(ll_new));
        ll = ll_new;
        if (rel < config.em_tol) {
            rep.converged = true;
            break;
        }
    }

    out.theta = from_mu(mu, C, config.Q, config.R);
    out.delta_u = std::move(delta_u);
    rep.wall_time = seconds_since(t0);
    return out;
}

FitResult fit_without_unknowns(const SpikeTrain& train, const FitConfig& config,
                               const std::vector<int>* sweep_schedule)
{
    const auto t0 = std::chrono::steady_clock::now();
    config.validate();
    const std::size_t C = train.neurons();
    const std::size_t K = train.bins();
    const auto ms = m_step_precompute(train, config.Q, config.R);
    const Grid<double> lam_u(C, K, 1.0);

    FitResult out;
    auto& rep = out.report;
    rep.seed = config.seed;
    rep.e_free = Mask(config.I, K, 0);
    rep.m_free = ms.free;

    MuView mu(C, std::vector<double>(ms.design.dim(), 1.0));
    FitConfig seg_cfg = config;
    const std::size_t segments =
        sweep_schedule ? sweep_schedule->size() : static_cast<std::size_t>(config.em_max_iters) + 1;
    for (std::size_t s = 0; s < segments; ++s) {
        if (sweep_schedule)
            seg_cfg.inner_max_iters = std::max(1, (*sweep_schedule)[s]);
        auto mres = run_m_step(mu, ms, lam_u, train, seg_cfg);
        mu = std::move(mres.mu);
        const auto om = omega_table(mu, ms.design, config.threads);
        rep.ll_trace.push_back(log_likelihood(train, om, lam_u));
        rep.m_sweeps.push_back(mres.iters);
        rep.e_sweeps.push_back(0);
        rep.m_residual = mres.gradient;
        rep.inner_converged = mres.converged;
        rep.em_iters = static_cast<int>(s);
        rep.converged = mres.converged;
        if (!sweep_schedule && mres.converged)
            break;
    }
    out.theta = from_mu(mu, C, config.Q, config.R);
    out.delta_u = Grid<double>(config.I, K, 0.0);
    rep.wall_time = seconds_since(t0);
    return out;
}

double contraction_diagnostic(const Grid<double>& nu_hat, const EStepWorkspace& ws,
                              const Grid<double>& omega, const SpikeTrain& train,
                              const UnknownKernels& kernels, const LogGammaPrior& prior, double l)
{
    check_e_inputs(nu_hat, ws, omega, train, kernels);
    const std::size_t K = train.bins();
    const double tau = train.tau();

    std::vector<std::size_t> free_idx;
    for (std::size_t n = 0; n < ws.free.size(); ++n)
        if (ws.free.data()[n])
            free_idx.push_back(n);
    const std::size_t n_free = free_idx.size();
    if (n_free > 200)
        throw ArgumentError("contraction_diagnostic: at most 200 free entries supported");
    if (n_free == 0)
        return 0.0;

    // Exact exponent at nu_hat: the intensity-weighted kernel overlap plus the
    // prior curvature.
    std::vector<double> t_exact(n_free);
    {
        const auto lam_u = lambda_u_table(kernels, log_of(nu_hat), K);
        for (std::size_t a = 0; a < n_free; ++a) {
            const std::size_t i = free_idx[a] / K;
            const std::size_t q = free_idx[a] % K;
            const std::size_t span = std::min(kernels.memory(), K - 1 - q);
            double d = nu_hat(i, q) / prior.scale;
            for (std::size_t c = 0; c < kernels.neurons(); ++c)
                for (std::size_t lag = 1; lag <= span; ++lag) {
                    const std::size_t k = q + lag;
                    d += kernels(c, i, lag) * omega(c, k) * tau * lam_u(c, k) *
                         kernel_mass_before(kernels, c, i, k);
                }
            t_exact[a] = l * ws.numer(i, q) / d;
        }
    }

    auto fixed_point_map = [&](const Grid<double>& nu) {
        const auto lam_u = lambda_u_table(kernels, log_of(nu), K);
        std::vector<double> g(n_free);
        for (std::size_t a = 0; a < n_free; ++a) {
            const std::size_t i = free_idx[a] / K;
            const std::size_t q = free_idx[a] % K;
            const double s = coupled_intensity(kernels, omega, lam_u, tau, i, q);
            g[a] = nu(i, q) * std::pow(ws.numer(i, q) / (s + nu(i, q) / prior.scale), t_exact[a]);
        }
        return g;
    };

    Grid<double> jac(n_free, n_free);
    for (std::size_t b = 0; b < n_free; ++b) {
        Grid<double> plus = nu_hat;
        Grid<double> minus = nu_hat;
        const double h = 1e-5 * nu_hat.data()[free_idx[b]];
        plus.data()[free_idx[b]] += h;
        minus.data()[free_idx[b]] -= h;
        const auto gp = fixed_point_map(plus);
        const auto gm = fixed_point_map(minus);
        for (std::size_t a = 0; a < n_free; ++a)
            jac(a, b) = (gp[a] - gm[a]) / (2.0 * h);
    }

    auto apply = [&](const std::vector<double>& x) {
        std::vector<double> y(n_free, 0.0);
        for (std::size_t a = 0; a < n_free; ++a)
            for (std::size_t b = 0; b < n_free; ++b)
                y[a] += jac(a, b) * x[b];
        return y;
    };
    auto norm = [](const std::vector<double>& x) {
        double s = 0.0;
        for (double v : x)
            s += v * v;
        return std::sqrt(s);
    };

    // Power iteration on J^2, whose dominant eigenvalue is rho(J)^2 even when
    // J has a +/- pair of extreme eigenvalues.
    std::vector<double> x(n_free);
    for (std::size_t a = 0; a < n_free; ++a)
        x[a] = 1.0 + 0.1 * static_cast<double>(a % 7);
    double estimate = 0.0;
    for (int it = 0; it < 5000; ++it) {
        const double nx = norm(x);
        if (nx == 0.0)
            return 0.0;
        for (double& v : x)
            v /= nx;
        auto y = apply(apply(x));
        const double next = std::sqrt(norm(y));
        const bool settled = it > 10 && std::abs(next - estimate) < 1e-12 * std::max(1.0, next);
        estimate = next;
        x = std::move(y);
        if (settled)
            break;
    }
    return estimate;
}

}  // namespace spikeglm
