#include "oracles.hpp"

#include "spikeglm/model.hpp"

#include <doctest.h>

#include <boost/math/special_functions/digamma.hpp>

#include <cmath>

using namespace spikeglm;

TEST_SUITE("model")
{
    TEST_CASE("covariate vector at the first bin holds only the constant")
    {
        const auto t = oracle::random_train(6, 3, 0.5, 3);
        const auto y = covariate_vector(t, 1, 0, 2, 2);
        REQUIRE(y.size() == 7);
        CHECK(y[0] == 1.0);
        for (std::size_t j = 1; j < y.size(); ++j)
            CHECK(y[j] == 0.0);
    }

    TEST_CASE("covariate vector reads own and other history")
    {
        SpikeTrain t(2, 2, 0.05);
        t.set(0, 0, 1);
        const auto y = covariate_vector(t, 0, 1, 1, 1);
        CHECK(y == std::vector<double>{1.0, 1.0, 0.0});
    }

    TEST_CASE("covariate slots agree with an enumerated index map")
    {
        CHECK(covariate_dim(3, 2, 2) == 7);
        const auto t = oracle::random_train(12, 3, 0.4, 11, 0.05, 3);
        for (std::size_t c = 0; c < 3; ++c) {
            const auto slots = oracle::slot_list(3, c, 2, 2);
            for (std::size_t j = 0; j < slots.size(); ++j) {
                if (slots[j].kind == oracle::Slot::own)
                    CHECK(intrinsic_slot(slots[j].lag) == j);
                if (slots[j].kind == oracle::Slot::other)
                    CHECK(extrinsic_slot(c, slots[j].source, slots[j].lag, 2, 2) == j);
            }
            for (std::size_t k = 0; k < t.bins(); ++k)
                CHECK(covariate_vector(t, c, k, 2, 2) == oracle::covariates(t, c, k, 2, 2));
        }
    }

    TEST_CASE("sparse design matches the dense covariates")
    {
        const auto t = oracle::random_train(30, 3, 0.3, 5, 0.05, 2);
        CovariateDesign d(t, 4, 2);
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t k = 0; k < t.bins(); ++k) {
                std::vector<double> y(d.dim(), 0.0);
                y[0] = 1.0;
                for (const auto& e : d.row(c, k))
                    y[e.slot] = e.value;
                CHECK(y == oracle::covariates(t, c, k, 4, 2));
            }
    }

    TEST_CASE("omega of the zero model is one")
    {
        const auto t = oracle::random_train(8, 2, 0.5, 1);
        ModelTheta th(2, 3, 2);
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t k = 0; k < 8; ++k)
                CHECK(omega(th, t, c, k) == 1.0);
    }

    TEST_CASE("omega without history equals exp(alpha)")
    {
        SpikeTrain t(3, 1, 0.05);
        ModelTheta th(1, 2, 1);
        th.alpha(0) = std::log(2.0);
        CHECK(omega(th, t, 0, 2) == doctest::Approx(2.0).epsilon(1e-15));
    }

    TEST_CASE("product form equals the sum-exp form")
    {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const auto t = oracle::random_train(5, 2, 0.5, seed);
            const auto th = oracle::random_theta(2, 2, 1, seed + 100);
            const auto mu = to_mu(th);
            for (std::size_t c = 0; c < 2; ++c)
                for (std::size_t k = 0; k < 5; ++k) {
                    const double sum_form = std::exp(static_cast<double>(oracle::log_omega(th, t, c, k)));
                    const double prod_form = omega_product(mu, t, c, k, 2, 1);
                    CHECK(std::abs(prod_form - sum_form) <= 1e-12 * sum_form);
                }
        }
    }

    TEST_CASE("to_mu and from_mu invert each other")
    {
        const auto th = oracle::random_theta(3, 4, 2, 9);
        const auto back = from_mu(to_mu(th), 3, 4, 2);
        for (std::size_t n = 0; n < th.alpha_values().size(); ++n)
            CHECK(back.alpha_values()[n] == doctest::Approx(th.alpha_values()[n]).epsilon(1e-14));
        for (std::size_t n = 0; n < th.extrinsic_values().size(); ++n)
            CHECK(back.extrinsic_values()[n] ==
                  doctest::Approx(th.extrinsic_values()[n]).epsilon(1e-14));
    }

    TEST_CASE("lambda_U is one for zero activities and at the first bin")
    {
        UnknownModel u{oracle::random_kernels(2, 2, 3, 4), oracle::random_activities(2, 6, 5), {}};
        for (std::size_t c = 0; c < 2; ++c)
            CHECK(lambda_u(u, c, 0) == 1.0);
        u.delta_u = Grid<double>(2, 6, 0.0);
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t k = 0; k < 6; ++k)
                CHECK(lambda_u(u, c, k) == 1.0);
    }

    TEST_CASE("lambda_U closed-form example")
    {
        UnknownKernels g(1, 1, 2);
        g(0, 0, 1) = 0.5;
        g(0, 0, 2) = 0.25;
        Grid<double> du(1, 3);
        du(0, 1) = std::log(4.0);
        du(0, 0) = std::log(16.0);
        UnknownModel u{g, du, {}};
        CHECK(lambda_u(u, 0, 2) == doctest::Approx(4.0).epsilon(1e-14));
    }

    TEST_CASE("cif factorizes into lambda_U times omega")
    {
        const auto t = oracle::random_train(10, 3, 0.4, 8);
        const auto th = oracle::random_theta(3, 2, 2, 9);
        UnknownModel u{oracle::random_kernels(3, 1, 2, 10), oracle::random_activities(1, 10, 11), {}};
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t k = 0; k < 10; ++k) {
                const double direct = std::exp(static_cast<double>(
                    oracle::log_omega(th, t, c, k) + oracle::log_lambda_u(u.kernels, u.delta_u, c, k)));
                CHECK(cif(th, u, t, c, k) == doctest::Approx(direct).epsilon(1e-13));
                CHECK(cif(th, u, t, c, k) == lambda_u(u, c, k) * omega(th, t, c, k));
            }
        ModelTheta zero(3, 2, 2);
        UnknownModel none{UnknownKernels(3, 1, 2), Grid<double>(1, 10), {}};
        CHECK(cif(zero, none, t, 1, 5) == 1.0);
    }

    TEST_CASE("log-likelihood of the unit-intensity model")
    {
        SpikeTrain t(10, 1, 0.05);
        t.set(1, 0, 1);
        t.set(4, 0, 1);
        t.set(7, 0, 1);
        UnknownModel u{UnknownKernels(1, 1, 1), Grid<double>(1, 10), {}};
        CHECK(log_likelihood(ModelTheta(1, 2, 1), u, t) == doctest::Approx(-0.5).epsilon(1e-15));

        SpikeTrain empty(20, 3, 0.1);
        UnknownModel u3{UnknownKernels(3, 1, 1), Grid<double>(1, 20), {}};
        CHECK(log_likelihood(ModelTheta(3, 1, 1), u3, empty) == doctest::Approx(-6.0).epsilon(1e-14));
    }

    TEST_CASE("log-likelihood matches an extended-precision oracle")
    {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto t = oracle::random_train(40, 3, 0.3, seed, 0.05, 2);
            const auto th = oracle::random_theta(3, 3, 2, seed + 50);
            UnknownModel u{oracle::random_kernels(3, 2, 3, seed + 60), oracle::random_activities(2, 40, seed + 70),
                           {}};
            const double ref = static_cast<double>(oracle::log_likelihood(th, u.kernels, u.delta_u, t));
            CHECK(std::abs(log_likelihood(th, u, t) - ref) <= 1e-10 * std::abs(ref));
            const auto per = log_likelihood_per_neuron(t, omega_table(th, t), lambda_u_table(u.kernels, u.delta_u, 40));
            double sum = 0.0;
            for (double v : per)
                sum += v;
            CHECK(std::abs(sum - ref) <= 1e-10 * std::abs(ref));
        }
    }

    TEST_CASE("tables agree across thread counts")
    {
        const auto t = oracle::random_train(200, 4, 0.2, 3);
        const auto th = oracle::random_theta(4, 5, 3, 4);
        const auto g = oracle::random_kernels(4, 2, 3, 5);
        const auto du = oracle::random_activities(2, 200, 6);
        CHECK(omega_table(th, t, 1) == omega_table(th, t, 4));
        CHECK(lambda_u_table(g, du, 200, 1) == lambda_u_table(g, du, 200, 4));
        CovariateDesign d(t, 5, 3);
        CHECK(omega_table(to_mu(th), d, 1) == omega_table(to_mu(th), d, 3));
    }

    TEST_CASE("penalized objective at zero activities")
    {
        const auto t = oracle::random_train(15, 2, 0.3, 2);
        const auto th = oracle::random_theta(2, 2, 1, 3);
        UnknownModel u{oracle::random_kernels(2, 2, 2, 4), Grid<double>(2, 15), {50.0, 1.0}};
        const auto om = omega_table(th, t);
        double data = 0.0;
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t k = 0; k < 15; ++k)
                data -= om(c, k) * t.tau();
        CHECK(penalized_objective(th, u, t) == doctest::Approx(data - 2.0 * 15.0).epsilon(1e-13));
    }

    TEST_CASE("penalized objective partials match central differences")
    {
        const auto t = oracle::random_train(12, 2, 0.4, 21);
        const auto th = oracle::random_theta(2, 2, 1, 22);
        const auto g = oracle::random_kernels(2, 1, 3, 23);
        const auto du0 = oracle::random_activities(1, 12, 24);
        const LogGammaPrior prior{5.0, 0.7};
        for (std::size_t q = 0; q < 12; ++q) {
            // Closed form: shape - e^u/scale + sum over affected bins of
            // gamma_m (dN - omega tau lambda_U).
            UnknownModel u{g, du0, prior};
            double analytic = prior.shape - std::exp(du0(0, q)) / prior.scale;
            for (std::size_t c = 0; c < 2; ++c)
                for (std::size_t m = 1; m <= 3 && q + m < 12; ++m)
                    analytic += g(c, 0, m) * (t(q + m, c) - omega(th, t, c, q + m) * t.tau() *
                                                                lambda_u(u, c, q + m));
            auto f = [&](double x) {
                auto du = du0;
                du(0, q) = x;
                return static_cast<double>(oracle::penalized(th, g, du, t, prior.shape, prior.scale));
            };
            CHECK(oracle::central_diff(f, du0(0, q), 1e-5) == doctest::Approx(analytic).epsilon(1e-6));
            // The library objective differs from the oracle only by constants.
            auto lib = [&](double x) {
                UnknownModel v{g, du0, prior};
                v.delta_u(0, q) = x;
                return penalized_objective(th, v, t);
            };
            CHECK(oracle::central_diff(lib, du0(0, q), 1e-5) == doctest::Approx(analytic).epsilon(1e-6));
        }
    }

    TEST_CASE("centring keeps the intensity on bins with full unknown history")
    {
        const auto t = oracle::random_train(20, 3, 0.3, 31);
        auto th = oracle::random_theta(3, 2, 2, 32);
        const auto g = oracle::random_kernels(3, 2, 3, 33);
        auto du = oracle::random_activities(2, 20, 34);
        for (double& v : du.data())
            v += 0.7;
        UnknownModel before{g, du, {}};
        const auto th0 = th;
        center_unknowns(th, g, du);
        UnknownModel after{g, du, {}};
        for (std::size_t i = 0; i < 2; ++i) {
            double mean = 0.0;
            for (double v : du.row(i))
                mean += v;
            CHECK(std::abs(mean / 20.0) < 1e-12);
        }
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t k = 3; k < 20; ++k)
                CHECK(cif(th, after, t, c, k) == doctest::Approx(cif(th0, before, t, c, k)).epsilon(1e-12));
    }

    TEST_CASE("prior mean and the zero-mean prior")
    {
        CHECK(prior_mean({50.0, 1.0}) == doctest::Approx(boost::math::digamma(50.0)).epsilon(1e-15));
        const auto p = zero_mean_prior(50.0);
        CHECK(p.shape == 50.0);
        CHECK(std::abs(prior_mean(p)) < 1e-14);
        CHECK_THROWS_AS(zero_mean_prior(0.0), ArgumentError);
    }

    TEST_CASE("dimension mismatches are rejected")
    {
        const auto t = oracle::random_train(10, 2, 0.3, 1);
        UnknownModel u{UnknownKernels(3, 1, 1), Grid<double>(1, 10), {}};
        CHECK_THROWS_AS(log_likelihood(ModelTheta(2, 1, 1), u, t), ArgumentError);
        CHECK_THROWS_AS(omega(ModelTheta(3, 1, 1), t, 0, 0), ArgumentError);
        CHECK_THROWS_AS(covariate_vector(t, 2, 0, 1, 1), ArgumentError);
    }

    TEST_CASE("intensity overflow is reported")
    {
        const auto t = oracle::random_train(5, 1, 1.0, 1);
        ModelTheta th(1, 1, 0);
        th.alpha(0) = 800.0;
        CHECK_THROWS_AS(omega(th, t, 0, 1), NumericRangeError);
    }
}
