#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "antenna.hpp"
#include "beamsel_sr.hpp"
#include "mc_oracle.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "special.hpp"

using namespace crbeam;

namespace {

QuantizedPowerPolicy small_policy(std::vector<double> mu, std::vector<double> p) {
    QuantizedPowerPolicy policy;
    policy.n_b = (int)std::log2((double)mu.size());
    policy.mu = std::move(mu);
    policy.p = std::move(p);
    return policy;
}

} // namespace

TEST_CASE("outage probability is the CDF at the lowest threshold") {
    SelectionDiversity dist({1.0});
    CHECK(outage_probability(small_policy({0.5, 1.0}, {0.0, 1.0, 2.0}), dist) ==
          doctest::Approx(1.0 - std::exp(-0.5)).epsilon(1e-12));
    CHECK(outage_probability(small_policy({1e-9, 1.0}, {0.0, 1.0, 2.0}), dist) < 1e-8);

    McOptions opts;
    opts.trials = 400000;
    opts.threads = 2;
    opts.seed = 2211;
    SelectionDiversity eight({3.03, 0.5, 0.12, 0.05, 0.4, 0.05, 0.12, 0.5});
    auto policy = small_policy({0.4, 1.0, 2.0, 4.0}, {0.0, 0.5, 1.0, 2.0, 4.0});
    const Estimate emp = mc_outage(eight, policy.mu[0], opts);
    CHECK(std::fabs(outage_probability(policy, eight) - emp.value) < 0.003);
}

TEST_CASE("the V building block") {
    // mu = 0 collapses to 0.5 (1/sqrt(1 + 2A/snr) - 1)
    for (double a : {0.3, 1.0, 4.0}) {
        for (double snr : {0.5, 2.0, 11.0}) {
            CHECK(sep_v_term(0.0, snr, a) ==
                  doctest::Approx(0.5 * (1.0 / std::sqrt(1.0 + 2.0 * a / snr) - 1.0))
                      .epsilon(1e-12));
        }
        CHECK(sep_v_term(std::numeric_limits<double>::infinity(), 3.0, a) == 0.0);
        CHECK(sep_v_term(1.2, 0.0, a) == doctest::Approx(-0.5 * std::exp(-1.2 * a)).epsilon(1e-12));
    }
}

TEST_CASE("symbol error closed form") {
    SelectionDiversity dist({2.0, 1.0, 0.6});
    SUBCASE("zero power floors at half the idle-weighted mass") {
        auto policy = small_policy({0.3, 0.9}, {0.0, 0.0, 0.0});
        const double alpha0 = 0.55, beta0 = 0.04;
        CHECK(symbol_error_probability(policy, dist, alpha0, beta0, 4.0, 1.0, 1.0) ==
              doctest::Approx(0.5 * (alpha0 + beta0)).epsilon(1e-10));
    }
    SUBCASE("matches direct integration on random small policies") {
        Xoshiro256 rng(606, 0);
        for (int trial = 0; trial < 8; ++trial) {
            std::vector<double> delta(3);
            for (double& d : delta) d = 0.3 + 3.0 * rng.uniform();
            SelectionDiversity d3(delta);
            const double mu1 = 0.1 + rng.uniform();
            const double mu2 = mu1 + 0.2 + rng.uniform();
            auto policy = small_policy({mu1, mu2}, {0.0, 0.3 + rng.uniform(),
                                                    1.5 + rng.uniform()});
            const double alpha0 = 0.4 + 0.2 * rng.uniform();
            const double beta0 = 0.05 * rng.uniform();
            const double closed =
                symbol_error_probability(policy, d3, alpha0, beta0, 4.0, 1.0, 1.0);
            const double direct =
                symbol_error_probability_quadrature(policy, d3, alpha0, beta0, 4.0, 1.0, 1.0);
            CHECK(closed == doctest::Approx(direct).epsilon(1e-6));
        }
    }
    SUBCASE("scaling every power level up cannot increase the error") {
        auto policy = small_policy({0.3, 0.8, 1.5, 3.0}, {0.0, 0.2, 0.5, 1.0, 2.0});
        const double base = symbol_error_probability(policy, dist, 0.5, 0.05, 4.0, 1.0, 1.0);
        for (double scale : {1.5, 3.0, 10.0}) {
            auto boosted = policy;
            for (double& p : boosted.p) p *= scale;
            const double val = symbol_error_probability(boosted, dist, 0.5, 0.05, 4.0, 1.0, 1.0);
            CHECK(val <= base + 1e-12);
        }
    }
    SUBCASE("agrees with weighted Monte Carlo averaging") {
        SelectionDiversity eight({3.03, 0.5, 0.12, 0.05, 0.4, 0.05, 0.12, 0.5});
        auto policy = small_policy({0.4, 1.0, 2.0, 4.0}, {0.0, 0.5, 1.0, 2.0, 4.0});
        const double alpha0 = 0.45, beta0 = 0.03;
        const double closed =
            symbol_error_probability(policy, eight, alpha0, beta0, 4.0, 1.0, 1.0);
        McOptions opts;
        opts.trials = 2000000;
        opts.threads = 2;
        opts.seed = 8080;
        const Estimate emp = mc_sep(policy, eight, alpha0, beta0, 4.0, 1.0, 1.0, opts);
        CHECK(std::fabs(closed - emp.value) < std::max(5e-4, 4.0 * emp.se));
    }
}
