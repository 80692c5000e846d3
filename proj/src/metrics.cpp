#include "metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "quadrature.hpp"
#include "special.hpp"

namespace crbeam {

double outage_probability(const QuantizedPowerPolicy& policy, const SelectionDiversity& dist) {
    if (policy.mu.empty()) throw std::domain_error("outage_probability: empty policy");
    return dist.cdf(policy.mu[0]);
}

double sep_v_term(double mu, double snr, double subset_rate) {
    const double a = subset_rate;
    if (std::isinf(mu)) return 0.0;
    if (snr <= 0.0) return -std::exp(-mu * a) * 0.5;
    return q_func(std::sqrt(mu * (snr + 2.0 * a))) / std::sqrt(1.0 + 2.0 * a / snr) -
           std::exp(-mu * a) * q_func(std::sqrt(mu * snr));
}

double symbol_error_probability(const QuantizedPowerPolicy& policy, const SelectionDiversity& dist,
                                double alpha0, double beta0, double rho, double sigma_w2,
                                double sigma_p2) {
    if (!(rho > 0.0)) throw std::domain_error("symbol_error_probability: rho must be > 0");
    const int levels = policy.levels();
    double acc = 0.0;
    for (const auto& term : dist.subset_terms()) {
        // f = sum over subsets of (-1)^{m+1} A e^{-Ax}; the A cancels against
        // the integral of Q(...) e^{-Ax}, leaving the V differences.
        const double signed_weight = -term.sign; // (-1)^{m+1}
        double sum_k = 0.0;
        for (int k = 0; k <= levels; ++k) {
            const double mu_lo = (k == 0) ? 0.0 : policy.mu[k - 1];
            const double mu_hi =
                (k == levels) ? std::numeric_limits<double>::infinity() : policy.mu[k];
            const double p_k = policy.p[k];
            const double snr_idle = rho * p_k / sigma_w2;
            const double snr_busy = rho * p_k / (sigma_w2 + sigma_p2);
            sum_k += alpha0 * (sep_v_term(mu_hi, snr_idle, term.rate) -
                               sep_v_term(mu_lo, snr_idle, term.rate)) +
                     beta0 * (sep_v_term(mu_hi, snr_busy, term.rate) -
                              sep_v_term(mu_lo, snr_busy, term.rate));
        }
        acc += signed_weight * sum_k;
    }
    return acc;
}

double symbol_error_probability_quadrature(const QuantizedPowerPolicy& policy,
                                           const SelectionDiversity& dist, double alpha0,
                                           double beta0, double rho, double sigma_w2,
                                           double sigma_p2) {
    const int levels = policy.levels();
    // Per-interval integrals of Q(sqrt(rho x P_k / noise)) f(x); the top
    // interval is truncated where F is within 1e-14 of one.
    const double x_top = dist.quantile(1.0 - 1e-14);
    double acc = 0.0;
    for (int k = 0; k <= levels; ++k) {
        const double lo = (k == 0) ? 0.0 : policy.mu[k - 1];
        const double hi = (k == levels) ? std::max(x_top, policy.mu[levels - 1] * 2.0 + 1.0)
                                        : policy.mu[k];
        if (!(hi > lo)) continue;
        const double p_k = policy.p[k];
        auto integrand = [&](double x) {
            const double q_idle = q_func(std::sqrt(rho * x * p_k / sigma_w2));
            const double q_busy = q_func(std::sqrt(rho * x * p_k / (sigma_w2 + sigma_p2)));
            return (alpha0 * q_idle + beta0 * q_busy) * dist.pdf(x);
        };
        acc += integrate_panels(integrand, lo, hi, 200, 12);
    }
    return acc;
}

} // namespace crbeam
