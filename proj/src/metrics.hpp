#pragma once

#include "beamsel_sr.hpp"
#include "optimizer.hpp"

namespace crbeam {

/// Probability of the no-transmission interval: F_{nu*}(mu_1).
double outage_probability(const QuantizedPowerPolicy& policy, const SelectionDiversity& dist);

/// Building block of the symbol-error closed form for one subset rate A:
/// V(mu, snr) = Q(sqrt(mu (snr + 2A))) / sqrt(1 + 2A/snr) - e^{-mu A} Q(sqrt(mu snr)).
/// The mu = inf boundary evaluates to 0 and snr = 0 to -e^{-mu A}/2.
double sep_v_term(double mu, double snr, double subset_rate);

/// Closed-form average symbol error probability of a quantized policy, with
/// rho the modulation constant.
double symbol_error_probability(const QuantizedPowerPolicy& policy, const SelectionDiversity& dist,
                                double alpha0, double beta0, double rho, double sigma_w2,
                                double sigma_p2);

/// Quadrature evaluation of the same expectation against the density of the
/// selected gain (test oracle for the closed form).
double symbol_error_probability_quadrature(const QuantizedPowerPolicy& policy,
                                           const SelectionDiversity& dist, double alpha0,
                                           double beta0, double rho, double sigma_w2,
                                           double sigma_p2);

} // namespace crbeam
