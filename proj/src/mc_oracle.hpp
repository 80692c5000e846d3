#pragma once

#include <cstdint>
#include <vector>

#include "antenna.hpp"
#include "beamsel_pu.hpp"
#include "beamsel_sr.hpp"
#include "optimizer.hpp"
#include "rng.hpp"
#include "sensing.hpp"

namespace crbeam {

struct McOptions {
    uint64_t seed = 12345;
    long trials = 1000000;
    int threads = 1;
    long block = 16384; ///< trials per deterministic block
};

struct Estimate {
    double value = 0.0;
    double se = 0.0;
    long n = 0;
};

/// Empirical false-alarm probability of the averaged-energy statistic; the
/// noise-only statistic is drawn from its exact chi-square law.
Estimate mc_false_alarm(long n_eq, double sigma_w2, double eta, const McOptions& opts);

/// Empirical detection probability under sample-level simulation of the
/// active-primary hypothesis (per-sample fading draws).
Estimate mc_detection(const BeamPattern& model, const FramePlan& plan, const PriorModel& prior,
                      double eta, const McOptions& opts);

/// Sample mean and variance (with standard errors) of the statistic under
/// the active hypothesis, per-sample fading model.
struct MomentEstimate {
    double mean = 0.0, mean_se = 0.0;
    double variance = 0.0, variance_se = 0.0;
    long n = 0;
};
MomentEstimate mc_h1_statistic_moments(const BeamPattern& model, const FramePlan& plan,
                                       const PriorModel& prior, const McOptions& opts);

/// Sector energies of one sensing window given the fading gain and primary
/// angle (noise-only when active == false); sample-level draws.
std::vector<double> draw_sector_energies(const PriorModel& prior, const BeamPattern& model,
                                         int n, double g, double phi_pu, bool active,
                                         Xoshiro256& rng);

/// Argmax frequencies of the sector energies at fixed (g, phi) scales.
std::vector<double> mc_pu_argmax_freq(const PuSelectionContext& ctx, const McOptions& opts);

/// Empirical sector-averaged selection matrix: column m simulated with the
/// primary placed uniformly inside arc m (trials split evenly per column).
PuErrorMatrix mc_delta_bar(const BeamPattern& model, const PriorModel& prior, int n,
                           const McOptions& opts);

/// Kolmogorov-Smirnov distance between the empirical CDF of simulated
/// strongest-beam gains and the closed-form CDF.
double mc_strongest_beam_ks(const SelectionDiversity& dist, const McOptions& opts);

double ks_pvalue(double distance, long n);

/// Empirical beam-selection frequencies at the data receiver.
std::vector<double> mc_psi_freq(const SelectionDiversity& dist, const McOptions& opts);

Estimate mc_outage(const SelectionDiversity& dist, double mu1, const McOptions& opts);

/// Empirical average symbol error probability of a policy (weighted Q-value
/// average over strongest-gain draws).
Estimate mc_sep(const QuantizedPowerPolicy& policy, const SelectionDiversity& dist, double alpha0,
                double beta0, double rho, double sigma_w2, double sigma_p2, const McOptions& opts);

/// Mean of g_sp * p(kappa_selected_data_beam - kappa_true_primary_sector)
/// over selection trials in which the sensing argmax equals m_pu_star.
Estimate mc_interference_gain(const BeamPattern& model, const PriorModel& prior, int n,
                              const SelectionDiversity& dist, int m_pu_star,
                              const McOptions& opts);

enum class SensingDrawMode {
    kDesignProbabilities, ///< sensed outcome drawn from the designed P_fa/P_d
    kSampleLevel          ///< sensed outcome from the simulated statistic
};

struct ProtocolSpec {
    const BeamPattern* model = nullptr;
    PriorModel prior;
    FramePlan plan;
    DetectorDesign design;
    QuantizedPowerPolicy policy;
    const SelectionDiversity* dist = nullptr;
    int m_pu_star = 1;
    double rho = 4.0;
    SensingDrawMode sensing = SensingDrawMode::kDesignProbabilities;
};

/// Aggregates of the end-to-end three-phase protocol simulation.
struct TrialAggregates {
    long trials = 0;
    Estimate p_fa;
    Estimate p_d;
    Estimate outage;             ///< Pr{nu* below the lowest threshold}
    Estimate sep;                ///< weighted symbol error average
    Estimate capacity;           ///< D_t-weighted empirical rate
    Estimate mean_power;         ///< empirical average transmit power (cap units)
    Estimate mean_interference;  ///< empirical average interference (cap units)
    std::vector<double> psi_freq;
    std::vector<double> delta_freq;      ///< row-major (selected, true arc) frequencies
    std::vector<double> interval_freq;   ///< occupancy of quantization intervals 0..N_b
    std::vector<long> delta_column_n;    ///< active-frame count per true arc
};

TrialAggregates run_trials(const ProtocolSpec& spec, const McOptions& opts);

} // namespace crbeam
