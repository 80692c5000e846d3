#pragma once

#include <functional>
#include <string>
#include <vector>

#include "antenna.hpp"
#include "beamsel_pu.hpp"
#include "beamsel_sr.hpp"

namespace crbeam {

struct Constraints {
    double p_bar = 0.0; ///< average transmit power cap [W]
    double i_bar = 0.0; ///< average interference cap [W]
    void validate() const;
};

/// Quantized feedback policy: thresholds mu_1 < ... < mu_{N_b} on the
/// selected-beam gain and power levels P_0 = 0, P_1, ..., P_{N_b}.
struct QuantizedPowerPolicy {
    int n_b = 0;            ///< feedback bits
    std::vector<double> mu; ///< size 2^n_b, thresholds (mu_0 = 0 implicit)
    std::vector<double> p;  ///< size 2^n_b + 1, p[0] = 0
    double t_sen = 0.0;

    int levels() const { return (int)mu.size(); }
    /// Quantization interval of a gain value: 0..N_b.
    int interval_of(double nu) const;
};

struct CapacityReport {
    double c_lb = 0.0;
    std::vector<double> rate_idle;   ///< R_{0,0} per interval k = 1..N_b
    std::vector<double> rate_missed; ///< R_{1,0} per interval
    double b0 = 0.0;
    double lambda = 0.0;
    double vartheta = 0.0;
    double power_lhs = 0.0;
    double interference_lhs = 0.0;
    double power_slack = 0.0;        ///< cap minus LHS
    double interference_slack = 0.0;
    int bcd_sweeps = 0;
    int mu1_iterations = 0;
    int dual_iterations = 0;
    int tsen_evaluations = 0;
    bool converged = false;
    std::string diagnostics;
    std::vector<double> lagrangian_trace; ///< value after each block update
};

/// Link-level statistics at a fixed sensing duration.
struct LinkStatistics {
    double alpha0 = 0.0;
    double beta0 = 0.0;
    double pihat0 = 0.0;
    double d_t = 0.0;
    double b0 = 0.0;
    double sigma_w2 = 1.0;
    double sigma_p2 = 0.0;
};

/// Effective interference coefficient combining the missed-detection
/// probability, the mean cross-channel gain and the expected pattern gain
/// between the selected data beam and the believed primary beam.
double interference_coefficient(const std::vector<double>& psi, const PuErrorMatrix& delta_bar,
                                int m_pu_star, const BeamPattern& model, double beta0,
                                double gamma_sp);

/// Stationary power level for one quantization interval (larger root of the
/// per-interval optimality quadratic, clamped at zero).
double kkt_power(double mu_k, double lambda, double vartheta, double b0, double pihat0,
                 double alpha0, double beta0, double sigma_w2, double sigma_p2);

enum class ThresholdStepStatus { kOk, kTerminal, kInfeasibleLow, kInfeasibleHigh };

struct ThresholdStep {
    ThresholdStepStatus status = ThresholdStepStatus::kOk;
    double f_target = 0.0; ///< prescribed CDF value for the next threshold
    double mu_next = 0.0;  ///< valid when status == kOk
};

struct ThresholdContext {
    double alpha0, beta0, sigma_w2, sigma_p2;
    double lag_coef;  ///< lambda * pihat0 + vartheta * b0
    double r_idle_prev = 0.0;
    double r_missed_prev = 0.0;
};

/// Next quantizer threshold from the stationarity recurrence. The target CDF
/// value must land in (F(mu_k), 1]; a unit target marks the terminal
/// interval.
ThresholdStep next_threshold(double mu_k, double p_prev, double p_curr,
                             const SelectionDiversity& dist, const ThresholdContext& ctx);

/// Sensing-aware capacity lower bound of a policy.
double capacity_lower_bound(const QuantizedPowerPolicy& policy, const SelectionDiversity& dist,
                            double alpha0, double beta0, double d_t, double sigma_w2,
                            double sigma_p2);

struct SolveOptions {
    double bcd_tol = 1e-6;            ///< capacity change per sweep at which the inner loop stops
    int max_bcd_sweeps = 40;
    double mu1_residual_tol = 1e-6;   ///< |F(mu_{N_b+1}) - 1| target
    int max_mu1_iterations = 200;
    double constraint_rel_tol = 1e-5; ///< binding tolerance of the dual solve
    int max_dual_iterations = 200;
    int tsen_golden_iterations = 18;
    double p_positive_floor = 1e-12;
    bool verify_sweeps = true; ///< run the block-alternation verification pass
};

struct SolveResult {
    QuantizedPowerPolicy policy;
    CapacityReport report;
};

/// Warm-start state threaded through repeated solves at nearby operating
/// points (scalar multiplier and lowest threshold).
struct SolveWarmState {
    double multiplier = 0.0;
    double mu1 = 0.0;
};

/// Solves the capacity maximization at a fixed sensing duration: scalar dual
/// search on the constraint multiplier, threshold chain with the boundary
/// condition on the top interval, and block-coordinate verification sweeps.
SolveResult solve_at_tsen(const LinkStatistics& stats, const SelectionDiversity& dist,
                          const Constraints& caps, int n_b, const SolveOptions& opts = {},
                          SolveWarmState* warm = nullptr);

/// Full solve including the golden-section search over the sensing duration.
/// `stats_at` maps a sensing duration to the link statistics.
SolveResult solve_p2(const std::function<LinkStatistics(double)>& stats_at, double t_sen_lo,
                     double t_sen_hi, const SelectionDiversity& dist, const Constraints& caps,
                     int n_b, const SolveOptions& opts = {});

} // namespace crbeam
