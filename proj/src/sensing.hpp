#pragma once

#include "antenna.hpp"

namespace crbeam {

/// Frame timing split into sensing, training and data segments.
struct FramePlan {
    double t_f = 0.0;     ///< frame length [s]
    double t_sen = 0.0;   ///< sensing duration [s]
    double t_train = 0.0; ///< training duration [s]
    double t_s = 0.0;     ///< sampling period [s]
    int sectors = 1;      ///< M
    int n = 0;            ///< samples per sector, floor(t_sen / (M t_s))
    long n_eq = 0;        ///< total samples, M*n
    double d_t = 0.0;     ///< data fraction (t_f - t_sen - t_train)/t_f

    static FramePlan make(double t_f, double t_sen, double t_train, double t_s, int sectors);
};

/// Channel occupancy prior and the channel/noise statistics the detector
/// design depends on.
struct PriorModel {
    double pi1 = 0.3;      ///< Pr{primary active}
    double p_p = 1.0;      ///< primary transmit power [W]
    double gamma = 1.0;    ///< mean gain, transmitter-primary link
    double gamma_sp = 1.0; ///< mean gain, receiver-primary link
    double sigma_w2 = 1.0; ///< noise variance [W]

    double pi0() const { return 1.0 - pi1; }
    double sigma_p2() const { return p_p * gamma_sp; }
    void validate() const;
};

/// Energy-detector design: Gaussian-approximate statistics of the averaged
/// energy statistic under both hypotheses, plus the threshold and outcome
/// probabilities once a target detection probability is applied.
struct DetectorDesign {
    long n_eq = 0;
    double sigma_w2 = 0.0;
    double zeta = 0.0;     ///< mean of the statistic when the primary is active
    double var_h0 = 0.0;
    double var_h1 = 0.0;
    bool clt_warning = false; ///< set when n_eq < 30

    double eta = 0.0; ///< decision threshold [W]
    double p_fa = 0.0;
    double p_d = 0.0;

    double alpha0 = 0.0; ///< Pr{idle, sensed idle}
    double beta0 = 0.0;  ///< Pr{active, sensed idle}
    double pihat0 = 0.0; ///< Pr{sensed idle}
    double pihat1 = 0.0;
};

/// Gaussian-approximate moments of the detection statistic. Leaves the
/// threshold and probabilities unset.
DetectorDesign detector_statistics(const FramePlan& plan, const PriorModel& prior,
                                   const SectorIntegrals& integrals);

/// Picks the threshold achieving `target_pd` and fills P_fa, P_d and the
/// joint sensing-outcome probabilities.
void threshold_for_target_pd(DetectorDesign& design, const PriorModel& prior, double target_pd);

/// Joint probabilities of (hypothesis, sensed idle) for a designed detector.
struct SensingOutcome {
    double alpha0, beta0, pihat0, pihat1;
};
SensingOutcome sensing_error_probabilities(const DetectorDesign& design, const PriorModel& prior);

} // namespace crbeam
