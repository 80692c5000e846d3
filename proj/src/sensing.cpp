#include "sensing.hpp"

#include <cmath>
#include <stdexcept>

#include "special.hpp"

namespace crbeam {

FramePlan FramePlan::make(double t_f, double t_sen, double t_train, double t_s, int sectors) {
    FramePlan plan;
    plan.t_f = t_f;
    plan.t_sen = t_sen;
    plan.t_train = t_train;
    plan.t_s = t_s;
    plan.sectors = sectors;
    if (!(t_f > 0.0) || !(t_s > 0.0) || t_train < 0.0 || sectors < 1)
        throw std::domain_error("FramePlan: bad frame parameters");
    if (!(t_sen > 0.0 && t_sen < t_f - t_train))
        throw std::domain_error("FramePlan: sensing duration out of (0, t_f - t_train)");
    plan.n = (int)std::floor(t_sen / (sectors * t_s));
    if (plan.n < 1) throw std::domain_error("FramePlan: fewer than one sample per sector");
    plan.n_eq = (long)plan.n * sectors;
    plan.d_t = (t_f - t_sen - t_train) / t_f;
    if (!(plan.d_t > 0.0 && plan.d_t < 1.0))
        throw std::domain_error("FramePlan: data fraction out of (0, 1)");
    return plan;
}

void PriorModel::validate() const {
    if (!(pi1 >= 0.0 && pi1 <= 1.0)) throw std::domain_error("PriorModel: pi1 out of [0, 1]");
    if (!(p_p > 0.0 && gamma > 0.0 && gamma_sp > 0.0 && sigma_w2 > 0.0))
        throw std::domain_error("PriorModel: powers and mean gains must be > 0");
}

DetectorDesign detector_statistics(const FramePlan& plan, const PriorModel& prior,
                                   const SectorIntegrals& integrals) {
    prior.validate();
    if (integrals.order() != plan.sectors)
        throw std::domain_error("detector_statistics: integrals computed for a different sector count");

    DetectorDesign design;
    design.n_eq = plan.n_eq;
    design.sigma_w2 = prior.sigma_w2;
    design.clt_warning = plan.n_eq < 30;

    const double sw2 = prior.sigma_w2;
    const double s = prior.gamma * prior.p_p; // mean received signal power scale
    const double m = plan.sectors;

    design.zeta = s * integrals.e_a + sw2;
    design.var_h0 = sw2 * sw2 / plan.n_eq;
    design.var_h1 = (sw2 * sw2 + 2.0 * s * integrals.e_a * sw2 +
                     s * s * (3.0 * integrals.e_b - plan.n_eq * integrals.e_a * integrals.e_a)) /
                        plan.n_eq +
                    s * s * integrals.cross_sum / (m * m);
    return design;
}

void threshold_for_target_pd(DetectorDesign& design, const PriorModel& prior, double target_pd) {
    if (!(target_pd > 0.0 && target_pd < 1.0))
        throw std::domain_error("threshold_for_target_pd: target must be in (0, 1)");
    const double sigma_h1 = std::sqrt(design.var_h1);
    const double sigma_h0 = std::sqrt(design.var_h0);
    design.eta = design.zeta + sigma_h1 * q_inv(target_pd);
    design.p_d = target_pd;
    design.p_fa = q_func((sigma_h1 * q_inv(target_pd) + design.zeta - design.sigma_w2) / sigma_h0);

    const SensingOutcome joint = sensing_error_probabilities(design, prior);
    design.alpha0 = joint.alpha0;
    design.beta0 = joint.beta0;
    design.pihat0 = joint.pihat0;
    design.pihat1 = joint.pihat1;
}

SensingOutcome sensing_error_probabilities(const DetectorDesign& design, const PriorModel& prior) {
    SensingOutcome out;
    out.alpha0 = prior.pi0() * (1.0 - design.p_fa);
    out.beta0 = prior.pi1 * (1.0 - design.p_d);
    out.pihat0 = out.alpha0 + out.beta0;
    out.pihat1 = 1.0 - out.pihat0;
    return out;
}

} // namespace crbeam
