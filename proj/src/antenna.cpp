#include "antenna.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "quadrature.hpp"
#include "special.hpp"

namespace crbeam {

double wrap_pi(double phi) {
    double t = std::fmod(phi + kPi, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    return t - kPi;
}

BeamPattern BeamPattern::gaussian(double a0, double a1, double phi3db_rad, int sectors) {
    BeamPattern model;
    model.a0 = a0;
    model.a1 = a1;
    model.phi3db = phi3db_rad;
    model.sectors = sectors;
    model.validate();
    return model;
}

void BeamPattern::validate() const {
    if (omni) {
        if (!(omni_gain > 0.0)) throw std::domain_error("BeamPattern: omni gain must be > 0");
        if (sectors != 1) throw std::domain_error("BeamPattern: omni mode is single-sector");
        return;
    }
    if (!(a0 > 0.0)) throw std::domain_error("BeamPattern: A0 must be > 0");
    if (a1 < 0.0) throw std::domain_error("BeamPattern: A1 must be >= 0");
    if (!(phi3db > 0.0 && phi3db < kPi)) throw std::domain_error("BeamPattern: phi_3dB out of (0, pi)");
    if (sectors < 1) throw std::domain_error("BeamPattern: need at least one sector");
}

double BeamPattern::boresight(int m) const {
    if (m < 1 || m > sectors) throw std::domain_error("BeamPattern: sector index out of range");
    return kTwoPi * (m - 1) / sectors;
}

double BeamPattern::base_gain(double phi) const {
    if (omni) return omni_gain;
    const double w = wrap_pi(phi) / phi3db;
    return a1 + a0 * std::exp(-kLn2 * w * w);
}

double BeamPattern::gain(int m, double phi) const {
    if (m < 1 || m > sectors) throw std::domain_error("BeamPattern: sector index out of range");
    if (!std::isfinite(phi)) throw std::domain_error("BeamPattern: angle must be finite");
    if (omni) return omni_gain;
    return base_gain(phi - boresight(m));
}

int BeamPattern::sector_of(double phi) const {
    if (omni || sectors == 1) return 1;
    const double arc = kTwoPi / sectors;
    double t = std::fmod(phi + 0.5 * arc, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    return 1 + (int)(t / arc);
}

double SectorIntegrals::at(int m, int mprime) const {
    if (m < 1 || m > size_ || mprime < 1 || mprime > size_)
        throw std::domain_error("SectorIntegrals: index out of range");
    return cross[(m - 1) * size_ + (mprime - 1)];
}

namespace {

double mean_over_circle(const std::function<double(double)>& f, int panels, int order) {
    return integrate_panels(f, 0.0, kTwoPi, panels, order) / kTwoPi;
}

SectorIntegrals integrate_once(const BeamPattern& model, int panels, int order) {
    SectorIntegrals out;
    const int m_count = model.sectors;
    out.size_ = m_count;
    out.cross.assign((size_t)m_count * m_count, 0.0);
    out.e_a = mean_over_circle([&](double t) { return model.base_gain(t); }, panels, order);
    for (int m = 1; m <= m_count; ++m) {
        for (int mp = 1; mp <= m_count; ++mp) {
            out.cross[(m - 1) * m_count + (mp - 1)] = mean_over_circle(
                [&](double t) { return model.gain(m, t) * model.gain(mp, t); }, panels, order);
        }
    }
    out.e_b = out.cross[0];
    out.cross_sum = 0.0;
    for (double v : out.cross) out.cross_sum += v;
    return out;
}

double rel_diff(double a, double b) {
    const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
    return std::fabs(a - b) / scale;
}

} // namespace

SectorIntegrals compute_sector_integrals(const BeamPattern& model, const IntegralOptions& opts) {
    model.validate();
    SectorIntegrals coarse = integrate_once(model, opts.panels, opts.order);
    SectorIntegrals fine = integrate_once(model, opts.panels * 2, opts.order);
    double worst = rel_diff(coarse.e_a, fine.e_a);
    for (size_t i = 0; i < coarse.cross.size(); ++i)
        worst = std::max(worst, rel_diff(coarse.cross[i], fine.cross[i]));
    if (worst > opts.refine_rel_tol) {
        std::ostringstream msg;
        msg << "compute_sector_integrals: quadrature did not converge "
            << "(half-step disagreement " << worst << " > " << opts.refine_rel_tol
            << "; panels=" << opts.panels << ")";
        throw std::runtime_error(msg.str());
    }
    return fine;
}

BeamPattern make_omni_equivalent(const BeamPattern& model, const SectorIntegrals& integrals) {
    model.validate();
    BeamPattern omni = model;
    omni.omni = true;
    omni.omni_gain = model.omni ? model.omni_gain : integrals.e_a;
    omni.sectors = 1;
    omni.validate();
    return omni;
}

} // namespace crbeam
