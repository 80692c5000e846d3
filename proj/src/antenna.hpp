#pragma once

#include <vector>

namespace crbeam {

/// Wraps an angle into [-pi, pi).
double wrap_pi(double phi);

/// Sectorized Gaussian beampattern of a switched-beam parasitic array.
///
/// The base pattern is p(phi) = a1 + a0 * exp(-ln2 * (wrap(phi)/phi3db)^2);
/// sector m (1-based) is the base pattern rotated to boresight
/// kappa_m = 2*pi*(m-1)/M. In omni mode the gain is a constant for all
/// angles and all sector indices.
struct BeamPattern {
    double a0 = 1.0;     ///< peak amplitude above the floor
    double a1 = 0.01;    ///< floor gain
    double phi3db = 0.0; ///< 3-dB beamwidth [rad]
    int sectors = 1;     ///< number of switchable beams M
    bool omni = false;
    double omni_gain = 0.0;

    static BeamPattern gaussian(double a0, double a1, double phi3db_rad, int sectors);

    /// Boresight angle of sector m (1-based).
    double boresight(int m) const;

    /// Pattern gain of sector m at angle phi [rad]. Throws std::domain_error
    /// for an invalid sector index.
    double gain(int m, double phi) const;

    /// Base pattern p(phi) (sector 1).
    double base_gain(double phi) const;

    /// Index of the sector whose angular arc contains phi; arcs are
    /// [kappa_m - pi/M, kappa_m + pi/M).
    int sector_of(double phi) const;

    void validate() const;
};

/// Mean pattern gain, mean squared sector gain and the cross-pattern overlap
/// integrals of one pattern set.
struct SectorIntegrals {
    double e_a = 0.0;          ///< (1/2pi) integral of p
    double e_b = 0.0;          ///< E_{mm}
    std::vector<double> cross; ///< M x M row-major, E_{mm'}
    double cross_sum = 0.0;    ///< sum of all entries

    double at(int m, int mprime) const; ///< 1-based
    int order() const { return size_; }
    int size_ = 0;
};

struct IntegralOptions {
    int panels = 2048;
    int order = 8;
    double refine_rel_tol = 1e-6; ///< half-step agreement demanded of the quadrature
};

/// Computes E_A, E_B and the full cross matrix by composite Gauss-Legendre
/// quadrature over one period, with a refinement check at doubled panel
/// count. Throws std::runtime_error if the refinement disagrees.
SectorIntegrals compute_sector_integrals(const BeamPattern& model,
                                         const IntegralOptions& opts = {});

/// Omni-mode model whose constant gain equals the mean gain E_A of `model`,
/// so both patterns radiate the same mean power over the circle.
BeamPattern make_omni_equivalent(const BeamPattern& model, const SectorIntegrals& integrals);

} // namespace crbeam
