#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "antenna.hpp"
#include "beamsel_pu.hpp"
#include "beamsel_sr.hpp"
#include "config.hpp"
#include "mc_oracle.hpp"
#include "metrics.hpp"
#include "optimizer.hpp"
#include "sensing.hpp"

namespace crbeam {

/// One sweep point: constraints, quantizer size, sector count, orientation.
struct PointSpec {
    double p_bar_db;
    double i_bar_db;
    int n_b;
    int m;
    bool average;       ///< orientation averaging over both angles
    int m_pu_star;      ///< used when not averaging
    int m_sr_star;      ///< used when not averaging; data angle at this boresight
    bool with_omni = true;
};

struct PointResult {
    double c_lb = 0.0;
    double c_lb_omni = 0.0;
    double lambda_ratio = 0.0; ///< ESPAR over omni capacity
    double p_out = 0.0;
    double p_e = 0.0;
    double t_sen_opt = 0.0;
    bool converged = false;
    /// Detailed solve of the representative orientation (the fixed one, or
    /// the first grid job when averaging).
    SolveResult espar;
    std::optional<SolveResult> omni;
    double p_out_omni = 0.0;
    double p_e_omni = 0.0;
};

struct ValidationCheck {
    std::string name;
    double expected = 0.0;
    double observed = 0.0;
    double se = 0.0; ///< standard error of the observation when sampled
    double tolerance = 0.0;
    bool pass = false;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

/// Immutable experiment context: pattern variants per sector count, their
/// integrals, and a memoized selection-error matrix per (M, N). All methods
/// are safe for concurrent use.
class SystemContext {
  public:
    explicit SystemContext(ExperimentConfig cfg);

    const ExperimentConfig& config() const { return cfg_; }
    PriorModel prior() const;

    struct Variant {
        BeamPattern pattern;
        SectorIntegrals integrals;
        BeamPattern omni_pattern;
        SectorIntegrals omni_integrals;
    };
    const Variant& variant(int m) const;

    /// First row of the sector-averaged selection matrix for the ESPAR
    /// pattern with M sectors at N samples per sector (memoized).
    std::vector<double> delta_bar_row1(int m, int n) const;

    /// Full selection matrix assembled from the memoized first row by
    /// rotational symmetry.
    PuErrorMatrix delta_bar(int m, int n) const;

    /// Link statistics at a sensing duration for a concrete orientation.
    /// `snap_n` rounds N onto a coarse ladder when looking up the selection
    /// matrix (used inside the sensing-duration search).
    LinkStatistics stats_at(double t_sen, int m, bool omni, int m_pu_star,
                            const std::vector<double>& psi, bool snap_n) const;

    /// Per-beam mean gains for an orientation: the configured explicit list
    /// when present, otherwise derived from the pattern geometry.
    SelectionDiversity distribution_for(int m, bool omni, double phi_sr) const;

    /// Full constrained solve for one orientation (golden-section over the
    /// sensing duration; the final point is re-solved without snapping).
    SolveResult solve_orientation(const PointSpec& spec, bool omni, int m_pu_star,
                                  double phi_sr) const;

    /// Sweep-point solve with optional orientation averaging and the omni
    /// baseline; `threads` Cap the worker count (0 = hardware).
    PointResult solve_point(const PointSpec& spec, int threads = 0) const;

    /// Monte Carlo validation suite at the configured fixed point.
    ValidationReport validate(const McOptions& opts) const;

    SolveOptions solve_options() const;

  private:
    ExperimentConfig cfg_;
    mutable std::mutex mutex_;
    mutable std::map<int, std::unique_ptr<Variant>> variants_;
    mutable std::map<std::pair<int, int>, std::vector<double>> delta_rows_;
};

/// Snaps a per-sector sample count onto the quarter-octave ladder used by
/// the sensing-duration search.
int snap_sample_count(int n);

} // namespace crbeam
