#pragma once

#include <vector>

#include "antenna.hpp"
#include "sensing.hpp"

namespace crbeam {

/// Per-sector scale parameters of the averaged sector energies observed while
/// the primary is active: each energy is Gamma(N, sigma_e2_m) with
/// sigma_e2_m = (g p_m(phi) P_p + sigma_w2) / N.
struct PuSelectionContext {
    std::vector<double> sigma_e2;
    int n = 0; ///< samples per sector

    void validate() const;
};

PuSelectionContext make_pu_context(const BeamPattern& model, const PriorModel& prior, int n,
                                   double g, double phi_pu);

/// Tabulated regularized lower incomplete gamma P(n, .) for one integer
/// shape, cubic Hermite between knots with the exact density as slope;
/// absolute error below 1e-10 across the support.
class GammaCdfTable {
  public:
    explicit GammaCdfTable(int n);
    double operator()(double x) const;
    int shape() const { return n_; }

  private:
    int n_ = 0;
    double x0_ = 0.0, h_ = 0.0, inv_h_ = 0.0;
    std::vector<double> value_, slope_;
};

struct OmegaQuadOptions {
    int panels = 24;
    int order = 12;
    const GammaCdfTable* table = nullptr; ///< optional CDF acceleration
};

/// Pr{argmax of the sector energies = i}, by quadrature of f_i * prod F_m.
double selection_prob_conditional(const PuSelectionContext& ctx, int i,
                                  const OmegaQuadOptions& opts = {});

struct SeriesOptions {
    double tail_tol = 1e-8;  ///< stop once the geometric tail bound drops below this
    int max_total = 20000;   ///< budget on the total series order
};

/// Same probability through the multi-index gamma series, evaluated in log
/// space with total-order convolutions. Indices other than 1 rotate the
/// scales so the target leads. Throws std::runtime_error when the truncation
/// budget is exceeded.
double selection_prob_series(const PuSelectionContext& ctx, int i = 1,
                             const SeriesOptions& opts = {});

struct DeltaOptions {
    int laguerre_nodes = 64; ///< fading average over g
    OmegaQuadOptions omega;
};

/// Fading-averaged selection probability Pr{argmax = i | phi_pu} with
/// g ~ Exp(gamma).
double delta_profile(const BeamPattern& model, const PriorModel& prior, int n, int i,
                     double phi_pu, const DeltaOptions& opts = {});

/// Sector-averaged selection matrix: entry (i, m) is the probability of
/// choosing beam i when the primary sits uniformly inside the arc of sector
/// m. Columns sum to one; the matrix is symmetric and circulant.
struct PuErrorMatrix {
    int order = 0;
    std::vector<double> delta_bar; ///< row-major order x order

    double at(int i, int m) const { return delta_bar[(i - 1) * order + (m - 1)]; }
    std::vector<double> row(int i) const;
    double column_sum(int m) const;
};

struct AverageMatrixOptions {
    int arc_nodes = 12; ///< Gauss-Legendre nodes per sector arc
    DeltaOptions delta;
    bool use_rotation_symmetry = false; ///< build from the first row only
};

PuErrorMatrix average_error_matrix(const BeamPattern& model, const PriorModel& prior, int n,
                                   const AverageMatrixOptions& opts = {});

} // namespace crbeam
