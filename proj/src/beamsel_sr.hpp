#pragma once

#include <vector>

#include "antenna.hpp"

namespace crbeam {

/// Distribution of the largest of M independent exponential channel gains
/// with per-beam means delta_m (selection diversity).
///
/// The CDF has both a product form and a signed inclusion-exclusion
/// expansion over subset rate sums A_{j1:jm} = sum 1/delta_j. The expansion
/// is the default; near-degenerate rate sums switch evaluation to the
/// product/derivative form, which has no cancellation.
class SelectionDiversity {
  public:
    explicit SelectionDiversity(std::vector<double> delta);

    int beams() const { return (int)delta_.size(); }
    const std::vector<double>& delta() const { return delta_; }

    double cdf(double x) const;
    double pdf(double x) const;

    double cdf_product(double x) const;
    double cdf_expansion(double x) const;
    double pdf_product(double x) const;
    double pdf_expansion(double x) const;

    /// CDF and density from one pass of per-beam exponentials.
    struct Density {
        double cdf;
        double pdf;
    };
    Density cdf_pdf_product(double x) const;

    /// Inverse CDF on (0, 1); monotone Newton with bisection safeguard.
    double quantile(double p) const;

    /// Pr{argmax = i} for each beam, closed form.
    std::vector<double> beam_probabilities() const;

    /// Pr{argmax = i} by direct quadrature of f_i * prod F_m (test oracle).
    double beam_probability_integral(int i) const;

    /// Signed subset terms of the expansion: (sign, rate sum, subset size).
    struct SubsetTerm {
        double rate;  ///< A_{j1:jm}
        int sign;     ///< (-1)^m
        int size;
    };
    const std::vector<SubsetTerm>& subset_terms() const { return terms_; }
    bool degenerate() const { return degenerate_; }

  private:
    std::vector<double> delta_;
    std::vector<SubsetTerm> terms_;
    bool degenerate_ = false;
};

/// Per-beam mean gains induced by the geometry: delta_m = gamma_ss * p_m(phi).
SelectionDiversity sector_means_from_geometry(const BeamPattern& model, double gamma_ss,
                                              double phi_sr);

} // namespace crbeam
