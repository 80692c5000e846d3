#include "beamsel_sr.hpp"

#include <algorithm>
#include <utility>
#include <cmath>
#include <stdexcept>

#include "quadrature.hpp"
#include "special.hpp"

namespace crbeam {

SelectionDiversity::SelectionDiversity(std::vector<double> delta) : delta_(std::move(delta)) {
    if (delta_.empty()) throw std::domain_error("SelectionDiversity: need at least one beam");
    if (delta_.size() > 20)
        throw std::domain_error("SelectionDiversity: subset expansion limited to 20 beams");
    for (double d : delta_)
        if (!(d > 0.0)) throw std::domain_error("SelectionDiversity: means must be > 0");

    const int m = (int)delta_.size();
    terms_.reserve((1u << m) - 1);
    for (unsigned mask = 1; mask < (1u << m); ++mask) {
        SubsetTerm term;
        term.rate = 0.0;
        term.size = 0;
        for (int j = 0; j < m; ++j) {
            if (mask & (1u << j)) {
                term.rate += 1.0 / delta_[j];
                ++term.size;
            }
        }
        term.sign = (term.size % 2 == 0) ? 1 : -1;
        terms_.push_back(term);
    }

    // Cancellation guard: nearly coincident per-beam rates make the signed
    // expansion unstable, so such instances use the product forms.
    std::vector<double> rates(m);
    for (int j = 0; j < m; ++j) rates[j] = 1.0 / delta_[j];
    std::sort(rates.begin(), rates.end());
    for (int j = 0; j + 1 < m; ++j)
        if (rates[j + 1] - rates[j] < 1e-9) degenerate_ = true;
}

double SelectionDiversity::cdf_product(double x) const {
    if (x <= 0.0) return 0.0;
    double prod = 1.0;
    for (double d : delta_) prod *= -std::expm1(-x / d);
    return prod;
}

double SelectionDiversity::cdf_expansion(double x) const {
    if (x <= 0.0) return 0.0;
    double acc = 1.0;
    for (const auto& t : terms_) acc += t.sign * std::exp(-x * t.rate);
    return acc;
}

double SelectionDiversity::pdf_product(double x) const { return cdf_pdf_product(x).pdf; }

SelectionDiversity::Density SelectionDiversity::cdf_pdf_product(double x) const {
    const int m = (int)delta_.size();
    if (x <= 0.0) return {0.0, (x == 0.0 && m == 1) ? 1.0 / delta_[0] : 0.0};
    double tail[20], body[20], prefix[21], suffix[21];
    for (int i = 0; i < m; ++i) {
        body[i] = -std::expm1(-x / delta_[i]); // F_i(x)
        tail[i] = 1.0 - body[i];               // exp(-x/delta_i)
    }
    prefix[0] = 1.0;
    for (int i = 0; i < m; ++i) prefix[i + 1] = prefix[i] * body[i];
    suffix[m] = 1.0;
    for (int i = m - 1; i >= 0; --i) suffix[i] = suffix[i + 1] * body[i];
    double pdf = 0.0;
    for (int i = 0; i < m; ++i) pdf += (tail[i] / delta_[i]) * prefix[i] * suffix[i + 1];
    return {prefix[m], pdf};
}

double SelectionDiversity::pdf_expansion(double x) const {
    if (x < 0.0) return 0.0;
    double acc = 0.0;
    for (const auto& t : terms_) acc -= t.sign * t.rate * std::exp(-x * t.rate);
    return acc;
}

double SelectionDiversity::cdf(double x) const {
    return degenerate_ ? cdf_product(x) : cdf_expansion(x);
}

double SelectionDiversity::pdf(double x) const {
    return degenerate_ ? pdf_product(x) : pdf_expansion(x);
}

double SelectionDiversity::quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("SelectionDiversity: quantile needs p in (0,1)");
    // Bracket: the max is below x iff every component is, so the largest mean
    // gives a lower-ish starting scale.
    double dmax = *std::max_element(delta_.begin(), delta_.end());
    double lo = 0.0, hi = dmax;
    while (cdf(hi) < p) hi *= 2.0;
    double x = hi * 0.5;
    for (int iter = 0; iter < 200; ++iter) {
        double f = cdf(x) - p;
        if (f > 0.0) hi = x; else lo = x;
        double d = pdf(x);
        double step = (d > 0.0) ? f / d : 0.0;
        double next = x - step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - x) < 1e-15 * std::max(1.0, x)) return next;
        x = next;
    }
    return x;
}

std::vector<double> SelectionDiversity::beam_probabilities() const {
    const int m_count = (int)delta_.size();
    std::vector<double> psi(m_count, 0.0);
    if (m_count == 1) {
        psi[0] = 1.0;
        return psi;
    }
    for (int i = 0; i < m_count; ++i) {
        // Rotate so the target beam leads, then inclusion-exclusion over the
        // remaining beams: Psi = 1 + sum_S (-1)^{|S|} / (1 + delta_i * B_S).
        std::vector<double> others;
        others.reserve(m_count - 1);
        for (int j = 0; j < m_count; ++j)
            if (j != i) others.push_back(delta_[j]);
        const unsigned full = (1u << others.size());
        double acc = 1.0;
        for (unsigned mask = 1; mask < full; ++mask) {
            double b = 0.0;
            int size = 0;
            for (size_t j = 0; j < others.size(); ++j) {
                if (mask & (1u << j)) {
                    b += 1.0 / others[j];
                    ++size;
                }
            }
            const double term = 1.0 / (1.0 + delta_[i] * b);
            acc += (size % 2 == 0) ? term : -term;
        }
        psi[i] = acc;
    }
    return psi;
}

double SelectionDiversity::beam_probability_integral(int i) const {
    const int m_count = (int)delta_.size();
    if (i < 1 || i > m_count) throw std::domain_error("beam_probability_integral: bad index");
    const double di = delta_[i - 1];
    // Log-domain integration of f_i(y) prod_{m != i} F_m(y): with y = e^w all
    // power-law and exponential features have unit width, so a composite rule
    // resolves instances with widely spread means.
    const auto [dmin, dmax] = std::minmax_element(delta_.begin(), delta_.end());
    const double w_lo = std::log(*dmin) - 34.0;
    const double w_hi = std::log(*dmax) + 4.5;
    auto integrand = [&](double w) {
        const double y = std::exp(w);
        double value = y * std::exp(-y / di) / di;
        for (int m = 0; m < m_count; ++m) {
            if (m == i - 1) continue;
            value *= -std::expm1(-y / delta_[m]);
        }
        return value;
    };
    return integrate_panels(integrand, w_lo, w_hi, 400, 12);
}

SelectionDiversity sector_means_from_geometry(const BeamPattern& model, double gamma_ss,
                                              double phi_sr) {
    if (!(gamma_ss > 0.0)) throw std::domain_error("sector_means_from_geometry: gamma_ss must be > 0");
    std::vector<double> delta(model.sectors);
    for (int m = 1; m <= model.sectors; ++m) delta[m - 1] = gamma_ss * model.gain(m, phi_sr);
    return SelectionDiversity(std::move(delta));
}

} // namespace crbeam
