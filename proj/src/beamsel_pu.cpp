#include "beamsel_pu.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "quadrature.hpp"
#include "special.hpp"

namespace crbeam {

void PuSelectionContext::validate() const {
    if (sigma_e2.empty()) throw std::domain_error("PuSelectionContext: no sectors");
    if (n < 1) throw std::domain_error("PuSelectionContext: need n >= 1");
    for (double s : sigma_e2)
        if (!(s > 0.0)) throw std::domain_error("PuSelectionContext: scales must be > 0");
}

PuSelectionContext make_pu_context(const BeamPattern& model, const PriorModel& prior, int n,
                                   double g, double phi_pu) {
    prior.validate();
    if (g < 0.0) throw std::domain_error("make_pu_context: fading gain must be >= 0");
    PuSelectionContext ctx;
    ctx.n = n;
    ctx.sigma_e2.resize(model.sectors);
    for (int m = 1; m <= model.sectors; ++m)
        ctx.sigma_e2[m - 1] = (g * model.gain(m, phi_pu) * prior.p_p + prior.sigma_w2) / n;
    ctx.validate();
    return ctx;
}

GammaCdfTable::GammaCdfTable(int n) : n_(n) {
    if (n < 1) throw std::domain_error("GammaCdfTable: shape must be >= 1");
    const double sqrt_n = std::sqrt((double)n);
    x0_ = std::max(0.0, n - 13.0 * sqrt_n - 20.0);
    const double x1 = n + 15.0 * sqrt_n + 60.0;
    const size_t count = 4096;
    h_ = (x1 - x0_) / (double)(count - 1);
    inv_h_ = 1.0 / h_;
    value_.resize(count);
    slope_.resize(count);
    for (size_t k = 0; k < count; ++k) {
        const double x = x0_ + k * h_;
        value_[k] = gamma_p((double)n, x);
        slope_[k] = (x > 0.0) ? std::exp(log_gamma_pdf((double)n, x)) : (n == 1 ? 1.0 : 0.0);
    }
}

double GammaCdfTable::operator()(double x) const {
    if (x <= x0_) return 0.0;
    const double pos = (x - x0_) * inv_h_;
    if (pos >= (double)(value_.size() - 1)) return 1.0;
    const size_t i = (size_t)pos;
    const double t = pos - (double)i;
    const double y0 = value_[i], y1 = value_[i + 1];
    const double d0 = slope_[i] * h_, d1 = slope_[i + 1] * h_;
    const double t2 = t * t, t3 = t2 * t;
    return (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * d0 +
           (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * d1;
}

double selection_prob_conditional(const PuSelectionContext& ctx, int i,
                                  const OmegaQuadOptions& opts) {
    ctx.validate();
    const int m_count = (int)ctx.sigma_e2.size();
    if (i < 1 || i > m_count) throw std::domain_error("selection_prob_conditional: bad index");
    if (m_count == 1) return 1.0;
    if (opts.table != nullptr && opts.table->shape() != ctx.n)
        throw std::domain_error("selection_prob_conditional: table shape mismatch");

    const double n = ctx.n;
    const double si = ctx.sigma_e2[i - 1];
    // With t the target energy in Gamma(n, 1) units, the integrand is the
    // Gamma(n,1) density times the product of competitor CDFs at t*si/sm.
    const double sqrt_n = std::sqrt(n);
    const double lo = std::max(0.0, n - 12.0 * sqrt_n - 12.0);
    const double hi = n + 14.0 * sqrt_n + 40.0;
    double ratio[20];
    for (int m = 0; m < m_count; ++m) ratio[m] = si / ctx.sigma_e2[m];
    auto integrand = [&](double t) {
        double log_f = log_gamma_pdf(n, t);
        double prod = 1.0;
        for (int m = 0; m < m_count; ++m) {
            if (m == i - 1) continue;
            prod *= (opts.table != nullptr) ? (*opts.table)(t * ratio[m])
                                            : gamma_p(n, t * ratio[m]);
            if (prod == 0.0) return 0.0;
        }
        return std::exp(log_f) * prod;
    };
    double value = integrate_panels(integrand, lo, hi, opts.panels, opts.order);
    return std::clamp(value, 0.0, 1.0);
}

namespace {

// log-sum-exp of (log a + log b) convolution cell; inputs in log space with
// -inf for empty cells.
double logsumexp_pair(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

} // namespace

double selection_prob_series(const PuSelectionContext& ctx, int i, const SeriesOptions& opts) {
    ctx.validate();
    const int m_count = (int)ctx.sigma_e2.size();
    if (i < 1 || i > m_count) throw std::domain_error("selection_prob_series: bad index");
    if (m_count == 1) return 1.0;

    // Rotate so the requested index leads.
    std::vector<double> s2(m_count);
    s2[0] = ctx.sigma_e2[i - 1];
    for (int m = 0, pos = 1; m < m_count; ++m)
        if (m != i - 1) s2[pos++] = ctx.sigma_e2[m];

    const double n = ctx.n;
    const long mn = (long)ctx.n * m_count;
    double g_sum = 0.0;
    for (double s : s2) g_sum += 1.0 / s;
    const double log_g = std::log(g_sum);

    // Prefactor G^{-MN} / (Gamma(N) prod sigma^{2N}).
    double log_pre = -(double)mn * log_g - std::lgamma(n);
    for (double s : s2) log_pre -= n * std::log(s);

    const double neg_inf = -std::numeric_limits<double>::infinity();
    const int chunk = std::max(2, std::min(256, opts.max_total));
    std::vector<double> log_h{0.0 - std::lgamma(n + 1.0)}; // total-order 0 of the first sequence
    // h starts as the k-sequence of competitor 2 and is convolved with each
    // further competitor; all sequences share the form
    //   b_j(k) = exp(-k log(sigma_j^2 G) - lgamma(k + N + 1)).
    auto seq_term = [&](int j, int k) {
        return -(double)k * (std::log(s2[j]) + log_g) - std::lgamma(k + n + 1.0);
    };

    int cap = chunk;
    auto extend = [&](std::vector<double>& h, int j, int new_cap) {
        std::vector<double> out(new_cap, neg_inf);
        for (int s = 0; s < new_cap; ++s) {
            double acc = neg_inf;
            const int kmax = std::min<int>(s, (int)h.size() - 1);
            for (int k = s - kmax; k <= s; ++k) {
                // cell s = h(s-k') conv b_j(k') — iterate over the b index
                double cell = h[s - k] + seq_term(j, k);
                acc = logsumexp_pair(acc, cell);
            }
            out[s] = acc;
        }
        return out;
    };

    // Build h up to `cap`, growing until the term tail is negligible.
    auto build_h = [&](int capacity) {
        std::vector<double> h(capacity, neg_inf);
        for (int k = 0; k < capacity; ++k) h[k] = seq_term(1, k);
        for (int j = 2; j < m_count; ++j) h = extend(h, j, capacity);
        return h;
    };

    while (true) {
        std::vector<double> h = build_h(cap);
        // term(s) = Gamma(MN + s) h(s); the G^{-s} factor lives inside the
        // per-competitor sequences already.
        double log_max = neg_inf;
        std::vector<double> log_t(cap);
        for (int s = 0; s < cap; ++s) {
            log_t[s] = std::lgamma((double)mn + s) + h[s];
            log_max = std::max(log_max, log_t[s]);
        }
        // Geometric tail bound from the trailing ratio; only valid once the
        // terms have passed their peak.
        const double r = std::exp(log_t[cap - 1] - log_t[cap - 2]);
        const bool tail_ok = cap >= 2 && r < 1.0 &&
                             std::exp(log_t[cap - 1] - log_max) * r / (1.0 - r) < opts.tail_tol;
        if (tail_ok) {
            double sum = 0.0;
            for (int s = 0; s < cap; ++s) sum += std::exp(log_t[s] - log_max);
            double value = std::exp(log_pre + log_max + std::log(sum));
            return std::clamp(value, 0.0, 1.0);
        }
        if (cap >= opts.max_total)
            throw std::runtime_error(
                "selection_prob_series: truncation budget exceeded; use the quadrature path");
        cap = std::min(opts.max_total, cap * 2);
    }
}

double delta_profile(const BeamPattern& model, const PriorModel& prior, int n, int i,
                     double phi_pu, const DeltaOptions& opts) {
    const auto& rule = gauss_laguerre(opts.laguerre_nodes);
    OmegaQuadOptions omega = opts.omega;
    std::unique_ptr<GammaCdfTable> table;
    if (omega.table == nullptr) {
        table = std::make_unique<GammaCdfTable>(n);
        omega.table = table.get();
    }
    double acc = 0.0;
    for (size_t k = 0; k < rule.nodes.size(); ++k) {
        const double g = prior.gamma * rule.nodes[k];
        const PuSelectionContext ctx = make_pu_context(model, prior, n, g, phi_pu);
        acc += rule.weights[k] * selection_prob_conditional(ctx, i, omega);
    }
    return acc;
}

std::vector<double> PuErrorMatrix::row(int i) const {
    std::vector<double> out(order);
    for (int m = 1; m <= order; ++m) out[m - 1] = at(i, m);
    return out;
}

double PuErrorMatrix::column_sum(int m) const {
    double acc = 0.0;
    for (int i = 1; i <= order; ++i) acc += at(i, m);
    return acc;
}

PuErrorMatrix average_error_matrix(const BeamPattern& model, const PriorModel& prior, int n,
                                   const AverageMatrixOptions& opts) {
    const int m_count = model.sectors;
    PuErrorMatrix mat;
    mat.order = m_count;
    mat.delta_bar.assign((size_t)m_count * m_count, 0.0);
    if (m_count == 1) {
        mat.delta_bar[0] = 1.0;
        return mat;
    }

    const double arc = kTwoPi / m_count;
    const QuadRule& rule = gauss_legendre(opts.arc_nodes);
    const GammaCdfTable table(n);
    DeltaOptions delta_opts = opts.delta;
    if (delta_opts.omega.table == nullptr) delta_opts.omega.table = &table;

    auto arc_average = [&](int i, int m) {
        const double center = model.boresight(m);
        double acc = 0.0;
        for (size_t k = 0; k < rule.nodes.size(); ++k) {
            const double phi = center + 0.5 * arc * rule.nodes[k];
            acc += rule.weights[k] * delta_profile(model, prior, n, i, phi, delta_opts);
        }
        return 0.5 * acc; // (M / 2pi) * integral over the arc
    };

    if (opts.use_rotation_symmetry) {
        for (int m = 1; m <= m_count; ++m) {
            const double value = arc_average(1, m);
            for (int shift = 0; shift < m_count; ++shift) {
                const int row = 1 + shift;
                const int col = 1 + (m - 1 + shift) % m_count;
                mat.delta_bar[(row - 1) * m_count + (col - 1)] = value;
            }
        }
    } else {
        for (int i = 1; i <= m_count; ++i)
            for (int m = 1; m <= m_count; ++m)
                mat.delta_bar[(i - 1) * m_count + (m - 1)] = arc_average(i, m);
    }
    return mat;
}

} // namespace crbeam
