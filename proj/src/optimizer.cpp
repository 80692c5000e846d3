#include "optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "special.hpp"

namespace crbeam {

void Constraints::validate() const {
    if (!(p_bar > 0.0 && i_bar > 0.0))
        throw std::domain_error("Constraints: caps must be positive");
}

int QuantizedPowerPolicy::interval_of(double nu) const {
    int k = 0;
    while (k < (int)mu.size() && nu >= mu[k]) ++k;
    return k;
}

double interference_coefficient(const std::vector<double>& psi, const PuErrorMatrix& delta_bar,
                                int m_pu_star, const BeamPattern& model, double beta0,
                                double gamma_sp) {
    const int m_count = model.sectors;
    if ((int)psi.size() != m_count || delta_bar.order != m_count)
        throw std::domain_error("interference_coefficient: dimension mismatch");
    if (m_pu_star < 1 || m_pu_star > m_count)
        throw std::domain_error("interference_coefficient: bad primary beam index");
    double acc = 0.0;
    for (int j = 1; j <= m_count; ++j) {
        for (int i = 1; i <= m_count; ++i) {
            acc += psi[j - 1] * delta_bar.at(m_pu_star, i) *
                   model.base_gain(model.boresight(j) - model.boresight(i));
        }
    }
    return beta0 * gamma_sp * acc;
}

namespace {

// Per-interval stationary power with the multiplier combination
// c = lambda * pihat0 + vartheta * b0 already folded together.
double kkt_power_coef(double mu_k, double coef, double pihat0, double alpha0, double sigma_w2,
                      double sigma_p2) {
    const double d = kLn2 * coef;
    const double f = pihat0 / d - (2.0 * sigma_w2 + sigma_p2) / mu_k;
    const double upsilon =
        f * f - (4.0 / mu_k) * (sigma_w2 * (sigma_w2 + sigma_p2) / mu_k -
                                (pihat0 * sigma_w2 + alpha0 * sigma_p2) / d);
    if (upsilon < 0.0) return 0.0;
    return std::max(0.0, 0.5 * (f + std::sqrt(upsilon)));
}

// Product-form CDF/pdf/quantile of the selection-diversity law; these avoid
// the signed expansion in the solver's inner loops.
double cdf_fast(const SelectionDiversity& dist, double x) { return dist.cdf_product(x); }

double quantile_fast(const SelectionDiversity& dist, double p, double lo_hint) {
    // One Newton step from the hint usually lands inside the final bracket;
    // bisection safeguards the rest.
    double lo = lo_hint;
    double hi = std::numeric_limits<double>::infinity();
    double x = lo_hint;
    {
        const auto d0 = dist.cdf_pdf_product(lo_hint);
        const double f0 = d0.cdf - p;
        x = (d0.pdf > 0.0 && f0 < 0.0) ? lo_hint - f0 / d0.pdf : lo_hint;
        if (!(x > lo)) x = lo + std::max(1e-12, 1e-6 * std::max(1.0, lo));
    }
    for (int iter = 0; iter < 100; ++iter) {
        const auto v = dist.cdf_pdf_product(x);
        const double f = v.cdf - p;
        if (f > 0.0) hi = x; else lo = x;
        double next = (v.pdf > 0.0) ? x - f / v.pdf : x;
        if (!(next > lo && next < hi))
            next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * std::max(lo, 1e-12);
        if (std::fabs(next - x) <= 1e-14 * std::max(1.0, x)) return next;
        x = next;
    }
    return x;
}

} // namespace

double kkt_power(double mu_k, double lambda, double vartheta, double b0, double pihat0,
                 double alpha0, double beta0, double sigma_w2, double sigma_p2) {
    if (!(mu_k > 0.0)) throw std::domain_error("kkt_power: threshold must be > 0");
    if (lambda < 0.0 || vartheta < 0.0)
        throw std::domain_error("kkt_power: multipliers must be nonnegative");
    const double coef = lambda * pihat0 + vartheta * b0;
    if (!(coef > 0.0)) throw std::domain_error("kkt_power: multipliers must not both vanish");
    (void)beta0; // enters only through pihat0 = alpha0 + beta0
    return kkt_power_coef(mu_k, coef, pihat0, alpha0, sigma_w2, sigma_p2);
}

ThresholdStep next_threshold(double mu_k, double p_prev, double p_curr,
                             const SelectionDiversity& dist, const ThresholdContext& ctx) {
    ThresholdStep step;
    const auto at_mu = dist.cdf_pdf_product(mu_k);
    const double f_mu = at_mu.cdf;
    if (!(p_curr > 0.0)) {
        step.status = ThresholdStepStatus::kInfeasibleLow;
        step.f_target = f_mu;
        return step;
    }
    const double r_idle = std::log2(1.0 + mu_k * p_curr / ctx.sigma_w2);
    const double r_missed = std::log2(1.0 + mu_k * p_curr / (ctx.sigma_w2 + ctx.sigma_p2));
    const double numer = ctx.alpha0 * (r_idle - ctx.r_idle_prev) +
                         ctx.beta0 * (r_missed - ctx.r_missed_prev) -
                         ctx.lag_coef * (p_curr - p_prev);
    const double denom =
        (p_curr / kLn2) * (ctx.alpha0 / (ctx.sigma_w2 + mu_k * p_curr) +
                           ctx.beta0 / (ctx.sigma_w2 + ctx.sigma_p2 + mu_k * p_curr));
    const double target = f_mu + at_mu.pdf * numer / denom;
    step.f_target = target;
    constexpr double kUnitTol = 1e-12;
    if (target > 1.0 + kUnitTol) {
        step.status = ThresholdStepStatus::kInfeasibleHigh;
    } else if (target >= 1.0 - kUnitTol) {
        step.status = ThresholdStepStatus::kTerminal;
        step.mu_next = std::numeric_limits<double>::infinity();
    } else if (target <= f_mu) {
        step.status = ThresholdStepStatus::kInfeasibleLow;
    } else {
        step.status = ThresholdStepStatus::kOk;
        step.mu_next = quantile_fast(dist, target, mu_k);
    }
    return step;
}

double capacity_lower_bound(const QuantizedPowerPolicy& policy, const SelectionDiversity& dist,
                            double alpha0, double beta0, double d_t, double sigma_w2,
                            double sigma_p2) {
    double acc = 0.0;
    const int levels = policy.levels();
    for (int k = 1; k <= levels; ++k) {
        const double mu_k = policy.mu[k - 1];
        const double p_k = policy.p[k];
        if (!(p_k > 0.0)) continue;
        const double f_hi = (k == levels) ? 1.0 : dist.cdf_product(policy.mu[k]);
        const double f_lo = dist.cdf_product(mu_k);
        const double r_idle = std::log2(1.0 + mu_k * p_k / sigma_w2);
        const double r_missed = std::log2(1.0 + mu_k * p_k / (sigma_w2 + sigma_p2));
        acc += (alpha0 * r_idle + beta0 * r_missed) * (f_hi - f_lo);
    }
    return d_t * acc;
}

namespace {

struct ChainOutcome {
    bool complete = false;
    double residual = 0.0; ///< boundary CDF target minus one (sentinel -2 for collapse)
    QuantizedPowerPolicy policy;
};

// One forward pass of the joint stationarity system for a trial mu_1: the
// power of each interval is the per-interval optimum and each next threshold
// comes from the recurrence. After the top interval the recurrence
// prescribes the CDF value of the (virtual) next threshold, which must be 1.
ChainOutcome run_chain(double mu1, double coef_c, const LinkStatistics& stats,
                       const SelectionDiversity& dist, int n_b, const SolveOptions& opts) {
    ChainOutcome out;
    const int levels = 1 << n_b;
    out.policy.n_b = n_b;
    out.policy.mu.assign(levels, 0.0);
    out.policy.p.assign(levels + 1, 0.0);

    ThresholdContext ctx{stats.alpha0, stats.beta0, stats.sigma_w2, stats.sigma_p2,
                         coef_c, 0.0, 0.0};

    double mu_k = mu1;
    double p_prev = 0.0;
    for (int k = 1; k <= levels; ++k) {
        const double p_k = kkt_power_coef(mu_k, coef_c, stats.pihat0, stats.alpha0,
                                          stats.sigma_w2, stats.sigma_p2);
        if (!(p_k > opts.p_positive_floor)) {
            out.residual = -2.0; // below the power cutoff: mu1 must grow
            return out;
        }
        out.policy.mu[k - 1] = mu_k;
        out.policy.p[k] = p_k;
        const ThresholdStep step = next_threshold(mu_k, p_prev, p_k, dist, ctx);
        if (k < levels) {
            if (step.status == ThresholdStepStatus::kInfeasibleLow) {
                out.residual = -2.0;
                return out;
            }
            if (step.status != ThresholdStepStatus::kOk) {
                // CDF budget exhausted before the last interval: mu1 too large.
                out.residual = std::max(step.f_target - 1.0, 1e-9);
                return out;
            }
            ctx.r_idle_prev = std::log2(1.0 + mu_k * p_k / stats.sigma_w2);
            ctx.r_missed_prev =
                std::log2(1.0 + mu_k * p_k / (stats.sigma_w2 + stats.sigma_p2));
            p_prev = p_k;
            mu_k = step.mu_next;
        } else {
            if (step.status == ThresholdStepStatus::kInfeasibleLow) {
                out.residual = -2.0;
                return out;
            }
            out.complete = true;
            out.residual = step.f_target - 1.0;
        }
    }
    return out;
}

struct Mu1Solve {
    bool ok = false;
    double mu1 = 0.0;
    double residual = 0.0;
    int evaluations = 0;
    QuantizedPowerPolicy policy;
};

// Safeguarded secant (Illinois) on the boundary residual, bracketed by
// doubling/halving from the warm start.
Mu1Solve solve_mu1(double mu1_guess, double coef_c, const LinkStatistics& stats,
                   const SelectionDiversity& dist, int n_b, const SolveOptions& opts) {
    Mu1Solve result;
    auto eval = [&](double mu1) {
        ++result.evaluations;
        return run_chain(mu1, coef_c, stats, dist, n_b, opts);
    };

    double lo = 0.0, hi = 0.0;
    ChainOutcome lo_out, hi_out;
    double x = std::max(mu1_guess, 1e-12);
    ChainOutcome out = eval(x);
    // warm starts sit near the root; widen the bracket step only when far
    const double near_factor = 1.25, far_factor = 2.0;
    if (out.residual < 0.0) {
        lo = x;
        lo_out = out;
        for (int i = 0; i < opts.max_mu1_iterations; ++i) {
            x *= (out.residual > -0.05) ? near_factor : far_factor;
            out = eval(x);
            if (out.residual >= 0.0) { hi = x; hi_out = out; break; }
            lo = x;
            lo_out = out;
        }
    } else {
        hi = x;
        hi_out = out;
        for (int i = 0; i < opts.max_mu1_iterations; ++i) {
            x /= (out.residual < 0.05) ? near_factor : far_factor;
            if (x < 1e-300) break;
            out = eval(x);
            if (out.residual < 0.0) { lo = x; lo_out = out; break; }
            hi = x;
            hi_out = out;
        }
    }
    if (hi == 0.0) return result; // no bracket found

    // Illinois iteration on the bracket [lo, hi].
    double f_lo = (lo > 0.0) ? lo_out.residual : -1.0;
    double f_hi = hi_out.residual;
    ChainOutcome best = hi_out;
    double best_x = hi;
    int side = 0;
    for (int i = 0; i < opts.max_mu1_iterations && result.evaluations < 4 * opts.max_mu1_iterations; ++i) {
        if (std::fabs(best.residual) <= opts.mu1_residual_tol && best.complete) break;
        double mid;
        if (lo > 0.0 && std::isfinite(f_lo) && std::isfinite(f_hi) && f_hi != f_lo) {
            mid = hi - f_hi * (hi - lo) / (f_hi - f_lo);
            if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
        } else {
            mid = (lo > 0.0) ? 0.5 * (lo + hi) : 0.5 * hi;
        }
        const ChainOutcome mid_out = eval(mid);
        if (std::fabs(mid_out.residual) < std::fabs(best.residual) ||
            (mid_out.complete && !best.complete)) {
            best = mid_out;
            best_x = mid;
        }
        if (mid_out.residual < 0.0) {
            lo = mid;
            f_lo = mid_out.residual;
            if (side == -1) f_hi *= 0.5;
            side = -1;
        } else {
            hi = mid;
            f_hi = mid_out.residual;
            if (side == +1) f_lo *= 0.5;
            side = +1;
        }
        if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
    }
    result.ok = best.complete && std::fabs(best.residual) <= 10.0 * opts.mu1_residual_tol;
    result.mu1 = best_x;
    result.residual = best.residual;
    result.policy = best.policy;
    return result;
}

double policy_weight_sum(const QuantizedPowerPolicy& policy, const SelectionDiversity& dist) {
    double acc = 0.0;
    const int levels = policy.levels();
    for (int k = 1; k <= levels; ++k) {
        const double f_hi = (k == levels) ? 1.0 : cdf_fast(dist, policy.mu[k]);
        acc += policy.p[k] * (f_hi - cdf_fast(dist, policy.mu[k - 1]));
    }
    return acc;
}

// Lagrangian without the constant -lambda*P_bar - vartheta*I_bar offset;
// monotonicity across block updates is unaffected by the constant.
double lagrangian_value(const QuantizedPowerPolicy& policy, const SelectionDiversity& dist,
                        const LinkStatistics& stats, double coef_c) {
    const double c_lb = capacity_lower_bound(policy, dist, stats.alpha0, stats.beta0, stats.d_t,
                                             stats.sigma_w2, stats.sigma_p2);
    return -c_lb + coef_c * stats.d_t * policy_weight_sum(policy, dist);
}

// mu-block of the verification sweep: thresholds re-shot from the
// recurrence with the power levels held fixed, boundary re-solved in mu1.
bool reshoot_thresholds_fixed_p(QuantizedPowerPolicy& policy, double coef_c,
                                const LinkStatistics& stats, const SelectionDiversity& dist,
                                const SolveOptions& opts, int& evals) {
    const int levels = policy.levels();
    auto residual_for = [&](double mu1, std::vector<double>* out_mu) {
        ++evals;
        double mu_k = mu1;
        ThresholdContext ctx{stats.alpha0, stats.beta0, stats.sigma_w2, stats.sigma_p2,
                             coef_c, 0.0, 0.0};
        double p_prev = 0.0;
        for (int k = 1; k <= levels; ++k) {
            const double p_k = policy.p[k];
            if (out_mu) (*out_mu)[k - 1] = mu_k;
            const ThresholdStep step = next_threshold(mu_k, p_prev, p_k, dist, ctx);
            if (k < levels) {
                if (step.status == ThresholdStepStatus::kInfeasibleLow) return -2.0;
                if (step.status != ThresholdStepStatus::kOk)
                    return std::max(step.f_target - 1.0, 1e-9);
                ctx.r_idle_prev = std::log2(1.0 + mu_k * p_k / stats.sigma_w2);
                ctx.r_missed_prev =
                    std::log2(1.0 + mu_k * p_k / (stats.sigma_w2 + stats.sigma_p2));
                p_prev = p_k;
                mu_k = step.mu_next;
            } else {
                return step.f_target - 1.0;
            }
        }
        return -2.0;
    };

    double lo = 0.0, hi = 0.0, f_lo = 0.0, f_hi = 0.0;
    double x = policy.mu[0];
    double r = residual_for(x, nullptr);
    if (r < 0.0) {
        lo = x; f_lo = r;
        for (int i = 0; i < opts.max_mu1_iterations; ++i) {
            x *= 2.0;
            r = residual_for(x, nullptr);
            if (r >= 0.0) { hi = x; f_hi = r; break; }
            lo = x; f_lo = r;
        }
    } else {
        hi = x; f_hi = r;
        for (int i = 0; i < opts.max_mu1_iterations; ++i) {
            x *= 0.5;
            if (x < 1e-300) break;
            r = residual_for(x, nullptr);
            if (r < 0.0) { lo = x; f_lo = r; break; }
            hi = x; f_hi = r;
        }
    }
    if (hi == 0.0) return false;
    double best_x = hi, best_r = f_hi;
    int side = 0;
    for (int i = 0; i < opts.max_mu1_iterations; ++i) {
        if (std::fabs(best_r) <= opts.mu1_residual_tol) break;
        double mid;
        if (lo > 0.0 && f_hi != f_lo) {
            mid = hi - f_hi * (hi - lo) / (f_hi - f_lo);
            if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
        } else {
            mid = (lo > 0.0) ? 0.5 * (lo + hi) : 0.5 * hi;
        }
        r = residual_for(mid, nullptr);
        if (std::fabs(r) < std::fabs(best_r)) { best_x = mid; best_r = r; }
        if (r < 0.0) {
            lo = mid; f_lo = r;
            if (side == -1) f_hi *= 0.5;
            side = -1;
        } else {
            hi = mid; f_hi = r;
            if (side == +1) f_lo *= 0.5;
            side = +1;
        }
        if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
    }
    if (std::fabs(best_r) > 10.0 * opts.mu1_residual_tol) return false;
    std::vector<double> mu(levels);
    residual_for(best_x, &mu);
    policy.mu = std::move(mu);
    return true;
}

} // namespace

SolveResult solve_at_tsen(const LinkStatistics& stats, const SelectionDiversity& dist,
                          const Constraints& caps, int n_b, const SolveOptions& opts,
                          SolveWarmState* warm) {
    caps.validate();
    if (n_b < 1 || n_b > 16) throw std::domain_error("solve_at_tsen: n_b out of 1..16");
    if (!(stats.d_t > 0.0 && stats.pihat0 > 0.0))
        throw std::domain_error("solve_at_tsen: degenerate link statistics");

    SolveResult result;
    CapacityReport& report = result.report;
    report.b0 = stats.b0;

    // Both constraint functionals scale with the same policy sum
    // S = sum_k P_k (F(mu_{k+1}) - F(mu_k)), so the active cap is the smaller
    // of the two in S units and the dual reduces to one scalar multiplier.
    const double s_cap_power = caps.p_bar / (stats.d_t * stats.pihat0);
    const double s_cap_interf = (stats.b0 > 0.0)
                                    ? caps.i_bar / (stats.d_t * stats.b0)
                                    : std::numeric_limits<double>::infinity();
    const double s_cap = std::min(s_cap_power, s_cap_interf);
    const bool power_binding = s_cap_power <= s_cap_interf;

    double mu1_warm = (warm != nullptr && warm->mu1 > 0.0) ? warm->mu1
                                                            : dist.quantile(0.5 / (1 << n_b));

    const SolveOptions* chain_opts_ptr = &opts;
    auto eval_c = [&](double c, QuantizedPowerPolicy* out_policy) {
        Mu1Solve sol = solve_mu1(mu1_warm, c, stats, dist, n_b, *chain_opts_ptr);
        report.mu1_iterations += sol.evaluations;
        ++report.dual_iterations;
        if (!sol.ok) return std::numeric_limits<double>::quiet_NaN();
        mu1_warm = sol.mu1;
        if (out_policy) *out_policy = sol.policy;
        return policy_weight_sum(sol.policy, dist);
    };

    auto give_up = [&](const char* why) {
        report.diagnostics = why;
        result.policy.n_b = n_b;
        result.policy.mu.assign((size_t)1 << n_b, 1.0);
        result.policy.p.assign(((size_t)1 << n_b) + 1, 0.0);
        return result;
    };

    // Bracket the multiplier in log space around the warm start.
    double c = (warm != nullptr && warm->multiplier > 0.0) ? warm->multiplier
                                                           : 1.0 / (1.0 + s_cap);
    double s = eval_c(c, nullptr);
    while (std::isnan(s) && report.dual_iterations < opts.max_dual_iterations) {
        c *= 4.0; // tighten until the threshold chain closes
        s = eval_c(c, nullptr);
    }
    if (std::isnan(s)) return give_up("dual solve: threshold chain never closed");

    double c_lo = 0.0, c_hi = 0.0, s_lo = 0.0, s_hi = 0.0; // S(c_lo) > s_cap > S(c_hi)
    if (s > s_cap) {
        c_lo = c;
        s_lo = s;
        while (report.dual_iterations < opts.max_dual_iterations) {
            c *= 2.0;
            const double s_next = eval_c(c, nullptr);
            if (!std::isnan(s_next) && s_next <= s_cap) { c_hi = c; s_hi = s_next; break; }
            if (!std::isnan(s_next)) { c_lo = c; s_lo = s_next; }
        }
    } else {
        c_hi = c;
        s_hi = s;
        while (report.dual_iterations < opts.max_dual_iterations) {
            c *= 0.5;
            const double s_next = eval_c(c, nullptr);
            if (std::isnan(s_next)) break; // looser multipliers never close the chain
            if (s_next > s_cap) { c_lo = c; s_lo = s_next; break; }
            c_hi = c;
            s_hi = s_next;
        }
    }
    if (c_lo == 0.0 || c_hi == 0.0) return give_up("dual solve: failed to bracket the multiplier");

    // Illinois iteration on (log c, log S - log cap); S is smooth and
    // strictly decreasing on the bracket. In tight mode the binding target
    // also bounds the complementary-slackness product multiplier * slack,
    // which demands a smaller gap when the active multiplier is large.
    const double bind_coef = power_binding ? stats.pihat0
                                           : (stats.b0 > 0.0 ? stats.b0 : stats.pihat0);
    auto rel_gap_target = [&](double c_now) {
        double target = 0.25 * opts.constraint_rel_tol;
        if (opts.verify_sweeps)
            target = std::min(target, 0.5e-6 * bind_coef / std::max(c_now, 1e-300));
        return std::max(target, 1e-12);
    };
    SolveOptions chain_opts = opts;
    if (opts.verify_sweeps)
        chain_opts.mu1_residual_tol =
            std::max(1e-12, std::min(opts.mu1_residual_tol, rel_gap_target(c_hi) / 30.0));
    chain_opts_ptr = &chain_opts;
    QuantizedPowerPolicy policy;
    double c_star = c_hi;
    double s_star = s_hi;
    double x_lo = std::log(c_lo), f_lo = std::log(s_lo / s_cap);
    double x_hi = std::log(c_hi), f_hi = std::log(s_hi / s_cap);
    int side = 0;
    while (report.dual_iterations < opts.max_dual_iterations) {
        if (s_star <= s_cap && s_cap - s_star <= rel_gap_target(c_star) * s_cap) break;
        if (x_hi - x_lo < 1e-14) break;
        double x_mid = (f_hi != f_lo) ? x_hi - f_hi * (x_hi - x_lo) / (f_hi - f_lo)
                                      : 0.5 * (x_lo + x_hi);
        if (!(x_mid > x_lo && x_mid < x_hi)) x_mid = 0.5 * (x_lo + x_hi);
        const double mid = std::exp(x_mid);
        QuantizedPowerPolicy cand;
        const double s_mid = eval_c(mid, &cand);
        if (std::isnan(s_mid)) { x_lo = x_mid; f_lo = std::log(4.0); side = 0; continue; }
        if (s_mid <= s_cap) {
            c_star = mid;
            s_star = s_mid;
            policy = std::move(cand);
            x_hi = x_mid;
            f_hi = std::log(s_mid / s_cap);
            if (side == +1) f_lo *= 0.5;
            side = +1;
        } else {
            x_lo = x_mid;
            f_lo = std::log(s_mid / s_cap);
            if (side == -1) f_hi *= 0.5;
            side = -1;
        }
    }
    if (policy.mu.empty()) {
        s_star = eval_c(c_star, &policy);
        if (std::isnan(s_star)) return give_up("dual solve: lost the feasible endpoint");
    }
    if (warm != nullptr) {
        warm->multiplier = c_star;
        warm->mu1 = mu1_warm;
    }

    // Verification sweeps: alternate the threshold block and the power block
    // until the capacity settles; records the Lagrangian after each block.
    double c_lb_prev = capacity_lower_bound(policy, dist, stats.alpha0, stats.beta0, stats.d_t,
                                            stats.sigma_w2, stats.sigma_p2);
    report.lagrangian_trace.push_back(lagrangian_value(policy, dist, stats, c_star));
    bool sweeps_converged = !opts.verify_sweeps;
    for (int sweep = 0; opts.verify_sweeps && sweep < opts.max_bcd_sweeps; ++sweep) {
        ++report.bcd_sweeps;
        int evals = 0;
        if (!reshoot_thresholds_fixed_p(policy, c_star, stats, dist, opts, evals)) break;
        report.mu1_iterations += evals;
        report.lagrangian_trace.push_back(lagrangian_value(policy, dist, stats, c_star));
        for (int k = 1; k <= policy.levels(); ++k)
            policy.p[k] = kkt_power_coef(policy.mu[k - 1], c_star, stats.pihat0, stats.alpha0,
                                         stats.sigma_w2, stats.sigma_p2);
        report.lagrangian_trace.push_back(lagrangian_value(policy, dist, stats, c_star));
        const double c_lb = capacity_lower_bound(policy, dist, stats.alpha0, stats.beta0,
                                                 stats.d_t, stats.sigma_w2, stats.sigma_p2);
        const bool settled = std::fabs(c_lb - c_lb_prev) < opts.bcd_tol * std::max(1.0, c_lb);
        c_lb_prev = c_lb;
        if (settled) { sweeps_converged = true; break; }
    }

    const double s_final = policy_weight_sum(policy, dist);
    result.policy = policy;
    report.c_lb = c_lb_prev;
    report.power_lhs = stats.d_t * stats.pihat0 * s_final;
    report.interference_lhs = stats.d_t * stats.b0 * s_final;
    report.power_slack = caps.p_bar - report.power_lhs;
    report.interference_slack = caps.i_bar - report.interference_lhs;
    if (power_binding) {
        report.lambda = c_star / stats.pihat0;
        report.vartheta = 0.0;
    } else {
        report.lambda = 0.0;
        report.vartheta = c_star / stats.b0;
    }
    report.rate_idle.resize(policy.levels());
    report.rate_missed.resize(policy.levels());
    for (int k = 1; k <= policy.levels(); ++k) {
        report.rate_idle[k - 1] = std::log2(1.0 + policy.mu[k - 1] * policy.p[k] / stats.sigma_w2);
        report.rate_missed[k - 1] =
            std::log2(1.0 + policy.mu[k - 1] * policy.p[k] / (stats.sigma_w2 + stats.sigma_p2));
    }
    const bool feasible =
        report.power_lhs <= caps.p_bar * (1.0 + opts.constraint_rel_tol) &&
        report.interference_lhs <= caps.i_bar * (1.0 + opts.constraint_rel_tol);
    report.converged = sweeps_converged && feasible;
    if (!sweeps_converged) report.diagnostics = "block sweeps did not settle";
    else if (!feasible) report.diagnostics = "returned policy violates a cap beyond tolerance";
    return result;
}

SolveResult solve_p2(const std::function<LinkStatistics(double)>& stats_at, double t_sen_lo,
                     double t_sen_hi, const SelectionDiversity& dist, const Constraints& caps,
                     int n_b, const SolveOptions& opts) {
    if (!(t_sen_lo > 0.0 && t_sen_hi > t_sen_lo))
        throw std::domain_error("solve_p2: bad sensing-duration bracket");

    int evals = 0;
    SolveWarmState warm;
    SolveOptions search_opts = opts;
    search_opts.mu1_residual_tol = std::max(opts.mu1_residual_tol, 1e-4);
    search_opts.verify_sweeps = false;
    auto objective = [&](double t_sen) {
        ++evals;
        SolveResult r = solve_at_tsen(stats_at(t_sen), dist, caps, n_b, search_opts, &warm);
        r.policy.t_sen = t_sen;
        return r;
    };

    const double inv_phi = 0.6180339887498949;
    double a = t_sen_lo, b = t_sen_hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    SolveResult r1 = objective(x1);
    SolveResult r2 = objective(x2);
    SolveResult best = (r1.report.c_lb >= r2.report.c_lb) ? r1 : r2;
    for (int i = 0; i < opts.tsen_golden_iterations; ++i) {
        if (r1.report.c_lb >= r2.report.c_lb) {
            b = x2;
            x2 = x1;
            r2 = r1;
            x1 = b - inv_phi * (b - a);
            r1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            r1 = r2;
            x2 = a + inv_phi * (b - a);
            r2 = objective(x2);
        }
        const SolveResult& cand = (r1.report.c_lb >= r2.report.c_lb) ? r1 : r2;
        if (cand.report.c_lb > best.report.c_lb) best = cand;
    }
    // Tight re-solve at the chosen duration with the full tolerances and the
    // block-sweep verification enabled.
    SolveResult final_result =
        solve_at_tsen(stats_at(best.policy.t_sen), dist, caps, n_b, opts, &warm);
    final_result.policy.t_sen = best.policy.t_sen;
    final_result.report.tsen_evaluations = evals + 1;
    return final_result;
}

} // namespace crbeam
