#include "mc_oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

#include "special.hpp"

namespace crbeam {
namespace {

long block_count(long trials, long block) { return (trials + block - 1) / block; }

// Runs one worker function per block with a block-indexed RNG stream and a
// deterministic in-order reduction, so results do not depend on the thread
// count.
template <typename Partial, typename BlockFn>
std::vector<Partial> run_blocks(long trials, const McOptions& opts, BlockFn block_fn) {
    const long blocks = block_count(trials, opts.block);
    std::vector<Partial> partials((size_t)blocks);
    const int threads = std::max(1, opts.threads);
    if (threads == 1) {
        for (long b = 0; b < blocks; ++b) {
            const long lo = b * opts.block;
            const long hi = std::min(trials, lo + opts.block);
            Xoshiro256 rng(opts.seed, (uint64_t)b);
            block_fn(partials[(size_t)b], lo, hi, rng);
        }
    } else {
        std::atomic<long> next{0};
        auto worker = [&]() {
            for (;;) {
                const long b = next.fetch_add(1);
                if (b >= blocks) return;
                const long lo = b * opts.block;
                const long hi = std::min(trials, lo + opts.block);
                Xoshiro256 rng(opts.seed, (uint64_t)b);
                block_fn(partials[(size_t)b], lo, hi, rng);
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return partials;
}

// Pairwise tree reduction over per-block partial sums (fixed order).
double pairwise_sum(std::vector<double>& values, size_t lo, size_t hi) {
    if (hi - lo == 1) return values[lo];
    const size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(values, lo, mid) + pairwise_sum(values, mid, hi);
}

double reduce_sums(std::vector<double> values) {
    if (values.empty()) return 0.0;
    return pairwise_sum(values, 0, values.size());
}

Estimate bernoulli_estimate(double count, long n) {
    Estimate est;
    est.n = n;
    est.value = count / n;
    est.se = std::sqrt(std::max(0.0, est.value * (1.0 - est.value) / n));
    return est;
}

Estimate mean_estimate(double sum, double sum_sq, long n) {
    Estimate est;
    est.n = n;
    est.value = sum / n;
    const double var = std::max(0.0, sum_sq / n - est.value * est.value);
    est.se = std::sqrt(var / n);
    return est;
}

// One sensing-window statistic under the active hypothesis with per-sample
// fading: each sample is |A_i + w|^2 with A_i^2 = p_m(phi) * g_h * g_s. Given
// the drawn amplitudes, the sector sum is (sigma_w2/2) times a noncentral
// chi-square with 2N degrees of freedom and noncentrality sum A_i^2 over
// (sigma_w2/2), drawn exactly as (sqrt(lambda) + Z)^2 + chi2_{2N-1}.
double draw_h1_statistic(const BeamPattern& model, const FramePlan& plan, const PriorModel& prior,
                         double phi, Xoshiro256& rng) {
    const double half_noise = 0.5 * prior.sigma_w2;
    double acc = 0.0;
    for (int m = 1; m <= plan.sectors; ++m) {
        const double p_m = model.gain(m, phi);
        double amp2_sum = 0.0;
        for (int i = 0; i < plan.n; ++i)
            amp2_sum += rng.exponential(prior.gamma) * rng.exponential(prior.p_p);
        amp2_sum *= p_m;
        const double lambda = amp2_sum / half_noise;
        const double z = std::sqrt(lambda) + rng.normal();
        std::gamma_distribution<double> chi2_rest((2.0 * plan.n - 1.0) * 0.5, 2.0);
        acc += half_noise * (z * z + chi2_rest(rng));
    }
    return acc / (double)plan.n_eq;
}

} // namespace

Estimate mc_false_alarm(long n_eq, double sigma_w2, double eta, const McOptions& opts) {
    struct Partial {
        double hits = 0.0;
    };
    auto partials = run_blocks<Partial>(opts.trials, opts, [&](Partial& p, long lo, long hi,
                                                               Xoshiro256& rng) {
        std::gamma_distribution<double> gamma_draw((double)n_eq, sigma_w2 / (double)n_eq);
        for (long t = lo; t < hi; ++t)
            if (gamma_draw(rng) > eta) p.hits += 1.0;
    });
    std::vector<double> hits;
    hits.reserve(partials.size());
    for (auto& p : partials) hits.push_back(p.hits);
    return bernoulli_estimate(reduce_sums(std::move(hits)), opts.trials);
}

Estimate mc_detection(const BeamPattern& model, const FramePlan& plan, const PriorModel& prior,
                      double eta, const McOptions& opts) {
    struct Partial {
        double hits = 0.0;
    };
    auto partials = run_blocks<Partial>(
        opts.trials, opts, [&](Partial& p, long lo, long hi, Xoshiro256& rng) {
            for (long t = lo; t < hi; ++t) {
                const double phi = rng.uniform() * kTwoPi;
                if (draw_h1_statistic(model, plan, prior, phi, rng) > eta) p.hits += 1.0;
            }
        });
    std::vector<double> hits;
    hits.reserve(partials.size());
    for (auto& p : partials) hits.push_back(p.hits);
    return bernoulli_estimate(reduce_sums(std::move(hits)), opts.trials);
}

MomentEstimate mc_h1_statistic_moments(const BeamPattern& model, const FramePlan& plan,
                                       const PriorModel& prior, const McOptions& opts) {
    // Accumulates moments of (T - offset) to avoid cancellation; the offset
    // is the closed-form mean scale.
    const double offset = prior.gamma * prior.p_p * 0.1 + prior.sigma_w2;
    struct Partial {
        double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    };
    auto partials = run_blocks<Partial>(
        opts.trials, opts, [&](Partial& p, long lo, long hi, Xoshiro256& rng) {
            for (long t = lo; t < hi; ++t) {
                const double phi = rng.uniform() * kTwoPi;
                const double d = draw_h1_statistic(model, plan, prior, phi, rng) - offset;
                p.s1 += d;
                p.s2 += d * d;
                p.s3 += d * d * d;
                p.s4 += d * d * d * d;
            }
        });
    std::vector<double> s1, s2, s3, s4;
    for (auto& p : partials) {
        s1.push_back(p.s1);
        s2.push_back(p.s2);
        s3.push_back(p.s3);
        s4.push_back(p.s4);
    }
    const double n = (double)opts.trials;
    const double m1 = reduce_sums(std::move(s1)) / n;
    const double m2 = reduce_sums(std::move(s2)) / n;
    const double m3 = reduce_sums(std::move(s3)) / n;
    const double m4 = reduce_sums(std::move(s4)) / n;
    const double var = m2 - m1 * m1;
    const double mu3 = m3 - 3.0 * m1 * m2 + 2.0 * m1 * m1 * m1;
    const double mu4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * std::pow(m1, 4);
    (void)mu3;
    MomentEstimate est;
    est.n = opts.trials;
    est.mean = m1 + offset;
    est.mean_se = std::sqrt(var / n);
    est.variance = var;
    est.variance_se = std::sqrt(std::max(0.0, mu4 - var * var) / n);
    return est;
}

std::vector<double> draw_sector_energies(const PriorModel& prior, const BeamPattern& model,
                                         int n, double g, double phi_pu, bool active,
                                         Xoshiro256& rng) {
    std::vector<double> energies(model.sectors, 0.0);
    for (int m = 1; m <= model.sectors; ++m) {
        // Given the block fading gain the per-sample variance is constant, so
        // each sample is a complex normal draw.
        const double var = active ? g * model.gain(m, phi_pu) * prior.p_p + prior.sigma_w2
                                  : prior.sigma_w2;
        const double sd = std::sqrt(0.5 * var);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double yr = sd * rng.normal();
            const double yi = sd * rng.normal();
            acc += yr * yr + yi * yi;
        }
        energies[m - 1] = acc / n;
    }
    return energies;
}

std::vector<double> mc_pu_argmax_freq(const PuSelectionContext& ctx, const McOptions& opts) {
    const int m_count = (int)ctx.sigma_e2.size();
    struct Partial {
        std::vector<double> counts;
    };
    auto partials = run_blocks<Partial>(
        opts.trials, opts, [&](Partial& p, long lo, long hi, Xoshiro256& rng) {
            p.counts.assign(m_count, 0.0);
            std::vector<std::gamma_distribution<double>> draws;
            draws.reserve(m_count);
            for (int m = 0; m < m_count; ++m)
                draws.emplace_back((double)ctx.n, ctx.sigma_e2[m]);
            for (long t = lo; t < hi; ++t) {
                int best = 0;
                double best_val = -1.0;
                for (int m = 0; m < m_count; ++m) {
                    const double e = draws[m](rng);
                    if (e > best_val) {
                        best_val = e;
                        best = m;
                    }
                }
                p.counts[best] += 1.0;
            }
        });
    std::vector<double> freq(m_count, 0.0);
    for (int m = 0; m < m_count; ++m) {
        std::vector<double> col;
        col.reserve(partials.size());
        for (auto& p : partials) col.push_back(p.counts[m]);
        freq[m] = reduce_sums(std::move(col)) / opts.trials;
    }
    return freq;
}

PuErrorMatrix mc_delta_bar(const BeamPattern& model, const PriorModel& prior, int n,
                           const McOptions& opts) {
    const int m_count = model.sectors;
    const long per_column = std::max<long>(1, opts.trials / m_count);
    PuErrorMatrix mat;
    mat.order = m_count;
    mat.delta_bar.assign((size_t)m_count * m_count, 0.0);
    const double arc = kTwoPi / m_count;
    for (int col = 1; col <= m_count; ++col) {
        struct Partial {
            std::vector<double> counts;
        };
        McOptions col_opts = opts;
        col_opts.seed = opts.seed ^ (0x5851f42d4c957f2dULL * (uint64_t)col);
        col_opts.trials = per_column;
        auto partials = run_blocks<Partial>(
            per_column, col_opts, [&](Partial& p, long lo, long hi, Xoshiro256& rng) {
                p.counts.assign(m_count, 0.0);
                const double center = model.boresight(col);
                for (long t = lo; t < hi; ++t) {
                    const double phi = center + (rng.uniform() - 0.5) * arc;
                    const double g = rng.exponential(prior.gamma);
                    int best = 0;
                    double best_val = -1.0;
                    for (int m = 1; m <= m_count; ++m) {
                        const double scale =
                            (g * model.gain(m, phi) * prior.p_p + prior.sigma_w2) / n;
                        std::gamma_distribution<double> draw((double)n, scale);
                        const double e = draw(rng);
                        if (e > best_val) {
                            best_val = e;
                            best = m - 1;
                        }
                    }
                    p.counts[best] += 1.0;
                }
            });
        for (int i = 0; i < m_count; ++i) {
            std::vector<double> cell;
            cell.reserve(partials.size());
            for (auto& p : partials) cell.push_back(p.counts[i]);
            mat.delta_bar[(size_t)i * m_count + (col - 1)] = reduce_sums(std::move(cell)) / per_column;
        }
    }
    return mat;
}

double mc_strongest_beam_ks(const SelectionDiversity& dist, const McOptions& opts) {
    std::vector<double> draws((size_t)opts.trials);
    struct Partial {
        bool done = false;
    };
    run_blocks<Partial>(opts.trials, opts, [&](Partial&, long lo, long hi, Xoshiro256& rng) {
        for (long t = lo; t < hi; ++t) {
            double best = 0.0;
            for (double d : dist.delta()) best = std::max(best, rng.exponential(d));
            draws[(size_t)t] = best;
        }
    });
    std::sort(draws.begin(), draws.end());
    double worst = 0.0;
    const double n = (double)opts.trials;
    for (long i = 0; i < opts.trials; ++i) {
        const double f = dist.cdf(draws[(size_t)i]);
        worst = std::max(worst, std::fabs(f - (i + 1) / n));
        worst = std::max(worst, std::fabs(f - i / n));
    }
    return worst;
}

double ks_pvalue(double distance, long n) {
    const double sqrt_n = std::sqrt((double)n);
    const double lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * distance;
    double acc = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = 2.0 * ((j % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
        acc += term;
        if (std::fabs(term) < 1e-12) break;
    }
    return std::clamp(acc, 0.0, 1.0);
}

std::vector<double> mc_psi_freq(const SelectionDiversity& dist, const McOptions& opts) {
    const int m_count = dist.beams();
    struct Partial {
        std::vector<double> counts;
    };
    auto partials = run_blocks<Partial>(
        opts.trials, opts, [&](Partial& p, long lo, long hi, Xoshiro256& rng) {
            p.counts.assign(m_count, 0.0);
            for (long t = lo; t < hi; ++t) {
                int best = 0;
                double best_val = -1.0;
                for (int m = 0; m < m_count; ++m) {
                    const double v = rng.exponential(dist.delta()[m]);
                    if (v > best_val) {
                        best_val = v;
                        best = m;
                    }
                }
                p.counts[best] += 1.0;
            }
        });
    std::vector<double> freq(m_count, 0.0);
    for (int m = 0; m < m_count; ++m) {
        std::vector<double> col;
        for (auto& p : partials) col.push_back(p.counts[m]);
        freq[m] = reduce_sums(std::move(col)) / opts.trials;
    }
    return freq;
}

Estimate mc_outage(const SelectionDiversity& dist, double mu1, const McOptions& opts) {
    struct Partial {
        double hits = 0.0;
    };
    auto partials = run_blocks<Partial>(
        opts.trials, opts, [&](Partial& p, long lo, long hi, Xoshiro256& rng) {
            for (long t = lo; t < hi; ++t) {
                double best = 0.0;
                for (double d : dist.delta()) best = std::max(best, rng.exponential(d));
                if (best < mu1) p.hits += 1.0;
            }
        });
    std::vector<double> hits;
    for (auto& p : partials) hits.push_back(p.hits);
    return bernoulli_estimate(reduce_sums(std::move(hits)), opts.trials);
}

Estimate mc_sep(const QuantizedPowerPolicy& policy, const SelectionDiversity& dist, double alpha0,
                double beta0, double rho, double sigma_w2, double sigma_p2,
                const McOptions& opts) {
    struct Partial {
        double sum = 0.0, sum_sq = 0.0;
    };
    auto partials = run_blocks<Partial>(
        opts.trials, opts, [&](Partial& p, long lo, long hi, Xoshiro256& rng) {
            for (long t = lo; t < hi; ++t) {
                double nu = 0.0;
                for (double d : dist.delta()) nu = std::max(nu, rng.exponential(d));
                const double p_k = policy.p[policy.interval_of(nu)];
                const double v =
                    alpha0 * q_func(std::sqrt(rho * nu * p_k / sigma_w2)) +
                    beta0 * q_func(std::sqrt(rho * nu * p_k / (sigma_w2 + sigma_p2)));
                p.sum += v;
                p.sum_sq += v * v;
            }
        });
    std::vector<double> sums, sums_sq;
    for (auto& p : partials) {
        sums.push_back(p.sum);
        sums_sq.push_back(p.sum_sq);
    }
    return mean_estimate(reduce_sums(std::move(sums)), reduce_sums(std::move(sums_sq)),
                         opts.trials);
}

Estimate mc_interference_gain(const BeamPattern& model, const PriorModel& prior, int n,
                              const SelectionDiversity& dist, int m_pu_star,
                              const McOptions& opts) {
    const int m_count = model.sectors;
    struct Partial {
        double sum = 0.0, sum_sq = 0.0, kept = 0.0;
    };
    auto partials = run_blocks<Partial>(
        opts.trials, opts, [&](Partial& p, long lo, long hi, Xoshiro256& rng) {
            for (long t = lo; t < hi; ++t) {
                const double phi = rng.uniform() * kTwoPi;
                const double g = rng.exponential(prior.gamma);
                int best = 0;
                double best_val = -1.0;
                for (int m = 1; m <= m_count; ++m) {
                    const double scale = (g * model.gain(m, phi) * prior.p_p + prior.sigma_w2) / n;
                    std::gamma_distribution<double> draw((double)n, scale);
                    const double e = draw(rng);
                    if (e > best_val) {
                        best_val = e;
                        best = m;
                    }
                }
                if (best != m_pu_star) continue;
                int best_sr = 0;
                double best_nu = -1.0;
                for (int m = 0; m < m_count; ++m) {
                    const double v = rng.exponential(dist.delta()[m]);
                    if (v > best_nu) {
                        best_nu = v;
                        best_sr = m;
                    }
                }
                const double g_sp = rng.exponential(prior.gamma_sp);
                const int true_arc = model.sector_of(phi);
                const double value =
                    g_sp * model.base_gain(model.boresight(best_sr + 1) - model.boresight(true_arc));
                p.kept += 1.0;
                p.sum += value;
                p.sum_sq += value * value;
            }
        });
    std::vector<double> sums, sums_sq, kept;
    for (auto& p : partials) {
        sums.push_back(p.sum);
        sums_sq.push_back(p.sum_sq);
        kept.push_back(p.kept);
    }
    const long n_kept = (long)reduce_sums(std::move(kept));
    return mean_estimate(reduce_sums(std::move(sums)), reduce_sums(std::move(sums_sq)), n_kept);
}

TrialAggregates run_trials(const ProtocolSpec& spec, const McOptions& opts) {
    if (spec.model == nullptr || spec.dist == nullptr)
        throw std::domain_error("run_trials: missing model or distribution");
    if (opts.trials < 1) throw std::domain_error("run_trials: need at least one trial");
    const BeamPattern& model = *spec.model;
    const SelectionDiversity& dist = *spec.dist;
    const int m_count = model.sectors;
    const int levels = spec.policy.levels();

    struct Partial {
        double n_h0 = 0.0, n_h1 = 0.0;
        double fa = 0.0, det = 0.0;
        double idle = 0.0, idle_h1 = 0.0;
        double outage = 0.0;
        double sep = 0.0, sep_sq = 0.0, sep_n = 0.0;
        double rate = 0.0, rate_sq = 0.0;
        double power = 0.0, power_sq = 0.0;
        double interf = 0.0, interf_sq = 0.0, interf_n = 0.0;
        std::vector<double> psi_counts, delta_counts, interval_counts, col_counts;
    };

    auto partials = run_blocks<Partial>(opts.trials, opts, [&](Partial& p, long lo, long hi,
                                                               Xoshiro256& rng) {
        p.psi_counts.assign(m_count, 0.0);
        p.delta_counts.assign((size_t)m_count * m_count, 0.0);
        p.interval_counts.assign(levels + 1, 0.0);
        p.col_counts.assign(m_count, 0.0);
        for (long t = lo; t < hi; ++t) {
            const bool active = rng.uniform() < spec.prior.pi1;
            bool sensed_busy;
            int m_pu_sel = 0;
            int true_arc = 1;
            if (active) {
                p.n_h1 += 1.0;
                const double phi = rng.uniform() * kTwoPi;
                const double g = rng.exponential(spec.prior.gamma);
                // Beam determination runs on the block-fading sector energies
                // whenever the primary is on the air.
                int best = 0;
                double best_val = -1.0;
                for (int m = 1; m <= m_count; ++m) {
                    const double scale =
                        (g * model.gain(m, phi) * spec.prior.p_p + spec.prior.sigma_w2) / spec.plan.n;
                    std::gamma_distribution<double> draw((double)spec.plan.n, scale);
                    const double e = draw(rng);
                    if (e > best_val) {
                        best_val = e;
                        best = m;
                    }
                }
                m_pu_sel = best;
                true_arc = model.sector_of(phi);
                p.delta_counts[(size_t)(best - 1) * m_count + (true_arc - 1)] += 1.0;
                p.col_counts[true_arc - 1] += 1.0;
                if (spec.sensing == SensingDrawMode::kSampleLevel) {
                    sensed_busy =
                        draw_h1_statistic(model, spec.plan, spec.prior, phi, rng) > spec.design.eta;
                } else {
                    sensed_busy = rng.uniform() < spec.design.p_d;
                }
                if (sensed_busy) p.det += 1.0;
            } else {
                p.n_h0 += 1.0;
                if (spec.sensing == SensingDrawMode::kSampleLevel) {
                    std::gamma_distribution<double> noise_draw((double)spec.plan.n_eq,
                                                               spec.prior.sigma_w2 / spec.plan.n_eq);
                    sensed_busy = noise_draw(rng) > spec.design.eta;
                } else {
                    sensed_busy = rng.uniform() < spec.design.p_fa;
                }
                if (sensed_busy) p.fa += 1.0;
            }
            if (sensed_busy) continue; // stays in the sensing phase

            p.idle += 1.0;
            double nu = 0.0;
            int m_sr = 0;
            for (int m = 0; m < m_count; ++m) {
                const double v = rng.exponential(dist.delta()[m]);
                if (v > nu) {
                    nu = v;
                    m_sr = m;
                }
            }
            p.psi_counts[m_sr] += 1.0;
            const int k = spec.policy.interval_of(nu);
            p.interval_counts[k] += 1.0;
            const double p_k = spec.policy.p[k];
            if (k == 0) p.outage += 1.0;

            // Weighted symbol-error contribution over both sensed-idle paths.
            const double sep_v =
                spec.design.alpha0 *
                    q_func(std::sqrt(spec.rho * nu * p_k / spec.prior.sigma_w2)) +
                spec.design.beta0 *
                    q_func(std::sqrt(spec.rho * nu * p_k /
                                     (spec.prior.sigma_w2 + spec.prior.sigma_p2())));
            p.sep += sep_v;
            p.sep_sq += sep_v * sep_v;
            p.sep_n += 1.0;

            p.power += p_k;
            p.power_sq += p_k * p_k;

            if (active) {
                p.idle_h1 += 1.0;
                const double g_sp = rng.exponential(spec.prior.gamma_sp);
                const double rate =
                    std::log2(1.0 + nu * p_k / (spec.prior.sigma_w2 + spec.prior.p_p * g_sp));
                p.rate += rate;
                p.rate_sq += rate * rate;
                // Interference bookkeeping conditions on the believed primary
                // beam the policy was solved for.
                if (m_pu_sel == spec.m_pu_star) {
                    const double gain = model.base_gain(model.boresight(m_sr + 1) -
                                                        model.boresight(true_arc));
                    const double value = g_sp * gain * p_k;
                    p.interf += value;
                    p.interf_sq += value * value;
                    p.interf_n += 1.0;
                }
            } else {
                // Sensed-idle, truly idle: the link carries the quantized
                // transmission rate of the interval.
                const double mu_q = (k == 0) ? 0.0 : spec.policy.mu[k - 1];
                const double rate = std::log2(1.0 + mu_q * p_k / spec.prior.sigma_w2);
                p.rate += rate;
                p.rate_sq += rate * rate;
            }
        }
    });

    TrialAggregates agg;
    agg.trials = opts.trials;
    auto gather = [&](auto member) {
        std::vector<double> v;
        v.reserve(partials.size());
        for (auto& p : partials) v.push_back(member(p));
        return reduce_sums(std::move(v));
    };
    const double n_h0 = gather([](const Partial& p) { return p.n_h0; });
    const double n_h1 = gather([](const Partial& p) { return p.n_h1; });
    const double fa = gather([](const Partial& p) { return p.fa; });
    const double det = gather([](const Partial& p) { return p.det; });
    agg.p_fa = bernoulli_estimate(fa, std::max<long>(1, (long)n_h0));
    agg.p_d = bernoulli_estimate(det, std::max<long>(1, (long)n_h1));
    const double idle = gather([](const Partial& p) { return p.idle; });
    const double outage = gather([](const Partial& p) { return p.outage; });
    agg.outage = bernoulli_estimate(outage, std::max<long>(1, (long)idle));
    const double sep_n = gather([](const Partial& p) { return p.sep_n; });
    agg.sep = mean_estimate(gather([](const Partial& p) { return p.sep; }),
                            gather([](const Partial& p) { return p.sep_sq; }),
                            std::max<long>(1, (long)sep_n));

    // D_t-weighted empirical capacity and constraint functionals, normalized
    // by the full trial count (joint-probability weighting).
    const double d_t = spec.plan.d_t;
    agg.capacity = mean_estimate(gather([](const Partial& p) { return p.rate; }),
                                 gather([](const Partial& p) { return p.rate_sq; }), opts.trials);
    agg.capacity.value *= d_t;
    agg.capacity.se *= d_t;
    agg.mean_power = mean_estimate(gather([](const Partial& p) { return p.power; }),
                                   gather([](const Partial& p) { return p.power_sq; }), opts.trials);
    agg.mean_power.value *= d_t;
    agg.mean_power.se *= d_t;

    agg.psi_freq.assign(m_count, 0.0);
    for (int m = 0; m < m_count; ++m) {
        std::vector<double> v;
        for (auto& p : partials) v.push_back(p.psi_counts[m]);
        agg.psi_freq[m] = reduce_sums(std::move(v)) / std::max(1.0, idle);
    }
    agg.delta_freq.assign((size_t)m_count * m_count, 0.0);
    agg.delta_column_n.assign(m_count, 0);
    std::vector<double> col_totals(m_count, 0.0);
    for (int c = 0; c < m_count; ++c) {
        std::vector<double> v;
        for (auto& p : partials) v.push_back(p.col_counts[c]);
        col_totals[c] = reduce_sums(std::move(v));
        agg.delta_column_n[c] = (long)col_totals[c];
    }
    for (int i = 0; i < m_count; ++i) {
        for (int c = 0; c < m_count; ++c) {
            std::vector<double> v;
            for (auto& p : partials) v.push_back(p.delta_counts[(size_t)i * m_count + c]);
            agg.delta_freq[(size_t)i * m_count + c] =
                reduce_sums(std::move(v)) / std::max(1.0, col_totals[c]);
        }
    }
    agg.interval_freq.assign(levels + 1, 0.0);
    for (int k = 0; k <= levels; ++k) {
        std::vector<double> v;
        for (auto& p : partials) v.push_back(p.interval_counts[k]);
        agg.interval_freq[k] = reduce_sums(std::move(v)) / std::max(1.0, idle);
    }

    // Average interference in constraint units: D_t * Pr{active, sensed idle}
    // * E{g_sp * gain * P_k | selection matched the policy's beam}.
    const double idle_h1 = gather([](const Partial& p) { return p.idle_h1; });
    const double interf_n = gather([](const Partial& p) { return p.interf_n; });
    Estimate cond = mean_estimate(gather([](const Partial& p) { return p.interf; }),
                                  gather([](const Partial& p) { return p.interf_sq; }),
                                  std::max<long>(1, (long)interf_n));
    const double beta0_emp = idle_h1 / (double)opts.trials;
    agg.mean_interference.value = d_t * beta0_emp * cond.value;
    agg.mean_interference.se = d_t * beta0_emp * cond.se;
    agg.mean_interference.n = (long)interf_n;
    return agg;
}

} // namespace crbeam
