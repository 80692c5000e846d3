#include "system.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "quadrature.hpp"
#include "special.hpp"

namespace crbeam {

int snap_sample_count(int n) {
    if (n <= 4) return std::max(1, n);
    const double step = std::log(2.0) / 4.0;
    const double idx = std::round(std::log((double)n) / step);
    return std::max(1, (int)std::round(std::exp(idx * step)));
}

SystemContext::SystemContext(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    variant(cfg_.m); // build the default variant eagerly so errors surface here
}

PriorModel SystemContext::prior() const {
    PriorModel p;
    p.pi1 = cfg_.pi1;
    p.p_p = cfg_.p_p;
    p.gamma = cfg_.gamma;
    p.gamma_sp = cfg_.gamma_sp;
    p.sigma_w2 = cfg_.sigma_w2;
    return p;
}

const SystemContext::Variant& SystemContext::variant(int m) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = variants_.find(m);
    if (it == variants_.end()) {
        auto v = std::make_unique<Variant>();
        v->pattern = BeamPattern::gaussian(cfg_.a0, cfg_.a1, cfg_.phi_3db_deg * kPi / 180.0, m);
        v->integrals = compute_sector_integrals(v->pattern);
        v->omni_pattern = make_omni_equivalent(v->pattern, v->integrals);
        v->omni_integrals = compute_sector_integrals(v->omni_pattern);
        it = variants_.emplace(m, std::move(v)).first;
    }
    return *it->second;
}

std::vector<double> SystemContext::delta_bar_row1(int m, int n) const {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = delta_rows_.find({m, n});
        if (it != delta_rows_.end()) return it->second;
    }
    const Variant& v = variant(m);
    DeltaOptions delta_opts;
    delta_opts.omega.panels = 14;
    delta_opts.omega.order = 8;
    const GammaCdfTable table(n);
    delta_opts.omega.table = &table;
    const int arc_nodes = 10;
    const double arc = kTwoPi / m;
    const QuadRule& rule = gauss_legendre(arc_nodes);
    std::vector<double> row(m, 0.0);
    for (int col = 1; col <= m; ++col) {
        const double center = v.pattern.boresight(col);
        double acc = 0.0;
        for (size_t k = 0; k < rule.nodes.size(); ++k) {
            const double phi = center + 0.5 * arc * rule.nodes[k];
            acc += rule.weights[k] * delta_profile(v.pattern, prior(), n, 1, phi, delta_opts);
        }
        row[col - 1] = 0.5 * acc;
    }
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = delta_rows_.emplace(std::make_pair(m, n), std::move(row));
    (void)inserted;
    return it->second;
}

PuErrorMatrix SystemContext::delta_bar(int m, int n) const {
    PuErrorMatrix mat;
    mat.order = m;
    mat.delta_bar.assign((size_t)m * m, 0.0);
    if (m == 1) {
        mat.delta_bar[0] = 1.0;
        return mat;
    }
    const std::vector<double> row = delta_bar_row1(m, n);
    for (int shift = 0; shift < m; ++shift)
        for (int col = 0; col < m; ++col)
            mat.delta_bar[(size_t)shift * m + (col + shift) % m] = row[col];
    return mat;
}

LinkStatistics SystemContext::stats_at(double t_sen, int m, bool omni, int m_pu_star,
                                       const std::vector<double>& psi, bool snap_n) const {
    const Variant& v = variant(m);
    const BeamPattern& pattern = omni ? v.omni_pattern : v.pattern;
    const SectorIntegrals& integrals = omni ? v.omni_integrals : v.integrals;
    const PriorModel pr = prior();
    const FramePlan plan = FramePlan::make(cfg_.t_f, t_sen, cfg_.t_train, cfg_.t_s, pattern.sectors);
    DetectorDesign design = detector_statistics(plan, pr, integrals);
    threshold_for_target_pd(design, pr, cfg_.target_pd);

    LinkStatistics stats;
    stats.alpha0 = design.alpha0;
    stats.beta0 = design.beta0;
    stats.pihat0 = design.pihat0;
    stats.d_t = plan.d_t;
    stats.sigma_w2 = pr.sigma_w2;
    stats.sigma_p2 = pr.sigma_p2();

    if (omni) {
        stats.b0 = design.beta0 * pr.gamma_sp * integrals.e_a;
    } else {
        const int n_used = snap_n ? snap_sample_count(plan.n) : plan.n;
        const PuErrorMatrix mat = delta_bar(pattern.sectors, n_used);
        stats.b0 = interference_coefficient(psi, mat, m_pu_star, pattern, design.beta0,
                                            pr.gamma_sp);
    }
    return stats;
}

SolveOptions SystemContext::solve_options() const {
    SolveOptions opts;
    opts.bcd_tol = cfg_.solver.bcd_tol;
    opts.mu1_residual_tol = cfg_.solver.mu1_residual_tol;
    opts.constraint_rel_tol = cfg_.solver.constraint_rel_tol;
    opts.max_bcd_sweeps = cfg_.solver.max_bcd_sweeps;
    opts.max_mu1_iterations = cfg_.solver.max_mu1_iterations;
    opts.max_dual_iterations = cfg_.solver.max_dual_iterations;
    opts.tsen_golden_iterations = cfg_.solver.tsen_golden_iterations;
    return opts;
}

SelectionDiversity SystemContext::distribution_for(int m, bool omni, double phi_sr) const {
    const Variant& v = variant(m);
    const BeamPattern& pattern = omni ? v.omni_pattern : v.pattern;
    if (!cfg_.delta.empty() && !omni && (int)cfg_.delta.size() == m)
        return SelectionDiversity(cfg_.delta);
    return sector_means_from_geometry(pattern, cfg_.gamma_ss, omni ? 0.0 : phi_sr);
}

SolveResult SystemContext::solve_orientation(const PointSpec& spec, bool omni, int m_pu_star,
                                             double phi_sr) const {
    const Variant& v = variant(spec.m);
    const BeamPattern& pattern = omni ? v.omni_pattern : v.pattern;
    const SelectionDiversity dist = distribution_for(spec.m, omni, phi_sr);
    const std::vector<double> psi = dist.beam_probabilities();

    Constraints caps{db_to_linear(spec.p_bar_db), db_to_linear(spec.i_bar_db)};
    const SolveOptions opts = solve_options();

    const bool snap = cfg_.solver.delta_bar_snap;
    auto provider = [&](double t_sen) {
        return stats_at(t_sen, spec.m, omni, m_pu_star, psi, snap);
    };
    const double t_lo = pattern.sectors * cfg_.t_s;
    const double t_hi = (cfg_.t_f - cfg_.t_train) * (1.0 - 1e-9);
    SolveResult result = solve_p2(provider, t_lo, t_hi, dist, caps, spec.n_b, opts);
    if (snap && !omni) {
        // Final polish with the exact sample count at the chosen duration.
        const LinkStatistics exact = stats_at(result.policy.t_sen, spec.m, omni, m_pu_star, psi,
                                              /*snap_n=*/false);
        const int evals = result.report.tsen_evaluations;
        SolveResult polished = solve_at_tsen(exact, dist, caps, spec.n_b, opts);
        polished.policy.t_sen = result.policy.t_sen;
        polished.report.tsen_evaluations = evals;
        return polished;
    }
    return result;
}

namespace {

struct OrientationJob {
    double phi_sr;
    int m_pu_star;
    double weight;
};

} // namespace

PointResult SystemContext::solve_point(const PointSpec& spec, int threads) const {
    PointResult out;
    const Variant& v = variant(spec.m);
    const PriorModel pr = prior();
    const int m = spec.m;

    std::vector<OrientationJob> jobs;
    if (!spec.average) {
        OrientationJob job;
        job.phi_sr = v.pattern.boresight(spec.m_sr_star);
        job.m_pu_star = spec.m_pu_star;
        job.weight = 1.0;
        jobs.push_back(job);
    } else {
        // Uniform grids over both angles. The primary angle only enters
        // through its sector, and shifting the data angle by one sector arc
        // permutes the believed primary beam, so grid cells fold onto
        // (phi_sr mod arc, shifted beam) classes whenever M divides the grid.
        const int grid_pu = cfg_.orientation.grid_phi_pu;
        const int grid_sr = cfg_.orientation.grid_phi_sr;
        std::vector<double> pu_weight(m, 0.0);
        for (int gp = 0; gp < grid_pu; ++gp) {
            const double phi_pu = kTwoPi * gp / grid_pu;
            pu_weight[v.pattern.sector_of(phi_pu) - 1] += 1.0 / grid_pu;
        }
        const bool foldable = (grid_sr % m) == 0;
        std::map<std::pair<int, int>, double> folded; // (sr grid residue, beam) -> weight
        for (int gs = 0; gs < grid_sr; ++gs) {
            for (int beam = 1; beam <= m; ++beam) {
                const double w = pu_weight[beam - 1] / grid_sr;
                if (w == 0.0) continue;
                if (foldable) {
                    const int q = grid_sr / m;
                    const int r = gs % q;
                    const int s = gs / q;
                    const int shifted = ((beam - 1 - s) % m + m) % m + 1;
                    folded[{r, shifted}] += w;
                } else {
                    folded[{gs, beam}] += w;
                }
            }
        }
        for (const auto& [key, w] : folded) {
            OrientationJob job;
            job.phi_sr = kTwoPi * key.first / grid_sr;
            job.m_pu_star = key.second;
            job.weight = w;
            jobs.push_back(job);
        }
    }

    struct JobResult {
        SolveResult solve;
        double p_out = 0.0;
        double p_e = 0.0;
    };
    std::vector<JobResult> results(jobs.size());
    int workers = threads > 0 ? threads : (int)std::thread::hardware_concurrency();
    workers = std::max(1, std::min<int>(workers, (int)jobs.size()));

    auto run_job = [&](size_t idx) {
        const OrientationJob& job = jobs[idx];
        JobResult& r = results[idx];
        r.solve = solve_orientation(spec, /*omni=*/false, job.m_pu_star, job.phi_sr);
        const SelectionDiversity dist = distribution_for(spec.m, false, job.phi_sr);
        const LinkStatistics st = stats_at(r.solve.policy.t_sen, spec.m, false, job.m_pu_star,
                                           dist.beam_probabilities(), false);
        r.p_out = outage_probability(r.solve.policy, dist);
        r.p_e = symbol_error_probability(r.solve.policy, dist, st.alpha0, st.beta0, cfg_.rho,
                                         pr.sigma_w2, pr.sigma_p2());
    };
    if (workers == 1) {
        for (size_t i = 0; i < jobs.size(); ++i) run_job(i);
    } else {
        std::atomic<size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                const size_t i = next.fetch_add(1);
                if (i >= jobs.size()) return;
                run_job(i);
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    double c_lb = 0.0, p_out = 0.0, p_e = 0.0, t_sen = 0.0;
    bool converged = true;
    for (size_t i = 0; i < jobs.size(); ++i) {
        c_lb += jobs[i].weight * results[i].solve.report.c_lb;
        p_out += jobs[i].weight * results[i].p_out;
        p_e += jobs[i].weight * results[i].p_e;
        t_sen += jobs[i].weight * results[i].solve.policy.t_sen;
        converged = converged && results[i].solve.report.converged;
    }
    out.c_lb = c_lb;
    out.p_out = p_out;
    out.p_e = p_e;
    out.t_sen_opt = t_sen;
    out.converged = converged;
    out.espar = results.front().solve;

    if (spec.with_omni) {
        SolveResult omni = solve_orientation(spec, /*omni=*/true, 1, 0.0);
        const SelectionDiversity omni_dist = distribution_for(spec.m, true, 0.0);
        const LinkStatistics st =
            stats_at(omni.policy.t_sen, spec.m, true, 1, {1.0}, false);
        out.c_lb_omni = omni.report.c_lb;
        out.p_out_omni = outage_probability(omni.policy, omni_dist);
        out.p_e_omni = symbol_error_probability(omni.policy, omni_dist, st.alpha0, st.beta0,
                                                cfg_.rho, pr.sigma_w2, pr.sigma_p2());
        out.lambda_ratio = (out.c_lb_omni > 0.0) ? out.c_lb / out.c_lb_omni : 0.0;
        out.converged = out.converged && omni.report.converged;
        out.omni = std::move(omni);
    }
    return out;
}

ValidationReport SystemContext::validate(const McOptions& opts_in) const {
    ValidationReport report;
    const Variant& v = variant(cfg_.m);
    const PriorModel pr = prior();
    McOptions opts = opts_in;

    PointSpec spec;
    spec.p_bar_db = cfg_.p_bar_db;
    spec.i_bar_db = cfg_.i_bar_db;
    spec.n_b = cfg_.n_b;
    spec.m = cfg_.m;
    spec.average = false;
    spec.m_pu_star = cfg_.orientation.m_pu_star;
    spec.m_sr_star = cfg_.orientation.m_sr_star;
    spec.with_omni = false;

    const SolveResult solved = solve_orientation(spec, false, spec.m_pu_star,
                                                 v.pattern.boresight(spec.m_sr_star));
    const QuantizedPowerPolicy& policy = solved.policy;
    const SelectionDiversity dist =
        distribution_for(spec.m, false, v.pattern.boresight(spec.m_sr_star));

    const FramePlan plan =
        FramePlan::make(cfg_.t_f, policy.t_sen, cfg_.t_train, cfg_.t_s, cfg_.m);
    DetectorDesign design = detector_statistics(plan, pr, v.integrals);
    threshold_for_target_pd(design, pr, cfg_.target_pd);

    auto add_check = [&](const std::string& name, double expected, double observed,
                         double tolerance, double se = 0.0) {
        ValidationCheck c{name, expected, observed, se, tolerance,
                          std::fabs(expected - observed) <= tolerance};
        report.checks.push_back(c);
    };

    // Detector: false alarm against the exact noise-only law, detection
    // against sample-level simulation of the active hypothesis.
    {
        const Estimate fa = mc_false_alarm(plan.n_eq, pr.sigma_w2, design.eta, opts);
        add_check("detector_p_fa", design.p_fa, fa.value, 0.01, fa.se);
        const Estimate det = mc_detection(v.pattern, plan, pr, design.eta, opts);
        add_check("detector_p_d", design.p_d, det.value, 0.01, det.se);
    }
    // Statistic variance under the active hypothesis.
    {
        McOptions var_opts = opts;
        var_opts.trials = std::min<long>(opts.trials, 200000);
        const MomentEstimate mom = mc_h1_statistic_moments(v.pattern, plan, pr, var_opts);
        add_check("statistic_var_h1", design.var_h1, mom.variance, 3.0 * mom.variance_se,
                  mom.variance_se);
    }
    // Selection-error matrix, total variation per column.
    {
        const PuErrorMatrix closed = average_error_matrix(v.pattern, pr, plan.n);
        const PuErrorMatrix emp = mc_delta_bar(v.pattern, pr, plan.n, opts);
        double worst_tv = 0.0;
        for (int col = 1; col <= cfg_.m; ++col) {
            double tv = 0.0;
            for (int i = 1; i <= cfg_.m; ++i) tv += std::fabs(closed.at(i, col) - emp.at(i, col));
            worst_tv = std::max(worst_tv, 0.5 * tv);
        }
        add_check("delta_bar_total_variation", 0.0, worst_tv, 0.01);
    }
    // Strongest-beam distribution and selection probabilities.
    {
        add_check("strongest_beam_ks", 0.0, mc_strongest_beam_ks(dist, opts), 0.002);
        const std::vector<double> psi = dist.beam_probabilities();
        const std::vector<double> freq = mc_psi_freq(dist, opts);
        double worst = 0.0, worst_tol = 1e-6, worst_se = 0.0, worst_excess = -1e9;
        for (int i = 0; i < cfg_.m; ++i) {
            const double se = std::sqrt(std::max(1e-12, psi[i] * (1.0 - psi[i]) / opts.trials));
            const double diff = std::fabs(psi[i] - freq[i]);
            if (diff - 3.0 * se > worst_excess) {
                worst_excess = diff - 3.0 * se;
                worst = diff;
                worst_tol = 3.0 * se;
                worst_se = se;
            }
        }
        add_check("psi_frequencies", 0.0, worst, std::max(worst_tol, 1e-6), worst_se);
    }
    // Interference coefficient against conditioned selection trials.
    {
        const PuErrorMatrix mat = delta_bar(cfg_.m, plan.n);
        const std::vector<double> psi = dist.beam_probabilities();
        const double b0 =
            interference_coefficient(psi, mat, spec.m_pu_star, v.pattern, 1.0, pr.gamma_sp);
        const Estimate gain =
            mc_interference_gain(v.pattern, pr, plan.n, dist, spec.m_pu_star, opts);
        add_check("interference_gain", b0, gain.value,
                  std::max(0.02 * std::fabs(b0), 3.0 * gain.se), gain.se);
    }
    // Outage and symbol error probabilities of the optimized policy.
    {
        const double p_out = outage_probability(policy, dist);
        const Estimate emp = mc_outage(dist, policy.mu[0], opts);
        add_check("outage_probability", p_out, emp.value, 0.003, emp.se);

        McOptions sep_opts = opts;
        sep_opts.trials = cfg_.trials_sep;
        const double p_e = symbol_error_probability(policy, dist, design.alpha0, design.beta0,
                                                    cfg_.rho, pr.sigma_w2, pr.sigma_p2());
        const Estimate emp_sep = mc_sep(policy, dist, design.alpha0, design.beta0, cfg_.rho,
                                        pr.sigma_w2, pr.sigma_p2(), sep_opts);
        add_check("symbol_error_probability", p_e, emp_sep.value, 5e-4, emp_sep.se);
    }
    // Protocol-level capacity, power and interference agreement.
    {
        ProtocolSpec pspec;
        pspec.model = &v.pattern;
        pspec.prior = pr;
        pspec.plan = plan;
        pspec.design = design;
        pspec.policy = policy;
        pspec.dist = &dist;
        pspec.m_pu_star = spec.m_pu_star;
        pspec.rho = cfg_.rho;
        const TrialAggregates agg = run_trials(pspec, opts);
        const double c_lb = solved.report.c_lb;
        // The capacity estimator uses the true instantaneous rate on the
        // missed-detection path, so it sits at or above the closed-form
        // bound.
        add_check("capacity_lower_bound_holds", 1.0,
                  (agg.capacity.value + 3.0 * agg.capacity.se >= c_lb) ? 1.0 : 0.0, 0.5);
        add_check("mean_power_vs_constraint", solved.report.power_lhs, agg.mean_power.value,
                  std::max(3.0 * agg.mean_power.se, 0.02 * solved.report.power_lhs),
                  agg.mean_power.se);
        add_check("mean_interference_vs_constraint", solved.report.interference_lhs,
                  agg.mean_interference.value,
                  std::max(3.0 * agg.mean_interference.se,
                           0.05 * solved.report.interference_lhs + 1e-12),
                  agg.mean_interference.se);
    }
    return report;
}

} // namespace crbeam
