// Acceptance suite: each numbered criterion runs standalone and prints one
// PASS/FAIL line. Invoke with a criterion number (1..9) or "all".

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "antenna.hpp"
#include "beamsel_pu.hpp"
#include "beamsel_sr.hpp"
#include "config.hpp"
#include "mc_oracle.hpp"
#include "metrics.hpp"
#include "optimizer.hpp"
#include "rng.hpp"
#include "sensing.hpp"
#include "special.hpp"
#include "system.hpp"

using namespace crbeam;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kDeg = kPi / 180.0;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "  FAILED: " << what << "\n";
        }
    }
    void note(const std::string& line) { detail << "  " << line << "\n"; }
};

double elapsed_s(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. pattern integrals
Outcome criterion1() {
    Outcome out;
    const auto t0 = Clock::now();
    struct Case {
        double a0, a1, expect;
    };
    for (const Case& c :
         {Case{1.0, 0.01, 0.127}, Case{0.97, 0.03, 0.145}, Case{2.0, 0.01, 0.245}}) {
        auto model = BeamPattern::gaussian(c.a0, c.a1, 20.0 * kDeg, 8);
        const double e_a = compute_sector_integrals(model).e_a;
        out.note("A0=" + fmt(c.a0) + " A1=" + fmt(c.a1) + ": E_A=" + fmt(e_a) + " expected " +
                 fmt(c.expect) + " +- 0.002");
        out.require(std::fabs(e_a - c.expect) <= 0.002, "mean gain off for A0=" + fmt(c.a0));
    }
    const double secs = elapsed_s(t0);
    out.note("runtime " + fmt(secs) + " s (budget 1 s)");
    out.require(secs < 1.0, "runtime exceeded 1 s");
    return out;
}

// ---------------------------------------------------------------------------
// 2. detector oracle
Outcome criterion2() {
    Outcome out;
    const auto t0 = Clock::now();
    auto model = BeamPattern::gaussian(1.0, 0.01, 20.0 * kDeg, 8);
    auto integ = compute_sector_integrals(model);
    PriorModel prior;
    for (int n : {20, 60, 100}) {
        FramePlan plan = FramePlan::make(0.02, (n + 0.5) * 8e-6, 0.001, 1e-6, 8);
        DetectorDesign design = detector_statistics(plan, prior, integ);
        threshold_for_target_pd(design, prior, 0.9);
        McOptions opts;
        opts.trials = 1000000;
        opts.threads = 2;
        opts.seed = 0xDE + n;
        const Estimate fa = mc_false_alarm(plan.n_eq, prior.sigma_w2, design.eta, opts);
        const Estimate det = mc_detection(model, plan, prior, design.eta, opts);
        out.note("N=" + std::to_string(n) + ": P_fa closed=" + fmt(design.p_fa) + " emp=" +
                 fmt(fa.value) + "; P_d closed=0.9 emp=" + fmt(det.value));
        if (n == 20 && std::fabs(fa.value - design.p_fa) > 0.01) {
            out.note("  note: at N=20 the design point sits near the statistic's median, "
                     "where the Gaussian approximation of the exact chi-square law is off by "
                     "~0.0104 regardless of the trial count; the +-0.01 band cannot close");
        }
        out.require(std::fabs(fa.value - design.p_fa) <= 0.01,
                    "false alarm mismatch at N=" + std::to_string(n));
        out.require(std::fabs(det.value - design.p_d) <= 0.01,
                    "detection mismatch at N=" + std::to_string(n));
    }
    const double secs = elapsed_s(t0);
    out.note("runtime " + fmt(secs) + " s (budget 60 s)");
    out.require(secs < 60.0, "runtime exceeded 1 min");
    return out;
}

// ---------------------------------------------------------------------------
// 3. primary beam selection matrix
Outcome criterion3() {
    Outcome out;
    auto model = BeamPattern::gaussian(1.0, 0.01, 20.0 * kDeg, 8);
    AverageMatrixOptions fast;
    fast.use_rotation_symmetry = true;
    for (double snr_db : {0.0, -5.0}) {
        PriorModel prior;
        prior.gamma = std::pow(10.0, snr_db / 10.0);
        double prev_diag = 0.0;
        for (int n : {20, 60, 100}) {
            const PuErrorMatrix mat = average_error_matrix(model, prior, n, fast);
            for (int c = 1; c <= 8; ++c)
                out.require(std::fabs(mat.column_sum(c) - 1.0) <= 1e-3,
                            "column sum at SNR=" + fmt(snr_db) + " N=" + std::to_string(n));
            for (int i = 1; i <= 8; ++i)
                for (int c = 1; c <= 8; ++c)
                    out.require(std::fabs(mat.at(i, c) - mat.at(c, i)) <= 1e-3,
                                "symmetry at SNR=" + fmt(snr_db) + " N=" + std::to_string(n));
            out.require(mat.at(1, 1) > prev_diag,
                        "diagonal not increasing in N at SNR=" + fmt(snr_db));
            out.note("SNR=" + fmt(snr_db) + " dB N=" + std::to_string(n) + ": diag=" +
                     fmt(mat.at(1, 1)));
            prev_diag = mat.at(1, 1);

            McOptions opts;
            opts.trials = 1000000;
            opts.threads = 2;
            opts.seed = 1000 + n + (snr_db < 0 ? 7 : 0);
            const PuErrorMatrix emp = mc_delta_bar(model, prior, n, opts);
            double worst_tv = 0.0;
            for (int c = 1; c <= 8; ++c) {
                double tv = 0.0;
                for (int i = 1; i <= 8; ++i) tv += std::fabs(mat.at(i, c) - emp.at(i, c));
                worst_tv = std::max(worst_tv, 0.5 * tv);
            }
            out.note("  worst column total variation vs 1e6-trial frequencies: " + fmt(worst_tv));
            out.require(worst_tv < 0.01, "total variation at SNR=" + fmt(snr_db) +
                                             " N=" + std::to_string(n));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// 4. data-receiver beam selection
Outcome criterion4() {
    Outcome out;
    auto model = BeamPattern::gaussian(1.0, 0.01, 20.0 * kDeg, 8);
    const SelectionDiversity dist = sector_means_from_geometry(model, 3.0, 10.0 * kDeg);
    McOptions opts;
    opts.trials = 1000000;
    opts.threads = 2;
    opts.seed = 44;
    const double ks = mc_strongest_beam_ks(dist, opts);
    out.note("KS distance at 1e6 trials: " + fmt(ks));
    out.require(ks < 0.002, "KS distance");

    const auto psi = dist.beam_probabilities();
    double sum = 0.0;
    for (double v : psi) sum += v;
    out.note("sum Psi = " + fmt(sum));
    out.require(std::fabs(sum - 1.0) <= 1e-8, "selection probabilities do not sum to one");

    const SelectionDiversity equal(std::vector<double>(8, 1.7));
    const auto eq = equal.beam_probabilities();
    for (double v : eq) out.require(std::fabs(v - 0.125) <= 1e-10, "equal-mean symmetry");
    return out;
}

// ---------------------------------------------------------------------------
// 5. optimizer properties on every returned policy
Outcome criterion5() {
    Outcome out;
    ExperimentConfig cfg;
    SystemContext sys(cfg);
    int solves = 0;
    for (int m : {8, 12}) {
        const auto& v = sys.variant(m);
        for (int m_pu : {1, 3}) {
            for (double phi_sr_deg : {0.0, 17.0}) {
                const SelectionDiversity dist =
                    sector_means_from_geometry(v.pattern, cfg.gamma_ss, phi_sr_deg * kDeg);
                const std::vector<double> psi = dist.beam_probabilities();
                for (double p_bar_db : {6.0, 12.0, 20.0}) {
                    for (double i_bar_db : {-6.0, 2.0}) {
                        for (int n_b : {2, 4}) {
                            const LinkStatistics st =
                                sys.stats_at(0.0012, m, false, m_pu, psi, false);
                            Constraints caps{db_to_linear(p_bar_db), db_to_linear(i_bar_db)};
                            const SolveResult r =
                                solve_at_tsen(st, dist, caps, n_b, sys.solve_options());
                            ++solves;
                            out.require(r.report.converged, "convergence");
                            out.require(r.report.power_lhs <= caps.p_bar * (1.0 + 1e-4),
                                        "power cap");
                            out.require(
                                r.report.interference_lhs <= caps.i_bar * (1.0 + 1e-4),
                                "interference cap");
                            out.require(r.report.lambda * r.report.power_slack / caps.p_bar <
                                            1e-6,
                                        "power complementary slackness");
                            out.require(r.report.vartheta * r.report.interference_slack /
                                                caps.i_bar <
                                            1e-6,
                                        "interference complementary slackness");
                            const double coef =
                                r.report.lambda * st.pihat0 + r.report.vartheta * st.b0;
                            for (int k = 1; k <= r.policy.levels(); ++k) {
                                const double mu = r.policy.mu[k - 1];
                                const double p = r.policy.p[k];
                                const double res =
                                    (st.alpha0 * mu / (st.sigma_w2 + mu * p) +
                                     st.beta0 * mu / (st.sigma_w2 + st.sigma_p2 + mu * p)) /
                                        kLn2 -
                                    coef;
                                out.require(p > 0.0 ? std::fabs(res) / coef < 1e-8
                                                    : res <= 1e-8,
                                            "per-interval stationarity");
                            }
                            const auto& trace = r.report.lagrangian_trace;
                            for (size_t i = 1; i < trace.size(); ++i)
                                out.require(trace[i] <= trace[i - 1] +
                                                            1e-7 * (1.0 + std::fabs(trace[i - 1])),
                                            "block updates must not increase the Lagrangian");
                        }
                    }
                }
            }
        }
    }
    out.note(std::to_string(solves) + " solves checked (feasibility 1e-4, slackness 1e-6, "
                                      "stationarity 1e-8, monotone sweeps)");
    return out;
}

// ---------------------------------------------------------------------------
// 6. capacity ratio reproduction
Outcome criterion6() {
    Outcome out;
    const auto t0 = Clock::now();

    // headline number at the reference constraint pair, finer grid
    {
        ExperimentConfig cfg;
        cfg.orientation.average = true;
        cfg.orientation.grid_phi_pu = 32;
        cfg.orientation.grid_phi_sr = 32;
        cfg.solver.tsen_golden_iterations = 14;
        SystemContext sys(cfg);
        PointSpec spec{12.0, -6.0, 10, 8, true, 1, 1, true};
        const PointResult pr = sys.solve_point(spec, 2);
        out.note("Lambda(12 dB, -6 dB, averaged, unquantized surrogate) = " +
                 fmt(pr.lambda_ratio) + " (expected 1.83 +- 0.15)");
        out.require(pr.converged, "headline solve convergence");
        out.require(std::fabs(pr.lambda_ratio - 1.83) <= 0.15, "headline capacity ratio");
    }

    // ratio band across the constraint grid, coarser orientation grid
    {
        ExperimentConfig cfg;
        cfg.orientation.average = true;
        cfg.orientation.grid_phi_pu = 8;
        cfg.orientation.grid_phi_sr = 8;
        cfg.solver.tsen_golden_iterations = 12;
        SystemContext sys(cfg);
        double lambda_min = 1e9, lambda_max = 0.0;
        for (double i_bar_db : {-6.0, -2.0, 2.0}) {
            for (double p_bar_db : {0.0, 4.0, 8.0, 12.0, 16.0, 20.0, 24.0, 28.0}) {
                PointSpec spec{p_bar_db, i_bar_db, 10, 8, true, 1, 1, true};
                const PointResult pr = sys.solve_point(spec, 2);
                out.require(pr.converged, "grid solve convergence at P=" + fmt(p_bar_db) +
                                              " I=" + fmt(i_bar_db));
                lambda_min = std::min(lambda_min, pr.lambda_ratio);
                lambda_max = std::max(lambda_max, pr.lambda_ratio);
            }
        }
        out.note("ratio range over the grid: [" + fmt(lambda_min) + ", " + fmt(lambda_max) +
                 "] (band [1.3, 3.0])");
        out.require(lambda_min >= 1.3 && lambda_max <= 3.0, "capacity ratio band");
    }
    const double secs = elapsed_s(t0);
    out.note("runtime " + fmt(secs) + " s (budget 1800 s)");
    out.require(secs < 1800.0, "runtime exceeded 30 min");
    return out;
}

// ---------------------------------------------------------------------------
// 7. quantization convergence
Outcome criterion7() {
    Outcome out;
    ExperimentConfig cfg;
    SystemContext sys(cfg);
    for (double p_bar_db : {6.0, 12.0, 18.0}) {
        double prev = -1.0;
        double c4 = 0.0;
        for (int n_b : {2, 3, 4}) {
            PointSpec spec{p_bar_db, -6.0, n_b, 8, false, 1, 1, false};
            const PointResult pr = sys.solve_point(spec, 2);
            out.require(pr.converged, "solve convergence");
            out.require(pr.c_lb >= prev - 1e-3,
                        "capacity decreased in n_b at P=" + fmt(p_bar_db));
            prev = pr.c_lb;
            if (n_b == 4) c4 = pr.c_lb;
        }
        PointSpec spec10{p_bar_db, -6.0, 10, 8, false, 1, 1, false};
        const PointResult pr10 = sys.solve_point(spec10, 2);
        out.note("P=" + fmt(p_bar_db) + " dB: C(n_b=4)=" + fmt(c4) + " vs baseline " +
                 fmt(pr10.c_lb) + " (gap " + fmt((pr10.c_lb - c4) / pr10.c_lb * 100.0) + "%)");
        if (c4 < pr10.c_lb * 0.97) {
            out.note("  note: the optimal 16-level policy itself carries a 3.8-4.1% "
                     "quantization gap here (confirmed against an independent direct "
                     "optimizer), so the 3% band cannot close");
        }
        out.require(c4 >= pr10.c_lb * 0.97, "four bits not within 3% of the baseline");
    }
    return out;
}

// ---------------------------------------------------------------------------
// 8. metrics oracle and error floors
Outcome criterion8() {
    Outcome out;
    ExperimentConfig cfg;
    SystemContext sys(cfg);
    const auto& v = sys.variant(8);
    const SelectionDiversity dist = sector_means_from_geometry(v.pattern, cfg.gamma_ss, 0.0);

    PointSpec spec{12.0, -6.0, 4, 8, false, 1, 1, false};
    const PointResult solved = sys.solve_point(spec, 2);
    out.require(solved.converged, "reference solve convergence");
    const QuantizedPowerPolicy& policy = solved.espar.policy;
    const LinkStatistics st = sys.stats_at(policy.t_sen, 8, false, 1,
                                           dist.beam_probabilities(), false);

    McOptions opts;
    opts.trials = 1000000;
    opts.threads = 2;
    opts.seed = 88;
    const double p_out = outage_probability(policy, dist);
    const Estimate emp_out = mc_outage(dist, policy.mu[0], opts);
    out.note("P_out closed=" + fmt(p_out) + " emp=" + fmt(emp_out.value));
    out.require(std::fabs(p_out - emp_out.value) <= 0.003, "outage agreement");

    McOptions sep_opts = opts;
    sep_opts.trials = 10000000;
    const double p_e = symbol_error_probability(policy, dist, st.alpha0, st.beta0, cfg.rho,
                                                st.sigma_w2, st.sigma_p2);
    const Estimate emp_sep = mc_sep(policy, dist, st.alpha0, st.beta0, cfg.rho, st.sigma_w2,
                                    st.sigma_p2, sep_opts);
    out.note("P_e closed=" + fmt(p_e) + " emp=" + fmt(emp_sep.value) + " (diff " +
             fmt(std::fabs(p_e - emp_sep.value)) + ")");
    out.require(std::fabs(p_e - emp_sep.value) <= 5e-4, "symbol error agreement");

    // error floors along the power sweep once interference binds
    std::vector<double> p_outs, p_es, varthetas;
    for (double p_bar_db : {0.0, 4.0, 8.0, 12.0, 16.0, 20.0, 24.0, 28.0}) {
        PointSpec s{p_bar_db, -6.0, 4, 8, false, 1, 1, false};
        const PointResult pr = sys.solve_point(s, 2);
        p_outs.push_back(pr.p_out);
        p_es.push_back(pr.p_e);
        varthetas.push_back(pr.espar.report.vartheta);
    }
    int bind_at = -1;
    for (size_t i = 0; i < varthetas.size(); ++i)
        if (varthetas[i] > 0.0 && bind_at < 0) bind_at = (int)i;
    out.require(bind_at >= 0, "interference constraint never became active on the sweep");
    out.require(p_outs.front() > p_outs.back(), "outage should fall along the sweep");
    if (bind_at >= 0) {
        for (size_t i = std::max(bind_at + 1, 1); i < p_outs.size(); ++i) {
            out.require(std::fabs(p_outs[i] - p_outs[i - 1]) <= 2e-3 + 0.02 * p_outs[i - 1],
                        "outage floor after the interference cap binds");
            out.require(std::fabs(p_es[i] - p_es[i - 1]) <= 2e-4 + 0.02 * p_es[i - 1],
                        "symbol-error floor after the interference cap binds");
        }
        out.note("interference cap binds from sweep index " + std::to_string(bind_at) +
                 "; floors P_out=" + fmt(p_outs.back()) + " P_e=" + fmt(p_es.back()));
    }
    return out;
}

// ---------------------------------------------------------------------------
// 9. byte-level determinism through the command line
Outcome criterion9() {
    Outcome out;
#ifndef CRBEAM_CLI_PATH
    out.require(false, "CLI path not configured");
    return out;
#else
    const std::string cli = CRBEAM_CLI_PATH;
    const std::string dir = "acceptance9_tmp";
    std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str());
    {
        std::ofstream cfg(dir + "/cfg.json");
        cfg << R"({"quantizer": {"n_b": 2},
                   "sweep": {"P_bar_dB": [6.0, 12.0], "n_b": [2, 3]},
                   "mc": {"trials": 40000, "trials_sep": 40000, "seed": 31415},
                   "solver": {"threads": 2}})";
    }
    auto run = [&](const std::string& sub, const std::string& outdir,
                   const std::string& extra) {
        const std::string cmd = cli + " --config " + dir + "/cfg.json --out-dir " + dir + "/" +
                                outdir + " " + extra + " " + sub + " > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    auto slurp = [&](const std::string& rel) {
        std::ifstream in(dir + "/" + rel, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    run("sweep", "a", "");
    run("sweep", "b", "");
    run("sweep", "c", "--threads 1");
    const std::string sweep_a = slurp("a/sweep.csv");
    out.require(!sweep_a.empty(), "sweep produced no output");
    out.require(sweep_a == slurp("b/sweep.csv"), "sweep CSV differs across identical runs");
    out.require(sweep_a == slurp("c/sweep.csv"), "sweep CSV differs across thread counts");
    out.require(slurp("a/manifest.json") == slurp("b/manifest.json"),
                "manifest differs across identical runs");

    run("solve", "a", "");
    run("solve", "b", "");
    out.require(slurp("a/solve.json") == slurp("b/solve.json"),
                "solve JSON differs across identical runs");

    run("validate", "a", "");
    run("validate", "b", "");
    out.require(!slurp("a/validate.json").empty(), "validate produced no report");
    out.require(slurp("a/validate.json") == slurp("b/validate.json"),
                "validation reports differ across identical runs");

    // no sweep axes: a single-point sweep with one row
    {
        {
            std::ofstream cfg(dir + "/cfg3.json");
            cfg << R"({"quantizer": {"n_b": 2}, "mc": {"seed": 7},
                       "solver": {"threads": 2}})";
        }
        const std::string cmd = cli + " --config " + dir + "/cfg3.json --out-dir " + dir +
                                "/e sweep > /dev/null 2>&1";
        std::system(cmd.c_str());
        const std::string csv = slurp("e/sweep.csv");
        const long rows = std::count(csv.begin(), csv.end(), '\n');
        out.require(rows == 2, "empty sweep axes must yield exactly one data row");
    }

    // manifest hash must move when the config moves
    {
        {
            std::ofstream cfg(dir + "/cfg2.json");
            cfg << R"({"quantizer": {"n_b": 2},
                       "sweep": {"P_bar_dB": [6.0, 12.0], "n_b": [2, 3]},
                       "mc": {"trials": 40000, "trials_sep": 40000, "seed": 31416},
                       "solver": {"threads": 2}})";
        }
        const std::string cmd = cli + " --config " + dir + "/cfg2.json --out-dir " + dir +
                                "/d sweep > /dev/null 2>&1";
        std::system(cmd.c_str());
        const std::string m_a = slurp("a/manifest.json");
        const std::string m_d = slurp("d/manifest.json");
        out.require(!m_a.empty() && !m_d.empty(), "manifest missing");
        if (!m_a.empty() && !m_d.empty()) {
            const auto a = nlohmann::json::parse(m_a);
            const auto d = nlohmann::json::parse(m_d);
            out.require(a["config_hash"] != d["config_hash"],
                        "different configs share a manifest hash");
        }
    }
    std::system(("rm -rf " + dir).c_str());
    out.note("sweep/solve outputs byte-identical across runs and thread counts");
    return out;
#endif
}

struct Criterion {
    int id;
    const char* summary;
    std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> list = {
        {1, "pattern integrals reproduce the reference mean gains", criterion1},
        {2, "energy-detector design matches 1e6-trial simulation", criterion2},
        {3, "primary-beam selection matrix: trends, structure, simulation", criterion3},
        {4, "data-beam selection distribution and probabilities", criterion4},
        {5, "optimizer feasibility, slackness, stationarity, monotone sweeps", criterion5},
        {6, "capacity ratio over the omni baseline reproduces the reference", criterion6},
        {7, "capacity is monotone in feedback bits and near the baseline at 4 bits",
         criterion7},
        {8, "outage/symbol-error closed forms match simulation; error floors appear",
         criterion8},
        {9, "repeated runs are byte-identical through the CLI", criterion9},
    };
    return list;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<int> wanted;
    if (argc < 2 || std::string(argv[1]) == "all") {
        for (const auto& c : criteria()) wanted.push_back(c.id);
    } else {
        wanted.push_back(std::atoi(argv[1]));
    }
    int failures = 0;
    for (const auto& c : criteria()) {
        if (std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
        const auto t0 = Clock::now();
        Outcome out = c.run();
        const double secs = elapsed_s(t0);
        std::printf("[%s] criterion %d: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", c.id,
                    c.summary, secs);
        const std::string detail = out.detail.str();
        if (!detail.empty()) std::fputs(detail.c_str(), stdout);
        if (!out.pass) ++failures;
    }
    return failures;
}
