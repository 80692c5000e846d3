#include "config.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

namespace crbeam {

using nlohmann::json;

SchemaError::SchemaError(std::vector<std::string> keys, std::string detail) : keys_(std::move(keys)) {
    std::ostringstream msg;
    msg << "config schema error";
    if (!keys_.empty()) {
        msg << "; offending keys:";
        for (const auto& k : keys_) msg << " " << k;
    }
    if (!detail.empty()) msg << "; " << detail;
    message_ = msg.str();
}

namespace {

void reject_unknown(const json& obj, const std::string& prefix,
                    const std::set<std::string>& allowed, std::vector<std::string>& bad) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) bad.push_back(prefix + it.key());
}

double get_num(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw SchemaError({key}, "expected a number");
    return obj[key].get<double>();
}

long get_int(const json& obj, const char* key, long fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer()) throw SchemaError({key}, "expected an integer");
    return obj[key].get<long>();
}

bool get_bool(const json& obj, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_boolean()) throw SchemaError({key}, "expected a boolean");
    return obj[key].get<bool>();
}

// n_b entries are integers or the string "inf" for the unquantized baseline.
int parse_bits(const json& value, bool& unquantized) {
    if (value.is_string()) {
        if (value.get<std::string>() == "inf") {
            unquantized = true;
            return ExperimentConfig::kUnquantizedSurrogateBits;
        }
        throw SchemaError({"n_b"}, "expected an integer or \"inf\"");
    }
    if (!value.is_number_integer()) throw SchemaError({"n_b"}, "expected an integer or \"inf\"");
    unquantized = false;
    return value.get<int>();
}

} // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError({}, std::string("JSON parse failure: ") + e.what());
    }
    if (!root.is_object()) throw SchemaError({}, "top level must be an object");

    std::vector<std::string> bad;
    reject_unknown(root, "",
                   {"antenna", "channel", "prior", "frame", "detector", "quantizer", "metric",
                    "constraints", "orientation", "sweep", "mc", "solver"},
                   bad);

    ExperimentConfig cfg;
    if (root.contains("antenna")) {
        const json& a = root["antenna"];
        reject_unknown(a, "antenna.", {"A0", "A1", "phi_3dB_deg", "M", "omni"}, bad);
        cfg.a0 = get_num(a, "A0", cfg.a0);
        cfg.a1 = get_num(a, "A1", cfg.a1);
        cfg.phi_3db_deg = get_num(a, "phi_3dB_deg", cfg.phi_3db_deg);
        cfg.m = (int)get_int(a, "M", cfg.m);
        cfg.omni = get_bool(a, "omni", cfg.omni);
    }
    if (root.contains("channel")) {
        const json& c = root["channel"];
        reject_unknown(c, "channel.", {"gamma", "gamma_ss", "gamma_sp", "delta"}, bad);
        cfg.gamma = get_num(c, "gamma", cfg.gamma);
        cfg.gamma_ss = get_num(c, "gamma_ss", cfg.gamma_ss);
        cfg.gamma_sp = get_num(c, "gamma_sp", cfg.gamma_sp);
        if (c.contains("delta")) {
            if (!c["delta"].is_array()) throw SchemaError({"channel.delta"}, "expected an array");
            for (const auto& v : c["delta"]) cfg.delta.push_back(v.get<double>());
        }
    }
    if (root.contains("prior")) {
        const json& p = root["prior"];
        reject_unknown(p, "prior.", {"pi1", "P_p", "sigma_w2"}, bad);
        cfg.pi1 = get_num(p, "pi1", cfg.pi1);
        cfg.p_p = get_num(p, "P_p", cfg.p_p);
        cfg.sigma_w2 = get_num(p, "sigma_w2", cfg.sigma_w2);
    }
    if (root.contains("frame")) {
        const json& f = root["frame"];
        reject_unknown(f, "frame.", {"T_f", "T_train", "T_s"}, bad);
        cfg.t_f = get_num(f, "T_f", cfg.t_f);
        cfg.t_train = get_num(f, "T_train", cfg.t_train);
        cfg.t_s = get_num(f, "T_s", cfg.t_s);
    }
    if (root.contains("detector")) {
        const json& d = root["detector"];
        reject_unknown(d, "detector.", {"target_pd"}, bad);
        cfg.target_pd = get_num(d, "target_pd", cfg.target_pd);
    }
    if (root.contains("quantizer")) {
        const json& q = root["quantizer"];
        reject_unknown(q, "quantizer.", {"n_b"}, bad);
        if (q.contains("n_b")) cfg.n_b = parse_bits(q["n_b"], cfg.n_b_unquantized);
    }
    if (root.contains("metric")) {
        const json& mjs = root["metric"];
        reject_unknown(mjs, "metric.", {"rho"}, bad);
        cfg.rho = get_num(mjs, "rho", cfg.rho);
    }
    if (root.contains("constraints")) {
        const json& c = root["constraints"];
        reject_unknown(c, "constraints.", {"P_bar_dB", "I_bar_dB"}, bad);
        cfg.p_bar_db = get_num(c, "P_bar_dB", cfg.p_bar_db);
        cfg.i_bar_db = get_num(c, "I_bar_dB", cfg.i_bar_db);
    }
    if (root.contains("orientation")) {
        const json& o = root["orientation"];
        reject_unknown(o, "orientation.",
                       {"mode", "m_PU_star", "m_SR_star", "grid_phi_PU", "grid_phi_SR"}, bad);
        if (o.contains("mode")) {
            const std::string mode = o["mode"].is_string() ? o["mode"].get<std::string>() : "";
            if (mode == "average") cfg.orientation.average = true;
            else if (mode == "fixed") cfg.orientation.average = false;
            else bad.push_back("orientation.mode");
        }
        cfg.orientation.m_pu_star = (int)get_int(o, "m_PU_star", cfg.orientation.m_pu_star);
        cfg.orientation.m_sr_star = (int)get_int(o, "m_SR_star", cfg.orientation.m_sr_star);
        cfg.orientation.grid_phi_pu = (int)get_int(o, "grid_phi_PU", cfg.orientation.grid_phi_pu);
        cfg.orientation.grid_phi_sr = (int)get_int(o, "grid_phi_SR", cfg.orientation.grid_phi_sr);
    }
    if (root.contains("sweep")) {
        const json& s = root["sweep"];
        reject_unknown(s, "sweep.", {"P_bar_dB", "I_bar_dB", "n_b", "M"}, bad);
        if (s.contains("P_bar_dB"))
            for (const auto& v : s["P_bar_dB"]) cfg.sweep.p_bar_db.push_back(v.get<double>());
        if (s.contains("I_bar_dB"))
            for (const auto& v : s["I_bar_dB"]) cfg.sweep.i_bar_db.push_back(v.get<double>());
        if (s.contains("n_b")) {
            for (const auto& v : s["n_b"]) {
                bool unq = false;
                cfg.sweep.n_b.push_back(parse_bits(v, unq));
            }
        }
        if (s.contains("M"))
            for (const auto& v : s["M"]) cfg.sweep.m.push_back(v.get<int>());
    }
    if (root.contains("mc")) {
        const json& mc = root["mc"];
        reject_unknown(mc, "mc.", {"trials", "trials_sep", "seed"}, bad);
        cfg.trials = get_int(mc, "trials", cfg.trials);
        cfg.trials_sep = get_int(mc, "trials_sep", cfg.trials_sep);
        cfg.seed = (uint64_t)get_int(mc, "seed", (long)cfg.seed);
    }
    if (root.contains("solver")) {
        const json& s = root["solver"];
        reject_unknown(s, "solver.",
                       {"bcd_tol", "mu1_residual_tol", "constraint_rel_tol", "max_bcd_sweeps",
                        "max_mu1_iterations", "max_dual_iterations", "tsen_golden_iterations",
                        "delta_bar_snap", "threads"},
                       bad);
        cfg.solver.bcd_tol = get_num(s, "bcd_tol", cfg.solver.bcd_tol);
        cfg.solver.mu1_residual_tol = get_num(s, "mu1_residual_tol", cfg.solver.mu1_residual_tol);
        cfg.solver.constraint_rel_tol =
            get_num(s, "constraint_rel_tol", cfg.solver.constraint_rel_tol);
        cfg.solver.max_bcd_sweeps = (int)get_int(s, "max_bcd_sweeps", cfg.solver.max_bcd_sweeps);
        cfg.solver.max_mu1_iterations =
            (int)get_int(s, "max_mu1_iterations", cfg.solver.max_mu1_iterations);
        cfg.solver.max_dual_iterations =
            (int)get_int(s, "max_dual_iterations", cfg.solver.max_dual_iterations);
        cfg.solver.tsen_golden_iterations =
            (int)get_int(s, "tsen_golden_iterations", cfg.solver.tsen_golden_iterations);
        cfg.solver.delta_bar_snap = get_bool(s, "delta_bar_snap", cfg.solver.delta_bar_snap);
        cfg.solver.threads = (int)get_int(s, "threads", cfg.solver.threads);
    }

    if (!bad.empty()) throw SchemaError(bad);
    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const {
    std::vector<std::string> bad;
    if (!(a0 > 0.0)) bad.push_back("antenna.A0");
    if (a1 < 0.0) bad.push_back("antenna.A1");
    if (!(phi_3db_deg > 0.0 && phi_3db_deg < 180.0)) bad.push_back("antenna.phi_3dB_deg");
    if (m < 1 || m > 20) bad.push_back("antenna.M");
    if (!(gamma > 0.0)) bad.push_back("channel.gamma");
    if (!(gamma_ss > 0.0)) bad.push_back("channel.gamma_ss");
    if (!(gamma_sp > 0.0)) bad.push_back("channel.gamma_sp");
    if (!delta.empty() && (int)delta.size() != m) bad.push_back("channel.delta");
    for (double d : delta)
        if (!(d > 0.0)) bad.push_back("channel.delta");
    if (!(pi1 >= 0.0 && pi1 <= 1.0)) bad.push_back("prior.pi1");
    if (!(p_p > 0.0)) bad.push_back("prior.P_p");
    if (!(sigma_w2 > 0.0)) bad.push_back("prior.sigma_w2");
    if (!(t_f > 0.0)) bad.push_back("frame.T_f");
    if (!(t_train >= 0.0 && t_train < t_f)) bad.push_back("frame.T_train");
    if (!(t_s > 0.0 && t_s < t_f)) bad.push_back("frame.T_s");
    if (!(target_pd > 0.0 && target_pd < 1.0)) bad.push_back("detector.target_pd");
    if (n_b < 1 || n_b > 16) bad.push_back("quantizer.n_b");
    if (!(rho > 0.0)) bad.push_back("metric.rho");
    if (orientation.m_pu_star < 1 || orientation.m_pu_star > m) bad.push_back("orientation.m_PU_star");
    if (orientation.m_sr_star < 1 || orientation.m_sr_star > m) bad.push_back("orientation.m_SR_star");
    if (orientation.grid_phi_pu < 1) bad.push_back("orientation.grid_phi_PU");
    if (orientation.grid_phi_sr < 1) bad.push_back("orientation.grid_phi_SR");
    for (int bits : sweep.n_b)
        if (bits < 1 || bits > 16) bad.push_back("sweep.n_b");
    for (int m_axis : sweep.m)
        if (m_axis < 1 || m_axis > 20) bad.push_back("sweep.M");
    if (trials < 1) bad.push_back("mc.trials");
    if (trials_sep < 1) bad.push_back("mc.trials_sep");
    if (solver.threads < 0) bad.push_back("solver.threads");
    if (!bad.empty()) throw SchemaError(bad);
}

std::string ExperimentConfig::canonical_json() const {
    json j;
    j["antenna"] = {{"A0", a0}, {"A1", a1}, {"phi_3dB_deg", phi_3db_deg}, {"M", m}, {"omni", omni}};
    j["channel"] = {{"gamma", gamma}, {"gamma_ss", gamma_ss}, {"gamma_sp", gamma_sp},
                    {"delta", delta}};
    j["prior"] = {{"pi1", pi1}, {"P_p", p_p}, {"sigma_w2", sigma_w2}};
    j["frame"] = {{"T_f", t_f}, {"T_train", t_train}, {"T_s", t_s}};
    j["detector"] = {{"target_pd", target_pd}};
    j["quantizer"] = {{"n_b", n_b_unquantized ? json("inf") : json(n_b)}};
    j["metric"] = {{"rho", rho}};
    j["constraints"] = {{"P_bar_dB", p_bar_db}, {"I_bar_dB", i_bar_db}};
    j["orientation"] = {{"mode", orientation.average ? "average" : "fixed"},
                        {"m_PU_star", orientation.m_pu_star},
                        {"m_SR_star", orientation.m_sr_star},
                        {"grid_phi_PU", orientation.grid_phi_pu},
                        {"grid_phi_SR", orientation.grid_phi_sr}};
    j["sweep"] = {{"P_bar_dB", sweep.p_bar_db},
                  {"I_bar_dB", sweep.i_bar_db},
                  {"n_b", sweep.n_b},
                  {"M", sweep.m}};
    j["mc"] = {{"trials", trials}, {"trials_sep", trials_sep}, {"seed", seed}};
    j["solver"] = {{"bcd_tol", solver.bcd_tol},
                   {"mu1_residual_tol", solver.mu1_residual_tol},
                   {"constraint_rel_tol", solver.constraint_rel_tol},
                   {"max_bcd_sweeps", solver.max_bcd_sweeps},
                   {"max_mu1_iterations", solver.max_mu1_iterations},
                   {"max_dual_iterations", solver.max_dual_iterations},
                   {"tsen_golden_iterations", solver.tsen_golden_iterations},
                   {"delta_bar_snap", solver.delta_bar_snap},
                   {"threads", solver.threads}};
    return j.dump();
}

std::string ExperimentConfig::hash() const {
    const std::string text = canonical_json();
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
    return std::string(buf);
}

} // namespace crbeam
