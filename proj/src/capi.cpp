#include "crbeam.h"

#include <algorithm>
#include <cstring>
#include <new>
#include <string>
#include <thread>

#include <json.hpp>

#include "config.hpp"
#include "system.hpp"

using nlohmann::json;

struct crb_system {
    crbeam::SystemContext ctx;
};

namespace {

void fill_errbuf(char* errbuf, size_t len, const std::string& message) {
    if (errbuf == nullptr || len == 0) return;
    std::snprintf(errbuf, len, "%s", message.c_str());
}

char* dup_string(const std::string& text) {
    char* out = new (std::nothrow) char[text.size() + 1];
    if (out != nullptr) std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
}

json policy_to_json(const crbeam::QuantizedPowerPolicy& policy) {
    return json{{"n_b", policy.n_b},
                {"T_sen", policy.t_sen},
                {"mu", policy.mu},
                {"P", policy.p}};
}

json report_to_json(const crbeam::CapacityReport& report) {
    return json{{"C_LB", report.c_lb},
                {"b0", report.b0},
                {"lambda", report.lambda},
                {"vartheta", report.vartheta},
                {"power_lhs", report.power_lhs},
                {"interference_lhs", report.interference_lhs},
                {"power_slack", report.power_slack},
                {"interference_slack", report.interference_slack},
                {"rate_idle", report.rate_idle},
                {"rate_missed", report.rate_missed},
                {"iterations",
                 {{"bcd_sweeps", report.bcd_sweeps},
                  {"mu1", report.mu1_iterations},
                  {"dual", report.dual_iterations},
                  {"t_sen", report.tsen_evaluations}}},
                {"converged", report.converged},
                {"diagnostics", report.diagnostics}};
}

template <typename Fn>
crb_status guarded(char* errbuf, size_t errbuf_len, Fn&& fn) {
    try {
        return fn();
    } catch (const crbeam::SchemaError& e) {
        fill_errbuf(errbuf, errbuf_len, e.what());
        return CRB_ERR_SCHEMA;
    } catch (const std::domain_error& e) {
        fill_errbuf(errbuf, errbuf_len, e.what());
        return CRB_ERR_INVALID_ARGUMENT;
    } catch (const std::runtime_error& e) {
        fill_errbuf(errbuf, errbuf_len, e.what());
        return CRB_ERR_NUMERIC;
    } catch (const std::exception& e) {
        fill_errbuf(errbuf, errbuf_len, e.what());
        return CRB_ERR_INTERNAL;
    }
}

} // namespace

extern "C" {

const char* crb_version(void) { return "0.1.0"; }

const char* crb_status_name(crb_status status) {
    switch (status) {
        case CRB_OK: return "ok";
        case CRB_ERR_INVALID_ARGUMENT: return "invalid argument";
        case CRB_ERR_SCHEMA: return "schema error";
        case CRB_ERR_NO_CONVERGENCE: return "no convergence";
        case CRB_ERR_VALIDATION_FAILED: return "validation failed";
        case CRB_ERR_NUMERIC: return "numerical error";
        case CRB_ERR_INTERNAL: return "internal error";
    }
    return "unknown";
}

crb_status crb_system_create(const char* config_json, crb_system** out_system, char* errbuf,
                             size_t errbuf_len) {
    if (config_json == nullptr || out_system == nullptr) {
        fill_errbuf(errbuf, errbuf_len, "null argument");
        return CRB_ERR_INVALID_ARGUMENT;
    }
    *out_system = nullptr;
    return guarded(errbuf, errbuf_len, [&]() {
        crbeam::ExperimentConfig cfg = crbeam::ExperimentConfig::from_json_text(config_json);
        *out_system = new crb_system{crbeam::SystemContext(std::move(cfg))};
        return CRB_OK;
    });
}

void crb_system_destroy(crb_system* system) { delete system; }

crb_status crb_system_config_json(const crb_system* system, char** out_json) {
    if (system == nullptr || out_json == nullptr) return CRB_ERR_INVALID_ARGUMENT;
    *out_json = dup_string(system->ctx.config().canonical_json());
    return *out_json != nullptr ? CRB_OK : CRB_ERR_INTERNAL;
}

crb_status crb_system_config_hash(const crb_system* system, char* buf, size_t buf_len) {
    if (system == nullptr || buf == nullptr || buf_len == 0) return CRB_ERR_INVALID_ARGUMENT;
    std::snprintf(buf, buf_len, "%s", system->ctx.config().hash().c_str());
    return CRB_OK;
}

crb_status crb_pattern_gain(const crb_system* system, int sector, double phi_rad,
                            double* out_gain) {
    if (system == nullptr || out_gain == nullptr) return CRB_ERR_INVALID_ARGUMENT;
    return guarded(nullptr, 0, [&]() {
        const auto& v = system->ctx.variant(system->ctx.config().m);
        const crbeam::BeamPattern& pattern =
            system->ctx.config().omni ? v.omni_pattern : v.pattern;
        *out_gain = pattern.gain(sector, phi_rad);
        return CRB_OK;
    });
}

crb_status crb_sector_integrals(const crb_system* system, double* out_e_a, double* out_e_b) {
    if (system == nullptr || out_e_a == nullptr || out_e_b == nullptr)
        return CRB_ERR_INVALID_ARGUMENT;
    return guarded(nullptr, 0, [&]() {
        const auto& v = system->ctx.variant(system->ctx.config().m);
        const crbeam::SectorIntegrals& integ =
            system->ctx.config().omni ? v.omni_integrals : v.integrals;
        *out_e_a = integ.e_a;
        *out_e_b = integ.e_b;
        return CRB_OK;
    });
}

crb_status crb_cross_integral(const crb_system* system, int m, int m_prime, double* out_value) {
    if (system == nullptr || out_value == nullptr) return CRB_ERR_INVALID_ARGUMENT;
    return guarded(nullptr, 0, [&]() {
        const auto& v = system->ctx.variant(system->ctx.config().m);
        *out_value = (system->ctx.config().omni ? v.omni_integrals : v.integrals).at(m, m_prime);
        return CRB_OK;
    });
}

crb_status crb_detector_design(const crb_system* system, double t_sen, crb_detector* out) {
    if (system == nullptr || out == nullptr) return CRB_ERR_INVALID_ARGUMENT;
    return guarded(nullptr, 0, [&]() {
        const crbeam::ExperimentConfig& cfg = system->ctx.config();
        const auto& v = system->ctx.variant(cfg.m);
        const crbeam::BeamPattern& pattern = cfg.omni ? v.omni_pattern : v.pattern;
        const crbeam::SectorIntegrals& integ = cfg.omni ? v.omni_integrals : v.integrals;
        const crbeam::FramePlan plan =
            crbeam::FramePlan::make(cfg.t_f, t_sen, cfg.t_train, cfg.t_s, pattern.sectors);
        crbeam::DetectorDesign design =
            crbeam::detector_statistics(plan, system->ctx.prior(), integ);
        crbeam::threshold_for_target_pd(design, system->ctx.prior(), cfg.target_pd);
        out->t_sen = t_sen;
        out->n_per_sector = plan.n;
        out->n_total = plan.n_eq;
        out->d_t = plan.d_t;
        out->zeta = design.zeta;
        out->var_h0 = design.var_h0;
        out->var_h1 = design.var_h1;
        out->eta = design.eta;
        out->p_fa = design.p_fa;
        out->p_d = design.p_d;
        out->alpha0 = design.alpha0;
        out->beta0 = design.beta0;
        out->pihat0 = design.pihat0;
        out->pihat1 = design.pihat1;
        out->clt_warning = design.clt_warning ? 1 : 0;
        return CRB_OK;
    });
}

crb_status crb_selection_matrix(const crb_system* system, int n_per_sector, double* out,
                                size_t out_len) {
    if (system == nullptr || out == nullptr) return CRB_ERR_INVALID_ARGUMENT;
    return guarded(nullptr, 0, [&]() {
        const int m = system->ctx.config().m;
        if (out_len < (size_t)m * m) return CRB_ERR_INVALID_ARGUMENT;
        const crbeam::PuErrorMatrix mat = system->ctx.delta_bar(m, n_per_sector);
        std::copy(mat.delta_bar.begin(), mat.delta_bar.end(), out);
        return CRB_OK;
    });
}

crb_status crb_solve(const crb_system* system, const char* point_json, char** out_json,
                     char* errbuf, size_t errbuf_len) {
    if (system == nullptr || out_json == nullptr) {
        fill_errbuf(errbuf, errbuf_len, "null argument");
        return CRB_ERR_INVALID_ARGUMENT;
    }
    *out_json = nullptr;
    return guarded(errbuf, errbuf_len, [&]() {
        const crbeam::ExperimentConfig& cfg = system->ctx.config();
        crbeam::PointSpec spec;
        spec.p_bar_db = cfg.p_bar_db;
        spec.i_bar_db = cfg.i_bar_db;
        spec.n_b = cfg.n_b;
        spec.m = cfg.m;
        spec.average = cfg.orientation.average;
        spec.m_pu_star = cfg.orientation.m_pu_star;
        spec.m_sr_star = cfg.orientation.m_sr_star;
        spec.with_omni = true;
        int threads = cfg.solver.threads;

        if (point_json != nullptr && std::strlen(point_json) > 0) {
            json p;
            try {
                p = json::parse(point_json);
            } catch (const json::parse_error& e) {
                throw crbeam::SchemaError({}, std::string("point JSON: ") + e.what());
            }
            for (auto it = p.begin(); it != p.end(); ++it) {
                const std::string& key = it.key();
                if (key == "P_bar_dB") spec.p_bar_db = it.value().get<double>();
                else if (key == "I_bar_dB") spec.i_bar_db = it.value().get<double>();
                else if (key == "n_b") {
                    if (it.value().is_string() && it.value().get<std::string>() == "inf")
                        spec.n_b = crbeam::ExperimentConfig::kUnquantizedSurrogateBits;
                    else spec.n_b = it.value().get<int>();
                } else if (key == "M") spec.m = it.value().get<int>();
                else if (key == "orientation") {
                    if (it.value().is_string() && it.value().get<std::string>() == "average")
                        spec.average = true;
                    else if (it.value().is_object()) {
                        spec.average = false;
                        if (it.value().contains("m_PU_star"))
                            spec.m_pu_star = it.value()["m_PU_star"].get<int>();
                        if (it.value().contains("m_SR_star"))
                            spec.m_sr_star = it.value()["m_SR_star"].get<int>();
                    } else {
                        throw crbeam::SchemaError({"orientation"});
                    }
                } else if (key == "with_omni") spec.with_omni = it.value().get<bool>();
                else if (key == "threads") threads = it.value().get<int>();
                else throw crbeam::SchemaError({key});
            }
        }
        if (spec.m_pu_star > spec.m) spec.m_pu_star = 1;
        if (spec.m_sr_star > spec.m) spec.m_sr_star = 1;

        const crbeam::PointResult result = system->ctx.solve_point(spec, threads);
        const crbeam::SelectionDiversity dist = system->ctx.distribution_for(
            spec.m, false,
            system->ctx.variant(spec.m).pattern.boresight(spec.m_sr_star));
        json j;
        j["delta"] = dist.delta();
        j["point"] = {{"P_bar_dB", spec.p_bar_db}, {"I_bar_dB", spec.i_bar_db},
                      {"n_b", spec.n_b},           {"M", spec.m},
                      {"average", spec.average},   {"m_PU_star", spec.m_pu_star},
                      {"m_SR_star", spec.m_sr_star}};
        j["C_LB"] = result.c_lb;
        j["P_out"] = result.p_out;
        j["P_e"] = result.p_e;
        j["T_sen_opt"] = result.t_sen_opt;
        j["converged"] = result.converged;
        j["policy"] = policy_to_json(result.espar.policy);
        j["report"] = report_to_json(result.espar.report);
        if (result.omni.has_value()) {
            j["C_LB_omni"] = result.c_lb_omni;
            j["Lambda"] = result.lambda_ratio;
            j["P_out_omni"] = result.p_out_omni;
            j["P_e_omni"] = result.p_e_omni;
            j["omni_policy"] = policy_to_json(result.omni->policy);
            j["omni_report"] = report_to_json(result.omni->report);
        }
        *out_json = dup_string(j.dump(2));
        if (*out_json == nullptr) return CRB_ERR_INTERNAL;
        return result.converged ? CRB_OK : CRB_ERR_NO_CONVERGENCE;
    });
}

crb_status crb_validate(const crb_system* system, const char* options_json, char** out_json,
                        char* errbuf, size_t errbuf_len) {
    if (system == nullptr || out_json == nullptr) {
        fill_errbuf(errbuf, errbuf_len, "null argument");
        return CRB_ERR_INVALID_ARGUMENT;
    }
    *out_json = nullptr;
    return guarded(errbuf, errbuf_len, [&]() {
        const crbeam::ExperimentConfig& cfg = system->ctx.config();
        crbeam::McOptions opts;
        opts.trials = cfg.trials;
        opts.seed = cfg.seed;
        opts.threads = cfg.solver.threads > 0 ? cfg.solver.threads
                                              : (int)std::thread::hardware_concurrency();
        if (options_json != nullptr && std::strlen(options_json) > 0) {
            json o;
            try {
                o = json::parse(options_json);
            } catch (const json::parse_error& e) {
                throw crbeam::SchemaError({}, std::string("options JSON: ") + e.what());
            }
            for (auto it = o.begin(); it != o.end(); ++it) {
                if (it.key() == "trials") opts.trials = it.value().get<long>();
                else if (it.key() == "seed") opts.seed = it.value().get<uint64_t>();
                else if (it.key() == "threads") opts.threads = it.value().get<int>();
                else throw crbeam::SchemaError({it.key()});
            }
        }
        if (opts.trials < 1) throw crbeam::SchemaError({"trials"});
        const crbeam::ValidationReport report = system->ctx.validate(opts);
        json checks = json::array();
        for (const auto& c : report.checks) {
            checks.push_back({{"name", c.name},
                              {"expected", c.expected},
                              {"observed", c.observed},
                              {"standard_error", c.se},
                              {"tolerance", c.tolerance},
                              {"pass", c.pass}});
        }
        json j;
        j["trials"] = opts.trials;
        j["seed"] = opts.seed;
        j["checks"] = checks;
        j["all_pass"] = report.all_pass();
        *out_json = dup_string(j.dump(2));
        if (*out_json == nullptr) return CRB_ERR_INTERNAL;
        return report.all_pass() ? CRB_OK : CRB_ERR_VALIDATION_FAILED;
    });
}

void crb_string_free(char* text) { delete[] text; }

} // extern "C"
