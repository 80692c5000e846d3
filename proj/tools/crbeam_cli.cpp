// Command-line front end for the crbeam shared library. Subcommands:
//   solve     solve the configured point, write solve.json
//   sweep     run the configured sweep axes, write sweep.csv + manifest.json
//   validate  run the Monte Carlo agreement suite, write validate.json
//   pattern   dump beampattern samples, write pattern.csv
//
// Exit codes: 0 success, 2 schema error, 3 solver non-convergence,
// 4 validation failure, 1 other errors.

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crbeam.h"

namespace {

using nlohmann::json;

struct GlobalOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<long> seed;
    std::optional<int> threads;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string load_config_text(const GlobalOptions& opts) {
    json cfg = json::object();
    if (!opts.config_path.empty()) cfg = json::parse(read_file(opts.config_path));
    if (opts.seed.has_value()) cfg["mc"]["seed"] = *opts.seed;
    if (opts.threads.has_value()) cfg["solver"]["threads"] = *opts.threads;
    return cfg.dump();
}

int status_to_exit(crb_status status) {
    switch (status) {
        case CRB_OK: return 0;
        case CRB_ERR_SCHEMA: return 2;
        case CRB_ERR_INVALID_ARGUMENT: return 2;
        case CRB_ERR_NO_CONVERGENCE: return 3;
        case CRB_ERR_VALIDATION_FAILED: return 4;
        default: return 1;
    }
}

struct SystemHandle {
    crb_system* sys = nullptr;
    ~SystemHandle() { crb_system_destroy(sys); }
};

int create_system(const GlobalOptions& opts, SystemHandle& handle) {
    char errbuf[1024] = {0};
    std::string text;
    try {
        text = load_config_text(opts);
    } catch (const json::parse_error& e) {
        std::cerr << "config: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    const crb_status status = crb_system_create(text.c_str(), &handle.sys, errbuf, sizeof errbuf);
    if (status != CRB_OK) {
        std::cerr << "config: " << errbuf << "\n";
        return status_to_exit(status);
    }
    return 0;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

json manifest_for(const SystemHandle& handle, long trials_or_points) {
    char hash[32] = {0};
    crb_system_config_hash(handle.sys, hash, sizeof hash);
    char* cfg_json = nullptr;
    crb_system_config_json(handle.sys, &cfg_json);
    json effective = json::parse(cfg_json ? cfg_json : "{}");
    crb_string_free(cfg_json);
    return json{{"config_hash", hash},
                {"library_version", crb_version()},
                {"seed", effective["mc"]["seed"]},
                {"points", trials_or_points},
                {"config", effective}};
}

// Sensing design curve over a duration grid: the tradeoff data behind the
// sensing-duration search.
void write_sensing_csv(const SystemHandle& handle, const json& cfg, const std::string& path) {
    const double t_f = cfg["frame"]["T_f"].get<double>();
    const double t_train = cfg["frame"]["T_train"].get<double>();
    const double t_s = cfg["frame"]["T_s"].get<double>();
    const int m = cfg["antenna"]["M"].get<int>();
    std::ostringstream csv;
    csv << "T_sen,N,P_fa,alpha0,beta0,D_t\n";
    const double lo = m * t_s, hi = (t_f - t_train) * (1.0 - 1e-9);
    const int points = 64;
    for (int i = 0; i < points; ++i) {
        const double t_sen = lo * std::pow(hi / lo, (double)i / (points - 1));
        crb_detector det;
        if (crb_detector_design(handle.sys, t_sen, &det) != CRB_OK) continue;
        csv << fmt(t_sen) << "," << det.n_per_sector << "," << fmt(det.p_fa) << ","
            << fmt(det.alpha0) << "," << fmt(det.beta0) << "," << fmt(det.d_t) << "\n";
    }
    write_text(path, csv.str());
}

void write_delta_bar_csv(const SystemHandle& handle, const json& cfg, int n_per_sector,
                         const std::string& path) {
    const int m = cfg["antenna"]["M"].get<int>();
    std::vector<double> mat((size_t)m * m, 0.0);
    if (crb_selection_matrix(handle.sys, n_per_sector, mat.data(), mat.size()) != CRB_OK) return;
    std::ostringstream csv;
    csv << "selected";
    for (int c = 1; c <= m; ++c) csv << ",true_sector_" << c;
    csv << "\n";
    for (int i = 0; i < m; ++i) {
        csv << (i + 1);
        for (int c = 0; c < m; ++c) csv << "," << fmt(mat[(size_t)i * m + c]);
        csv << "\n";
    }
    write_text(path, csv.str());
}

int cmd_solve(const GlobalOptions& opts) {
    SystemHandle handle;
    if (int rc = create_system(opts, handle); rc != 0) return rc;
    char errbuf[1024] = {0};
    char* out = nullptr;
    const crb_status status = crb_solve(handle.sys, nullptr, &out, errbuf, sizeof errbuf);
    if (out == nullptr) {
        std::cerr << "solve: " << errbuf << "\n";
        return status_to_exit(status);
    }
    const std::filesystem::path path = std::filesystem::path(opts.out_dir) / "solve.json";
    write_text(path.string(), std::string(out) + "\n");
    json j = json::parse(out);
    crb_string_free(out);

    char* cfg_text = nullptr;
    crb_system_config_json(handle.sys, &cfg_text);
    const json cfg = json::parse(cfg_text);
    crb_string_free(cfg_text);
    const std::filesystem::path dir(opts.out_dir);
    write_sensing_csv(handle, cfg, (dir / "sensing.csv").string());
    if (!cfg["antenna"]["omni"].get<bool>()) {
        crb_detector det;
        if (crb_detector_design(handle.sys, j["T_sen_opt"].get<double>(), &det) == CRB_OK)
            write_delta_bar_csv(handle, cfg, det.n_per_sector,
                                (dir / "delta_bar.csv").string());
    }
    std::cout << "C_LB=" << fmt(j["C_LB"].get<double>());
    if (j.contains("Lambda")) std::cout << " Lambda=" << fmt(j["Lambda"].get<double>());
    std::cout << " T_sen=" << fmt(j["T_sen_opt"].get<double>())
              << " converged=" << (j["converged"].get<bool>() ? "yes" : "no") << "\n"
              << "wrote " << path.string() << "\n";
    if (status == CRB_ERR_NO_CONVERGENCE) std::cerr << "solve: not converged\n";
    return status_to_exit(status);
}

int cmd_sweep(const GlobalOptions& opts) {
    SystemHandle handle;
    if (int rc = create_system(opts, handle); rc != 0) return rc;

    char* cfg_text = nullptr;
    crb_system_config_json(handle.sys, &cfg_text);
    json cfg = json::parse(cfg_text);
    crb_string_free(cfg_text);

    auto axis = [&](const char* key, json fallback) {
        json arr = cfg["sweep"][key];
        if (!arr.is_array() || arr.empty()) return json::array({fallback});
        return arr;
    };
    const json p_axis = axis("P_bar_dB", cfg["constraints"]["P_bar_dB"]);
    const json i_axis = axis("I_bar_dB", cfg["constraints"]["I_bar_dB"]);
    const json nb_axis = axis("n_b", cfg["quantizer"]["n_b"]);
    const json m_axis = axis("M", cfg["antenna"]["M"]);

    std::ostringstream csv;
    csv << "P_bar_dB,I_bar_dB,n_b,M,m_PU,m_SR,C_LB,C_LB_omni,Lambda,P_out,P_e,T_sen_opt,converged\n";
    bool any_unconverged = false;
    long points = 0;
    for (const auto& m : m_axis) {
        for (const auto& nb : nb_axis) {
            for (const auto& ib : i_axis) {
                for (const auto& pb : p_axis) {
                    json point{{"P_bar_dB", pb}, {"I_bar_dB", ib}, {"n_b", nb}, {"M", m}};
                    char errbuf[1024] = {0};
                    char* out = nullptr;
                    const crb_status status =
                        crb_solve(handle.sys, point.dump().c_str(), &out, errbuf, sizeof errbuf);
                    ++points;
                    if (out == nullptr) {
                        std::cerr << "sweep point " << point.dump() << ": " << errbuf << "\n";
                        if (status == CRB_ERR_SCHEMA || status == CRB_ERR_INVALID_ARGUMENT)
                            return status_to_exit(status);
                        any_unconverged = true;
                        csv << pb << "," << ib << "," << nb << "," << m << ",,,,,,,,,failed\n";
                        continue;
                    }
                    json r = json::parse(out);
                    crb_string_free(out);
                    if (status == CRB_ERR_NO_CONVERGENCE) any_unconverged = true;
                    const bool avg = r["point"]["average"].get<bool>();
                    csv << fmt(r["point"]["P_bar_dB"].get<double>()) << ","
                        << fmt(r["point"]["I_bar_dB"].get<double>()) << ","
                        << r["point"]["n_b"].get<int>() << "," << r["point"]["M"].get<int>() << ","
                        << (avg ? "avg" : std::to_string(r["point"]["m_PU_star"].get<int>())) << ","
                        << (avg ? "avg" : std::to_string(r["point"]["m_SR_star"].get<int>())) << ","
                        << fmt(r["C_LB"].get<double>()) << ","
                        << fmt(r.value("C_LB_omni", 0.0)) << "," << fmt(r.value("Lambda", 0.0))
                        << "," << fmt(r["P_out"].get<double>()) << ","
                        << fmt(r["P_e"].get<double>()) << "," << fmt(r["T_sen_opt"].get<double>())
                        << "," << (r["converged"].get<bool>() ? "1" : "0") << "\n";
                }
            }
        }
    }
    const std::filesystem::path dir(opts.out_dir);
    write_text((dir / "sweep.csv").string(), csv.str());
    write_text((dir / "manifest.json").string(), manifest_for(handle, points).dump(2) + "\n");
    std::cout << "wrote " << (dir / "sweep.csv").string() << " (" << points << " points)\n";
    return any_unconverged ? 3 : 0;
}

int cmd_validate(const GlobalOptions& opts) {
    SystemHandle handle;
    if (int rc = create_system(opts, handle); rc != 0) return rc;
    char errbuf[1024] = {0};
    char* out = nullptr;
    const crb_status status = crb_validate(handle.sys, nullptr, &out, errbuf, sizeof errbuf);
    if (out == nullptr) {
        std::cerr << "validate: " << errbuf << "\n";
        return status_to_exit(status);
    }
    const std::filesystem::path path = std::filesystem::path(opts.out_dir) / "validate.json";
    write_text(path.string(), std::string(out) + "\n");
    json j = json::parse(out);
    crb_string_free(out);
    for (const auto& c : j["checks"]) {
        std::cout << (c["pass"].get<bool>() ? "[PASS] " : "[FAIL] ") << c["name"].get<std::string>()
                  << " expected=" << fmt(c["expected"].get<double>())
                  << " observed=" << fmt(c["observed"].get<double>())
                  << " tol=" << fmt(c["tolerance"].get<double>()) << "\n";
    }
    std::cout << "wrote " << path.string() << "\n";
    if (status == CRB_ERR_VALIDATION_FAILED) {
        for (const auto& c : j["checks"])
            if (!c["pass"].get<bool>())
                std::cerr << "validation failed: " << c["name"].get<std::string>() << "\n";
    }
    return status_to_exit(status);
}

int cmd_pattern(const GlobalOptions& opts, int samples) {
    SystemHandle handle;
    if (int rc = create_system(opts, handle); rc != 0) return rc;
    char* cfg_text = nullptr;
    crb_system_config_json(handle.sys, &cfg_text);
    json cfg = json::parse(cfg_text);
    crb_string_free(cfg_text);
    const int m = cfg["antenna"]["M"].get<int>();

    std::ostringstream csv;
    csv << "phi_deg";
    for (int s = 1; s <= m; ++s) csv << ",p_" << s;
    csv << "\n";
    for (int i = 0; i < samples; ++i) {
        const double deg = 360.0 * i / samples - 180.0;
        csv << fmt(deg);
        for (int s = 1; s <= m; ++s) {
            double g = 0.0;
            crb_pattern_gain(handle.sys, s, deg * M_PI / 180.0, &g);
            csv << "," << fmt(g);
        }
        csv << "\n";
    }
    const std::filesystem::path path = std::filesystem::path(opts.out_dir) / "pattern.csv";
    write_text(path.string(), csv.str());
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sector-based opportunistic spectrum access: capacity optimization and validation"};
    app.require_subcommand(1);

    GlobalOptions opts;
    long seed_arg = 0;
    int threads_arg = 0;
    app.add_option("--config", opts.config_path, "configuration JSON file");
    auto* seed_opt = app.add_option("--seed", seed_arg, "override the Monte Carlo seed");
    auto* threads_opt = app.add_option("--threads", threads_arg, "worker threads (0 = hardware)");
    app.add_option("--out-dir", opts.out_dir, "output directory")->capture_default_str();

    auto* solve = app.add_subcommand("solve", "solve the configured point");
    auto* sweep = app.add_subcommand("sweep", "run the configured sweep");
    auto* validate = app.add_subcommand("validate", "run the Monte Carlo agreement suite");
    auto* pattern = app.add_subcommand("pattern", "dump beampattern samples");
    int pattern_samples = 720;
    pattern->add_option("--samples", pattern_samples, "angular samples")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    if (!seed_opt->empty()) opts.seed = seed_arg;
    if (!threads_opt->empty()) opts.threads = threads_arg;

    try {
        std::filesystem::create_directories(opts.out_dir);
        if (solve->parsed()) return cmd_solve(opts);
        if (sweep->parsed()) return cmd_sweep(opts);
        if (validate->parsed()) return cmd_validate(opts);
        if (pattern->parsed()) return cmd_pattern(opts, pattern_samples);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}
