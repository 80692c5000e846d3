#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace crbeam {

/// Schema violation; carries the offending key paths.
class SchemaError : public std::exception {
  public:
    explicit SchemaError(std::vector<std::string> keys, std::string detail = "");
    const char* what() const noexcept override { return message_.c_str(); }
    const std::vector<std::string>& keys() const { return keys_; }

  private:
    std::vector<std::string> keys_;
    std::string message_;
};

struct OrientationSpec {
    bool average = false;
    int m_pu_star = 1;
    int m_sr_star = 1;
    int grid_phi_pu = 64;
    int grid_phi_sr = 64;
};

struct SweepAxes {
    std::vector<double> p_bar_db;
    std::vector<double> i_bar_db;
    std::vector<int> n_b; ///< bits; the unquantized baseline maps to the surrogate
    std::vector<int> m;
    bool empty() const { return p_bar_db.empty() && i_bar_db.empty() && n_b.empty() && m.empty(); }
};

struct SolverConfig {
    double bcd_tol = 1e-6;
    double mu1_residual_tol = 1e-6;
    double constraint_rel_tol = 1e-5;
    int max_bcd_sweeps = 40;
    int max_mu1_iterations = 200;
    int max_dual_iterations = 200;
    int tsen_golden_iterations = 18;
    bool delta_bar_snap = true; ///< snap N to a coarse ladder inside the sensing-duration search
    int threads = 0;            ///< 0 = hardware concurrency
};

/// Full experiment description with prefilled defaults matching the
/// reference simulation setup.
struct ExperimentConfig {
    // antenna
    double a0 = 1.0;
    double a1 = 0.01;
    double phi_3db_deg = 20.0;
    int m = 8;
    bool omni = false;
    // channel means
    double gamma = 1.0;
    double gamma_ss = 3.0;
    double gamma_sp = 1.0;
    std::vector<double> delta; ///< explicit per-beam means; empty = derive from geometry
    // prior / powers
    double pi1 = 0.3;
    double p_p = 1.0;
    double sigma_w2 = 1.0;
    // frame
    double t_f = 0.02;
    double t_train = 0.001;
    double t_s = 1e-6;
    // detector
    double target_pd = 0.9;
    // quantizer
    int n_b = 4;                 ///< bits actually used
    bool n_b_unquantized = false;///< requested as the unquantized baseline
    // modulation constant for the symbol-error metric
    double rho = 4.0;
    // constraints, in dB (converted to linear only at this boundary)
    double p_bar_db = 12.0;
    double i_bar_db = -6.0;

    OrientationSpec orientation;
    SweepAxes sweep;

    // Monte Carlo controls
    long trials = 1000000;
    long trials_sep = 10000000;
    uint64_t seed = 12345;

    SolverConfig solver;

    static constexpr int kUnquantizedSurrogateBits = 10;

    /// Parses, validates and fills defaults; rejects unknown keys.
    static ExperimentConfig from_json_text(const std::string& text);

    /// Canonical JSON rendering of the effective configuration.
    std::string canonical_json() const;

    /// FNV-1a hash of the canonical rendering, hex string.
    std::string hash() const;

    void validate() const;
};

/// dB to linear power, exact at the boundary.
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

} // namespace crbeam
