/*
 * crbeam - sector-based opportunistic spectrum access: beampattern modeling,
 * multi-sector energy detection, beam-selection statistics, quantized-feedback
 * power allocation and closed-form link metrics, each validated against a
 * Monte Carlo oracle.
 *
 * C interface of the shared library. A crb_system is an immutable experiment
 * context created from a JSON configuration; all functions taking a const
 * handle are safe to call concurrently. Structured results are returned as
 * JSON documents allocated by the library; release them with crb_string_free.
 */
#ifndef CRBEAM_H
#define CRBEAM_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum crb_status {
    CRB_OK = 0,
    CRB_ERR_INVALID_ARGUMENT = 1,
    CRB_ERR_SCHEMA = 2,
    CRB_ERR_NO_CONVERGENCE = 3,
    CRB_ERR_VALIDATION_FAILED = 4,
    CRB_ERR_NUMERIC = 5,
    CRB_ERR_INTERNAL = 6
} crb_status;

typedef struct crb_system crb_system;

const char* crb_version(void);
const char* crb_status_name(crb_status status);

/* Creates an experiment context from JSON text. On failure returns a nonzero
 * status and, when errbuf is non-NULL, a diagnostic message. */
crb_status crb_system_create(const char* config_json, crb_system** out_system, char* errbuf,
                             size_t errbuf_len);
void crb_system_destroy(crb_system* system);

/* Effective configuration (defaults filled) and its hash. */
crb_status crb_system_config_json(const crb_system* system, char** out_json);
crb_status crb_system_config_hash(const crb_system* system, char* buf, size_t buf_len);

/* Beampattern gain of a sector (1-based) at an angle in radians. */
crb_status crb_pattern_gain(const crb_system* system, int sector, double phi_rad,
                            double* out_gain);

/* Mean pattern gain E_A, mean squared sector gain E_B, and one cross-pattern
 * overlap integral. */
crb_status crb_sector_integrals(const crb_system* system, double* out_e_a, double* out_e_b);
crb_status crb_cross_integral(const crb_system* system, int m, int m_prime, double* out_value);

/* Energy-detector design at a sensing duration (seconds). */
typedef struct crb_detector {
    double t_sen;
    int n_per_sector;
    long n_total;
    double d_t;
    double zeta;
    double var_h0;
    double var_h1;
    double eta;
    double p_fa;
    double p_d;
    double alpha0;
    double beta0;
    double pihat0;
    double pihat1;
    int clt_warning;
} crb_detector;
crb_status crb_detector_design(const crb_system* system, double t_sen, crb_detector* out);

/* Sector-averaged beam-selection probability matrix at n samples per sector:
 * out must hold M*M doubles, row-major; entry (i, m) is the probability of
 * picking beam i when the primary sits in sector m's arc. */
crb_status crb_selection_matrix(const crb_system* system, int n_per_sector, double* out,
                                size_t out_len);

/* Solves one sweep point. point_json may be NULL (configured point) or an
 * object overriding any of: P_bar_dB, I_bar_dB, n_b, M, orientation
 * ("average" or {m_PU_star, m_SR_star}), with_omni, threads. The result JSON
 * carries the policy, multipliers, capacity, slacks, metrics and, when the
 * omni baseline is enabled, the capacity ratio. */
crb_status crb_solve(const crb_system* system, const char* point_json, char** out_json,
                     char* errbuf, size_t errbuf_len);

/* Runs the Monte Carlo agreement suite at the configured point. options_json
 * may be NULL or override {trials, trials_sep, seed, threads}. Returns
 * CRB_ERR_VALIDATION_FAILED when any check fails (the report still lists
 * every check). */
crb_status crb_validate(const crb_system* system, const char* options_json, char** out_json,
                        char* errbuf, size_t errbuf_len);

void crb_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* CRBEAM_H */
