/* C interface to the IQC invariance-analysis library.
 *
 * All payloads are JSON strings. Returned strings are owned by the caller
 * and must be released with iqcd_string_free. Status codes:
 *   0  success
 *   1  configuration / input error
 *   2  LMI system infeasible
 *   3  numerical failure (solver, ARE, simulation)
 *   4  verification check failed (iqcd_verify only; result is still set)
 */
#ifndef IQCD_H
#define IQCD_H

#ifdef __cplusplus
extern "C" {
#endif

typedef struct iqcd_session iqcd_session;

iqcd_session* iqcd_session_create(void);
void iqcd_session_destroy(iqcd_session* session);

/* Message describing the most recent failure on this session. */
const char* iqcd_last_error(const iqcd_session* session);

/* Certificates plus per-nu ellipse boundary CSVs. */
int iqcd_analyze(iqcd_session* session, const char* config_json, char** result_json);

/* Time/frequency-domain validation of previously computed certificates. */
int iqcd_verify(iqcd_session* session, const char* config_json, const char* certificates_json,
                char** result_json);

/* Worst-case trajectory synthesis; horizon <= 0 selects the config value. */
int iqcd_simulate(iqcd_session* session, const char* config_json, double delta,
                  double direction_angle, double horizon, char** result_json);

/* Non-symmetric ARE factorization; certificates_json may be NULL, in which
 * case the analysis is run first. */
int iqcd_factorize(iqcd_session* session, const char* config_json,
                   const char* certificates_json, char** result_json);

void iqcd_string_free(char* str);

#ifdef __cplusplus
}
#endif

#endif /* IQCD_H */
