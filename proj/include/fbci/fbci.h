/* fbci: two-phase forward solutions of forward-backward parabolic problems by
 * convex integration.  Plain C interface over the C++ core. */
#ifndef FBCI_FBCI_H
#define FBCI_FBCI_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FBCI_API __declspec(dllexport)
#else
#define FBCI_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fbci_status {
  FBCI_OK = 0,
  FBCI_ERR_ARGUMENT = 1,
  FBCI_ERR_CONFIG = 2,
  FBCI_ERR_IO = 3,
  FBCI_ERR_FLUX = 10,
  FBCI_ERR_PROBLEM = 11,
  FBCI_ERR_PARABOLIC = 12,
  FBCI_ERR_INCLUSION = 13,
  FBCI_ERR_OSCILLATE = 14,
  FBCI_ERR_DENSIFY = 15,
  FBCI_ERR_VERIFY = 16, /* a mandatory certification check failed */
  FBCI_ERR_STATE = 17,  /* call order: e.g. verify before any final state exists */
  FBCI_ERR_INTERNAL = 99
} fbci_status;

typedef enum fbci_field {
  FBCI_FIELD_BASE_U = 0,
  FBCI_FIELD_BASE_V = 1,
  FBCI_FIELD_FINAL_U = 2,
  FBCI_FIELD_FINAL_V = 3
} fbci_field;

typedef struct fbci_run fbci_run;

/* Message of the last failed call on this thread, "module.Code: detail". Never NULL. */
FBCI_API const char* fbci_last_error(void);
FBCI_API const char* fbci_status_name(fbci_status s);
FBCI_API const char* fbci_version(void);

/* A run owns one configuration and everything computed from it. */
FBCI_API fbci_status fbci_run_create_default(fbci_run** out);
FBCI_API fbci_status fbci_run_create_from_file(const char* path, fbci_run** out);
FBCI_API fbci_status fbci_run_create_from_json(const char* json_text, fbci_run** out);
FBCI_API void fbci_run_destroy(fbci_run* run);

/* overrides; they discard computed state */
FBCI_API fbci_status fbci_run_set_seed(fbci_run* run, uint64_t seed);
FBCI_API fbci_status fbci_run_set_steps(fbci_run* run, int steps);
FBCI_API fbci_status fbci_run_set_grid(fbci_run* run, int nx, int nt);
FBCI_API fbci_status fbci_run_set_output_dir(fbci_run* run, const char* dir);
FBCI_API fbci_status fbci_run_output_dir(const fbci_run* run, char* buf, size_t cap, size_t* needed);

/* flux and problem checks */
FBCI_API fbci_status fbci_validate(fbci_run* run);
FBCI_API fbci_status fbci_reference_points(fbci_run* run, double* s1_star, double* s2_star);
FBCI_API fbci_status fbci_window(fbci_run* run, double* s_minus_r1, double* s_minus_r2, double* s_plus_r1,
                                 double* s_plus_r2);

/* pipeline stages; each validates and runs earlier stages when needed */
FBCI_API fbci_status fbci_solve_base(fbci_run* run);
FBCI_API fbci_status fbci_densify(fbci_run* run);
/* stop reason of the last densify ("schedule complete", or a module-qualified failure) */
FBCI_API fbci_status fbci_stop_reason(const fbci_run* run, char* buf, size_t cap, size_t* needed);
FBCI_API fbci_status fbci_dist_trajectory(const fbci_run* run, double* buf, size_t cap, size_t* count);

/* certification of the in-memory final state; *all_pass is 1 when every mandatory check passes */
FBCI_API fbci_status fbci_verify(fbci_run* run, int* all_pass);
/* loads base.json, final_u.csv and final_v.csv from dir and certifies them */
FBCI_API fbci_status fbci_verify_dir(fbci_run* run, const char* dir, int* all_pass);
/* ledger line i: name, pass flag and detail of the last certification */
FBCI_API fbci_status fbci_check_count(const fbci_run* run, size_t* count);
FBCI_API fbci_status fbci_check_line(const fbci_run* run, size_t i, char* buf, size_t cap, size_t* needed, int* pass);

/* artifacts */
FBCI_API fbci_status fbci_write_base(fbci_run* run, const char* dir);
FBCI_API fbci_status fbci_load_base(fbci_run* run, const char* dir);
FBCI_API fbci_status fbci_write_outputs(fbci_run* run, const char* dir);
/* base.json in dir -> base_u.csv, base_v.csv */
FBCI_API fbci_status fbci_export_csv(fbci_run* run, const char* dir);
FBCI_API fbci_status fbci_report_json(const fbci_run* run, char* buf, size_t cap, size_t* needed);

/* node fields, t-major, (nx + 1) * (nt + 1) values */
FBCI_API fbci_status fbci_field_dims(const fbci_run* run, fbci_field which, int* nx, int* nt);
FBCI_API fbci_status fbci_copy_field(const fbci_run* run, fbci_field which, double* buf, size_t len);

#ifdef __cplusplus
}
#endif

#endif
