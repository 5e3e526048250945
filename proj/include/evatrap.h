#ifndef EVATRAP_H
#define EVATRAP_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(EVATRAP_BUILDING_LIBRARY) && defined(__GNUC__)
#define EVATRAP_API __attribute__((visibility("default")))
#else
#define EVATRAP_API
#endif

/* Status codes double as CLI exit codes. */
typedef enum evatrap_status {
  EVATRAP_OK = 0,
  EVATRAP_ERR_INTERNAL = 1,
  EVATRAP_ERR_CONFIG = 2,
  EVATRAP_ERR_SOLVER = 3,
  EVATRAP_ERR_NO_TRAP = 4,
  EVATRAP_ERR_DOMAIN = 5,
  EVATRAP_ERR_FIT = 6,
  EVATRAP_ERR_COMPOSITION = 7,
  EVATRAP_ERR_ARGUMENT = 8
} evatrap_status;

typedef enum evatrap_polarization { EVATRAP_TE = 0, EVATRAP_TM = 1 } evatrap_polarization;

typedef struct evatrap_config evatrap_config;
typedef struct evatrap_mode_set evatrap_mode_set;

EVATRAP_API const char* evatrap_version(void);

/* Message of the last failed call on this thread; empty after success. */
EVATRAP_API const char* evatrap_last_error(void);

EVATRAP_API evatrap_status evatrap_config_load(const char* path, evatrap_config** out);
EVATRAP_API evatrap_status evatrap_config_parse(const char* yaml_text, evatrap_config** out);
/* Overrides the transverse grid step (m) of the mode solves. */
EVATRAP_API evatrap_status evatrap_config_set_grid_step(evatrap_config* config, double step);
EVATRAP_API void evatrap_config_free(evatrap_config* config);

EVATRAP_API size_t evatrap_command_count(void);
EVATRAP_API const char* evatrap_command_name(size_t index);

/* Runs a command, writing its outputs under out_dir. When report_json is not
   NULL it receives the run report; release it with evatrap_string_free. */
EVATRAP_API evatrap_status evatrap_run(const evatrap_config* config, const char* command, const char* out_dir,
                                       int threads, char** report_json);
EVATRAP_API void evatrap_string_free(char* text);

/* Elementary physics for the configured atom, SI units. */
EVATRAP_API evatrap_status evatrap_recoil_energy(const evatrap_config* config, double wavelength, double* joules);
EVATRAP_API evatrap_status evatrap_dipole_potential(const evatrap_config* config, double intensity, double wavelength,
                                                    double* joules);
EVATRAP_API evatrap_status evatrap_scattering_rate(const evatrap_config* config, double intensity, double wavelength,
                                                   double* rate);
EVATRAP_API evatrap_status evatrap_surface_potential(const evatrap_config* config, double distance, double* joules);

EVATRAP_API evatrap_status evatrap_modes_solve(const evatrap_config* config, double wavelength,
                                               evatrap_polarization polarization, evatrap_mode_set** out);
EVATRAP_API size_t evatrap_mode_set_size(const evatrap_mode_set* set);
/* label receives at most label_size bytes including the terminator. */
EVATRAP_API evatrap_status evatrap_mode_info(const evatrap_mode_set* set, size_t index, char* label, size_t label_size,
                                             double* beta, double* residual);
EVATRAP_API void evatrap_mode_set_free(evatrap_mode_set* set);

/* Two-mode amplitudes as {re0, im0, re1, im1}. */
EVATRAP_API evatrap_status evatrap_mzi_apply(double theta, const double in[4], double out[4]);
EVATRAP_API evatrap_status evatrap_coupler_apply(double coupling_length, double z, const double in[4], double out[4]);

#ifdef __cplusplus
}
#endif

#endif
