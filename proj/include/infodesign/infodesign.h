#ifndef INFODESIGN_H
#define INFODESIGN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define IFD_API __declspec(dllexport)
#else
#define IFD_API __attribute__((visibility("default")))
#endif

/* Status codes. The CLI uses the first five as process exit codes. */
typedef enum ifd_status {
    IFD_OK = 0,
    IFD_ERR_IO = 1,
    IFD_ERR_CONFIG = 2,
    IFD_ERR_NUMERICAL = 3,
    IFD_ERR_INFEASIBLE = 4,
    IFD_ERR_INVALID_ARGUMENT = 5,
    IFD_ERR_INTERNAL = 6
} ifd_status;

typedef struct ifd_trajectory ifd_trajectory;
typedef struct ifd_model ifd_model;
typedef struct ifd_config ifd_config;
typedef struct ifd_plan ifd_plan;

typedef struct ifd_model_info {
    int64_t n;          /* full state dimension */
    int64_t m;
    int64_t d;          /* planning dimension: n, or r when reduced */
    int64_t k;          /* data columns */
    int reduced;
    int64_t p;
    int64_t r;
    double sigma;
    double trace_gamma;
    double rmse;
} ifd_model_info;

typedef struct ifd_plan_info {
    int64_t horizon;
    int64_t m;
    int64_t d;
    int status;         /* 0 optimal, 1 iteration limit, 2 infeasible */
    int ccp_iterations;
    int degenerate_direction;
    double objective;   /* tr(W^{-1}) at the plan */
    double optimality_residual;
} ifd_plan_info;

typedef struct ifd_run_info {
    int64_t runs;
    int64_t epochs;
    double final_trace_gamma;  /* last epoch of the last run */
    double final_rmse_true;
} ifd_run_info;

IFD_API const char* ifd_version(void);
/* Message of the most recent failure on the calling thread ("" if none). */
IFD_API const char* ifd_last_error(void);
IFD_API const char* ifd_status_name(ifd_status status);

IFD_API ifd_status ifd_trajectory_load(const char* path, ifd_trajectory** out);
IFD_API ifd_status ifd_trajectory_dims(const ifd_trajectory* traj, int64_t* n, int64_t* m, int64_t* steps);
IFD_API void ifd_trajectory_free(ifd_trajectory* traj);

/* sigma <= 0 estimates the noise scale from residuals. */
IFD_API ifd_status ifd_model_identify(const ifd_trajectory* traj, double sigma, int dmdc, double energy,
                                      ifd_model** out);
IFD_API ifd_status ifd_model_load(const char* path, ifd_model** out);
IFD_API ifd_status ifd_model_save(const ifd_model* model, const char* path);
IFD_API ifd_status ifd_model_info_get(const ifd_model* model, ifd_model_info* info);
IFD_API void ifd_model_free(ifd_model* model);

IFD_API ifd_status ifd_config_load(const char* path, ifd_config** out);
IFD_API ifd_status ifd_config_save(const ifd_config* config, const char* path);
IFD_API ifd_status ifd_config_set_seed(ifd_config* config, uint64_t seed);
IFD_API ifd_status ifd_config_set_output_dir(ifd_config* config, const char* dir);
IFD_API const char* ifd_config_output_dir(const ifd_config* config);
IFD_API void ifd_config_free(ifd_config* config);

/* method is "sdp" or "lp". Returns IFD_ERR_INFEASIBLE (and no plan) when no input sequence satisfies the constraints. */
IFD_API ifd_status ifd_plan_create(const ifd_model* model, const ifd_config* config, const char* method,
                                   ifd_plan** out);
IFD_API ifd_status ifd_plan_info_get(const ifd_plan* plan, ifd_plan_info* info);
/* Copies horizon * m inputs, time-major (buffer[t * m + j]). */
IFD_API ifd_status ifd_plan_inputs(const ifd_plan* plan, double* buffer, size_t length);
IFD_API ifd_status ifd_plan_write(const ifd_plan* plan, const char* path);
IFD_API void ifd_plan_free(ifd_plan* plan);

/*
 * Runs write into the config's output directory (created if needed).
 * method may be NULL to use the first configured method. timing != 0 also writes wallclock files.
 */
IFD_API ifd_status ifd_run_simulate(const ifd_config* config, const char* method, int timing, ifd_run_info* info);
IFD_API ifd_status ifd_run_benchmark(const ifd_config* config, int timing, ifd_run_info* info);
IFD_API ifd_status ifd_run_signals(const ifd_config* config, const char* method);

#ifdef __cplusplus
}
#endif

#endif
