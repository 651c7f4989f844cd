#ifndef MULTIPOLE_TRAP_H
#define MULTIPOLE_TRAP_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum MptStatus {
  MPT_STATUS_OK = 0,
  // A required pointer argument was null.
  MPT_STATUS_NULL_ARGUMENT = 1,
  // A physical parameter is out of range.
  MPT_STATUS_INVALID_PARAMETER = 2,
  // The operating point is outside the stability region or the
  // transverse confinement is lost.
  MPT_STATUS_UNSTABLE = 3,
  // The ion left the trap before the requested duration.
  MPT_STATUS_ESCAPED = 4,
  // The numerical solver could not produce a result.
  MPT_STATUS_SOLVER_FAILURE = 5,
  // The caller's buffer is too small.
  MPT_STATUS_BUFFER_TOO_SMALL = 6,
  // Internal error; the library state is unchanged.
  MPT_STATUS_PANIC = 7,
} MptStatus;

typedef enum MptModel {
  // Full RF field.
  MPT_MODEL_RF = 0,
  // Time-averaged pseudopotential.
  MPT_MODEL_SECULAR = 1,
} MptModel;

typedef struct MptCloud MptCloud;

typedef struct MptIon MptIon;

typedef struct MptTrajectory MptTrajectory;

typedef struct MptTrap MptTrap;

// Mathieu parameters; the β fields are NaN outside the stable region.
typedef struct MptMathieu {
  double a_x;
  double q_x;
  double a_y;
  double q_y;
  double beta_x;
  double beta_y;
  bool stable;
} MptMathieu;

// Angular frequencies (rad/s).
typedef struct MptSecular {
  double omega_x;
  double omega_r;
  double omega_z;
} MptSecular;

typedef struct MptCloudSummary {
  // γ for quadrupoles, α for higher multipoles.
  double shape;
  // Central density (m^-3).
  double central_density;
  // Debye length at the centre (m).
  double debye_length;
  // Cloud radius (m).
  double radius;
  // Ions per metre.
  double linear_density;
  double coupling;
  double peak_to_center;
  // Number of stored profile points.
  size_t points;
} MptCloudSummary;

// Position (m) and velocity (m/s) at time `t` (s).
typedef struct MptState {
  double t;
  double x;
  double y;
  double z;
  double vx;
  double vy;
  double vz;
} MptState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to `len`) and returns the full message length
// in bytes without the terminator, or 0 if the last call succeeded.
// `buf` may be null to query the length.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t mpt_last_error(char *buf, size_t len);

// Creates an ion of the given charge (elementary charges) and mass (u).
//
// # Safety
// `out` must be valid for writes.
enum MptStatus mpt_ion_new(double charge_e, double mass_u, struct MptIon **out);

// # Safety
// `ion` must be null or a handle from [`mpt_ion_new`] not yet freed.
void mpt_ion_free(struct MptIon *ion);

// Creates a linear 2k-pole trap of order `k` with inscribed radius `r0`
// (m), RF amplitude `v0` (V) and angular drive frequency `omega` (rad/s).
//
// # Safety
// `out` must be valid for writes.
enum MptStatus mpt_trap_new(uint32_t k, double r0, double v0, double omega, struct MptTrap **out);

// Sets the static electrode offset (V).
//
// # Safety
// `trap` must be a live handle.
enum MptStatus mpt_trap_set_static_offset(struct MptTrap *trap, double offset);

// Adds axial confinement from end electrodes at `v_end` (V) with
// geometric factor `kappa` and half-length `z0` (m).
//
// # Safety
// `trap` must be a live handle.
enum MptStatus mpt_trap_set_axial(struct MptTrap *trap, double v_end, double kappa, double z0);

// # Safety
// `trap` must be null or a handle from [`mpt_trap_new`] not yet freed.
void mpt_trap_free(struct MptTrap *trap);

// Characteristic energy m(Ω r0)²/(2k²) in joules.
//
// # Safety
// Handles must be live and `out` valid for writes.
enum MptStatus mpt_characteristic_energy(const struct MptTrap *trap,
                                         const struct MptIon *ion,
                                         double *out);

// Local adiabaticity parameter at radius `r` (m).
//
// # Safety
// Handles must be live and `out` valid for writes.
enum MptStatus mpt_adiabaticity(const struct MptTrap *trap,
                                const struct MptIon *ion,
                                double r,
                                double *out);

// Mathieu parameters of a quadrupole trap.
//
// # Safety
// Handles must be live and `out` valid for writes.
enum MptStatus mpt_mathieu(const struct MptTrap *trap,
                           const struct MptIon *ion,
                           struct MptMathieu *out);

// Secular angular frequencies of a quadrupole trap: transverse
// `omega_x`, radial `omega_r` softened by the axial field, and axial
// `omega_z`.
//
// # Safety
// Handles must be live and `out` valid for writes.
enum MptStatus mpt_secular_frequencies(const struct MptTrap *trap,
                                       const struct MptIon *ion,
                                       struct MptSecular *out);

// Micromotion amplitude (m) per axis at `pos` (m, 3 values).
//
// # Safety
// Handles must be live, `pos` readable and `out` writable for 3 values.
enum MptStatus mpt_micromotion_amplitude(const struct MptTrap *trap,
                                         const struct MptIon *ion,
                                         const double *pos,
                                         double *out);

// Solves the thermal equilibrium cloud at `temperature` (K) holding
// `linear_density` ions per metre. For quadrupoles `omega_x` (rad/s)
// overrides the secular frequency; pass NaN to derive it from the trap.
// `edge_threshold` is the density fraction defining the cloud edge.
//
// # Safety
// Handles must be live and `out` valid for writes.
enum MptStatus mpt_cloud_solve(const struct MptTrap *trap,
                               const struct MptIon *ion,
                               double temperature,
                               double linear_density,
                               double omega_x,
                               double edge_threshold,
                               struct MptCloud **out);

// # Safety
// `cloud` must be live and `out` valid for writes.
enum MptStatus mpt_cloud_summary(const struct MptCloud *cloud, struct MptCloudSummary *out);

// Copies the radial profile: radii (m) and density relative to the
// centre. Either array may be null; non-null arrays need `len` at least
// the number of points reported by [`mpt_cloud_summary`].
//
// # Safety
// `cloud` must be live and each non-null array writable for `len` values.
enum MptStatus mpt_cloud_profile(const struct MptCloud *cloud,
                                 double *radius,
                                 double *density,
                                 size_t len);

// # Safety
// `cloud` must be null or a handle from [`mpt_cloud_solve`] not yet freed.
void mpt_cloud_free(struct MptCloud *cloud);

// Integrates a single ion from `initial` for `duration` seconds,
// sampling `samples_per_rf_period` times per RF period with relative
// tolerance `rtol`. If the ion escapes, the status is
// [`MptStatus::Escaped`] and `out` still receives the partial trajectory.
//
// # Safety
// Handles must be live, `initial` readable and `out` valid for writes.
enum MptStatus mpt_trajectory_run(const struct MptTrap *trap,
                                  const struct MptIon *ion,
                                  enum MptModel model,
                                  const struct MptState *initial,
                                  double duration,
                                  size_t samples_per_rf_period,
                                  double rtol,
                                  struct MptTrajectory **out);

// Number of stored samples, or 0 for a null handle.
//
// # Safety
// `traj` must be null or live.
size_t mpt_trajectory_len(const struct MptTrajectory *traj);

// Copies up to `len` samples into `out` and returns how many were written.
//
// # Safety
// `traj` must be live and `out` writable for `len` states.
size_t mpt_trajectory_samples(const struct MptTrajectory *traj, struct MptState *out, size_t len);

// # Safety
// `traj` must be null or a handle from [`mpt_trajectory_run`] not yet freed.
void mpt_trajectory_free(struct MptTrajectory *traj);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MULTIPOLE_TRAP_H */
