#ifndef CBOHF_H
#define CBOHF_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CbohfPattern {
  CBOHF_PATTERN_ALL_PARALLEL = 0,
  CBOHF_PATTERN_ANTIPARALLEL = 1,
  CBOHF_PATTERN_DEFECTIVE = 2,
} CbohfPattern;

typedef enum CbohfStatus {
  CBOHF_STATUS_OK = 0,
  CBOHF_STATUS_NULL_POINTER = 1,
  CBOHF_STATUS_INVALID_INPUT = 2,
  CBOHF_STATUS_IO = 3,
  CBOHF_STATUS_NOT_CONVERGED = 4,
  CBOHF_STATUS_NUMERICAL = 5,
  CBOHF_STATUS_OUT_OF_RANGE = 6,
  CBOHF_STATUS_PANIC = 7,
} CbohfStatus;

/*
 Converged ensemble.
 */
typedef struct CbohfEnsemble CbohfEnsemble;

/*
 Molecule with its basis and integrals.
 */
typedef struct CbohfSystem CbohfSystem;

/*
 Energy decomposition in hartree; `q` and the dipole in atomic units.
 */
typedef struct CbohfReport {
  double e_cbo;
  double e_el;
  double e_lin;
  double e_dis;
  double e_dse;
  double e_dse_1e;
  double e_dse_2j;
  double e_dse_2k;
  double e_dse_en;
  double e_dse_nuc;
  double q;
  double dipole[3];
  /*
   Cavity-free reference energy.
   */
  double e_field_free;
} CbohfReport;

typedef struct CbohfMoleculeReport {
  double e_cbo;
  double e_cbo_without_dis;
  double e_el;
  double e_lin;
  double e_dis;
  double e_dse_local;
  double e_dse_inter;
  double e_field_free;
  double delta_e;
  double projected_dipole;
} CbohfMoleculeReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, copied NUL-terminated
 into `buf` (truncated to `len - 1` bytes). Returns the full message length.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t cbohf_last_error_message(char *buf, size_t len);

/*
 Coupling magnitude in a.u. for a field in V/nm and a mode frequency in cm^-1.

 # Safety
 `out` must be null or valid for writes.
 */
enum CbohfStatus cbohf_lambda_from_field(double field_v_per_nm, double omega_cm, double *out);

/*
 Builds a molecule from XYZ text (angstrom) with a built-in basis name or basis file path.

 # Safety
 `xyz` and `basis` must be NUL-terminated strings; `out` must be valid for writes.
 */
enum CbohfStatus cbohf_system_new(const char *xyz,
                                  int32_t charge,
                                  const char *basis,
                                  struct CbohfSystem **out);

/*
 # Safety
 `system` must be null or a handle from [`cbohf_system_new`] not yet freed.
 */
void cbohf_system_free(struct CbohfSystem *system);

/*
 # Safety
 `system` must be a live handle; `out` valid for writes.
 */
enum CbohfStatus cbohf_system_n_basis(const struct CbohfSystem *system, size_t *out);

/*
 Field-free RHF total energy.

 # Safety
 `system` must be a live handle; `out` valid for writes.
 */
enum CbohfStatus cbohf_rhf_energy(const struct CbohfSystem *system, double *out);

/*
 Single-molecule CBO-HF at the optimal photon displacement.
 `lambda` is the coupling vector (3 doubles, a.u.), `omega` in hartree.

 # Safety
 `system` must be a live handle, `lambda` point to 3 doubles, `out` valid for writes.
 */
enum CbohfStatus cbohf_optimize_qc(const struct CbohfSystem *system,
                                   const double *lambda,
                                   double omega,
                                   struct CbohfReport *out);

/*
 Dilute ensemble of `n_mol` replicas of `template`, spaced `separation`
 bohr apart, with bare coupling `lambda0` along `polarization`.

 # Safety
 `template` must be a live handle, `dipole_axis` and `polarization` point to
 3 doubles, `out` valid for writes.
 */
enum CbohfStatus cbohf_ensemble_solve(const struct CbohfSystem *template_,
                                      const char *basis,
                                      const double *dipole_axis,
                                      size_t n_mol,
                                      enum CbohfPattern pattern,
                                      double separation,
                                      double omega,
                                      double lambda0,
                                      const double *polarization,
                                      bool rescale,
                                      struct CbohfEnsemble **out);

/*
 # Safety
 `ensemble` must be null or a handle from [`cbohf_ensemble_solve`] not yet freed.
 */
void cbohf_ensemble_free(struct CbohfEnsemble *ensemble);

/*
 Ensemble-level report; `e_field_free` is the sum over molecules.

 # Safety
 `ensemble` must be a live handle; `out` valid for writes.
 */
enum CbohfStatus cbohf_ensemble_report(const struct CbohfEnsemble *ensemble,
                                       struct CbohfReport *out);

/*
 # Safety
 `ensemble` must be a live handle; `out` valid for writes.
 */
enum CbohfStatus cbohf_ensemble_n_molecules(const struct CbohfEnsemble *ensemble, size_t *out);

/*
 # Safety
 `ensemble` must be a live handle; `out` valid for writes.
 */
enum CbohfStatus cbohf_ensemble_molecule_report(const struct CbohfEnsemble *ensemble,
                                                size_t index,
                                                struct CbohfMoleculeReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CBOHF_H */
