#ifndef MWQUBIT_H
#define MWQUBIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MwqStatus {
  MWQ_STATUS_OK = 0,
  MWQ_STATUS_NULL_POINTER = 1,
  MWQ_STATUS_INVALID_INPUT = 2,
  MWQ_STATUS_NON_FINITE = 3,
  MWQ_STATUS_PROPAGATOR_WITH_DECAY = 4,
  MWQ_STATUS_NOT_CONVERGED = 5,
  MWQ_STATUS_SINGULAR = 6,
  MWQ_STATUS_NUMERICAL = 7,
  MWQ_STATUS_DEGENERATE_TRACE = 8,
  MWQ_STATUS_PANIC = 9,
  MWQ_STATUS_OTHER = 10,
} MwqStatus;

typedef enum MwqFamily {
  MWQ_FAMILY_RABI = 0,
  MWQ_FAMILY_ROTARY = 1,
  MWQ_FAMILY_CORPSE = 2,
  MWQ_FAMILY_SCROFULOUS = 3,
  MWQ_FAMILY_BB1 = 4,
} MwqFamily;

typedef enum MwqMeasure {
  // Overlap of the final state with the target state, starting from |0>.
  MWQ_MEASURE_STATE_FROM_ZERO = 0,
  // Overlap of the final state with the target state, starting from |1>.
  MWQ_MEASURE_STATE_FROM_ONE = 1,
  // `|Tr(U_target^dag U)| / 2`; only valid without decay.
  MWQ_MEASURE_PROPAGATOR = 2,
} MwqMeasure;

// Opaque pulse sequence together with the rotation it should implement.
typedef struct MwqSequence MwqSequence;

typedef struct MwqDecay {
  double gamma1;
  double gamma2;
} MwqDecay;

// Gaussian ensemble of Rabi rates and detunings, rad/s.
typedef struct MwqEnsemble {
  double chi0;
  double delta0;
  double dchi;
  double ddelta;
  double correlation;
} MwqEnsemble;

typedef struct MwqLeakageChannel {
  double rabi;
  double detuning;
} MwqLeakageChannel;

typedef struct MwqLeakageSummary {
  double max_combined;
  double final_combined;
  double final_pop1;
} MwqLeakageSummary;

// Fitted Rabi trace. `values` and `std_errors` are ordered
// chi0, delta0, dchi, ddelta, s1, s0.
typedef struct MwqRabiFit {
  double values[6];
  double std_errors[6];
  double residual_rms;
  uint32_t iterations;
  bool converged;
} MwqRabiFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if it succeeded.
// The pointer stays valid until the next call on the same thread.
const char *mwq_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *mwq_version(void);

// Builds the sequence of `family` for rotation angle `theta` at nominal Rabi
// rate `chi0`. `repeats` is used by rotary echoes only.
//
// # Safety
// `out` must be a valid pointer. Release the handle with [`mwq_sequence_free`].
enum MwqStatus mwq_sequence_new(enum MwqFamily family,
                                double theta,
                                double chi0,
                                uint32_t repeats,
                                struct MwqSequence **out);

// # Safety
// `seq` must be null or a handle from [`mwq_sequence_new`] not yet freed.
void mwq_sequence_free(struct MwqSequence *seq);

// # Safety
// `seq` must be a live handle and `out` valid.
enum MwqStatus mwq_sequence_duration(const struct MwqSequence *seq, double *out);

// # Safety
// `seq` must be a live handle and `out` valid.
enum MwqStatus mwq_sequence_segment_count(const struct MwqSequence *seq, size_t *out);

// Fidelity of one member with fractional detuning `f` and Rabi-rate error
// `eps`. `decay` may be null for no dissipation.
//
// # Safety
// `seq` must be a live handle, `decay` null or valid, `out` valid.
enum MwqStatus mwq_sequence_fidelity(const struct MwqSequence *seq,
                                     double f,
                                     double eps,
                                     enum MwqMeasure measure,
                                     const struct MwqDecay *decay,
                                     double *out);

// Gate fidelity averaged over `ensemble` with `quad_order` points per axis
// (0 selects the default).
//
// # Safety
// `seq` must be a live handle, `ensemble` and `out` valid, `decay` null or valid.
enum MwqStatus mwq_ensemble_gate_fidelity(const struct MwqSequence *seq,
                                          const struct MwqEnsemble *ensemble,
                                          const struct MwqDecay *decay,
                                          enum MwqMeasure measure,
                                          uint32_t quad_order,
                                          double *out);

// Closed-form upper-level population of one driven member at time `t`.
// `exact` selects the full expression over the weak-damping form.
//
// # Safety
// `decay` null or valid, `out` valid.
enum MwqStatus mwq_torrey_population(double t,
                                     double rabi,
                                     double detuning,
                                     const struct MwqDecay *decay,
                                     bool exact,
                                     double *out);

// Ensemble-averaged Rabi population at `n` times, written to `out[0..n]`.
// `quad_order` 0 picks orders from the ensemble and the latest time.
//
// # Safety
// `times` and `out` must hold `n` values; `ensemble` valid; `decay` null or valid.
enum MwqStatus mwq_ensemble_population(const double *times,
                                       size_t n,
                                       const struct MwqEnsemble *ensemble,
                                       const struct MwqDecay *decay,
                                       uint32_t quad_order,
                                       double *out);

// Leakage out of the qubit during a gate of `gate_duration` driven at
// `qubit_rabi`, through `n` off-resonant channels.
//
// # Safety
// `channels` must hold `n` entries; `out` valid.
enum MwqStatus mwq_leakage(double qubit_rabi,
                           double gate_duration,
                           const struct MwqLeakageChannel *channels,
                           size_t n,
                           struct MwqLeakageSummary *out);

// Fits a measured Rabi trace of `n` samples with known decay rates.
// A fit that stops without converging still fills `out` and returns
// `NotConverged`.
//
// # Safety
// `times` and `values` must hold `n` values; `decay` null or valid; `out` valid.
enum MwqStatus mwq_fit_rabi(const double *times,
                            const double *values,
                            size_t n,
                            const struct MwqDecay *decay,
                            struct MwqRabiFit *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MWQUBIT_H */
