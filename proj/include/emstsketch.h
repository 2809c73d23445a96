/* emstsketch: C API for the streaming Euclidean MST estimation toolkit.
 *
 * Opaque handles over the C++ core. All functions that can fail either
 * return NULL (handle constructors) or a nonzero status, and write a
 * message into the caller-provided error buffer. Estimator options travel
 * as a small JSON object; reports come back as JSON documents.
 */

#ifndef EMSTSKETCH_H_
#define EMSTSKETCH_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct emst_stream_t emst_stream_t;
typedef struct emst_report_t emst_report_t;

typedef enum {
  EMST_OK = 0,
  EMST_ERR_CONFIG = 2,
  EMST_ERR_RUNTIME = 3
} emst_status;

const char* emst_version(void);

/* Turnstile stream loading: text format "LAMBDA D" header then
 * "+ c1 ... cD" / "- c1 ... cD" lines. */
emst_stream_t* emst_stream_from_file(const char* path, char* errbuf, size_t errlen);

/* Seeded generator, e.g. "cantor:n=64", "uniform:n=100,d=2,lambda=64". */
emst_stream_t* emst_stream_generate(const char* spec, uint64_t seed, char* errbuf, size_t errlen);

void emst_stream_free(emst_stream_t* stream);

int emst_stream_dimension(const emst_stream_t* stream);
long long emst_stream_lambda(const emst_stream_t* stream);
long long emst_stream_distinct_points(const emst_stream_t* stream);

/* Runs an estimator (or the exact oracle) over the stream.
 *
 * options_json keys (all optional except mode):
 *   mode: "oracle" | "ideal" | "exact-Z" | "sampled-Z" | "alpha"
 *         | "onepass" | "onepass-sketch"
 *   epsilon, onepass_epsilon, alpha, samples, size_threshold: numbers
 *   seed: integer; oracle: bool (adds exact MST + ratio to the report)
 */
emst_report_t* emst_run(const emst_stream_t* stream, const char* options_json, char* errbuf,
                        size_t errlen);

void emst_report_free(emst_report_t* report);
const char* emst_report_json(const emst_report_t* report);
double emst_report_estimate(const emst_report_t* report);

/* Invariant suites; returns EMST_OK when all pass. The log (one line per
 * suite) is written to the buffer when provided. */
emst_status emst_selftest(char* logbuf, size_t loglen);

/* Monte Carlo p-stable median constants as a JSON object {p: median}.
 * Returns a malloc'd string; release with emst_string_free. */
char* emst_calibrate_json(const double* ps, int count);
void emst_string_free(char* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* EMSTSKETCH_H_ */
