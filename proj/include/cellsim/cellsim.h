/*
 * Copyright 2026 The cellsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to libcellsim. All objects are opaque handles owned by the
 * caller and released with the matching *_free function. Every fallible call
 * returns a cs_status; on failure cs_last_error() describes what went wrong
 * (the message is thread-local and valid until the next failing call on the
 * same thread).
 */
#ifndef CELLSIM_H
#define CELLSIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define CS_API __declspec(dllexport)
#else
#  define CS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cs_status {
    CS_OK = 0,
    CS_E_INVALID_ARGUMENT = 1,
    CS_E_OVERLAP,
    CS_E_EMPTY_CPU_SET,
    CS_E_DUPLICATE_IRQ,
    CS_E_SYNTAX,
    CS_E_SEMANTIC,
    CS_E_BAD_MAGIC,
    CS_E_UNSUPPORTED_VERSION,
    CS_E_TRUNCATED_RECORD,
    CS_E_INVARIANT_VIOLATION,
    CS_E_ALREADY_ENABLED,
    CS_E_NOT_ENABLED,
    CS_E_CONFIG_MISMATCH,
    CS_E_VALIDATION_FAILED,
    CS_E_NAME_COLLISION,
    CS_E_OUT_OF_REGION,
    CS_E_BAD_STATE,
    CS_E_NO_SUCH_CELL,
    CS_E_ROOT_CELL_IMMORTAL,
    CS_E_CELLS_STILL_EXIST,
    CS_E_NO_SUCH_RESOURCE,
    CS_E_UNOWNED_IRQ,
    CS_E_NO_SUCH_LINE,
    CS_E_SELF_CHANNEL,
    CS_E_BAD_SIZE,
    CS_E_NOT_ENDPOINT,
    CS_E_BAD_VECTOR,
    CS_E_BAD_ALIGNMENT,
    CS_E_EMPTY_SAMPLES,
    CS_E_NO_SUCH_CHANNEL,
    CS_E_IO,
    CS_E_NO_MEMORY = 100,
    CS_E_INTERNAL = 101
} cs_status;

typedef struct cs_platform cs_platform;
typedef struct cs_config cs_config;
typedef struct cs_hv cs_hv;
typedef struct cs_report cs_report;

/* Library-allocated byte buffer; release with cs_buffer_free. Text results
 * are NUL-terminated (the terminator is not counted in size). */
typedef struct cs_buffer {
    uint8_t *data;
    size_t size;
} cs_buffer;

CS_API void cs_buffer_free(cs_buffer *buf);
CS_API const char *cs_status_name(cs_status status);
CS_API const char *cs_last_error(void);

/* -- platform ------------------------------------------------------------ */

CS_API cs_status cs_platform_preset(const char *name, cs_platform **out);
CS_API cs_status cs_platform_parse(const char *text, size_t len, cs_platform **out);
CS_API cs_status cs_platform_text(const cs_platform *platform, cs_buffer *out);
CS_API const char *cs_platform_name(const cs_platform *platform);
CS_API void cs_platform_free(cs_platform *platform);

/* -- cell configuration -------------------------------------------------- */

CS_API cs_status cs_config_parse(const char *text, size_t len, cs_config **out);
CS_API cs_status cs_config_load_binary(const uint8_t *data, size_t len, cs_config **out);
CS_API cs_status cs_config_emit_binary(const cs_config *cfg, cs_buffer *out);
CS_API cs_status cs_config_text(const cs_config *cfg, cs_buffer *out);
CS_API const char *cs_config_name(const cs_config *cfg);
CS_API void cs_config_free(cs_config *cfg);

/* -- hypervisor ---------------------------------------------------------- */

typedef enum cs_cell_state {
    CS_CELL_CREATED = 0,
    CS_CELL_RUNNING = 1,
    CS_CELL_STOPPED = 2,
    CS_CELL_FAILED = 3
} cs_cell_state;

typedef struct cs_cell_info {
    uint32_t id;
    char name[32];
    cs_cell_state state;
    uint32_t cpu_count;
    uint32_t owned_resources;
} cs_cell_info;

typedef enum cs_access_kind {
    CS_ACCESS_MEM_READ = 0,
    CS_ACCESS_MEM_WRITE = 1,
    CS_ACCESS_IO_READ = 2,
    CS_ACCESS_IO_WRITE = 3,
    CS_ACCESS_INSTR = 4
} cs_access_kind;

typedef enum cs_outcome { CS_DIRECT = 0, CS_EMULATED = 1, CS_VIOLATION = 2 } cs_outcome;

typedef struct cs_irq_delivery {
    uint32_t line;
    uint32_t owner;
    uint64_t raised_at_ns;
    uint64_t delivered_at_ns;
    double latency_us;
    int reinjected;
} cs_irq_delivery;

/* A new hypervisor starts disabled on a copy of `platform`. */
CS_API cs_status cs_hv_new(const cs_platform *platform, cs_hv **out);
CS_API void cs_hv_free(cs_hv *hv);
CS_API int cs_hv_is_enabled(const cs_hv *hv);
CS_API const char *cs_hv_platform_name(const cs_hv *hv);

CS_API cs_status cs_hv_enable(cs_hv *hv, const cs_config *root);
CS_API cs_status cs_hv_disable(cs_hv *hv);

/* Violations the config would raise, one per line; empty text means
 * cs_hv_cell_create would accept it. */
CS_API cs_status cs_hv_validate(const cs_hv *hv, const cs_config *cfg, cs_buffer *out);
CS_API cs_status cs_hv_cell_create(cs_hv *hv, const cs_config *cfg, uint32_t *out_id);
CS_API cs_status cs_hv_cell_load(cs_hv *hv, uint32_t cell, uint64_t addr, const uint8_t *data, size_t len);
CS_API cs_status cs_hv_cell_start(cs_hv *hv, uint32_t cell);
CS_API cs_status cs_hv_cell_stop(cs_hv *hv, uint32_t cell);
CS_API cs_status cs_hv_cell_destroy(cs_hv *hv, uint32_t cell);
CS_API cs_status cs_hv_cell_relaunch(cs_hv *hv, uint32_t cell);

/* Accepts a cell name or a decimal id. */
CS_API cs_status cs_hv_cell_lookup(const cs_hv *hv, const char *name_or_id, uint32_t *out_id);
CS_API size_t cs_hv_cell_count(const cs_hv *hv);
CS_API cs_status cs_hv_cell_info_at(const cs_hv *hv, size_t index, cs_cell_info *out);

CS_API cs_status cs_hv_access(cs_hv *hv, uint32_t cell, cs_access_kind kind, uint64_t addr, uint8_t width,
                              const char *instr, cs_outcome *out);
CS_API cs_status cs_hv_raise_irq(cs_hv *hv, uint32_t line, uint64_t t_ns, cs_irq_delivery *out);
CS_API cs_status cs_hv_distributor_access(cs_hv *hv, uint32_t cell, uint32_t offset, cs_outcome *out);

CS_API size_t cs_hv_event_count(const cs_hv *hv);
CS_API cs_status cs_hv_events_jsonl(const cs_hv *hv, cs_buffer *out);

CS_API cs_status cs_hv_snapshot(const cs_hv *hv, cs_buffer *out);
CS_API cs_status cs_hv_restore(const uint8_t *data, size_t len, cs_hv **out);
/* File variants; saving writes a temporary and renames it into place. */
CS_API cs_status cs_hv_save(const cs_hv *hv, const char *path);
CS_API cs_status cs_hv_load(const char *path, cs_hv **out);

/* -- inter-cell channels ------------------------------------------------- */

CS_API cs_status cs_hv_channel_create(cs_hv *hv, uint32_t a, uint32_t b, uint64_t size, uint16_t vectors,
                                      uint32_t *out_id);
CS_API cs_status cs_hv_channel_send(cs_hv *hv, uint32_t channel, uint32_t from, uint64_t offset, const uint8_t *data,
                                    size_t len, uint16_t vector);
/* Drains up to `cap` pending vectors into `out`; `*count` receives how many. */
CS_API cs_status cs_hv_channel_poll(cs_hv *hv, uint32_t channel, uint32_t cell, uint16_t *out, size_t cap,
                                    size_t *count);
CS_API cs_status cs_hv_pci_cfg_read(cs_hv *hv, uint32_t cell, uint16_t bdf, uint16_t offset, uint32_t *out);
CS_API cs_status cs_hv_traffic_jsonl(const cs_hv *hv, cs_buffer *out);

/* -- latency benchmark --------------------------------------------------- */

typedef struct cs_scenario {
    int vmm_on;
    double freq_hz;
    int stress;
    uint64_t n_samples;
    uint64_t seed;
} cs_scenario;

typedef struct cs_latency_stats {
    double mean_us;
    double sigma_us;
    double max_us;
    uint64_t n;
} cs_latency_stats;

CS_API double cs_quantize_62_5ns(double t_us);
CS_API cs_status cs_summarize(const double *samples_us, size_t n, cs_latency_stats *out);

/* Writes the six canonical scenarios (fewer if cap < 6) and returns 6.
 * samples == 0 selects the four-hour default per frequency. */
CS_API size_t cs_bench_canonical(uint64_t samples, uint64_t seed, cs_scenario *out, size_t cap);
/* threads == 0 uses the hardware concurrency. */
CS_API cs_status cs_bench_run(const cs_platform *platform, const cs_scenario *scenarios, size_t n, unsigned threads,
                              cs_report **out);
CS_API size_t cs_report_row_count(const cs_report *report);
CS_API cs_status cs_report_row(const cs_report *report, size_t index, cs_scenario *scenario, cs_latency_stats *stats);
CS_API cs_status cs_report_table(const cs_report *report, cs_buffer *out);
CS_API cs_status cs_report_footer(const cs_report *report, cs_buffer *out);
CS_API cs_status cs_report_csv(const cs_report *report, cs_buffer *out);
CS_API void cs_report_free(cs_report *report);

#ifdef __cplusplus
}
#endif

#endif /* CELLSIM_H */
