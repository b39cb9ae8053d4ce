/*
 * odin.h -- C interface to the ODIN tamper-resistant RTT estimation library.
 *
 * The library measures round-trip time to a machine without ever sending it a
 * packet: it traces to a randomized address in the target's /24 and reads the
 * RTT off the deepest responding hop. On top of that sit the asymmetric
 * estimate update rule, randomized assessment scheduling, broadcast delay
 * computation, a deterministic network simulator for adversarial drills, and
 * an evaluation harness.
 *
 * All functions returning odin_status set a thread-local detail message
 * retrievable via odin_last_error(). Handles are opaque; destroy them with
 * their matching *_free function. Addresses are dotted-quad strings; address
 * output buffers are 16 bytes (ODIN_ADDR_LEN).
 */
#ifndef ODIN_H
#define ODIN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define ODIN_ADDR_LEN 16

typedef enum odin_status {
    ODIN_OK = 0,
    ODIN_ERR_INVALID_ARGUMENT = 1,
    ODIN_ERR_INVALID_ADDRESS = 2,
    ODIN_ERR_INVALID_TOPOLOGY = 3,
    ODIN_ERR_UNKNOWN_ADDRESS = 4,
    ODIN_ERR_UNKNOWN_TARGET = 5,
    ODIN_ERR_TRANSPORT_UNAVAILABLE = 6,
    ODIN_ERR_NO_REACHABLE_HOP = 7,
    ODIN_ERR_STRICT_EXHAUSTED = 8,
    ODIN_ERR_EMPTY_SAMPLE_SET = 9,
    ODIN_ERR_ZERO_ACTUAL = 10,
    ODIN_ERR_IO = 11,
    ODIN_ERR_PARSE = 12,
    ODIN_ERR_INTERNAL = 13,
} odin_status;

const char* odin_status_name(odin_status status);
const char* odin_last_error(void);
const char* odin_version(void);
void odin_string_free(char* text);

/* ------------------------------------------------------------------------ */
/* Simulated networks                                                        */
/* ------------------------------------------------------------------------ */

typedef struct odin_net odin_net;

/* Topology documents: {"routers":[{"id","addresses"}], "links":[{"endpoint_a",
 * "endpoint_b","one_way_latency_ms","jitter_ms"}], "subnets":[{"cidr",
 * "gateway_router","hosts":[{"last_octet","reachable","one_way_last_hop_ms"}]}]}.
 * Unknown keys are rejected. */
odin_status odin_net_from_file(const char* path, uint64_t seed, odin_net** out);
odin_status odin_net_from_json(const char* json_text, uint64_t seed, odin_net** out);
void odin_net_free(odin_net* net);

odin_status odin_net_ground_truth_rtt(odin_net* net, const char* addr, double* out_rtt_ms);
/* Adversary documents: {"kind":"RESPONSE_DELAY"|"FORGED_HOP"|"ROUTER_DDOS",
 * "target":..., ...kind-specific fields...}. */
odin_status odin_net_install_adversary(odin_net* net, const char* json_text);
odin_status odin_net_advance_clock(odin_net* net, double dt_ms);
double odin_net_now_ms(odin_net* net);
uint64_t odin_net_log_events(odin_net* net);
/* Deterministic text rendering of the delivery log; free with odin_string_free. */
odin_status odin_net_log_text(odin_net* net, char** out_text);

/* ------------------------------------------------------------------------ */
/* Transports                                                                */
/* ------------------------------------------------------------------------ */

typedef struct odin_transport odin_transport;

/* The transport borrows net; keep net alive until the transport is freed. */
odin_status odin_transport_sim(odin_net* net, odin_transport** out);
odin_status odin_transport_live(odin_transport** out);
void odin_transport_free(odin_transport* transport);

/* ------------------------------------------------------------------------ */
/* Probing                                                                   */
/* ------------------------------------------------------------------------ */

#define ODIN_PROTO_ICMP 0
#define ODIN_PROTO_UDP 1

#define ODIN_HOP_TIME_EXCEEDED 0
#define ODIN_HOP_DEST_REACHED 1
#define ODIN_HOP_TIMEOUT 2

typedef struct odin_probe_options {
    int max_ttl;        /* default 30 */
    int probes_per_ttl; /* default 3; minimum-RTT response wins */
    double timeout_ms;  /* default 1000 */
    int protocol;       /* ODIN_PROTO_* */
} odin_probe_options;

void odin_probe_options_init(odin_probe_options* opts);

typedef struct odin_hop {
    int ttl;
    int kind;                      /* ODIN_HOP_* */
    char responder[ODIN_ADDR_LEN]; /* empty on timeout */
    double rtt_ms;                 /* negative on timeout */
} odin_hop;

/* Fills hops[0..cap) with records for ttl 1..k; stops early on DEST_REACHED.
 * dest_reached may be NULL. */
odin_status odin_trace_route(odin_transport* transport, const char* addr,
                             const odin_probe_options* opts, odin_hop* hops, size_t cap,
                             size_t* out_count, int* out_dest_reached);

/* reached=0 and rtt_ms<0 on timeout. */
odin_status odin_ping(odin_transport* transport, const char* addr, double timeout_ms,
                      double* out_rtt_ms, int* out_reached);

/* ------------------------------------------------------------------------ */
/* Estimation                                                                */
/* ------------------------------------------------------------------------ */

#define ODIN_MODE_STRICT 0
#define ODIN_MODE_PERMISSIVE 1

#define ODIN_SOURCE_NEIGHBOR_REACHED 0
#define ODIN_SOURCE_LAST_REACHABLE_ROUTER 1

typedef struct odin_estimate_options {
    double delta_ms;            /* default 0.1 */
    double initial_estimate_ms; /* default 0.5 */
    int mode;                   /* ODIN_MODE_*; default permissive */
    int strict_max_retries;     /* default 8 (total trace attempts) */
    int seeded;                 /* nonzero: deterministic rng from seed */
    uint64_t seed;
    odin_probe_options probe;
} odin_estimate_options;

void odin_estimate_options_init(odin_estimate_options* opts);

typedef struct odin_estimate {
    double estimate_ms; /* after the update rule */
    double observed_ms; /* raw RTT from source_node */
    char source_node[ODIN_ADDR_LEN];
    char probed_address[ODIN_ADDR_LEN];
    int source_kind; /* ODIN_SOURCE_* */
    int retries_used;
} odin_estimate;

/* prior_rtt_ms < 0 disables the update rule (the raw observation is adopted).
 * Returns ODIN_ERR_NO_REACHABLE_HOP / ODIN_ERR_STRICT_EXHAUSTED on failure. */
odin_status odin_estimate_rtt(odin_transport* transport, const char* addr, double prior_rtt_ms,
                              const odin_estimate_options* opts, odin_estimate* out);

/* The asymmetric update rule: observed if observed < prior, else prior + delta. */
double odin_update_estimate(double prior_ms, double observed_ms, double delta_ms);

/* ------------------------------------------------------------------------ */
/* Scheduling                                                                */
/* ------------------------------------------------------------------------ */

typedef struct odin_sched_options {
    double max_delay_ms;   /* default 300 */
    double max_interval_s; /* default 180 */
    int enabled;           /* default 1; disabled means zero delays */
    odin_estimate_options estimate;
} odin_sched_options;

void odin_sched_options_init(odin_sched_options* opts);

/* Parses the configuration-file keys (enabled, max_delay_ms, max_interval_s,
 * delta_ms, mode, initial_estimate_ms, strict_max_retries, probes_per_ttl,
 * probe_timeout_ms, max_ttl) into opts. */
odin_status odin_sched_options_from_json(const char* json_text, odin_sched_options* opts);

/* max(0, max_delay - rtt_est); zero when disabled. */
double odin_broadcast_delay(double rtt_est_ms, const odin_sched_options* opts);

/* One delay per estimate; implied arrivals line up at now + max_delay. */
odin_status odin_schedule_broadcast(const double* rtt_est_ms, size_t n,
                                    const odin_sched_options* opts, double* out_delays_ms);

/* Uniform over [0, max_interval); cryptographically random unless seeded. */
odin_status odin_next_assessment_delay(const odin_sched_options* opts, int seeded, uint64_t seed,
                                       double* out_ms);

typedef struct odin_assessment {
    char peer[ODIN_ADDR_LEN];
    double at_ms;
    int ok;            /* 0: assessment failed, estimate retained */
    int status;        /* failure odin_status when ok == 0 */
    double rtt_est_ms; /* committed estimate after this assessment */
    odin_estimate estimate; /* valid when ok */
} odin_assessment;

typedef void (*odin_assessment_cb)(const odin_assessment* assessment, void* user);

/* Runs independent randomized assessment loops for every peer over a simulated
 * network until duration_s of virtual time has passed. */
odin_status odin_watch_sim(odin_net* net, const char* const* peers, size_t n_peers,
                           const odin_sched_options* opts, uint64_t seed, double duration_s,
                           odin_assessment_cb cb, void* user);

/* Live loops, one thread per peer, cryptographically randomized intervals.
 * Runs until *stop_flag becomes nonzero, duration_s elapses (if > 0), or every
 * peer has done max_per_peer assessments (if > 0). */
odin_status odin_watch_live(const char* const* peers, size_t n_peers,
                            const odin_sched_options* opts, double duration_s, int max_per_peer,
                            const volatile int* stop_flag, odin_assessment_cb cb, void* user);

/* ------------------------------------------------------------------------ */
/* Scenarios                                                                 */
/* ------------------------------------------------------------------------ */

typedef struct odin_scenario_stats {
    uint64_t assessments;
    uint64_t broadcasts;
    uint64_t log_events;
    uint64_t seed;
    double ground_truth_ms;   /* first scripted target */
    double final_estimate_ms; /* first scripted target */
} odin_scenario_stats;

/* Scenario documents: {"topology":..., "adversaries":[...], "script":
 * {"targets":[...], "config":{...}, "duration_s":..., "seed":...,
 * "warm_start":bool, "broadcast_at_s":[...]}}. Runs under virtual time.
 * log_text_out (optional) receives the rendered delivery log. */
odin_status odin_scenario_run_file(const char* path, int use_seed_override, uint64_t seed,
                                   odin_assessment_cb cb, void* user, char** log_text_out,
                                   odin_scenario_stats* stats_out);

/* ------------------------------------------------------------------------ */
/* Evaluation                                                                */
/* ------------------------------------------------------------------------ */

typedef struct odin_eval_options {
    int mode; /* ODIN_MODE_* */
    int samples;
    uint64_t seed;
    int strict_max_retries;
    int neighbors_unreachable; /* only the target answers in its /24 */
    double link_jitter_ms;
    double last_hop_min_ms;
    double last_hop_max_ms;
    double last_hop_deviant_fraction;
    double last_hop_deviation_ms;
} odin_eval_options;

void odin_eval_options_init(odin_eval_options* opts);

typedef struct odin_eval_summary {
    uint64_t total;
    uint64_t failures;
    double within_half_pct; /* share of |error| <= 0.5% */
    double within_15_pct;   /* share of |error| <= 15% */
} odin_eval_summary;

/* Seeded random topologies, one estimate each; histogram CSV columns are
 * bin_low,bin_high,count,fraction. Either path may be NULL. */
odin_status odin_eval_sim(const odin_eval_options* opts, const char* csv_path,
                          const char* summary_json_path, odin_eval_summary* out);

/* Live methodology over explicit targets (n_targets > 0) or randomly drawn
 * public addresses. rate_limit_per_s throttles target starts (default 1/s). */
odin_status odin_eval_live(const char* const* targets, size_t n_targets,
                           const odin_eval_options* opts, int protocol, double rate_limit_per_s,
                           const char* csv_path, const char* summary_json_path,
                           odin_eval_summary* out);

#ifdef __cplusplus
}
#endif

#endif /* ODIN_H */
