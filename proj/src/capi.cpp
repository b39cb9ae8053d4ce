#include "odin/odin.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <memory>
#include <thread>
#include <vector>

#include "clock.hpp"
#include "error.hpp"
#include "estimator.hpp"
#include "eval.hpp"
#include "json_io.hpp"
#include "live_transport.hpp"
#include "scenario.hpp"
#include "scheduler.hpp"
#include "simnet.hpp"

using namespace odin;

// The C enum and the internal Status must stay aligned value-for-value.
static_assert(ODIN_OK == static_cast<int>(Status::Ok));
static_assert(ODIN_ERR_INVALID_ARGUMENT == static_cast<int>(Status::InvalidArgument));
static_assert(ODIN_ERR_INVALID_ADDRESS == static_cast<int>(Status::InvalidAddress));
static_assert(ODIN_ERR_INVALID_TOPOLOGY == static_cast<int>(Status::InvalidTopology));
static_assert(ODIN_ERR_UNKNOWN_ADDRESS == static_cast<int>(Status::UnknownAddress));
static_assert(ODIN_ERR_UNKNOWN_TARGET == static_cast<int>(Status::UnknownTarget));
static_assert(ODIN_ERR_TRANSPORT_UNAVAILABLE == static_cast<int>(Status::TransportUnavailable));
static_assert(ODIN_ERR_NO_REACHABLE_HOP == static_cast<int>(Status::NoReachableHop));
static_assert(ODIN_ERR_STRICT_EXHAUSTED == static_cast<int>(Status::StrictExhausted));
static_assert(ODIN_ERR_EMPTY_SAMPLE_SET == static_cast<int>(Status::EmptySampleSet));
static_assert(ODIN_ERR_ZERO_ACTUAL == static_cast<int>(Status::ZeroActual));
static_assert(ODIN_ERR_IO == static_cast<int>(Status::IoFailure));
static_assert(ODIN_ERR_PARSE == static_cast<int>(Status::ParseFailure));
static_assert(ODIN_ERR_INTERNAL == static_cast<int>(Status::Internal));

namespace {

thread_local std::string g_last_error;

template <typename Fn>
odin_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return ODIN_OK;
    } catch (const Error& err) {
        g_last_error = err.what();
        return static_cast<odin_status>(err.status());
    } catch (const std::exception& ex) {
        g_last_error = ex.what();
        return ODIN_ERR_INTERNAL;
    }
}

odin_status fail_arg(const char* what) {
    g_last_error = what;
    return ODIN_ERR_INVALID_ARGUMENT;
}

void copy_addr(char (&dst)[ODIN_ADDR_LEN], const Ipv4& addr) {
    std::string text = addr.to_string();
    std::snprintf(dst, sizeof(dst), "%s", text.c_str());
}

ProbeSpec probe_spec_from(const odin_probe_options* opts) {
    ProbeSpec spec;
    if (opts == nullptr) return spec;
    if (opts->max_ttl > 0) spec.max_ttl = opts->max_ttl;
    if (opts->probes_per_ttl > 0) spec.probes_per_ttl = opts->probes_per_ttl;
    if (opts->timeout_ms > 0) spec.timeout_ms = opts->timeout_ms;
    spec.protocol = opts->protocol == ODIN_PROTO_UDP ? ProbeProtocol::UdpHighPort
                                                     : ProbeProtocol::IcmpEcho;
    return spec;
}

EstimateConfig estimate_config_from(const odin_estimate_options* opts) {
    EstimateConfig cfg;
    if (opts == nullptr) return cfg;
    cfg.delta_ms = opts->delta_ms;
    cfg.initial_estimate_ms = opts->initial_estimate_ms;
    cfg.mode = opts->mode == ODIN_MODE_STRICT ? EstimateMode::Strict : EstimateMode::Permissive;
    cfg.strict_max_retries = opts->strict_max_retries;
    cfg.probe = probe_spec_from(&opts->probe);
    return cfg;
}

SchedulerConfig sched_config_from(const odin_sched_options* opts) {
    SchedulerConfig cfg;
    if (opts == nullptr) return cfg;
    cfg.max_delay_ms = opts->max_delay_ms;
    cfg.max_interval_s = opts->max_interval_s;
    cfg.enabled = opts->enabled != 0;
    cfg.estimate = estimate_config_from(&opts->estimate);
    return cfg;
}

std::unique_ptr<RandomSource> rng_from(int seeded, uint64_t seed) {
    if (seeded) return std::make_unique<SeededRandom>(seed);
    return std::make_unique<CryptoRandom>();
}

void fill_estimate(odin_estimate* out, const EstimateResult& result) {
    out->estimate_ms = result.estimate_ms;
    out->observed_ms = result.observed_ms;
    copy_addr(out->source_node, result.source_node);
    copy_addr(out->probed_address, result.probed_address);
    out->source_kind = result.source_kind == SourceKind::NeighborReached
                           ? ODIN_SOURCE_NEIGHBOR_REACHED
                           : ODIN_SOURCE_LAST_REACHABLE_ROUTER;
    out->retries_used = result.retries_used;
}

void fill_assessment(odin_assessment* out, const AssessmentOutcome& outcome) {
    std::memset(out, 0, sizeof(*out));
    copy_addr(out->peer, outcome.peer);
    out->at_ms = outcome.at_ms;
    out->ok = outcome.result.has_value() ? 1 : 0;
    out->status = static_cast<int>(outcome.status);
    out->rtt_est_ms = outcome.rtt_est_ms;
    if (outcome.result) fill_estimate(&out->estimate, *outcome.result);
}

std::vector<Ipv4> parse_peers(const char* const* peers, size_t n) {
    if (peers == nullptr || n == 0) raise(Status::InvalidArgument, "no peers given");
    std::vector<Ipv4> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        if (peers[i] == nullptr) raise(Status::InvalidArgument, "null peer entry");
        out.push_back(Ipv4::parse_or_throw(peers[i]));
    }
    return out;
}

TopogenParams topogen_from(const odin_eval_options* opts) {
    TopogenParams params;
    if (opts == nullptr) return params;
    params.link_jitter_ms = opts->link_jitter_ms;
    if (opts->last_hop_max_ms > 0) {
        params.last_hop_base_min_ms = opts->last_hop_min_ms;
        params.last_hop_base_max_ms = opts->last_hop_max_ms;
    }
    params.last_hop_deviant_fraction = opts->last_hop_deviant_fraction;
    params.last_hop_deviation_ms = opts->last_hop_deviation_ms;
    params.neighbors_reachable = opts->neighbors_unreachable == 0;
    return params;
}

EvalOptions eval_options_from(const odin_eval_options* opts) {
    EvalOptions eval;
    if (opts == nullptr) return eval;
    eval.mode = opts->mode == ODIN_MODE_PERMISSIVE ? EstimateMode::Permissive
                                                   : EstimateMode::Strict;
    eval.samples = opts->samples;
    eval.seed = opts->seed;
    eval.topology = topogen_from(opts);
    if (opts->strict_max_retries > 0) eval.estimate.strict_max_retries = opts->strict_max_retries;
    return eval;
}

void fill_eval_summary(odin_eval_summary* out, const EvalReport& report) {
    out->total = report.samples.size();
    out->failures = report.failures;
    auto threshold = [&](double t) {
        auto it = report.histogram.within_threshold.find(t);
        return it == report.histogram.within_threshold.end() ? 0.0 : it->second;
    };
    out->within_half_pct = threshold(0.005);
    out->within_15_pct = threshold(0.15);
}

void write_eval_outputs(const EvalReport& report, const char* csv_path,
                        const char* summary_json_path) {
    if (csv_path != nullptr) emit_histogram_csv(report.histogram, csv_path);
    if (summary_json_path != nullptr) write_file(summary_json_path, eval_summary_json(report));
}

char* dup_string(const std::string& text) {
    char* out = static_cast<char*>(std::malloc(text.size() + 1));
    if (out == nullptr) raise(Status::Internal, "out of memory");
    std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
}

}  // namespace

struct odin_net {
    std::unique_ptr<SimNet> net;
};

struct odin_transport {
    std::unique_ptr<ProbeTransport> transport;
};

extern "C" {

const char* odin_status_name(odin_status status) {
    return status_name(static_cast<Status>(status));
}

const char* odin_last_error(void) { return g_last_error.c_str(); }

const char* odin_version(void) { return "0.1.0"; }

void odin_string_free(char* text) { std::free(text); }

/* ---- simulated networks ---- */

odin_status odin_net_from_json(const char* json_text, uint64_t seed, odin_net** out) {
    if (json_text == nullptr || out == nullptr) return fail_arg("null argument");
    return guarded([&] {
        auto handle = std::make_unique<odin_net>();
        handle->net = std::make_unique<SimNet>(topology_from_json(json_text), seed);
        *out = handle.release();
    });
}

odin_status odin_net_from_file(const char* path, uint64_t seed, odin_net** out) {
    if (path == nullptr || out == nullptr) return fail_arg("null argument");
    return guarded([&] {
        auto handle = std::make_unique<odin_net>();
        handle->net = std::make_unique<SimNet>(topology_from_file(path), seed);
        *out = handle.release();
    });
}

void odin_net_free(odin_net* net) { delete net; }

odin_status odin_net_ground_truth_rtt(odin_net* net, const char* addr, double* out_rtt_ms) {
    if (net == nullptr || addr == nullptr || out_rtt_ms == nullptr)
        return fail_arg("null argument");
    return guarded([&] { *out_rtt_ms = net->net->ground_truth_rtt(Ipv4::parse_or_throw(addr)); });
}

odin_status odin_net_install_adversary(odin_net* net, const char* json_text) {
    if (net == nullptr || json_text == nullptr) return fail_arg("null argument");
    return guarded([&] { net->net->install_adversary(adversary_from_json(json_text)); });
}

odin_status odin_net_advance_clock(odin_net* net, double dt_ms) {
    if (net == nullptr || dt_ms < 0) return fail_arg("bad argument");
    return guarded([&] { net->net->advance_clock(dt_ms); });
}

double odin_net_now_ms(odin_net* net) { return net == nullptr ? 0.0 : net->net->now_ms(); }

uint64_t odin_net_log_events(odin_net* net) {
    return net == nullptr ? 0 : net->net->delivery_log().size();
}

odin_status odin_net_log_text(odin_net* net, char** out_text) {
    if (net == nullptr || out_text == nullptr) return fail_arg("null argument");
    return guarded([&] { *out_text = dup_string(net->net->render_log()); });
}

/* ---- transports ---- */

odin_status odin_transport_sim(odin_net* net, odin_transport** out) {
    if (net == nullptr || out == nullptr) return fail_arg("null argument");
    return guarded([&] {
        auto handle = std::make_unique<odin_transport>();
        handle->transport = std::make_unique<SimTransport>(*net->net);
        *out = handle.release();
    });
}

odin_status odin_transport_live(odin_transport** out) {
    if (out == nullptr) return fail_arg("null argument");
    return guarded([&] {
        auto handle = std::make_unique<odin_transport>();
        handle->transport = std::make_unique<LiveTransport>();
        *out = handle.release();
    });
}

void odin_transport_free(odin_transport* transport) { delete transport; }

/* ---- probing ---- */

void odin_probe_options_init(odin_probe_options* opts) {
    if (opts == nullptr) return;
    opts->max_ttl = 30;
    opts->probes_per_ttl = 3;
    opts->timeout_ms = 1000.0;
    opts->protocol = ODIN_PROTO_ICMP;
}

odin_status odin_trace_route(odin_transport* transport, const char* addr,
                             const odin_probe_options* opts, odin_hop* hops, size_t cap,
                             size_t* out_count, int* out_dest_reached) {
    if (transport == nullptr || addr == nullptr || hops == nullptr || out_count == nullptr)
        return fail_arg("null argument");
    return guarded([&] {
        TraceResult result =
            trace_route(Ipv4::parse_or_throw(addr), probe_spec_from(opts), *transport->transport);
        size_t n = std::min(cap, result.hops.size());
        for (size_t i = 0; i < n; ++i) {
            const HopRecord& hop = result.hops[i];
            hops[i].ttl = hop.ttl;
            hops[i].kind = hop.kind == HopKind::DestReached   ? ODIN_HOP_DEST_REACHED
                           : hop.kind == HopKind::TimeExceeded ? ODIN_HOP_TIME_EXCEEDED
                                                                : ODIN_HOP_TIMEOUT;
            hops[i].rtt_ms = hop.rtt_ms.value_or(-1.0);
            if (hop.responder)
                copy_addr(hops[i].responder, *hop.responder);
            else
                hops[i].responder[0] = '\0';
        }
        *out_count = n;
        if (out_dest_reached) *out_dest_reached = result.destination_reached ? 1 : 0;
    });
}

odin_status odin_ping(odin_transport* transport, const char* addr, double timeout_ms,
                      double* out_rtt_ms, int* out_reached) {
    if (transport == nullptr || addr == nullptr || out_rtt_ms == nullptr ||
        out_reached == nullptr)
        return fail_arg("null argument");
    return guarded([&] {
        auto rtt = ping(Ipv4::parse_or_throw(addr), *transport->transport,
                        timeout_ms > 0 ? timeout_ms : 1000.0);
        *out_reached = rtt.has_value() ? 1 : 0;
        *out_rtt_ms = rtt.value_or(-1.0);
    });
}

/* ---- estimation ---- */

void odin_estimate_options_init(odin_estimate_options* opts) {
    if (opts == nullptr) return;
    opts->delta_ms = 0.1;
    opts->initial_estimate_ms = 0.5;
    opts->mode = ODIN_MODE_PERMISSIVE;
    opts->strict_max_retries = 8;
    opts->seeded = 0;
    opts->seed = 0;
    odin_probe_options_init(&opts->probe);
}

odin_status odin_estimate_rtt(odin_transport* transport, const char* addr, double prior_rtt_ms,
                              const odin_estimate_options* opts, odin_estimate* out) {
    if (transport == nullptr || addr == nullptr || out == nullptr)
        return fail_arg("null argument");
    return guarded([&] {
        PeerRttState prior;
        prior.peer_address = Ipv4::parse_or_throw(addr);
        prior.rtt_est_ms =
            prior_rtt_ms < 0 ? std::numeric_limits<double>::infinity() : prior_rtt_ms;
        auto rng = rng_from(opts != nullptr && opts->seeded, opts != nullptr ? opts->seed : 0);
        EstimateResult result = estimate_rtt(prior.peer_address, prior, estimate_config_from(opts),
                                             *transport->transport, *rng);
        fill_estimate(out, result);
    });
}

double odin_update_estimate(double prior_ms, double observed_ms, double delta_ms) {
    return update_estimate(prior_ms, observed_ms, delta_ms);
}

/* ---- scheduling ---- */

void odin_sched_options_init(odin_sched_options* opts) {
    if (opts == nullptr) return;
    opts->max_delay_ms = 300.0;
    opts->max_interval_s = 180.0;
    opts->enabled = 1;
    odin_estimate_options_init(&opts->estimate);
}

odin_status odin_sched_options_from_json(const char* json_text, odin_sched_options* opts) {
    if (json_text == nullptr || opts == nullptr) return fail_arg("null argument");
    return guarded([&] {
        SchedulerConfig cfg = scheduler_config_from_json(json_text);
        odin_sched_options_init(opts);
        opts->max_delay_ms = cfg.max_delay_ms;
        opts->max_interval_s = cfg.max_interval_s;
        opts->enabled = cfg.enabled ? 1 : 0;
        opts->estimate.delta_ms = cfg.estimate.delta_ms;
        opts->estimate.initial_estimate_ms = cfg.estimate.initial_estimate_ms;
        opts->estimate.mode =
            cfg.estimate.mode == EstimateMode::Strict ? ODIN_MODE_STRICT : ODIN_MODE_PERMISSIVE;
        opts->estimate.strict_max_retries = cfg.estimate.strict_max_retries;
        opts->estimate.probe.max_ttl = cfg.estimate.probe.max_ttl;
        opts->estimate.probe.probes_per_ttl = cfg.estimate.probe.probes_per_ttl;
        opts->estimate.probe.timeout_ms = cfg.estimate.probe.timeout_ms;
    });
}

double odin_broadcast_delay(double rtt_est_ms, const odin_sched_options* opts) {
    SchedulerConfig cfg = sched_config_from(opts);
    if (!cfg.enabled) return 0.0;
    return broadcast_delay_ms(rtt_est_ms, cfg);
}

odin_status odin_schedule_broadcast(const double* rtt_est_ms, size_t n,
                                    const odin_sched_options* opts, double* out_delays_ms) {
    if (rtt_est_ms == nullptr || out_delays_ms == nullptr || n == 0)
        return fail_arg("null argument");
    return guarded([&] {
        SchedulerConfig cfg = sched_config_from(opts);
        std::vector<PeerRttState> peers(n);
        for (size_t i = 0; i < n; ++i) peers[i].rtt_est_ms = rtt_est_ms[i];
        auto decisions = schedule_broadcast(peers, cfg, 0.0);
        for (size_t i = 0; i < n; ++i) out_delays_ms[i] = decisions[i].send_delay_ms;
    });
}

odin_status odin_next_assessment_delay(const odin_sched_options* opts, int seeded, uint64_t seed,
                                       double* out_ms) {
    if (out_ms == nullptr) return fail_arg("null argument");
    return guarded([&] {
        SchedulerConfig cfg = sched_config_from(opts);
        cfg.validate();
        auto rng = rng_from(seeded, seed);
        *out_ms = next_assessment_delay_ms(cfg, *rng);
    });
}

odin_status odin_watch_sim(odin_net* net, const char* const* peers, size_t n_peers,
                           const odin_sched_options* opts, uint64_t seed, double duration_s,
                           odin_assessment_cb cb, void* user) {
    if (net == nullptr || duration_s <= 0) return fail_arg("bad argument");
    return guarded([&] {
        AssessmentDriver driver(*net->net, sched_config_from(opts), parse_peers(peers, n_peers),
                                seed);
        driver.run_until(net->net->now_ms() + duration_s * 1000.0,
                         [&](const AssessmentOutcome& outcome) {
                             if (cb == nullptr) return;
                             odin_assessment view;
                             fill_assessment(&view, outcome);
                             cb(&view, user);
                         });
    });
}

odin_status odin_watch_live(const char* const* peers, size_t n_peers,
                            const odin_sched_options* opts, double duration_s, int max_per_peer,
                            const volatile int* stop_flag, odin_assessment_cb cb, void* user) {
    return guarded([&] {
        std::vector<Ipv4> addrs = parse_peers(peers, n_peers);
        SchedulerConfig cfg = sched_config_from(opts);
        cfg.validate();

        LiveTransport transport;
        CryptoRandom rng;
        WallClock clock;
        std::atomic<bool> stop{false};
        std::mutex cb_mutex;

        std::vector<std::thread> loops;
        std::vector<PeerRttState> states(addrs.size());
        for (size_t i = 0; i < addrs.size(); ++i) {
            states[i].peer_address = addrs[i];
            states[i].rtt_est_ms = cfg.estimate.initial_estimate_ms;
        }
        std::exception_ptr first_error;
        std::mutex err_mutex;
        std::atomic<size_t> running{addrs.size()};
        for (size_t i = 0; i < addrs.size(); ++i) {
            loops.emplace_back([&, i] {
                try {
                    run_assessment_loop(states[i], cfg, transport, rng, clock, stop, max_per_peer,
                                        [&](const AssessmentOutcome& outcome) {
                                            if (cb == nullptr) return;
                                            std::lock_guard<std::mutex> lock(cb_mutex);
                                            odin_assessment view;
                                            fill_assessment(&view, outcome);
                                            cb(&view, user);
                                        });
                } catch (...) {
                    // Typically TRANSPORT_UNAVAILABLE; stop the whole watch.
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    stop.store(true);
                    clock.cancel();
                }
                running.fetch_sub(1);
            });
        }

        const double started = clock.now_ms();
        while (!stop.load() && running.load() > 0) {
            bool timed_out = duration_s > 0 && clock.now_ms() - started >= duration_s * 1000.0;
            if (timed_out || (stop_flag != nullptr && *stop_flag != 0)) {
                stop.store(true);
                clock.cancel();
                break;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
        stop.store(true);
        clock.cancel();
        for (auto& loop : loops) loop.join();
        if (first_error) std::rethrow_exception(first_error);
    });
}

/* ---- scenarios ---- */

odin_status odin_scenario_run_file(const char* path, int use_seed_override, uint64_t seed,
                                   odin_assessment_cb cb, void* user, char** log_text_out,
                                   odin_scenario_stats* stats_out) {
    if (path == nullptr) return fail_arg("null argument");
    return guarded([&] {
        Scenario scenario = scenario_from_file(path);
        std::optional<uint64_t> seed_override;
        if (use_seed_override) seed_override = seed;
        ScenarioRun run = run_scenario(scenario, seed_override,
                                       [&](const AssessmentOutcome& outcome) {
                                           if (cb == nullptr) return;
                                           odin_assessment view;
                                           fill_assessment(&view, outcome);
                                           cb(&view, user);
                                       });
        if (log_text_out != nullptr) *log_text_out = dup_string(run.log_text);
        if (stats_out != nullptr) {
            stats_out->assessments = run.assessments.size();
            stats_out->broadcasts = run.broadcasts.size();
            stats_out->log_events = 0;
            for (char c : run.log_text)
                if (c == '\n') ++stats_out->log_events;
            stats_out->seed = run.seed;
            stats_out->ground_truth_ms = run.ground_truth_ms.empty() ? -1.0 : run.ground_truth_ms[0];
            stats_out->final_estimate_ms =
                run.final_states.empty() ? -1.0 : run.final_states[0].rtt_est_ms;
        }
    });
}

/* ---- evaluation ---- */

void odin_eval_options_init(odin_eval_options* opts) {
    if (opts == nullptr) return;
    std::memset(opts, 0, sizeof(*opts));
    opts->mode = ODIN_MODE_STRICT;
    opts->samples = 100;
    opts->seed = 1;
    opts->strict_max_retries = 8;
    TopogenParams defaults;
    opts->link_jitter_ms = defaults.link_jitter_ms;
    opts->last_hop_min_ms = defaults.last_hop_base_min_ms;
    opts->last_hop_max_ms = defaults.last_hop_base_max_ms;
    opts->last_hop_deviant_fraction = defaults.last_hop_deviant_fraction;
    opts->last_hop_deviation_ms = defaults.last_hop_deviation_ms;
}

odin_status odin_eval_sim(const odin_eval_options* opts, const char* csv_path,
                          const char* summary_json_path, odin_eval_summary* out) {
    return guarded([&] {
        EvalReport report = run_simnet_evaluation(eval_options_from(opts));
        write_eval_outputs(report, csv_path, summary_json_path);
        if (out != nullptr) fill_eval_summary(out, report);
    });
}

odin_status odin_eval_live(const char* const* targets, size_t n_targets,
                           const odin_eval_options* opts, int protocol, double rate_limit_per_s,
                           const char* csv_path, const char* summary_json_path,
                           odin_eval_summary* out) {
    return guarded([&] {
        EvalOptions eval = eval_options_from(opts);
        eval.estimate.probe.protocol =
            protocol == ODIN_PROTO_UDP ? ProbeProtocol::UdpHighPort : ProbeProtocol::IcmpEcho;

        CryptoRandom rng;
        std::vector<Ipv4> list;
        if (targets != nullptr && n_targets > 0) {
            for (size_t i = 0; i < n_targets; ++i)
                list.push_back(Ipv4::parse_or_throw(targets[i]));
        } else {
            for (int i = 0; i < eval.samples; ++i) list.push_back(random_public_ipv4(rng));
        }

        LiveTransport transport;
        const double gap_ms = rate_limit_per_s > 0 ? 1000.0 / rate_limit_per_s : 1000.0;
        WallClock clock;
        EvalReport report = run_transport_evaluation(list, eval, transport, rng,
                                                     [&] { clock.sleep_ms(gap_ms); });
        write_eval_outputs(report, csv_path, summary_json_path);
        if (out != nullptr) fill_eval_summary(out, report);
    });
}

}  // extern "C"
