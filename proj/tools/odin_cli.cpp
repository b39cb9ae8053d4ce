// odin -- command-line front end over the ODIN C API.
//
// Subcommands: trace, estimate, watch, simulate, eval. Transports are either
// the live network or a simulated topology (--transport sim:<topology.json>).
// Exit codes: 0 success, 1 usage, 2 transport, 3 estimation failure.

#include <csignal>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "odin/odin.h"

namespace {

volatile sig_atomic_t g_stop = 0;

void handle_sigint(int) { g_stop = 1; }

int exit_code_for(odin_status status) {
    switch (status) {
        case ODIN_OK:
            return 0;
        case ODIN_ERR_INVALID_ARGUMENT:
        case ODIN_ERR_INVALID_ADDRESS:
        case ODIN_ERR_PARSE:
            return 1;
        case ODIN_ERR_NO_REACHABLE_HOP:
        case ODIN_ERR_STRICT_EXHAUSTED:
        case ODIN_ERR_EMPTY_SAMPLE_SET:
        case ODIN_ERR_ZERO_ACTUAL:
            return 3;
        default:
            return 2;
    }
}

int report_error(odin_status status) {
    std::fprintf(stderr, "error: %s: %s\n", odin_status_name(status), odin_last_error());
    return exit_code_for(status);
}

struct TransportChoice {
    bool live = true;
    std::string topology_path;
    uint64_t seed = 0;
    bool seed_set = false;
};

// "live" or "sim:<topology.json>".
bool parse_transport(const std::string& text, TransportChoice* choice) {
    if (text == "live") {
        choice->live = true;
        return true;
    }
    if (text.rfind("sim:", 0) == 0 && text.size() > 4) {
        choice->live = false;
        choice->topology_path = text.substr(4);
        return true;
    }
    return false;
}

struct Session {
    odin_net* net = nullptr;
    odin_transport* transport = nullptr;

    ~Session() {
        if (transport) odin_transport_free(transport);
        if (net) odin_net_free(net);
    }
};

odin_status open_session(const TransportChoice& choice, Session* session) {
    if (choice.live) return odin_transport_live(&session->transport);
    odin_status rc = odin_net_from_file(choice.topology_path.c_str(), choice.seed, &session->net);
    if (rc != ODIN_OK) return rc;
    return odin_transport_sim(session->net, &session->transport);
}

std::vector<std::string> read_address_lines(const std::string& path, std::string* error) {
    std::ifstream in(path);
    if (!in) {
        *error = "cannot open '" + path + "'";
        return {};
    }
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        if (line[start] == '#') continue;
        out.push_back(line.substr(start));
    }
    return out;
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

const char* source_kind_text(int kind) {
    return kind == ODIN_SOURCE_NEIGHBOR_REACHED ? "NEIGHBOR_REACHED" : "LAST_REACHABLE_ROUTER";
}

// ---------------------------------------------------------------------------

int cmd_trace(const TransportChoice& choice, const std::string& addr,
              const odin_probe_options& probe, bool json) {
    Session session;
    odin_status rc = open_session(choice, &session);
    if (rc != ODIN_OK) return report_error(rc);

    std::vector<odin_hop> hops(static_cast<size_t>(probe.max_ttl));
    size_t count = 0;
    int reached = 0;
    rc = odin_trace_route(session.transport, addr.c_str(), &probe, hops.data(), hops.size(),
                          &count, &reached);
    if (rc != ODIN_OK) return report_error(rc);

    if (json) {
        std::printf("{\"target\":\"%s\",\"destination_reached\":%s,\"hops\":[",
                    json_escape(addr).c_str(), reached ? "true" : "false");
        for (size_t i = 0; i < count; ++i) {
            const odin_hop& hop = hops[i];
            if (i) std::printf(",");
            if (hop.kind == ODIN_HOP_TIMEOUT)
                std::printf("{\"ttl\":%d,\"kind\":\"TIMEOUT\"}", hop.ttl);
            else
                std::printf("{\"ttl\":%d,\"kind\":\"%s\",\"responder\":\"%s\",\"rtt_ms\":%.6f}",
                            hop.ttl,
                            hop.kind == ODIN_HOP_DEST_REACHED ? "DEST_REACHED" : "TIME_EXCEEDED",
                            hop.responder, hop.rtt_ms);
        }
        std::printf("]}\n");
        return 0;
    }

    std::printf("trace to %s (%s)\n", addr.c_str(), choice.live ? "live" : "sim");
    std::printf("%4s  %-15s  %10s  %s\n", "ttl", "responder", "rtt_ms", "kind");
    for (size_t i = 0; i < count; ++i) {
        const odin_hop& hop = hops[i];
        if (hop.kind == ODIN_HOP_TIMEOUT)
            std::printf("%4d  %-15s  %10s  *\n", hop.ttl, "*", "*");
        else
            std::printf("%4d  %-15s  %10.3f  %s\n", hop.ttl, hop.responder, hop.rtt_ms,
                        hop.kind == ODIN_HOP_DEST_REACHED ? "DEST_REACHED" : "TIME_EXCEEDED");
    }
    std::printf("destination reached: %s\n", reached ? "yes" : "no");
    return 0;
}

int cmd_estimate(const TransportChoice& choice, const std::string& addr, double prior,
                 const odin_estimate_options& opts, bool json) {
    Session session;
    odin_status rc = open_session(choice, &session);
    if (rc != ODIN_OK) return report_error(rc);

    odin_estimate est;
    rc = odin_estimate_rtt(session.transport, addr.c_str(), prior, &opts, &est);
    if (rc != ODIN_OK) return report_error(rc);

    if (json) {
        std::printf("{\"target\":\"%s\",\"probed_address\":\"%s\",\"source_node\":\"%s\","
                    "\"source_kind\":\"%s\",\"observed_ms\":%.6f,\"estimate_ms\":%.6f,"
                    "\"retries_used\":%d}\n",
                    json_escape(addr).c_str(), est.probed_address, est.source_node,
                    source_kind_text(est.source_kind), est.observed_ms, est.estimate_ms,
                    est.retries_used);
        return 0;
    }

    std::printf("target:          %s\n", addr.c_str());
    std::printf("probed neighbor: %s\n", est.probed_address);
    std::printf("source node:     %s (%s)\n", est.source_node, source_kind_text(est.source_kind));
    std::printf("observed rtt:    %.3f ms\n", est.observed_ms);
    std::printf("estimate:        %.3f ms\n", est.estimate_ms);
    std::printf("retries used:    %d\n", est.retries_used);
    return 0;
}

struct WatchContext {
    const odin_sched_options* opts;
};

void watch_print(const odin_assessment* a, void* user) {
    auto* ctx = static_cast<WatchContext*>(user);
    if (!a->ok) {
        std::printf("[t=%.3fs] peer %s assessment failed (%s); rtt_est=%.3fms retained\n",
                    a->at_ms / 1000.0, a->peer, odin_status_name(static_cast<odin_status>(a->status)),
                    a->rtt_est_ms);
        return;
    }
    double delay = odin_broadcast_delay(a->rtt_est_ms, ctx->opts);
    std::printf("[t=%.3fs] peer %s observed=%.3fms via %s (%s) rtt_est=%.3fms send_delay=%.3fms\n",
                a->at_ms / 1000.0, a->peer, a->estimate.observed_ms, a->estimate.source_node,
                source_kind_text(a->estimate.source_kind), a->rtt_est_ms, delay);
    std::fflush(stdout);
}

int cmd_watch(const TransportChoice& choice, const std::string& peers_path,
              const odin_sched_options& opts, double duration_s, int max_assessments) {
    std::string error;
    std::vector<std::string> lines = read_address_lines(peers_path, &error);
    if (!error.empty()) {
        std::fprintf(stderr, "error: %s\n", error.c_str());
        return 1;
    }
    if (lines.empty()) {
        std::fprintf(stderr, "error: peers file '%s' lists no peers\n", peers_path.c_str());
        return 1;
    }
    std::vector<const char*> peers;
    for (const auto& line : lines) peers.push_back(line.c_str());

    WatchContext ctx{&opts};
    odin_status rc;
    if (choice.live) {
        std::signal(SIGINT, handle_sigint);
        std::printf("watching %zu peer(s) live; Ctrl-C to stop\n", peers.size());
        rc = odin_watch_live(peers.data(), peers.size(), &opts, duration_s, max_assessments,
                             reinterpret_cast<const volatile int*>(&g_stop), watch_print, &ctx);
    } else {
        Session session;
        rc = open_session(choice, &session);
        if (rc != ODIN_OK) return report_error(rc);
        rc = odin_watch_sim(session.net, peers.data(), peers.size(), &opts, choice.seed,
                            duration_s > 0 ? duration_s : 3600.0, watch_print, &ctx);
    }
    if (rc != ODIN_OK) return report_error(rc);
    return 0;
}

void simulate_print(const odin_assessment* a, void* user) {
    bool quiet = *static_cast<bool*>(user);
    if (quiet) return;
    if (!a->ok) {
        std::printf("[t=%.3fs] peer %s assessment failed (%s)\n", a->at_ms / 1000.0, a->peer,
                    odin_status_name(static_cast<odin_status>(a->status)));
        return;
    }
    std::printf("[t=%.3fs] peer %s observed=%.3fms rtt_est=%.3fms\n", a->at_ms / 1000.0, a->peer,
                a->estimate.observed_ms, a->rtt_est_ms);
}

int cmd_simulate(const std::string& scenario_path, bool seed_set, uint64_t seed,
                 const std::string& log_out, bool quiet) {
    odin_scenario_stats stats;
    char* log_text = nullptr;
    odin_status rc = odin_scenario_run_file(scenario_path.c_str(), seed_set ? 1 : 0, seed,
                                            simulate_print, &quiet, &log_text, &stats);
    if (rc != ODIN_OK) return report_error(rc);

    std::printf("scenario complete: %llu assessments, %llu broadcasts, seed %llu\n",
                static_cast<unsigned long long>(stats.assessments),
                static_cast<unsigned long long>(stats.broadcasts),
                static_cast<unsigned long long>(stats.seed));
    std::printf("target ground truth: %.3f ms, final estimate: %.3f ms\n", stats.ground_truth_ms,
                stats.final_estimate_ms);

    int code = 0;
    if (!log_out.empty()) {
        std::ofstream out(log_out, std::ios::binary | std::ios::trunc);
        if (!out) {
            std::fprintf(stderr, "error: cannot write '%s'\n", log_out.c_str());
            code = 2;
        } else {
            out << log_text;
            std::printf("delivery log (%llu events) written to %s\n",
                        static_cast<unsigned long long>(stats.log_events), log_out.c_str());
        }
    } else {
        std::printf("--- delivery log (%llu events) ---\n",
                    static_cast<unsigned long long>(stats.log_events));
        std::fputs(log_text, stdout);
    }
    odin_string_free(log_text);
    return code;
}

int cmd_eval(bool live, const std::string& targets_path, const odin_eval_options& opts,
             int protocol, double rate_per_s, const std::string& csv_path,
             const std::string& summary_path, bool json) {
    odin_eval_summary summary;
    odin_status rc;
    const char* csv = csv_path.empty() ? nullptr : csv_path.c_str();
    const char* sum = summary_path.empty() ? nullptr : summary_path.c_str();

    if (live) {
        std::vector<std::string> lines;
        std::vector<const char*> targets;
        if (!targets_path.empty()) {
            std::string error;
            lines = read_address_lines(targets_path, &error);
            if (!error.empty()) {
                std::fprintf(stderr, "error: %s\n", error.c_str());
                return 1;
            }
            for (const auto& line : lines) targets.push_back(line.c_str());
        }
        rc = odin_eval_live(targets.empty() ? nullptr : targets.data(), targets.size(), &opts,
                            protocol, rate_per_s, csv, sum, &summary);
    } else {
        rc = odin_eval_sim(&opts, csv, sum, &summary);
    }
    if (rc != ODIN_OK) return report_error(rc);

    if (json) {
        std::printf("{\"total\":%llu,\"failures\":%llu,\"within_0.5pct\":%.6f,"
                    "\"within_15pct\":%.6f}\n",
                    static_cast<unsigned long long>(summary.total),
                    static_cast<unsigned long long>(summary.failures), summary.within_half_pct,
                    summary.within_15_pct);
    } else {
        std::printf("samples: %llu (failures: %llu)\n",
                    static_cast<unsigned long long>(summary.total),
                    static_cast<unsigned long long>(summary.failures));
        std::printf("within 0.5%%: %.1f%%\n", summary.within_half_pct * 100.0);
        std::printf("within 15%%:  %.1f%%\n", summary.within_15_pct * 100.0);
        if (csv) std::printf("histogram: %s\n", csv);
        if (sum) std::printf("summary: %s\n", sum);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ODIN: tamper-resistant RTT estimation and broadcast scheduling"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    app.set_version_flag("--version", odin_version());

    bool json = false;
    app.add_flag("--json", json, "machine-readable output where supported");
    std::string config_path;
    app.add_option("--config", config_path, "JSON configuration file")
        ->check(CLI::ExistingFile);

    odin_sched_options sched;
    odin_sched_options_init(&sched);

    std::string transport_text = "live";
    uint64_t seed = 0;

    auto add_transport_flags = [&](CLI::App* cmd) {
        cmd->add_option("--transport", transport_text, "live or sim:<topology.json>");
        cmd->add_option("--seed", seed, "simulation rng seed (sim transport only)");
    };

    std::string mode_text;
    double delta_ms = -1, initial_ms = -1, prior_ms = -1, timeout_ms = -1;
    int retries = -1, probes = -1, max_ttl = -1;
    bool use_udp = false;

    auto add_estimate_flags = [&](CLI::App* cmd) {
        cmd->add_option("--mode", mode_text, "strict or permissive");
        cmd->add_option("--delta", delta_ms, "incremental increase step (ms)");
        cmd->add_option("--initial-estimate", initial_ms, "initial estimate (ms)");
        cmd->add_option("--retries", retries, "strict-mode trace attempts");
        cmd->add_option("--probes", probes, "probes per ttl");
        cmd->add_option("--timeout-ms", timeout_ms, "per-probe timeout");
        cmd->add_option("--max-ttl", max_ttl, "hop budget");
        cmd->add_flag("--udp", use_udp, "UDP high-port probes instead of ICMP");
    };

    // trace
    std::string trace_addr;
    CLI::App* trace = app.add_subcommand("trace", "hop-by-hop path to an address");
    trace->add_option("address", trace_addr, "IPv4 target")->required();
    add_transport_flags(trace);
    trace->add_option("--probes", probes, "probes per ttl");
    trace->add_option("--timeout-ms", timeout_ms, "per-probe timeout");
    trace->add_option("--max-ttl", max_ttl, "hop budget");
    trace->add_flag("--udp", use_udp, "UDP high-port probes instead of ICMP");

    // estimate
    std::string est_addr;
    CLI::App* estimate = app.add_subcommand("estimate", "indirect RTT estimate for an address");
    estimate->add_option("address", est_addr, "IPv4 target")->required();
    estimate->add_option("--prior", prior_ms,
                         "prior rtt_est (ms); engages the update rule");
    add_transport_flags(estimate);
    add_estimate_flags(estimate);

    // watch
    std::string peers_path;
    double duration_s = -1;
    int max_assessments = 0;
    CLI::App* watch = app.add_subcommand("watch", "assessment loops over a peers file");
    watch->add_option("peers", peers_path, "file with one IPv4 per line")
        ->required()
        ->check(CLI::ExistingFile);
    add_transport_flags(watch);
    add_estimate_flags(watch);
    watch->add_option("--duration-s", duration_s, "stop after this much (virtual) time");
    watch->add_option("--max-assessments", max_assessments, "stop each peer after N assessments");
    watch->add_option("--max-delay", sched.max_delay_ms, "broadcast delay budget (ms)");
    watch->add_option("--max-interval", sched.max_interval_s, "max assessment interval (s)");
    bool disabled = false;
    watch->add_flag("--disabled", disabled, "run with delay scheduling disabled");

    // simulate
    std::string scenario_path, log_out;
    bool quiet = false;
    CLI::App* simulate = app.add_subcommand("simulate", "run a scenario file under virtual time");
    simulate->add_option("scenario", scenario_path, "scenario JSON")->required()
        ->check(CLI::ExistingFile);
    simulate->add_option("--seed", seed, "override the scenario seed");
    simulate->add_option("--log-out", log_out, "write the delivery log here");
    simulate->add_flag("--quiet", quiet, "suppress per-assessment lines");

    // eval
    bool live_eval = false;
    bool neighbors_unreachable = false;
    int samples = 0;
    double rate_per_s = 1.0;
    double jitter = -1, last_hop_min = -1, last_hop_max = -1, deviant_fraction = -1,
           deviation = -1;
    std::string targets_path, csv_path = "odin_eval.csv", summary_path;
    CLI::App* eval = app.add_subcommand("eval", "estimate-accuracy harness");
    eval->add_option("--mode", mode_text, "strict or permissive");
    eval->add_option("--samples", samples, "simulated sample count (or live random draws)");
    eval->add_option("--targets", targets_path, "live targets file (one IPv4 per line)")
        ->check(CLI::ExistingFile);
    eval->add_flag("--live", live_eval, "probe the real network (off by default)");
    eval->add_option("--seed", seed, "simulation seed");
    eval->add_option("--out", csv_path, "histogram CSV path");
    eval->add_option("--summary", summary_path, "JSON summary path");
    eval->add_option("--rate", rate_per_s, "live targets per second");
    eval->add_flag("--udp", use_udp, "UDP probes for live mode");
    eval->add_flag("--neighbors-unreachable", neighbors_unreachable,
                   "simulate subnets where only the target answers");
    eval->add_option("--retries", retries, "strict-mode trace attempts");
    eval->add_option("--jitter", jitter, "simulated link jitter (ms)");
    eval->add_option("--last-hop-min", last_hop_min, "min last-hop one-way latency (ms)");
    eval->add_option("--last-hop-max", last_hop_max, "max last-hop one-way latency (ms)");
    eval->add_option("--deviant-fraction", deviant_fraction,
                     "share of hosts off their subnet's base last-hop latency");
    eval->add_option("--deviation", deviation, "max last-hop deviation (ms)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    // Configuration file first, explicit flags on top.
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        std::stringstream buf;
        buf << in.rdbuf();
        odin_status rc = odin_sched_options_from_json(buf.str().c_str(), &sched);
        if (rc != ODIN_OK) {
            std::fprintf(stderr, "error: config %s: %s\n", config_path.c_str(),
                         odin_last_error());
            return 1;
        }
    }
    if (!mode_text.empty()) {
        if (mode_text == "strict") {
            sched.estimate.mode = ODIN_MODE_STRICT;
        } else if (mode_text == "permissive") {
            sched.estimate.mode = ODIN_MODE_PERMISSIVE;
        } else {
            std::fprintf(stderr, "error: --mode must be strict or permissive\n");
            return 1;
        }
    }
    if (delta_ms > 0) sched.estimate.delta_ms = delta_ms;
    if (initial_ms >= 0) sched.estimate.initial_estimate_ms = initial_ms;
    if (retries > 0) sched.estimate.strict_max_retries = retries;
    if (probes > 0) sched.estimate.probe.probes_per_ttl = probes;
    if (timeout_ms > 0) sched.estimate.probe.timeout_ms = timeout_ms;
    if (max_ttl > 0) sched.estimate.probe.max_ttl = max_ttl;
    if (use_udp) sched.estimate.probe.protocol = ODIN_PROTO_UDP;

    TransportChoice choice;
    if (!parse_transport(transport_text, &choice)) {
        std::fprintf(stderr, "error: --transport must be 'live' or 'sim:<topology.json>'\n");
        return 1;
    }
    bool seed_set = false;
    for (CLI::App* sub : {trace, estimate, watch, simulate, eval})
        if (sub->count("--seed")) seed_set = true;
    choice.seed = seed;
    choice.seed_set = seed_set;
    if (choice.live && seed_set && !simulate->parsed() && !eval->parsed() && !live_eval) {
        // Live randomness must stay cryptographic; a seed only means something
        // for simulated transports.
        std::fprintf(stderr, "error: --seed requires a sim transport\n");
        return 1;
    }

    if (trace->parsed()) {
        sched.estimate.probe.protocol = use_udp ? ODIN_PROTO_UDP : ODIN_PROTO_ICMP;
        return cmd_trace(choice, trace_addr, sched.estimate.probe, json);
    }
    if (estimate->parsed()) {
        odin_estimate_options opts = sched.estimate;
        if (!choice.live) {
            opts.seeded = 1;
            opts.seed = choice.seed ^ 0x5eedf00dULL;
        }
        return cmd_estimate(choice, est_addr, prior_ms, opts, json);
    }
    if (watch->parsed()) {
        if (disabled) sched.enabled = 0;
        if (!choice.live) {
            sched.estimate.seeded = 1;
            sched.estimate.seed = choice.seed ^ 0x5eedf00dULL;
        }
        return cmd_watch(choice, peers_path, sched, duration_s, max_assessments);
    }
    if (simulate->parsed()) {
        return cmd_simulate(scenario_path, simulate->count("--seed") > 0, seed, log_out, quiet);
    }
    if (eval->parsed()) {
        if (live_eval && seed_set) {
            std::fprintf(stderr, "error: --seed requires sim mode; live draws stay cryptographic\n");
            return 1;
        }
        if (!live_eval && !targets_path.empty()) {
            std::fprintf(stderr, "error: --targets implies --live (sim mode uses --samples)\n");
            return 1;
        }
        odin_eval_options opts;
        odin_eval_options_init(&opts);
        opts.mode = sched.estimate.mode;
        if (samples > 0) opts.samples = samples;
        if (seed_set) opts.seed = seed;
        if (retries > 0) opts.strict_max_retries = retries;
        opts.neighbors_unreachable = neighbors_unreachable ? 1 : 0;
        if (jitter >= 0) opts.link_jitter_ms = jitter;
        if (last_hop_min >= 0) opts.last_hop_min_ms = last_hop_min;
        if (last_hop_max > 0) opts.last_hop_max_ms = last_hop_max;
        if (deviant_fraction >= 0) opts.last_hop_deviant_fraction = deviant_fraction;
        if (deviation >= 0) opts.last_hop_deviation_ms = deviation;
        return cmd_eval(live_eval, targets_path, opts, use_udp ? ODIN_PROTO_UDP : ODIN_PROTO_ICMP,
                        rate_per_s, csv_path, summary_path, json);
    }
    return 1;
}
