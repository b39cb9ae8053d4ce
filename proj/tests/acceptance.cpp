// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criterion 8 shells out to the CLI binary (--cli) against the
// shipped scenario (--scenario).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "estimator.hpp"
#include "eval.hpp"
#include "rng.hpp"
#include "scenario.hpp"
#include "scheduler.hpp"
#include "simnet.hpp"
#include "topogen.hpp"

using namespace odin;

namespace {

std::string g_cli_path;
std::string g_scenario_path;

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

// --- criterion 1 ---------------------------------------------------------
// update_estimate returns observed when observed < prior and prior + delta
// otherwise, bit-exact over 1000 randomized triples, in under a second.
Check update_rule_exactness() {
    Check check;
    auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240917);
    std::uniform_real_distribution<double> value(0.0, 500.0);
    std::uniform_real_distribution<double> step(0.001, 5.0);
    for (int i = 0; i < 1000; ++i) {
        double prior = value(rng);
        double observed = i % 7 == 0 ? prior : value(rng);  // exercise the equal case too
        double delta = step(rng);
        double expected = observed < prior ? observed : prior + delta;
        double got = update_estimate(prior, observed, delta);
        check.require(got == expected, "triple " + std::to_string(i) + " diverged");
    }
    check.require(seconds_since(start) < 1.0, "ran over the 1s budget");
    return check;
}

// --- criterion 2 ---------------------------------------------------------
// 200 seeded estimates, both modes: zero packets addressed to the target.
Check non_interaction() {
    Check check;
    int performed = 0;
    for (int i = 0; i < 100; ++i) {
        for (EstimateMode mode : {EstimateMode::Strict, EstimateMode::Permissive}) {
            const uint64_t seed = 7000 + uint64_t(i) * 2 + (mode == EstimateMode::Strict ? 0 : 1);
            TopogenParams params;
            GeneratedTopology gen = generate_topology(params, seed);
            SimNet net(gen.spec, seed);
            SimTransport transport(net);
            SeededRandom rng(seed ^ 0xabcdef);

            EstimateConfig cfg;
            cfg.mode = mode;
            cfg.strict_max_retries = 16;
            cfg.probe.probes_per_ttl = 1;
            cfg.probe.max_ttl = 10;
            cfg.probe.timeout_ms = 250.0;
            PeerRttState prior;
            prior.peer_address = gen.target;
            prior.rtt_est_ms = 50.0;
            estimate_rtt(gen.target, prior, cfg, transport, rng);
            ++performed;

            net.drain_events();
            const std::string target_node = "h-" + gen.target.to_string();
            for (const auto& ev : net.delivery_log()) {
                check.require(ev.dst != gen.target,
                              "a packet was addressed to the target (seed " +
                                  std::to_string(seed) + ")");
                check.require(ev.node != target_node, "a packet reached the target's host");
            }
        }
    }
    check.require(performed == 200, "expected 200 estimates");
    return check;
}

// --- criterion 3 ---------------------------------------------------------
// The scripted DDoS run: inflation of exactly delta per assessment, the
// ceil(epsilon/delta) bound, one-assessment recovery, and an inflated control.
Check ddos_economics() {
    Check check;
    auto start = std::chrono::steady_clock::now();

    Scenario scenario = scenario_from_file(g_scenario_path);
    check.require(!scenario.adversaries.empty(), "scenario ships no adversary");
    const AdversaryConfig& attack = scenario.adversaries.front();
    const double epsilon = attack.epsilon_ms;
    const double delta = scenario.script.config.estimate.delta_ms;
    const int needed = static_cast<int>(std::ceil(epsilon / delta));
    check.require(needed == 200, "scenario is not the epsilon/delta=200 drill");

    ScenarioRun run = run_scenario(scenario, std::nullopt);
    const double truth = run.ground_truth_ms.at(0);

    double prev_est = truth;  // warm start
    int attack_steps = 0;
    int steps_to_gain = -1;
    bool recovered_immediately = false;
    bool control_inflated_after_one = false;
    double control = truth;
    bool control_first_done = false;

    for (const auto& outcome : run.assessments) {
        check.require(outcome.result.has_value(), "an assessment failed");
        if (!outcome.result) break;
        const double observed = outcome.result->observed_ms;
        const double est = outcome.rtt_est_ms;

        if (!control_first_done) {
            control = observed;  // a naive scheduler adopts whatever it saw
            control_first_done = true;
            control_inflated_after_one = control - truth >= epsilon;
        }

        if (observed > truth + 1e-9) {
            // Attack in sight: the estimate may climb by exactly delta.
            check.require(observed == truth + 2.0 * epsilon, "unexpected inflated observation");
            check.require(est == prev_est + delta, "estimate stepped by something other than delta");
            ++attack_steps;
            if (steps_to_gain < 0 && est - truth >= epsilon - 1e-9) steps_to_gain = attack_steps;
        } else {
            // Honest observation: immediate decrease (or the equal-case step).
            if (prev_est > truth)
                check.require(est == truth, "recovery took more than one assessment");
            if (outcome.at_ms >= attack.active_to_ms && !recovered_immediately)
                recovered_immediately = est == truth;
        }
        prev_est = est;
    }

    check.require(attack_steps >= needed, "the window held fewer than 200 assessments");
    check.require(steps_to_gain == needed,
                  "gained epsilon after " + std::to_string(steps_to_gain) +
                      " assessments instead of " + std::to_string(needed));
    check.require(recovered_immediately, "first post-attack assessment did not restore the truth");
    check.require(control_inflated_after_one, "control scheduler was not inflated after one look");
    check.require(seconds_since(start) < 10.0, "ran over the 10s budget");
    return check;
}

// --- criterion 4 ---------------------------------------------------------
Check strict_structural_accuracy() {
    Check check;

    EvalOptions symmetric;
    symmetric.mode = EstimateMode::Strict;
    symmetric.samples = 500;
    symmetric.seed = 1001;
    symmetric.estimate.strict_max_retries = 16;
    symmetric.estimate.probe.probes_per_ttl = 1;
    symmetric.estimate.probe.max_ttl = 10;
    symmetric.estimate.probe.timeout_ms = 250.0;
    EvalReport exact = run_simnet_evaluation(symmetric);
    check.require(exact.failures == 0, "symmetric run had estimation failures");
    check.require(exact.samples.size() == 500, "symmetric run lost samples");
    for (const auto& sample : exact.samples) {
        double err = relative_error(sample.estimate.estimate_ms, sample.rtt_a_actual_ms);
        check.require(std::fabs(err) <= 1e-9, "a symmetric error left zero");
    }

    EvalOptions skew = symmetric;
    skew.seed = 1002;
    skew.topology.last_hop_deviant_fraction = 0.02;
    skew.topology.last_hop_deviation_ms = 1.0;
    EvalReport noisy = run_simnet_evaluation(skew);
    check.require(noisy.failures == 0, "asymmetric run had estimation failures");
    double share = noisy.histogram.within_threshold.at(0.005);
    check.require(share >= 0.94, "only " + std::to_string(share) + " within 0.5%");
    return check;
}

// --- criterion 5 ---------------------------------------------------------
Check permissive_skew() {
    Check check;
    EvalOptions opts;
    opts.mode = EstimateMode::Permissive;
    opts.samples = 500;
    opts.seed = 1003;
    opts.topology.neighbors_reachable = false;
    opts.topology.last_hop_base_min_ms = 0.0;
    opts.topology.last_hop_base_max_ms = 3.0;
    opts.estimate.probe.probes_per_ttl = 1;
    opts.estimate.probe.max_ttl = 10;
    opts.estimate.probe.timeout_ms = 250.0;
    EvalReport report = run_simnet_evaluation(opts);
    check.require(report.failures == 0, "permissive run had estimation failures");
    check.require(report.samples.size() == 500, "permissive run lost samples");
    for (const auto& sample : report.samples) {
        double err = relative_error(sample.estimate.estimate_ms, sample.rtt_a_actual_ms);
        check.require(err <= 1e-12, "a permissive error was positive");
    }
    double mass = report.histogram.within_threshold.at(0.15);
    check.require(mass >= 0.90, "only " + std::to_string(mass) + " within 15%");
    check.require(mass < 1.0 + 1e-12, "threshold bookkeeping out of range");
    return check;
}

// --- criterion 6 ---------------------------------------------------------
Check equal_arrival() {
    Check check;
    TopologySpec spec;
    spec.routers = {{"r1", {Ipv4::parse_or_throw("10.0.0.1")}},
                    {"r2", {Ipv4::parse_or_throw("10.0.1.1")}},
                    {"r3", {Ipv4::parse_or_throw("10.0.2.1")}}};
    spec.links = {{"vantage", "r1", 5.0, 0.0}, {"r1", "r2", 10.0, 0.0}, {"r2", "r3", 4.0, 0.0}};
    for (int i = 0; i < 3; ++i) {
        SubnetSpec subnet;
        subnet.cidr_base = Ipv4{(10u << 24) | (uint32_t(i + 1) << 16)};
        subnet.gateway_router = "r" + std::to_string(i + 1);
        subnet.hosts = {{1, true, 0.0}};
        spec.subnets.push_back(subnet);
    }

    auto spread_with = [&](double perturb) {
        SimNet net(spec, 6);
        SchedulerConfig cfg;
        std::vector<Ipv4> peers = {Ipv4::parse_or_throw("10.1.0.1"),
                                   Ipv4::parse_or_throw("10.2.0.1"),
                                   Ipv4::parse_or_throw("10.3.0.1")};
        std::vector<PeerRttState> states;
        for (size_t i = 0; i < peers.size(); ++i) {
            PeerRttState st;
            st.peer_address = peers[i];
            st.rtt_est_ms = net.ground_truth_rtt(peers[i]) + (i == 1 ? perturb : 0.0);
            states.push_back(st);
        }
        auto decisions = schedule_broadcast(states, cfg, net.now_ms());
        double lo = 1e300, hi = -1e300;
        for (const auto& d : decisions) {
            SimNet::Outcome out = net.deliver_message(d.peer_address, d.send_delay_ms);
            if (!out.replied) return -1.0;
            lo = std::min(lo, out.reply_at_ms);
            hi = std::max(hi, out.reply_at_ms);
        }
        net.drain_events();
        return hi - lo;
    };

    check.require(spread_with(0.0) == 0.0, "exact estimates produced a nonzero spread");
    const double x = 7.25;
    check.require(spread_with(x) == x, "a perturbed estimate did not shift the spread by x");
    return check;
}

// --- criterion 7 ---------------------------------------------------------
Check interval_randomness() {
    Check check;
    SchedulerConfig cfg;
    cfg.max_interval_s = 180.0;
    CryptoRandom rng;
    const int draws = 10000;
    const int bins = 18;
    int counts[bins] = {0};
    for (int i = 0; i < draws; ++i) {
        double d = next_assessment_delay_ms(cfg, rng);
        check.require(d >= 0.0 && d < 180000.0, "a draw left [0, 180s)");
        int bin = static_cast<int>(d / 10000.0);
        if (bin >= 0 && bin < bins) ++counts[bin];
    }
    double expected = double(draws) / bins;
    double chi2 = 0.0;
    for (int b = 0; b < bins; ++b) {
        double diff = counts[b] - expected;
        chi2 += diff * diff / expected;
    }
    // df = 17 at significance 0.001.
    check.require(chi2 < 40.79, "chi-square " + std::to_string(chi2) + " exceeds 40.79");
    return check;
}

// --- criterion 8 ---------------------------------------------------------
Check simulate_determinism() {
    Check check;
    if (g_cli_path.empty()) {
        check.require(false, "no --cli path given");
        return check;
    }
    std::vector<std::string> logs;
    for (int i = 0; i < 3; ++i) {
        std::string log_path = "acceptance_sim_" + std::to_string(i) + ".log";
        std::string cmd = "\"" + g_cli_path + "\" simulate \"" + g_scenario_path +
                          "\" --seed 42 --quiet --log-out " + log_path + " > /dev/null 2>&1";
        int rc = std::system(cmd.c_str());
        check.require(rc == 0, "cmd_simulate exited nonzero");
        std::ifstream in(log_path, std::ios::binary);
        std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        check.require(!blob.empty(), "run produced an empty delivery log");
        logs.push_back(std::move(blob));
        std::remove(log_path.c_str());
    }
    check.require(logs[0] == logs[1] && logs[1] == logs[2],
                  "delivery logs differ across identical runs");
    return check;
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--cli") g_cli_path = argv[i + 1];
        if (std::string(argv[i]) == "--scenario") g_scenario_path = argv[i + 1];
    }
    if (g_scenario_path.empty()) g_scenario_path = "scenarios/alice_bob.json";

    struct Criterion {
        const char* name;
        std::function<Check()> run;
    };
    const Criterion criteria[] = {
        {"update-rule exactness (1000 triples, bit-exact, <1s)", update_rule_exactness},
        {"non-interaction (200 estimates, zero packets to the target)", non_interaction},
        {"DDoS economics (delta per assessment, 200 to gain epsilon, 1-step recovery)",
         ddos_economics},
        {"strict-mode structural accuracy (500 exact; >=94% within 0.5% under skew)",
         strict_structural_accuracy},
        {"permissive-mode skew (all errors <= 0; >=90% within 15%)", permissive_skew},
        {"equal arrival (spread 0; +x perturbation shifts spread by x)", equal_arrival},
        {"interval randomness (chi-square at 0.001 over [0,180s))", interval_randomness},
        {"simulate determinism (byte-identical logs across 3 runs)", simulate_determinism},
    };

    int failures = 0;
    int index = 0;
    for (const auto& criterion : criteria) {
        ++index;
        Check result;
        try {
            result = criterion.run();
        } catch (const std::exception& ex) {
            result.ok = false;
            result.detail = std::string("exception: ") + ex.what();
        }
        if (result.ok) {
            std::printf("[PASS] criterion %d: %s\n", index, criterion.name);
        } else {
            ++failures;
            std::printf("[FAIL] criterion %d: %s -- %s\n", index, criterion.name,
                        result.detail.c_str());
        }
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    else std::printf("all %d criteria passed\n", index);
    return failures == 0 ? 0 : 1;
}
