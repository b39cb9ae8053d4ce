#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scheduler.hpp"

namespace odin {

// Scenario document: a topology, an adversary cast, and a script of ODIN
// interactions to run under virtual time.
struct ScenarioScript {
    std::vector<Ipv4> targets;
    SchedulerConfig config;
    double duration_s = 600.0;
    uint64_t seed = 1;
    bool warm_start = false;  // seed each target's estimate with its true RTT
    std::vector<double> broadcast_at_s;
};

struct Scenario {
    TopologySpec topology;
    std::vector<AdversaryConfig> adversaries;
    ScenarioScript script;
};

Scenario scenario_from_json(const std::string& json_text);
Scenario scenario_from_file(const std::string& path);

// Scheduler/estimator configuration keys (enabled, max_delay_ms,
// max_interval_s, delta_ms, mode, initial_estimate_ms, ...), shared between
// scenario scripts and the CLI config file.
SchedulerConfig scheduler_config_from_json(const std::string& json_text);

struct BroadcastRound {
    double at_ms = 0.0;
    std::vector<ScheduleDecision> decisions;
    std::vector<double> completion_ms;  // ack time per decision; <0 when no ack came back
};

struct ScenarioRun {
    std::vector<AssessmentOutcome> assessments;
    std::vector<PeerRttState> final_states;
    std::vector<BroadcastRound> broadcasts;
    std::vector<double> ground_truth_ms;  // parallel to scenario targets
    std::string log_text;
    uint64_t seed = 0;
};

ScenarioRun run_scenario(const Scenario& scenario, std::optional<uint64_t> seed_override,
                         const AssessmentCallback& on_assessment = nullptr);

}  // namespace odin
