#include "doctest.h"

#include "error.hpp"
#include "scenario.hpp"
#include "test_support.hpp"

using namespace odin;
using namespace odin::test;

namespace {

const char* kMiniScenario = R"({
  "topology": {
    "routers": [
      {"id": "r1", "addresses": ["198.18.1.1"]},
      {"id": "gw", "addresses": ["198.18.1.2"]}
    ],
    "links": [
      {"endpoint_a": "vantage", "endpoint_b": "r1", "one_way_latency_ms": 5.0, "jitter_ms": 0.0},
      {"endpoint_a": "r1", "endpoint_b": "gw", "one_way_latency_ms": 5.0, "jitter_ms": 0.0}
    ],
    "subnets": [
      {"cidr": "203.0.113.0/24", "gateway_router": "gw", "hosts": [
        {"last_octet": 7, "reachable": true, "one_way_last_hop_ms": 0.0},
        {"last_octet": 70, "reachable": true, "one_way_last_hop_ms": 0.0}
      ]}
    ]
  },
  "adversaries": [
    {"kind": "ROUTER_DDOS", "target": "gw", "epsilon_ms": 5.0,
     "active_from_ms": 0.0, "active_to_ms": 600000.0}
  ],
  "script": {
    "targets": ["203.0.113.7"],
    "duration_s": 1200,
    "seed": 9,
    "warm_start": true,
    "broadcast_at_s": [1100],
    "config": {
      "enabled": true, "max_delay_ms": 300, "max_interval_s": 60,
      "delta_ms": 0.1, "mode": "permissive", "initial_estimate_ms": 0.5,
      "probes_per_ttl": 1, "probe_timeout_ms": 250, "max_ttl": 5
    }
  }
})";

}  // namespace

TEST_CASE("scenario parsing fills the script") {
    Scenario scenario = scenario_from_json(kMiniScenario);
    CHECK(scenario.topology.routers.size() == 2);
    REQUIRE(scenario.adversaries.size() == 1);
    CHECK(scenario.adversaries[0].kind == AdversaryKind::RouterDdos);
    REQUIRE(scenario.script.targets.size() == 1);
    CHECK(scenario.script.targets[0] == addr("203.0.113.7"));
    CHECK(scenario.script.duration_s == 1200.0);
    CHECK(scenario.script.seed == 9);
    CHECK(scenario.script.warm_start);
    CHECK(scenario.script.config.max_interval_s == 60.0);
    CHECK(scenario.script.config.estimate.mode == EstimateMode::Permissive);
}

TEST_CASE("scenario parser rejects unknown keys and bad scripts") {
    CHECK_THROWS_AS(scenario_from_json(R"({"script": {"targets": ["1.2.3.4"]}})"), Error);
    CHECK_THROWS_AS(
        scenario_from_json(
            R"({"topology": {"routers": [], "links": [], "subnets": []},
                "script": {"targets": ["1.2.3.4"]}, "extra": 1})"),
        Error);
    CHECK_THROWS_AS(
        scenario_from_json(
            R"({"topology": {"routers": [], "links": [], "subnets": []},
                "script": {"targets": [], "bogus": 1}})"),
        Error);
}

TEST_CASE("scheduler config json applies every key and rejects strangers") {
    SchedulerConfig cfg = scheduler_config_from_json(
        R"({"enabled": false, "max_delay_ms": 250, "max_interval_s": 30,
            "delta_ms": 0.5, "mode": "strict", "initial_estimate_ms": 2.0,
            "strict_max_retries": 3})");
    CHECK_FALSE(cfg.enabled);
    CHECK(cfg.max_delay_ms == 250.0);
    CHECK(cfg.max_interval_s == 30.0);
    CHECK(cfg.estimate.delta_ms == 0.5);
    CHECK(cfg.estimate.mode == EstimateMode::Strict);
    CHECK(cfg.estimate.initial_estimate_ms == 2.0);
    CHECK(cfg.estimate.strict_max_retries == 3);
    CHECK_THROWS_AS(scheduler_config_from_json(R"({"max_delay": 300})"), Error);
}

TEST_CASE("scenario runs are deterministic per seed") {
    Scenario scenario = scenario_from_json(kMiniScenario);
    ScenarioRun a = run_scenario(scenario, std::nullopt);
    ScenarioRun b = run_scenario(scenario, std::nullopt);
    CHECK(a.log_text == b.log_text);
    CHECK(a.assessments.size() == b.assessments.size());
    ScenarioRun c = run_scenario(scenario, 1234);
    CHECK(c.seed == 1234);
    CHECK(a.log_text != c.log_text);
}

TEST_CASE("warm start, attack inflation, and recovery") {
    Scenario scenario = scenario_from_json(kMiniScenario);
    ScenarioRun run = run_scenario(scenario, std::nullopt);
    REQUIRE(run.ground_truth_ms.size() == 1);
    const double truth = run.ground_truth_ms[0];
    CHECK(truth == 20.0);

    REQUIRE(!run.assessments.empty());
    bool saw_attack_step = false;
    for (const auto& outcome : run.assessments) {
        REQUIRE(outcome.result.has_value());
        if (outcome.at_ms < 600000.0) {
            // Inflated observations can only buy delta per assessment.
            CHECK(outcome.result->observed_ms == truth + 10.0);
            saw_attack_step = true;
        }
    }
    CHECK(saw_attack_step);

    // After the attack window closes the estimate snaps back to the truth.
    const AssessmentOutcome* first_after = nullptr;
    for (const auto& outcome : run.assessments)
        if (outcome.at_ms >= 600000.0) {
            first_after = &outcome;
            break;
        }
    REQUIRE(first_after != nullptr);
    CHECK(first_after->rtt_est_ms == truth);

    REQUIRE(run.broadcasts.size() == 1);
    REQUIRE(run.broadcasts[0].decisions.size() == 1);
    CHECK(run.broadcasts[0].completion_ms[0] > 0.0);
}

TEST_CASE("scenario log text renders one line per event") {
    Scenario scenario = scenario_from_json(kMiniScenario);
    ScenarioRun run = run_scenario(scenario, std::nullopt);
    size_t newlines = 0;
    for (char ch : run.log_text)
        if (ch == '\n') ++newlines;
    CHECK(newlines > run.assessments.size());  // several packets per assessment
    CHECK(run.log_text.find("MSG_ACK") != std::string::npos);
    CHECK(run.log_text.find("ADVERSARY") != std::string::npos);
}
