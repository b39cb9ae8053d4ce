#include "scenario.hpp"

#include <algorithm>

#include "error.hpp"
#include "json.hpp"
#include "json_io.hpp"

namespace odin {

namespace {

using nlohmann::json;

json parse_doc(const std::string& text, const char* what) {
    json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) raise(Status::ParseFailure, std::string("malformed JSON in ") + what);
    return doc;
}

SchedulerConfig config_from(const json& obj) {
    SchedulerConfig cfg;
    if (!obj.is_object()) raise(Status::ParseFailure, "config must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const std::string& key = it.key();
        const json& v = it.value();
        auto number = [&]() -> double {
            if (!v.is_number()) raise(Status::ParseFailure, "config key '" + key + "' must be a number");
            return v.get<double>();
        };
        if (key == "enabled") {
            if (!v.is_boolean()) raise(Status::ParseFailure, "config key 'enabled' must be a bool");
            cfg.enabled = v.get<bool>();
        } else if (key == "max_delay_ms") {
            cfg.max_delay_ms = number();
        } else if (key == "max_interval_s") {
            cfg.max_interval_s = number();
        } else if (key == "delta_ms") {
            cfg.estimate.delta_ms = number();
        } else if (key == "initial_estimate_ms") {
            cfg.estimate.initial_estimate_ms = number();
        } else if (key == "strict_max_retries") {
            cfg.estimate.strict_max_retries = static_cast<int>(number());
        } else if (key == "mode") {
            if (!v.is_string()) raise(Status::ParseFailure, "config key 'mode' must be a string");
            auto mode = parse_estimate_mode(v.get<std::string>());
            if (!mode) raise(Status::ParseFailure, "mode must be 'strict' or 'permissive'");
            cfg.estimate.mode = *mode;
        } else if (key == "probes_per_ttl") {
            cfg.estimate.probe.probes_per_ttl = static_cast<int>(number());
        } else if (key == "probe_timeout_ms") {
            cfg.estimate.probe.timeout_ms = number();
        } else if (key == "max_ttl") {
            cfg.estimate.probe.max_ttl = static_cast<int>(number());
        } else {
            raise(Status::ParseFailure, "unknown config key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

}  // namespace

SchedulerConfig scheduler_config_from_json(const std::string& json_text) {
    return config_from(parse_doc(json_text, "config"));
}

Scenario scenario_from_json(const std::string& json_text) {
    json doc = parse_doc(json_text, "scenario");
    if (!doc.is_object() || !doc.contains("topology") || !doc.contains("script"))
        raise(Status::ParseFailure, "scenario needs 'topology' and 'script'");
    for (auto it = doc.begin(); it != doc.end(); ++it)
        if (it.key() != "topology" && it.key() != "adversaries" && it.key() != "script")
            raise(Status::ParseFailure, "unknown key '" + it.key() + "' in scenario");

    Scenario scenario;
    scenario.topology = topology_from_json(doc["topology"].dump());
    if (doc.contains("adversaries"))
        scenario.adversaries = adversaries_from_json_array(doc["adversaries"].dump());

    const json& script = doc["script"];
    for (auto it = script.begin(); it != script.end(); ++it) {
        const std::string& key = it.key();
        if (key != "targets" && key != "config" && key != "duration_s" && key != "seed" &&
            key != "warm_start" && key != "broadcast_at_s")
            raise(Status::ParseFailure, "unknown key '" + key + "' in script");
    }
    if (!script.contains("targets") || !script["targets"].is_array() || script["targets"].empty())
        raise(Status::ParseFailure, "script needs a non-empty targets array");
    for (const auto& t : script["targets"]) {
        if (!t.is_string()) raise(Status::ParseFailure, "script targets must be address strings");
        scenario.script.targets.push_back(Ipv4::parse_or_throw(t.get<std::string>()));
    }
    if (script.contains("config")) scenario.script.config = config_from(script["config"]);
    scenario.script.duration_s = script.value("duration_s", 600.0);
    scenario.script.seed = script.value("seed", 1ull);
    scenario.script.warm_start = script.value("warm_start", false);
    if (script.contains("broadcast_at_s"))
        for (const auto& t : script["broadcast_at_s"])
            scenario.script.broadcast_at_s.push_back(t.get<double>());
    if (scenario.script.duration_s <= 0.0)
        raise(Status::ParseFailure, "duration_s must be > 0");
    return scenario;
}

Scenario scenario_from_file(const std::string& path) {
    return scenario_from_json(read_file(path));
}

ScenarioRun run_scenario(const Scenario& scenario, std::optional<uint64_t> seed_override,
                         const AssessmentCallback& on_assessment) {
    ScenarioRun run;
    run.seed = seed_override.value_or(scenario.script.seed);

    SimNet net(scenario.topology, run.seed);
    for (const auto& adv : scenario.adversaries) net.install_adversary(adv);

    AssessmentDriver driver(net, scenario.script.config, scenario.script.targets,
                            run.seed ^ 0xd1b54a32d192ed03ull);
    for (const auto& target : scenario.script.targets) {
        run.ground_truth_ms.push_back(net.ground_truth_rtt(target));
        if (scenario.script.warm_start)
            driver.set_initial_estimate(target, net.ground_truth_rtt(target));
    }

    auto record = [&](const AssessmentOutcome& outcome) {
        run.assessments.push_back(outcome);
        if (on_assessment) on_assessment(outcome);
    };

    std::vector<double> broadcast_ms;
    for (double s : scenario.script.broadcast_at_s) broadcast_ms.push_back(s * 1000.0);
    std::sort(broadcast_ms.begin(), broadcast_ms.end());

    const double end_ms = scenario.script.duration_s * 1000.0;
    for (double at : broadcast_ms) {
        if (at > end_ms) break;
        driver.run_until(at, record);
        BroadcastRound round;
        round.at_ms = net.now_ms();
        round.decisions = driver.decide_broadcast();
        for (const auto& decision : round.decisions) {
            SimNet::Outcome msg = net.deliver_message(decision.peer_address, decision.send_delay_ms);
            round.completion_ms.push_back(msg.replied ? msg.reply_at_ms : -1.0);
        }
        run.broadcasts.push_back(std::move(round));
    }
    driver.run_until(end_ms, record);
    net.drain_events();

    run.final_states = driver.states();
    run.log_text = net.render_log();
    return run;
}

}  // namespace odin
