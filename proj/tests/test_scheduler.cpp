#include "doctest.h"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "error.hpp"
#include "scheduler.hpp"
#include "test_support.hpp"

using namespace odin;
using namespace odin::test;

namespace {

SchedulerConfig quick_sched() {
    SchedulerConfig cfg;
    cfg.estimate.probe.probes_per_ttl = 1;
    cfg.estimate.probe.max_ttl = 6;
    cfg.estimate.probe.timeout_ms = 250.0;
    return cfg;
}

PeerRttState peer_with(const char* address, double est) {
    PeerRttState state;
    state.peer_address = addr(address);
    state.rtt_est_ms = est;
    return state;
}

}  // namespace

TEST_CASE("assessment delay passes a forced draw through") {
    SchedulerConfig cfg;
    cfg.max_interval_s = 180.0;
    FakeRandom rng;
    rng.unit_script = {42.0 / 180.0};
    CHECK(next_assessment_delay_ms(cfg, rng) == doctest::Approx(42000.0).epsilon(1e-12));
}

TEST_CASE("assessment delays stay inside [0, max_interval)") {
    SchedulerConfig cfg;
    cfg.max_interval_s = 1.0;
    SeededRandom rng(6);
    for (int i = 0; i < 5000; ++i) {
        double d = next_assessment_delay_ms(cfg, rng);
        REQUIRE(d >= 0.0);
        REQUIRE(d < 1000.0);
    }
}

TEST_CASE("assessment delays average half the interval") {
    SchedulerConfig cfg;
    cfg.max_interval_s = 180.0;
    SeededRandom rng(12);
    const int draws = 10000;
    double sum = 0.0;
    for (int i = 0; i < draws; ++i) sum += next_assessment_delay_ms(cfg, rng);
    double mean_s = sum / draws / 1000.0;
    // sigma of the mean = (180/sqrt(12))/sqrt(10000) s
    double sigma = 180.0 / std::sqrt(12.0) / std::sqrt(double(draws));
    CHECK(std::fabs(mean_s - 90.0) <= 3.0 * sigma);
}

TEST_CASE("broadcast delay is the budget minus the estimate, clamped") {
    SchedulerConfig cfg;
    cfg.max_delay_ms = 300.0;
    CHECK(broadcast_delay_ms(100.0, cfg) == 200.0);
    CHECK(broadcast_delay_ms(0.0, cfg) == 300.0);
    CHECK(broadcast_delay_ms(350.0, cfg) == 0.0);
    CHECK_THROWS_AS(broadcast_delay_ms(-1.0, cfg), Error);
}

TEST_CASE("schedule_broadcast equalizes implied arrivals") {
    SchedulerConfig cfg = quick_sched();
    std::vector<PeerRttState> peers = {peer_with("10.1.0.1", 50.0), peer_with("10.1.0.2", 150.0),
                                       peer_with("10.1.0.3", 290.0)};
    auto decisions = schedule_broadcast(peers, cfg, 1000.0);
    REQUIRE(decisions.size() == 3);
    CHECK(decisions[0].send_delay_ms == 250.0);
    CHECK(decisions[1].send_delay_ms == 150.0);
    CHECK(decisions[2].send_delay_ms == 10.0);
    for (const auto& d : decisions) {
        CHECK(d.send_delay_ms == std::max(0.0, cfg.max_delay_ms - d.computed_from_ms));
        CHECK(d.decided_at_ms + d.send_delay_ms + d.computed_from_ms == 1300.0);
    }
}

TEST_CASE("single peer arrives at now plus the full budget") {
    auto decisions = schedule_broadcast({peer_with("10.1.0.1", 120.0)}, quick_sched(), 0.0);
    REQUIRE(decisions.size() == 1);
    CHECK(decisions[0].send_delay_ms + decisions[0].computed_from_ms == 300.0);
}

TEST_CASE("disabled scheduling zeroes every delay") {
    SchedulerConfig cfg = quick_sched();
    cfg.enabled = false;
    auto decisions = schedule_broadcast(
        {peer_with("10.1.0.1", 50.0), peer_with("10.1.0.2", 250.0)}, cfg, 0.0);
    for (const auto& d : decisions) CHECK(d.send_delay_ms == 0.0);
}

TEST_CASE("higher estimates never get longer delays") {
    SchedulerConfig cfg = quick_sched();
    SeededRandom rng(5);
    double prev_est = 0.0, prev_delay = broadcast_delay_ms(0.0, cfg);
    for (int i = 0; i < 200; ++i) {
        double est = prev_est + rng.unit() * 5.0;
        double delay = broadcast_delay_ms(est, cfg);
        CHECK(delay <= prev_delay);
        prev_est = est;
        prev_delay = delay;
    }
}

TEST_CASE("empty peer set is rejected") {
    CHECK_THROWS_AS(schedule_broadcast({}, quick_sched(), 0.0), Error);
}

TEST_CASE("failed assessments retain the estimate and record the failure") {
    SimNet net(forty_ms_topology(), 4);
    SimTransport transport(net);
    SeededRandom rng(4);
    // No route to this peer at all: every probe times out.
    PeerRttState state = peer_with("9.9.9.9", 77.0);
    SchedulerConfig cfg = quick_sched();
    AssessmentOutcome outcome = run_one_assessment(state, cfg, transport, rng, net.now_ms());
    CHECK_FALSE(outcome.result.has_value());
    CHECK(outcome.status == Status::NoReachableHop);
    CHECK(state.rtt_est_ms == 77.0);
    REQUIRE(state.history.size() == 1);
    CHECK_FALSE(state.history.back().result.has_value());
}

TEST_CASE("driver runs independent randomized loops per peer") {
    SimNet net(forty_ms_topology(), 11);
    SchedulerConfig cfg = quick_sched();
    cfg.max_interval_s = 60.0;
    AssessmentDriver driver(net, cfg, {addr("203.0.113.77"), addr("203.0.113.9")}, 11);

    // Until the first randomized interval elapses the initial estimate holds.
    driver.run_until(1.0);
    CHECK(driver.state(addr("203.0.113.77")).rtt_est_ms == cfg.estimate.initial_estimate_ms);
    CHECK(driver.state(addr("203.0.113.77")).history.empty());

    int count = 0;
    driver.run_until(20.0 * 60.0 * 1000.0, [&](const AssessmentOutcome& outcome) {
        ++count;
        CHECK((outcome.peer == addr("203.0.113.77") || outcome.peer == addr("203.0.113.9")));
    });
    CHECK(count > 10);
    CHECK_FALSE(driver.state(addr("203.0.113.77")).history.empty());
    CHECK_FALSE(driver.state(addr("203.0.113.9")).history.empty());
    // Estimates creep toward the 40ms truth from 0.5 by delta per assessment.
    double est = driver.state(addr("203.0.113.77")).rtt_est_ms;
    CHECK(est > cfg.estimate.initial_estimate_ms);
    CHECK(est <= 40.0 + cfg.estimate.delta_ms);
}

TEST_CASE("equal arrival in virtual time, and a perturbed estimate shifts it") {
    // Peers at three different depths: RTTs 10, 30, and 38 ms.
    TopologySpec spec;
    spec.routers = {{"r1", {addr("10.0.0.1")}},
                    {"r2", {addr("10.0.1.1")}},
                    {"r3", {addr("10.0.2.1")}}};
    spec.links = {{"vantage", "r1", 5.0, 0.0}, {"r1", "r2", 10.0, 0.0}, {"r2", "r3", 4.0, 0.0}};
    for (int i = 0; i < 3; ++i) {
        SubnetSpec subnet;
        subnet.cidr_base = Ipv4{(10u << 24) | (static_cast<uint32_t>(i + 1) << 16)};
        subnet.gateway_router = "r" + std::to_string(i + 1);
        subnet.hosts = {{1, true, 0.0}};
        spec.subnets.push_back(subnet);
    }
    SimNet net(spec, 3);
    SchedulerConfig cfg = quick_sched();

    std::vector<Ipv4> peers = {addr("10.1.0.1"), addr("10.2.0.1"), addr("10.3.0.1")};
    AssessmentDriver driver(net, cfg, peers, 3);
    for (const auto& p : peers) driver.set_initial_estimate(p, net.ground_truth_rtt(p));

    auto completions = [&](const std::vector<ScheduleDecision>& decisions) {
        std::vector<double> done;
        for (const auto& d : decisions) {
            SimNet::Outcome out = net.deliver_message(d.peer_address, d.send_delay_ms);
            REQUIRE(out.replied);
            done.push_back(out.reply_at_ms);
        }
        net.drain_events();
        return done;
    };

    auto exact = completions(driver.decide_broadcast());
    double lo = *std::min_element(exact.begin(), exact.end());
    double hi = *std::max_element(exact.begin(), exact.end());
    CHECK(hi - lo == 0.0);

    // Perturb one estimate by +7ms: its exchange completes 7ms earlier,
    // so the spread becomes exactly 7.
    driver.set_initial_estimate(peers[1], net.ground_truth_rtt(peers[1]) + 7.0);
    auto skewed = completions(driver.decide_broadcast());
    lo = *std::min_element(skewed.begin(), skewed.end());
    hi = *std::max_element(skewed.begin(), skewed.end());
    CHECK(hi - lo == 7.0);
}

TEST_CASE("live-style loop obeys stop flags and assessment caps") {
    SimNet net(forty_ms_topology(), 9);
    SimTransport transport(net);
    SeededRandom rng(9);
    WallClock clock;
    SchedulerConfig cfg = quick_sched();
    cfg.max_interval_s = 0.002;  // keep the real sleeps tiny

    PeerRttState state = peer_with("203.0.113.77", cfg.estimate.initial_estimate_ms);
    std::atomic<bool> stop{false};
    int seen = 0;
    run_assessment_loop(state, cfg, transport, rng, clock, stop, 3,
                        [&](const AssessmentOutcome&) { ++seen; });
    CHECK(seen == 3);
    CHECK(state.history.size() == 3);

    stop.store(true);
    run_assessment_loop(state, cfg, transport, rng, clock, stop, 0,
                        [&](const AssessmentOutcome&) { ++seen; });
    CHECK(seen == 3);  // stopped before any further assessment
}

TEST_CASE("overlapping peer schedules never move virtual time backwards") {
    // Intervals far shorter than an assessment's probe time force peers to
    // come due while another assessment holds the clock.
    SimNet net(forty_ms_topology(/*neighbors_reachable=*/false), 14);
    SchedulerConfig cfg = quick_sched();
    cfg.max_interval_s = 0.5;
    AssessmentDriver driver(net, cfg,
                            {addr("203.0.113.77"), addr("203.0.113.9"), addr("203.0.113.42")},
                            14);
    driver.run_until(30.0 * 1000.0);
    net.drain_events();
    double prev = -1.0;
    for (const auto& ev : net.delivery_log()) {
        CHECK(ev.time_ms >= prev);
        prev = ev.time_ms;
    }
    CHECK(net.delivery_log().size() > 50);
}

TEST_CASE("peer table snapshots") {
    PeerTable table;
    CHECK_FALSE(table.snapshot(addr("1.2.3.4")).has_value());
    table.upsert(peer_with("1.2.3.4", 10.0));
    table.upsert(peer_with("5.6.7.8", 20.0));
    table.upsert(peer_with("1.2.3.4", 15.0));
    auto all = table.snapshot_all();
    REQUIRE(all.size() == 2);
    CHECK(all[0].rtt_est_ms == 15.0);
    CHECK(all[1].rtt_est_ms == 20.0);
    CHECK(table.snapshot(addr("1.2.3.4"))->rtt_est_ms == 15.0);
}

TEST_CASE("scheduler config validation") {
    SchedulerConfig cfg;
    cfg.max_delay_ms = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = SchedulerConfig{};
    cfg.max_interval_s = -1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
}
