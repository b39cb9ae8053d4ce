#include "scheduler.hpp"

#include <algorithm>

#include "error.hpp"

namespace odin {

void SchedulerConfig::validate() const {
    if (max_delay_ms <= 0.0) raise(Status::InvalidArgument, "max_delay_ms must be > 0");
    if (max_interval_s <= 0.0) raise(Status::InvalidArgument, "max_interval_s must be > 0");
    estimate.validate();
}

double next_assessment_delay_ms(const SchedulerConfig& cfg, RandomSource& rng) {
    return rng.uniform_ms(cfg.max_interval_s * 1000.0);
}

double broadcast_delay_ms(double rtt_est_ms, const SchedulerConfig& cfg) {
    if (rtt_est_ms < 0.0) raise(Status::InvalidArgument, "rtt_est_ms must be >= 0");
    return std::max(0.0, cfg.max_delay_ms - rtt_est_ms);
}

std::vector<ScheduleDecision> schedule_broadcast(const std::vector<PeerRttState>& peers,
                                                 const SchedulerConfig& cfg, double now_ms) {
    if (peers.empty()) raise(Status::InvalidArgument, "schedule_broadcast needs at least one peer");
    std::vector<ScheduleDecision> decisions;
    decisions.reserve(peers.size());
    for (const auto& peer : peers) {
        ScheduleDecision d;
        d.peer_address = peer.peer_address;
        d.computed_from_ms = peer.rtt_est_ms;
        d.send_delay_ms = cfg.enabled ? broadcast_delay_ms(peer.rtt_est_ms, cfg) : 0.0;
        d.decided_at_ms = now_ms;
        decisions.push_back(d);
    }
    return decisions;
}

AssessmentOutcome run_one_assessment(PeerRttState& state, const SchedulerConfig& cfg,
                                     ProbeTransport& transport, RandomSource& rng, double now_ms) {
    AssessmentOutcome outcome;
    outcome.peer = state.peer_address;
    outcome.at_ms = now_ms;
    try {
        EstimateResult result = estimate_rtt(state.peer_address, state, cfg.estimate, transport, rng);
        state.rtt_est_ms = result.estimate_ms;
        state.record(now_ms, result);
        outcome.result = std::move(result);
    } catch (const Error& err) {
        if (err.status() != Status::NoReachableHop && err.status() != Status::StrictExhausted)
            throw;
        // A failed probe must not move the estimate.
        state.record(now_ms, std::nullopt);
        outcome.status = err.status();
    }
    outcome.rtt_est_ms = state.rtt_est_ms;
    return outcome;
}

void run_assessment_loop(PeerRttState& state, const SchedulerConfig& cfg,
                         ProbeTransport& transport, RandomSource& rng, Clock& clock,
                         const std::atomic<bool>& stop, int max_assessments,
                         const AssessmentCallback& on_assessment) {
    cfg.validate();
    int done = 0;
    while (!stop.load() && (max_assessments <= 0 || done < max_assessments)) {
        clock.sleep_ms(next_assessment_delay_ms(cfg, rng));
        if (stop.load()) break;
        AssessmentOutcome outcome =
            run_one_assessment(state, cfg, transport, rng, clock.now_ms());
        ++done;
        if (on_assessment) on_assessment(outcome);
    }
}

void PeerTable::upsert(const PeerRttState& state) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = peers_.insert_or_assign(state.peer_address.value, state);
    if (inserted) order_.push_back(state.peer_address.value);
}

std::optional<PeerRttState> PeerTable::snapshot(const Ipv4& peer) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = peers_.find(peer.value);
    if (it == peers_.end()) return std::nullopt;
    return it->second;
}

std::vector<PeerRttState> PeerTable::snapshot_all() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<PeerRttState> out;
    out.reserve(order_.size());
    for (uint32_t addr : order_) out.push_back(peers_.at(addr));
    return out;
}

AssessmentDriver::AssessmentDriver(SimNet& net, SchedulerConfig cfg, std::vector<Ipv4> peers,
                                   uint64_t seed)
    : net_(net), transport_(net), cfg_(std::move(cfg)), rng_(seed) {
    cfg_.validate();
    if (peers.empty()) raise(Status::InvalidArgument, "driver needs at least one peer");
    for (const auto& peer : peers) {
        Entry entry;
        entry.state.peer_address = peer;
        entry.state.rtt_est_ms = cfg_.estimate.initial_estimate_ms;
        entries_.push_back(std::move(entry));
    }
}

void AssessmentDriver::set_initial_estimate(const Ipv4& peer, double rtt_est_ms) {
    for (auto& entry : entries_) {
        if (entry.state.peer_address == peer) {
            entry.state.rtt_est_ms = rtt_est_ms;
            return;
        }
    }
    raise(Status::UnknownTarget, "peer " + peer.to_string() + " not driven here");
}

void AssessmentDriver::run_until(double end_ms, const AssessmentCallback& on_assessment) {
    // The first assessment also waits a full random interval; until it lands
    // the initial estimate is in force.
    for (auto& entry : entries_) {
        if (!entry.scheduled) {
            entry.next_due_ms = net_.now_ms() + next_assessment_delay_ms(cfg_, rng_);
            entry.scheduled = true;
        }
    }
    while (true) {
        Entry* next = nullptr;
        for (auto& entry : entries_)
            if (next == nullptr || entry.next_due_ms < next->next_due_ms) next = &entry;
        if (next->next_due_ms > end_ms) break;
        // A peer whose due time passed while another assessment held the clock
        // simply runs now; virtual time never moves backwards.
        if (next->next_due_ms > net_.now_ms())
            net_.advance_clock(next->next_due_ms - net_.now_ms());
        AssessmentOutcome outcome =
            run_one_assessment(next->state, cfg_, transport_, rng_, net_.now_ms());
        if (on_assessment) on_assessment(outcome);
        next->next_due_ms = net_.now_ms() + next_assessment_delay_ms(cfg_, rng_);
    }
    if (end_ms > net_.now_ms()) net_.advance_clock(end_ms - net_.now_ms());
}

const PeerRttState& AssessmentDriver::state(const Ipv4& peer) const {
    for (const auto& entry : entries_)
        if (entry.state.peer_address == peer) return entry.state;
    raise(Status::UnknownTarget, "peer " + peer.to_string() + " not driven here");
}

std::vector<PeerRttState> AssessmentDriver::states() const {
    std::vector<PeerRttState> out;
    out.reserve(entries_.size());
    for (const auto& entry : entries_) out.push_back(entry.state);
    return out;
}

std::vector<ScheduleDecision> AssessmentDriver::decide_broadcast() const {
    return schedule_broadcast(states(), cfg_, net_.now_ms());
}

}  // namespace odin
