#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "clock.hpp"
#include "error.hpp"
#include "estimator.hpp"
#include "simnet.hpp"

namespace odin {

struct SchedulerConfig {
    double max_delay_ms = 300.0;
    double max_interval_s = 180.0;  // upper bound between assessments
    EstimateConfig estimate;
    bool enabled = true;

    void validate() const;
};

struct ScheduleDecision {
    Ipv4 peer_address;
    double send_delay_ms = 0.0;
    double computed_from_ms = 0.0;  // rtt_est snapshot the delay came from
    double decided_at_ms = 0.0;
};

// Uniform draw over [0, max_interval). Callers pass a cryptographic source in
// production so an observer cannot predict the next assessment.
double next_assessment_delay_ms(const SchedulerConfig& cfg, RandomSource& rng);

// max(0, max_delay - rtt_est). Estimates above max_delay clamp to zero delay.
double broadcast_delay_ms(double rtt_est_ms, const SchedulerConfig& cfg);

// One decision per peer. With enabled=false every delay is zero.
std::vector<ScheduleDecision> schedule_broadcast(const std::vector<PeerRttState>& peers,
                                                 const SchedulerConfig& cfg, double now_ms);

struct AssessmentOutcome {
    Ipv4 peer;
    double at_ms = 0.0;
    std::optional<EstimateResult> result;  // empty when the assessment failed
    Status status = Status::Ok;
    double rtt_est_ms = 0.0;  // committed estimate after this assessment
};

// Runs one assessment against the transport and commits the result. A failed
// probe retains the previous estimate; failure is recorded in the history.
AssessmentOutcome run_one_assessment(PeerRttState& state, const SchedulerConfig& cfg,
                                     ProbeTransport& transport, RandomSource& rng, double now_ms);

using AssessmentCallback = std::function<void(const AssessmentOutcome&)>;

// Blocking per-peer loop for live operation: sleep a random interval, assess,
// commit, repeat. Stops when *stop becomes true or max_assessments complete
// (max_assessments <= 0 means unbounded).
void run_assessment_loop(PeerRttState& state, const SchedulerConfig& cfg,
                         ProbeTransport& transport, RandomSource& rng, Clock& clock,
                         const std::atomic<bool>& stop, int max_assessments,
                         const AssessmentCallback& on_assessment);

// Thread-safe snapshot store: one writer per peer, any number of readers.
class PeerTable {
public:
    void upsert(const PeerRttState& state);
    std::optional<PeerRttState> snapshot(const Ipv4& peer) const;
    std::vector<PeerRttState> snapshot_all() const;

private:
    mutable std::mutex mutex_;
    std::unordered_map<uint32_t, PeerRttState> peers_;
    std::vector<uint32_t> order_;
};

// Drives independent per-peer assessment schedules over one SimNet under its
// virtual clock. Deterministic for a fixed seed: due events are processed in
// (time, peer order) sequence.
class AssessmentDriver {
public:
    AssessmentDriver(SimNet& net, SchedulerConfig cfg, std::vector<Ipv4> peers, uint64_t seed);

    // Seeds a peer's estimate before the run (e.g. a converged scheduler).
    void set_initial_estimate(const Ipv4& peer, double rtt_est_ms);

    // Runs assessments until the virtual clock reaches end_ms.
    void run_until(double end_ms, const AssessmentCallback& on_assessment = nullptr);

    const PeerRttState& state(const Ipv4& peer) const;
    std::vector<PeerRttState> states() const;
    std::vector<ScheduleDecision> decide_broadcast() const;

    SimNet& net() { return net_; }

private:
    struct Entry {
        PeerRttState state;
        double next_due_ms = 0.0;
        bool scheduled = false;
    };

    SimNet& net_;
    SimTransport transport_;
    SchedulerConfig cfg_;
    SeededRandom rng_;
    std::vector<Entry> entries_;
};

}  // namespace odin
