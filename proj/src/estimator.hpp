#pragma once

#include <deque>
#include <optional>

#include "ip.hpp"
#include "probe.hpp"
#include "rng.hpp"

namespace odin {

enum class EstimateMode { Strict, Permissive };

const char* estimate_mode_name(EstimateMode m);
std::optional<EstimateMode> parse_estimate_mode(const std::string& text);

struct EstimateConfig {
    double delta_ms = 0.1;               // incremental-increase step
    EstimateMode mode = EstimateMode::Permissive;
    int strict_max_retries = 8;          // total trace attempts in strict mode
    double initial_estimate_ms = 0.5;    // near-zero start resists co-location games
    ProbeSpec probe;                     // per-probe settings for the traces

    void validate() const;
};

enum class SourceKind { NeighborReached, LastReachableRouter };

const char* source_kind_name(SourceKind k);

struct EstimateResult {
    double estimate_ms = 0.0;   // after the update rule
    double observed_ms = 0.0;   // raw RTT supplied by source_node
    Ipv4 source_node;           // who actually answered (never the target)
    SourceKind source_kind = SourceKind::NeighborReached;
    Ipv4 probed_address;        // the randomized neighbor B
    int retries_used = 0;       // re-randomizations after the first attempt
};

struct AssessmentRecord {
    double at_ms = 0.0;
    std::optional<EstimateResult> result;  // empty on a failed assessment
};

// Per-peer smoothed estimate under the asymmetric update rule. Single logical
// writer (the scheduler); see scheduler.hpp for snapshotting.
struct PeerRttState {
    Ipv4 peer_address;
    double rtt_est_ms = 0.0;
    double last_assessed_ms = -1.0;  // negative until the first assessment
    std::deque<AssessmentRecord> history;

    static constexpr size_t kHistoryCap = 512;

    void record(double at_ms, std::optional<EstimateResult> result);
};

// Replaces the last octet of addr with a uniform draw over the other 255
// values. The target's own octet is excluded so the probe can never land on
// the machine being assessed.
Ipv4 randomize_last_octet(const Ipv4& addr, RandomSource& rng);

// Asymmetric update: adopt a lower observation immediately, move up by only
// delta otherwise (the equal case moves up).
double update_estimate(double prior_est_ms, double observed_ms, double delta_ms);

// Indirect RTT estimate for addr: traces to a randomized /24 neighbor and
// reads the RTT off the deepest responding hop. Strict mode re-randomizes
// until the neighbor itself answers. The raw observation is folded into the
// prior via update_estimate. Never sends a packet addressed to addr.
// Throws Error{NoReachableHop} or Error{StrictExhausted}.
EstimateResult estimate_rtt(const Ipv4& addr, const PeerRttState& prior, const EstimateConfig& cfg,
                            ProbeTransport& transport, RandomSource& rng);

}  // namespace odin
