#include "estimator.hpp"

#include "error.hpp"

namespace odin {

const char* estimate_mode_name(EstimateMode m) {
    return m == EstimateMode::Strict ? "strict" : "permissive";
}

std::optional<EstimateMode> parse_estimate_mode(const std::string& text) {
    if (text == "strict") return EstimateMode::Strict;
    if (text == "permissive") return EstimateMode::Permissive;
    return std::nullopt;
}

const char* source_kind_name(SourceKind k) {
    return k == SourceKind::NeighborReached ? "NEIGHBOR_REACHED" : "LAST_REACHABLE_ROUTER";
}

void EstimateConfig::validate() const {
    if (delta_ms <= 0.0) raise(Status::InvalidArgument, "delta_ms must be > 0");
    if (initial_estimate_ms < 0.0) raise(Status::InvalidArgument, "initial_estimate_ms must be >= 0");
    if (strict_max_retries < 1) raise(Status::InvalidArgument, "strict_max_retries must be >= 1");
}

void PeerRttState::record(double at_ms, std::optional<EstimateResult> result) {
    last_assessed_ms = at_ms;
    history.push_back(AssessmentRecord{at_ms, std::move(result)});
    while (history.size() > kHistoryCap) history.pop_front();
}

Ipv4 randomize_last_octet(const Ipv4& addr, RandomSource& rng) {
    const uint8_t own = addr.last_octet();
    uint8_t octet;
    do {
        octet = static_cast<uint8_t>(rng.below(256));
    } while (octet == own);
    return addr.with_last_octet(octet);
}

double update_estimate(double prior_est_ms, double observed_ms, double delta_ms) {
    if (observed_ms < prior_est_ms) return observed_ms;
    return prior_est_ms + delta_ms;
}

namespace {

// Deepest hop with a measured RTT, scanning from the end of the path. Hops
// answered by the target itself are skipped: that can happen when the target
// address belongs to a router on the path, and using it would measure the one
// machine the algorithm promises never to measure.
const HopRecord* last_responding_hop(const TraceResult& trace, const Ipv4& target) {
    for (auto it = trace.hops.rbegin(); it != trace.hops.rend(); ++it)
        if (it->responded() && *it->responder != target) return &*it;
    return nullptr;
}

}  // namespace

EstimateResult estimate_rtt(const Ipv4& addr, const PeerRttState& prior, const EstimateConfig& cfg,
                            ProbeTransport& transport, RandomSource& rng) {
    cfg.validate();

    EstimateResult result;
    const int attempts = cfg.mode == EstimateMode::Strict ? cfg.strict_max_retries : 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        Ipv4 neighbor = randomize_last_octet(addr, rng);
        TraceResult trace = trace_route(neighbor, cfg.probe, transport);

        if (cfg.mode == EstimateMode::Strict) {
            if (!trace.destination_reached) continue;
            const HopRecord& final_hop = trace.hops.back();
            result.observed_ms = *final_hop.rtt_ms;
            result.source_node = *final_hop.responder;
            result.source_kind = SourceKind::NeighborReached;
        } else {
            const HopRecord* hop = last_responding_hop(trace, addr);
            if (hop == nullptr)
                raise(Status::NoReachableHop,
                      "no hop on the path to " + neighbor.to_string() + " responded");
            result.observed_ms = *hop->rtt_ms;
            result.source_node = *hop->responder;
            result.source_kind = trace.destination_reached ? SourceKind::NeighborReached
                                                           : SourceKind::LastReachableRouter;
        }

        result.probed_address = neighbor;
        result.retries_used = attempt;
        result.estimate_ms = update_estimate(prior.rtt_est_ms, result.observed_ms, cfg.delta_ms);
        return result;
    }

    raise(Status::StrictExhausted,
          "no reachable neighbor of " + addr.to_string() + " after " +
              std::to_string(attempts) + " attempts");
}

}  // namespace odin
