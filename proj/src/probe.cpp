#include "probe.hpp"

#include "error.hpp"

namespace odin {

namespace {
constexpr int kPingTtl = 64;
}

const char* hop_kind_name(HopKind k) {
    switch (k) {
        case HopKind::TimeExceeded: return "TIME_EXCEEDED";
        case HopKind::DestReached: return "DEST_REACHED";
        case HopKind::Timeout: return "TIMEOUT";
    }
    return "UNKNOWN";
}

const char* protocol_name(ProbeProtocol p) {
    return p == ProbeProtocol::IcmpEcho ? "icmp" : "udp";
}

void ProbeSpec::validate() const {
    if (ttl < 1 || ttl > max_ttl)
        raise(Status::InvalidArgument, "ttl " + std::to_string(ttl) + " outside [1, " +
                                           std::to_string(max_ttl) + "]");
    if (max_ttl < 1) raise(Status::InvalidArgument, "max_ttl must be >= 1");
    if (timeout_ms <= 0.0) raise(Status::InvalidArgument, "timeout_ms must be > 0");
    if (probes_per_ttl < 1) raise(Status::InvalidArgument, "probes_per_ttl must be >= 1");
}

bool TraceResult::all_timeouts() const {
    for (const auto& hop : hops)
        if (hop.responded()) return false;
    return !hops.empty();
}

HopRecord send_probe(const ProbeSpec& spec, ProbeTransport& transport) {
    spec.validate();

    std::optional<ProbeReply> best;
    for (int i = 0; i < spec.probes_per_ttl; ++i) {
        auto reply = transport.probe(spec.destination, spec.ttl, spec.protocol, spec.timeout_ms);
        if (reply && (!best || reply->rtt_ms < best->rtt_ms)) best = reply;
    }

    HopRecord record;
    record.ttl = spec.ttl;
    if (best) {
        record.responder = best->responder;
        record.rtt_ms = best->rtt_ms;
        record.kind = best->dest_reached ? HopKind::DestReached : HopKind::TimeExceeded;
    }
    return record;
}

TraceResult trace_route(const Ipv4& addr, const ProbeSpec& defaults, ProbeTransport& transport) {
    TraceResult result;
    result.target = addr;

    ProbeSpec spec = defaults;
    spec.destination = addr;
    for (int ttl = 1; ttl <= defaults.max_ttl; ++ttl) {
        spec.ttl = ttl;
        HopRecord hop = send_probe(spec, transport);
        bool reached = hop.kind == HopKind::DestReached && hop.responder == addr;
        result.hops.push_back(std::move(hop));
        if (reached) {
            result.destination_reached = true;
            break;
        }
    }
    return result;
}

std::optional<double> ping(const Ipv4& addr, ProbeTransport& transport, double timeout_ms) {
    auto reply = transport.probe(addr, kPingTtl, ProbeProtocol::IcmpEcho, timeout_ms);
    if (reply && reply->dest_reached && reply->responder == addr) return reply->rtt_ms;
    return std::nullopt;
}

}  // namespace odin
