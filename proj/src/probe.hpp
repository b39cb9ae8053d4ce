#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ip.hpp"

namespace odin {

enum class ProbeProtocol { IcmpEcho, UdpHighPort };

enum class HopKind { TimeExceeded, DestReached, Timeout };

const char* hop_kind_name(HopKind k);
const char* protocol_name(ProbeProtocol p);

struct ProbeSpec {
    Ipv4 destination;
    int ttl = 1;
    ProbeProtocol protocol = ProbeProtocol::IcmpEcho;
    double timeout_ms = 1000.0;
    int probes_per_ttl = 3;
    int max_ttl = 30;

    // Throws Error{InvalidArgument} when a field is out of range.
    void validate() const;
};

// One response to a TTL-limited probe (or an echo).
struct ProbeReply {
    Ipv4 responder;
    double rtt_ms = 0.0;
    bool dest_reached = false;
};

// Transport abstraction: the live implementation speaks ICMP/UDP over OS
// sockets; the simulated one is backed by SimNet. A timeout is reported as
// absence, never fabricated. Implementations must tolerate concurrent
// in-flight probes (the simulated transport is exempt: it is single-threaded
// under its virtual clock and callers must serialize access).
class ProbeTransport {
public:
    virtual ~ProbeTransport() = default;
    virtual std::optional<ProbeReply> probe(const Ipv4& destination, int ttl,
                                            ProbeProtocol protocol, double timeout_ms) = 0;
};

struct HopRecord {
    int ttl = 0;
    std::optional<Ipv4> responder;
    std::optional<double> rtt_ms;
    HopKind kind = HopKind::Timeout;

    bool responded() const { return kind != HopKind::Timeout; }
};

struct TraceResult {
    Ipv4 target;
    std::vector<HopRecord> hops;  // ordered by ascending ttl
    bool destination_reached = false;

    bool all_timeouts() const;
};

// Sends probes_per_ttl probes at spec.ttl and keeps the minimum-RTT response;
// TIMEOUT if none respond.
HopRecord send_probe(const ProbeSpec& spec, ProbeTransport& transport);

// Walks ttl = 1..max_ttl, stopping early once the destination answers.
TraceResult trace_route(const Ipv4& addr, const ProbeSpec& defaults, ProbeTransport& transport);

// Echo round trip; absence on timeout.
std::optional<double> ping(const Ipv4& addr, ProbeTransport& transport,
                           double timeout_ms = 1000.0);

}  // namespace odin
