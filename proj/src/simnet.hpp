#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "ip.hpp"
#include "probe.hpp"

namespace odin {

// ---------------------------------------------------------------------------
// Declarative topology
// ---------------------------------------------------------------------------

struct RouterSpec {
    std::string id;
    std::vector<Ipv4> addresses;
    bool operator==(const RouterSpec&) const = default;
};

struct LinkSpec {
    std::string endpoint_a;
    std::string endpoint_b;
    double one_way_latency_ms = 0.0;
    double jitter_ms = 0.0;
    bool operator==(const LinkSpec&) const = default;
};

struct HostSpec {
    uint8_t last_octet = 0;
    bool reachable = true;
    double one_way_last_hop_ms = 0.0;
    bool operator==(const HostSpec&) const = default;
};

// A /24 served by a single gateway router.
struct SubnetSpec {
    Ipv4 cidr_base;  // network address, low octet 0
    std::string gateway_router;
    std::vector<HostSpec> hosts;
    bool operator==(const SubnetSpec&) const = default;

    Ipv4 host_address(const HostSpec& h) const { return cidr_base.with_last_octet(h.last_octet); }
};

struct TopologySpec {
    std::vector<RouterSpec> routers;
    std::vector<LinkSpec> links;
    std::vector<SubnetSpec> subnets;
    bool operator==(const TopologySpec&) const = default;
};

// The measuring node. It is implicit in every topology; links may name it as
// an endpoint without declaring it as a router.
inline constexpr const char* kVantageId = "vantage";
inline constexpr uint32_t kVantageAddrValue = (100u << 24) | (64u << 16) | 1u;  // 100.64.0.1

// ---------------------------------------------------------------------------
// Adversaries
// ---------------------------------------------------------------------------

enum class AdversaryKind { ResponseDelay, ForgedHop, RouterDdos };

struct AdversaryConfig {
    AdversaryKind kind = AdversaryKind::ResponseDelay;
    std::string target;  // router id, or a host address literal

    // RESPONSE_DELAY: added to responses to packets addressed to the target itself.
    double extra_ms = 0.0;

    // FORGED_HOP: probes addressed to the target that expire at at_ttl get a
    // reply claiming to come from claimed_address.
    Ipv4 claimed_address;
    int at_ttl = 0;

    // ROUTER_DDOS: every packet the router handles while active takes extra time.
    double epsilon_ms = 0.0;
    double active_from_ms = 0.0;
    double active_to_ms = std::numeric_limits<double>::infinity();
};

// ---------------------------------------------------------------------------
// Delivery log
// ---------------------------------------------------------------------------

enum class PacketKind {
    Probe,         // TTL-limited request or echo request arriving at a node
    TimeExceeded,  // expiry reply delivered to the vantage point
    EchoReply,     // destination reply delivered to the vantage point
    ForgedReply,   // adversary-forged reply delivered to the vantage point
    Message,       // broadcast payload delivered to a peer
    MessageAck,    // peer acknowledgement delivered back to the vantage point
    Adversary,     // adversary installation marker
};

const char* packet_kind_name(PacketKind k);

struct LogEvent {
    double time_ms = 0.0;
    std::string node;  // node the packet arrived at
    PacketKind kind = PacketKind::Probe;
    Ipv4 src;
    Ipv4 dst;
    int ttl = 0;  // remaining ttl on arrival; 0 where not meaningful
    uint64_t packet_id = 0;
};

// ---------------------------------------------------------------------------
// Simulator
// ---------------------------------------------------------------------------

// Deterministic discrete-event network. Single-threaded: a SimNet may be moved
// between threads but never shared concurrently. Identical (topology,
// adversaries, seed, operation sequence) yields an identical delivery log.
class SimNet {
public:
    // Validates the spec and precomputes routes. Throws Error{InvalidTopology}.
    SimNet(TopologySpec spec, uint64_t seed);

    double now_ms() const { return clock_ms_; }
    uint64_t seed() const { return seed_; }
    const TopologySpec& topology() const { return spec_; }

    // Fires queued events with timestamps inside the window, in (time,
    // insertion) order, then sets the clock to now + dt_ms.
    void advance_clock(double dt_ms);

    // Advances the clock just far enough to fire everything still queued.
    void drain_events();

    // 2 x sum of one-way latencies on the vantage->addr path, excluding jitter
    // and adversaries. Throws Error{UnknownAddress} for undeclared addresses.
    double ground_truth_rtt(const Ipv4& addr) const;

    void install_adversary(const AdversaryConfig& cfg);

    struct Outcome {
        bool replied = false;
        Ipv4 responder;
        bool dest_reached = false;
        double reply_at_ms = 0.0;  // absolute virtual time of the reply delivery
    };

    // Injects a TTL-limited packet at the vantage point at the current virtual
    // time. All journey events are scheduled on the queue; the clock does not
    // move until advance_clock passes them.
    Outcome deliver(const Ipv4& dst, int ttl, ProbeProtocol protocol);

    // Application-level broadcast exchange: payload to dst, acknowledgement
    // back. Departure happens depart_delay_ms after the current virtual time;
    // the returned reply_at_ms is when the exchange completes at the vantage
    // point.
    Outcome deliver_message(const Ipv4& dst, double depart_delay_ms = 0.0);

    const std::vector<LogEvent>& delivery_log() const { return log_; }
    std::string render_log() const;

    bool is_declared_host(const Ipv4& addr) const;
    // Gateway router id for the /24 containing addr, if declared.
    std::optional<std::string> subnet_gateway(const Ipv4& addr) const;

private:
    struct Node {
        enum class Kind { Router, Host } kind;
        std::string id;
        std::vector<Ipv4> addresses;
        bool reachable = true;          // hosts only
        double last_hop_ms = 0.0;       // hosts only
        int gateway_index = -1;         // hosts only
        // Routers: vantage-rooted route (link indices, vantage side first).
        std::vector<int> route_links;
        double one_way_ms = 0.0;        // cumulative, jitter-free
    };

    struct QueuedEvent {
        double time_ms;
        uint64_t seq;
        LogEvent event;
        bool operator>(const QueuedEvent& other) const {
            if (time_ms != other.time_ms) return time_ms > other.time_ms;
            return seq > other.seq;
        }
    };

    void validate_and_build();
    void compute_routes();
    int node_for_address(const Ipv4& addr) const;  // -1 when unknown
    double jitter_for_link(int link_index);
    double ddos_extra(const std::string& router_id, double at_ms) const;
    double response_delay_extra(const Ipv4& addr) const;
    const AdversaryConfig* forged_hop_for(const Ipv4& dst, int original_ttl) const;
    void schedule(double at_ms, LogEvent ev);

    Outcome route_packet(const Ipv4& dst, int ttl, bool as_message, double depart_delay_ms);

    TopologySpec spec_;
    uint64_t seed_;
    std::mt19937_64 rng_;
    double clock_ms_ = 0.0;
    uint64_t next_seq_ = 0;
    uint64_t next_packet_id_ = 1;

    std::vector<Node> nodes_;
    std::unordered_map<uint32_t, int> addr_index_;
    std::unordered_map<std::string, int> router_index_;
    std::map<uint32_t, int> subnet_by_base_;  // cidr base -> index in spec_.subnets
    std::vector<AdversaryConfig> adversaries_;

    std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, std::greater<>> queue_;
    std::vector<LogEvent> log_;
};

// ProbeTransport over a SimNet. Fully deterministic for identical inputs at
// identical virtual times. Callers must serialize access.
class SimTransport final : public ProbeTransport {
public:
    explicit SimTransport(SimNet& net) : net_(net) {}

    std::optional<ProbeReply> probe(const Ipv4& destination, int ttl, ProbeProtocol protocol,
                                    double timeout_ms) override;

    SimNet& net() { return net_; }

private:
    SimNet& net_;
};

}  // namespace odin
