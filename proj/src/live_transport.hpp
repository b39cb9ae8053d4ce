#pragma once

#include <mutex>
#include <string>

#include "probe.hpp"

namespace odin {

// Probes real networks through OS sockets.
//
// ICMP mode prefers an unprivileged ping socket (SOCK_DGRAM/IPPROTO_ICMP,
// gated by net.ipv4.ping_group_range) and falls back to a raw socket when
// CAP_NET_RAW is held. TTL-expiry notifications arrive through IP_RECVERR.
// UDP mode sends to 33434+ttl and needs no privileges at all.
//
// Flow pinning: the ICMP identifier and the UDP source port stay constant for
// the lifetime of one transport, and echo payloads carry a compensation word
// that keeps the ICMP checksum constant across sequence numbers, so per-flow
// load balancers keep the probes of one trace on one path.
//
// Calls are serialized internally; concurrent in-flight probes are safe but
// run one at a time.
class LiveTransport final : public ProbeTransport {
public:
    LiveTransport() = default;
    ~LiveTransport() override;

    LiveTransport(const LiveTransport&) = delete;
    LiveTransport& operator=(const LiveTransport&) = delete;

    std::optional<ProbeReply> probe(const Ipv4& destination, int ttl, ProbeProtocol protocol,
                                    double timeout_ms) override;

    // Checks whether ICMP probing can work here; fills reason when it cannot.
    static bool icmp_available(std::string* reason);

private:
    std::optional<ProbeReply> icmp_probe(const Ipv4& destination, int ttl, double timeout_ms);
    std::optional<ProbeReply> udp_probe(const Ipv4& destination, int ttl, double timeout_ms);
    void ensure_icmp_socket();
    void ensure_udp_socket();

    std::mutex mutex_;
    int icmp_fd_ = -1;
    bool icmp_raw_ = false;
    int udp_fd_ = -1;
    uint16_t icmp_id_ = 0;
    uint16_t next_seq_ = 1;
};

// ICMP wire helpers, exposed for tests.
namespace icmpwire {

// RFC 1071 one's-complement checksum.
uint16_t checksum(const uint8_t* data, size_t len);

// Builds an echo request whose checksum is independent of seq: a compensation
// word in the payload absorbs the sequence increment.
std::vector<uint8_t> build_echo(uint16_t id, uint16_t seq, size_t payload_len = 16);

// Parses an ICMP message (no IP header). For TIME_EXCEEDED / DEST_UNREACH the
// embedded original header is examined to recover the probe's id and seq.
struct Parsed {
    uint8_t type = 0;
    uint8_t code = 0;
    uint16_t echo_id = 0;   // of the original probe
    uint16_t echo_seq = 0;  // of the original probe
    bool has_echo_ids = false;
};
std::optional<Parsed> parse(const uint8_t* data, size_t len);

}  // namespace icmpwire

}  // namespace odin
