#include "doctest.h"

#include <cstring>

#include "error.hpp"
#include "live_transport.hpp"

using namespace odin;

TEST_CASE("icmp checksum matches a straightforward reference") {
    // Reference: unrolled 16-bit one's-complement sum, folded once at the end.
    auto reference = [](const std::vector<uint8_t>& bytes) {
        uint64_t sum = 0;
        for (size_t i = 0; i + 1 < bytes.size(); i += 2)
            sum += (uint64_t(bytes[i]) << 8) | bytes[i + 1];
        if (bytes.size() % 2) sum += uint64_t(bytes.back()) << 8;
        while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
        return uint16_t(~sum & 0xffff);
    };
    std::vector<uint8_t> cases[] = {
        {0x08, 0x00, 0x00, 0x00, 0x12, 0x34, 0x00, 0x01},
        {0x0b, 0x00, 0x00, 0x00, 0xde, 0xad, 0xbe, 0xef, 0x01},
        {0xff},
        {},
    };
    for (const auto& c : cases) CHECK(icmpwire::checksum(c.data(), c.size()) == reference(c));
}

TEST_CASE("echo builder produces self-verifying messages") {
    for (uint16_t seq : {1, 2, 77, 40000}) {
        std::vector<uint8_t> msg = icmpwire::build_echo(0x1234, seq);
        // A message whose checksum field is filled verifies to zero.
        CHECK(icmpwire::checksum(msg.data(), msg.size()) == 0);
        auto parsed = icmpwire::parse(msg.data(), msg.size());
        REQUIRE(parsed.has_value());
        CHECK(parsed->echo_id == 0x1234);
        CHECK(parsed->echo_seq == seq);
    }
}

TEST_CASE("echo checksum is independent of the sequence number") {
    // Per-flow load balancers hash the checksum; it must not vary across ttls.
    std::vector<uint8_t> a = icmpwire::build_echo(0x0d1e, 1);
    std::vector<uint8_t> b = icmpwire::build_echo(0x0d1e, 999);
    CHECK(a[2] == b[2]);
    CHECK(a[3] == b[3]);
}

TEST_CASE("time-exceeded parsing digs out the original echo ids") {
    std::vector<uint8_t> inner = icmpwire::build_echo(0xbeef, 7);
    std::vector<uint8_t> msg(8, 0);
    msg[0] = 11;  // time exceeded
    // Minimal embedded IPv4 header: version 4, ihl 5, proto ICMP.
    std::vector<uint8_t> ip(20, 0);
    ip[0] = 0x45;
    ip[9] = 1;
    msg.insert(msg.end(), ip.begin(), ip.end());
    msg.insert(msg.end(), inner.begin(), inner.begin() + 8);

    auto parsed = icmpwire::parse(msg.data(), msg.size());
    REQUIRE(parsed.has_value());
    CHECK(parsed->type == 11);
    REQUIRE(parsed->has_echo_ids);
    CHECK(parsed->echo_id == 0xbeef);
    CHECK(parsed->echo_seq == 7);
}

TEST_CASE("truncated messages parse defensively") {
    std::vector<uint8_t> msg = {0x0b, 0x00, 0x00};
    CHECK_FALSE(icmpwire::parse(msg.data(), msg.size()).has_value());
    std::vector<uint8_t> headerless = {0x0b, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00};
    auto parsed = icmpwire::parse(headerless.data(), headerless.size());
    REQUIRE(parsed.has_value());
    CHECK_FALSE(parsed->has_echo_ids);
}

// The shared contract run (see test_probe.cpp) needs a responding host; on the
// live transport that is the loopback. Skipped when the environment denies
// ICMP sockets, in which case the documented error is asserted instead.
TEST_CASE("live transport loopback behaviour or clean unavailability") {
    std::string reason;
    LiveTransport transport;
    if (LiveTransport::icmp_available(&reason)) {
        auto reply = transport.probe(Ipv4::parse_or_throw("127.0.0.1"), 64,
                                     ProbeProtocol::IcmpEcho, 1000.0);
        REQUIRE(reply.has_value());
        CHECK(reply->dest_reached);
        CHECK(reply->responder == Ipv4::parse_or_throw("127.0.0.1"));
        CHECK(reply->rtt_ms >= 0.0);
        CHECK(reply->rtt_ms < 1000.0);
    } else {
        INFO("icmp unavailable: " << reason);
        CHECK_THROWS_AS(
            transport.probe(Ipv4::parse_or_throw("127.0.0.1"), 1, ProbeProtocol::IcmpEcho, 100.0),
            Error);
    }
}

TEST_CASE("udp loopback probe elicits port-unreachable as DEST_REACHED") {
    LiveTransport transport;
    auto reply =
        transport.probe(Ipv4::parse_or_throw("127.0.0.1"), 8, ProbeProtocol::UdpHighPort, 1000.0);
    if (!reply.has_value()) {
        // Some sandboxes filter loopback ICMP errors entirely; absence is the
        // contract's honest answer there.
        WARN("no port-unreachable came back on loopback");
        return;
    }
    CHECK(reply->dest_reached);
    CHECK(reply->responder == Ipv4::parse_or_throw("127.0.0.1"));
}
