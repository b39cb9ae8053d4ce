#include "live_transport.hpp"

#include <arpa/inet.h>
#include <linux/errqueue.h>
#include <netinet/in.h>
#include <netinet/ip.h>
#include <netinet/ip_icmp.h>
#include <netinet/udp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "error.hpp"

namespace odin {

namespace icmpwire {

uint16_t checksum(const uint8_t* data, size_t len) {
    uint32_t sum = 0;
    while (len > 1) {
        sum += static_cast<uint32_t>(data[0]) << 8 | data[1];
        data += 2;
        len -= 2;
    }
    if (len == 1) sum += static_cast<uint32_t>(data[0]) << 8;
    while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
    return static_cast<uint16_t>(~sum & 0xffff);
}

std::vector<uint8_t> build_echo(uint16_t id, uint16_t seq, size_t payload_len) {
    if (payload_len < 2) payload_len = 2;
    std::vector<uint8_t> msg(8 + payload_len, 0);
    msg[0] = ICMP_ECHO;
    msg[1] = 0;
    msg[4] = static_cast<uint8_t>(id >> 8);
    msg[5] = static_cast<uint8_t>(id & 0xff);
    msg[6] = static_cast<uint8_t>(seq >> 8);
    msg[7] = static_cast<uint8_t>(seq & 0xff);
    // Compensation word: keeps (seq + word) constant mod 0xffff so the
    // checksum, and with it the load-balancer flow hash, never changes.
    uint32_t comp = 0xfffeu - seq;
    msg[8] = static_cast<uint8_t>(comp >> 8);
    msg[9] = static_cast<uint8_t>(comp & 0xff);
    uint16_t sum = checksum(msg.data(), msg.size());
    msg[2] = static_cast<uint8_t>(sum >> 8);
    msg[3] = static_cast<uint8_t>(sum & 0xff);
    return msg;
}

std::optional<Parsed> parse(const uint8_t* data, size_t len) {
    if (len < 8) return std::nullopt;
    Parsed out;
    out.type = data[0];
    out.code = data[1];
    if (out.type == ICMP_ECHOREPLY || out.type == ICMP_ECHO) {
        out.echo_id = static_cast<uint16_t>(data[4] << 8 | data[5]);
        out.echo_seq = static_cast<uint16_t>(data[6] << 8 | data[7]);
        out.has_echo_ids = true;
        return out;
    }
    if (out.type == ICMP_TIME_EXCEEDED || out.type == ICMP_DEST_UNREACH) {
        // Embedded: original IP header + first 8 bytes of the original message.
        if (len < 8 + 20 + 8) return out;
        const uint8_t* inner_ip = data + 8;
        size_t inner_ihl = static_cast<size_t>(inner_ip[0] & 0x0f) * 4;
        if (inner_ihl < 20 || len < 8 + inner_ihl + 8) return out;
        if (inner_ip[9] == IPPROTO_ICMP) {
            const uint8_t* inner_icmp = inner_ip + inner_ihl;
            out.echo_id = static_cast<uint16_t>(inner_icmp[4] << 8 | inner_icmp[5]);
            out.echo_seq = static_cast<uint16_t>(inner_icmp[6] << 8 | inner_icmp[7]);
            out.has_echo_ids = true;
        }
        return out;
    }
    return out;
}

}  // namespace icmpwire

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

sockaddr_in make_sockaddr(const Ipv4& addr, uint16_t port = 0) {
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(port);
    sa.sin_addr.s_addr = htonl(addr.value);
    return sa;
}

Ipv4 from_sockaddr(const sockaddr_in& sa) { return Ipv4{ntohl(sa.sin_addr.s_addr)}; }

constexpr uint16_t kUdpBasePort = 33434;  // classic traceroute convention

// Reads one message from the error queue; returns the offender address and
// the ICMP type/code, plus the original destination in orig. A local-origin
// ECONNREFUSED (how the kernel reports port-unreachable over loopback) is
// normalized to the ICMP equivalent with the destination as offender.
struct ErrQueueMsg {
    Ipv4 offender;
    uint8_t icmp_type = 0;
    uint8_t icmp_code = 0;
    sockaddr_in orig{};
    bool valid = false;
};

ErrQueueMsg read_errqueue(int fd) {
    ErrQueueMsg out;
    uint8_t payload[512];
    uint8_t control[512];
    sockaddr_in orig{};
    iovec iov{payload, sizeof(payload)};
    msghdr msg{};
    msg.msg_name = &orig;
    msg.msg_namelen = sizeof(orig);
    msg.msg_iov = &iov;
    msg.msg_iovlen = 1;
    msg.msg_control = control;
    msg.msg_controllen = sizeof(control);
    if (recvmsg(fd, &msg, MSG_ERRQUEUE | MSG_DONTWAIT) < 0) return out;

    for (cmsghdr* cm = CMSG_FIRSTHDR(&msg); cm != nullptr; cm = CMSG_NXTHDR(&msg, cm)) {
        if (cm->cmsg_level != SOL_IP || cm->cmsg_type != IP_RECVERR) continue;
        auto* ee = reinterpret_cast<sock_extended_err*>(CMSG_DATA(cm));
        if (ee->ee_origin == SO_EE_ORIGIN_ICMP) {
            out.icmp_type = ee->ee_type;
            out.icmp_code = ee->ee_code;
            const sockaddr* offender = SO_EE_OFFENDER(ee);
            if (offender->sa_family == AF_INET)
                out.offender = from_sockaddr(*reinterpret_cast<const sockaddr_in*>(offender));
            out.orig = orig;
            out.valid = true;
        } else if (ee->ee_origin == SO_EE_ORIGIN_LOCAL && ee->ee_errno == ECONNREFUSED) {
            out.icmp_type = ICMP_DEST_UNREACH;
            out.icmp_code = ICMP_PORT_UNREACH;
            out.offender = from_sockaddr(orig);
            out.orig = orig;
            out.valid = true;
        }
    }
    return out;
}

int poll_readable(int fd, double remaining_ms) {
    pollfd pfd{fd, POLLIN | POLLERR, 0};
    int timeout = remaining_ms <= 0 ? 0 : static_cast<int>(remaining_ms) + 1;
    int rc;
    do {
        rc = poll(&pfd, 1, timeout);
    } while (rc < 0 && errno == EINTR);
    return rc;
}

int open_icmp_socket(bool* raw) {
    int fd = socket(AF_INET, SOCK_DGRAM, IPPROTO_ICMP);
    if (fd >= 0) {
        *raw = false;
        return fd;
    }
    fd = socket(AF_INET, SOCK_RAW, IPPROTO_ICMP);
    if (fd >= 0) {
        *raw = true;
        return fd;
    }
    return -1;
}

const char* kIcmpRemedy =
    "ICMP probing needs either CAP_NET_RAW (raw socket) or a "
    "net.ipv4.ping_group_range covering this group (ping socket); "
    "UDP probing works unprivileged";

}  // namespace

LiveTransport::~LiveTransport() {
    if (icmp_fd_ >= 0) close(icmp_fd_);
    if (udp_fd_ >= 0) close(udp_fd_);
}

bool LiveTransport::icmp_available(std::string* reason) {
    bool raw = false;
    int fd = open_icmp_socket(&raw);
    if (fd < 0) {
        if (reason) *reason = std::string(std::strerror(errno)) + "; " + kIcmpRemedy;
        return false;
    }
    close(fd);
    return true;
}

void LiveTransport::ensure_icmp_socket() {
    if (icmp_fd_ >= 0) return;
    icmp_fd_ = open_icmp_socket(&icmp_raw_);
    if (icmp_fd_ < 0)
        raise(Status::TransportUnavailable,
              std::string("cannot open ICMP socket: ") + std::strerror(errno) + "; " + kIcmpRemedy);
    int on = 1;
    setsockopt(icmp_fd_, SOL_IP, IP_RECVERR, &on, sizeof(on));
    if (icmp_raw_) {
        icmp_id_ = static_cast<uint16_t>(getpid() & 0xffff);
    } else {
        // Ping sockets report their kernel-assigned id as the local "port".
        sockaddr_in local{};
        socklen_t len = sizeof(local);
        sockaddr_in any = make_sockaddr(Ipv4{0});
        bind(icmp_fd_, reinterpret_cast<sockaddr*>(&any), sizeof(any));
        if (getsockname(icmp_fd_, reinterpret_cast<sockaddr*>(&local), &len) == 0)
            icmp_id_ = ntohs(local.sin_port);
    }
}

void LiveTransport::ensure_udp_socket() {
    if (udp_fd_ >= 0) return;
    udp_fd_ = socket(AF_INET, SOCK_DGRAM, IPPROTO_UDP);
    if (udp_fd_ < 0)
        raise(Status::TransportUnavailable,
              std::string("cannot open UDP socket: ") + std::strerror(errno));
    int on = 1;
    setsockopt(udp_fd_, SOL_IP, IP_RECVERR, &on, sizeof(on));
    // Fixed source port per transport keeps one trace on one ECMP path.
    sockaddr_in any = make_sockaddr(Ipv4{0});
    bind(udp_fd_, reinterpret_cast<sockaddr*>(&any), sizeof(any));
}

std::optional<ProbeReply> LiveTransport::probe(const Ipv4& destination, int ttl,
                                               ProbeProtocol protocol, double timeout_ms) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (protocol == ProbeProtocol::IcmpEcho) return icmp_probe(destination, ttl, timeout_ms);
    return udp_probe(destination, ttl, timeout_ms);
}

std::optional<ProbeReply> LiveTransport::icmp_probe(const Ipv4& destination, int ttl,
                                                    double timeout_ms) {
    ensure_icmp_socket();
    if (setsockopt(icmp_fd_, SOL_IP, IP_TTL, &ttl, sizeof(ttl)) < 0)
        raise(Status::TransportUnavailable, "cannot set IP_TTL");

    const uint16_t seq = next_seq_++;
    std::vector<uint8_t> echo = icmpwire::build_echo(icmp_id_, seq);
    sockaddr_in dst = make_sockaddr(destination);
    auto start = std::chrono::steady_clock::now();
    if (sendto(icmp_fd_, echo.data(), echo.size(), 0, reinterpret_cast<sockaddr*>(&dst),
               sizeof(dst)) < 0) {
        if (errno == EPERM || errno == EACCES)
            raise(Status::TransportUnavailable, std::string("ICMP send refused: ") +
                                                    std::strerror(errno) + "; " + kIcmpRemedy);
        return std::nullopt;
    }

    while (true) {
        double remaining = timeout_ms - elapsed_ms(start);
        if (remaining <= 0) return std::nullopt;
        if (poll_readable(icmp_fd_, remaining) <= 0) return std::nullopt;

        // Error queue first: TTL expiry and unreachable notices land there.
        ErrQueueMsg err = read_errqueue(icmp_fd_);
        if (err.valid) {
            if (err.icmp_type == ICMP_TIME_EXCEEDED)
                return ProbeReply{err.offender, elapsed_ms(start), false};
            continue;  // unreachable or filtered: treat as silence
        }

        uint8_t buf[1024];
        sockaddr_in from{};
        socklen_t from_len = sizeof(from);
        ssize_t got = recvfrom(icmp_fd_, buf, sizeof(buf), MSG_DONTWAIT,
                               reinterpret_cast<sockaddr*>(&from), &from_len);
        if (got < 0) continue;

        const uint8_t* icmp = buf;
        size_t icmp_len = static_cast<size_t>(got);
        if (icmp_raw_) {
            if (icmp_len < 20) continue;
            size_t ihl = static_cast<size_t>(buf[0] & 0x0f) * 4;
            if (icmp_len < ihl + 8) continue;
            icmp += ihl;
            icmp_len -= ihl;
        }
        auto parsed = icmpwire::parse(icmp, icmp_len);
        if (!parsed) continue;
        if (parsed->type == ICMP_ECHOREPLY) {
            // Ping sockets demultiplex by id already; raw mode must check.
            if (icmp_raw_ && (!parsed->has_echo_ids || parsed->echo_id != icmp_id_)) continue;
            if (parsed->has_echo_ids && parsed->echo_seq != seq) continue;
            return ProbeReply{from_sockaddr(from), elapsed_ms(start), true};
        }
        if (parsed->type == ICMP_TIME_EXCEEDED && icmp_raw_) {
            if (!parsed->has_echo_ids || parsed->echo_id != icmp_id_ || parsed->echo_seq != seq)
                continue;
            return ProbeReply{from_sockaddr(from), elapsed_ms(start), false};
        }
    }
}

std::optional<ProbeReply> LiveTransport::udp_probe(const Ipv4& destination, int ttl,
                                                   double timeout_ms) {
    ensure_udp_socket();
    if (setsockopt(udp_fd_, SOL_IP, IP_TTL, &ttl, sizeof(ttl)) < 0)
        raise(Status::TransportUnavailable, "cannot set IP_TTL");

    const uint16_t port = static_cast<uint16_t>(kUdpBasePort + ttl);
    sockaddr_in dst = make_sockaddr(destination, port);
    const char payload[] = "odin-probe";
    auto start = std::chrono::steady_clock::now();
    if (sendto(udp_fd_, payload, sizeof(payload), 0, reinterpret_cast<sockaddr*>(&dst),
               sizeof(dst)) < 0)
        return std::nullopt;

    while (true) {
        double remaining = timeout_ms - elapsed_ms(start);
        if (remaining <= 0) return std::nullopt;
        if (poll_readable(udp_fd_, remaining) <= 0) return std::nullopt;

        ErrQueueMsg err = read_errqueue(udp_fd_);
        if (!err.valid) {
            // Drain any stray datagram so poll does not spin.
            uint8_t buf[64];
            recv(udp_fd_, buf, sizeof(buf), MSG_DONTWAIT);
            continue;
        }
        if (ntohs(err.orig.sin_port) != port ||
            from_sockaddr(err.orig) != destination)
            continue;  // stale notice from an earlier probe
        if (err.icmp_type == ICMP_TIME_EXCEEDED)
            return ProbeReply{err.offender, elapsed_ms(start), false};
        if (err.icmp_type == ICMP_DEST_UNREACH && err.icmp_code == ICMP_PORT_UNREACH)
            return ProbeReply{err.offender, elapsed_ms(start), err.offender == destination};
        return std::nullopt;  // administratively filtered or unreachable
    }
}

}  // namespace odin
