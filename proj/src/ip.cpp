#include "ip.hpp"

#include "error.hpp"

namespace odin {

std::optional<Ipv4> Ipv4::parse(const std::string& text) {
    uint32_t value = 0;
    int octets = 0;
    size_t i = 0;
    while (octets < 4) {
        if (i >= text.size() || text[i] < '0' || text[i] > '9') return std::nullopt;
        uint32_t part = 0;
        size_t digits = 0;
        while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
            part = part * 10 + static_cast<uint32_t>(text[i] - '0');
            ++digits;
            ++i;
            if (digits > 3 || part > 255) return std::nullopt;
        }
        if (digits > 1 && text[i - digits] == '0') return std::nullopt;  // no leading zeros
        value = (value << 8) | part;
        ++octets;
        if (octets < 4) {
            if (i >= text.size() || text[i] != '.') return std::nullopt;
            ++i;
        }
    }
    if (i != text.size()) return std::nullopt;
    return Ipv4{value};
}

Ipv4 Ipv4::parse_or_throw(const std::string& text) {
    auto addr = parse(text);
    if (!addr) raise(Status::InvalidAddress, "not a valid IPv4 address: '" + text + "'");
    return *addr;
}

std::string Ipv4::to_string() const {
    std::string out;
    out.reserve(15);
    for (int i = 0; i < 4; ++i) {
        if (i) out.push_back('.');
        out += std::to_string(octet(i));
    }
    return out;
}

const char* status_name(Status s) {
    switch (s) {
        case Status::Ok: return "OK";
        case Status::InvalidArgument: return "INVALID_ARGUMENT";
        case Status::InvalidAddress: return "INVALID_ADDRESS";
        case Status::InvalidTopology: return "INVALID_TOPOLOGY";
        case Status::UnknownAddress: return "UNKNOWN_ADDRESS";
        case Status::UnknownTarget: return "UNKNOWN_TARGET";
        case Status::TransportUnavailable: return "TRANSPORT_UNAVAILABLE";
        case Status::NoReachableHop: return "NO_REACHABLE_HOP";
        case Status::StrictExhausted: return "STRICT_EXHAUSTED";
        case Status::EmptySampleSet: return "EMPTY_SAMPLE_SET";
        case Status::ZeroActual: return "ZERO_ACTUAL";
        case Status::IoFailure: return "IO_FAILURE";
        case Status::ParseFailure: return "PARSE_FAILURE";
        case Status::Internal: return "INTERNAL";
    }
    return "UNKNOWN";
}

}  // namespace odin
