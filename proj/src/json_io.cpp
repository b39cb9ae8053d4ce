#include "json_io.hpp"

#include <fstream>
#include <sstream>

#include "error.hpp"
#include "json.hpp"

namespace odin {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* key : allowed)
            if (it.key() == key) ok = true;
        if (!ok) raise(Status::ParseFailure, "unknown key '" + it.key() + "' in " + where);
    }
}

json parse(const std::string& text, const std::string& what) {
    json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) raise(Status::ParseFailure, "malformed JSON in " + what);
    return doc;
}

Ipv4 addr_field(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_string())
        raise(Status::ParseFailure, "missing address field '" + std::string(key) + "' in " + where);
    return Ipv4::parse_or_throw(obj[key].get<std::string>());
}

double number_field(const json& obj, const char* key, const std::string& where,
                    bool required, double fallback = 0.0) {
    if (!obj.contains(key)) {
        if (required) raise(Status::ParseFailure, "missing field '" + std::string(key) + "' in " + where);
        return fallback;
    }
    if (!obj[key].is_number())
        raise(Status::ParseFailure, "field '" + std::string(key) + "' must be a number in " + where);
    return obj[key].get<double>();
}

std::string string_field(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_string())
        raise(Status::ParseFailure, "missing field '" + std::string(key) + "' in " + where);
    return obj[key].get<std::string>();
}

AdversaryConfig adversary_from(const json& obj) {
    if (!obj.is_object()) raise(Status::ParseFailure, "adversary entry must be an object");
    std::string kind = string_field(obj, "kind", "adversary");
    AdversaryConfig cfg;
    cfg.target = string_field(obj, "target", "adversary");
    if (kind == "RESPONSE_DELAY") {
        reject_unknown_keys(obj, {"kind", "target", "extra_ms"}, "RESPONSE_DELAY adversary");
        cfg.kind = AdversaryKind::ResponseDelay;
        cfg.extra_ms = number_field(obj, "extra_ms", "RESPONSE_DELAY adversary", true);
    } else if (kind == "FORGED_HOP") {
        reject_unknown_keys(obj, {"kind", "target", "claimed_address", "at_ttl"},
                            "FORGED_HOP adversary");
        cfg.kind = AdversaryKind::ForgedHop;
        cfg.claimed_address = addr_field(obj, "claimed_address", "FORGED_HOP adversary");
        cfg.at_ttl = static_cast<int>(number_field(obj, "at_ttl", "FORGED_HOP adversary", true));
    } else if (kind == "ROUTER_DDOS") {
        reject_unknown_keys(obj, {"kind", "target", "epsilon_ms", "active_from_ms", "active_to_ms"},
                            "ROUTER_DDOS adversary");
        cfg.kind = AdversaryKind::RouterDdos;
        cfg.epsilon_ms = number_field(obj, "epsilon_ms", "ROUTER_DDOS adversary", true);
        cfg.active_from_ms = number_field(obj, "active_from_ms", "ROUTER_DDOS adversary", false, 0.0);
        cfg.active_to_ms = number_field(obj, "active_to_ms", "ROUTER_DDOS adversary", false,
                                        std::numeric_limits<double>::infinity());
    } else {
        raise(Status::ParseFailure, "unknown adversary kind '" + kind + "'");
    }
    return cfg;
}

TopologySpec topology_from(const json& doc) {
    if (!doc.is_object()) raise(Status::ParseFailure, "topology document must be an object");
    reject_unknown_keys(doc, {"routers", "links", "subnets"}, "topology");

    TopologySpec spec;
    for (const auto& r : doc.value("routers", json::array())) {
        reject_unknown_keys(r, {"id", "addresses"}, "router");
        RouterSpec router;
        router.id = string_field(r, "id", "router");
        if (!r.contains("addresses") || !r["addresses"].is_array())
            raise(Status::ParseFailure, "router '" + router.id + "' needs an addresses array");
        for (const auto& a : r["addresses"]) {
            if (!a.is_string()) raise(Status::ParseFailure, "router address must be a string");
            router.addresses.push_back(Ipv4::parse_or_throw(a.get<std::string>()));
        }
        spec.routers.push_back(std::move(router));
    }
    for (const auto& l : doc.value("links", json::array())) {
        reject_unknown_keys(l, {"endpoint_a", "endpoint_b", "one_way_latency_ms", "jitter_ms"},
                            "link");
        LinkSpec link;
        link.endpoint_a = string_field(l, "endpoint_a", "link");
        link.endpoint_b = string_field(l, "endpoint_b", "link");
        link.one_way_latency_ms = number_field(l, "one_way_latency_ms", "link", true);
        link.jitter_ms = number_field(l, "jitter_ms", "link", false, 0.0);
        spec.links.push_back(std::move(link));
    }
    for (const auto& s : doc.value("subnets", json::array())) {
        reject_unknown_keys(s, {"cidr", "gateway_router", "hosts"}, "subnet");
        SubnetSpec subnet;
        std::string cidr = string_field(s, "cidr", "subnet");
        auto slash = cidr.find('/');
        if (slash == std::string::npos || cidr.substr(slash + 1) != "24")
            raise(Status::InvalidTopology, "subnet cidr '" + cidr + "' must be a /24");
        subnet.cidr_base = Ipv4::parse_or_throw(cidr.substr(0, slash));
        subnet.gateway_router = string_field(s, "gateway_router", "subnet");
        if (!s.contains("hosts") || !s["hosts"].is_array())
            raise(Status::ParseFailure, "subnet '" + cidr + "' needs a hosts array");
        for (const auto& h : s["hosts"]) {
            reject_unknown_keys(h, {"last_octet", "address", "reachable", "one_way_last_hop_ms"},
                                "host");
            HostSpec host;
            if (h.contains("address")) {
                // Full addresses are accepted but must fall inside the /24.
                Ipv4 addr = addr_field(h, "address", "host");
                if (addr.slash24() != subnet.cidr_base.value)
                    raise(Status::InvalidTopology, "host " + addr.to_string() +
                                                       " lies outside subnet " + cidr);
                host.last_octet = addr.last_octet();
            } else {
                double octet = number_field(h, "last_octet", "host", true);
                if (octet < 0 || octet > 255 || octet != static_cast<int>(octet))
                    raise(Status::InvalidTopology, "host last_octet must be an integer in [0,255]");
                host.last_octet = static_cast<uint8_t>(octet);
            }
            host.reachable = h.value("reachable", true);
            host.one_way_last_hop_ms = number_field(h, "one_way_last_hop_ms", "host", false, 0.0);
            subnet.hosts.push_back(host);
        }
        spec.subnets.push_back(std::move(subnet));
    }
    return spec;
}

}  // namespace

TopologySpec topology_from_json(const std::string& json_text) {
    return topology_from(parse(json_text, "topology"));
}

TopologySpec topology_from_file(const std::string& path) {
    return topology_from_json(read_file(path));
}

std::string topology_to_json(const TopologySpec& spec) {
    json doc;
    doc["routers"] = json::array();
    for (const auto& r : spec.routers) {
        json addrs = json::array();
        for (const auto& a : r.addresses) addrs.push_back(a.to_string());
        doc["routers"].push_back({{"id", r.id}, {"addresses", std::move(addrs)}});
    }
    doc["links"] = json::array();
    for (const auto& l : spec.links)
        doc["links"].push_back({{"endpoint_a", l.endpoint_a},
                                {"endpoint_b", l.endpoint_b},
                                {"one_way_latency_ms", l.one_way_latency_ms},
                                {"jitter_ms", l.jitter_ms}});
    doc["subnets"] = json::array();
    for (const auto& s : spec.subnets) {
        json hosts = json::array();
        for (const auto& h : s.hosts)
            hosts.push_back({{"last_octet", h.last_octet},
                             {"reachable", h.reachable},
                             {"one_way_last_hop_ms", h.one_way_last_hop_ms}});
        doc["subnets"].push_back({{"cidr", s.cidr_base.to_string() + "/24"},
                                  {"gateway_router", s.gateway_router},
                                  {"hosts", std::move(hosts)}});
    }
    return doc.dump(2);
}

AdversaryConfig adversary_from_json(const std::string& json_text) {
    return adversary_from(parse(json_text, "adversary"));
}

std::vector<AdversaryConfig> adversaries_from_json_array(const std::string& json_text) {
    json doc = parse(json_text, "adversaries");
    if (!doc.is_array()) raise(Status::ParseFailure, "adversaries document must be an array");
    std::vector<AdversaryConfig> out;
    for (const auto& entry : doc) out.push_back(adversary_from(entry));
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Status::IoFailure, "cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(Status::IoFailure, "cannot open '" + path + "' for writing");
    out << content;
    if (!out.flush()) raise(Status::IoFailure, "short write to '" + path + "'");
}

}  // namespace odin
