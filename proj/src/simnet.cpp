#include "simnet.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "error.hpp"

namespace odin {

namespace {

constexpr int kMessageTtl = 64;

Ipv4 vantage_addr() { return Ipv4{kVantageAddrValue}; }

}  // namespace

const char* packet_kind_name(PacketKind k) {
    switch (k) {
        case PacketKind::Probe: return "PROBE";
        case PacketKind::TimeExceeded: return "TIME_EXCEEDED";
        case PacketKind::EchoReply: return "ECHO_REPLY";
        case PacketKind::ForgedReply: return "FORGED_REPLY";
        case PacketKind::Message: return "MSG";
        case PacketKind::MessageAck: return "MSG_ACK";
        case PacketKind::Adversary: return "ADVERSARY";
    }
    return "UNKNOWN";
}

SimNet::SimNet(TopologySpec spec, uint64_t seed)
    : spec_(std::move(spec)), seed_(seed), rng_(seed) {
    validate_and_build();
    compute_routes();
}

void SimNet::validate_and_build() {
    std::set<uint32_t> seen_addrs;
    auto claim_address = [&](const Ipv4& addr, const std::string& owner) {
        if (addr.value == kVantageAddrValue)
            raise(Status::InvalidTopology, owner + " uses the reserved vantage address");
        if (!seen_addrs.insert(addr.value).second)
            raise(Status::InvalidTopology, "duplicate address " + addr.to_string());
    };

    for (const auto& router : spec_.routers) {
        if (router.id.empty() || router.id == kVantageId)
            raise(Status::InvalidTopology, "bad router id '" + router.id + "'");
        if (router_index_.count(router.id))
            raise(Status::InvalidTopology, "duplicate router id '" + router.id + "'");
        if (router.addresses.empty())
            raise(Status::InvalidTopology, "router '" + router.id + "' has no addresses");
        Node node;
        node.kind = Node::Kind::Router;
        node.id = router.id;
        node.addresses = router.addresses;
        router_index_[router.id] = static_cast<int>(nodes_.size());
        for (const auto& addr : router.addresses) {
            claim_address(addr, "router '" + router.id + "'");
            addr_index_[addr.value] = static_cast<int>(nodes_.size());
        }
        nodes_.push_back(std::move(node));
    }

    for (const auto& link : spec_.links) {
        for (const auto& end : {link.endpoint_a, link.endpoint_b}) {
            if (end != kVantageId && !router_index_.count(end))
                raise(Status::InvalidTopology, "link references unknown endpoint '" + end + "'");
        }
        if (link.endpoint_a == link.endpoint_b)
            raise(Status::InvalidTopology, "link from '" + link.endpoint_a + "' to itself");
        if (link.one_way_latency_ms < 0.0 || link.jitter_ms < 0.0)
            raise(Status::InvalidTopology, "negative latency or jitter on link " +
                                               link.endpoint_a + "--" + link.endpoint_b);
    }

    for (size_t si = 0; si < spec_.subnets.size(); ++si) {
        const auto& subnet = spec_.subnets[si];
        if (subnet.cidr_base.last_octet() != 0)
            raise(Status::InvalidTopology,
                  "subnet base " + subnet.cidr_base.to_string() + " is not /24 aligned");
        auto gw = router_index_.find(subnet.gateway_router);
        if (gw == router_index_.end())
            raise(Status::InvalidTopology,
                  "subnet " + subnet.cidr_base.to_string() + "/24 names unknown gateway '" +
                      subnet.gateway_router + "'");
        if (!subnet_by_base_.emplace(subnet.cidr_base.value, static_cast<int>(si)).second)
            raise(Status::InvalidTopology,
                  "duplicate subnet " + subnet.cidr_base.to_string() + "/24");

        std::set<uint8_t> seen_octets;
        for (const auto& host : subnet.hosts) {
            if (!seen_octets.insert(host.last_octet).second)
                raise(Status::InvalidTopology,
                      "duplicate host octet " + std::to_string(host.last_octet) + " in " +
                          subnet.cidr_base.to_string() + "/24");
            if (host.one_way_last_hop_ms < 0.0)
                raise(Status::InvalidTopology, "negative last-hop latency");
            Ipv4 addr = subnet.host_address(host);
            claim_address(addr, "host");
            Node node;
            node.kind = Node::Kind::Host;
            node.id = "h-" + addr.to_string();
            node.addresses = {addr};
            node.reachable = host.reachable;
            node.last_hop_ms = host.one_way_last_hop_ms;
            node.gateway_index = gw->second;
            addr_index_[addr.value] = static_cast<int>(nodes_.size());
            nodes_.push_back(std::move(node));
        }
    }
}

void SimNet::compute_routes() {
    // Dijkstra from the vantage point over the router graph. Ties break on the
    // earlier-declared node so routes are stable across rebuilds.
    const int n = static_cast<int>(spec_.routers.size());
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n + 1, kInf);  // index n = vantage
    std::vector<int> via_link(n + 1, -1);
    std::vector<int> prev(n + 1, -1);

    auto endpoint_index = [&](const std::string& id) {
        return id == kVantageId ? n : router_index_.at(id);
    };

    dist[n] = 0.0;
    std::vector<bool> done(n + 1, false);
    for (int round = 0; round <= n; ++round) {
        int best = -1;
        for (int i = 0; i <= n; ++i)
            if (!done[i] && dist[i] < kInf && (best == -1 || dist[i] < dist[best])) best = i;
        if (best == -1) break;
        done[best] = true;
        for (size_t li = 0; li < spec_.links.size(); ++li) {
            const auto& link = spec_.links[li];
            int a = endpoint_index(link.endpoint_a);
            int b = endpoint_index(link.endpoint_b);
            int other = a == best ? b : (b == best ? a : -1);
            if (other == -1 || done[other]) continue;
            double candidate = dist[best] + link.one_way_latency_ms;
            if (candidate < dist[other]) {
                dist[other] = candidate;
                via_link[other] = static_cast<int>(li);
                prev[other] = best;
            }
        }
    }

    for (int i = 0; i < n; ++i) {
        if (dist[i] == kInf)
            raise(Status::InvalidTopology,
                  "router '" + spec_.routers[i].id + "' unreachable from the vantage point");
        auto& node = nodes_[router_index_.at(spec_.routers[i].id)];
        node.one_way_ms = dist[i];
        std::vector<int> links;
        for (int cur = i; cur != n; cur = prev[cur]) links.push_back(via_link[cur]);
        std::reverse(links.begin(), links.end());
        node.route_links = std::move(links);
    }

    for (auto& node : nodes_) {
        if (node.kind == Node::Kind::Host)
            node.one_way_ms = nodes_[node.gateway_index].one_way_ms + node.last_hop_ms;
    }
}

int SimNet::node_for_address(const Ipv4& addr) const {
    auto it = addr_index_.find(addr.value);
    return it == addr_index_.end() ? -1 : it->second;
}

bool SimNet::is_declared_host(const Ipv4& addr) const {
    int i = node_for_address(addr);
    return i >= 0 && nodes_[i].kind == Node::Kind::Host;
}

std::optional<std::string> SimNet::subnet_gateway(const Ipv4& addr) const {
    auto it = subnet_by_base_.find(addr.slash24());
    if (it == subnet_by_base_.end()) return std::nullopt;
    return spec_.subnets[it->second].gateway_router;
}

double SimNet::ground_truth_rtt(const Ipv4& addr) const {
    int i = node_for_address(addr);
    if (i < 0) raise(Status::UnknownAddress, "no such node: " + addr.to_string());
    return 2.0 * nodes_[i].one_way_ms;
}

void SimNet::install_adversary(const AdversaryConfig& cfg) {
    bool known = router_index_.count(cfg.target) > 0;
    if (!known) {
        auto addr = Ipv4::parse(cfg.target);
        known = addr && node_for_address(*addr) >= 0;
    }
    if (!known) raise(Status::UnknownTarget, "adversary target '" + cfg.target + "' not found");

    adversaries_.push_back(cfg);
    LogEvent ev;
    ev.time_ms = clock_ms_;
    ev.node = cfg.target;
    ev.kind = PacketKind::Adversary;
    schedule(clock_ms_, std::move(ev));
}

double SimNet::jitter_for_link(int link_index) {
    double j = spec_.links[link_index].jitter_ms;
    if (j <= 0.0) return 0.0;
    return std::uniform_real_distribution<double>(0.0, j)(rng_);
}

double SimNet::ddos_extra(const std::string& router_id, double at_ms) const {
    double extra = 0.0;
    for (const auto& adv : adversaries_) {
        if (adv.kind == AdversaryKind::RouterDdos && adv.target == router_id &&
            at_ms >= adv.active_from_ms && at_ms < adv.active_to_ms)
            extra += adv.epsilon_ms;
    }
    return extra;
}

double SimNet::response_delay_extra(const Ipv4& addr) const {
    double extra = 0.0;
    const std::string literal = addr.to_string();
    for (const auto& adv : adversaries_) {
        if (adv.kind != AdversaryKind::ResponseDelay) continue;
        if (adv.target == literal) {
            extra += adv.extra_ms;
            continue;
        }
        auto it = router_index_.find(adv.target);
        if (it != router_index_.end()) {
            const auto& addrs = nodes_[it->second].addresses;
            if (std::find(addrs.begin(), addrs.end(), addr) != addrs.end()) extra += adv.extra_ms;
        }
    }
    return extra;
}

const AdversaryConfig* SimNet::forged_hop_for(const Ipv4& dst, int original_ttl) const {
    for (const auto& adv : adversaries_) {
        if (adv.kind != AdversaryKind::ForgedHop) continue;
        if (adv.at_ttl == original_ttl && adv.target == dst.to_string()) return &adv;
    }
    return nullptr;
}

void SimNet::schedule(double at_ms, LogEvent ev) {
    ev.time_ms = at_ms;
    queue_.push(QueuedEvent{at_ms, next_seq_++, std::move(ev)});
}

void SimNet::advance_clock(double dt_ms) {
    if (dt_ms < 0.0) raise(Status::InvalidArgument, "virtual time cannot move backwards");
    double until = clock_ms_ + dt_ms;
    while (!queue_.empty() && queue_.top().time_ms <= until) {
        QueuedEvent top = queue_.top();
        queue_.pop();
        clock_ms_ = std::max(clock_ms_, top.time_ms);
        log_.push_back(std::move(top.event));
    }
    clock_ms_ = until;
}

void SimNet::drain_events() {
    while (!queue_.empty()) advance_clock(queue_.top().time_ms - clock_ms_);
}

SimNet::Outcome SimNet::route_packet(const Ipv4& dst, int ttl, bool as_message,
                                     double depart_delay_ms) {
    Outcome out;
    const uint64_t packet_id = next_packet_id_++;
    const PacketKind request_kind = as_message ? PacketKind::Message : PacketKind::Probe;

    // Resolve the forward node sequence: routers toward dst, then possibly a host.
    int dst_node = node_for_address(dst);
    int final_router = -1;
    const Node* host = nullptr;
    if (dst_node >= 0 && nodes_[dst_node].kind == Node::Kind::Router) {
        final_router = dst_node;
    } else if (dst_node >= 0) {
        host = &nodes_[dst_node];
        final_router = host->gateway_index;
    } else {
        auto sn = subnet_by_base_.find(dst.slash24());
        if (sn == subnet_by_base_.end()) return out;  // no route: dropped at the vantage point
        final_router = router_index_.at(spec_.subnets[sn->second].gateway_router);
    }

    const auto& route = nodes_[final_router].route_links;

    // Rebuild the ordered router indices along the route.
    std::vector<int> path_routers;
    {
        std::string cur = kVantageId;
        for (int li : route) {
            const auto& link = spec_.links[li];
            cur = link.endpoint_a == cur ? link.endpoint_b : link.endpoint_a;
            path_routers.push_back(router_index_.at(cur));
        }
    }

    double t = clock_ms_ + depart_delay_ms;
    int remaining_ttl = ttl;
    int responder_node = -1;
    bool forged = false;
    Ipv4 forged_src;

    for (size_t hop = 0; hop < path_routers.size(); ++hop) {
        const Node& router = nodes_[path_routers[hop]];
        t += spec_.links[route[hop]].one_way_latency_ms + jitter_for_link(route[hop]);
        t += ddos_extra(router.id, t);
        remaining_ttl -= 1;

        LogEvent ev{t, router.id, request_kind, vantage_addr(), dst, remaining_ttl, packet_id};
        schedule(t, std::move(ev));

        bool owns_dst =
            std::find(router.addresses.begin(), router.addresses.end(), dst) != router.addresses.end();
        if (owns_dst) {
            responder_node = path_routers[hop];
            out.dest_reached = true;
            break;
        }
        if (remaining_ttl <= 0) {
            responder_node = path_routers[hop];
            if (const AdversaryConfig* adv = forged_hop_for(dst, ttl)) {
                forged = true;
                forged_src = adv->claimed_address;
            }
            break;
        }
    }

    if (responder_node < 0) {
        // TTL survived every router; the packet enters the subnet.
        if (host == nullptr || !host->reachable) return out;  // silence
        t += host->last_hop_ms;
        LogEvent ev{t, host->id, request_kind, vantage_addr(), dst, remaining_ttl, packet_id};
        schedule(t, std::move(ev));
        responder_node = dst_node;
        out.dest_reached = true;
    }

    const Node& responder = nodes_[responder_node];
    out.responder = forged ? forged_src
                           : (out.dest_reached ? dst : responder.addresses.front());
    out.replied = true;

    // Response leg back to the vantage point, retracing the forward path.
    if (out.dest_reached) t += response_delay_extra(dst);
    if (responder.kind == Node::Kind::Host) {
        t += responder.last_hop_ms;
    }
    int responder_router =
        responder.kind == Node::Kind::Host ? responder.gateway_index : responder_node;
    const auto& back_route = nodes_[responder_router].route_links;
    for (size_t i = back_route.size(); i-- > 0;) {
        const Node& router = nodes_[path_routers[i]];
        t += ddos_extra(router.id, t);
        t += spec_.links[back_route[i]].one_way_latency_ms + jitter_for_link(back_route[i]);
    }

    PacketKind reply_kind = as_message ? PacketKind::MessageAck
                            : forged   ? PacketKind::ForgedReply
                            : out.dest_reached ? PacketKind::EchoReply
                                               : PacketKind::TimeExceeded;
    LogEvent reply{t, kVantageId, reply_kind, out.responder, vantage_addr(), 0, packet_id};
    schedule(t, std::move(reply));
    out.reply_at_ms = t;
    return out;
}

SimNet::Outcome SimNet::deliver(const Ipv4& dst, int ttl, ProbeProtocol) {
    if (ttl < 1) raise(Status::InvalidArgument, "ttl must be >= 1");
    return route_packet(dst, ttl, /*as_message=*/false, 0.0);
}

SimNet::Outcome SimNet::deliver_message(const Ipv4& dst, double depart_delay_ms) {
    if (depart_delay_ms < 0.0) raise(Status::InvalidArgument, "departure delay must be >= 0");
    return route_packet(dst, kMessageTtl, /*as_message=*/true, depart_delay_ms);
}

std::string SimNet::render_log() const {
    std::string out;
    out.reserve(log_.size() * 96);
    char line[192];
    for (const auto& ev : log_) {
        std::snprintf(line, sizeof(line),
                      "%014.6f node=%s kind=%s src=%s dst=%s ttl=%d id=%llu\n", ev.time_ms,
                      ev.node.c_str(), packet_kind_name(ev.kind), ev.src.to_string().c_str(),
                      ev.dst.to_string().c_str(), ev.ttl,
                      static_cast<unsigned long long>(ev.packet_id));
        out += line;
    }
    return out;
}

std::optional<ProbeReply> SimTransport::probe(const Ipv4& destination, int ttl,
                                              ProbeProtocol protocol, double timeout_ms) {
    const double start = net_.now_ms();
    SimNet::Outcome out = net_.deliver(destination, ttl, protocol);
    if (out.replied && out.reply_at_ms - start <= timeout_ms) {
        net_.advance_clock(out.reply_at_ms - start);
        return ProbeReply{out.responder, out.reply_at_ms - start, out.dest_reached};
    }
    net_.advance_clock(timeout_ms);
    return std::nullopt;
}

}  // namespace odin
