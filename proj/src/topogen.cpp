#include "topogen.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "error.hpp"

namespace odin {

namespace {

double quantized_uniform(std::mt19937_64& rng, double lo, double hi) {
    double raw = std::uniform_real_distribution<double>(lo, hi)(rng);
    return std::round(raw * 1024.0) / 1024.0;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

Ipv4 router_address(int counter) {
    // Allocated out of 198.18.0.0/15 (benchmarking range), one per interface.
    return Ipv4{(198u << 24) | (18u << 16) | (static_cast<uint32_t>(counter / 250 + 1) << 8) |
                static_cast<uint32_t>(counter % 250 + 1)};
}

}  // namespace

GeneratedTopology generate_topology(const TopogenParams& params, uint64_t seed) {
    if (params.min_depth < 1 || params.max_depth < params.min_depth)
        raise(Status::InvalidArgument, "bad depth range");
    if (params.reachable_hosts_min < 1 || params.reachable_hosts_max > 254 ||
        params.reachable_hosts_max < params.reachable_hosts_min)
        raise(Status::InvalidArgument, "reachable host range must sit inside [1, 254]");

    std::mt19937_64 rng(seed);
    GeneratedTopology out;
    TopologySpec& spec = out.spec;
    int addr_counter = 0;

    const int depth = uniform_int(rng, params.min_depth, params.max_depth);
    std::string prev = kVantageId;
    for (int i = 0; i < depth; ++i) {
        RouterSpec router;
        router.id = "r" + std::to_string(i + 1);
        router.addresses = {router_address(addr_counter++)};
        spec.routers.push_back(router);
        LinkSpec link;
        link.endpoint_a = prev;
        link.endpoint_b = router.id;
        link.one_way_latency_ms =
            quantized_uniform(rng, params.link_latency_min_ms, params.link_latency_max_ms);
        link.jitter_ms = params.link_jitter_ms;
        spec.links.push_back(link);
        prev = router.id;
    }

    // Target /24 behind the deepest router.
    SubnetSpec subnet;
    subnet.cidr_base = Ipv4::parse_or_throw("203.0.113.0");
    subnet.gateway_router = prev;

    const double base_last_hop =
        quantized_uniform(rng, params.last_hop_base_min_ms, params.last_hop_base_max_ms);
    auto draw_last_hop = [&] {
        if (params.last_hop_deviant_fraction > 0.0 &&
            std::uniform_real_distribution<double>(0.0, 1.0)(rng) < params.last_hop_deviant_fraction) {
            double dev = quantized_uniform(rng, -params.last_hop_deviation_ms,
                                           params.last_hop_deviation_ms);
            return std::max(0.0, base_last_hop + dev);
        }
        return base_last_hop;
    };

    std::vector<uint8_t> octets(254);
    std::iota(octets.begin(), octets.end(), uint8_t{1});
    std::shuffle(octets.begin(), octets.end(), rng);
    const int host_count =
        uniform_int(rng, params.reachable_hosts_min, params.reachable_hosts_max);
    const int target_slot = uniform_int(rng, 0, host_count - 1);

    for (int i = 0; i < host_count; ++i) {
        const bool is_target = i == target_slot;
        if (!params.neighbors_reachable && !is_target) continue;
        HostSpec host;
        host.last_octet = octets[static_cast<size_t>(i)];
        host.reachable = true;
        host.one_way_last_hop_ms = draw_last_hop();
        if (is_target) out.target = subnet.host_address(host);
        subnet.hosts.push_back(host);
    }
    std::sort(subnet.hosts.begin(), subnet.hosts.end(),
              [](const HostSpec& a, const HostSpec& b) { return a.last_octet < b.last_octet; });
    spec.subnets.push_back(std::move(subnet));

    // A few side branches so routing is not a pure chain.
    const int branches = params.max_side_branches > 0
                             ? uniform_int(rng, 0, params.max_side_branches)
                             : 0;
    for (int b = 0; b < branches; ++b) {
        RouterSpec router;
        router.id = "side" + std::to_string(b + 1);
        router.addresses = {router_address(addr_counter++)};
        LinkSpec link;
        link.endpoint_a = spec.routers[static_cast<size_t>(uniform_int(rng, 0, depth - 1))].id;
        link.endpoint_b = router.id;
        link.one_way_latency_ms =
            quantized_uniform(rng, params.link_latency_min_ms, params.link_latency_max_ms);
        link.jitter_ms = params.link_jitter_ms;
        spec.routers.push_back(router);
        spec.links.push_back(link);

        SubnetSpec side;
        side.cidr_base = Ipv4{(10u << 24) | (9u << 16) | (static_cast<uint32_t>(b + 1) << 8)};
        side.gateway_router = router.id;
        HostSpec host;
        host.last_octet = static_cast<uint8_t>(uniform_int(rng, 1, 254));
        host.reachable = true;
        host.one_way_last_hop_ms = quantized_uniform(rng, params.last_hop_base_min_ms,
                                                     params.last_hop_base_max_ms);
        side.hosts.push_back(host);
        spec.subnets.push_back(std::move(side));
    }

    return out;
}

TopologySpec generate_tree(int router_count, int subnet_count, uint64_t seed) {
    if (router_count < 1) raise(Status::InvalidArgument, "router_count must be >= 1");
    std::mt19937_64 rng(seed);
    TopologySpec spec;
    int addr_counter = 0;
    for (int i = 0; i < router_count; ++i) {
        RouterSpec router;
        router.id = "r" + std::to_string(i);
        router.addresses = {router_address(addr_counter++)};
        spec.routers.push_back(router);
        LinkSpec link;
        link.endpoint_a = i == 0 ? kVantageId : "r" + std::to_string(uniform_int(rng, 0, i - 1));
        link.endpoint_b = router.id;
        link.one_way_latency_ms = quantized_uniform(rng, 1.0, 15.0);
        link.jitter_ms = 0.0;
        spec.links.push_back(link);
    }
    for (int s = 0; s < subnet_count; ++s) {
        SubnetSpec subnet;
        subnet.cidr_base =
            Ipv4{(10u << 24) | (static_cast<uint32_t>(s / 250 + 1) << 16) |
                 (static_cast<uint32_t>(s % 250) << 8)};
        subnet.gateway_router = "r" + std::to_string(uniform_int(rng, 0, router_count - 1));
        const int hosts = uniform_int(rng, 1, 6);
        std::vector<uint8_t> octets(254);
        std::iota(octets.begin(), octets.end(), uint8_t{1});
        std::shuffle(octets.begin(), octets.end(), rng);
        for (int h = 0; h < hosts; ++h) {
            HostSpec host;
            host.last_octet = octets[static_cast<size_t>(h)];
            host.reachable = uniform_int(rng, 0, 4) > 0;  // ~80% reachable
            host.one_way_last_hop_ms = quantized_uniform(rng, 0.1, 2.0);
            subnet.hosts.push_back(host);
        }
        std::sort(subnet.hosts.begin(), subnet.hosts.end(),
                  [](const HostSpec& a, const HostSpec& b) { return a.last_octet < b.last_octet; });
        spec.subnets.push_back(std::move(subnet));
    }
    return spec;
}

}  // namespace odin
