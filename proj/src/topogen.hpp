#pragma once

#include <cstdint>

#include "simnet.hpp"

namespace odin {

// Knobs for the random topology generator. All latencies land on a 1/1024 ms
// grid so path sums stay exact in double arithmetic.
struct TopogenParams {
    int min_depth = 2;  // routers between the vantage point and the target subnet
    int max_depth = 5;
    double link_latency_min_ms = 3.0;
    double link_latency_max_ms = 10.0;
    double link_jitter_ms = 0.0;

    double last_hop_base_min_ms = 0.25;  // per-subnet base last-hop latency
    double last_hop_base_max_ms = 2.0;
    double last_hop_deviant_fraction = 0.0;  // share of hosts off the subnet base
    double last_hop_deviation_ms = 1.0;      // max |deviation| for deviant hosts

    int reachable_hosts_min = 180;  // density of the target's /24
    int reachable_hosts_max = 250;
    bool neighbors_reachable = true;  // false: only the target host answers

    int max_side_branches = 2;  // extra routers/subnets off the main path
};

struct GeneratedTopology {
    TopologySpec spec;
    Ipv4 target;  // designated reachable measurement target
};

// Deterministic in (params, seed).
GeneratedTopology generate_topology(const TopogenParams& params, uint64_t seed);

// Random connected router tree with subnets, for scale and determinism tests.
TopologySpec generate_tree(int router_count, int subnet_count, uint64_t seed);

}  // namespace odin
