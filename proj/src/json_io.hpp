#pragma once

#include <string>
#include <vector>

#include "simnet.hpp"

namespace odin {

// Topology documents are JSON objects with arrays of routers, links, and
// subnets. The loader rejects unknown keys so typos fail loudly.
TopologySpec topology_from_json(const std::string& json_text);
TopologySpec topology_from_file(const std::string& path);
std::string topology_to_json(const TopologySpec& spec);

AdversaryConfig adversary_from_json(const std::string& json_text);
std::vector<AdversaryConfig> adversaries_from_json_array(const std::string& json_text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace odin
