#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"

#include "flownet/dynamics.hpp"
#include "flownet/stability.hpp"

namespace flownet {

// On-disk description of a network system; see README for the JSON layout.
struct NetworkSpecFile {
  int version = 1;
  NetworkSystem system;
  std::optional<NetworkState> initial_state;
  std::optional<std::uint64_t> seed;
};

NetworkSpecFile parse_spec_file(const std::string& path);
NetworkSpecFile parse_spec_json(const nlohmann::json& doc, const std::string& origin = "spec");
nlohmann::json spec_to_json(const NetworkSpecFile& spec);

// The committed initial state when present, otherwise a seeded uniform draw
// from [-1, 1). A seed override always forces the random draw.
NetworkState resolve_initial_state(const NetworkSpecFile& spec,
                                   std::optional<std::uint64_t> seed_override = {});

nlohmann::json mapping_to_json(const EdgeMapping& mapping);
nlohmann::json cover_to_json(const CycleCover& cover);
nlohmann::json certificate_to_json(const ConsensusCertificate& cert);
nlohmann::json report_to_json(const StaticReport& report);
nlohmann::json network_to_json(const ConstrainedNetwork& net);

struct CsvMetadata {
  std::optional<std::uint64_t> seed;
  double step = 0.0;
  double horizon = 0.0;
  int stride = 1;
};

// Header `t,x_0..,xc_0..,u_0..,V,sum_x` preceded by `#` metadata lines.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const CsvMetadata& meta);

}  // namespace flownet
