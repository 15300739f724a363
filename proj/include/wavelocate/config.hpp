#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>

#include "wavelocate/eval.hpp"
#include "wavelocate/mdn.hpp"
#include "wavelocate/mfp.hpp"
#include "wavelocate/wavefield.hpp"

namespace wavelocate::config {

// One flat view over every runtime setting. Parsed from an INI file with
// sections [plate], [sensors], [frequencies], [uncertainty], [network],
// [training], [mfp], [sweep], [io] plus a top-level seed; unknown sections or
// keys are rejected.
struct RunConfig {
  std::uint64_t seed = 1;

  wavefield::ScenarioConfig scenario;  // plate, sensors, frequencies,
                                       // uncertainty, damages, window
  wavefield::SplitCounts counts{100, 20, 50};

  mdn::NetworkSpec network;    // num_components 0 = damages + 1
  mdn::TrainConfig training;

  mfp::QueryGrid grid{1.0, 1.0, 100, 100};
  std::size_t cache_budget_bytes = std::size_t{512} << 20;

  eval::SweepSpec sweep;

  void validate() const;  // throws ConfigError subclasses, names the field
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::filesystem::path& path);

// full echo of the resolved configuration, written next to every output
nlohmann::ordered_json resolved_json(const RunConfig& config);

// sweep inputs assembled from the config (query grid spans the plate)
eval::SweepContext sweep_context(const RunConfig& config);

}  // namespace wavelocate::config
