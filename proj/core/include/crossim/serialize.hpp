#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crossim/feature_map.hpp"
#include "crossim/search.hpp"

namespace crossim {

/// Shortest round-trip decimal form (what all CSV/JSON artifacts use, so
/// artifact bytes are reproducible).
std::string format_double(double v);

std::string road_to_json(const RoadSpec& spec);
RoadSpec road_from_json(const std::string& text);

std::string archive_to_json(const Archive& archive);
Archive archive_from_json(const std::string& text);

std::string map_to_json(const CombinedFeatureMap& map);
CombinedFeatureMap map_from_json(const std::string& text);

/// Placement history: one JSON object per line, log order.
std::string placement_log_to_jsonl(const std::vector<PlacementEvent>& log);
std::vector<PlacementEvent> placement_log_from_jsonl(const std::string& text);

/// Cell key as serialized: "<turns>:<curvature_bin>".
std::string cell_key_to_string(const CellKey& key);
CellKey cell_key_from_string(const std::string& s);

/// Episode trace CSV: time,x,y,heading,speed,lp,ld,steering,throttle.
std::string trace_to_csv(const EpisodeResult& episode, double lane_width);

/// Heatmap over the map's bounds, green (0) to red (1); empty cells blank.
std::string heatmap_svg(const CombinedFeatureMap& map, MetricKind metric);

/// Matrix CSV: rows = curvature bins (descending), columns = turn counts.
std::string heatmap_csv(const CombinedFeatureMap& map, MetricKind metric);

std::string read_file(const std::filesystem::path& path);

/// Write-temp-then-rename; parent directories created as needed.
void atomic_write(const std::filesystem::path& path, const std::string& content);

}  // namespace crossim
