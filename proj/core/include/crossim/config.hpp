#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "crossim/dynamics.hpp"
#include "crossim/geometry.hpp"
#include "crossim/search.hpp"

namespace crossim {

/// Parsed INI-style text: [section] headers over key = value lines,
/// '#'/';' comments. Section and key order preserved.
class IniFile {
  public:
    static IniFile parse(const std::string& text);

    bool has_section(const std::string& name) const;
    std::vector<std::string> section_names() const;
    const std::vector<std::pair<std::string, std::string>>& entries(
        const std::string& section) const;

  private:
    std::vector<std::string> order_;
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections_;
};

/// Everything one experiment needs: two (or more) sibling simulators, a twin,
/// the model under test, the reference autopilot, and the search settings.
struct ExperimentConfig {
    std::uint64_t global_seed = 0;
    int repetitions = 5;
    std::string output_dir = "out";
    int jobs = 0;  // 0 = hardware concurrency

    SearchConfig search;        // per-repetition seeds assigned by the pipeline
    RoadGenParams gen;
    DrivingModelConfig model;
    DrivingModelConfig autopilot;

    std::vector<SimulatorConfig> siblings;  // >= 2, pairwise distinct physics
    SimulatorConfig twin;
    bool has_twin = false;

    int offline_road_pairs = 10;  // unique roads; each also driven reversed
    int density_bins = 25;
};

/// Parses and validates; throws ConfigError with a path-qualified message
/// ("sibling.ds1.timestep: ...") on any violation.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// The pinned reference experiment (fixed seed); also shipped as
/// configs/reference.ini.
const std::string& reference_config_text();

}  // namespace crossim
