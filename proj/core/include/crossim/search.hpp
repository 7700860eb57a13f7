#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crossim/dynamics.hpp"
#include "crossim/feature_map.hpp"
#include "crossim/geometry.hpp"
#include "crossim/rng.hpp"

namespace crossim {

struct Individual {
    RoadSpec spec;
    RoadFeatures features;
    Outcome outcome = Outcome::Success;
    double fitness = 0.0;  // episode fitness: min lateral distance
    double max_lateral_position = 0.0;
    std::string test_id;
};

/// One illumination-search result: at most one individual per cell.
struct Archive {
    std::map<CellKey, Individual> cells;
    double curvature_bin_width = 0.01;
    std::string simulator;
};

struct SearchConfig {
    int population_size = 20;
    int iterations = 150;
    double mutation_displacement = 10.0;  // m, per-axis control-point move bound
    double curvature_bin_width = 0.01;    // 1/m
    std::uint64_t seed = 0;               // search streams (generate/select/mutate)
    std::uint64_t episode_seed_base = 0;  // episode streams; simulator+test scoped
    std::string run_id = "run";           // test ids become "<run_id>_t<k>"
    int n_control = 8;                    // control points per generated road
    RoadGenParams gen;
    EpisodeLimits limits;
    int jobs = 1;  // initial-population executions only; the loop is sequential
};

/// One line of the placement history. Every candidate execution logs exactly
/// one event; non-placements carry a note ("timeout", "generation_exhausted",
/// "mutation_exhausted") and no cell.
struct PlacementEvent {
    int index = 0;
    std::string phase;  // "init" | "evolve"
    std::string test_id;
    bool has_cell = false;
    CellKey cell;
    double fitness = 0.0;
    Outcome outcome = Outcome::Success;
    bool placed = false;
    std::string note;
};

struct SearchResult {
    Archive archive;
    std::vector<PlacementEvent> log;
    int executed = 0;  // episodes run
    int skipped = 0;   // generation/mutation failures
};

/// Uniform draw from the initial population (mutants never join the pool).
const Individual& select_individual(const std::vector<Individual>& population, Rng& rng);

/// Local competition: empty cell inserts; an occupied cell is replaced only
/// when the incumbent's fitness is strictly larger and non-negative. Returns
/// whether the candidate was stored.
bool place_individual(Archive& archive, const Individual& candidate);

/// MapElites run: generate + execute + place an initial population, then
/// `iterations` rounds of select -> mutate -> execute -> place. Generation or
/// mutation exhaustion skips the slot (logged), never aborts.
SearchResult run_search(const DrivingModelConfig& model, const SimulatorConfig& sim,
                        const SearchConfig& cfg);

/// Pools repeated runs into a multi-individual map; bounds span all inputs.
CombinedFeatureMap combine_runs(const std::vector<Archive>& runs);

}  // namespace crossim
