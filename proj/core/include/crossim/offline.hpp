#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crossim/dynamics.hpp"
#include "crossim/geometry.hpp"

namespace crossim {

/// One autopilot drive recorded for offline evaluation: the observation
/// stream and the steering the autopilot produced at each step.
struct OfflineEpisode {
    std::string test_id;
    std::vector<Observation> observations;
    std::vector<double> autopilot_steering;
};

struct OfflineDataset {
    std::string simulator;
    SimulatorConfig sim;
    std::vector<OfflineEpisode> episodes;

    std::size_t sample_count() const;
};

/// Prediction errors of a model replayed over a recorded dataset, sample
/// order. Absolute errors feed the distribution metrics; signed errors are
/// kept for inspection.
struct OfflineErrors {
    std::vector<double> abs_error;
    std::vector<double> signed_error;
};

/// n_unique random roads, each followed by its reversed twin.
std::vector<RoadSpec> offline_roads(std::uint64_t seed, int n_unique, int n_control,
                                    const RoadGenParams& params);

/// Drives every road with the autopilot on the given simulator and records
/// the (observation, steering) pairs, all outcomes included.
OfflineDataset collect_offline_dataset(const SimulatorConfig& sim,
                                       const std::vector<RoadSpec>& roads,
                                       const DrivingModelConfig& autopilot,
                                       std::uint64_t episode_seed_base,
                                       const EpisodeLimits& limits, int jobs = 1);

/// Replays the model over the recorded observations (controller state reset
/// per episode) and returns per-sample errors against the autopilot labels.
OfflineErrors offline_eval(const DrivingModelConfig& model, const OfflineDataset& dataset,
                           std::uint64_t seed);

/// Sibling ensemble pooling: first min(|a|, |b|) samples of each list,
/// concatenated, so both siblings weigh equally.
std::vector<double> pool_dss(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace crossim
