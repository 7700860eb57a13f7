#include "crossim/offline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crossim/errors.hpp"
#include "crossim/parallel.hpp"
#include "crossim/rng.hpp"

namespace crossim {

std::size_t OfflineDataset::sample_count() const {
    std::size_t n = 0;
    for (const OfflineEpisode& ep : episodes) n += ep.observations.size();
    return n;
}

std::vector<RoadSpec> offline_roads(std::uint64_t seed, int n_unique, int n_control,
                                    const RoadGenParams& params) {
    if (n_unique < 1) throw std::invalid_argument("offline_roads: n_unique must be >= 1");
    std::vector<RoadSpec> roads;
    roads.reserve(static_cast<std::size_t>(n_unique) * 2);
    for (int k = 0; k < n_unique; ++k) {
        const RoadSpec spec =
            generate_random_road(derive_seed(seed, "offline_road", k), n_control, params);
        roads.push_back(spec);
        roads.push_back(reverse_spec(spec));
    }
    return roads;
}

OfflineDataset collect_offline_dataset(const SimulatorConfig& sim,
                                       const std::vector<RoadSpec>& roads,
                                       const DrivingModelConfig& autopilot,
                                       std::uint64_t episode_seed_base,
                                       const EpisodeLimits& limits, int jobs) {
    if (roads.empty()) throw EmptyDataset("collect_offline_dataset: no roads");

    OfflineDataset dataset;
    dataset.simulator = sim.name;
    dataset.sim = sim;
    dataset.episodes.resize(roads.size());

    parallel_for(roads.size(), jobs, [&](std::size_t k) {
        const std::string test_id = "off_t" + std::to_string(k);
        const RoadPolyline poly = interpolate_catmull_rom(roads[k]);
        const std::uint64_t seed = derive_seed(episode_seed_base, "episode", sim.name, test_id);
        const EpisodeResult ep = run_episode(autopilot, sim, poly, roads[k].lane_width, limits,
                                             seed, /*keep_trace=*/true);

        OfflineEpisode& out = dataset.episodes[k];
        out.test_id = test_id;
        out.observations.reserve(ep.trace.size());
        out.autopilot_steering.reserve(ep.trace.size());
        for (const EpisodeStep& step : ep.trace) {
            out.observations.push_back(step.obs);
            out.autopilot_steering.push_back(step.cmd.steering);
        }
    });
    return dataset;
}

OfflineErrors offline_eval(const DrivingModelConfig& model, const OfflineDataset& dataset,
                           std::uint64_t seed) {
    if (dataset.sample_count() == 0) throw EmptyDataset("offline_eval: empty dataset");

    OfflineErrors errors;
    errors.abs_error.reserve(dataset.sample_count());
    errors.signed_error.reserve(dataset.sample_count());
    for (const OfflineEpisode& ep : dataset.episodes) {
        ModelState state(derive_seed(seed, "offline_model", dataset.simulator, ep.test_id));
        for (std::size_t i = 0; i < ep.observations.size(); ++i) {
            const DrivingCommand cmd = drive(model, ep.observations[i], state, dataset.sim);
            const double diff = cmd.steering - ep.autopilot_steering[i];
            errors.abs_error.push_back(std::abs(diff));
            errors.signed_error.push_back(diff);
        }
    }
    return errors;
}

std::vector<double> pool_dss(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = std::min(a.size(), b.size());
    if (n == 0) throw EmptyDataset("pool_dss: a sibling contributed no samples");
    std::vector<double> pooled;
    pooled.reserve(2 * n);
    pooled.insert(pooled.end(), a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n));
    pooled.insert(pooled.end(), b.begin(), b.begin() + static_cast<std::ptrdiff_t>(n));
    return pooled;
}

}  // namespace crossim
