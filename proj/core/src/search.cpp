#include "crossim/search.hpp"

#include <optional>
#include <stdexcept>
#include <string>

#include "crossim/errors.hpp"
#include "crossim/parallel.hpp"

namespace crossim {

namespace {

struct Execution {
    Individual individual;
    bool timeout = false;
};

Execution execute(const RoadSpec& spec, const std::string& test_id,
                  const DrivingModelConfig& model, const SimulatorConfig& sim,
                  const SearchConfig& cfg) {
    const RoadPolyline poly = interpolate_catmull_rom(spec);
    const std::uint64_t seed = derive_seed(cfg.episode_seed_base, "episode", sim.name, test_id);
    const EpisodeResult ep = run_episode(model, sim, poly, spec.lane_width, cfg.limits, seed);

    Execution exec;
    exec.individual.spec = spec;
    exec.individual.features = road_features(poly);
    exec.individual.outcome = ep.outcome;
    exec.individual.fitness = ep.fitness;
    exec.individual.max_lateral_position = ep.max_lateral_position;
    exec.individual.test_id = test_id;
    exec.timeout = ep.outcome == Outcome::Timeout;
    return exec;
}

}  // namespace

const Individual& select_individual(const std::vector<Individual>& population, Rng& rng) {
    if (population.empty()) throw EmptyPopulation("select_individual: empty population");
    return population[rng.uniform_int(population.size())];
}

bool place_individual(Archive& archive, const Individual& candidate) {
    const CellKey key = cell_key_for(candidate.features, archive.curvature_bin_width);
    const auto it = archive.cells.find(key);
    if (it == archive.cells.end()) {
        archive.cells.emplace(key, candidate);
        return true;
    }
    const Individual& incumbent = it->second;
    if (incumbent.fitness > candidate.fitness && incumbent.fitness >= 0.0) {
        it->second = candidate;
        return true;
    }
    return false;
}

SearchResult run_search(const DrivingModelConfig& model, const SimulatorConfig& sim,
                        const SearchConfig& cfg) {
    if (cfg.population_size < 1)
        throw std::invalid_argument("run_search: population_size must be >= 1");
    if (cfg.iterations < 0) throw std::invalid_argument("run_search: iterations must be >= 0");

    SearchResult result;
    result.archive.curvature_bin_width = cfg.curvature_bin_width;
    result.archive.simulator = sim.name;

    RoadGenParams gen = cfg.gen;
    int event_index = 0;
    const auto log_skip = [&](const char* phase, const std::string& test_id, const char* note) {
        PlacementEvent ev;
        ev.index = event_index++;
        ev.phase = phase;
        ev.test_id = test_id;
        ev.note = note;
        result.log.push_back(ev);
        ++result.skipped;
    };
    const auto log_execution = [&](const char* phase, const Execution& exec) {
        PlacementEvent ev;
        ev.index = event_index++;
        ev.phase = phase;
        ev.test_id = exec.individual.test_id;
        ev.fitness = exec.individual.fitness;
        ev.outcome = exec.individual.outcome;
        if (exec.timeout) {
            ev.note = "timeout";
        } else {
            ev.has_cell = true;
            ev.cell = cell_key_for(exec.individual.features, cfg.curvature_bin_width);
            ev.placed = place_individual(result.archive, exec.individual);
        }
        result.log.push_back(ev);
        ++result.executed;
    };

    // Initial population: specs generated sequentially from per-slot streams,
    // episodes executed in parallel, placements applied in slot order.
    std::vector<std::optional<RoadSpec>> specs(static_cast<std::size_t>(cfg.population_size));
    std::vector<std::string> ids(static_cast<std::size_t>(cfg.population_size));
    for (int k = 0; k < cfg.population_size; ++k) {
        ids[static_cast<std::size_t>(k)] = cfg.run_id + "_t" + std::to_string(k);
        try {
            specs[static_cast<std::size_t>(k)] =
                generate_random_road(derive_seed(cfg.seed, "gen", k), cfg.n_control, gen);
        } catch (const GenerationExhausted&) {
            specs[static_cast<std::size_t>(k)] = std::nullopt;
        }
    }

    std::vector<std::optional<Execution>> executions(specs.size());
    parallel_for(specs.size(), cfg.jobs, [&](std::size_t k) {
        if (!specs[k]) return;
        executions[k] = execute(*specs[k], ids[k], model, sim, cfg);
    });

    std::vector<Individual> population;
    population.reserve(specs.size());
    for (std::size_t k = 0; k < specs.size(); ++k) {
        if (!executions[k]) {
            log_skip("init", ids[k], "generation_exhausted");
            continue;
        }
        log_execution("init", *executions[k]);
        population.push_back(executions[k]->individual);
    }
    if (population.empty())
        throw GenerationExhausted("run_search: no valid initial individuals");

    // Evolution loop: sequential by contract (each placement can change the
    // archive the next iteration competes against).
    Rng select_rng(derive_seed(cfg.seed, "select"));
    for (int i = 0; i < cfg.iterations; ++i) {
        const Individual& parent = select_individual(population, select_rng);
        const std::string test_id =
            cfg.run_id + "_t" + std::to_string(cfg.population_size + i);
        RoadSpec mutant;
        try {
            mutant = mutate_road(parent.spec, derive_seed(cfg.seed, "mutate", i),
                                 cfg.mutation_displacement);
        } catch (const MutationExhausted&) {
            log_skip("evolve", test_id, "mutation_exhausted");
            continue;
        }
        log_execution("evolve", execute(mutant, test_id, model, sim, cfg));
    }
    return result;
}

CombinedFeatureMap combine_runs(const std::vector<Archive>& runs) {
    if (runs.empty()) throw EmptyDataset("combine_runs: no archives");
    CombinedFeatureMap map;
    map.curvature_bin_width = runs.front().curvature_bin_width;
    map.simulator = runs.front().simulator;
    for (const Archive& run : runs) {
        if (run.curvature_bin_width != map.curvature_bin_width)
            throw MismatchedBinning("combine_runs: curvature bin widths differ");
        for (const auto& [key, ind] : run.cells) {
            TestRecord record;
            record.test_id = ind.test_id;
            record.simulator = run.simulator;
            record.spec = ind.spec;
            record.features = ind.features;
            record.outcome = ind.outcome;
            record.fitness = ind.fitness;
            record.max_lateral_position = ind.max_lateral_position;
            map.cells[key].push_back(std::move(record));
        }
    }
    recompute_stats(map);
    return map;
}

}  // namespace crossim
