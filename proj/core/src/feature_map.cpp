#include "crossim/feature_map.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "crossim/errors.hpp"
#include "crossim/parallel.hpp"
#include "crossim/rng.hpp"

namespace crossim {

const char* to_string(MetricKind m) {
    return m == MetricKind::FailureProbability ? "failure_probability" : "lack_of_quality";
}

MetricKind metric_kind_from_string(const std::string& s) {
    if (s == "failure_probability") return MetricKind::FailureProbability;
    if (s == "lack_of_quality") return MetricKind::LackOfQuality;
    throw std::invalid_argument("unknown metric kind: " + s);
}

CellKey cell_key_for(const RoadFeatures& features, double curvature_bin_width) {
    if (curvature_bin_width <= 0.0)
        throw std::invalid_argument("cell_key_for: bin width must be positive");
    CellKey key;
    key.turns = features.turn_count;
    key.curvature_bin = static_cast<int>(std::lround(features.curvature / curvature_bin_width));
    return key;
}

void AxisBounds::expand(const CellKey& key) {
    if (empty) {
        turns_lo = turns_hi = key.turns;
        curvature_lo = curvature_hi = key.curvature_bin;
        empty = false;
        return;
    }
    turns_lo = std::min(turns_lo, key.turns);
    turns_hi = std::max(turns_hi, key.turns);
    curvature_lo = std::min(curvature_lo, key.curvature_bin);
    curvature_hi = std::max(curvature_hi, key.curvature_bin);
}

void AxisBounds::expand(const AxisBounds& other) {
    if (other.empty) return;
    expand(CellKey{other.turns_lo, other.curvature_lo});
    expand(CellKey{other.turns_hi, other.curvature_hi});
}

std::size_t CombinedFeatureMap::record_count() const {
    std::size_t n = 0;
    for (const auto& [key, records] : cells) n += records.size();
    return n;
}

std::vector<std::string> CombinedFeatureMap::sorted_test_ids() const {
    std::vector<std::string> ids;
    ids.reserve(record_count());
    for (const auto& [key, records] : cells) {
        for (const TestRecord& r : records) ids.push_back(r.test_id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

double CombinedFeatureMap::value_at(const CellKey& key) const {
    const auto it = stats.find(key);
    if (it == stats.end()) throw std::out_of_range("value_at: no such cell");
    return metric == MetricKind::FailureProbability ? it->second.failure_probability
                                                    : it->second.mean_max_lp;
}

std::vector<TestRecord> all_records_sorted(const CombinedFeatureMap& map) {
    std::vector<TestRecord> records;
    records.reserve(map.record_count());
    for (const auto& [key, cell_records] : map.cells) {
        records.insert(records.end(), cell_records.begin(), cell_records.end());
    }
    std::sort(records.begin(), records.end(),
              [](const TestRecord& a, const TestRecord& b) { return a.test_id < b.test_id; });
    return records;
}

double normalized_lp(double max_lp, const Normalization& norm) {
    if (!(norm.hi > norm.lo)) return 0.0;  // degenerate scale: everything at the minimum
    const double v = (max_lp - norm.lo) / (norm.hi - norm.lo);
    return std::min(1.0, std::max(0.0, v));
}

void recompute_stats(CombinedFeatureMap& map) {
    map.stats.clear();
    map.bounds = AxisBounds{};
    for (const auto& [key, records] : map.cells) {
        if (records.empty()) continue;
        CellStatistic stat;
        stat.n_tests = static_cast<int>(records.size());
        int fails = 0;
        double lp_sum = 0.0;
        for (const TestRecord& r : records) {
            if (r.outcome == Outcome::Oob) ++fails;
            lp_sum += map.norm ? normalized_lp(r.max_lateral_position, *map.norm)
                               : r.max_lateral_position;
        }
        stat.failure_probability = static_cast<double>(fails) / static_cast<double>(stat.n_tests);
        stat.mean_max_lp = lp_sum / static_cast<double>(stat.n_tests);
        map.stats[key] = stat;
        map.bounds.expand(key);
    }
}

Normalization compute_normalization(const std::vector<const CombinedFeatureMap*>& maps) {
    Normalization norm;
    bool any = false;
    for (const CombinedFeatureMap* m : maps) {
        for (const auto& [key, records] : m->cells) {
            for (const TestRecord& r : records) {
                if (!any) {
                    norm.lo = norm.hi = r.max_lateral_position;
                    any = true;
                } else {
                    norm.lo = std::min(norm.lo, r.max_lateral_position);
                    norm.hi = std::max(norm.hi, r.max_lateral_position);
                }
            }
        }
    }
    if (!any) throw EmptyDataset("compute_normalization: no records");
    return norm;
}

void set_normalization(CombinedFeatureMap& map, const Normalization& norm) {
    map.norm = norm;
    recompute_stats(map);
}

CombinedFeatureMap migrate(const std::vector<TestRecord>& tests, const DrivingModelConfig& model,
                           const SimulatorConfig& target, double curvature_bin_width,
                           std::uint64_t episode_seed_base, const EpisodeLimits& limits,
                           int jobs) {
    struct Outcome1 {
        TestRecord record;
        bool timeout = false;
    };
    std::vector<Outcome1> executed(tests.size());

    parallel_for(tests.size(), jobs, [&](std::size_t i) {
        const TestRecord& src = tests[i];
        const RoadPolyline poly = interpolate_catmull_rom(src.spec);
        const std::uint64_t seed =
            derive_seed(episode_seed_base, "episode", target.name, src.test_id);
        const EpisodeResult ep =
            run_episode(model, target, poly, src.spec.lane_width, limits, seed);

        Outcome1& out = executed[i];
        out.record.test_id = src.test_id;
        out.record.simulator = target.name;
        out.record.spec = src.spec;
        out.record.features = src.features;
        out.record.outcome = ep.outcome;
        out.record.fitness = ep.fitness;
        out.record.max_lateral_position = ep.max_lateral_position;
        out.timeout = ep.outcome == Outcome::Timeout;
    });

    CombinedFeatureMap map;
    map.curvature_bin_width = curvature_bin_width;
    map.simulator = target.name;
    for (Outcome1& out : executed) {
        if (out.timeout) {
            ++map.timeouts;
            continue;
        }
        map.cells[cell_key_for(out.record.features, curvature_bin_width)]
            .push_back(std::move(out.record));
    }
    recompute_stats(map);
    return map;
}

CombinedFeatureMap union_maps(const std::vector<CombinedFeatureMap>& maps) {
    if (maps.empty()) throw EmptyDataset("union_maps: no input maps");
    const double bin = maps.front().curvature_bin_width;
    const std::string& sim = maps.front().simulator;
    for (const CombinedFeatureMap& m : maps) {
        if (m.curvature_bin_width != bin)
            throw MismatchedBinning("union_maps: curvature bin widths differ");
        if (m.simulator != sim)
            throw MismatchedTestSets("union_maps: maps executed on different simulators (" + sim +
                                     " vs " + m.simulator + ")");
    }

    CombinedFeatureMap out;
    out.curvature_bin_width = bin;
    out.simulator = sim;
    out.metric = maps.front().metric;
    out.norm = maps.front().norm;
    for (const CombinedFeatureMap& m : maps) {
        out.timeouts += m.timeouts;
        for (const auto& [key, records] : m.cells) {
            auto& target = out.cells[key];
            target.insert(target.end(), records.begin(), records.end());
        }
    }
    // Pooled-record recount gives exactly (sum n_i)/(sum N_i) per cell.
    recompute_stats(out);

    // Quality is the mean of the inputs' per-cell means, not the pooled mean.
    for (auto& [key, stat] : out.stats) {
        double sum = 0.0;
        int contributing = 0;
        for (const CombinedFeatureMap& m : maps) {
            const auto it = m.stats.find(key);
            if (it == m.stats.end()) continue;
            const double mean =
                out.norm && !m.norm
                    ? [&] {
                          double s = 0.0;
                          const auto& records = m.cells.at(key);
                          for (const TestRecord& r : records)
                              s += normalized_lp(r.max_lateral_position, *out.norm);
                          return s / static_cast<double>(records.size());
                      }()
                    : it->second.mean_max_lp;
            sum += mean;
            ++contributing;
        }
        if (contributing > 0) stat.mean_max_lp = sum / static_cast<double>(contributing);
    }
    return out;
}

CombinedFeatureMap merge_maps(const std::vector<CombinedFeatureMap>& maps) {
    if (maps.empty()) throw EmptyDataset("merge_maps: no input maps");
    const CombinedFeatureMap& first = maps.front();
    const auto ids = first.sorted_test_ids();
    for (const CombinedFeatureMap& m : maps) {
        if (m.curvature_bin_width != first.curvature_bin_width)
            throw MismatchedBinning("merge_maps: curvature bin widths differ");
        if (m.metric != first.metric)
            throw MismatchedCells("merge_maps: metric kinds differ");
        if (m.cells.size() != first.cells.size() ||
            !std::equal(m.cells.begin(), m.cells.end(), first.cells.begin(),
                        [](const auto& a, const auto& b) { return a.first == b.first; }))
            throw MismatchedCells("merge_maps: cell sets differ");
        if (m.sorted_test_ids() != ids)
            throw MismatchedCells("merge_maps: test sets differ");
    }

    CombinedFeatureMap out;
    out.curvature_bin_width = first.curvature_bin_width;
    out.metric = first.metric;
    out.simulator = "dss";
    out.norm = first.norm;
    for (const auto& [key, records] : first.cells) {
        CellStatistic stat;
        if (first.metric == MetricKind::FailureProbability) {
            double fp = 1.0;
            for (const CombinedFeatureMap& m : maps) fp *= m.stats.at(key).failure_probability;
            stat.failure_probability = fp;
        } else {
            double qm = 1.0;
            bool any = false;
            for (const CombinedFeatureMap& m : maps) {
                const double v = m.stats.at(key).mean_max_lp;
                qm = any ? std::min(qm, v) : v;
                any = true;
            }
            stat.mean_max_lp = qm;
        }
        for (const CombinedFeatureMap& m : maps) stat.n_tests += m.stats.at(key).n_tests;
        out.stats[key] = stat;
        out.bounds.expand(key);
    }
    return out;
}

std::map<CellKey, bool> binarize_twin(const CombinedFeatureMap& map) {
    std::map<CellKey, bool> labels;
    for (const auto& [key, stat] : map.stats) {
        labels[key] = stat.failure_probability > 0.0;
    }
    return labels;
}

PairedSeries paired_cells(const CombinedFeatureMap& a, const CombinedFeatureMap& b,
                          MetricKind metric) {
    PairedSeries series;
    series.key = std::string("cells:") + to_string(metric);
    for (const auto& [key, stat_a] : a.stats) {
        const auto it = b.stats.find(key);
        if (it == b.stats.end()) continue;
        if (metric == MetricKind::FailureProbability) {
            series.x.push_back(stat_a.failure_probability);
            series.y.push_back(it->second.failure_probability);
        } else {
            series.x.push_back(stat_a.mean_max_lp);
            series.y.push_back(it->second.mean_max_lp);
        }
    }
    return series;
}

void score_cells(const CombinedFeatureMap& pred, const std::map<CellKey, bool>& labels,
                 MetricKind metric, std::vector<double>& scores, std::vector<bool>& out_labels) {
    scores.clear();
    out_labels.clear();
    for (const auto& [key, stat] : pred.stats) {
        const auto it = labels.find(key);
        if (it == labels.end()) continue;
        scores.push_back(metric == MetricKind::FailureProbability ? stat.failure_probability
                                                                  : stat.mean_max_lp);
        out_labels.push_back(it->second);
    }
}

}  // namespace crossim
