#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crossim/dynamics.hpp"
#include "crossim/geometry.hpp"
#include "crossim/stats.hpp"

namespace crossim {

enum class MetricKind { FailureProbability, LackOfQuality };

const char* to_string(MetricKind m);
MetricKind metric_kind_from_string(const std::string& s);

/// Feature-map cell coordinates: integer turn count x curvature bin index.
struct CellKey {
    int turns = 0;
    int curvature_bin = 0;
    auto operator<=>(const CellKey&) const = default;
};

CellKey cell_key_for(const RoadFeatures& features, double curvature_bin_width);

/// One executed test: the road, where it ran, and how the episode ended.
/// Timeouts never enter a map; outcome here is Success or Oob.
struct TestRecord {
    std::string test_id;
    std::string simulator;
    RoadSpec spec;
    RoadFeatures features;
    Outcome outcome = Outcome::Success;
    double fitness = 0.0;
    double max_lateral_position = 0.0;
};

struct CellStatistic {
    double failure_probability = 0.0;  // n_oob / n_tests
    double mean_max_lp = 0.0;          // normalized to [0,1] when a Normalization is set
    int n_tests = 0;
};

/// Global min-max scale for max lateral position, shared by every map in one
/// comparison so cross-map quality values stay comparable.
struct Normalization {
    double lo = 0.0;
    double hi = 1.0;
};

struct AxisBounds {
    int turns_lo = 0;
    int turns_hi = 0;
    int curvature_lo = 0;
    int curvature_hi = 0;
    bool empty = true;

    void expand(const CellKey& key);
    void expand(const AxisBounds& other);
};

/// Multi-individual feature map. Maps built from executions carry raw records
/// and recomputable statistics; union/merge products carry statistics only
/// where the formula output is not a raw recount.
struct CombinedFeatureMap {
    std::map<CellKey, std::vector<TestRecord>> cells;
    std::map<CellKey, CellStatistic> stats;
    AxisBounds bounds;
    MetricKind metric = MetricKind::FailureProbability;
    double curvature_bin_width = 0.01;
    std::string simulator;  // execution simulator; "dss" for the merged map
    std::optional<Normalization> norm;
    int timeouts = 0;  // executions excluded from the map

    std::size_t record_count() const;
    std::vector<std::string> sorted_test_ids() const;
    /// The tagged metric's value for a cell present in stats.
    double value_at(const CellKey& key) const;
};

/// Recomputes per-cell statistics from the raw records (failure probability as
/// a recount, mean normalized max lateral position).
void recompute_stats(CombinedFeatureMap& map);

/// Every record of the map, ordered by test id (deterministic re-execution
/// order for migration).
std::vector<TestRecord> all_records_sorted(const CombinedFeatureMap& map);

double normalized_lp(double max_lp, const Normalization& norm);

/// Min-max constants over every record in every given map.
Normalization compute_normalization(const std::vector<const CombinedFeatureMap*>& maps);

void set_normalization(CombinedFeatureMap& map, const Normalization& norm);

/// Re-executes each recorded road on the target simulator. Cell coordinates
/// are structural, so every migrated record lands in its source cell.
/// Episode seeds depend on (base seed, target simulator, test id) only, so a
/// map migrated onto its own source simulator reproduces its outcomes.
CombinedFeatureMap migrate(const std::vector<TestRecord>& tests, const DrivingModelConfig& model,
                           const SimulatorConfig& target, double curvature_bin_width,
                           std::uint64_t episode_seed_base, const EpisodeLimits& limits,
                           int jobs = 1);

/// Pools maps executed on one simulator (native + migrated onto it):
/// failure probability (sum n_i)/(sum N_i) from the pooled records, quality as
/// the arithmetic mean of the inputs' per-cell means.
CombinedFeatureMap union_maps(const std::vector<CombinedFeatureMap>& maps);

/// Conservative cross-sibling combination: product of failure probabilities
/// or minimum of lack-of-quality values, by the inputs' metric tag.
CombinedFeatureMap merge_maps(const std::vector<CombinedFeatureMap>& maps);

/// Ground-truth labels from the twin map: cell fails iff its failure
/// probability is > 0. Cells absent from the map yield no label.
std::map<CellKey, bool> binarize_twin(const CombinedFeatureMap& map);

/// Tagged metric values of both maps over their shared cells, key order.
PairedSeries paired_cells(const CombinedFeatureMap& a, const CombinedFeatureMap& b,
                          MetricKind metric);

/// Prediction scores vs twin labels over cells present in both, key order.
/// Higher score predicts failure for both metrics: failure probability
/// directly, and lack-of-quality because larger means worse driving.
void score_cells(const CombinedFeatureMap& pred, const std::map<CellKey, bool>& labels,
                 MetricKind metric, std::vector<double>& scores, std::vector<bool>& out_labels);

}  // namespace crossim
