#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crossim/config.hpp"
#include "crossim/feature_map.hpp"
#include "crossim/offline.hpp"
#include "crossim/search.hpp"
#include "crossim/stats.hpp"

namespace crossim {

/// One comparison row of the evaluation report. Fields that do not apply to
/// a comparison kind (distance for map comparisons, Pearson for offline
/// distributions) stay unset; degenerate statistics record why instead.
struct ComparisonStats {
    std::optional<double> distance;    // Wasserstein, offline error lists
    std::optional<double> wilcoxon_p;  // paired density bins
    std::optional<double> pearson_r;
    std::optional<double> pearson_p;
    std::optional<double> auc_prc;
    std::optional<int> n_cells;
    std::optional<int> n_samples;
    std::string note;  // e.g. "degenerate variance", empty when clean
};

struct EvaluationReport {
    std::string config_hash;
    Normalization norm;
    std::map<std::string, int> cell_counts;  // simulator/map name -> cells
    // "offline" -> comparison name -> stats; metric kind -> comparison -> stats
    std::map<std::string, ComparisonStats> offline;
    std::map<std::string, std::map<std::string, ComparisonStats>> maps;
};

std::string report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const std::string& text);

/// Artifact index for one experiment directory. Written after every stage;
/// timestamps live only here, never in data artifacts.
struct RunManifest {
    std::string version;
    std::string config_hash;
    std::string created;  // UTC, informational
    std::uint64_t global_seed = 0;
    // stage -> artifact logical name -> relative path
    std::map<std::string, std::map<std::string, std::string>> stages;
    std::map<std::string, std::uint64_t> stage_seeds;

    bool stage_done(const std::string& stage) const;
};

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);

/// Stable fingerprint of the experiment parameters (canonical field dump,
/// comment- and formatting-insensitive).
std::string config_hash(const ExperimentConfig& cfg);

/// Stage runner over one output directory. Each stage persists its artifacts
/// atomically, updates the manifest, and can be skipped when the cache holds
/// a completed stage for the same config hash.
class Pipeline {
  public:
    Pipeline(ExperimentConfig cfg, std::filesystem::path out_dir, bool use_cache = true);

    void run_search();
    void run_migrate_union();
    void run_merge();
    void run_evaluate();
    void run_report();
    void run_all();

    /// Re-executes one test id everywhere it was recorded (native maps and
    /// twin), verifies stored outcomes, writes trace CSVs. Returns the number
    /// of instances replayed; throws ManifestCorrupt on missing artifacts and
    /// std::runtime_error on any mismatch.
    int replay(const std::string& test_id);

    const RunManifest& manifest() const { return manifest_; }
    const std::filesystem::path& out_dir() const { return out_dir_; }

  private:
    bool stage_cached(const std::string& stage) const;
    void save_manifest();
    CombinedFeatureMap load_map(const std::string& stage, const std::string& name) const;
    void store_map(const std::string& stage, const std::string& name,
                   const std::filesystem::path& rel_path, const CombinedFeatureMap& map);

    ExperimentConfig cfg_;
    std::filesystem::path out_dir_;
    bool use_cache_;
    RunManifest manifest_;
};

}  // namespace crossim
