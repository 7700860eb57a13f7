#include "crossim/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "crossim/errors.hpp"
#include "crossim/rng.hpp"
#include "crossim/serialize.hpp"

namespace crossim {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

json opt_to_value(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json opt_to_value(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_double_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

std::optional<int> opt_int_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<int>();
}

json comparison_to_value(const ComparisonStats& s) {
    json j;
    j["distance"] = opt_to_value(s.distance);
    j["wilcoxon_p"] = opt_to_value(s.wilcoxon_p);
    j["pearson_r"] = opt_to_value(s.pearson_r);
    j["pearson_p"] = opt_to_value(s.pearson_p);
    j["auc_prc"] = opt_to_value(s.auc_prc);
    j["n_cells"] = opt_to_value(s.n_cells);
    j["n_samples"] = opt_to_value(s.n_samples);
    j["note"] = s.note;
    return j;
}

ComparisonStats comparison_from_value(const json& j) {
    ComparisonStats s;
    s.distance = opt_double_from(j.at("distance"));
    s.wilcoxon_p = opt_double_from(j.at("wilcoxon_p"));
    s.pearson_r = opt_double_from(j.at("pearson_r"));
    s.pearson_p = opt_double_from(j.at("pearson_p"));
    s.auc_prc = opt_double_from(j.at("auc_prc"));
    s.n_cells = opt_int_from(j.at("n_cells"));
    s.n_samples = opt_int_from(j.at("n_samples"));
    s.note = j.at("note").get<std::string>();
    return s;
}

std::string now_utc() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void dump_model(std::ostringstream& out, const std::string& prefix,
                const DrivingModelConfig& m) {
    out << prefix << ".kind=" << to_string(m.kind) << '\n';
    out << prefix << ".kp=" << format_double(m.gains.kp) << '\n';
    out << prefix << ".kd=" << format_double(m.gains.kd) << '\n';
    out << prefix << ".ki=" << format_double(m.gains.ki) << '\n';
    out << prefix << ".delay_steps=" << m.delay_steps << '\n';
    out << prefix << ".noise_sd=" << format_double(m.noise_sd) << '\n';
    out << prefix << ".max_slew=" << format_double(m.max_slew) << '\n';
    out << prefix << ".steering_offset=" << format_double(m.steering_offset) << '\n';
}

void dump_simulator(std::ostringstream& out, const std::string& prefix,
                    const SimulatorConfig& s) {
    out << prefix << ".name=" << s.name << '\n';
    out << prefix << ".engine=" << to_string(s.engine) << '\n';
    out << prefix << ".timestep=" << format_double(s.timestep) << '\n';
    out << prefix << ".wheelbase=" << format_double(s.wheelbase) << '\n';
    out << prefix << ".max_steer_angle=" << format_double(s.max_steer_angle) << '\n';
    out << prefix << ".max_speed=" << format_double(s.max_speed) << '\n';
    out << prefix << ".throttle_gain=" << format_double(s.throttle_gain) << '\n';
    out << prefix << ".drag=" << format_double(s.drag) << '\n';
    out << prefix << ".tire_stiffness=" << format_double(s.tire_stiffness) << '\n';
    out << prefix << ".k_low=" << format_double(s.k_low) << '\n';
    out << prefix << ".k_high=" << format_double(s.k_high) << '\n';
    out << prefix << ".sensor_bias=" << format_double(s.sensor_bias) << '\n';
    out << prefix << ".sensor_noise_sd=" << format_double(s.sensor_noise_sd) << '\n';
    out << prefix << ".sensor_delay_steps=" << s.sensor_delay_steps << '\n';
}

}  // namespace

std::string report_to_json(const EvaluationReport& report) {
    json j;
    j["config_hash"] = report.config_hash;
    j["normalization"] = {{"lo", report.norm.lo}, {"hi", report.norm.hi}};
    json counts = json::object();
    for (const auto& [name, n] : report.cell_counts) counts[name] = n;
    j["cell_counts"] = std::move(counts);
    json offline = json::object();
    for (const auto& [name, stats] : report.offline) offline[name] = comparison_to_value(stats);
    j["offline"] = std::move(offline);
    json maps = json::object();
    for (const auto& [metric, comparisons] : report.maps) {
        json per_metric = json::object();
        for (const auto& [name, stats] : comparisons) {
            per_metric[name] = comparison_to_value(stats);
        }
        maps[metric] = std::move(per_metric);
    }
    j["maps"] = std::move(maps);
    return j.dump(2) + "\n";
}

EvaluationReport report_from_json(const std::string& text) {
    const json j = json::parse(text);
    EvaluationReport report;
    report.config_hash = j.at("config_hash").get<std::string>();
    report.norm.lo = j.at("normalization").at("lo").get<double>();
    report.norm.hi = j.at("normalization").at("hi").get<double>();
    for (const auto& [name, n] : j.at("cell_counts").items()) {
        report.cell_counts[name] = n.get<int>();
    }
    for (const auto& [name, stats] : j.at("offline").items()) {
        report.offline[name] = comparison_from_value(stats);
    }
    for (const auto& [metric, comparisons] : j.at("maps").items()) {
        for (const auto& [name, stats] : comparisons.items()) {
            report.maps[metric][name] = comparison_from_value(stats);
        }
    }
    return report;
}

bool RunManifest::stage_done(const std::string& stage) const { return stages.count(stage) > 0; }

std::string manifest_to_json(const RunManifest& manifest) {
    json j;
    j["version"] = manifest.version;
    j["config_hash"] = manifest.config_hash;
    j["created"] = manifest.created;
    j["global_seed"] = manifest.global_seed;
    json stages = json::object();
    for (const auto& [stage, artifacts] : manifest.stages) {
        json entry = json::object();
        for (const auto& [name, path] : artifacts) entry[name] = path;
        stages[stage] = std::move(entry);
    }
    j["stages"] = std::move(stages);
    json seeds = json::object();
    for (const auto& [name, seed] : manifest.stage_seeds) seeds[name] = seed;
    j["stage_seeds"] = std::move(seeds);
    return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
    const json j = json::parse(text);
    RunManifest m;
    m.version = j.at("version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.created = j.at("created").get<std::string>();
    m.global_seed = j.at("global_seed").get<std::uint64_t>();
    for (const auto& [stage, artifacts] : j.at("stages").items()) {
        for (const auto& [name, path] : artifacts.items()) {
            m.stages[stage][name] = path.get<std::string>();
        }
    }
    for (const auto& [name, seed] : j.at("stage_seeds").items()) {
        m.stage_seeds[name] = seed.get<std::uint64_t>();
    }
    return m;
}

std::string config_hash(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "version=" << kVersion << '\n';
    out << "global_seed=" << cfg.global_seed << '\n';
    out << "repetitions=" << cfg.repetitions << '\n';
    out << "gen.samples_per_segment=" << cfg.gen.samples_per_segment << '\n';
    out << "gen.lane_width=" << format_double(cfg.gen.lane_width) << '\n';
    out << "gen.bbox_side=" << format_double(cfg.gen.bbox_side) << '\n';
    out << "gen.segment_length_min=" << format_double(cfg.gen.segment_length_min) << '\n';
    out << "gen.segment_length_max=" << format_double(cfg.gen.segment_length_max) << '\n';
    out << "gen.max_step_turn_deg=" << format_double(cfg.gen.max_step_turn_deg) << '\n';
    out << "gen.max_curve_sweep_deg=" << format_double(cfg.gen.max_curve_sweep_deg) << '\n';
    out << "gen.max_attempts=" << cfg.gen.max_attempts << '\n';
    out << "search.population_size=" << cfg.search.population_size << '\n';
    out << "search.iterations=" << cfg.search.iterations << '\n';
    out << "search.mutation_displacement=" << format_double(cfg.search.mutation_displacement)
        << '\n';
    out << "search.curvature_bin_width=" << format_double(cfg.search.curvature_bin_width) << '\n';
    out << "search.n_control=" << cfg.search.n_control << '\n';
    out << "search.max_steps=" << cfg.search.limits.max_steps << '\n';
    dump_model(out, "autopilot", cfg.autopilot);
    dump_model(out, "model", cfg.model);
    for (const SimulatorConfig& s : cfg.siblings) dump_simulator(out, "sibling." + s.name, s);
    if (cfg.has_twin) dump_simulator(out, "twin", cfg.twin);
    out << "offline.road_pairs=" << cfg.offline_road_pairs << '\n';
    out << "offline.density_bins=" << cfg.density_bins << '\n';

    SeedDeriver deriver(0x9d3f8a51c2b1e477ULL);
    deriver.mix(out.str());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(deriver.finish()));
    return buf;
}

Pipeline::Pipeline(ExperimentConfig cfg, std::filesystem::path out_dir, bool use_cache)
    : cfg_(std::move(cfg)), out_dir_(std::move(out_dir)), use_cache_(use_cache) {
    const std::string hash = config_hash(cfg_);
    const std::filesystem::path manifest_path = out_dir_ / "manifest.json";
    if (std::filesystem::exists(manifest_path)) {
        try {
            RunManifest existing = manifest_from_json(read_file(manifest_path));
            if (existing.config_hash == hash) {
                manifest_ = std::move(existing);
                return;
            }
        } catch (const std::exception&) {
            // unreadable manifest: start over
        }
    }
    manifest_.version = kVersion;
    manifest_.config_hash = hash;
    manifest_.created = now_utc();
    manifest_.global_seed = cfg_.global_seed;
}

void Pipeline::save_manifest() {
    atomic_write(out_dir_ / "manifest.json", manifest_to_json(manifest_));
}

bool Pipeline::stage_cached(const std::string& stage) const {
    if (!use_cache_ || !manifest_.stage_done(stage)) return false;
    for (const auto& [name, rel] : manifest_.stages.at(stage)) {
        if (!std::filesystem::exists(out_dir_ / rel)) return false;
    }
    return true;
}

CombinedFeatureMap Pipeline::load_map(const std::string& stage, const std::string& name) const {
    const auto stage_it = manifest_.stages.find(stage);
    if (stage_it == manifest_.stages.end())
        throw ManifestCorrupt("stage not recorded: " + stage);
    const auto it = stage_it->second.find(name);
    if (it == stage_it->second.end())
        throw ManifestCorrupt("artifact not recorded: " + stage + "/" + name);
    const std::filesystem::path path = out_dir_ / it->second;
    if (!std::filesystem::exists(path))
        throw ManifestCorrupt("artifact missing on disk: " + path.string());
    return map_from_json(read_file(path));
}

void Pipeline::store_map(const std::string& stage, const std::string& name,
                         const std::filesystem::path& rel_path, const CombinedFeatureMap& map) {
    atomic_write(out_dir_ / rel_path, map_to_json(map));
    manifest_.stages[stage][name] = rel_path.generic_string();
}

void Pipeline::run_search() {
    if (stage_cached("search")) return;
    for (const SimulatorConfig& sib : cfg_.siblings) {
        std::vector<Archive> archives;
        for (int rep = 0; rep < cfg_.repetitions; ++rep) {
            SearchConfig sc = cfg_.search;
            sc.seed = derive_seed(cfg_.global_seed, "search", sib.name, rep);
            sc.episode_seed_base = cfg_.global_seed;
            sc.run_id = sib.name + "_r" + std::to_string(rep);
            sc.jobs = cfg_.jobs;
            const SearchResult result = ::crossim::run_search(cfg_.model, sib, sc);

            const std::string base = "search/" + sc.run_id;
            atomic_write(out_dir_ / (base + "_archive.json"), archive_to_json(result.archive));
            atomic_write(out_dir_ / (base + "_placements.jsonl"),
                         placement_log_to_jsonl(result.log));
            manifest_.stages["search"]["archive_" + sc.run_id] = base + "_archive.json";
            manifest_.stages["search"]["placements_" + sc.run_id] = base + "_placements.jsonl";
            manifest_.stage_seeds["search_" + sc.run_id] = sc.seed;
            archives.push_back(result.archive);
        }
        const CombinedFeatureMap native = combine_runs(archives);
        store_map("search", "map_" + sib.name, "search/" + sib.name + "_map.json", native);
    }
    save_manifest();
}

void Pipeline::run_migrate_union() {
    if (stage_cached("union")) return;
    if (!stage_cached("search") && !manifest_.stage_done("search")) run_search();

    std::vector<CombinedFeatureMap> natives;
    for (const SimulatorConfig& sib : cfg_.siblings) {
        natives.push_back(load_map("search", "map_" + sib.name));
    }

    // Re-execute every other sibling's tests on each target simulator.
    std::vector<std::vector<CombinedFeatureMap>> inputs(cfg_.siblings.size());
    for (std::size_t i = 0; i < cfg_.siblings.size(); ++i) {
        inputs[i].push_back(natives[i]);
        for (std::size_t j = 0; j < cfg_.siblings.size(); ++j) {
            if (j == i) continue;
            CombinedFeatureMap migrated = migrate(
                all_records_sorted(natives[j]), cfg_.model, cfg_.siblings[i],
                cfg_.search.curvature_bin_width, cfg_.global_seed, cfg_.search.limits, cfg_.jobs);
            const std::string name =
                cfg_.siblings[i].name + "_from_" + cfg_.siblings[j].name;
            store_map("union", "migrated_" + name, "union/" + name + ".json", migrated);
            inputs[i].push_back(std::move(migrated));
        }
    }

    std::vector<const CombinedFeatureMap*> every;
    for (const auto& group : inputs) {
        for (const CombinedFeatureMap& m : group) every.push_back(&m);
    }
    const Normalization norm = compute_normalization(every);

    for (std::size_t i = 0; i < cfg_.siblings.size(); ++i) {
        for (CombinedFeatureMap& m : inputs[i]) set_normalization(m, norm);
        CombinedFeatureMap unioned = union_maps(inputs[i]);
        store_map("union", "union_" + cfg_.siblings[i].name,
                  "union/" + cfg_.siblings[i].name + "_union.json", unioned);
    }
    save_manifest();
}

void Pipeline::run_merge() {
    if (stage_cached("merge")) return;
    if (!manifest_.stage_done("union")) run_migrate_union();

    std::vector<CombinedFeatureMap> unions;
    for (const SimulatorConfig& sib : cfg_.siblings) {
        unions.push_back(load_map("union", "union_" + sib.name));
    }
    for (const MetricKind metric :
         {MetricKind::FailureProbability, MetricKind::LackOfQuality}) {
        std::vector<CombinedFeatureMap> tagged = unions;
        for (CombinedFeatureMap& m : tagged) m.metric = metric;
        CombinedFeatureMap merged = merge_maps(tagged);
        const std::string name = std::string("dss_") + to_string(metric);
        store_map("merge", name, "merge/" + name + ".json", merged);
    }
    save_manifest();
}

void Pipeline::run_evaluate() {
    if (stage_cached("evaluate")) return;
    if (!cfg_.has_twin) throw ConfigError("twin: section required for evaluate");
    if (!manifest_.stage_done("merge")) run_merge();

    std::vector<CombinedFeatureMap> unions;
    for (const SimulatorConfig& sib : cfg_.siblings) {
        unions.push_back(load_map("union", "union_" + sib.name));
    }
    const Normalization norm = unions.front().norm.value_or(Normalization{});

    // The full test set: every native road once, in test-id order.
    std::vector<TestRecord> tests;
    for (const SimulatorConfig& sib : cfg_.siblings) {
        const CombinedFeatureMap native = load_map("search", "map_" + sib.name);
        const std::vector<TestRecord> records = all_records_sorted(native);
        tests.insert(tests.end(), records.begin(), records.end());
    }
    std::sort(tests.begin(), tests.end(),
              [](const TestRecord& a, const TestRecord& b) { return a.test_id < b.test_id; });

    CombinedFeatureMap twin_map =
        migrate(tests, cfg_.model, cfg_.twin, cfg_.search.curvature_bin_width, cfg_.global_seed,
                cfg_.search.limits, cfg_.jobs);
    set_normalization(twin_map, norm);
    store_map("evaluate", "dt_map", "evaluate/dt_map.json", twin_map);
    const std::map<CellKey, bool> labels = binarize_twin(twin_map);

    EvaluationReport report;
    report.config_hash = manifest_.config_hash;
    report.norm = norm;
    for (std::size_t i = 0; i < cfg_.siblings.size(); ++i) {
        report.cell_counts[cfg_.siblings[i].name] = static_cast<int>(unions[i].stats.size());
    }
    report.cell_counts["dt"] = static_cast<int>(twin_map.stats.size());

    for (const MetricKind metric :
         {MetricKind::FailureProbability, MetricKind::LackOfQuality}) {
        std::map<std::string, CombinedFeatureMap> preds;
        for (std::size_t i = 0; i < cfg_.siblings.size(); ++i) {
            CombinedFeatureMap tagged = unions[i];
            tagged.metric = metric;
            preds.emplace(cfg_.siblings[i].name, std::move(tagged));
        }
        preds.emplace("dss", load_map("merge", std::string("dss_") + to_string(metric)));
        if (metric == MetricKind::FailureProbability) {
            report.cell_counts["dss"] = static_cast<int>(preds.at("dss").stats.size());
        }

        CombinedFeatureMap twin_tagged = twin_map;
        twin_tagged.metric = metric;
        for (const auto& [name, pred] : preds) {
            ComparisonStats stats;
            const PairedSeries paired = paired_cells(pred, twin_tagged, metric);
            stats.n_cells = static_cast<int>(paired.x.size());
            if (paired.x.size() < 3) {
                stats.note = "too few shared cells";
            } else {
                try {
                    const PearsonResult pr = pearson(paired);
                    stats.pearson_r = pr.r;
                    stats.pearson_p = pr.p;
                } catch (const DegenerateVariance&) {
                    stats.note = "degenerate variance";
                }
            }
            std::vector<double> scores;
            std::vector<bool> cell_labels;
            score_cells(pred, labels, metric, scores, cell_labels);
            try {
                stats.auc_prc = auc_prc(scores, cell_labels);
            } catch (const NoPositives&) {
                stats.note = stats.note.empty() ? "no failing twin cells" : stats.note;
            } catch (const NoNegatives&) {
                stats.note = stats.note.empty() ? "no passing twin cells" : stats.note;
            }
            report.maps[to_string(metric)][name + "_vs_dt"] = stats;
        }
    }

    // Offline evaluation on a shared road set across every simulator.
    const std::vector<RoadSpec> roads =
        offline_roads(cfg_.global_seed, cfg_.offline_road_pairs, cfg_.search.n_control, cfg_.gen);
    std::map<std::string, std::vector<double>> errors;
    std::vector<const std::vector<double>*> sibling_errors;
    for (const SimulatorConfig& sib : cfg_.siblings) {
        const OfflineDataset ds = collect_offline_dataset(sib, roads, cfg_.autopilot,
                                                          cfg_.global_seed, cfg_.search.limits,
                                                          cfg_.jobs);
        errors[sib.name] = offline_eval(cfg_.model, ds, cfg_.global_seed).abs_error;
    }
    for (const SimulatorConfig& sib : cfg_.siblings) {
        sibling_errors.push_back(&errors.at(sib.name));
    }
    {
        // Equal-count pooling generalized over all siblings.
        std::size_t min_n = sibling_errors.front()->size();
        for (const auto* e : sibling_errors) min_n = std::min(min_n, e->size());
        std::vector<double> pooled;
        pooled.reserve(min_n * sibling_errors.size());
        for (const auto* e : sibling_errors) {
            pooled.insert(pooled.end(), e->begin(),
                          e->begin() + static_cast<std::ptrdiff_t>(min_n));
        }
        errors["dss"] = std::move(pooled);
    }
    const OfflineDataset twin_ds = collect_offline_dataset(
        cfg_.twin, roads, cfg_.autopilot, cfg_.global_seed, cfg_.search.limits, cfg_.jobs);
    errors["dt"] = offline_eval(cfg_.model, twin_ds, cfg_.global_seed).abs_error;

    std::vector<std::string> offline_names;
    for (const SimulatorConfig& sib : cfg_.siblings) offline_names.push_back(sib.name);
    offline_names.push_back("dss");
    for (const std::string& name : offline_names) {
        ComparisonStats stats;
        const std::vector<double>& a = errors.at(name);
        const std::vector<double>& b = errors.at("dt");
        stats.distance = wasserstein_1d(a, b);
        const Density da = make_density(a, cfg_.density_bins, 0.0, 1.0);
        const Density db = make_density(b, cfg_.density_bins, 0.0, 1.0);
        PairedSeries bins;
        bins.key = "density_bins";
        bins.x = da.probabilities;
        bins.y = db.probabilities;
        stats.wilcoxon_p = wilcoxon_signed_rank(bins);
        stats.n_samples = static_cast<int>(a.size() + b.size());
        report.offline[name + "_vs_dt"] = stats;
    }

    atomic_write(out_dir_ / "evaluate/report.json", report_to_json(report));
    manifest_.stages["evaluate"]["report"] = "evaluate/report.json";
    save_manifest();
}

void Pipeline::run_report() {
    if (stage_cached("report")) return;
    if (!manifest_.stage_done("evaluate")) run_evaluate();

    const EvaluationReport report =
        report_from_json(read_file(out_dir_ / manifest_.stages.at("evaluate").at("report")));

    const auto opt_cell = [](const std::optional<double>& v) {
        return v ? format_double(*v) : std::string();
    };
    std::string tables = "metric,comparison,pearson_r,pearson_p,auc_prc,n_cells\n";
    for (const auto& [metric, comparisons] : report.maps) {
        for (const auto& [name, s] : comparisons) {
            tables += metric + ',' + name + ',' + opt_cell(s.pearson_r) + ',' +
                      opt_cell(s.pearson_p) + ',' + opt_cell(s.auc_prc) + ',' +
                      (s.n_cells ? std::to_string(*s.n_cells) : std::string()) + '\n';
        }
    }
    atomic_write(out_dir_ / "report/map_metrics.csv", tables);
    manifest_.stages["report"]["map_metrics"] = "report/map_metrics.csv";

    std::string offline = "comparison,wasserstein,wilcoxon_p,n_samples\n";
    for (const auto& [name, s] : report.offline) {
        offline += name + ',' + opt_cell(s.distance) + ',' + opt_cell(s.wilcoxon_p) + ',' +
                   (s.n_samples ? std::to_string(*s.n_samples) : std::string()) + '\n';
    }
    atomic_write(out_dir_ / "report/offline_metrics.csv", offline);
    manifest_.stages["report"]["offline_metrics"] = "report/offline_metrics.csv";

    // One heatmap pair per persisted map.
    std::vector<std::pair<std::string, CombinedFeatureMap>> maps;
    for (const SimulatorConfig& sib : cfg_.siblings) {
        maps.emplace_back(sib.name, load_map("union", "union_" + sib.name));
    }
    maps.emplace_back("dss_failure_probability",
                      load_map("merge", "dss_failure_probability"));
    maps.emplace_back("dss_lack_of_quality", load_map("merge", "dss_lack_of_quality"));
    maps.emplace_back("dt", load_map("evaluate", "dt_map"));
    for (auto& [name, map] : maps) {
        const bool merged = name.rfind("dss_", 0) == 0;
        const std::vector<MetricKind> kinds =
            merged ? std::vector<MetricKind>{map.metric}
                   : std::vector<MetricKind>{MetricKind::FailureProbability,
                                             MetricKind::LackOfQuality};
        for (const MetricKind metric : kinds) {
            const std::string suffix = merged ? name : name + "_" + to_string(metric);
            atomic_write(out_dir_ / ("report/heatmap_" + suffix + ".svg"),
                         heatmap_svg(map, metric));
            atomic_write(out_dir_ / ("report/matrix_" + suffix + ".csv"),
                         heatmap_csv(map, metric));
            manifest_.stages["report"]["heatmap_" + suffix] = "report/heatmap_" + suffix + ".svg";
            manifest_.stages["report"]["matrix_" + suffix] = "report/matrix_" + suffix + ".csv";
        }
    }
    save_manifest();
}

void Pipeline::run_all() {
    run_search();
    run_migrate_union();
    run_merge();
    if (cfg_.has_twin) {
        run_evaluate();
        run_report();
    }
}

int Pipeline::replay(const std::string& test_id) {
    if (manifest_.stages.empty()) throw ManifestCorrupt("no stages recorded in manifest");

    std::map<std::string, SimulatorConfig> sims;
    for (const SimulatorConfig& sib : cfg_.siblings) sims[sib.name] = sib;
    if (cfg_.has_twin) sims[cfg_.twin.name] = cfg_.twin;

    // Gather every stored execution of this test across all persisted maps.
    std::vector<std::pair<std::string, TestRecord>> instances;  // map name, record
    std::set<std::string> seen;                                 // simulator of the instance
    const auto scan = [&](const std::string& stage, const std::string& name) {
        if (!manifest_.stage_done(stage)) return;
        if (!manifest_.stages.at(stage).count(name)) return;
        const CombinedFeatureMap map = load_map(stage, name);
        for (const auto& [key, records] : map.cells) {
            for (const TestRecord& r : records) {
                if (r.test_id != test_id) continue;
                if (!seen.insert(r.simulator).second) continue;
                instances.emplace_back(name, r);
            }
        }
    };
    for (const SimulatorConfig& sib : cfg_.siblings) {
        scan("search", "map_" + sib.name);
        scan("union", "union_" + sib.name);
    }
    scan("evaluate", "dt_map");
    if (instances.empty())
        throw std::runtime_error("replay: test id not found in any artifact: " + test_id);

    int replayed = 0;
    for (const auto& [map_name, record] : instances) {
        const auto sim_it = sims.find(record.simulator);
        if (sim_it == sims.end())
            throw ManifestCorrupt("replay: unknown simulator in record: " + record.simulator);
        const RoadPolyline poly = interpolate_catmull_rom(record.spec);
        const std::uint64_t seed =
            derive_seed(cfg_.global_seed, "episode", record.simulator, test_id);
        const EpisodeResult ep = run_episode(cfg_.model, sim_it->second, poly,
                                             record.spec.lane_width, cfg_.search.limits, seed,
                                             /*keep_trace=*/true);
        if (ep.fitness != record.fitness || ep.outcome != record.outcome ||
            ep.max_lateral_position != record.max_lateral_position) {
            throw std::runtime_error("replay mismatch for " + test_id + " on " +
                                     record.simulator + ": stored fitness " +
                                     format_double(record.fitness) + ", replayed " +
                                     format_double(ep.fitness));
        }
        atomic_write(out_dir_ / ("replay/" + test_id + "_" + record.simulator + ".csv"),
                     trace_to_csv(ep, record.spec.lane_width));
        ++replayed;
    }
    return replayed;
}

}  // namespace crossim
