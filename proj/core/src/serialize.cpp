#include "crossim/serialize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "crossim/errors.hpp"

namespace crossim {

using json = nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string cell_key_to_string(const CellKey& key) {
    return std::to_string(key.turns) + ":" + std::to_string(key.curvature_bin);
}

CellKey cell_key_from_string(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("bad cell key: " + s);
    CellKey key;
    key.turns = std::stoi(s.substr(0, colon));
    key.curvature_bin = std::stoi(s.substr(colon + 1));
    return key;
}

namespace {

json spec_to_value(const RoadSpec& spec) {
    json points = json::array();
    for (const ControlPoint& p : spec.control_points) {
        points.push_back(json::array({p.x, p.y}));
    }
    json j;
    j["control_points"] = std::move(points);
    j["samples_per_segment"] = spec.samples_per_segment;
    j["lane_width"] = spec.lane_width;
    j["bbox_side"] = spec.bbox_side;
    return j;
}

RoadSpec spec_from_value(const json& j) {
    RoadSpec spec;
    for (const auto& p : j.at("control_points")) {
        spec.control_points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    spec.samples_per_segment = j.at("samples_per_segment").get<int>();
    spec.lane_width = j.at("lane_width").get<double>();
    spec.bbox_side = j.at("bbox_side").get<double>();
    return spec;
}

Outcome outcome_from_string(const std::string& s) {
    if (s == "success") return Outcome::Success;
    if (s == "oob") return Outcome::Oob;
    if (s == "timeout") return Outcome::Timeout;
    throw std::invalid_argument("unknown outcome: " + s);
}

json record_to_value(const TestRecord& r) {
    json j;
    j["test_id"] = r.test_id;
    j["simulator"] = r.simulator;
    j["spec"] = spec_to_value(r.spec);
    j["features"] = {{"turn_count", r.features.turn_count}, {"curvature", r.features.curvature}};
    j["outcome"] = to_string(r.outcome);
    j["fitness"] = r.fitness;
    j["max_lateral_position"] = r.max_lateral_position;
    return j;
}

TestRecord record_from_value(const json& j) {
    TestRecord r;
    r.test_id = j.at("test_id").get<std::string>();
    r.simulator = j.at("simulator").get<std::string>();
    r.spec = spec_from_value(j.at("spec"));
    r.features.turn_count = j.at("features").at("turn_count").get<int>();
    r.features.curvature = j.at("features").at("curvature").get<double>();
    r.outcome = outcome_from_string(j.at("outcome").get<std::string>());
    r.fitness = j.at("fitness").get<double>();
    r.max_lateral_position = j.at("max_lateral_position").get<double>();
    return r;
}

json bounds_to_value(const AxisBounds& b) {
    if (b.empty) return nullptr;
    json j;
    j["turns"] = json::array({b.turns_lo, b.turns_hi});
    j["curvature_bins"] = json::array({b.curvature_lo, b.curvature_hi});
    return j;
}

AxisBounds bounds_from_value(const json& j) {
    AxisBounds b;
    if (j.is_null()) return b;
    b.empty = false;
    b.turns_lo = j.at("turns").at(0).get<int>();
    b.turns_hi = j.at("turns").at(1).get<int>();
    b.curvature_lo = j.at("curvature_bins").at(0).get<int>();
    b.curvature_hi = j.at("curvature_bins").at(1).get<int>();
    return b;
}

}  // namespace

std::string road_to_json(const RoadSpec& spec) { return spec_to_value(spec).dump(2) + "\n"; }

RoadSpec road_from_json(const std::string& text) { return spec_from_value(json::parse(text)); }

std::string archive_to_json(const Archive& archive) {
    json j;
    j["simulator"] = archive.simulator;
    j["curvature_bin_width"] = archive.curvature_bin_width;
    json cells = json::object();
    for (const auto& [key, ind] : archive.cells) {
        json cell;
        cell["test_id"] = ind.test_id;
        cell["spec"] = spec_to_value(ind.spec);
        cell["features"] = {{"turn_count", ind.features.turn_count},
                            {"curvature", ind.features.curvature}};
        cell["outcome"] = to_string(ind.outcome);
        cell["fitness"] = ind.fitness;
        cell["max_lateral_position"] = ind.max_lateral_position;
        cells[cell_key_to_string(key)] = std::move(cell);
    }
    j["cells"] = std::move(cells);
    return j.dump(2) + "\n";
}

Archive archive_from_json(const std::string& text) {
    const json j = json::parse(text);
    Archive archive;
    archive.simulator = j.at("simulator").get<std::string>();
    archive.curvature_bin_width = j.at("curvature_bin_width").get<double>();
    for (const auto& [key_str, cell] : j.at("cells").items()) {
        Individual ind;
        ind.test_id = cell.at("test_id").get<std::string>();
        ind.spec = spec_from_value(cell.at("spec"));
        ind.features.turn_count = cell.at("features").at("turn_count").get<int>();
        ind.features.curvature = cell.at("features").at("curvature").get<double>();
        ind.outcome = outcome_from_string(cell.at("outcome").get<std::string>());
        ind.fitness = cell.at("fitness").get<double>();
        ind.max_lateral_position = cell.at("max_lateral_position").get<double>();
        archive.cells[cell_key_from_string(key_str)] = std::move(ind);
    }
    return archive;
}

std::string map_to_json(const CombinedFeatureMap& map) {
    json j;
    j["simulator"] = map.simulator;
    j["metric"] = to_string(map.metric);
    j["curvature_bin_width"] = map.curvature_bin_width;
    if (map.norm) {
        j["normalization"] = {{"lo", map.norm->lo}, {"hi", map.norm->hi}};
    } else {
        j["normalization"] = nullptr;
    }
    j["bounds"] = bounds_to_value(map.bounds);
    j["timeouts"] = map.timeouts;
    json cells = json::object();
    for (const auto& [key, stat] : map.stats) {
        json cell;
        cell["stats"] = {{"failure_probability", stat.failure_probability},
                         {"mean_max_lp", stat.mean_max_lp},
                         {"n_tests", stat.n_tests}};
        json records = json::array();
        const auto it = map.cells.find(key);
        if (it != map.cells.end()) {
            for (const TestRecord& r : it->second) records.push_back(record_to_value(r));
        }
        cell["records"] = std::move(records);
        cells[cell_key_to_string(key)] = std::move(cell);
    }
    j["cells"] = std::move(cells);
    return j.dump(2) + "\n";
}

CombinedFeatureMap map_from_json(const std::string& text) {
    const json j = json::parse(text);
    CombinedFeatureMap map;
    map.simulator = j.at("simulator").get<std::string>();
    map.metric = metric_kind_from_string(j.at("metric").get<std::string>());
    map.curvature_bin_width = j.at("curvature_bin_width").get<double>();
    if (!j.at("normalization").is_null()) {
        map.norm = Normalization{j.at("normalization").at("lo").get<double>(),
                                 j.at("normalization").at("hi").get<double>()};
    }
    map.bounds = bounds_from_value(j.at("bounds"));
    map.timeouts = j.at("timeouts").get<int>();
    for (const auto& [key_str, cell] : j.at("cells").items()) {
        const CellKey key = cell_key_from_string(key_str);
        CellStatistic stat;
        stat.failure_probability = cell.at("stats").at("failure_probability").get<double>();
        stat.mean_max_lp = cell.at("stats").at("mean_max_lp").get<double>();
        stat.n_tests = cell.at("stats").at("n_tests").get<int>();
        map.stats[key] = stat;
        for (const auto& rec : cell.at("records")) {
            map.cells[key].push_back(record_from_value(rec));
        }
    }
    return map;
}

std::string placement_log_to_jsonl(const std::vector<PlacementEvent>& log) {
    std::string out;
    for (const PlacementEvent& ev : log) {
        json j;
        j["index"] = ev.index;
        j["phase"] = ev.phase;
        j["test_id"] = ev.test_id;
        if (ev.has_cell) {
            j["cell"] = cell_key_to_string(ev.cell);
            j["fitness"] = ev.fitness;
            j["outcome"] = to_string(ev.outcome);
        } else {
            j["cell"] = nullptr;
        }
        j["placed"] = ev.placed;
        j["note"] = ev.note;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<PlacementEvent> placement_log_from_jsonl(const std::string& text) {
    std::vector<PlacementEvent> log;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        PlacementEvent ev;
        ev.index = j.at("index").get<int>();
        ev.phase = j.at("phase").get<std::string>();
        ev.test_id = j.at("test_id").get<std::string>();
        if (!j.at("cell").is_null()) {
            ev.has_cell = true;
            ev.cell = cell_key_from_string(j.at("cell").get<std::string>());
            ev.fitness = j.at("fitness").get<double>();
            ev.outcome = outcome_from_string(j.at("outcome").get<std::string>());
        }
        ev.placed = j.at("placed").get<bool>();
        ev.note = j.at("note").get<std::string>();
        log.push_back(std::move(ev));
    }
    return log;
}

std::string trace_to_csv(const EpisodeResult& episode, double lane_width) {
    std::string out = "time,x,y,heading,speed,lp,ld,steering,throttle\n";
    for (const EpisodeStep& step : episode.trace) {
        const double lp = step.obs.true_lateral_position;
        const double ld = 0.5 * lane_width - std::abs(lp);
        out += format_double(step.state.time);
        out += ',';
        out += format_double(step.state.x);
        out += ',';
        out += format_double(step.state.y);
        out += ',';
        out += format_double(step.state.heading);
        out += ',';
        out += format_double(step.state.speed);
        out += ',';
        out += format_double(lp);
        out += ',';
        out += format_double(ld);
        out += ',';
        out += format_double(step.cmd.steering);
        out += ',';
        out += format_double(step.cmd.throttle);
        out += '\n';
    }
    return out;
}

namespace {

double metric_value(const CellStatistic& stat, MetricKind metric) {
    return metric == MetricKind::FailureProbability ? stat.failure_probability : stat.mean_max_lp;
}

/// Green (0) to red (1), clamped.
std::string cell_color(double v) {
    v = std::min(1.0, std::max(0.0, v));
    const int r = static_cast<int>(std::lround(34 + v * (196 - 34)));
    const int g = static_cast<int>(std::lround(154 - v * (154 - 30)));
    const int b = 34;
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

}  // namespace

std::string heatmap_svg(const CombinedFeatureMap& map, MetricKind metric) {
    const AxisBounds& b = map.bounds;
    const int n_cols = b.empty ? 0 : b.turns_hi - b.turns_lo + 1;
    const int n_rows = b.empty ? 0 : b.curvature_hi - b.curvature_lo + 1;
    const int cell_px = 28;
    const int margin_left = 64;
    const int margin_top = 40;
    const int margin_bottom = 44;
    const int width = margin_left + std::max(1, n_cols) * cell_px + 16;
    const int height = margin_top + std::max(1, n_rows) * cell_px + margin_bottom;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" font-family=\"monospace\" font-size=\"11\">\n";
    svg << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    svg << "  <text x=\"" << margin_left << "\" y=\"18\">" << map.simulator << " "
        << to_string(metric) << "</text>\n";

    for (const auto& [key, stat] : map.stats) {
        const int col = key.turns - b.turns_lo;
        const int row = b.curvature_hi - key.curvature_bin;  // high curvature on top
        const int x = margin_left + col * cell_px;
        const int y = margin_top + row * cell_px;
        svg << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_px
            << "\" height=\"" << cell_px << "\" fill=\"" << cell_color(metric_value(stat, metric))
            << "\" stroke=\"#cccccc\"/>\n";
    }
    // Grid outlines for empty cells so the axes stay readable.
    for (int row = 0; row < n_rows; ++row) {
        for (int col = 0; col < n_cols; ++col) {
            const CellKey key{b.turns_lo + col, b.curvature_hi - row};
            if (map.stats.count(key)) continue;
            const int x = margin_left + col * cell_px;
            const int y = margin_top + row * cell_px;
            svg << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_px
                << "\" height=\"" << cell_px
                << "\" fill=\"none\" stroke=\"#eeeeee\"/>\n";
        }
    }
    for (int col = 0; col < n_cols; ++col) {
        svg << "  <text x=\"" << margin_left + col * cell_px + cell_px / 2 << "\" y=\""
            << margin_top + n_rows * cell_px + 16 << "\" text-anchor=\"middle\">"
            << b.turns_lo + col << "</text>\n";
    }
    for (int row = 0; row < n_rows; ++row) {
        const int bin = b.curvature_hi - row;
        svg << "  <text x=\"" << margin_left - 6 << "\" y=\""
            << margin_top + row * cell_px + cell_px / 2 + 4 << "\" text-anchor=\"end\">"
            << format_double(bin * map.curvature_bin_width) << "</text>\n";
    }
    svg << "  <text x=\"" << margin_left + std::max(1, n_cols) * cell_px / 2 << "\" y=\""
        << height - 10 << "\" text-anchor=\"middle\">turns</text>\n";
    svg << "  <text x=\"14\" y=\"" << margin_top - 8 << "\">curvature</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

std::string heatmap_csv(const CombinedFeatureMap& map, MetricKind metric) {
    const AxisBounds& b = map.bounds;
    std::string out = "curvature_bin";
    if (!b.empty) {
        for (int t = b.turns_lo; t <= b.turns_hi; ++t) {
            out += ",turns_" + std::to_string(t);
        }
    }
    out += '\n';
    if (b.empty) return out;
    for (int bin = b.curvature_hi; bin >= b.curvature_lo; --bin) {
        out += format_double(bin * map.curvature_bin_width);
        for (int t = b.turns_lo; t <= b.turns_hi; ++t) {
            out += ',';
            const auto it = map.stats.find(CellKey{t, bin});
            if (it != map.stats.end()) out += format_double(metric_value(it->second, metric));
        }
        out += '\n';
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace crossim
