#include "crossim/config.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>
#include <tuple>

#include "crossim/errors.hpp"
#include "crossim/serialize.hpp"

namespace crossim {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

IniFile IniFile::parse(const std::string& text) {
    IniFile ini;
    std::string section;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        const std::size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.resize(comment);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
            if (!ini.sections_.count(section)) {
                ini.order_.push_back(section);
                ini.sections_[section];
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        if (section.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": key outside any section");
        ini.sections_[section].emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return ini;
}

bool IniFile::has_section(const std::string& name) const { return sections_.count(name) > 0; }

std::vector<std::string> IniFile::section_names() const { return order_; }

const std::vector<std::pair<std::string, std::string>>& IniFile::entries(
    const std::string& section) const {
    const auto it = sections_.find(section);
    if (it == sections_.end()) throw ConfigError("missing section [" + section + "]");
    return it->second;
}

namespace {

/// Typed view over one section; tracks consumed keys so leftovers can be
/// reported as unknown.
class SectionReader {
  public:
    SectionReader(const IniFile& ini, std::string name) : name_(std::move(name)) {
        if (ini.has_section(name_)) {
            for (const auto& [k, v] : ini.entries(name_)) {
                if (!values_.emplace(k, v).second)
                    throw ConfigError(name_ + "." + k + ": duplicate key");
            }
        }
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        consumed_.insert(key);
        return it->second;
    }

    double get_double(const std::string& key, double fallback) {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        consumed_.insert(key);
        try {
            std::size_t used = 0;
            const double v = std::stod(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(name_ + "." + key + ": not a number: " + it->second);
        }
    }

    int get_int(const std::string& key, int fallback) {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        consumed_.insert(key);
        try {
            std::size_t used = 0;
            const long v = std::stol(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument("");
            return static_cast<int>(v);
        } catch (const std::exception&) {
            throw ConfigError(name_ + "." + key + ": not an integer: " + it->second);
        }
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        consumed_.insert(key);
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(name_ + "." + key + ": not an unsigned integer: " + it->second);
        }
    }

    void finish() const {
        for (const auto& [k, v] : values_) {
            if (!consumed_.count(k)) throw ConfigError(name_ + "." + k + ": unknown key");
        }
    }

    const std::string& name() const { return name_; }

  private:
    std::string name_;
    std::map<std::string, std::string> values_;
    std::set<std::string> consumed_;
};

void require(bool cond, const std::string& path, const std::string& what) {
    if (!cond) throw ConfigError(path + ": " + what);
}

ModelKind model_kind_from_string(const std::string& s, const std::string& path) {
    if (s == "autopilot") return ModelKind::Autopilot;
    if (s == "mistuned_pid") return ModelKind::MistunedPid;
    if (s == "delayed_pid") return ModelKind::DelayedPid;
    if (s == "noisy_pid") return ModelKind::NoisyPid;
    if (s == "rate_limited_pid") return ModelKind::RateLimitedPid;
    throw ConfigError(path + ": unknown model kind: " + s);
}

DrivingModelConfig read_model(const IniFile& ini, const std::string& section,
                              const DrivingModelConfig& defaults) {
    SectionReader r(ini, section);
    DrivingModelConfig m = defaults;
    m.kind = model_kind_from_string(r.get_string("kind", to_string(defaults.kind)),
                                    section + ".kind");
    m.gains.kp = r.get_double("kp", defaults.gains.kp);
    m.gains.kd = r.get_double("kd", defaults.gains.kd);
    m.gains.ki = r.get_double("ki", defaults.gains.ki);
    m.delay_steps = r.get_int("delay_steps", defaults.delay_steps);
    m.noise_sd = r.get_double("noise_sd", defaults.noise_sd);
    m.max_slew = r.get_double("max_slew", defaults.max_slew);
    m.steering_offset = r.get_double("steering_offset", defaults.steering_offset);
    r.finish();
    require(m.delay_steps >= 0, section + ".delay_steps", "must be >= 0");
    require(m.noise_sd >= 0.0, section + ".noise_sd", "must be >= 0");
    require(m.max_slew > 0.0, section + ".max_slew", "must be > 0");
    return m;
}

SimulatorConfig read_simulator(const IniFile& ini, const std::string& section,
                               const std::string& default_name) {
    SectionReader r(ini, section);
    SimulatorConfig s;
    s.name = r.get_string("name", default_name);
    const std::string engine = r.get_string("engine", "kinematic");
    if (engine == "kinematic") {
        s.engine = EngineKind::Kinematic;
    } else if (engine == "dynamic") {
        s.engine = EngineKind::Dynamic;
    } else {
        throw ConfigError(section + ".engine: unknown engine: " + engine);
    }
    s.timestep = r.get_double("timestep", s.timestep);
    s.wheelbase = r.get_double("wheelbase", s.wheelbase);
    s.max_steer_angle = r.get_double("max_steer_angle", s.max_steer_angle);
    const bool had_max_speed = r.has("max_speed");
    s.max_speed = r.get_double("max_speed", s.max_speed);
    if (had_max_speed) {
        // Unspecified K constants track the configured speed limit.
        s.k_low = 0.5 * s.max_speed;
        s.k_high = 1.5 * s.max_speed;
    }
    s.throttle_gain = r.get_double("throttle_gain", s.throttle_gain);
    s.drag = r.get_double("drag", s.drag);
    s.tire_stiffness = r.get_double("tire_stiffness", s.tire_stiffness);
    s.k_low = r.get_double("k_low", s.k_low);
    s.k_high = r.get_double("k_high", s.k_high);
    s.sensor_bias = r.get_double("sensor_bias", s.sensor_bias);
    s.sensor_noise_sd = r.get_double("sensor_noise_sd", s.sensor_noise_sd);
    s.sensor_delay_steps = r.get_int("sensor_delay_steps", s.sensor_delay_steps);
    r.finish();

    require(!s.name.empty(), section + ".name", "must not be empty");
    require(s.timestep > 0.0, section + ".timestep", "must be > 0");
    require(s.wheelbase > 0.0, section + ".wheelbase", "must be > 0");
    require(s.max_steer_angle > 0.0 && s.max_steer_angle < 1.5, section + ".max_steer_angle",
            "must be in (0, 1.5) rad");
    require(s.max_speed > 0.0, section + ".max_speed", "must be > 0");
    require(s.throttle_gain > 0.0, section + ".throttle_gain", "must be > 0");
    require(s.drag >= 0.0, section + ".drag", "must be >= 0");
    require(s.tire_stiffness > 0.0, section + ".tire_stiffness", "must be > 0");
    require(s.k_low > 0.0, section + ".k_low", "must be > 0");
    require(s.k_high > 0.0, section + ".k_high", "must be > 0");
    require(s.sensor_noise_sd >= 0.0, section + ".sensor_noise_sd", "must be >= 0");
    require(s.sensor_delay_steps >= 0, section + ".sensor_delay_steps", "must be >= 0");
    return s;
}

/// Physics identity, name excluded: two simulators must differ somewhere here.
auto physics_tuple(const SimulatorConfig& s) {
    return std::make_tuple(s.engine, s.timestep, s.wheelbase, s.max_steer_angle, s.max_speed,
                           s.throttle_gain, s.drag, s.tire_stiffness, s.k_low, s.k_high,
                           s.sensor_bias, s.sensor_noise_sd, s.sensor_delay_steps);
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
    const IniFile ini = IniFile::parse(text);
    ExperimentConfig cfg;

    SectionReader exp(ini, "experiment");
    cfg.global_seed = exp.get_u64("global_seed", 0);
    cfg.repetitions = exp.get_int("repetitions", cfg.repetitions);
    cfg.output_dir = exp.get_string("output_dir", cfg.output_dir);
    cfg.jobs = exp.get_int("jobs", cfg.jobs);
    exp.finish();
    require(cfg.repetitions >= 1, "experiment.repetitions", "must be >= 1");
    require(cfg.jobs >= 0, "experiment.jobs", "must be >= 0 (0 = hardware)");

    SectionReader gen(ini, "generation");
    cfg.gen.samples_per_segment = gen.get_int("samples_per_segment", cfg.gen.samples_per_segment);
    cfg.gen.lane_width = gen.get_double("lane_width", cfg.gen.lane_width);
    cfg.gen.bbox_side = gen.get_double("bbox_side", cfg.gen.bbox_side);
    cfg.gen.segment_length_min =
        gen.get_double("segment_length_min", cfg.gen.segment_length_min);
    cfg.gen.segment_length_max =
        gen.get_double("segment_length_max", cfg.gen.segment_length_max);
    cfg.gen.max_step_turn_deg = gen.get_double("max_step_turn_deg", cfg.gen.max_step_turn_deg);
    cfg.gen.max_curve_sweep_deg =
        gen.get_double("max_curve_sweep_deg", cfg.gen.max_curve_sweep_deg);
    cfg.gen.max_attempts = gen.get_int("max_attempts", cfg.gen.max_attempts);
    gen.finish();
    require(cfg.gen.samples_per_segment >= 2, "generation.samples_per_segment", "must be >= 2");
    require(cfg.gen.lane_width > 0.0, "generation.lane_width", "must be > 0");
    require(cfg.gen.bbox_side > 0.0, "generation.bbox_side", "must be > 0");
    require(cfg.gen.segment_length_min > 0.0, "generation.segment_length_min", "must be > 0");
    require(cfg.gen.segment_length_max >= cfg.gen.segment_length_min,
            "generation.segment_length_max", "must be >= segment_length_min");
    require(cfg.gen.max_step_turn_deg > 0.0, "generation.max_step_turn_deg", "must be > 0");
    require(cfg.gen.max_curve_sweep_deg > 0.0, "generation.max_curve_sweep_deg", "must be > 0");
    require(cfg.gen.max_attempts >= 1, "generation.max_attempts", "must be >= 1");

    SectionReader search(ini, "search");
    cfg.search.population_size = search.get_int("population_size", cfg.search.population_size);
    cfg.search.iterations = search.get_int("iterations", cfg.search.iterations);
    cfg.search.mutation_displacement =
        search.get_double("mutation_displacement", cfg.search.mutation_displacement);
    cfg.search.curvature_bin_width =
        search.get_double("curvature_bin_width", cfg.search.curvature_bin_width);
    cfg.search.n_control = search.get_int("n_control", cfg.search.n_control);
    cfg.search.limits.max_steps = search.get_int("max_steps", cfg.search.limits.max_steps);
    search.finish();
    require(cfg.search.population_size >= 1, "search.population_size", "must be >= 1");
    require(cfg.search.iterations >= 0, "search.iterations", "must be >= 0");
    require(cfg.search.mutation_displacement > 0.0, "search.mutation_displacement", "must be > 0");
    require(cfg.search.curvature_bin_width > 0.0, "search.curvature_bin_width", "must be > 0");
    require(cfg.search.n_control >= 4, "search.n_control", "must be >= 4");
    require(cfg.search.limits.max_steps >= 1, "search.max_steps", "must be >= 1");
    cfg.search.gen = cfg.gen;

    cfg.autopilot = read_model(ini, "autopilot", autopilot_reference());
    require(cfg.autopilot.kind == ModelKind::Autopilot, "autopilot.kind", "must be autopilot");
    DrivingModelConfig model_defaults = cfg.autopilot;
    cfg.model = read_model(ini, "model", model_defaults);

    for (const std::string& section : ini.section_names()) {
        if (section.rfind("sibling.", 0) != 0) continue;
        const std::string name = section.substr(std::string("sibling.").size());
        require(!name.empty(), section, "sibling section needs a name suffix");
        cfg.siblings.push_back(read_simulator(ini, section, name));
    }
    require(cfg.siblings.size() >= 2, "sibling.*", "need at least two sibling sections");
    for (std::size_t i = 0; i < cfg.siblings.size(); ++i) {
        for (std::size_t j = i + 1; j < cfg.siblings.size(); ++j) {
            require(cfg.siblings[i].name != cfg.siblings[j].name,
                    "sibling." + cfg.siblings[j].name, "duplicate sibling name");
            require(physics_tuple(cfg.siblings[i]) != physics_tuple(cfg.siblings[j]),
                    "sibling." + cfg.siblings[j].name,
                    "physics identical to sibling." + cfg.siblings[i].name);
        }
    }

    if (ini.has_section("twin")) {
        cfg.twin = read_simulator(ini, "twin", "dt");
        cfg.has_twin = true;
        for (const SimulatorConfig& s : cfg.siblings) {
            require(physics_tuple(cfg.twin) != physics_tuple(s), "twin",
                    "physics identical to sibling." + s.name);
            require(cfg.twin.name != s.name, "twin.name", "collides with sibling." + s.name);
        }
    }

    SectionReader off(ini, "offline");
    cfg.offline_road_pairs = off.get_int("road_pairs", cfg.offline_road_pairs);
    cfg.density_bins = off.get_int("density_bins", cfg.density_bins);
    off.finish();
    require(cfg.offline_road_pairs >= 1, "offline.road_pairs", "must be >= 1");
    require(cfg.density_bins >= 1, "offline.density_bins", "must be >= 1");

    for (const std::string& section : ini.section_names()) {
        static const std::set<std::string> known = {"experiment", "generation", "search",
                                                    "autopilot", "model",      "twin",
                                                    "offline"};
        if (known.count(section) || section.rfind("sibling.", 0) == 0) continue;
        throw ConfigError("[" + section + "]: unknown section");
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return parse_experiment_config(text);
}

const std::string& reference_config_text() {
    static const std::string text = R"(# Pinned reference experiment: small enough for CI, large enough to
# populate feature maps with both failing and passing cells.

[experiment]
global_seed = 13
repetitions = 2
output_dir = out/reference
jobs = 0

[generation]
samples_per_segment = 20
lane_width = 4.0
bbox_side = 250.0
segment_length_min = 25.0
segment_length_max = 40.0
max_step_turn_deg = 60.0
max_curve_sweep_deg = 270.0
max_attempts = 1000

[search]
population_size = 20
iterations = 30
mutation_displacement = 12.0
curvature_bin_width = 0.01
n_control = 8
max_steps = 3000

[autopilot]
kp = 0.40
kd = 9.0
ki = 0.001

[model]
kind = mistuned_pid
kp = 0.22
kd = 3.0
ki = 0.0
steering_offset = 0.04

[sibling.ds1]
engine = kinematic
sensor_bias = 0.15
sensor_noise_sd = 0.02
sensor_delay_steps = 1

[sibling.ds2]
engine = dynamic
tire_stiffness = 5.0
sensor_bias = -0.15
sensor_noise_sd = 0.03
sensor_delay_steps = 2

[twin]
engine = dynamic
tire_stiffness = 8.0
drag = 0.22
sensor_bias = 0.05
sensor_noise_sd = 0.025
sensor_delay_steps = 1

[offline]
road_pairs = 10
density_bins = 25
)";
    return text;
}

}  // namespace crossim
