#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crossim/geometry.hpp"
#include "crossim/rng.hpp"

namespace crossim {

enum class EngineKind { Kinematic, Dynamic };
enum class ModelKind { Autopilot, MistunedPid, DelayedPid, NoisyPid, RateLimitedPid };
enum class Outcome { Success, Oob, Timeout };

const char* to_string(EngineKind k);
const char* to_string(ModelKind k);
const char* to_string(Outcome o);

struct VehicleState {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;   // rad
    double speed = 0.0;     // m/s, >= 0
    double yaw_rate = 0.0;  // realized yaw rate; lag state of the dynamic engine
    double time = 0.0;      // s
};

struct DrivingCommand {
    double steering = 0.0;  // [-1, +1], +1 full left (counterclockwise yaw)
    double throttle = 0.0;  // [0, 1]
};

struct SimulatorConfig {
    std::string name = "sim";
    EngineKind engine = EngineKind::Kinematic;
    double timestep = 0.05;          // s (20 fps)
    double wheelbase = 2.5;          // m
    double max_steer_angle = 0.5;    // rad at steering = +-1
    double max_speed = 30.0 / 3.6;   // m/s
    double throttle_gain = 3.0;      // m/s^2 at full throttle
    double drag = 0.2;               // 1/s
    double tire_stiffness = 6.0;     // 1/s yaw-rate lag gain, dynamic engine only
    double k_low = 0.5 * 30.0 / 3.6;   // throttle-law K above the speed limit
    double k_high = 1.5 * 30.0 / 3.6;  // throttle-law K at or below the limit
    double sensor_bias = 0.0;        // m, added to the visible lateral position
    double sensor_noise_sd = 0.0;    // m
    int sensor_delay_steps = 0;
};

struct Observation {
    double lateral_position = 0.0;       // visible channel: bias/noise/delay applied
    double heading_error = 0.0;          // rad, visible channel
    double lookahead_curvature = 0.0;    // 1/m, visible channel
    double speed = 0.0;                  // m/s
    double true_lateral_position = 0.0;  // oracle channel, exact
};

struct PidGains {
    double kp = 0.0;
    double kd = 0.0;
    double ki = 0.0;
};

struct DrivingModelConfig {
    ModelKind kind = ModelKind::Autopilot;
    PidGains gains;
    int delay_steps = 0;        // DelayedPid
    double noise_sd = 0.0;      // NoisyPid
    double max_slew = 1.0;      // RateLimitedPid, steering change per step
    double steering_offset = 0.0;
};

/// Autopilot gains used for labeling and regression corpora. Positive because
/// a positive lateral position (right of lane center) needs left (positive)
/// steering to recover.
DrivingModelConfig autopilot_reference();

struct PidState {
    double prev_lp = 0.0;
    double sum_lp = 0.0;
};

/// Per-episode controller state, reset between episodes.
struct ModelState {
    explicit ModelState(std::uint64_t noise_seed = 0) : rng(noise_seed) {}
    PidState pid;
    double prev_steering = 0.0;
    std::vector<double> lp_history;  // DelayedPid buffer
    Rng rng;
};

/// Per-episode sensor pipeline state (noise stream + delay line).
struct SensorState {
    explicit SensorState(std::uint64_t seed = 0) : rng(seed) {}
    struct Visible {
        double lateral_position;
        double heading_error;
        double lookahead_curvature;
    };
    std::vector<Visible> history;
    Rng rng;
};

struct LateralMeasures {
    double lateral_position = 0.0;  // signed, 0 at lane center
    double lateral_distance = 0.0;  // lane_width/2 - |lateral_position|
};

struct EpisodeStep {
    VehicleState state;  // before the dynamics update
    Observation obs;
    DrivingCommand cmd;
};

struct EpisodeResult {
    Outcome outcome = Outcome::Timeout;
    double fitness = 0.0;               // min lateral distance over the episode
    double max_lateral_position = 0.0;  // max |lateral position|
    int steps = 0;
    std::vector<EpisodeStep> trace;
};

struct EpisodeLimits {
    int max_steps = 4000;
};

/// PID on the lateral position; output clipped to [-1, +1].
double pid_steering(PidState& state, double lp, const PidGains& gains);

/// K switches between k_high and k_low at the max-speed threshold; output
/// clipped to [0, 1].
double throttle_law(double steering, double speed, const SimulatorConfig& cfg);

/// One explicit-Euler bicycle update. Dynamic engine adds a first-order lag on
/// the yaw rate with tire_stiffness as the gain.
VehicleState step(const VehicleState& state, const DrivingCommand& cmd,
                  const SimulatorConfig& cfg);

LateralMeasures lateral_measures(const VehicleState& state, const RoadPolyline& polyline,
                                 double lane_width);

Observation observe(const VehicleState& state, const RoadPolyline& polyline,
                    const SimulatorConfig& cfg, SensorState& sensor);

DrivingCommand drive(const DrivingModelConfig& model, const Observation& obs, ModelState& state,
                     const SimulatorConfig& cfg);

/// Runs one closed-loop episode: observe -> drive -> step -> measure, at
/// 1/timestep Hz, vehicle starting at the first drivable point on the lane
/// center. The episode seed feeds the sensor and model noise streams.
EpisodeResult run_episode(const DrivingModelConfig& model, const SimulatorConfig& cfg,
                          const RoadPolyline& road, double lane_width, const EpisodeLimits& limits,
                          std::uint64_t episode_seed, bool keep_trace = false);

}  // namespace crossim
