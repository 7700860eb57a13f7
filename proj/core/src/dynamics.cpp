#include "crossim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crossim {

namespace {

double clip(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

constexpr double kLookaheadDistance = 5.0;  // m ahead on the centerline
constexpr double kProgressEps = 1e-9;

}  // namespace

const char* to_string(EngineKind k) {
    return k == EngineKind::Kinematic ? "kinematic" : "dynamic";
}

const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Autopilot: return "autopilot";
        case ModelKind::MistunedPid: return "mistuned_pid";
        case ModelKind::DelayedPid: return "delayed_pid";
        case ModelKind::NoisyPid: return "noisy_pid";
        case ModelKind::RateLimitedPid: return "rate_limited_pid";
    }
    return "unknown";
}

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::Success: return "success";
        case Outcome::Oob: return "oob";
        case Outcome::Timeout: return "timeout";
    }
    return "unknown";
}

DrivingModelConfig autopilot_reference() {
    DrivingModelConfig m;
    m.kind = ModelKind::Autopilot;
    m.gains.kp = 0.40;
    m.gains.kd = 9.0;
    m.gains.ki = 0.001;
    return m;
}

double pid_steering(PidState& state, double lp, const PidGains& gains) {
    const double diff = lp - state.prev_lp;
    state.sum_lp += lp;
    state.prev_lp = lp;
    const double raw = gains.kp * lp + gains.kd * diff + gains.ki * state.sum_lp;
    return clip(raw, -1.0, 1.0);
}

double throttle_law(double steering, double speed, const SimulatorConfig& cfg) {
    const double k = speed > cfg.max_speed ? cfg.k_low : cfg.k_high;
    const double ratio = speed / k;
    return clip(1.0 - steering * steering - ratio * ratio, 0.0, 1.0);
}

VehicleState step(const VehicleState& state, const DrivingCommand& cmd,
                  const SimulatorConfig& cfg) {
    const double dt = cfg.timestep;
    const double steer = clip(cmd.steering, -1.0, 1.0) * cfg.max_steer_angle;
    const double throttle = clip(cmd.throttle, 0.0, 1.0);
    const double yaw_cmd = state.speed / cfg.wheelbase * std::tan(steer);

    VehicleState next;
    if (cfg.engine == EngineKind::Kinematic) {
        next.yaw_rate = yaw_cmd;
    } else {
        const double a = clip(cfg.tire_stiffness * dt, 0.0, 1.0);
        next.yaw_rate = state.yaw_rate + a * (yaw_cmd - state.yaw_rate);
    }
    next.x = state.x + state.speed * std::cos(state.heading) * dt;
    next.y = state.y + state.speed * std::sin(state.heading) * dt;
    next.heading = wrap_angle(state.heading + next.yaw_rate * dt);
    next.speed = std::max(0.0, state.speed + (cfg.throttle_gain * throttle - cfg.drag * state.speed) * dt);
    next.time = state.time + dt;
    return next;
}

LateralMeasures lateral_measures(const VehicleState& state, const RoadPolyline& polyline,
                                 double lane_width) {
    const NearestPoint near = nearest_on_polyline(polyline, state.x, state.y);
    LateralMeasures m;
    m.lateral_position = near.signed_lateral;
    m.lateral_distance = 0.5 * lane_width - std::abs(near.signed_lateral);
    return m;
}

Observation observe(const VehicleState& state, const RoadPolyline& polyline,
                    const SimulatorConfig& cfg, SensorState& sensor) {
    const NearestPoint near = nearest_on_polyline(polyline, state.x, state.y);

    SensorState::Visible now;
    now.lateral_position = near.signed_lateral + cfg.sensor_bias;
    if (cfg.sensor_noise_sd > 0.0) {
        now.lateral_position += sensor.rng.gaussian(0.0, cfg.sensor_noise_sd);
    }
    now.heading_error = wrap_angle(state.heading - near.heading);

    // Curvature a fixed arc ahead of the current projection.
    const double target = near.arc + kLookaheadDistance;
    const auto& cum = polyline.arc_length;
    std::size_t idx = std::lower_bound(cum.begin(), cum.end(), target) - cum.begin();
    if (idx >= polyline.center_points.size()) idx = polyline.center_points.size() - 1;
    now.lookahead_curvature = curvature_at(polyline, idx);

    sensor.history.push_back(now);
    // Zero-order hold during the first delay_steps ticks.
    const std::size_t delay = static_cast<std::size_t>(std::max(0, cfg.sensor_delay_steps));
    const std::size_t at = sensor.history.size() > delay ? sensor.history.size() - 1 - delay : 0;
    const SensorState::Visible& vis = sensor.history[at];

    Observation obs;
    obs.lateral_position = vis.lateral_position;
    obs.heading_error = vis.heading_error;
    obs.lookahead_curvature = vis.lookahead_curvature;
    obs.speed = state.speed;
    obs.true_lateral_position = near.signed_lateral;
    return obs;
}

DrivingCommand drive(const DrivingModelConfig& model, const Observation& obs, ModelState& state,
                     const SimulatorConfig& cfg) {
    double steering = 0.0;
    switch (model.kind) {
        case ModelKind::Autopilot:
            steering = pid_steering(state.pid, obs.true_lateral_position, model.gains);
            break;
        case ModelKind::MistunedPid:
            steering = pid_steering(state.pid, obs.lateral_position, model.gains);
            break;
        case ModelKind::DelayedPid: {
            state.lp_history.push_back(obs.lateral_position);
            const std::size_t delay = static_cast<std::size_t>(std::max(0, model.delay_steps));
            const std::size_t at =
                state.lp_history.size() > delay ? state.lp_history.size() - 1 - delay : 0;
            steering = pid_steering(state.pid, state.lp_history[at], model.gains);
            break;
        }
        case ModelKind::NoisyPid: {
            double lp = obs.lateral_position;
            if (model.noise_sd > 0.0) lp += state.rng.gaussian(0.0, model.noise_sd);
            steering = pid_steering(state.pid, lp, model.gains);
            break;
        }
        case ModelKind::RateLimitedPid:
            steering = pid_steering(state.pid, obs.lateral_position, model.gains);
            break;
    }

    steering = clip(steering + model.steering_offset, -1.0, 1.0);
    if (model.kind == ModelKind::RateLimitedPid) {
        steering = clip(steering, state.prev_steering - model.max_slew,
                        state.prev_steering + model.max_slew);
    }
    state.prev_steering = steering;

    DrivingCommand cmd;
    cmd.steering = steering;
    cmd.throttle = throttle_law(steering, obs.speed, cfg);
    return cmd;
}

EpisodeResult run_episode(const DrivingModelConfig& model, const SimulatorConfig& cfg,
                          const RoadPolyline& road, double lane_width, const EpisodeLimits& limits,
                          std::uint64_t episode_seed, bool keep_trace) {
    if (road.center_points.size() < 2) throw std::invalid_argument("run_episode: degenerate road");
    if (limits.max_steps < 1) throw std::invalid_argument("run_episode: max_steps must be >= 1");

    VehicleState state;
    state.x = road.center_points.front().x;
    state.y = road.center_points.front().y;
    state.heading = road.headings.front();

    SensorState sensor(derive_seed(episode_seed, "sensor"));
    ModelState mstate(derive_seed(episode_seed, "model"));

    const double total = road.arc_length.back();
    EpisodeResult result;
    result.fitness = 0.5 * lane_width;
    if (keep_trace) result.trace.reserve(static_cast<std::size_t>(limits.max_steps));

    for (int i = 0; i < limits.max_steps; ++i) {
        const Observation obs = observe(state, road, cfg, sensor);
        const DrivingCommand cmd = drive(model, obs, mstate, cfg);
        if (keep_trace) result.trace.push_back({state, obs, cmd});

        state = step(state, cmd, cfg);
        result.steps = i + 1;

        const NearestPoint near = nearest_on_polyline(road, state.x, state.y);
        const double ld = 0.5 * lane_width - std::abs(near.signed_lateral);
        result.fitness = std::min(result.fitness, ld);
        result.max_lateral_position =
            std::max(result.max_lateral_position, std::abs(near.signed_lateral));

        if (ld < 0.0) {
            result.outcome = Outcome::Oob;
            return result;
        }
        if (near.arc >= total - kProgressEps) {
            result.outcome = Outcome::Success;
            return result;
        }
    }
    result.outcome = Outcome::Timeout;
    return result;
}

}  // namespace crossim
