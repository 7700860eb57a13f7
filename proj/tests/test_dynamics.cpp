#include <cmath>
#include <vector>

#include "crossim/dynamics.hpp"
#include "crossim/geometry.hpp"
#include "crossim/rng.hpp"
#include "doctest.h"

using namespace crossim;

namespace {

RoadSpec straight_spec(int n_ctrl = 8, double spacing = 30.0) {
    RoadSpec s;
    for (int i = 0; i < n_ctrl; ++i)
        s.control_points.push_back({10.0 + spacing * i, 125.0});
    return s;
}

DrivingModelConfig pid_model(ModelKind kind, double kp, double kd = 0.0, double ki = 0.0) {
    DrivingModelConfig m;
    m.kind = kind;
    m.gains = {kp, kd, ki};
    return m;
}

// Least-squares circle (Kasa): linearizes x^2 + y^2 = 2ax + 2by + c.
double fit_circle_radius(const std::vector<ControlPoint>& pts) {
    double sxx = 0, sxy = 0, syy = 0, sx = 0, sy = 0, sxz = 0, syz = 0, sz = 0;
    const double n = static_cast<double>(pts.size());
    for (const auto& p : pts) {
        const double z = p.x * p.x + p.y * p.y;
        sxx += p.x * p.x; sxy += p.x * p.y; syy += p.y * p.y;
        sx += p.x; sy += p.y;
        sxz += p.x * z; syz += p.y * z; sz += z;
    }
    // Normal equations for (2a, 2b, c).
    double m[3][4] = {{sxx, sxy, sx, sxz}, {sxy, syy, sy, syz}, {sx, sy, n, sz}};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        std::swap(m[col], m[piv]);
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
        }
    }
    const double a = m[0][3] / m[0][0] / 2.0;
    const double b = m[1][3] / m[1][1] / 2.0;
    const double c = m[2][3] / m[2][2];
    return std::sqrt(c + a * a + b * b);
}

}  // namespace

TEST_CASE("pid: zero error means zero steering") {
    PidState s;
    for (int i = 0; i < 10; ++i)
        CHECK(pid_steering(s, 0.0, {0.7, 3.0, 0.01}) == 0.0);
}

TEST_CASE("pid: pure proportional term") {
    PidState s;
    CHECK(pid_steering(s, 0.5, {1.0, 0.0, 0.0}) == 0.5);
}

TEST_CASE("pid: output clipped to [-1, 1]") {
    PidState s;
    CHECK(pid_steering(s, 0.8, {2.0, 0.0, 0.0}) == 1.0);  // raw 1.6
    PidState s2;
    CHECK(pid_steering(s2, -0.8, {2.0, 0.0, 0.0}) == -1.0);
}

TEST_CASE("pid: derivative acts on the error change") {
    PidState s;
    CHECK(pid_steering(s, 0.2, {0.0, 1.0, 0.0}) == doctest::Approx(0.2));  // prev starts at 0
    CHECK(pid_steering(s, 0.5, {0.0, 1.0, 0.0}) == doctest::Approx(0.3));
    CHECK(pid_steering(s, 0.5, {0.0, 1.0, 0.0}) == doctest::Approx(0.0));
}

TEST_CASE("pid: integral is the running sum including the current error") {
    PidState s;
    CHECK(pid_steering(s, 0.1, {0.0, 0.0, 1.0}) == doctest::Approx(0.1));
    CHECK(pid_steering(s, 0.2, {0.0, 0.0, 1.0}) == doctest::Approx(0.3));
    CHECK(pid_steering(s, 0.3, {0.0, 0.0, 1.0}) == doctest::Approx(0.6));
}

TEST_CASE("throttle: full at standstill with wheels straight") {
    CHECK(throttle_law(0.0, 0.0, SimulatorConfig{}) == 1.0);
}

TEST_CASE("throttle: full steering cuts the throttle") {
    const SimulatorConfig cfg;
    CHECK(throttle_law(1.0, 0.0, cfg) == 0.0);
    CHECK(throttle_law(-1.0, 5.0, cfg) == 0.0);
}

TEST_CASE("throttle: speeding switches to the low constant and cuts hard") {
    const SimulatorConfig cfg;
    const double v = 1.01 * cfg.max_speed;
    // (v / k_low)^2 is about 4.08, so the raw value is far below zero.
    CHECK(throttle_law(0.0, v, cfg) == 0.0);
}

TEST_CASE("throttle: cruise value below the limit follows the formula") {
    const SimulatorConfig cfg;
    const double v = cfg.max_speed;  // not above the limit -> k_high
    const double expected = 1.0 - (v / cfg.k_high) * (v / cfg.k_high);
    CHECK(throttle_law(0.0, v, cfg) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(1.0 - 1.0 / 2.25).epsilon(1e-12));
}

TEST_CASE("step: at rest with no throttle only time advances") {
    VehicleState s;
    s.x = 3.0; s.y = 4.0; s.heading = 0.7;
    const VehicleState n = step(s, {0.5, 0.0}, SimulatorConfig{});
    CHECK(n.x == s.x);
    CHECK(n.y == s.y);
    CHECK(n.heading == s.heading);
    CHECK(n.speed == 0.0);
    CHECK(n.time == doctest::Approx(0.05));
}

TEST_CASE("step: straight wheels move along the heading") {
    SimulatorConfig cfg;
    VehicleState s;
    s.heading = 0.6;
    s.speed = 5.0;
    // throttle_gain * 1/3 exactly balances drag * 5.
    const VehicleState n = step(s, {0.0, 1.0 / 3.0}, cfg);
    CHECK(n.x == doctest::Approx(5.0 * std::cos(0.6) * cfg.timestep).epsilon(1e-12));
    CHECK(n.y == doctest::Approx(5.0 * std::sin(0.6) * cfg.timestep).epsilon(1e-12));
    CHECK(n.speed == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(n.heading == 0.6);
}

TEST_CASE("step: constant steering drives a circle of the closed-form radius") {
    SimulatorConfig cfg;
    const double steering = 0.3;
    const double expected_radius = cfg.wheelbase / std::tan(steering * cfg.max_steer_angle);

    VehicleState s;
    std::vector<ControlPoint> pts;
    for (int i = 0; i < 2000; ++i) {
        s = step(s, {steering, 0.5}, cfg);
        pts.push_back({s.x, s.y});
    }
    const double fitted = fit_circle_radius(pts);
    CHECK(std::abs(fitted - expected_radius) / expected_radius < 0.01);
}

TEST_CASE("step: speed never exceeds the terminal speed") {
    SimulatorConfig cfg;
    const double terminal = cfg.throttle_gain / cfg.drag;
    Rng rng(3);
    VehicleState s;
    for (int i = 0; i < 5000; ++i) {
        s = step(s, {rng.uniform(-1.0, 1.0), rng.uniform(0.0, 1.0)}, cfg);
        CHECK(s.speed >= 0.0);
        CHECK(s.speed <= terminal + 1e-9);
    }
}

TEST_CASE("step: dynamic engine lags the commanded yaw rate") {
    SimulatorConfig cfg;
    cfg.engine = EngineKind::Dynamic;
    cfg.tire_stiffness = 5.0;

    VehicleState s;
    s.speed = 8.0;
    const DrivingCommand cmd{0.4, 0.0};
    const double yaw_cmd = s.speed / cfg.wheelbase * std::tan(cmd.steering * cfg.max_steer_angle);

    // One step follows the first-order update exactly.
    const double a = cfg.tire_stiffness * cfg.timestep;
    VehicleState n = step(s, cmd, cfg);
    CHECK(n.yaw_rate == doctest::Approx(a * yaw_cmd).epsilon(1e-12));

    // Held at constant speed, the realized rate converges geometrically.
    VehicleState h = s;
    for (int i = 0; i < 60; ++i) {
        h = step(h, cmd, cfg);
        h.speed = s.speed;
    }
    CHECK(std::abs(h.yaw_rate - yaw_cmd) < std::pow(1.0 - a, 60) * std::abs(yaw_cmd) + 1e-12);

    // The kinematic engine realizes the command immediately.
    cfg.engine = EngineKind::Kinematic;
    CHECK(step(s, cmd, cfg).yaw_rate == doctest::Approx(yaw_cmd).epsilon(1e-12));
}

TEST_CASE("lateral measures: center, boundary, and beyond") {
    const RoadSpec spec = straight_spec();
    const RoadPolyline poly = interpolate_catmull_rom(spec);
    VehicleState s;
    s.x = 100.0;

    s.y = 125.0;  // lane center
    LateralMeasures m = lateral_measures(s, poly, spec.lane_width);
    CHECK(m.lateral_position == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(m.lateral_distance == doctest::Approx(0.5 * spec.lane_width).epsilon(1e-9));

    s.y = 127.0;  // exactly on the boundary
    m = lateral_measures(s, poly, spec.lane_width);
    CHECK(m.lateral_distance == doctest::Approx(0.0).epsilon(1e-9));

    s.y = 128.0;  // one meter beyond
    m = lateral_measures(s, poly, spec.lane_width);
    CHECK(m.lateral_distance == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("observe: clean sensor reports the true value") {
    const RoadPolyline poly = interpolate_catmull_rom(straight_spec());
    SimulatorConfig cfg;  // bias 0, noise 0, delay 0
    SensorState sensor(1);
    VehicleState s;
    s.x = 90.0;
    s.y = 125.8;
    const Observation obs = observe(s, poly, cfg, sensor);
    CHECK(obs.lateral_position == obs.true_lateral_position);
    CHECK(obs.speed == s.speed);
}

TEST_CASE("observe: constant bias shifts the visible channel exactly") {
    const RoadPolyline poly = interpolate_catmull_rom(straight_spec());
    SimulatorConfig cfg;
    cfg.sensor_bias = 0.2;
    SensorState sensor(1);
    VehicleState s;
    s.x = 90.0;
    s.y = 124.3;
    const Observation obs = observe(s, poly, cfg, sensor);
    CHECK(obs.lateral_position == doctest::Approx(obs.true_lateral_position + 0.2).epsilon(1e-12));
}

TEST_CASE("observe: delayed sensor replays the value from delay steps ago") {
    const RoadPolyline poly = interpolate_catmull_rom(straight_spec());
    SimulatorConfig cfg;
    cfg.sensor_delay_steps = 3;
    SensorState sensor(1);

    std::vector<double> true_lp;
    std::vector<double> visible;
    VehicleState s;
    s.x = 80.0;
    for (int t = 0; t < 10; ++t) {
        s.y = 125.0 + 0.1 * t;  // strictly changing lateral offset
        const Observation obs = observe(s, poly, cfg, sensor);
        true_lp.push_back(obs.true_lateral_position);
        visible.push_back(obs.lateral_position);
    }
    for (int t = 0; t < 10; ++t) {
        const int at = t < 3 ? 0 : t - 3;  // zero-order hold at episode start
        CHECK(visible[t] == true_lp[at]);
    }
}

TEST_CASE("observe: noise stream is seed-deterministic") {
    const RoadPolyline poly = interpolate_catmull_rom(straight_spec());
    SimulatorConfig cfg;
    cfg.sensor_noise_sd = 0.05;
    VehicleState s;
    s.x = 90.0;
    s.y = 125.5;

    SensorState a(42), b(42), c(43);
    const double va = observe(s, poly, cfg, a).lateral_position;
    const double vb = observe(s, poly, cfg, b).lateral_position;
    const double vc = observe(s, poly, cfg, c).lateral_position;
    CHECK(va == vb);
    CHECK(va != vc);
    CHECK(va != observe(s, poly, cfg, a).lateral_position);  // stream advances
}

TEST_CASE("drive: autopilot on the lane center keeps wheels straight") {
    Observation obs;  // all zeros
    ModelState st;
    const DrivingCommand cmd = drive(autopilot_reference(), obs, st, SimulatorConfig{});
    CHECK(cmd.steering == 0.0);
    CHECK(cmd.throttle == 1.0);
}

TEST_CASE("drive: autopilot ignores a corrupted visible channel") {
    Observation obs;
    obs.lateral_position = 5.0;  // garbage visible value
    obs.true_lateral_position = 0.0;
    ModelState st;
    CHECK(drive(autopilot_reference(), obs, st, SimulatorConfig{}).steering == 0.0);
}

TEST_CASE("drive: mistuned gains double the raw steering") {
    Observation obs;
    obs.lateral_position = 0.4;
    obs.true_lateral_position = 0.4;

    const DrivingModelConfig reference = pid_model(ModelKind::Autopilot, 0.4);
    const DrivingModelConfig doubled = pid_model(ModelKind::MistunedPid, 0.8);
    ModelState sa, sb;
    const double a = drive(reference, obs, sa, SimulatorConfig{}).steering;
    const double b = drive(doubled, obs, sb, SimulatorConfig{}).steering;
    CHECK(b == 2.0 * a);  // no clipping active at these magnitudes
}

TEST_CASE("drive: rate limit clamps the steering change per step") {
    Observation obs;
    obs.lateral_position = 0.4;
    DrivingModelConfig m = pid_model(ModelKind::RateLimitedPid, 10.0);  // raw clips to 1
    m.max_slew = 0.1;
    ModelState st;
    CHECK(drive(m, obs, st, SimulatorConfig{}).steering == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(drive(m, obs, st, SimulatorConfig{}).steering == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("drive: delayed model steers on stale lateral positions") {
    DrivingModelConfig m = pid_model(ModelKind::DelayedPid, 1.0);
    m.delay_steps = 2;
    ModelState st;
    SimulatorConfig cfg;
    Observation obs;
    const double seq[] = {0.1, 0.2, 0.3, 0.4};
    std::vector<double> out;
    for (double lp : seq) {
        obs.lateral_position = lp;
        out.push_back(drive(m, obs, st, cfg).steering);
    }
    CHECK(out[0] == doctest::Approx(0.1));  // zero-order hold
    CHECK(out[1] == doctest::Approx(0.1));
    CHECK(out[2] == doctest::Approx(0.1));
    CHECK(out[3] == doctest::Approx(0.2));
}

TEST_CASE("drive: steering offset shifts the command") {
    Observation obs;  // lp 0
    DrivingModelConfig m = pid_model(ModelKind::MistunedPid, 0.5);
    m.steering_offset = 0.25;
    ModelState st;
    CHECK(drive(m, obs, st, SimulatorConfig{}).steering == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("episode: a one-step budget times out") {
    const RoadSpec spec = straight_spec();
    const RoadPolyline poly = interpolate_catmull_rom(spec);
    EpisodeLimits limits;
    limits.max_steps = 1;
    const EpisodeResult r =
        run_episode(autopilot_reference(), SimulatorConfig{}, poly, spec.lane_width, limits, 5);
    CHECK(r.outcome == Outcome::Timeout);
    CHECK(r.steps == 1);
}

TEST_CASE("episode: hard-left steering leaves a straight road") {
    const RoadSpec spec = straight_spec();
    const RoadPolyline poly = interpolate_catmull_rom(spec);
    DrivingModelConfig m = pid_model(ModelKind::MistunedPid, 0.0);
    // Constant hard-left command. Not the full 1.0: the throttle law cuts to
    // zero at |steering| = 1 and the vehicle would never move off the start.
    m.steering_offset = 0.8;
    EpisodeLimits limits;
    const EpisodeResult r = run_episode(m, SimulatorConfig{}, poly, spec.lane_width, limits, 5);
    CHECK(r.outcome == Outcome::Oob);
    CHECK(r.fitness < 0.0);
}

TEST_CASE("episode: out of bound exactly when fitness is negative") {
    Rng rng(1212);
    DrivingModelConfig shaky = pid_model(ModelKind::MistunedPid, 0.22, 3.0);
    shaky.steering_offset = 0.04;
    EpisodeLimits limits;

    for (int it = 0; it < 40; ++it) {
        const RoadSpec spec = generate_random_road(rng.next_u64(), 8);
        const RoadPolyline poly = interpolate_catmull_rom(spec);
        SimulatorConfig cfg;
        cfg.engine = it % 2 == 0 ? EngineKind::Kinematic : EngineKind::Dynamic;
        cfg.sensor_bias = rng.uniform(-0.2, 0.2);
        const EpisodeResult r =
            run_episode(it % 3 == 0 ? autopilot_reference() : shaky, cfg, poly, spec.lane_width,
                        limits, rng.next_u64());
        CHECK((r.outcome == Outcome::Oob) == (r.fitness < 0.0));
        CHECK(r.max_lateral_position >= 0.0);
        CHECK(r.steps >= 1);
    }
}

TEST_CASE("episode: bitwise deterministic for a fixed seed") {
    const RoadSpec spec = generate_random_road(64, 8);
    const RoadPolyline poly = interpolate_catmull_rom(spec);
    SimulatorConfig cfg;
    cfg.sensor_noise_sd = 0.03;
    cfg.sensor_bias = 0.1;
    DrivingModelConfig m = pid_model(ModelKind::NoisyPid, 0.3, 6.0);
    m.noise_sd = 0.02;
    EpisodeLimits limits;

    const EpisodeResult a = run_episode(m, cfg, poly, spec.lane_width, limits, 321, true);
    const EpisodeResult b = run_episode(m, cfg, poly, spec.lane_width, limits, 321, true);
    REQUIRE(a.steps == b.steps);
    CHECK(a.fitness == b.fitness);
    CHECK(a.max_lateral_position == b.max_lateral_position);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].state.x == b.trace[i].state.x);
        CHECK(a.trace[i].state.y == b.trace[i].state.y);
        CHECK(a.trace[i].cmd.steering == b.trace[i].cmd.steering);
        CHECK(a.trace[i].obs.lateral_position == b.trace[i].obs.lateral_position);
    }

    const EpisodeResult c = run_episode(m, cfg, poly, spec.lane_width, limits, 322, true);
    CHECK(a.fitness != c.fitness);  // the seed matters
}

TEST_CASE("episode: pinned autopilot run stays on the road") {
    const RoadSpec spec = generate_random_road(7, 8);
    const RoadPolyline poly = interpolate_catmull_rom(spec);
    EpisodeLimits limits;
    const EpisodeResult r =
        run_episode(autopilot_reference(), SimulatorConfig{}, poly, spec.lane_width, limits, 99);
    CHECK(r.outcome == Outcome::Success);
    CHECK(r.fitness > 0.0);
    CHECK(r.fitness == doctest::Approx(1.3015).epsilon(1e-3));  // frozen regression value
}

TEST_CASE("episode: trace is recorded only on request") {
    const RoadSpec spec = straight_spec();
    const RoadPolyline poly = interpolate_catmull_rom(spec);
    EpisodeLimits limits;
    limits.max_steps = 50;
    const EpisodeResult off =
        run_episode(autopilot_reference(), SimulatorConfig{}, poly, spec.lane_width, limits, 4);
    CHECK(off.trace.empty());
    const EpisodeResult on = run_episode(autopilot_reference(), SimulatorConfig{}, poly,
                                         spec.lane_width, limits, 4, true);
    CHECK(on.trace.size() == static_cast<std::size_t>(on.steps));
}
