#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "crossim/errors.hpp"

namespace crossim {

struct ControlPoint {
    double x = 0.0;
    double y = 0.0;
};

/// Abstract road test case: control points plus interpolation/lane parameters.
/// The drivable road runs from the second control point to the second-to-last,
/// so at least four points are required.
struct RoadSpec {
    std::vector<ControlPoint> control_points;
    int samples_per_segment = 20;
    double lane_width = 4.0;
    double bbox_side = 250.0;
};

/// Sampled center line of the right lane, with per-point tangent headings and
/// cumulative arc length. Point count is (n_ctrl - 3) * samples_per_segment + 1.
struct RoadPolyline {
    std::vector<ControlPoint> center_points;
    std::vector<double> headings;
    std::vector<double> arc_length;  // per point, arc_length[0] == 0
    double cumulative_length = 0.0;
};

struct RoadFeatures {
    int turn_count = 0;
    double curvature = 0.0;  // 1/m, reciprocal of the minimum circumradius; 0 when straight
};

enum class InvalidReason { StartEqualsEnd, OutOfBoundingBox, SelfIntersection };

struct ValidityResult {
    bool valid = false;
    std::optional<InvalidReason> reason;

    static ValidityResult ok() { return {true, std::nullopt}; }
    static ValidityResult bad(InvalidReason r) { return {false, r}; }
};

const char* to_string(InvalidReason r);

struct RoadGenParams {
    int samples_per_segment = 20;
    double lane_width = 4.0;
    double bbox_side = 250.0;
    double segment_length_min = 25.0;
    double segment_length_max = 40.0;
    double max_step_turn_deg = 60.0;    // per-control-point heading change bound
    double max_curve_sweep_deg = 270.0; // bound on a single same-direction sweep
    int max_attempts = 1000;
};

/// Uniform Catmull-Rom interpolation through the interior control points.
/// Throws DegenerateSpec when consecutive control points coincide.
RoadPolyline interpolate_catmull_rom(const RoadSpec& spec);

/// Valid iff start != end, every point is inside the [0, bbox_side]^2 box and
/// no two non-adjacent polyline segments intersect.
ValidityResult validate_road(const RoadPolyline& polyline, const RoadSpec& spec);

/// A turn is a maximal run of same-sign heading deltas whose total absolute
/// sweep exceeds the threshold.
int count_turns(const RoadPolyline& polyline, double angle_threshold_deg = 5.0);

/// Minimum circumradius over consecutive point triples; +infinity when the
/// road is straight.
double min_radius(const RoadPolyline& polyline);

RoadFeatures road_features(const RoadPolyline& polyline, double angle_threshold_deg = 5.0);

/// Random-walk road generator with bounded per-step turning; retries until the
/// road validates. Throws GenerationExhausted when the attempt budget runs out.
RoadSpec generate_random_road(std::uint64_t rng_seed, int n_ctrl, const RoadGenParams& params = {});

/// Displaces one uniformly chosen interior control point by independent uniform
/// offsets in [-displacement, +displacement] per axis, retrying until the
/// mutant validates. Throws MutationExhausted when the attempt budget runs out.
RoadSpec mutate_road(const RoadSpec& spec, std::uint64_t rng_seed, double displacement,
                     int max_attempts = 100);

/// Same road driven in the opposite direction.
RoadSpec reverse_spec(const RoadSpec& spec);

struct NearestPoint {
    int segment = 0;         // index of the polyline segment containing the projection
    double t = 0.0;          // projection parameter within the segment, in [0, 1]
    ControlPoint point;      // closest point on the polyline
    double distance = 0.0;   // unsigned distance
    double signed_lateral = 0.0;  // positive toward the outer road edge (right of travel)
    double arc = 0.0;        // arc length of the projection
    double heading = 0.0;    // segment heading at the projection
};

NearestPoint nearest_on_polyline(const RoadPolyline& polyline, double x, double y);

/// Local curvature at a polyline index from the surrounding point triple.
double curvature_at(const RoadPolyline& polyline, int index);

double wrap_angle(double a);  // to (-pi, pi]

}  // namespace crossim
