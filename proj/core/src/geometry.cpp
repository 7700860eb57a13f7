#include "crossim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "crossim/rng.hpp"

namespace crossim {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kEndpointEps = 1e-6;     // start/end coincidence, meters
constexpr double kStraightRadius = 1e9;   // radii beyond this count as straight

double deg2rad(double d) { return d * kPi / 180.0; }

double dist(const ControlPoint& a, const ControlPoint& b) {
    return std::hypot(b.x - a.x, b.y - a.y);
}

double cross(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

int orientation(const ControlPoint& a, const ControlPoint& b, const ControlPoint& c) {
    const double v = cross(b.x - a.x, b.y - a.y, c.x - a.x, c.y - a.y);
    return (v > 0.0) - (v < 0.0);
}

bool on_segment(const ControlPoint& a, const ControlPoint& b, const ControlPoint& c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= c.y && c.y <= std::max(a.y, b.y);
}

bool segments_intersect(const ControlPoint& p1, const ControlPoint& p2, const ControlPoint& p3,
                        const ControlPoint& p4) {
    const int o1 = orientation(p1, p2, p3);
    const int o2 = orientation(p1, p2, p4);
    const int o3 = orientation(p3, p4, p1);
    const int o4 = orientation(p3, p4, p2);
    if (o1 != o2 && o3 != o4)
        return true;
    if (o1 == 0 && on_segment(p1, p2, p3))
        return true;
    if (o2 == 0 && on_segment(p1, p2, p4))
        return true;
    if (o3 == 0 && on_segment(p3, p4, p1))
        return true;
    if (o4 == 0 && on_segment(p3, p4, p2))
        return true;
    return false;
}

/// Circumradius of a point triple; +infinity for (near-)collinear triples.
double circumradius(const ControlPoint& a, const ControlPoint& b, const ControlPoint& c) {
    const double la = dist(b, c);
    const double lb = dist(a, c);
    const double lc = dist(a, b);
    const double area2 = std::abs(cross(b.x - a.x, b.y - a.y, c.x - a.x, c.y - a.y));
    if (area2 <= 0.0)
        return std::numeric_limits<double>::infinity();
    const double r = (la * lb * lc) / (2.0 * area2);
    if (!std::isfinite(r) || r > kStraightRadius)
        return std::numeric_limits<double>::infinity();
    return r;
}

struct Walk {
    std::vector<ControlPoint> points;
};

Walk draw_walk(Rng& rng, int n_ctrl, const RoadGenParams& p) {
    Walk w;
    w.points.reserve(static_cast<std::size_t>(n_ctrl));
    const double side = p.bbox_side;
    ControlPoint pos{rng.uniform(0.3 * side, 0.7 * side), rng.uniform(0.3 * side, 0.7 * side)};
    double heading = rng.uniform(0.0, 2.0 * kPi);
    const double max_step = deg2rad(p.max_step_turn_deg);
    const double max_sweep = deg2rad(p.max_curve_sweep_deg);
    double run_sweep = 0.0;  // same-direction heading change accumulated so far
    w.points.push_back(pos);
    for (int i = 1; i < n_ctrl; ++i) {
        double delta = rng.uniform(-max_step, max_step);
        if (delta * run_sweep > 0.0) {
            const double room = max_sweep - std::abs(run_sweep);
            if (std::abs(delta) > room)
                delta = (delta > 0.0 ? room : -room);
            run_sweep += delta;
        } else {
            run_sweep = delta;
        }
        heading += delta;
        const double len = rng.uniform(p.segment_length_min, p.segment_length_max);
        pos = {pos.x + len * std::cos(heading), pos.y + len * std::sin(heading)};
        w.points.push_back(pos);
    }
    return w;
}

}  // namespace

const char* to_string(InvalidReason r) {
    switch (r) {
        case InvalidReason::StartEqualsEnd: return "start_equals_end";
        case InvalidReason::OutOfBoundingBox: return "out_of_bounding_box";
        case InvalidReason::SelfIntersection: return "self_intersection";
    }
    return "unknown";
}

double wrap_angle(double a) {
    while (a > kPi)
        a -= 2.0 * kPi;
    while (a <= -kPi)
        a += 2.0 * kPi;
    return a;
}

RoadPolyline interpolate_catmull_rom(const RoadSpec& spec) {
    const auto& cp = spec.control_points;
    const int n = static_cast<int>(cp.size());
    if (n < 4)
        throw std::invalid_argument("RoadSpec needs at least 4 control points");
    if (spec.samples_per_segment < 2)
        throw std::invalid_argument("samples_per_segment must be >= 2");
    for (int i = 0; i + 1 < n; ++i) {
        if (dist(cp[i], cp[i + 1]) == 0.0)
            throw DegenerateSpec("consecutive control points coincide at index " +
                                 std::to_string(i));
    }

    const int segments = n - 3;
    const int s = spec.samples_per_segment;
    RoadPolyline poly;
    poly.center_points.reserve(static_cast<std::size_t>(segments) * s + 1);
    poly.headings.reserve(poly.center_points.capacity());

    auto eval = [](const ControlPoint& p0, const ControlPoint& p1, const ControlPoint& p2,
                   const ControlPoint& p3, double t, ControlPoint& q, double& dx, double& dy) {
        const double c1x = p2.x - p0.x, c1y = p2.y - p0.y;
        const double c2x = 2.0 * p0.x - 5.0 * p1.x + 4.0 * p2.x - p3.x;
        const double c2y = 2.0 * p0.y - 5.0 * p1.y + 4.0 * p2.y - p3.y;
        const double c3x = -p0.x + 3.0 * p1.x - 3.0 * p2.x + p3.x;
        const double c3y = -p0.y + 3.0 * p1.y - 3.0 * p2.y + p3.y;
        q.x = 0.5 * (2.0 * p1.x + t * (c1x + t * (c2x + t * c3x)));
        q.y = 0.5 * (2.0 * p1.y + t * (c1y + t * (c2y + t * c3y)));
        dx = 0.5 * (c1x + t * (2.0 * c2x + t * 3.0 * c3x));
        dy = 0.5 * (c1y + t * (2.0 * c2y + t * 3.0 * c3y));
    };

    double prev_heading = 0.0;
    for (int seg = 0; seg < segments; ++seg) {
        const ControlPoint& p0 = cp[seg];
        const ControlPoint& p1 = cp[seg + 1];
        const ControlPoint& p2 = cp[seg + 2];
        const ControlPoint& p3 = cp[seg + 3];
        for (int k = 0; k < s; ++k) {
            const double t = static_cast<double>(k) / s;
            ControlPoint q;
            double dx, dy;
            eval(p0, p1, p2, p3, t, q, dx, dy);
            double h = prev_heading;
            if (std::hypot(dx, dy) > 1e-12)
                h = std::atan2(dy, dx);
            poly.center_points.push_back(q);
            poly.headings.push_back(h);
            prev_heading = h;
        }
    }
    {
        // t = 1 of the last segment lands exactly on the control point
        const ControlPoint& p0 = cp[n - 4];
        const ControlPoint& p1 = cp[n - 3];
        const ControlPoint& p2 = cp[n - 2];
        const ControlPoint& p3 = cp[n - 1];
        ControlPoint q;
        double dx, dy;
        eval(p0, p1, p2, p3, 1.0, q, dx, dy);
        double h = prev_heading;
        if (std::hypot(dx, dy) > 1e-12)
            h = std::atan2(dy, dx);
        poly.center_points.push_back(cp[n - 2]);
        poly.headings.push_back(h);
    }

    poly.arc_length.resize(poly.center_points.size(), 0.0);
    for (std::size_t i = 1; i < poly.center_points.size(); ++i)
        poly.arc_length[i] =
            poly.arc_length[i - 1] + dist(poly.center_points[i - 1], poly.center_points[i]);
    poly.cumulative_length = poly.arc_length.back();
    return poly;
}

ValidityResult validate_road(const RoadPolyline& polyline, const RoadSpec& spec) {
    const auto& pts = polyline.center_points;
    if (pts.size() < 2)
        return ValidityResult::bad(InvalidReason::StartEqualsEnd);

    if (dist(pts.front(), pts.back()) < kEndpointEps)
        return ValidityResult::bad(InvalidReason::StartEqualsEnd);

    for (const auto& p : pts) {
        if (!(p.x >= 0.0 && p.x <= spec.bbox_side && p.y >= 0.0 && p.y <= spec.bbox_side))
            return ValidityResult::bad(InvalidReason::OutOfBoundingBox);
    }

    const int m = static_cast<int>(pts.size()) - 1;  // segment count
    for (int i = 0; i < m; ++i) {
        for (int j = i + 2; j < m; ++j) {
            if (segments_intersect(pts[i], pts[i + 1], pts[j], pts[j + 1]))
                return ValidityResult::bad(InvalidReason::SelfIntersection);
        }
    }
    return ValidityResult::ok();
}

int count_turns(const RoadPolyline& polyline, double angle_threshold_deg) {
    const double threshold = deg2rad(angle_threshold_deg);
    const auto& h = polyline.headings;
    int count = 0;
    int run_sign = 0;
    double sweep = 0.0;
    auto close_run = [&] {
        if (run_sign != 0 && std::abs(sweep) > threshold)
            ++count;
        sweep = 0.0;
        run_sign = 0;
    };
    for (std::size_t i = 1; i < h.size(); ++i) {
        const double d = wrap_angle(h[i] - h[i - 1]);
        const int s = (d > 1e-12) - (d < -1e-12);
        if (s == 0) {
            close_run();
            continue;
        }
        if (s != run_sign)
            close_run();
        run_sign = s;
        sweep += d;
    }
    close_run();
    return count;
}

double min_radius(const RoadPolyline& polyline) {
    const auto& pts = polyline.center_points;
    if (pts.size() < 3)
        throw std::invalid_argument("min_radius needs at least 3 points");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 2 < pts.size(); ++i)
        best = std::min(best, circumradius(pts[i], pts[i + 1], pts[i + 2]));
    return best;
}

RoadFeatures road_features(const RoadPolyline& polyline, double angle_threshold_deg) {
    RoadFeatures f;
    f.turn_count = count_turns(polyline, angle_threshold_deg);
    const double r = min_radius(polyline);
    f.curvature = std::isfinite(r) ? 1.0 / r : 0.0;
    return f;
}

RoadSpec generate_random_road(std::uint64_t rng_seed, int n_ctrl, const RoadGenParams& params) {
    if (n_ctrl < 4)
        throw std::invalid_argument("generate_random_road needs n_ctrl >= 4");
    Rng rng(rng_seed);
    for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
        Walk w = draw_walk(rng, n_ctrl, params);
        RoadSpec spec;
        spec.control_points = std::move(w.points);
        spec.samples_per_segment = params.samples_per_segment;
        spec.lane_width = params.lane_width;
        spec.bbox_side = params.bbox_side;
        RoadPolyline poly;
        try {
            poly = interpolate_catmull_rom(spec);
        } catch (const DegenerateSpec&) {
            continue;  // zero-length step, redraw
        }
        if (validate_road(poly, spec).valid)
            return spec;
    }
    throw GenerationExhausted("no valid road after " + std::to_string(params.max_attempts) +
                              " attempts (seed " + std::to_string(rng_seed) + ")");
}

RoadSpec mutate_road(const RoadSpec& spec, std::uint64_t rng_seed, double displacement,
                     int max_attempts) {
    const int n = static_cast<int>(spec.control_points.size());
    if (n < 4)
        throw std::invalid_argument("mutate_road needs a spec with >= 4 control points");
    Rng rng(rng_seed);
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        const int idx = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n - 2)));
        RoadSpec mutant = spec;
        mutant.control_points[idx].x += rng.uniform(-displacement, displacement);
        mutant.control_points[idx].y += rng.uniform(-displacement, displacement);
        RoadPolyline poly;
        try {
            poly = interpolate_catmull_rom(mutant);
        } catch (const DegenerateSpec&) {
            continue;
        }
        if (validate_road(poly, mutant).valid)
            return mutant;
    }
    throw MutationExhausted("no valid mutant after " + std::to_string(max_attempts) +
                            " attempts (seed " + std::to_string(rng_seed) + ")");
}

RoadSpec reverse_spec(const RoadSpec& spec) {
    RoadSpec out = spec;
    std::reverse(out.control_points.begin(), out.control_points.end());
    return out;
}

NearestPoint nearest_on_polyline(const RoadPolyline& polyline, double x, double y) {
    const auto& pts = polyline.center_points;
    if (pts.size() < 2)
        throw std::invalid_argument("nearest_on_polyline needs at least 2 points");
    NearestPoint best;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double dx = pts[i + 1].x - pts[i].x;
        const double dy = pts[i + 1].y - pts[i].y;
        const double len2 = dx * dx + dy * dy;
        double t = 0.0;
        if (len2 > 0.0)
            t = std::clamp(((x - pts[i].x) * dx + (y - pts[i].y) * dy) / len2, 0.0, 1.0);
        const double qx = pts[i].x + t * dx;
        const double qy = pts[i].y + t * dy;
        const double d2 = (x - qx) * (x - qx) + (y - qy) * (y - qy);
        if (d2 < best_d2) {
            best_d2 = d2;
            best.segment = static_cast<int>(i);
            best.t = t;
            best.point = {qx, qy};
            const double c = cross(dx, dy, x - qx, y - qy);
            best.distance = std::sqrt(d2);
            // positive lateral toward the right of the travel direction
            best.signed_lateral = (c < 0.0 ? best.distance : -best.distance);
            best.arc = polyline.arc_length[i] +
                       t * (polyline.arc_length[i + 1] - polyline.arc_length[i]);
            best.heading = std::atan2(dy, dx);
        }
    }
    return best;
}

double curvature_at(const RoadPolyline& polyline, int index) {
    const int n = static_cast<int>(polyline.center_points.size());
    if (n < 3)
        return 0.0;
    const int i = std::clamp(index, 1, n - 2);
    const double r = circumradius(polyline.center_points[i - 1], polyline.center_points[i],
                                  polyline.center_points[i + 1]);
    return std::isfinite(r) ? 1.0 / r : 0.0;
}

}  // namespace crossim
