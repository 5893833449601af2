#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "avdiff/errors.hpp"
#include "avdiff/geom.hpp"

namespace avdiff {

struct Camera {
    Vec3 position{0.0f, 1.0f, 3.5f};
    Vec3 look_at{0.0f, 1.0f, 0.0f};
    Vec3 up{0.0f, 1.0f, 0.0f};
    float focal = 70.0f;  // pixels
    int width = 64;
    int height = 64;
};

struct Projection {
    float u = 0.0f;
    float v = 0.0f;
    float depth = 0.0f;
};

namespace detail {
struct CameraBasis {
    Vec3 right, up, forward;
};

inline CameraBasis camera_basis(const Camera& cam) {
    const Vec3 offset = cam.look_at - cam.position;
    if (norm(offset) < 1e-9f) throw DegeneracyError("camera position equals look_at");
    const Vec3 forward = normalized(offset);
    const Vec3 right_raw = cross(cam.up, forward);
    if (norm(right_raw) < 1e-6f) {
        throw DegeneracyError("camera up vector is parallel to the view direction");
    }
    const Vec3 right = normalized(right_raw);
    return {right, cross(forward, right), forward};
}
}  // namespace detail

inline constexpr float kNearPlane = 1e-4f;

// Pinhole projection to continuous pixel coordinates. Pixel (i, j) covers
// [j, j+1) x [i, i+1); the principal point is the image center. Image v grows
// downward.
inline Projection project(const Camera& cam, const Vec3& p) {
    const auto basis = detail::camera_basis(cam);
    const Vec3 d = p - cam.position;
    const float z = dot(d, basis.forward);
    if (z <= kNearPlane) throw BehindCameraError("point at or behind the camera near plane");
    const float x = dot(d, basis.right);
    const float y = -dot(d, basis.up);
    return {0.5f * cam.width + cam.focal * x / z, 0.5f * cam.height + cam.focal * y / z, z};
}

enum class TrajectoryKind { Static, Orbit, ZoomIn, ZoomOut };

struct TrajectorySpec {
    TrajectoryKind kind = TrajectoryKind::Static;
    float total_angle_deg = 360.0f;  // orbit
    float dist_start = 3.0f;         // zoom and orbit radius
    float dist_end = 2.0f;           // zoom
};

// Grammar: "static", "static:2.5" (subject distance), "orbit:360",
// "zoom_in:4.0..2.0", "zoom_out:2.0..4.0".
inline TrajectorySpec parse_trajectory_spec(const std::string& text) {
    TrajectorySpec spec;
    const std::size_t colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
    auto parse_range = [&](TrajectoryKind k) {
        spec.kind = k;
        const std::size_t dots = args.find("..");
        if (dots == std::string::npos) {
            throw ConfigError("zoom spec needs start..end distances: " + text);
        }
        try {
            spec.dist_start = std::stof(args.substr(0, dots));
            spec.dist_end = std::stof(args.substr(dots + 2));
        } catch (const std::exception&) {
            throw ConfigError("bad zoom distances: " + text);
        }
        if (spec.dist_start <= 0.0f || spec.dist_end <= 0.0f) {
            throw ConfigError("zoom distances must be positive: " + text);
        }
    };
    if (kind == "static") {
        spec.kind = TrajectoryKind::Static;
        if (!args.empty()) {
            try {
                spec.dist_start = std::stof(args);
            } catch (const std::exception&) {
                throw ConfigError("bad static distance: " + text);
            }
            if (spec.dist_start <= 0.0f) {
                throw ConfigError("static distance must be positive: " + text);
            }
        }
    } else if (kind == "orbit") {
        spec.kind = TrajectoryKind::Orbit;
        if (args.empty()) throw ConfigError("orbit spec needs a total angle: " + text);
        try {
            spec.total_angle_deg = std::stof(args);
        } catch (const std::exception&) {
            throw ConfigError("bad orbit angle: " + text);
        }
    } else if (kind == "zoom_in") {
        parse_range(TrajectoryKind::ZoomIn);
        if (!(spec.dist_start > spec.dist_end)) {
            throw ConfigError("zoom_in distances must decrease: " + text);
        }
    } else if (kind == "zoom_out") {
        parse_range(TrajectoryKind::ZoomOut);
        if (!(spec.dist_start < spec.dist_end)) {
            throw ConfigError("zoom_out distances must increase: " + text);
        }
    } else {
        throw ConfigError("unknown trajectory kind: " + text);
    }
    return spec;
}

// Scripted camera path around a subject. Orbit places frame k at
// total_angle * k / (n-1) on a circle of fixed radius and height; zooms
// interpolate the camera distance geometrically. Every camera looks at the
// subject centroid.
inline std::vector<Camera> camera_trajectory(const TrajectorySpec& spec, const Vec3& subject,
                                             int n_frames, float focal, int width, int height) {
    if (n_frames < 2) throw ConfigError("camera_trajectory needs n_frames >= 2");
    const float height_offset = 0.15f;
    const float orbit_radius = spec.dist_start;
    std::vector<Camera> cams;
    cams.reserve(n_frames);
    for (int k = 0; k < n_frames; ++k) {
        const float t = static_cast<float>(k) / static_cast<float>(n_frames - 1);
        Camera cam;
        cam.focal = focal;
        cam.width = width;
        cam.height = height;
        cam.look_at = subject;
        switch (spec.kind) {
            case TrajectoryKind::Static: {
                cam.position = subject + Vec3{0.0f, height_offset, spec.dist_start};
                break;
            }
            case TrajectoryKind::Orbit: {
                const float ang = spec.total_angle_deg * (3.14159265358979f / 180.0f) * t;
                cam.position = subject + Vec3{orbit_radius * std::sin(ang), height_offset,
                                              orbit_radius * std::cos(ang)};
                break;
            }
            case TrajectoryKind::ZoomIn:
            case TrajectoryKind::ZoomOut: {
                const float d = spec.dist_start *
                                std::pow(spec.dist_end / spec.dist_start, t);
                cam.position = subject + Vec3{0.0f, height_offset, d};
                break;
            }
        }
        cams.push_back(cam);
    }
    return cams;
}

}  // namespace avdiff
