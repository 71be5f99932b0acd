#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <vector>

#include "geosup/error.hpp"
#include "geosup/geometry.hpp"
#include "geosup/image.hpp"
#include "geosup/matchset.hpp"
#include "geosup/rng.hpp"

// Analytic planar scenes with band-limited sinusoid textures. Rendering
// evaluates the texture exactly at the ray/plane intersection, so the only
// error in a cross-view warp is bilinear interpolation, which is bounded by
// the texture's pixel-space frequency. That makes loss zero points and
// perturbation behavior testable without any real data.

namespace geosup {

struct PlaneWave {
    double freq_u = 0.0;  // cycles per world unit along u_axis
    double freq_v = 0.0;
    double phase = 0.0;
    double amplitude = 0.0;
};

/// Infinite plane n . X = offset carrying a smooth texture expressed in the
/// in-plane frame (u_axis, v_axis).
struct TexturedPlane {
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
    double offset = 10.0;
    Eigen::Vector3d u_axis = Eigen::Vector3d::UnitX();
    Eigen::Vector3d v_axis = Eigen::Vector3d::UnitY();
    std::vector<std::vector<PlaneWave>> waves; // [channel][wave]
    double bias = 0.5;

    double intensity(const Eigen::Vector3d& world_point, int channel) const {
        const Eigen::Vector3d rel = world_point - offset * normal;
        const double u = u_axis.dot(rel);
        const double v = v_axis.dot(rel);
        double value = bias;
        for (const PlaneWave& w : waves[channel]) {
            value += w.amplitude *
                     std::sin(2.0 * std::numbers::pi * (w.freq_u * u + w.freq_v * v) + w.phase);
        }
        return value;
    }
};

struct SceneCamera {
    CameraIntrinsics intrinsics;
    RigidMotion world_to_camera;
};

struct SyntheticScene {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<TexturedPlane> planes;
    std::vector<SceneCamera> cameras;
};

/// Relative motion carrying view-j camera coordinates into view i; the pair
/// motion used to warp view-i pixels onto the view-j grid and to build the
/// fundamental matrix for matches (p in view i, q in view j).
inline RigidMotion pair_motion(const SyntheticScene& scene, int view_i, int view_j) {
    return relative_from_absolute(scene.cameras[view_i].world_to_camera,
                                  scene.cameras[view_j].world_to_camera);
}

namespace detail {

struct RayHit {
    double depth = 0.0; // camera-frame z of the intersection
    int plane = -1;
};

/// Nearest positive-depth plane intersection of the camera ray through a
/// (possibly fractional) pixel.
inline RayHit cast_ray(const SyntheticScene& scene, const SceneCamera& cam, double x, double y) {
    const Eigen::Vector3d dir_cam = cam.intrinsics.inverse_matrix() * Eigen::Vector3d(x, y, 1.0);
    const Eigen::Matrix3d rot_cw = cam.world_to_camera.rotation.transpose();
    const Eigen::Vector3d origin = -(rot_cw * cam.world_to_camera.translation);
    const Eigen::Vector3d dir_world = rot_cw * dir_cam;
    RayHit hit;
    for (std::size_t i = 0; i < scene.planes.size(); ++i) {
        const TexturedPlane& plane = scene.planes[i];
        const double denom = plane.normal.dot(dir_world);
        if (std::abs(denom) < 1e-12) continue;
        const double depth = (plane.offset - plane.normal.dot(origin)) / denom;
        if (depth <= 1e-9) continue;
        if (hit.plane < 0 || depth < hit.depth) {
            hit = {depth, static_cast<int>(i)};
        }
    }
    return hit;
}

inline Eigen::Vector3d world_point(const SceneCamera& cam, double x, double y, double depth) {
    const Eigen::Vector3d point_cam =
        depth * (cam.intrinsics.inverse_matrix() * Eigen::Vector3d(x, y, 1.0));
    const Eigen::Matrix3d rot_cw = cam.world_to_camera.rotation.transpose();
    return rot_cw * (point_cam - cam.world_to_camera.translation);
}

} // namespace detail

struct RenderedView {
    ImageBuffer image;
    DepthMap depth;
};

/// Renders one camera: per pixel the nearest plane intersection gives the
/// exact depth and the analytic texture value. Signals RayMiss when a pixel
/// ray escapes every plane, which violates the scene invariant.
inline RenderedView render_view(const SyntheticScene& scene, int cam_index) {
    const SceneCamera& cam = scene.cameras[cam_index];
    RenderedView out;
    out.image = ImageBuffer::zeros(scene.width, scene.height, scene.channels);
    out.depth = DepthMap::constant(scene.width, scene.height, 0.0);
    for (int y = 0; y < scene.height; ++y) {
        for (int x = 0; x < scene.width; ++x) {
            const detail::RayHit hit = detail::cast_ray(scene, cam, x, y);
            if (hit.plane < 0) {
                throw Error("RayMiss", "pixel ray misses every scene plane");
            }
            out.depth.at(x, y) = hit.depth;
            const Eigen::Vector3d point = detail::world_point(cam, x, y, hit.depth);
            for (int c = 0; c < scene.channels; ++c) {
                out.image.at(x, y, c) = scene.planes[hit.plane].intensity(point, c);
            }
        }
    }
    return out;
}

/// Exact correspondences: seeded random pixels in view i, projected into
/// view j through the true depth and pose. Every match satisfies the
/// epipolar constraint of the pair's fundamental matrix by construction.
/// Signals InsufficientOverlap when too few projections land in bounds.
inline MatchSet make_matches(const SyntheticScene& scene, int view_i, int view_j, int n,
                             std::uint64_t seed) {
    const SceneCamera& cam_i = scene.cameras[view_i];
    const SceneCamera& cam_j = scene.cameras[view_j];
    const RigidMotion motion_ji = pair_motion(scene, view_j, view_i); // view-i coords -> view j
    Rng rng(seed);
    MatchSet set;
    set.width1 = set.width2 = scene.width;
    set.height1 = set.height2 = scene.height;
    const long max_attempts = std::max(1000L, 200L * n);
    long attempts = 0;
    while (static_cast<int>(set.matches.size()) < n) {
        if (++attempts > max_attempts) {
            throw Error("InsufficientOverlap", "could not place enough matches in both views");
        }
        const double x = rng.uniform(0.0, scene.width - 1.0);
        const double y = rng.uniform(0.0, scene.height - 1.0);
        const detail::RayHit hit = detail::cast_ray(scene, cam_i, x, y);
        if (hit.plane < 0) continue;
        PixelProjection proj;
        if (!try_project_pixel({x, y, 1.0}, hit.depth, cam_i.intrinsics, cam_j.intrinsics,
                               motion_ji, proj)) {
            continue;
        }
        if (proj.pixel.x() < 0.0 || proj.pixel.x() > scene.width - 1.0 ||
            proj.pixel.y() < 0.0 || proj.pixel.y() > scene.height - 1.0) {
            continue;
        }
        set.matches.push_back({{x, y}, proj.pixel});
    }
    return set;
}

/// Composes the pose with a rotation of exactly rot_deg degrees about a
/// seeded random axis and tilts the translation direction by the angle whose
/// chord equals trans_frac, keeping the magnitude.
inline RigidMotion perturb_pose(const RigidMotion& pose, double rot_deg, double trans_frac,
                                std::uint64_t seed) {
    Rng rng(seed);
    auto random_unit = [&rng]() {
        const double z = rng.uniform(-1.0, 1.0);
        const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        return Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z);
    };

    RigidMotion out = pose;
    if (rot_deg > 0.0) {
        const double angle = rot_deg * std::numbers::pi / 180.0;
        out.rotation = pose.rotation * Eigen::AngleAxisd(angle, random_unit()).toRotationMatrix();
    }
    const double norm = pose.translation.norm();
    if (trans_frac > 0.0 && norm > 0.0) {
        const Eigen::Vector3d dir = pose.translation / norm;
        Eigen::Vector3d axis = dir.cross(random_unit());
        while (axis.norm() < 1e-6) axis = dir.cross(random_unit());
        axis.normalize();
        const double tilt = 2.0 * std::asin(std::clamp(trans_frac / 2.0, 0.0, 1.0));
        out.translation = norm * (Eigen::AngleAxisd(tilt, axis) * dir);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Canonical seeded scene family used by the tests and the CLI.

struct SceneConfig {
    int width = 64;
    int height = 64;
    int channels = 1;
    int views = 2;
    int planes = 1;
    std::uint64_t seed = 1;
    double base_depth = 10.0;        // meters to the primary plane
    double max_rotation_deg = 0.6;   // inter-camera rotation
    double max_translation = 0.15;   // meters, per axis
    int waves = 6;
    double max_cycles_per_pixel = 0.025;
    // When set, view 0 gets a wider field of view than the others, so every
    // pixel of a narrow view projects strictly inside view 0 and warps have
    // full validity.
    bool wide_view0 = false;
};

inline SyntheticScene make_plane_scene(const SceneConfig& cfg) {
    Rng rng(cfg.seed);
    auto random_unit = [&rng]() {
        const double z = rng.uniform(-1.0, 1.0);
        const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        return Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z);
    };

    SyntheticScene scene;
    scene.width = cfg.width;
    scene.height = cfg.height;
    scene.channels = cfg.channels;

    const double fx_narrow = 1.0 * cfg.width;
    const double fx_wide = 0.78 * cfg.width;
    const double cx = (cfg.width - 1) / 2.0;
    const double cy = (cfg.height - 1) / 2.0;

    for (int v = 0; v < cfg.views; ++v) {
        SceneCamera cam;
        const double f = (cfg.wide_view0 && v == 0) ? fx_wide : fx_narrow;
        cam.intrinsics = {f, f, cx, cy, 0.0};
        if (v > 0) {
            const double angle =
                rng.uniform(0.3, 1.0) * cfg.max_rotation_deg * std::numbers::pi / 180.0;
            cam.world_to_camera.rotation =
                Eigen::AngleAxisd(angle, random_unit()).toRotationMatrix();
            for (int i = 0; i < 3; ++i) {
                cam.world_to_camera.translation[i] =
                    rng.uniform(0.35, 1.0) * cfg.max_translation * (rng.unit() < 0.5 ? -1.0 : 1.0);
            }
        }
        scene.cameras.push_back(cam);
    }

    // Primary plane: nearly fronto-parallel, tilted a few degrees so depth
    // varies across the image. The z-intercept stays at base_depth.
    auto make_plane = [&](double tilt_deg, double depth_at_axis) {
        TexturedPlane plane;
        const double tilt = tilt_deg * std::numbers::pi / 180.0;
        const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const Eigen::Vector3d axis(std::cos(dir), std::sin(dir), 0.0);
        plane.normal = Eigen::AngleAxisd(tilt, axis) * Eigen::Vector3d::UnitZ();
        plane.offset = plane.normal.dot(Eigen::Vector3d(0.0, 0.0, depth_at_axis));
        // Deterministic in-plane frame.
        plane.u_axis = plane.normal.cross(Eigen::Vector3d::UnitX()).normalized();
        plane.v_axis = plane.normal.cross(plane.u_axis);

        // Frequencies are chosen in pixel units at the plane distance and
        // converted to world units, keeping the texture well below Nyquist.
        const double pixel_footprint = depth_at_axis / fx_narrow;
        plane.waves.resize(cfg.channels);
        for (int c = 0; c < cfg.channels; ++c) {
            double amp_sum = 0.0;
            std::vector<double> raw(cfg.waves);
            for (int k = 0; k < cfg.waves; ++k) {
                raw[k] = rng.uniform(0.5, 1.0);
                amp_sum += raw[k];
            }
            for (int k = 0; k < cfg.waves; ++k) {
                PlaneWave w;
                const double cycles = rng.uniform(0.3, 1.0) * cfg.max_cycles_per_pixel;
                const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
                w.freq_u = cycles * std::cos(theta) / pixel_footprint;
                w.freq_v = cycles * std::sin(theta) / pixel_footprint;
                w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
                w.amplitude = 0.45 * raw[k] / amp_sum;
                plane.waves[c].push_back(w);
            }
        }
        return plane;
    };

    scene.planes.push_back(make_plane(rng.uniform(2.0, 8.0), cfg.base_depth));
    if (cfg.planes > 1) {
        // Occluder: strongly tilted so it crosses in front of the primary
        // plane over part of the image only.
        scene.planes.push_back(make_plane(25.0, cfg.base_depth * 0.9));
    }
    return scene;
}

} // namespace geosup
