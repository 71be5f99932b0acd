#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstddef>
#include <numbers>

#include "geosup/error.hpp"
#include "geosup/matchset.hpp"

// Camera models, pose algebra, reprojection and epipolar quantities.
//
// Conventions used throughout the library:
//  - Pixel origin is the center of the top-left pixel, (0, 0).
//  - A relative motion between an ordered frame pair (1, 2) carries frame-2
//    camera coordinates into frame 1: X1 = R * X2 + t. This is the motion
//    that warps frame-1 pixels onto the frame-2 grid, and the one all
//    pair-wise operations below expect.
//  - Absolute poses passed to relative_from_absolute map world coordinates
//    into the camera frame.

namespace geosup {

inline constexpr double kBehindCameraEps = 1e-6;        // meters along +z
inline constexpr double kDegenerateTranslationEps = 1e-9;

/// Upper-triangular pinhole intrinsics; fx, fy, cx, cy, skew in pixels.
struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    double skew = 0.0;

    Eigen::Matrix3d matrix() const {
        Eigen::Matrix3d k;
        k << fx, skew, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
        return k;
    }

    Eigen::Matrix3d inverse_matrix() const {
        Eigen::Matrix3d ki;
        ki << 1.0 / fx, -skew / (fx * fy), (skew * cy - cx * fy) / (fx * fy),
              0.0, 1.0 / fy, -cy / fy,
              0.0, 0.0, 1.0;
        return ki;
    }
};

/// SE(3) element: rotation plus translation in scene units.
struct RigidMotion {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    static RigidMotion identity() { return {}; }
};

/// Orthonormality and determinant check against the RigidMotion invariants.
inline bool is_valid_rotation(const Eigen::Matrix3d& r, double tol = 1e-9) {
    const double drift = (r.transpose() * r - Eigen::Matrix3d::Identity()).norm();
    return drift <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

/// 6-DoF pose with rotation as intrinsic X-Y-Z Euler angles in radians.
struct EulerPose {
    Eigen::Vector3d angles = Eigen::Vector3d::Zero();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

/// 3x3 rank-2 matrix, stored in the canonical scale: unit Frobenius norm
/// with the largest-magnitude entry positive (row-major order breaks ties).
/// Equality up to the projective scale ambiguity then reduces to
/// min(|F1 - F2|, |F1 + F2|).
struct FundamentalMatrix {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
};

/// Line a*x + b*y + c = 0 in pixel coordinates.
struct EpipolarLine {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

inline Eigen::Matrix3d skew_symmetric(const Eigen::Vector3d& v) {
    Eigen::Matrix3d s;
    s << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return s;
}

/// Applies the canonical scale/sign convention to an arbitrary nonzero F.
inline FundamentalMatrix canonical_fundamental(const Eigen::Matrix3d& f) {
    Eigen::Matrix3d m = f / f.norm();
    double best = 0.0;
    double best_signed = 1.0;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            if (std::abs(m(r, c)) > best) {
                best = std::abs(m(r, c));
                best_signed = m(r, c);
            }
        }
    }
    if (best_signed < 0.0) m = -m;
    return {m};
}

// ---------------------------------------------------------------------------
// Euler angle conversion, intrinsic X-Y-Z: R = Rx(a) * Ry(b) * Rz(c).

inline RigidMotion euler_to_motion(const EulerPose& pose) {
    const double ca = std::cos(pose.angles.x()), sa = std::sin(pose.angles.x());
    const double cb = std::cos(pose.angles.y()), sb = std::sin(pose.angles.y());
    const double cc = std::cos(pose.angles.z()), sc = std::sin(pose.angles.z());
    RigidMotion out;
    out.rotation << cb * cc, -cb * sc, sb,
                    ca * sc + sa * sb * cc, ca * cc - sa * sb * sc, -sa * cb,
                    sa * sc - ca * sb * cc, sa * cc + ca * sb * sc, ca * cb;
    out.translation = pose.translation;
    return out;
}

/// Inverse of euler_to_motion. Signals GimbalLock when the pitch angle is
/// within 1e-6 of +-pi/2, where the decomposition is ambiguous.
inline EulerPose motion_to_euler(const RigidMotion& motion) {
    const Eigen::Matrix3d& r = motion.rotation;
    const double sb = std::clamp(r(0, 2), -1.0, 1.0);
    const double pitch = std::asin(sb);
    if (std::numbers::pi / 2.0 - std::abs(pitch) < 1e-6) {
        throw Error("GimbalLock", "pitch within 1e-6 of +-pi/2; Euler decomposition ambiguous");
    }
    EulerPose pose;
    pose.angles = {std::atan2(-r(1, 2), r(2, 2)), pitch, std::atan2(-r(0, 1), r(0, 0))};
    // atan2 may return exactly -pi; fold onto (-pi, pi].
    for (int i = 0; i < 3; ++i) {
        if (pose.angles[i] <= -std::numbers::pi) pose.angles[i] = std::numbers::pi;
    }
    pose.translation = motion.translation;
    return pose;
}

// ---------------------------------------------------------------------------
// Pose algebra.

/// Applies b first, then a: R = Ra*Rb, t = Ra*tb + ta.
inline RigidMotion compose(const RigidMotion& a, const RigidMotion& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

inline RigidMotion invert(const RigidMotion& p) {
    return {p.rotation.transpose(), -(p.rotation.transpose() * p.translation)};
}

/// Relative motion (R1*R2^T, T1 - R1*R2^T*T2) of absolute world-to-camera
/// poses; carries frame-2 camera coordinates into frame 1. Evaluated as
/// compose(p1, invert(p2)), which is the same formula.
inline RigidMotion relative_from_absolute(const RigidMotion& p1, const RigidMotion& p2) {
    return compose(p1, invert(p2));
}

// ---------------------------------------------------------------------------
// Reprojection.

struct PixelProjection {
    Eigen::Vector2d pixel;   // dehomogenized position in the frame-1 image
    double source_depth;     // z of the transformed point in frame 1
};

/// Back-projects the frame-2 pixel p2 (homogeneous, third component 1) at
/// the given depth, moves it through `motion` and projects into frame 1:
/// K1 * (R * (depth * K2^-1 * p2) + t). Signals BehindCamera when the
/// transformed point has z <= 1e-6.
inline PixelProjection project_pixel(const Eigen::Vector3d& p2, double depth,
                                     const CameraIntrinsics& k2, const CameraIntrinsics& k1,
                                     const RigidMotion& motion) {
    const Eigen::Vector3d point2 = depth * (k2.inverse_matrix() * p2);
    const Eigen::Vector3d point1 = motion.rotation * point2 + motion.translation;
    if (point1.z() <= kBehindCameraEps) {
        throw Error("BehindCamera", "projected point is behind the source camera");
    }
    const Eigen::Vector3d h = k1.matrix() * point1;
    return {{h.x() / h.z(), h.y() / h.z()}, point1.z()};
}

/// Non-throwing variant for per-pixel loops; returns false on BehindCamera.
inline bool try_project_pixel(const Eigen::Vector3d& p2, double depth,
                              const CameraIntrinsics& k2, const CameraIntrinsics& k1,
                              const RigidMotion& motion, PixelProjection& out) {
    const Eigen::Vector3d point2 = depth * (k2.inverse_matrix() * p2);
    const Eigen::Vector3d point1 = motion.rotation * point2 + motion.translation;
    if (point1.z() <= kBehindCameraEps) return false;
    const Eigen::Vector3d h = k1.matrix() * point1;
    out = {{h.x() / h.z(), h.y() / h.z()}, point1.z()};
    return true;
}

// ---------------------------------------------------------------------------
// Epipolar geometry.

/// Fundamental matrix of the ordered pair (1, 2) from the pair's relative
/// motion (X1 = R*X2 + t, as used for warping): F = K2^-T * R^T * [t]x * K1^-1,
/// canonically scaled, so that q^T F p = 0 for any correspondence with p in
/// image 1 and q in image 2. Signals DegenerateTranslation when |t| <= 1e-9
/// (F would vanish).
inline FundamentalMatrix fundamental_from_pose(const CameraIntrinsics& k1,
                                               const CameraIntrinsics& k2,
                                               const RigidMotion& motion) {
    if (motion.translation.norm() <= kDegenerateTranslationEps) {
        throw Error("DegenerateTranslation", "zero-parallax motion has no fundamental matrix");
    }
    const Eigen::Matrix3d f = k2.inverse_matrix().transpose() * motion.rotation.transpose() *
                              skew_symmetric(motion.translation) * k1.inverse_matrix();
    return canonical_fundamental(f);
}

/// l = F * p. Signals DegenerateLine when p is the epipole of F.
inline EpipolarLine epipolar_line(const FundamentalMatrix& f, const Eigen::Vector3d& p) {
    const Eigen::Vector3d l = f.m * p;
    if (std::hypot(l.x(), l.y()) <= 1e-12) {
        throw Error("DegenerateLine", "point is the epipole; epipolar line undefined");
    }
    return {l.x(), l.y(), l.z()};
}

inline double point_line_distance(const EpipolarLine& l, const Eigen::Vector2d& q) {
    return std::abs(l.a * q.x() + l.b * q.y() + l.c) / std::hypot(l.a, l.b);
}

struct GeometricLoss {
    double sum = 0.0;        // pixels, Eq. form: sum of point-to-line distances
    std::size_t used = 0;
    std::size_t skipped = 0; // matches whose p coincides with the epipole

    double mean() const { return used == 0 ? 0.0 : sum / static_cast<double>(used); }
};

/// Sum over matches of the distance from q_i to the epipolar line F * p_i.
/// Matches whose p_i is the epipole are skipped and counted.
inline GeometricLoss geometric_loss(const FundamentalMatrix& f, const MatchSet& matches) {
    if (matches.empty()) {
        throw Error("EmptyMatchSet", "geometric loss needs at least one match");
    }
    GeometricLoss out;
    for (const Match& m : matches.matches) {
        const Eigen::Vector3d l = f.m * Eigen::Vector3d(m.p.x(), m.p.y(), 1.0);
        const double ab = std::hypot(l.x(), l.y());
        if (ab <= 1e-12) {
            ++out.skipped;
            continue;
        }
        out.sum += std::abs(l.x() * m.q.x() + l.y() * m.q.y() + l.z()) / ab;
        ++out.used;
    }
    return out;
}

} // namespace geosup
