#include <catch2/catch_amalgamated.hpp>

#include "geosup/geometry.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace geosup;
using test::homogeneous;
using test::random_motion;

namespace {

// Noiseless correspondences for a pair with motion X1 = R*X2 + t: random 3D
// points in frame 2 are projected into both images. Independent of the
// fundamental-matrix code path it is used to check.
MatchSet synth_matches(const CameraIntrinsics& k1, const CameraIntrinsics& k2,
                       const RigidMotion& motion, int n, Rng& rng) {
    MatchSet set;
    set.width1 = set.width2 = 1000;
    set.height1 = set.height2 = 1000;
    while (static_cast<int>(set.matches.size()) < n) {
        const Eigen::Vector3d x2{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                                 rng.uniform(4.0, 10.0)};
        const Eigen::Vector3d x1 = motion.rotation * x2 + motion.translation;
        if (x1.z() < 0.5) continue;
        const Eigen::Vector3d hp = k1.matrix() * x1;
        const Eigen::Vector3d hq = k2.matrix() * x2;
        set.matches.push_back({{hp.x() / hp.z(), hp.y() / hp.z()},
                               {hq.x() / hq.z(), hq.y() / hq.z()}});
    }
    return set;
}

CameraIntrinsics kitti_like_k() { return {718.0, 718.0, 607.0, 185.0, 0.0}; }

} // namespace

TEST_CASE("euler conversion: zero angles give identity", "[geometry]") {
    const RigidMotion m = euler_to_motion({});
    CHECK((m.rotation - Eigen::Matrix3d::Identity()).norm() == 0.0);
    CHECK(m.translation.norm() == 0.0);
}

TEST_CASE("euler conversion: quarter turn about z maps x-axis to y-axis", "[geometry]") {
    EulerPose pose;
    pose.angles = {0.0, 0.0, std::numbers::pi / 2.0};
    const RigidMotion m = euler_to_motion(pose);
    const Eigen::Vector3d y = m.rotation * Eigen::Vector3d::UnitX();
    CHECK((y - Eigen::Vector3d::UnitY()).norm() < 1e-15);
}

TEST_CASE("euler conversion: round trip within 1e-10 away from gimbal lock", "[geometry]") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        EulerPose pose;
        for (int i = 0; i < 3; ++i) pose.angles[i] = rng.uniform(-1.0, 1.0);
        const EulerPose back = motion_to_euler(euler_to_motion(pose));
        CHECK((back.angles - pose.angles).norm() < 1e-10);
    }
}

TEST_CASE("euler conversion: gimbal lock signaled near +-pi/2 pitch", "[geometry]") {
    EulerPose pose;
    pose.angles = {0.3, std::numbers::pi / 2.0, -0.2};
    const RigidMotion m = euler_to_motion(pose);
    CHECK_THROWS_MATCHES(motion_to_euler(m), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.name() == "GimbalLock"; }));
}

TEST_CASE("compose: identity and inverse laws", "[geometry]") {
    Rng rng(21);
    const RigidMotion p = random_motion(rng);
    const RigidMotion id = RigidMotion::identity();

    const RigidMotion left = compose(id, p);
    CHECK((left.rotation - p.rotation).norm() == 0.0);
    CHECK((left.translation - p.translation).norm() == 0.0);

    const RigidMotion cancel = compose(p, invert(p));
    CHECK((cancel.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    CHECK(cancel.translation.norm() < 1e-12);
}

TEST_CASE("compose: matches 4x4 homogeneous matrix product", "[geometry]") {
    Rng rng(22);
    for (int trial = 0; trial < 50; ++trial) {
        const RigidMotion a = random_motion(rng);
        const RigidMotion b = random_motion(rng);
        const Eigen::Matrix4d expect = homogeneous(a) * homogeneous(b);
        const Eigen::Matrix4d got = homogeneous(compose(a, b));
        CHECK((expect - got).norm() < 1e-13);
    }
}

TEST_CASE("compose: associativity within 1e-10", "[geometry]") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const RigidMotion a = random_motion(rng);
        const RigidMotion b = random_motion(rng);
        const RigidMotion c = random_motion(rng);
        const RigidMotion lhs = compose(a, compose(b, c));
        const RigidMotion rhs = compose(compose(a, b), c);
        CHECK((lhs.rotation - rhs.rotation).norm() < 1e-10);
        CHECK((lhs.translation - rhs.translation).norm() < 1e-10);
    }
}

TEST_CASE("invert: identity, pure translation, composition oracle", "[geometry]") {
    const RigidMotion id_inv = invert(RigidMotion::identity());
    CHECK((id_inv.rotation - Eigen::Matrix3d::Identity()).norm() == 0.0);
    CHECK(id_inv.translation.norm() == 0.0);

    RigidMotion shift;
    shift.translation = {1.0, -2.0, 3.0};
    const RigidMotion shift_inv = invert(shift);
    CHECK((shift_inv.rotation - Eigen::Matrix3d::Identity()).norm() == 0.0);
    CHECK((shift_inv.translation + shift.translation).norm() == 0.0);

    Rng rng(24);
    const RigidMotion p = random_motion(rng);
    const RigidMotion cancel = compose(p, invert(p));
    CHECK((cancel.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    CHECK(cancel.translation.norm() < 1e-12);
}

TEST_CASE("relative_from_absolute: self, identity and compose oracle", "[geometry]") {
    Rng rng(25);
    const RigidMotion p1 = random_motion(rng);
    const RigidMotion p2 = random_motion(rng);

    const RigidMotion self = relative_from_absolute(p1, p1);
    CHECK((self.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-14);
    CHECK(self.translation.norm() < 1e-14);

    const RigidMotion versus_id = relative_from_absolute(p1, RigidMotion::identity());
    CHECK((versus_id.rotation - p1.rotation).norm() == 0.0);
    CHECK((versus_id.translation - p1.translation).norm() == 0.0);

    const RigidMotion expect = compose(p1, invert(p2));
    const RigidMotion got = relative_from_absolute(p1, p2);
    CHECK((got.rotation - expect.rotation).norm() == 0.0);
    CHECK((got.translation - expect.translation).norm() == 0.0);
}

TEST_CASE("project_pixel: identity motion with equal intrinsics is the identity map",
          "[geometry]") {
    const CameraIntrinsics k = kitti_like_k();
    Rng rng(26);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Vector3d p2{rng.uniform(0.0, 1240.0), rng.uniform(0.0, 370.0), 1.0};
        const double depth = rng.uniform(0.1, 80.0);
        const PixelProjection proj = project_pixel(p2, depth, k, k, RigidMotion::identity());
        CHECK((proj.pixel - p2.head<2>()).norm() < 1e-9);
        CHECK(proj.source_depth == Catch::Approx(depth));
    }
}

TEST_CASE("project_pixel: hand-computed translation example", "[geometry]") {
    // Identity intrinsics, p2 = (1,1,1), depth 2, t = (1,0,0):
    // point2 = (2,2,2), point1 = (3,2,2) -> pixel (1.5, 1.0), z = 2.
    const CameraIntrinsics k{1.0, 1.0, 0.0, 0.0, 0.0};
    RigidMotion motion;
    motion.translation = {1.0, 0.0, 0.0};
    const PixelProjection proj = project_pixel({1.0, 1.0, 1.0}, 2.0, k, k, motion);
    CHECK(proj.pixel.x() == Catch::Approx(1.5).margin(1e-15));
    CHECK(proj.pixel.y() == Catch::Approx(1.0).margin(1e-15));
    CHECK(proj.source_depth == Catch::Approx(2.0).margin(1e-15));
}

TEST_CASE("project_pixel: behind-camera degenerate depth", "[geometry]") {
    const CameraIntrinsics k{1.0, 1.0, 0.0, 0.0, 0.0};
    RigidMotion motion;
    motion.translation = {0.0, 0.0, -2.0};
    CHECK_THROWS_MATCHES(project_pixel({1.0, 1.0, 1.0}, 2.0, k, k, motion), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.name() == "BehindCamera"; }));
}

TEST_CASE("fundamental_from_pose: pure translation gives cross-product matrix", "[geometry]") {
    const CameraIntrinsics k{1.0, 1.0, 0.0, 0.0, 0.0};
    RigidMotion motion;
    motion.translation = {1.0, 0.0, 0.0};
    const FundamentalMatrix f = fundamental_from_pose(k, k, motion);
    const Eigen::Matrix3d expect = skew_symmetric(motion.translation) / std::sqrt(2.0);
    const double diff = std::min((f.m - expect).norm(), (f.m + expect).norm());
    CHECK(diff < 1e-15);
    CHECK(std::abs(f.m.norm() - 1.0) < 1e-15);
}

TEST_CASE("fundamental_from_pose: zero translation is degenerate", "[geometry]") {
    const CameraIntrinsics k{1.0, 1.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_MATCHES(fundamental_from_pose(k, k, RigidMotion::identity()), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.name() == "DegenerateTranslation"; }));
}

TEST_CASE("fundamental_from_pose: epipolar residuals vanish on generated matches",
          "[geometry]") {
    Rng rng(27);
    for (int trial = 0; trial < 20; ++trial) {
        const CameraIntrinsics k1{rng.uniform(400.0, 800.0), rng.uniform(400.0, 800.0),
                                  rng.uniform(300.0, 400.0), rng.uniform(150.0, 250.0), 0.0};
        const CameraIntrinsics k2{rng.uniform(400.0, 800.0), rng.uniform(400.0, 800.0),
                                  rng.uniform(300.0, 400.0), rng.uniform(150.0, 250.0), 0.0};
        const RigidMotion motion = random_motion(rng, 0.3, 0.5);
        if (motion.translation.norm() < 0.05) continue;
        const FundamentalMatrix f = fundamental_from_pose(k1, k2, motion);
        const MatchSet matches = synth_matches(k1, k2, motion, 50, rng);
        for (const Match& m : matches.matches) {
            const Eigen::Vector3d p{m.p.x(), m.p.y(), 1.0};
            const Eigen::Vector3d q{m.q.x(), m.q.y(), 1.0};
            CHECK(std::abs(q.dot(f.m * p)) < 1e-10);
        }
    }
}

TEST_CASE("fundamental matrix rank is 2", "[geometry]") {
    Rng rng(28);
    const CameraIntrinsics k = kitti_like_k();
    const RigidMotion motion = random_motion(rng, 0.4, 1.0);
    const FundamentalMatrix f = fundamental_from_pose(k, k, motion);
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(f.m);
    CHECK(svd.singularValues()(2) <= 1e-9 * svd.singularValues()(0));
}

TEST_CASE("epipolar_line: rectified-stereo horizontal lines", "[geometry]") {
    FundamentalMatrix f;
    f.m = skew_symmetric({1.0, 0.0, 0.0});
    Rng rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        const double x = rng.uniform(0.0, 100.0);
        const double y = rng.uniform(0.0, 100.0);
        const EpipolarLine l = epipolar_line(f, {x, y, 1.0});
        CHECK(l.a == 0.0);
        CHECK(l.b == -1.0);
        CHECK(l.c == Catch::Approx(y).margin(1e-15));
    }
}

TEST_CASE("epipolar_line: equals the matrix-vector product", "[geometry]") {
    Rng rng(30);
    const CameraIntrinsics k = kitti_like_k();
    const RigidMotion motion = random_motion(rng, 0.4, 1.0);
    const FundamentalMatrix f = fundamental_from_pose(k, k, motion);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Vector3d p{rng.uniform(0.0, 1240.0), rng.uniform(0.0, 370.0), 1.0};
        const Eigen::Vector3d expect = f.m * p;
        const EpipolarLine l = epipolar_line(f, p);
        CHECK(l.a == expect.x());
        CHECK(l.b == expect.y());
        CHECK(l.c == expect.z());
    }
}

TEST_CASE("epipolar_line: epipole is degenerate", "[geometry]") {
    FundamentalMatrix f;
    f.m = skew_symmetric({0.0, 0.0, 1.0}); // epipole at pixel (0, 0)
    CHECK_THROWS_MATCHES(epipolar_line(f, {0.0, 0.0, 1.0}), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.name() == "DegenerateLine"; }));
}

TEST_CASE("point_line_distance: hand-computed cases", "[geometry]") {
    CHECK(point_line_distance({1.0, 0.0, 0.0}, {3.0, 4.0}) == Catch::Approx(3.0));
    CHECK(point_line_distance({2.0, -1.0, 1.0}, {1.0, 3.0}) == Catch::Approx(0.0).margin(1e-15));
    // |3*4 + 4*3 - 5| / 5 = 19/5
    CHECK(point_line_distance({3.0, 4.0, -5.0}, {4.0, 3.0}) == Catch::Approx(3.8));
}

TEST_CASE("point_line_distance: invariant to line rescaling", "[geometry]") {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const EpipolarLine l{rng.uniform(-5.0, 5.0), rng.uniform(1.0, 5.0), rng.uniform(-9.0, 9.0)};
        const Eigen::Vector2d q{rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
        double s = rng.uniform(-3.0, 3.0);
        if (std::abs(s) < 1e-3) s = 1e-3;
        const EpipolarLine scaled{s * l.a, s * l.b, s * l.c};
        CHECK(point_line_distance(l, q) == Catch::Approx(point_line_distance(scaled, q)).epsilon(1e-12));
    }
}

TEST_CASE("geometric_loss: exact matches score (near) zero", "[geometry]") {
    Rng rng(32);
    const CameraIntrinsics k = kitti_like_k();
    const RigidMotion motion = random_motion(rng, 0.2, 0.5);
    const FundamentalMatrix f = fundamental_from_pose(k, k, motion);
    const MatchSet matches = synth_matches(k, k, motion, 100, rng);
    const GeometricLoss loss = geometric_loss(f, matches);
    CHECK(loss.used == 100);
    CHECK(loss.skipped == 0);
    CHECK(loss.sum <= 1e-8);
}

TEST_CASE("geometric_loss: single match with known 3.8px residual", "[geometry]") {
    FundamentalMatrix f;
    f.m << 3.0, 0.0, 0.0,
           4.0, 0.0, 0.0,
           0.0, 0.0, -5.0;
    MatchSet set;
    set.matches.push_back({{1.0, 0.0}, {4.0, 3.0}});
    const GeometricLoss loss = geometric_loss(f, set);
    CHECK(loss.sum == Catch::Approx(3.8));
}

TEST_CASE("geometric_loss: unit perpendicular offsets add one pixel each", "[geometry]") {
    Rng rng(33);
    const CameraIntrinsics k = kitti_like_k();
    const RigidMotion motion = random_motion(rng, 0.2, 0.5);
    const FundamentalMatrix f = fundamental_from_pose(k, k, motion);
    MatchSet matches = synth_matches(k, k, motion, 40, rng);
    for (Match& m : matches.matches) {
        const EpipolarLine l = epipolar_line(f, {m.p.x(), m.p.y(), 1.0});
        const Eigen::Vector2d normal =
            Eigen::Vector2d(l.a, l.b) / std::hypot(l.a, l.b);
        m.q += normal;
    }
    const GeometricLoss loss = geometric_loss(f, matches);
    CHECK(loss.sum == Catch::Approx(static_cast<double>(matches.size())).epsilon(1e-9));
}

TEST_CASE("geometric_loss: empty match set is an error", "[geometry]") {
    FundamentalMatrix f;
    f.m = skew_symmetric({1.0, 0.0, 0.0});
    CHECK_THROWS_MATCHES(geometric_loss(f, MatchSet{}), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.name() == "EmptyMatchSet"; }));
}

TEST_CASE("geometric_loss: epipole matches are skipped and counted", "[geometry]") {
    FundamentalMatrix f;
    f.m = skew_symmetric({0.0, 0.0, 1.0}); // epipole at pixel (0, 0)
    MatchSet set;
    set.matches.push_back({{0.0, 0.0}, {5.0, 5.0}});  // p at the epipole
    set.matches.push_back({{2.0, 1.0}, {1.0, 2.0}});
    const GeometricLoss loss = geometric_loss(f, set);
    CHECK(loss.skipped == 1);
    CHECK(loss.used == 1);
}
