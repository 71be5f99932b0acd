#include <catch2/catch_amalgamated.hpp>

#include "geosup/image_loss.hpp"
#include "geosup/synth.hpp"
#include "test_support.hpp"

using namespace geosup;

TEST_CASE("render_view: fronto-parallel plane gives constant depth", "[synth]") {
    SyntheticScene scene;
    scene.width = scene.height = 16;
    TexturedPlane plane;
    plane.normal = Eigen::Vector3d::UnitZ();
    plane.offset = 10.0;
    plane.waves.resize(1); // flat 0.5 texture
    scene.planes.push_back(plane);
    scene.cameras.push_back({{16.0, 16.0, 7.5, 7.5, 0.0}, RigidMotion::identity()});

    const RenderedView view = render_view(scene, 0);
    for (const double d : view.depth.data) CHECK(d == Catch::Approx(10.0).margin(1e-12));
    for (const double v : view.image.data) CHECK(v == 0.5);
}

TEST_CASE("render_view: tilted plane matches the ray-plane closed form", "[synth]") {
    SceneConfig cfg;
    cfg.seed = 5;
    cfg.width = cfg.height = 24;
    const SyntheticScene scene = make_plane_scene(cfg);
    const SceneCamera& cam = scene.cameras[0];
    const TexturedPlane& plane = scene.planes[0];
    const RenderedView view = render_view(scene, 0);

    // Closed form for the identity camera: depth = offset / (n . K^-1 p).
    for (int y = 0; y < cfg.height; ++y) {
        for (int x = 0; x < cfg.width; ++x) {
            const Eigen::Vector3d dir = cam.intrinsics.inverse_matrix() * Eigen::Vector3d(x, y, 1.0);
            const double expect = plane.offset / plane.normal.dot(dir);
            CHECK(view.depth.at(x, y) == Catch::Approx(expect).epsilon(1e-12));
        }
    }

    // Inverse depth is affine along each row: second differences vanish.
    for (int y = 0; y < cfg.height; ++y) {
        for (int x = 0; x + 2 < cfg.width; ++x) {
            const double d2 = 1.0 / view.depth.at(x + 2, y) - 2.0 / view.depth.at(x + 1, y) +
                              1.0 / view.depth.at(x, y);
            CHECK(std::abs(d2) < 1e-12);
        }
    }
}

TEST_CASE("render_view: plane behind the camera raises RayMiss", "[synth]") {
    SyntheticScene scene;
    scene.width = scene.height = 4;
    TexturedPlane plane;
    plane.normal = Eigen::Vector3d::UnitZ();
    plane.offset = -10.0; // behind the camera looking +z
    plane.waves.resize(1);
    scene.planes.push_back(plane);
    scene.cameras.push_back({{4.0, 4.0, 1.5, 1.5, 0.0}, RigidMotion::identity()});
    CHECK_THROWS_MATCHES(render_view(scene, 0), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.name() == "RayMiss"; }));
}

TEST_CASE("render_view: cross-view warp agrees within interpolation error", "[synth]") {
    for (const std::uint64_t seed : {1ull, 2ull, 3ull}) {
        SceneConfig cfg;
        cfg.seed = seed;
        cfg.width = cfg.height = 48;
        const SyntheticScene scene = make_plane_scene(cfg);
        const RenderedView source = render_view(scene, 0);
        const RenderedView target = render_view(scene, 1);
        const WarpResult warp =
            inverse_warp(source.image, target.depth, pair_motion(scene, 0, 1),
                         scene.cameras[0].intrinsics, scene.cameras[1].intrinsics);
        REQUIRE(warp.validity.count() > 0);
        double err = 0.0;
        std::size_t n = 0;
        for (int y = 0; y < cfg.height; ++y) {
            for (int x = 0; x < cfg.width; ++x) {
                if (warp.validity.at(x, y) == 0) continue;
                err += std::abs(warp.synthesized.at(x, y) - target.image.at(x, y));
                ++n;
            }
        }
        CHECK(err / static_cast<double>(n) <= 1e-3);
    }
}

TEST_CASE("render_view: wide view 0 gives fully valid warps", "[synth]") {
    SceneConfig cfg;
    cfg.seed = 9;
    cfg.width = cfg.height = 48;
    cfg.wide_view0 = true;
    const SyntheticScene scene = make_plane_scene(cfg);
    const RenderedView source = render_view(scene, 0);
    const RenderedView target = render_view(scene, 1);
    const WarpResult warp =
        inverse_warp(source.image, target.depth, pair_motion(scene, 0, 1),
                     scene.cameras[0].intrinsics, scene.cameras[1].intrinsics);
    CHECK(warp.validity.count() == target.image.pixel_count());
}

TEST_CASE("make_matches: exact matches satisfy the epipolar constraint", "[synth]") {
    SceneConfig cfg;
    cfg.seed = 13;
    const SyntheticScene scene = make_plane_scene(cfg);
    const MatchSet matches = make_matches(scene, 0, 1, 100, 99);
    REQUIRE(matches.size() == 100);
    const FundamentalMatrix f =
        fundamental_from_pose(scene.cameras[0].intrinsics, scene.cameras[1].intrinsics,
                              pair_motion(scene, 0, 1));
    for (const Match& m : matches.matches) {
        CHECK(std::abs(Eigen::Vector3d(m.q.x(), m.q.y(), 1.0)
                           .dot(f.m * Eigen::Vector3d(m.p.x(), m.p.y(), 1.0))) < 1e-10);
    }
    CHECK(geometric_loss(f, matches).sum <= 1e-8);
}

TEST_CASE("make_matches: same seed reproduces the set, different seed does not", "[synth]") {
    SceneConfig cfg;
    cfg.seed = 14;
    const SyntheticScene scene = make_plane_scene(cfg);
    const MatchSet a = make_matches(scene, 0, 1, 50, 123);
    const MatchSet b = make_matches(scene, 0, 1, 50, 123);
    const MatchSet c = make_matches(scene, 0, 1, 50, 124);
    REQUIRE(a.size() == b.size());
    bool identical = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
        identical = identical && a.matches[i].p == b.matches[i].p &&
                    a.matches[i].q == b.matches[i].q;
    }
    CHECK(identical);
    bool all_same = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
        all_same = all_same && a.matches[i].p == c.matches[i].p;
    }
    CHECK_FALSE(all_same);
}

TEST_CASE("make_matches: disjoint views raise InsufficientOverlap", "[synth]") {
    SceneConfig cfg;
    cfg.seed = 15;
    SyntheticScene scene = make_plane_scene(cfg);
    // Point view 1 sharply away so projections of view-0 pixels miss it.
    scene.cameras[1].world_to_camera.rotation =
        Eigen::AngleAxisd(2.2, Eigen::Vector3d::UnitY()).toRotationMatrix();
    CHECK_THROWS_MATCHES(make_matches(scene, 0, 1, 50, 7), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.name() == "InsufficientOverlap";
                         }));
}

TEST_CASE("perturb_pose: zero perturbation is the identity operation", "[synth]") {
    Rng rng(60);
    const RigidMotion pose = test::random_motion(rng, 0.5, 1.0);
    const RigidMotion same = perturb_pose(pose, 0.0, 0.0, 42);
    CHECK((same.rotation - pose.rotation).norm() == 0.0);
    CHECK((same.translation - pose.translation).norm() == 0.0);
}

TEST_CASE("perturb_pose: exact rotation magnitude and translation chord", "[synth]") {
    Rng rng(61);
    for (int trial = 0; trial < 20; ++trial) {
        const RigidMotion pose = test::random_motion(rng, 0.5, 1.0);
        if (pose.translation.norm() < 0.1) continue;
        const double deg = rng.uniform(0.25, 3.0);
        const double frac = rng.uniform(0.01, 0.2);
        const RigidMotion moved = perturb_pose(pose, deg, frac, 1000 + trial);
        CHECK(test::rotation_angle_deg(pose.rotation, moved.rotation) ==
              Catch::Approx(deg).margin(1e-9));
        CHECK(moved.translation.norm() == Catch::Approx(pose.translation.norm()).epsilon(1e-12));
        const Eigen::Vector3d d0 = pose.translation.normalized();
        const Eigen::Vector3d d1 = moved.translation.normalized();
        CHECK((d1 - d0).norm() == Catch::Approx(frac).epsilon(1e-9));
    }
}

TEST_CASE("perturb_pose: fixed seed reproduces the perturbation", "[synth]") {
    Rng rng(62);
    const RigidMotion pose = test::random_motion(rng, 0.5, 1.0);
    const RigidMotion a = perturb_pose(pose, 1.0, 0.05, 7);
    const RigidMotion b = perturb_pose(pose, 1.0, 0.05, 7);
    CHECK((a.rotation - b.rotation).norm() == 0.0);
    CHECK((a.translation - b.translation).norm() == 0.0);
}

TEST_CASE("losses increase monotonically with the rotation perturbation", "[synth]") {
    int scenes_checked = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SceneConfig cfg;
        cfg.seed = seed;
        cfg.width = cfg.height = 40;
        const SyntheticScene scene = make_plane_scene(cfg);
        const RenderedView source = render_view(scene, 0);
        const RenderedView target = render_view(scene, 1);
        const RigidMotion truth = pair_motion(scene, 0, 1);
        const MatchSet matches = make_matches(scene, 0, 1, 100, seed);

        std::vector<double> photo, geo;
        for (const double deg : {0.0, 0.5, 1.0, 2.0}) {
            // Same seed for every magnitude: the perturbation axis is shared
            // and only the angle grows.
            const RigidMotion pose = perturb_pose(truth, deg, 0.0, 9000 + seed);
            const WarpResult warp =
                inverse_warp(source.image, target.depth, pose, scene.cameras[0].intrinsics,
                             scene.cameras[1].intrinsics);
            photo.push_back(reconstruction_loss(target.image, warp, 0.85).mean);
            geo.push_back(geometric_loss(
                              fundamental_from_pose(scene.cameras[0].intrinsics,
                                                    scene.cameras[1].intrinsics, pose),
                              matches)
                              .sum);
        }
        for (std::size_t i = 1; i < photo.size(); ++i) {
            CHECK(photo[i] > photo[i - 1]);
            CHECK(geo[i] > geo[i - 1]);
        }
        ++scenes_checked;
    }
    CHECK(scenes_checked == 20);
}

TEST_CASE("two-plane scenes: occlusion outliers land in the masked-out tail", "[synth]") {
    SceneConfig cfg;
    cfg.seed = 33;
    cfg.width = cfg.height = 48;
    cfg.planes = 2;
    const SyntheticScene scene = make_plane_scene(cfg);
    const RenderedView source = render_view(scene, 0);
    const RenderedView target = render_view(scene, 1);
    const WarpResult warp =
        inverse_warp(source.image, target.depth, pair_motion(scene, 0, 1),
                     scene.cameras[0].intrinsics, scene.cameras[1].intrinsics);
    const ReconstructionLoss rec = reconstruction_loss(target.image, warp, 0.85);
    const BinaryMask mask = percentile_mask(rec.map, 0.99);

    double kept = 0.0, dropped = 0.0;
    std::size_t kept_n = 0, dropped_n = 0;
    for (std::size_t i = 0; i < rec.map.data.size(); ++i) {
        if (warp.validity.data[i] == 0) continue;
        if (mask.data[i]) {
            kept += rec.map.data[i];
            ++kept_n;
        } else {
            dropped += rec.map.data[i];
            ++dropped_n;
        }
    }
    REQUIRE(dropped_n > 0);
    // The dropped 1% concentrates the occlusion error.
    CHECK(dropped / dropped_n > 10.0 * (kept / kept_n));
}
