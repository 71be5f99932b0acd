#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "geosup/error.hpp"
#include "geosup/geometry.hpp"
#include "geosup/matchset.hpp"
#include "geosup/rng.hpp"

// Pairwise match verification: Hartley-normalized eight-point estimation,
// RANSAC over the symmetric epipolar distance, and seeded subsampling.
// Everything here is a pure function of its inputs; RANSAC consumes the Rng
// stream identically on every path, so results are bit-stable.

namespace geosup {

struct RansacParams {
    int iterations = 2000;
    double threshold = 1.0; // pixels, symmetric epipolar distance
    std::uint64_t seed = 0;
    int min_inliers = 15;
};

struct HartleyNormalization {
    std::vector<Eigen::Vector2d> points;
    Eigen::Matrix3d transform; // maps raw homogeneous points to normalized ones
};

/// Similarity transform placing the centroid at the origin with mean point
/// distance sqrt(2). Signals DegeneratePoints when all points coincide.
inline HartleyNormalization hartley_normalize(const std::vector<Eigen::Vector2d>& points) {
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& p : points) centroid += p;
    centroid /= static_cast<double>(points.size());
    double mean_dist = 0.0;
    for (const auto& p : points) mean_dist += (p - centroid).norm();
    mean_dist /= static_cast<double>(points.size());
    if (mean_dist <= 1e-14 * (1.0 + centroid.norm())) {
        throw Error("DegeneratePoints", "all points coincide; normalization undefined");
    }
    const double scale = std::sqrt(2.0) / mean_dist;
    HartleyNormalization out;
    out.transform << scale, 0.0, -scale * centroid.x(),
                     0.0, scale, -scale * centroid.y(),
                     0.0, 0.0, 1.0;
    out.points.reserve(points.size());
    for (const auto& p : points) out.points.push_back(scale * (p - centroid));
    return out;
}

/// Normalized eight-point estimate: least-squares null vector of the design
/// matrix in normalized coordinates, rank-2 projection, denormalization and
/// the canonical scale/sign. Signals InsufficientMatches below 8 matches and
/// DegenerateConfiguration when the design matrix drops below rank 8.
inline FundamentalMatrix eight_point(const MatchSet& matches) {
    const std::size_t n = matches.size();
    if (n < 8) {
        throw Error("InsufficientMatches", "eight-point estimation needs at least 8 matches");
    }
    std::vector<Eigen::Vector2d> ps, qs;
    ps.reserve(n);
    qs.reserve(n);
    for (const Match& m : matches.matches) {
        ps.push_back(m.p);
        qs.push_back(m.q);
    }
    HartleyNormalization np, nq;
    try {
        np = hartley_normalize(ps);
        nq = hartley_normalize(qs);
    } catch (const Error&) {
        throw Error("DegenerateConfiguration", "coincident points cannot constrain F");
    }

    Eigen::MatrixXd a(n, 9);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector2d& p = np.points[i];
        const Eigen::Vector2d& q = nq.points[i];
        a.row(static_cast<Eigen::Index>(i)) << q.x() * p.x(), q.x() * p.y(), q.x(),
            q.y() * p.x(), q.y() * p.y(), q.y(), p.x(), p.y(), 1.0;
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(0) <= 0.0 || sv(7) <= 1e-10 * sv(0)) {
        throw Error("DegenerateConfiguration", "design matrix rank below 8");
    }
    const Eigen::VectorXd f = svd.matrixV().col(8);
    Eigen::Matrix3d fn;
    fn << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);

    Eigen::JacobiSVD<Eigen::Matrix3d> fsvd(fn, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d s = fsvd.singularValues();
    s(2) = 0.0;
    fn = fsvd.matrixU() * s.asDiagonal() * fsvd.matrixV().transpose();

    return canonical_fundamental(nq.transform.transpose() * fn * np.transform);
}

/// Mean of the point-to-line distances in both images; infinite when either
/// epipolar line degenerates.
inline double symmetric_epipolar_distance(const FundamentalMatrix& f, const Match& m) {
    const Eigen::Vector3d p{m.p.x(), m.p.y(), 1.0};
    const Eigen::Vector3d q{m.q.x(), m.q.y(), 1.0};
    const Eigen::Vector3d l2 = f.m * p;            // line in image 2
    const Eigen::Vector3d l1 = f.m.transpose() * q; // line in image 1
    const double n2 = std::hypot(l2.x(), l2.y());
    const double n1 = std::hypot(l1.x(), l1.y());
    if (n1 <= 1e-12 || n2 <= 1e-12) return std::numeric_limits<double>::infinity();
    return 0.5 * (std::abs(q.dot(l2)) / n2 + std::abs(p.dot(l1)) / n1);
}

struct RansacResult {
    FundamentalMatrix f;  // re-estimated on the winning inlier set
    MatchSet inliers;     // in the original match order
    int best_iteration = -1;
    std::size_t inlier_count = 0;
};

/// Classic RANSAC over minimal eight-point samples. The best model is the
/// one with the most matches within `threshold` symmetric distance; equal
/// counts keep the earlier iteration. Fully deterministic given the seed.
inline RansacResult ransac_fundamental(const MatchSet& matches, const RansacParams& params) {
    const std::size_t n = matches.size();
    if (n < 8) {
        throw Error("InsufficientMatches", "RANSAC needs at least 8 matches");
    }
    Rng rng(params.seed);
    std::vector<std::uint8_t> best_mask(n, 0);
    std::ptrdiff_t best_count = -1;
    int best_iteration = -1;

    MatchSet minimal;
    minimal.width1 = matches.width1;
    minimal.height1 = matches.height1;
    minimal.width2 = matches.width2;
    minimal.height2 = matches.height2;

    std::vector<std::uint8_t> mask(n, 0);
    for (int iteration = 0; iteration < params.iterations; ++iteration) {
        const std::vector<std::size_t> idx = rng.sample_indices(n, 8);
        minimal.matches.clear();
        for (const std::size_t i : idx) minimal.matches.push_back(matches.matches[i]);
        FundamentalMatrix f;
        try {
            f = eight_point(minimal);
        } catch (const Error&) {
            continue; // degenerate minimal sample
        }
        std::ptrdiff_t count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool in = symmetric_epipolar_distance(f, matches.matches[i]) <= params.threshold;
            mask[i] = in ? 1 : 0;
            count += in;
        }
        if (count > best_count) {
            best_count = count;
            best_mask = mask;
            best_iteration = iteration;
        }
    }

    if (best_count < params.min_inliers) {
        throw Error("NoConsensus", "best model explains fewer matches than min_inliers");
    }
    RansacResult out;
    out.inliers.width1 = matches.width1;
    out.inliers.height1 = matches.height1;
    out.inliers.width2 = matches.width2;
    out.inliers.height2 = matches.height2;
    for (std::size_t i = 0; i < n; ++i) {
        if (best_mask[i]) out.inliers.matches.push_back(matches.matches[i]);
    }
    out.inlier_count = out.inliers.size();
    out.best_iteration = best_iteration;
    out.f = eight_point(out.inliers);
    return out;
}

/// Draws n distinct matches without replacement (all of them when the set is
/// small enough); output order is the draw order of the seeded generator.
inline MatchSet sample_matches(const MatchSet& inliers, std::size_t n, std::uint64_t seed) {
    MatchSet out;
    out.width1 = inliers.width1;
    out.height1 = inliers.height1;
    out.width2 = inliers.width2;
    out.height2 = inliers.height2;
    if (inliers.size() <= n) {
        out.matches = inliers.matches;
        return out;
    }
    Rng rng(seed);
    for (const std::size_t i : rng.sample_indices(inliers.size(), n)) {
        out.matches.push_back(inliers.matches[i]);
    }
    return out;
}

} // namespace geosup
