#pragma once

#include <Eigen/Core>

#include <vector>

namespace geosup {

/// One verified correspondence: p in image 1, q in image 2, both in pixel
/// coordinates with the origin at the center of the top-left pixel.
struct Match {
    Eigen::Vector2d p;
    Eigen::Vector2d q;
};

/// Ordered list of correspondences between two frames. Order is part of the
/// value: seeded sampling and RANSAC depend on it deterministically.
struct MatchSet {
    std::vector<Match> matches;
    int width1 = 0;
    int height1 = 0;
    int width2 = 0;
    int height2 = 0;

    std::size_t size() const { return matches.size(); }
    bool empty() const { return matches.empty(); }
};

} // namespace geosup
