#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "geosup/error.hpp"
#include "geosup/geometry.hpp"
#include "geosup/image.hpp"

// Depth metrics with median scaling and caps, snippet ATE, relative-motion
// chaining with motion averaging, and similarity alignment of trajectories.

namespace geosup {

/// Absolute camera-to-world poses with strictly increasing frame indices.
struct TrajectoryEntry {
    std::int64_t frame = 0;
    RigidMotion pose; // camera coordinates -> world coordinates
};

struct Trajectory {
    std::vector<TrajectoryEntry> entries;

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }
};

/// N-frame window: relative motions T_{anchor <- anchor+k} for k = 1..N-1,
/// so positions in the anchor frame are the motions' translations.
struct Snippet {
    std::int64_t anchor = 0;
    std::vector<RigidMotion> relative;

    std::size_t window() const { return relative.size() + 1; }
};

struct DepthMetrics {
    double abs_rel = 0.0;
    double sq_rel = 0.0;
    double rmse = 0.0;
    double rmse_log = 0.0;
    double a1 = 0.0; // ratio < 1.25
    double a2 = 0.0; // ratio < 1.25^2
    double a3 = 0.0; // ratio < 1.25^3
};

struct SimilarityTransform {
    double scale = 1.0;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

inline constexpr double kMinPredictedDepth = 1e-3; // meters

namespace detail {

inline double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return (n % 2 == 1) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

} // namespace detail

struct MedianScale {
    double scale = 1.0;
    DepthMap scaled;
};

/// Resolves the monocular scale ambiguity: scale = median(gt over gt>0
/// pixels) / median(pred at those pixels), applied to the whole prediction.
inline MedianScale median_scale(const DepthMap& pred, const DepthMap& gt) {
    std::vector<double> gt_vals, pred_vals;
    for (std::size_t i = 0; i < gt.data.size(); ++i) {
        if (gt.data[i] > 0.0) {
            gt_vals.push_back(gt.data[i]);
            pred_vals.push_back(pred.data[i]);
        }
    }
    if (gt_vals.empty()) {
        throw Error("NoValidGroundTruth", "no pixel with positive ground-truth depth");
    }
    MedianScale out;
    out.scale = detail::median_of(gt_vals) / detail::median_of(pred_vals);
    out.scaled = pred;
    for (auto& d : out.scaled.data) d *= out.scale;
    return out;
}

/// Standard seven depth metrics over pixels with 0 < gt <= cap. Median
/// scaling (when enabled) uses the same valid set; predictions are clamped
/// to [1e-3, cap] after scaling.
inline DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt, double cap,
                                  bool use_median_scaling) {
    if (pred.width != gt.width || pred.height != gt.height) {
        throw Error("DimensionMismatch", "depth metrics need equally sized maps");
    }
    std::vector<double> p_vals, g_vals;
    for (std::size_t i = 0; i < gt.data.size(); ++i) {
        if (gt.data[i] > 0.0 && gt.data[i] <= cap) {
            p_vals.push_back(pred.data[i]);
            g_vals.push_back(gt.data[i]);
        }
    }
    if (g_vals.empty()) {
        throw Error("NoValidGroundTruth", "no pixel with ground truth inside the cap");
    }
    if (use_median_scaling) {
        const double scale = detail::median_of(g_vals) / detail::median_of(p_vals);
        for (auto& p : p_vals) p *= scale;
    }
    for (auto& p : p_vals) p = std::clamp(p, kMinPredictedDepth, cap);

    DepthMetrics m;
    const double n = static_cast<double>(g_vals.size());
    for (std::size_t i = 0; i < g_vals.size(); ++i) {
        const double p = p_vals[i];
        const double g = g_vals[i];
        const double diff = p - g;
        m.abs_rel += std::abs(diff) / g;
        m.sq_rel += diff * diff / g;
        m.rmse += diff * diff;
        const double log_diff = std::log(p) - std::log(g);
        m.rmse_log += log_diff * log_diff;
        const double ratio = std::max(p / g, g / p);
        m.a1 += ratio < 1.25;
        m.a2 += ratio < 1.25 * 1.25;
        m.a3 += ratio < 1.25 * 1.25 * 1.25;
    }
    m.abs_rel /= n;
    m.sq_rel /= n;
    m.rmse = std::sqrt(m.rmse / n);
    m.rmse_log = std::sqrt(m.rmse_log / n);
    m.a1 /= n;
    m.a2 /= n;
    m.a3 /= n;
    return m;
}

namespace detail {

struct CommonPositions {
    std::vector<Eigen::Vector3d> pred;
    std::vector<Eigen::Vector3d> gt;
};

inline CommonPositions common_positions(const Trajectory& pred, const Trajectory& gt) {
    CommonPositions out;
    std::size_t i = 0, j = 0;
    while (i < pred.size() && j < gt.size()) {
        const std::int64_t fp = pred.entries[i].frame;
        const std::int64_t fg = gt.entries[j].frame;
        if (fp == fg) {
            out.pred.push_back(pred.entries[i].pose.translation);
            out.gt.push_back(gt.entries[j].pose.translation);
            ++i;
            ++j;
        } else if (fp < fg) {
            ++i;
        } else {
            ++j;
        }
    }
    return out;
}

inline bool is_collinear(const std::vector<Eigen::Vector3d>& pts) {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    Eigen::MatrixXd centered(3, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        centered.col(static_cast<Eigen::Index>(i)) = pts[i] - mean;
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
    return svd.singularValues()(1) <= 1e-9 * svd.singularValues()(0);
}

} // namespace detail

struct AlignedTrajectory {
    SimilarityTransform transform; // maps ground-truth positions onto the prediction
    Trajectory aligned;            // prediction carried into the ground-truth frame
};

/// Least-squares similarity between the common-frame positions: the returned
/// transform explains the prediction as scale * R * gt + t, and the aligned
/// trajectory is the prediction with the inverse applied. Signals
/// DegenerateTrajectory below 3 common frames or for collinear positions.
inline AlignedTrajectory umeyama_align(const Trajectory& pred, const Trajectory& gt) {
    const detail::CommonPositions common = detail::common_positions(pred, gt);
    const std::size_t n = common.pred.size();
    if (n < 3 || detail::is_collinear(common.pred) || detail::is_collinear(common.gt)) {
        throw Error("DegenerateTrajectory",
                    "similarity alignment needs >= 3 non-collinear common positions");
    }
    Eigen::Vector3d mean_p = Eigen::Vector3d::Zero();
    Eigen::Vector3d mean_g = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        mean_p += common.pred[i];
        mean_g += common.gt[i];
    }
    mean_p /= static_cast<double>(n);
    mean_g /= static_cast<double>(n);

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    double var_g = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d p = common.pred[i] - mean_p;
        const Eigen::Vector3d g = common.gt[i] - mean_g;
        cov += p * g.transpose();
        var_g += g.squaredNorm();
    }
    cov /= static_cast<double>(n);
    var_g /= static_cast<double>(n);

    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d s = Eigen::Vector3d::Ones();
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s(2) = -1.0;

    AlignedTrajectory out;
    out.transform.rotation = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    out.transform.scale = svd.singularValues().dot(s) / var_g;
    out.transform.translation = mean_p - out.transform.scale * out.transform.rotation * mean_g;

    const double inv_scale = 1.0 / out.transform.scale;
    const Eigen::Matrix3d rot_t = out.transform.rotation.transpose();
    out.aligned.entries.reserve(pred.size());
    for (const TrajectoryEntry& e : pred.entries) {
        TrajectoryEntry a = e;
        a.pose.translation = inv_scale * (rot_t * (e.pose.translation - out.transform.translation));
        a.pose.rotation = rot_t * e.pose.rotation;
        out.aligned.entries.push_back(a);
    }
    return out;
}

/// RMSE over snippet positions after the optimal scale + translation
/// alignment (no rotation, the established snippet protocol).
inline double snippet_ate(const Snippet& pred, const Snippet& gt) {
    if (pred.anchor != gt.anchor || pred.relative.size() != gt.relative.size()) {
        throw Error("WindowMismatch", "snippets differ in anchor or window size");
    }
    const std::size_t n = pred.window();
    std::vector<Eigen::Vector3d> p(n, Eigen::Vector3d::Zero());
    std::vector<Eigen::Vector3d> g(n, Eigen::Vector3d::Zero());
    for (std::size_t i = 1; i < n; ++i) {
        p[i] = pred.relative[i - 1].translation;
        g[i] = gt.relative[i - 1].translation;
    }
    Eigen::Vector3d mean_p = Eigen::Vector3d::Zero();
    Eigen::Vector3d mean_g = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        mean_p += p[i];
        mean_g += g[i];
    }
    mean_p /= static_cast<double>(n);
    mean_g /= static_cast<double>(n);

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (p[i] - mean_p).dot(g[i] - mean_g);
        den += (p[i] - mean_p).squaredNorm();
    }
    const double scale = den > 0.0 ? num / den : 1.0;
    const Eigen::Vector3d offset = mean_g - scale * mean_p;

    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sq += (scale * p[i] + offset - g[i]).squaredNorm();
    }
    return std::sqrt(sq / static_cast<double>(n));
}

/// Rebuilds an absolute trajectory from overlapping snippets. Every
/// inter-frame transition is estimated by each snippet covering it; the
/// estimates are fused by arithmetic-mean translation and chordal-mean
/// rotation (sign-aligned quaternion average), then accumulated from the
/// identity at the first frame. Signals CoverageGap when a transition inside
/// the span has no estimate.
inline Trajectory chain_and_average(const std::vector<Snippet>& snippets) {
    if (snippets.empty()) return {};
    std::map<std::int64_t, std::vector<RigidMotion>> transitions;
    std::int64_t first = snippets.front().anchor;
    std::int64_t last = first;
    for (const Snippet& s : snippets) {
        first = std::min(first, s.anchor);
        last = std::max(last, s.anchor + static_cast<std::int64_t>(s.window()) - 1);
        for (std::size_t f = 0; f + 1 < s.window(); ++f) {
            // T_{f <- f+1} = inv(T_{a <- f}) * T_{a <- f+1}.
            const RigidMotion to_f =
                f == 0 ? RigidMotion::identity() : s.relative[f - 1];
            const RigidMotion step = compose(invert(to_f), s.relative[f]);
            transitions[s.anchor + static_cast<std::int64_t>(f)].push_back(step);
        }
    }

    Trajectory out;
    TrajectoryEntry entry;
    entry.frame = first;
    out.entries.push_back(entry);
    for (std::int64_t f = first; f < last; ++f) {
        const auto it = transitions.find(f);
        if (it == transitions.end()) {
            throw Error("CoverageGap", "no snippet covers a frame transition");
        }
        const std::vector<RigidMotion>& estimates = it->second;
        Eigen::Vector3d t = Eigen::Vector3d::Zero();
        Eigen::Vector4d q_sum = Eigen::Vector4d::Zero();
        const Eigen::Quaterniond q0(estimates.front().rotation);
        for (const RigidMotion& m : estimates) {
            t += m.translation;
            Eigen::Quaterniond q(m.rotation);
            if (q.coeffs().dot(q0.coeffs()) < 0.0) q.coeffs() = -q.coeffs();
            q_sum += q.coeffs();
        }
        RigidMotion mean;
        mean.translation = t / static_cast<double>(estimates.size());
        Eigen::Quaterniond q_mean;
        q_mean.coeffs() = q_sum.normalized();
        mean.rotation = q_mean.toRotationMatrix();

        TrajectoryEntry next;
        next.frame = f + 1;
        next.pose = compose(out.entries.back().pose, mean);
        out.entries.push_back(next);
    }
    return out;
}

struct TrajectoryError {
    double median = 0.0; // meters, headline number
    double mean = 0.0;
    double rmse = 0.0;
};

/// Per-frame position errors after similarity alignment.
inline TrajectoryError full_trajectory_error(const Trajectory& pred, const Trajectory& gt) {
    const AlignedTrajectory aligned = umeyama_align(pred, gt);
    const detail::CommonPositions common = detail::common_positions(aligned.aligned, gt);
    std::vector<double> errors;
    errors.reserve(common.pred.size());
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < common.pred.size(); ++i) {
        const double e = (common.pred[i] - common.gt[i]).norm();
        errors.push_back(e);
        sum += e;
        sq += e * e;
    }
    TrajectoryError out;
    out.median = detail::median_of(errors);
    out.mean = sum / static_cast<double>(errors.size());
    out.rmse = std::sqrt(sq / static_cast<double>(errors.size()));
    return out;
}

/// The crop window used by the single-view depth benchmarks descended from
/// the original split: rows [0.40810811, 0.99189189) x cols
/// [0.03594771, 0.96405229) of the image.
inline DepthMap eigen_crop(const DepthMap& depth) {
    const int y0 = static_cast<int>(0.40810811 * depth.height);
    const int y1 = static_cast<int>(0.99189189 * depth.height);
    const int x0 = static_cast<int>(0.03594771 * depth.width);
    const int x1 = static_cast<int>(0.96405229 * depth.width);
    DepthMap out;
    out.width = std::max(0, x1 - x0);
    out.height = std::max(0, y1 - y0);
    out.data.reserve(out.pixel_count());
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) out.data.push_back(depth.at(x, y));
    }
    return out;
}

/// Cuts N-frame windows with the given anchor stride from a trajectory of
/// consecutive frames. Windows whose frames are not consecutive are skipped.
inline std::vector<Snippet> cut_snippets(const Trajectory& traj, int window, int stride = 1) {
    std::vector<Snippet> out;
    if (window < 2 || traj.size() < static_cast<std::size_t>(window)) return out;
    for (std::size_t i = 0; i + window <= traj.size(); i += static_cast<std::size_t>(stride)) {
        bool consecutive = true;
        for (int k = 1; k < window; ++k) {
            consecutive = consecutive &&
                          traj.entries[i + k].frame == traj.entries[i].frame + k;
        }
        if (!consecutive) continue;
        Snippet s;
        s.anchor = traj.entries[i].frame;
        const RigidMotion anchor_inv = invert(traj.entries[i].pose);
        for (int k = 1; k < window; ++k) {
            s.relative.push_back(compose(anchor_inv, traj.entries[i + k].pose));
        }
        out.push_back(s);
    }
    return out;
}

} // namespace geosup
