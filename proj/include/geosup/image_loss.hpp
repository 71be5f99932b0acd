#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <numeric>
#include <vector>

#include "geosup/error.hpp"
#include "geosup/geometry.hpp"
#include "geosup/image.hpp"

// View synthesis and the photometric/smoothness/prior loss terms, plus the
// percentile mask and the combined training objective.

namespace geosup {

/// Loss configuration. The two named settings from the training recipe are
/// pairwise_matching (w_g = 0.001, w_p = 0) and prior_weak_pose
/// (w_g = 0, w_p = 0.1).
struct LossWeights {
    double alpha = 0.85; // SSIM/L1 balance
    double w_s = 0.1;    // smoothness
    double w_g = 0.0;    // geometric (match) loss
    double w_p = 0.0;    // pose prior loss
    double w_r = 1.0;    // rotation part inside the pose prior
    double w_t = 1.0;    // translation part inside the pose prior
    double p_m = 0.99;   // percentile kept by the loss mask

    static LossWeights pairwise_matching() {
        LossWeights w;
        w.w_g = 0.001;
        return w;
    }
    static LossWeights prior_weak_pose() {
        LossWeights w;
        w.w_p = 0.1;
        return w;
    }
};

/// Synthesized view plus its validity mask: 1 where all bilinear neighbors
/// were inside the source image and the point projected in front of the
/// camera. Synthesized intensity is 0 wherever validity is 0.
struct WarpResult {
    ImageBuffer synthesized;
    BinaryMask validity;
};

struct SampleResult {
    std::array<double, 3> value{0.0, 0.0, 0.0};
    bool in_bounds = false;
};

/// Bilinear interpolation at (x, y); all channels at once. A sample is in
/// bounds iff x in [0, W-1] and y in [0, H-1], so integer coordinates on the
/// last row/column are exact reads.
inline SampleResult bilinear_sample(const ImageBuffer& src, double x, double y) {
    SampleResult out;
    if (!(x >= 0.0 && y >= 0.0 && x <= src.width - 1.0 && y <= src.height - 1.0)) {
        return out;
    }
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, src.width - 1);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    for (int c = 0; c < src.channels; ++c) {
        out.value[c] = (1.0 - fx) * (1.0 - fy) * src.at(x0, y0, c) +
                       fx * (1.0 - fy) * src.at(x1, y0, c) +
                       (1.0 - fx) * fy * src.at(x0, y1, c) +
                       fx * fy * src.at(x1, y1, c);
    }
    out.in_bounds = true;
    return out;
}

/// Synthesizes the target view by sampling `src` at the reprojection of each
/// target pixel through `motion` (X_src = R * X_tgt + t) at the given depth.
inline WarpResult inverse_warp(const ImageBuffer& src, const DepthMap& target_depth,
                               const RigidMotion& motion, const CameraIntrinsics& k_src,
                               const CameraIntrinsics& k_tgt) {
    if (src.empty() || target_depth.empty()) {
        throw Error("DimensionMismatch", "inverse_warp needs a nonempty source image and depth map");
    }
    WarpResult out;
    out.synthesized = ImageBuffer::zeros(target_depth.width, target_depth.height, src.channels);
    out.validity = BinaryMask{target_depth.width, target_depth.height,
                              std::vector<std::uint8_t>(target_depth.pixel_count(), 0)};
    const Eigen::Matrix3d k_tgt_inv = k_tgt.inverse_matrix();
    const Eigen::Matrix3d k_src_mat = k_src.matrix();
    for (int y = 0; y < target_depth.height; ++y) {
        for (int x = 0; x < target_depth.width; ++x) {
            const Eigen::Vector3d point_tgt =
                target_depth.at(x, y) * (k_tgt_inv * Eigen::Vector3d(x, y, 1.0));
            const Eigen::Vector3d point_src = motion.rotation * point_tgt + motion.translation;
            if (point_src.z() <= kBehindCameraEps) continue;
            const Eigen::Vector3d h = k_src_mat * point_src;
            const SampleResult s = bilinear_sample(src, h.x() / h.z(), h.y() / h.z());
            if (!s.in_bounds) continue;
            out.validity.at(x, y) = 1;
            for (int c = 0; c < src.channels; ++c) out.synthesized.at(x, y, c) = s.value[c];
        }
    }
    return out;
}

namespace detail {

// SSIM over 3x3 uniform windows with C1 = 0.01^2, C2 = 0.03^2 on the [0, 1]
// range. Windows are clipped at the image border and, when a mask is given,
// restricted to masked-in pixels; masked-out centers get 0.
inline ScalarMap ssim_map_impl(const ImageBuffer& a, const ImageBuffer& b,
                               const BinaryMask* mask) {
    constexpr double c1 = 1e-4;
    constexpr double c2 = 9e-4;
    ScalarMap out = ScalarMap::zeros(a.width, a.height);
    for (int y = 0; y < a.height; ++y) {
        for (int x = 0; x < a.width; ++x) {
            if (mask != nullptr && mask->at(x, y) == 0) continue;
            double ssim_sum = 0.0;
            for (int c = 0; c < a.channels; ++c) {
                double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
                int n = 0;
                for (int dy = -1; dy <= 1; ++dy) {
                    const int yy = y + dy;
                    if (yy < 0 || yy >= a.height) continue;
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int xx = x + dx;
                        if (xx < 0 || xx >= a.width) continue;
                        if (mask != nullptr && mask->at(xx, yy) == 0) continue;
                        const double va = a.at(xx, yy, c);
                        const double vb = b.at(xx, yy, c);
                        sa += va;
                        sb += vb;
                        saa += va * va;
                        sbb += vb * vb;
                        sab += va * vb;
                        ++n;
                    }
                }
                const double mu_a = sa / n;
                const double mu_b = sb / n;
                const double var_a = saa / n - mu_a * mu_a;
                const double var_b = sbb / n - mu_b * mu_b;
                const double cov = sab / n - mu_a * mu_b;
                ssim_sum += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                            ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            }
            out.at(x, y) = ssim_sum / a.channels;
        }
    }
    return out;
}

} // namespace detail

/// Per-pixel SSIM of two equally sized images, channel-averaged.
inline ScalarMap ssim_map(const ImageBuffer& a, const ImageBuffer& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
        throw Error("DimensionMismatch", "ssim_map needs equally shaped images");
    }
    return detail::ssim_map_impl(a, b, nullptr);
}

struct ReconstructionLoss {
    ScalarMap map;      // 0 at invalid pixels
    double mean = 0.0;  // over valid pixels only
};

/// Per-pixel (1-alpha)*L1 + alpha*(1-SSIM)/2 between the target and a
/// synthesized view. Invalid pixels are zero in the map and excluded from
/// the mean; SSIM windows ignore invalid pixels so border garbage cannot
/// leak into valid neighbors.
inline ReconstructionLoss reconstruction_loss(const ImageBuffer& target, const WarpResult& synth,
                                              double alpha) {
    const ImageBuffer& s = synth.synthesized;
    if (target.width != s.width || target.height != s.height || target.channels != s.channels) {
        throw Error("DimensionMismatch", "reconstruction_loss needs matching target/synth shapes");
    }
    const std::size_t valid_count = synth.validity.count();
    if (valid_count == 0) {
        throw Error("NoValidPixels", "warp produced no valid pixel");
    }
    const bool full = valid_count == synth.validity.data.size();
    const ScalarMap ssim =
        detail::ssim_map_impl(target, s, full ? nullptr : &synth.validity);
    ReconstructionLoss out;
    out.map = ScalarMap::zeros(target.width, target.height);
    double sum = 0.0;
    for (int y = 0; y < target.height; ++y) {
        for (int x = 0; x < target.width; ++x) {
            if (synth.validity.at(x, y) == 0) continue;
            double l1 = 0.0;
            for (int c = 0; c < target.channels; ++c) {
                l1 += std::abs(target.at(x, y, c) - s.at(x, y, c));
            }
            l1 /= target.channels;
            const double value = (1.0 - alpha) * l1 + alpha * (1.0 - ssim.at(x, y)) / 2.0;
            out.map.at(x, y) = value;
            sum += value;
        }
    }
    out.mean = sum / static_cast<double>(valid_count);
    return out;
}

/// Edge-aware smoothness: mean over pixels of |dD| * exp(-|dI|) with forward
/// differences in x and y (zero on the last column/row) and the image
/// gradient magnitude averaged over channels.
inline double smoothness_loss(const DepthMap& depth, const ImageBuffer& image) {
    if (depth.width != image.width || depth.height != image.height) {
        throw Error("DimensionMismatch", "smoothness_loss needs matching depth/image shapes");
    }
    double sum = 0.0;
    for (int y = 0; y < depth.height; ++y) {
        for (int x = 0; x < depth.width; ++x) {
            if (x + 1 < depth.width) {
                const double dd = std::abs(depth.at(x + 1, y) - depth.at(x, y));
                double di = 0.0;
                for (int c = 0; c < image.channels; ++c) {
                    di += std::abs(image.at(x + 1, y, c) - image.at(x, y, c));
                }
                sum += dd * std::exp(-di / image.channels);
            }
            if (y + 1 < depth.height) {
                const double dd = std::abs(depth.at(x, y + 1) - depth.at(x, y));
                double di = 0.0;
                for (int c = 0; c < image.channels; ++c) {
                    di += std::abs(image.at(x, y + 1, c) - image.at(x, y, c));
                }
                sum += dd * std::exp(-di / image.channels);
            }
        }
    }
    return sum / static_cast<double>(depth.pixel_count());
}

/// Keeps exactly ceil(p_m * N) lowest-loss pixels; ties broken by row-major
/// index (smaller index kept) so the count is exact on constant maps too.
inline BinaryMask percentile_mask(const ScalarMap& loss_map, double p_m) {
    assert(p_m > 0.0 && p_m <= 1.0 && !loss_map.data.empty());
    const std::size_t n = loss_map.data.size();
    const std::size_t keep =
        static_cast<std::size_t>(std::ceil(p_m * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return loss_map.data[a] < loss_map.data[b];
    });
    BinaryMask mask{loss_map.width, loss_map.height, std::vector<std::uint8_t>(n, 0)};
    for (std::size_t i = 0; i < keep && i < n; ++i) mask.data[order[i]] = 1;
    return mask;
}

/// w_r * |r_est - r_weak|_2 + w_t * |t_est - t_weak|_2. Both translations
/// must be unit length (the prior compares directions only).
inline double pose_prior_loss(const EulerPose& est, const EulerPose& weak, double w_r,
                              double w_t) {
    if (std::abs(est.translation.norm() - 1.0) > 1e-9 ||
        std::abs(weak.translation.norm() - 1.0) > 1e-9) {
        throw Error("UnnormalizedTranslation", "pose prior expects unit-norm translations");
    }
    return w_r * (est.angles - weak.angles).norm() +
           w_t * (est.translation - weak.translation).norm();
}

struct TotalLoss {
    double total = 0.0;
    // Per-term values before weighting. Terms whose weight is zero are not
    // evaluated and report 0.
    double photometric = 0.0; // masked, averaged over sources
    double smoothness = 0.0;
    double geometric = 0.0;   // summed over sources
    double pose_prior = 0.0;  // summed over sources
};

/// The combined objective: masked photometric mean over sources plus
/// weighted smoothness, geometric and pose-prior terms. One motion per
/// source; match sets and weak poses are optional but required (and sized
/// like sources) when their weight is active.
inline TotalLoss total_loss(const ImageBuffer& target, const std::vector<ImageBuffer>& sources,
                            const DepthMap& depth, const std::vector<RigidMotion>& motions,
                            const std::vector<MatchSet>& matches,
                            const std::vector<EulerPose>& weak_poses,
                            const CameraIntrinsics& k, const LossWeights& w) {
    if (sources.empty() || motions.size() != sources.size()) {
        throw Error("ConfigError", "total_loss needs one motion per source frame");
    }
    if (w.w_g > 0.0 && matches.size() != sources.size()) {
        throw Error("ConfigError", "w_g > 0 requires one match set per source frame");
    }
    if (w.w_p > 0.0 && weak_poses.size() != sources.size()) {
        throw Error("ConfigError", "w_p > 0 requires one weak pose per source frame");
    }

    TotalLoss out;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const WarpResult warp = inverse_warp(sources[i], depth, motions[i], k, k);
        const ReconstructionLoss rec = reconstruction_loss(target, warp, w.alpha);
        const BinaryMask mask = percentile_mask(rec.map, w.p_m);
        double sum = 0.0;
        std::size_t kept = 0;
        for (std::size_t p = 0; p < mask.data.size(); ++p) {
            if (mask.data[p] != 0 && warp.validity.data[p] != 0) {
                sum += rec.map.data[p];
                ++kept;
            }
        }
        if (kept == 0) {
            throw Error("NoValidPixels", "percentile mask left no valid pixel");
        }
        out.photometric += sum / static_cast<double>(kept);

        if (w.w_g > 0.0) {
            const FundamentalMatrix f = fundamental_from_pose(k, k, motions[i]);
            out.geometric += geometric_loss(f, matches[i]).sum;
        }
        if (w.w_p > 0.0) {
            EulerPose est = motion_to_euler(motions[i]);
            const double norm = est.translation.norm();
            if (norm > 0.0) est.translation /= norm;
            out.pose_prior += pose_prior_loss(est, weak_poses[i], w.w_r, w.w_t);
        }
    }
    out.photometric /= static_cast<double>(sources.size());
    out.smoothness = smoothness_loss(depth, target);
    out.total = out.photometric + w.w_s * out.smoothness + w.w_g * out.geometric +
                w.w_p * out.pose_prior;
    return out;
}

} // namespace geosup
