#pragma once

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geosup/evaluation.hpp"
#include "geosup/geometry.hpp"
#include "geosup/image_loss.hpp"
#include "geosup/io.hpp"
#include "geosup/matching.hpp"
#include "geosup/refine.hpp"
#include "geosup/synth.hpp"

// Subcommand dispatcher composing the library into the full workflows:
// synth | warp | loss | fmatrix | refine | eval-depth | eval-odom | chain.
// Exit codes: 0 success, 1 domain error (error name on the error stream),
// 2 usage error. All numeric CSV output uses 17 significant digits, so runs
// are byte-reproducible given identical inputs, config and seed.

namespace geosup {

namespace cli_detail {

/// Relative motion carrying frame `from`'s camera coordinates into frame
/// `to`, from camera-to-world trajectory poses: T_{to<-from} = C_to^-1 C_from.
inline RigidMotion relative_motion(const Trajectory& traj, int to, int from) {
    if (to < 0 || from < 0 || to >= static_cast<int>(traj.size()) ||
        from >= static_cast<int>(traj.size())) {
        throw Error("ConfigError", "frame index outside the pose file");
    }
    return compose(invert(traj.entries[to].pose), traj.entries[from].pose);
}

inline const CameraIntrinsics& intrinsics_at(const std::vector<CameraIntrinsics>& ks, int index) {
    if (index < 0 || index >= static_cast<int>(ks.size())) {
        throw Error("ConfigError", "view index outside the intrinsics file");
    }
    return ks[static_cast<std::size_t>(index)];
}

/// Writes CSV text to --out when given, otherwise to the console stream.
inline void emit_text(const std::string& text, const std::string& out_path, std::ostream& out) {
    if (out_path.empty()) {
        out << text;
    } else {
        auto file = detail::open_output(out_path);
        file << text;
    }
}

inline std::string csv_row(const std::vector<double>& values) {
    std::string row;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) row += ',';
        row += detail::format_real(values[i]);
    }
    row += '\n';
    return row;
}

/// Top-down (x, z) overlay of the ground truth and the aligned prediction.
inline void write_svg_overlay(const std::string& path, const Trajectory& gt,
                              const Trajectory& aligned_pred) {
    constexpr double kWidth = 640.0;
    constexpr double kHeight = 480.0;
    constexpr double kMargin = 24.0;
    double min_x = 1e300, max_x = -1e300, min_z = 1e300, max_z = -1e300;
    for (const Trajectory* traj : {&gt, &aligned_pred}) {
        for (const TrajectoryEntry& e : traj->entries) {
            min_x = std::min(min_x, e.pose.translation.x());
            max_x = std::max(max_x, e.pose.translation.x());
            min_z = std::min(min_z, e.pose.translation.z());
            max_z = std::max(max_z, e.pose.translation.z());
        }
    }
    const double span_x = std::max(max_x - min_x, 1e-9);
    const double span_z = std::max(max_z - min_z, 1e-9);
    const double scale =
        std::min((kWidth - 2.0 * kMargin) / span_x, (kHeight - 2.0 * kMargin) / span_z);
    const auto map_point = [&](const Eigen::Vector3d& p) {
        const double sx = kMargin + (p.x() - min_x) * scale;
        const double sy = kHeight - kMargin - (p.z() - min_z) * scale;
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%.3f,%.3f", sx, sy);
        return std::string(buf);
    };
    const auto polyline = [&](const Trajectory& traj, const char* color) {
        std::string points;
        for (const TrajectoryEntry& e : traj.entries) {
            if (!points.empty()) points += ' ';
            points += map_point(e.pose.translation);
        }
        return "  <polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    };

    auto out = detail::open_output(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 480\">\n"
        << "  <rect width=\"640\" height=\"480\" fill=\"white\"/>\n"
        << polyline(gt, "#404040") << polyline(aligned_pred, "#d62728")
        << "  <text x=\"32\" y=\"24\" font-size=\"13\" fill=\"#404040\">ground truth</text>\n"
        << "  <text x=\"32\" y=\"42\" font-size=\"13\" fill=\"#d62728\">prediction (aligned)"
        << "</text>\n"
        << "</svg>\n";
}

struct CommonOptions {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;

    RunConfig resolve() const {
        RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
        if (seed_given) cfg.seed = seed;
        return cfg;
    }
};

inline void add_common(CLI::App* sub, CommonOptions& common) {
    sub->add_option("--config", common.config_path, "run configuration file (key = value lines)");
    sub->add_option("--seed", common.seed, "64-bit seed overriding the config")
        ->each([&common](const std::string&) { common.seed_given = true; });
}

// ---------------------------------------------------------------------------

struct SynthOptions {
    CommonOptions common;
    std::string out_dir;
    bool out_dir_given = false;
    int width = 64;
    int height = 64;
    int views = 2;
    int planes = 1;
    int channels = 1;
    int matches = 100;
    bool wide_view0 = false;
};

inline void run_synth(const SynthOptions& opt) {
    const RunConfig cfg = opt.common.resolve();
    const std::string dir = opt.out_dir_given ? opt.out_dir : cfg.out_dir;
    std::filesystem::create_directories(dir);

    SceneConfig sc;
    sc.width = opt.width;
    sc.height = opt.height;
    sc.views = opt.views;
    sc.planes = opt.planes;
    sc.channels = opt.channels;
    sc.seed = cfg.seed;
    sc.wide_view0 = opt.wide_view0;
    const SyntheticScene scene = make_plane_scene(sc);

    Trajectory traj;
    std::vector<CameraIntrinsics> ks;
    const std::string ext = opt.channels == 3 ? ".ppm" : ".pgm";
    for (int v = 0; v < opt.views; ++v) {
        const RenderedView view = render_view(scene, v);
        write_image(dir + "/image_" + std::to_string(v) + ext, view.image);
        write_depth(dir + "/depth_" + std::to_string(v) + ".depth", view.depth);
        traj.entries.push_back({v, invert(scene.cameras[v].world_to_camera)});
        ks.push_back(scene.cameras[v].intrinsics);
    }
    write_trajectory(dir + "/poses.txt", traj);
    write_intrinsics(dir + "/intrinsics.txt", ks);
    for (int v = 0; v + 1 < opt.views; ++v) {
        const MatchSet set = make_matches(scene, v, v + 1, opt.matches, cfg.seed + 100 + v);
        write_matches(dir + "/matches_" + std::to_string(v) + "_" + std::to_string(v + 1) + ".txt",
                      set);
    }
}

// ---------------------------------------------------------------------------

struct WarpOptions {
    std::string source, depth, poses, intrinsics, out, validity_out;
    int source_index = 0;
    int target_index = 1;
};

inline void run_warp(const WarpOptions& opt) {
    const ImageBuffer source = read_image(opt.source);
    const DepthMap depth = read_depth(opt.depth);
    const Trajectory traj = read_trajectory(opt.poses);
    const std::vector<CameraIntrinsics> ks = read_intrinsics(opt.intrinsics);
    const RigidMotion motion = relative_motion(traj, opt.source_index, opt.target_index);
    const WarpResult warp =
        inverse_warp(source, depth, motion, intrinsics_at(ks, opt.source_index),
                     intrinsics_at(ks, opt.target_index));
    write_image(opt.out, warp.synthesized);
    if (!opt.validity_out.empty()) {
        ImageBuffer mask = ImageBuffer::zeros(warp.validity.width, warp.validity.height, 1);
        for (std::size_t i = 0; i < mask.data.size(); ++i) {
            mask.data[i] = warp.validity.data[i] ? 1.0 : 0.0;
        }
        write_image(opt.validity_out, mask);
    }
}

// ---------------------------------------------------------------------------

struct LossOptions {
    CommonOptions common;
    std::string target, depth, poses, intrinsics, weak_poses, out;
    std::vector<std::string> sources;
    std::vector<std::string> match_files;
    int target_index = 1;
    std::vector<int> source_indices;
};

struct LossInputs {
    ImageBuffer target;
    std::vector<ImageBuffer> sources;
    DepthMap depth;
    std::vector<RigidMotion> motions;
    std::vector<MatchSet> matches;
    std::vector<EulerPose> weak;
    CameraIntrinsics k;
};

inline LossInputs load_loss_inputs(const std::string& target, const std::vector<std::string>& sources,
                                   const std::string& depth, const std::string& poses,
                                   const std::string& intrinsics, int target_index,
                                   std::vector<int> source_indices,
                                   const std::vector<std::string>& match_files,
                                   const std::string& weak_poses) {
    LossInputs in;
    in.target = read_image(target);
    for (const std::string& path : sources) in.sources.push_back(read_image(path));
    in.depth = read_depth(depth);
    const Trajectory traj = read_trajectory(poses);
    const std::vector<CameraIntrinsics> ks = read_intrinsics(intrinsics);
    if (source_indices.size() != in.sources.size()) {
        throw Error("ConfigError", "need one --source-index per --source");
    }
    for (const int s : source_indices) {
        in.motions.push_back(relative_motion(traj, s, target_index));
    }
    for (const std::string& path : match_files) in.matches.push_back(read_matches(path));
    if (!weak_poses.empty()) {
        const Trajectory weak_traj = read_trajectory(weak_poses);
        for (const int s : source_indices) {
            EulerPose weak = motion_to_euler(relative_motion(weak_traj, s, target_index));
            const double norm = weak.translation.norm();
            if (norm > 0.0) weak.translation /= norm;
            in.weak.push_back(weak);
        }
    }
    in.k = intrinsics_at(ks, target_index);
    return in;
}

inline void run_loss(const LossOptions& opt, std::ostream& console) {
    const RunConfig cfg = opt.common.resolve();
    const LossInputs in =
        load_loss_inputs(opt.target, opt.sources, opt.depth, opt.poses, opt.intrinsics,
                         opt.target_index, opt.source_indices, opt.match_files, opt.weak_poses);
    const TotalLoss loss = total_loss(in.target, in.sources, in.depth, in.motions, in.matches,
                                      in.weak, in.k, cfg.loss_weights());
    std::string text = "total,photometric,smoothness,geometric,pose_prior\n";
    text += csv_row({loss.total, loss.photometric, loss.smoothness, loss.geometric,
                     loss.pose_prior});
    emit_text(text, opt.out, console);
}

// ---------------------------------------------------------------------------

struct FmatrixOptions {
    CommonOptions common;
    std::string matches, poses, intrinsics, inliers_out, out;
    int source_index = 0;
    int target_index = 1;
};

inline void run_fmatrix(const FmatrixOptions& opt, std::ostream& console) {
    const RunConfig cfg = opt.common.resolve();
    std::string text;
    if (!opt.matches.empty()) {
        const MatchSet set = read_matches(opt.matches);
        const RansacResult result = ransac_fundamental(set, cfg.ransac_params());
        if (!opt.inliers_out.empty()) write_matches(opt.inliers_out, result.inliers);
        text = "f11,f12,f13,f21,f22,f23,f31,f32,f33,inlier_count\n";
        std::vector<double> row;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) row.push_back(result.f.m(r, c));
        }
        row.push_back(static_cast<double>(result.inlier_count));
        text += csv_row(row);
    } else {
        const Trajectory traj = read_trajectory(opt.poses);
        const std::vector<CameraIntrinsics> ks = read_intrinsics(opt.intrinsics);
        const FundamentalMatrix f = fundamental_from_pose(
            intrinsics_at(ks, opt.source_index), intrinsics_at(ks, opt.target_index),
            relative_motion(traj, opt.source_index, opt.target_index));
        text = "f11,f12,f13,f21,f22,f23,f31,f32,f33\n";
        std::vector<double> row;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) row.push_back(f.m(r, c));
        }
        text += csv_row(row);
    }
    emit_text(text, opt.out, console);
}

// ---------------------------------------------------------------------------

struct RefineOptions {
    CommonOptions common;
    std::string mode = "pose";
    std::string target, source, depth, poses, intrinsics, weak_poses, out;
    std::string matches;
    std::string refined_poses, refined_depth;
    int target_index = 1;
    int source_index = 0;
};

inline void run_refine(const RefineOptions& opt, std::ostream& console) {
    const RunConfig cfg = opt.common.resolve();
    const LossInputs in = load_loss_inputs(
        opt.target, {opt.source}, opt.depth, opt.poses, opt.intrinsics, opt.target_index,
        {opt.source_index}, opt.matches.empty() ? std::vector<std::string>{}
                                                : std::vector<std::string>{opt.matches},
        opt.weak_poses);

    RefineReport report;
    if (opt.mode == "pose") {
        report = refine_pose(motion_to_euler(in.motions[0]), in.target, in.sources, in.depth,
                             in.matches, in.weak, in.k, cfg.loss_weights(), cfg.refine_config());
        if (!opt.refined_poses.empty()) {
            Trajectory refined;
            refined.entries.push_back({0, euler_to_motion(report.pose)});
            write_trajectory(opt.refined_poses, refined);
        }
    } else {
        report = refine_depth(in.depth, in.target, in.sources, in.motions[0], in.k,
                              cfg.loss_weights(), cfg.refine_config());
        if (!opt.refined_depth.empty()) write_depth(opt.refined_depth, *report.depth);
    }

    std::string text = "iteration,total,photometric,smoothness,geometric,pose_prior\n";
    for (std::size_t i = 0; i < report.term_trace.size(); ++i) {
        const TotalLoss& t = report.term_trace[i];
        text += std::to_string(i) + ',' +
                csv_row({t.total, t.photometric, t.smoothness, t.geometric, t.pose_prior});
    }
    emit_text(text, opt.out, console);
}

// ---------------------------------------------------------------------------

struct EvalDepthOptions {
    CommonOptions common;
    std::string pred, gt, out;
    double cap = 80.0;
    bool cap_given = false;
    bool no_median_scaling = false;
    std::string crop = "none";
};

inline void run_eval_depth(const EvalDepthOptions& opt, std::ostream& console) {
    const RunConfig cfg = opt.common.resolve();
    DepthMap pred = read_depth(opt.pred);
    DepthMap gt = read_depth(opt.gt, /*allow_missing=*/true);
    if (opt.crop == "eigen") {
        pred = eigen_crop(pred);
        gt = eigen_crop(gt);
    }
    const double cap = opt.cap_given ? opt.cap : cfg.depth_cap;
    const DepthMetrics m = depth_metrics(pred, gt, cap, !opt.no_median_scaling);
    std::string text = "abs_rel,sq_rel,rmse,rmse_log,a1,a2,a3\n";
    text += csv_row({m.abs_rel, m.sq_rel, m.rmse, m.rmse_log, m.a1, m.a2, m.a3});
    emit_text(text, opt.out, console);
}

// ---------------------------------------------------------------------------

struct EvalOdomOptions {
    CommonOptions common;
    std::string pred, gt, out, svg;
    int window = 0; // 0 = take the config value
    bool disjoint = false;
    bool disjoint_given = false;
};

inline void run_eval_odom(const EvalOdomOptions& opt, std::ostream& console) {
    const RunConfig cfg = opt.common.resolve();
    const Trajectory pred = read_trajectory(opt.pred);
    const Trajectory gt = read_trajectory(opt.gt);
    const int window = opt.window > 0 ? opt.window : cfg.snippet_n;
    const bool disjoint = opt.disjoint_given ? opt.disjoint : cfg.snippet_disjoint;

    const TrajectoryError full = full_trajectory_error(pred, gt);

    const int stride = disjoint ? window : 1;
    const std::vector<Snippet> pred_snips = cut_snippets(pred, window, stride);
    const std::vector<Snippet> gt_snips = cut_snippets(gt, window, stride);
    std::map<std::int64_t, const Snippet*> gt_by_anchor;
    for (const Snippet& s : gt_snips) gt_by_anchor[s.anchor] = &s;
    std::vector<double> ates;
    for (const Snippet& s : pred_snips) {
        const auto it = gt_by_anchor.find(s.anchor);
        if (it != gt_by_anchor.end()) ates.push_back(snippet_ate(s, *it->second));
    }
    double mean = 0.0, stddev = 0.0;
    for (const double a : ates) mean += a;
    if (!ates.empty()) mean /= static_cast<double>(ates.size());
    for (const double a : ates) stddev += (a - mean) * (a - mean);
    if (!ates.empty()) stddev = std::sqrt(stddev / static_cast<double>(ates.size()));

    std::string text =
        "full_median_m,full_mean_m,full_rmse_m,snippet_ate_mean_m,snippet_ate_std_m,snippet_count\n";
    text += csv_row({full.median, full.mean, full.rmse, mean, stddev,
                     static_cast<double>(ates.size())});
    emit_text(text, opt.out, console);

    std::string svg_path = opt.svg;
    if (svg_path.empty()) {
        svg_path = opt.out.empty() ? "trajectory.svg"
                                   : std::filesystem::path(opt.out).replace_extension(".svg").string();
    }
    write_svg_overlay(svg_path, gt, umeyama_align(pred, gt).aligned);
}

// ---------------------------------------------------------------------------

struct ChainOptions {
    CommonOptions common;
    std::string snippets, out;
    int window = 0; // 0 = take the config value
};

inline void run_chain(const ChainOptions& opt, std::ostream& console) {
    const int window = opt.window > 0 ? opt.window : opt.common.resolve().snippet_n;
    const Trajectory lines = read_trajectory(opt.snippets);
    if (window < 2 || lines.size() == 0 ||
        lines.size() % static_cast<std::size_t>(window) != 0) {
        throw Error("CountMismatch", "snippet file length is not a multiple of the window size");
    }
    std::vector<Snippet> snippets;
    const std::size_t groups = lines.size() / static_cast<std::size_t>(window);
    for (std::size_t g = 0; g < groups; ++g) {
        Snippet s;
        s.anchor = static_cast<std::int64_t>(g);
        for (int k = 1; k < window; ++k) {
            s.relative.push_back(lines.entries[g * window + k].pose);
        }
        snippets.push_back(s);
    }
    const Trajectory chained = chain_and_average(snippets);
    if (opt.out.empty()) {
        write_trajectory(console, chained);
    } else {
        write_trajectory(opt.out, chained);
    }
}

} // namespace cli_detail

inline int cli_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
    using namespace cli_detail;
    CLI::App app{"Geometric and photometric supervision toolkit for depth and ego-motion"};
    app.name("geosup");
    app.require_subcommand(1);

    SynthOptions synth_opt;
    {
        CLI::App* sub = app.add_subcommand("synth", "generate an analytic synthetic scene");
        add_common(sub, synth_opt.common);
        sub->add_option("--out-dir", synth_opt.out_dir, "output directory")
            ->each([&synth_opt](const std::string&) { synth_opt.out_dir_given = true; });
        sub->add_option("--width", synth_opt.width);
        sub->add_option("--height", synth_opt.height);
        sub->add_option("--views", synth_opt.views)->check(CLI::Range(1, 64));
        sub->add_option("--planes", synth_opt.planes)->check(CLI::Range(1, 2));
        sub->add_option("--channels", synth_opt.channels)->check(CLI::IsMember({1, 3}));
        sub->add_option("--matches", synth_opt.matches, "matches per consecutive pair");
        sub->add_flag("--wide-view0", synth_opt.wide_view0,
                      "give view 0 a wider field of view so warps from it stay fully valid");
        sub->callback([&] { run_synth(synth_opt); });
    }

    WarpOptions warp_opt;
    {
        CLI::App* sub = app.add_subcommand("warp", "synthesize the target view from a source");
        sub->add_option("--source", warp_opt.source)->required();
        sub->add_option("--depth", warp_opt.depth, "target-frame depth map")->required();
        sub->add_option("--poses", warp_opt.poses)->required();
        sub->add_option("--intrinsics", warp_opt.intrinsics)->required();
        sub->add_option("--source-index", warp_opt.source_index)->required();
        sub->add_option("--target-index", warp_opt.target_index)->required();
        sub->add_option("--out", warp_opt.out)->required();
        sub->add_option("--validity-out", warp_opt.validity_out);
        sub->callback([&] { run_warp(warp_opt); });
    }

    LossOptions loss_opt;
    {
        CLI::App* sub = app.add_subcommand("loss", "evaluate the combined training loss");
        add_common(sub, loss_opt.common);
        sub->add_option("--target", loss_opt.target)->required();
        sub->add_option("--source", loss_opt.sources)->required();
        sub->add_option("--depth", loss_opt.depth)->required();
        sub->add_option("--poses", loss_opt.poses)->required();
        sub->add_option("--intrinsics", loss_opt.intrinsics)->required();
        sub->add_option("--target-index", loss_opt.target_index)->required();
        sub->add_option("--source-index", loss_opt.source_indices)->required();
        sub->add_option("--matches", loss_opt.match_files);
        sub->add_option("--weak-poses", loss_opt.weak_poses);
        sub->add_option("--out", loss_opt.out);
        sub->callback([&] { run_loss(loss_opt, out); });
    }

    FmatrixOptions fmatrix_opt;
    {
        CLI::App* sub =
            app.add_subcommand("fmatrix", "estimate F from matches or derive it from poses");
        add_common(sub, fmatrix_opt.common);
        auto* matches = sub->add_option("--matches", fmatrix_opt.matches);
        auto* poses = sub->add_option("--poses", fmatrix_opt.poses);
        poses->excludes(matches);
        sub->add_option("--intrinsics", fmatrix_opt.intrinsics)->needs(poses);
        sub->add_option("--source-index", fmatrix_opt.source_index);
        sub->add_option("--target-index", fmatrix_opt.target_index);
        sub->add_option("--inliers-out", fmatrix_opt.inliers_out)->needs(matches);
        sub->add_option("--out", fmatrix_opt.out);
        sub->callback([&] {
            if (fmatrix_opt.matches.empty() && fmatrix_opt.poses.empty()) {
                throw CLI::ValidationError("fmatrix", "needs --matches or --poses");
            }
            run_fmatrix(fmatrix_opt, out);
        });
    }

    RefineOptions refine_opt;
    {
        CLI::App* sub = app.add_subcommand("refine", "minimize the loss over pose or depth");
        add_common(sub, refine_opt.common);
        sub->add_option("--mode", refine_opt.mode)->check(CLI::IsMember({"pose", "depth"}));
        sub->add_option("--target", refine_opt.target)->required();
        sub->add_option("--source", refine_opt.source)->required();
        sub->add_option("--depth", refine_opt.depth)->required();
        sub->add_option("--poses", refine_opt.poses)->required();
        sub->add_option("--intrinsics", refine_opt.intrinsics)->required();
        sub->add_option("--target-index", refine_opt.target_index)->required();
        sub->add_option("--source-index", refine_opt.source_index)->required();
        sub->add_option("--matches", refine_opt.matches);
        sub->add_option("--weak-poses", refine_opt.weak_poses);
        sub->add_option("--out", refine_opt.out);
        sub->add_option("--refined-poses", refine_opt.refined_poses,
                        "write the refined relative motion as a one-line pose file");
        sub->add_option("--refined-depth", refine_opt.refined_depth);
        sub->callback([&] { run_refine(refine_opt, out); });
    }

    EvalDepthOptions eval_depth_opt;
    {
        CLI::App* sub = app.add_subcommand("eval-depth", "depth metrics against ground truth");
        add_common(sub, eval_depth_opt.common);
        sub->add_option("--pred", eval_depth_opt.pred)->required();
        sub->add_option("--gt", eval_depth_opt.gt)->required();
        sub->add_option("--cap", eval_depth_opt.cap)
            ->each([&eval_depth_opt](const std::string&) { eval_depth_opt.cap_given = true; });
        sub->add_flag("--no-median-scaling", eval_depth_opt.no_median_scaling);
        sub->add_option("--crop", eval_depth_opt.crop)->check(CLI::IsMember({"none", "eigen"}));
        sub->add_option("--out", eval_depth_opt.out);
        sub->callback([&] { run_eval_depth(eval_depth_opt, out); });
    }

    EvalOdomOptions eval_odom_opt;
    {
        CLI::App* sub =
            app.add_subcommand("eval-odom", "trajectory error and snippet ATE, with SVG overlay");
        add_common(sub, eval_odom_opt.common);
        sub->add_option("--pred", eval_odom_opt.pred)->required();
        sub->add_option("--gt", eval_odom_opt.gt)->required();
        sub->add_option("--window", eval_odom_opt.window)->check(CLI::Range(2, 1024));
        sub->add_flag("--disjoint", eval_odom_opt.disjoint, "disjoint snippet windows")
            ->each([&eval_odom_opt](const std::string&) { eval_odom_opt.disjoint_given = true; });
        sub->add_option("--out", eval_odom_opt.out);
        sub->add_option("--svg", eval_odom_opt.svg, "trajectory overlay path");
        sub->callback([&] { run_eval_odom(eval_odom_opt, out); });
    }

    ChainOptions chain_opt;
    {
        CLI::App* sub = app.add_subcommand(
            "chain", "fuse overlapping snippet motions into a full trajectory");
        add_common(sub, chain_opt.common);
        sub->add_option("--snippets", chain_opt.snippets,
                        "pose file holding groups of <window> lines relative to each anchor")
            ->required();
        sub->add_option("--window", chain_opt.window, "frames per snippet (default: config snippet_n)")
            ->check(CLI::Range(2, 1024));
        sub->add_option("--out", chain_opt.out);
        sub->callback([&] { run_chain(chain_opt, out); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    } catch (const Error& e) {
        err << e.name() << ": " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace geosup
