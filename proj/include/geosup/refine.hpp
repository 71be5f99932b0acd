#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "geosup/error.hpp"
#include "geosup/geometry.hpp"
#include "geosup/image_loss.hpp"

// Direct minimization of the combined loss over a 6-DoF pose or a per-pixel
// log-depth grid. Finite-difference gradients plus Armijo backtracking keep
// the loop deterministic and double as the gradient oracle for the loss
// implementations.

namespace geosup {

struct RefineConfig {
    int max_iters = 200;
    double step = 1e-2;      // initial line-search step
    double backtrack = 0.5;  // step shrink factor
    double grad_eps = 1e-5;  // central-difference probe
    double tol = 1e-10;      // stop when the accepted decrease falls below
    bool optimize_depth = false;
};

struct RefineReport {
    EulerPose pose;
    std::optional<DepthMap> depth;
    std::vector<double> loss_trace;      // loss after each accepted step, starting at the initial loss
    std::vector<TotalLoss> term_trace;   // per-term breakdown alongside loss_trace
    int iterations = 0;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps).
/// Signals NonFiniteObjective when any probe is not finite.
inline Eigen::VectorXd numeric_gradient(const Objective& objective, const Eigen::VectorXd& params,
                                        double eps) {
    Eigen::VectorXd grad(params.size());
    Eigen::VectorXd probe = params;
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        probe(i) = params(i) + eps;
        const double fp = objective(probe);
        probe(i) = params(i) - eps;
        const double fm = objective(probe);
        probe(i) = params(i);
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw Error("NonFiniteObjective", "objective not finite at a gradient probe");
        }
        grad(i) = (fp - fm) / (2.0 * eps);
    }
    return grad;
}

namespace detail {

constexpr double kArmijo = 1e-4;
constexpr int kLbfgsMemory = 8;

struct DescentTrace {
    Eigen::VectorXd params;
    std::vector<double> losses;
    int iterations = 0;
};

/// First-order descent with Armijo backtracking. Directions come from an
/// L-BFGS two-loop recursion over the finite-difference gradients; when a
/// quasi-Newton direction is rejected by the line search the history is
/// dropped and the step retried along the raw gradient. Plain steepest
/// descent zigzags hopelessly in the narrow pose valleys of the photometric
/// objective, while the curvature memory follows them; the loss trace stays
/// non-increasing by construction either way.
inline DescentTrace descend(const Objective& objective, Eigen::VectorXd x,
                            const RefineConfig& cfg,
                            const std::function<void(const Eigen::VectorXd&)>& on_accept = {}) {
    DescentTrace out;
    double f = objective(x);
    if (!std::isfinite(f)) {
        throw Error("NonFiniteObjective", "objective not finite at the initial point");
    }
    out.losses.push_back(f);

    std::vector<Eigen::VectorXd> s_hist, y_hist;
    Eigen::VectorXd grad = numeric_gradient(objective, x, cfg.grad_eps);

    const auto lbfgs_direction = [&]() {
        Eigen::VectorXd q = grad;
        const int m = static_cast<int>(s_hist.size());
        std::vector<double> alpha_hist(m);
        for (int i = m - 1; i >= 0; --i) {
            const double rho = 1.0 / y_hist[i].dot(s_hist[i]);
            alpha_hist[i] = rho * s_hist[i].dot(q);
            q -= alpha_hist[i] * y_hist[i];
        }
        if (m > 0) {
            q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        }
        for (int i = 0; i < m; ++i) {
            const double rho = 1.0 / y_hist[i].dot(s_hist[i]);
            const double beta = rho * y_hist[i].dot(q);
            q += (alpha_hist[i] - beta) * s_hist[i];
        }
        return Eigen::VectorXd(-q);
    };

    // Returns the accepted step length, or 0 when the search fails.
    const auto line_search = [&](const Eigen::VectorXd& dir, double slope, double alpha,
                                 Eigen::VectorXd& x_out, double& f_out) {
        while (alpha >= 1e-18) {
            const Eigen::VectorXd trial_x = x + alpha * dir;
            const double trial = objective(trial_x);
            if (std::isfinite(trial) && trial <= f + kArmijo * alpha * slope) {
                x_out = trial_x;
                f_out = trial;
                return alpha;
            }
            alpha *= cfg.backtrack;
        }
        return 0.0;
    };

    // The absolute-value terms of the objective are only piecewise smooth;
    // when the search stalls after real progress, the probe width is cut and
    // the descent resumed, which keeps gradients meaningful closer to the
    // kinks. A stall without progress since the last cut means convergence.
    double eps = cfg.grad_eps;
    int eps_refinements = 3;
    double stage_start = f;
    const auto stage_progressed = [&]() { return stage_start - f >= 10.0 * cfg.tol; };

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        if (grad.squaredNorm() == 0.0) break;

        Eigen::VectorXd x_next;
        double f_next = f;
        double accepted = 0.0;

        if (!s_hist.empty()) {
            const Eigen::VectorXd dir = lbfgs_direction();
            const double slope = grad.dot(dir);
            if (slope < 0.0) {
                accepted = line_search(dir, slope, 1.0, x_next, f_next);
            }
            if (accepted == 0.0) {
                s_hist.clear();
                y_hist.clear();
            }
        }
        if (accepted == 0.0) {
            const Eigen::VectorXd dir = -grad;
            accepted = line_search(dir, -grad.squaredNorm(), cfg.step, x_next, f_next);
        }
        if (accepted == 0.0) {
            if (eps_refinements == 0 || !stage_progressed()) break;
            --eps_refinements;
            eps *= 0.1;
            stage_start = f;
            grad = numeric_gradient(objective, x, eps);
            continue;
        }

        const Eigen::VectorXd grad_next = numeric_gradient(objective, x_next, eps);
        const Eigen::VectorXd s = x_next - x;
        const Eigen::VectorXd y = grad_next - grad;
        if (y.dot(s) > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            if (s_hist.size() > kLbfgsMemory) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
            }
        }

        const double decrease = f - f_next;
        x = x_next;
        f = f_next;
        grad = grad_next;
        out.losses.push_back(f);
        ++out.iterations;
        if (on_accept) on_accept(x);
        if (decrease < cfg.tol) {
            if (eps_refinements == 0 || !stage_progressed()) break;
            --eps_refinements;
            eps *= 0.1;
            stage_start = f;
            s_hist.clear();
            y_hist.clear();
            grad = numeric_gradient(objective, x, eps);
        }
    }
    out.params = x;
    return out;
}

} // namespace detail

/// Minimizes the combined loss over the relative pose of a single
/// target/source pair. Matches and weak poses are consulted exactly when
/// their weights are active, mirroring total_loss.
inline RefineReport refine_pose(const EulerPose& initial, const ImageBuffer& target,
                                const std::vector<ImageBuffer>& sources, const DepthMap& depth,
                                const std::vector<MatchSet>& matches,
                                const std::vector<EulerPose>& weak_poses,
                                const CameraIntrinsics& k, const LossWeights& w,
                                const RefineConfig& cfg) {
    if (sources.size() != 1) {
        throw Error("ConfigError", "pose refinement works on one target/source pair");
    }
    const auto unpack = [](const Eigen::VectorXd& p) {
        EulerPose pose;
        pose.angles = p.head<3>();
        pose.translation = p.tail<3>();
        return pose;
    };
    // Errors at the initial pose propagate; poses visited by line-search
    // trials may leave the valid region and read as +inf instead.
    const TotalLoss initial_loss =
        total_loss(target, sources, depth, {euler_to_motion(initial)}, matches, weak_poses, k, w);
    const Objective objective = [&](const Eigen::VectorXd& p) {
        try {
            return total_loss(target, sources, depth, {euler_to_motion(unpack(p))}, matches,
                              weak_poses, k, w)
                .total;
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    RefineReport report;
    report.term_trace.push_back(initial_loss);
    const auto record = [&](const Eigen::VectorXd& p) {
        report.term_trace.push_back(total_loss(target, sources, depth,
                                               {euler_to_motion(unpack(p))}, matches,
                                               weak_poses, k, w));
    };

    Eigen::VectorXd x(6);
    x << initial.angles, initial.translation;
    const detail::DescentTrace trace = detail::descend(objective, x, cfg, record);

    report.pose = unpack(trace.params);
    report.loss_trace = trace.losses;
    report.iterations = trace.iterations;
    return report;
}

/// Minimizes the combined loss over per-pixel log-depth with the pose held
/// fixed. The geometric and prior terms do not depend on depth and are
/// excluded from the objective. Grids beyond 64x64 are rejected; the
/// finite-difference parameterization is meant for oracle-scale grids.
inline RefineReport refine_depth(const DepthMap& initial, const ImageBuffer& target,
                                 const std::vector<ImageBuffer>& sources,
                                 const RigidMotion& pose, const CameraIntrinsics& k,
                                 const LossWeights& w, const RefineConfig& cfg) {
    if (sources.size() != 1) {
        throw Error("ConfigError", "depth refinement works on one target/source pair");
    }
    if (initial.width > 64 || initial.height > 64) {
        throw Error("ConfigError", "depth refinement is limited to grids of at most 64x64");
    }
    LossWeights wd = w;
    wd.w_g = 0.0;
    wd.w_p = 0.0;

    const int width = initial.width;
    const int height = initial.height;
    const auto unpack = [width, height](const Eigen::VectorXd& p) {
        DepthMap d = DepthMap::constant(width, height, 0.0);
        for (std::size_t i = 0; i < d.data.size(); ++i) {
            d.data[i] = std::exp(p(static_cast<Eigen::Index>(i)));
        }
        return d;
    };
    const TotalLoss initial_loss = total_loss(target, sources, initial, {pose}, {}, {}, k, wd);
    const Objective objective = [&](const Eigen::VectorXd& p) {
        try {
            return total_loss(target, sources, unpack(p), {pose}, {}, {}, k, wd).total;
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    RefineReport report;
    report.term_trace.push_back(initial_loss);
    const auto record = [&](const Eigen::VectorXd& p) {
        report.term_trace.push_back(total_loss(target, sources, unpack(p), {pose}, {}, {}, k, wd));
    };

    Eigen::VectorXd x(initial.data.size());
    for (std::size_t i = 0; i < initial.data.size(); ++i) {
        x(static_cast<Eigen::Index>(i)) = std::log(initial.data[i]);
    }
    const detail::DescentTrace trace = detail::descend(objective, x, cfg, record);

    report.depth = unpack(trace.params);
    report.loss_trace = trace.losses;
    report.iterations = trace.iterations;
    return report;
}

} // namespace geosup
