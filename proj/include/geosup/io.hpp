#pragma once

#include <Eigen/SVD>

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "geosup/error.hpp"
#include "geosup/evaluation.hpp"
#include "geosup/geometry.hpp"
#include "geosup/image.hpp"
#include "geosup/image_loss.hpp"
#include "geosup/matching.hpp"
#include "geosup/matchset.hpp"
#include "geosup/refine.hpp"

// File formats and run configuration. All formats are normative and
// bit-exact:
//
//   pose    one line per frame, 12 decimal reals: the row-major top 3x4 of
//           the camera-to-world matrix (KITTI odometry convention); frames
//           are the line numbers 0..n-1
//   match   header "MATCHES v1 <count> <w1> <h1> <w2> <h2>" followed by
//           count lines "x1 y1 x2 y2"
//   depth   ASCII header "DEPTH v1 <width> <height>\n" followed by
//           width*height little-endian IEEE float32, row-major, top row
//           first; 0.0 encodes missing in ground-truth files only
//   image   binary PGM (P5) for 1 channel or PPM (P6) for 3 channels,
//           maxval 255, intensity = value / 255
//
// Reals are written with 17 significant digits, so tool-written files
// round-trip value-exactly.

namespace geosup {

namespace detail {

inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_tokens(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream stream(line);
    std::string token;
    while (stream >> token) out.push_back(token);
    return out;
}

inline bool parse_real(const std::string& token, double& out) {
    const char* begin = token.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + token.size() && !token.empty();
}

inline std::ifstream open_input(const std::string& path, std::ios::openmode mode = {}) {
    std::ifstream in(path, mode);
    if (!in) throw Error("FileError", "cannot open for reading: " + path);
    return in;
}

inline std::ofstream open_output(const std::string& path, std::ios::openmode mode = {}) {
    std::ofstream out(path, mode);
    if (!out) throw Error("FileError", "cannot open for writing: " + path);
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Pose files.

inline void write_trajectory(std::ostream& out, const Trajectory& traj) {
    for (const TrajectoryEntry& e : traj.entries) {
        const Eigen::Matrix3d& r = e.pose.rotation;
        const Eigen::Vector3d& t = e.pose.translation;
        for (int row = 0; row < 3; ++row) {
            for (int col = 0; col < 3; ++col) {
                out << detail::format_real(r(row, col)) << ' ';
            }
            out << detail::format_real(t(row));
            out << (row == 2 ? '\n' : ' ');
        }
    }
}

inline void write_trajectory(const std::string& path, const Trajectory& traj) {
    auto out = detail::open_output(path);
    write_trajectory(out, traj);
}

/// Reads a KITTI-style pose file. Rotations already orthonormal to 1e-9 are
/// kept bit-exact; drift up to 1e-6 is projected back onto SO(3); anything
/// worse (or a reflection) is rejected as InvalidRotation.
inline Trajectory read_trajectory(std::istream& in) {
    Trajectory traj;
    std::string line;
    std::int64_t frame = 0;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const std::vector<std::string> tokens = detail::split_tokens(line);
        if (tokens.empty()) continue;
        if (tokens.size() != 12) {
            throw Error("MalformedLine", "pose line " + std::to_string(line_number) + " has " +
                                             std::to_string(tokens.size()) + " tokens, expected 12");
        }
        std::array<double, 12> v{};
        for (std::size_t i = 0; i < 12; ++i) {
            if (!detail::parse_real(tokens[i], v[i])) {
                throw Error("MalformedLine",
                            "pose line " + std::to_string(line_number) + ": non-numeric token");
            }
        }
        RigidMotion pose;
        pose.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
        pose.translation = {v[3], v[7], v[11]};

        const double drift =
            (pose.rotation.transpose() * pose.rotation - Eigen::Matrix3d::Identity()).norm();
        const double det_err = std::abs(pose.rotation.determinant() - 1.0);
        if (drift > 1e-6 || det_err > 1e-6) {
            throw Error("InvalidRotation", "pose line " + std::to_string(line_number) +
                                               ": rotation drift exceeds 1e-6");
        }
        if (drift > 1e-9 || det_err > 1e-9) {
            const Eigen::JacobiSVD<Eigen::Matrix3d> svd(
                pose.rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
            Eigen::Vector3d s = Eigen::Vector3d::Ones();
            if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s(2) = -1.0;
            pose.rotation = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
        }
        traj.entries.push_back({frame++, pose});
    }
    return traj;
}

inline Trajectory read_trajectory(const std::string& path) {
    auto in = detail::open_input(path);
    return read_trajectory(in);
}

// ---------------------------------------------------------------------------
// Match files.

inline void write_matches(std::ostream& out, const MatchSet& set) {
    out << "MATCHES v1 " << set.size() << ' ' << set.width1 << ' ' << set.height1 << ' '
        << set.width2 << ' ' << set.height2 << '\n';
    for (const Match& m : set.matches) {
        out << detail::format_real(m.p.x()) << ' ' << detail::format_real(m.p.y()) << ' '
            << detail::format_real(m.q.x()) << ' ' << detail::format_real(m.q.y()) << '\n';
    }
}

inline void write_matches(const std::string& path, const MatchSet& set) {
    auto out = detail::open_output(path);
    write_matches(out, set);
}

inline MatchSet read_matches(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error("HeaderMismatch", "empty match file");
    }
    const std::vector<std::string> header = detail::split_tokens(line);
    if (header.size() != 7 || header[0] != "MATCHES" || header[1] != "v1") {
        throw Error("HeaderMismatch", "expected 'MATCHES v1 <count> <w1> <h1> <w2> <h2>'");
    }
    MatchSet set;
    double count_value = 0.0;
    if (!detail::parse_real(header[2], count_value) || count_value < 0.0 ||
        count_value != static_cast<long>(count_value)) {
        throw Error("HeaderMismatch", "bad match count");
    }
    const long signed_count = static_cast<long>(count_value);
    double dims[4];
    for (int i = 0; i < 4; ++i) {
        if (!detail::parse_real(header[3 + i], dims[i])) {
            throw Error("HeaderMismatch", "non-numeric image dimension");
        }
    }
    set.width1 = static_cast<int>(dims[0]);
    set.height1 = static_cast<int>(dims[1]);
    set.width2 = static_cast<int>(dims[2]);
    set.height2 = static_cast<int>(dims[3]);

    std::size_t parsed = 0;
    while (std::getline(in, line)) {
        const std::vector<std::string> tokens = detail::split_tokens(line);
        if (tokens.empty()) continue;
        if (parsed == static_cast<std::size_t>(signed_count)) {
            throw Error("CountMismatch", "more match lines than the header count");
        }
        if (tokens.size() != 4) {
            throw Error("MalformedLine", "match line needs 4 reals");
        }
        double v[4];
        for (int i = 0; i < 4; ++i) {
            if (!detail::parse_real(tokens[i], v[i])) {
                throw Error("MalformedLine", "non-numeric match coordinate");
            }
        }
        set.matches.push_back({{v[0], v[1]}, {v[2], v[3]}});
        ++parsed;
    }
    if (parsed != static_cast<std::size_t>(signed_count)) {
        throw Error("CountMismatch", "header announces " + std::to_string(signed_count) +
                                         " matches, file has " + std::to_string(parsed));
    }
    return set;
}

inline MatchSet read_matches(const std::string& path) {
    auto in = detail::open_input(path);
    return read_matches(in);
}

// ---------------------------------------------------------------------------
// Depth files. Values are stored as float32; writing rounds doubles to the
// nearest float.

inline void write_depth(std::ostream& out, const DepthMap& depth) {
    out << "DEPTH v1 " << depth.width << ' ' << depth.height << '\n';
    for (const double v : depth.data) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        const char bytes[4] = {static_cast<char>(bits & 0xff),
                               static_cast<char>((bits >> 8) & 0xff),
                               static_cast<char>((bits >> 16) & 0xff),
                               static_cast<char>((bits >> 24) & 0xff)};
        out.write(bytes, 4);
    }
}

inline void write_depth(const std::string& path, const DepthMap& depth) {
    auto out = detail::open_output(path, std::ios::binary);
    write_depth(out, depth);
}

/// `allow_missing` admits 0.0 entries (ground-truth files); predictions must
/// be strictly positive.
inline DepthMap read_depth(std::istream& in, bool allow_missing = false) {
    std::string header;
    if (!std::getline(in, header)) {
        throw Error("HeaderMismatch", "empty depth file");
    }
    const std::vector<std::string> tokens = detail::split_tokens(header);
    if (tokens.size() != 4 || tokens[0] != "DEPTH" || tokens[1] != "v1") {
        throw Error("HeaderMismatch", "expected 'DEPTH v1 <width> <height>'");
    }
    double wd = 0.0, hd = 0.0;
    if (!detail::parse_real(tokens[2], wd) || !detail::parse_real(tokens[3], hd) || wd < 1.0 ||
        hd < 1.0) {
        throw Error("HeaderMismatch", "bad depth dimensions");
    }
    DepthMap depth;
    depth.width = static_cast<int>(wd);
    depth.height = static_cast<int>(hd);
    depth.data.resize(depth.pixel_count());
    for (double& v : depth.data) {
        char bytes[4];
        in.read(bytes, 4);
        if (in.gcount() != 4) {
            throw Error("TruncatedPayload", "depth payload shorter than width*height floats");
        }
        std::uint32_t bits = (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[0]))) |
                             (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[1])) << 8) |
                             (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[2])) << 16) |
                             (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[3])) << 24);
        float f;
        std::memcpy(&f, &bits, 4);
        v = static_cast<double>(f);
        if (!std::isfinite(v) || v < 0.0 || (v == 0.0 && !allow_missing)) {
            throw Error("NonPositiveValue", "depth values must be positive (0 allowed in "
                                            "ground-truth files only)");
        }
    }
    return depth;
}

inline DepthMap read_depth(const std::string& path, bool allow_missing = false) {
    auto in = detail::open_input(path, std::ios::binary);
    return read_depth(in, allow_missing);
}

// ---------------------------------------------------------------------------
// Image files (PGM P5 / PPM P6, maxval 255, no comment support).

inline void write_image(std::ostream& out, const ImageBuffer& image) {
    out << (image.channels == 3 ? "P6" : "P5") << '\n'
        << image.width << ' ' << image.height << '\n'
        << "255\n";
    for (const double v : image.data) {
        const long quantized = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
        const char byte = static_cast<char>(static_cast<unsigned char>(quantized));
        out.write(&byte, 1);
    }
}

inline void write_image(const std::string& path, const ImageBuffer& image) {
    auto out = detail::open_output(path, std::ios::binary);
    write_image(out, image);
}

inline ImageBuffer read_image(std::istream& in) {
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P6") {
        throw Error("UnsupportedMagic", "expected binary PGM (P5) or PPM (P6), got '" + magic + "'");
    }
    long width = 0, height = 0, maxval = 0;
    in >> width >> height >> maxval;
    if (!in || width < 1 || height < 1) {
        throw Error("HeaderMismatch", "bad image dimensions");
    }
    if (maxval != 255) {
        throw Error("MaxvalUnsupported", "only maxval 255 is supported, got " +
                                             std::to_string(maxval));
    }
    in.get(); // single whitespace separating header and payload
    ImageBuffer image;
    image.width = static_cast<int>(width);
    image.height = static_cast<int>(height);
    image.channels = magic == "P6" ? 3 : 1;
    image.data.resize(image.pixel_count() * image.channels);
    std::vector<char> bytes(image.data.size());
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw Error("TruncatedPayload", "image payload shorter than the header promises");
    }
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        image.data[i] = static_cast<unsigned char>(bytes[i]) / 255.0;
    }
    return image;
}

inline ImageBuffer read_image(const std::string& path) {
    auto in = detail::open_input(path, std::ios::binary);
    return read_image(in);
}

// ---------------------------------------------------------------------------
// Intrinsics files: one line per view, "fx fy cx cy skew".

inline void write_intrinsics(const std::string& path, const std::vector<CameraIntrinsics>& ks) {
    auto out = detail::open_output(path);
    for (const CameraIntrinsics& k : ks) {
        out << detail::format_real(k.fx) << ' ' << detail::format_real(k.fy) << ' '
            << detail::format_real(k.cx) << ' ' << detail::format_real(k.cy) << ' '
            << detail::format_real(k.skew) << '\n';
    }
}

inline std::vector<CameraIntrinsics> read_intrinsics(const std::string& path) {
    auto in = detail::open_input(path);
    std::vector<CameraIntrinsics> out;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const std::vector<std::string> tokens = detail::split_tokens(line);
        if (tokens.empty()) continue;
        if (tokens.size() != 5) {
            throw Error("MalformedLine", "intrinsics line " + std::to_string(line_number) +
                                             " needs 5 reals");
        }
        double v[5];
        for (int i = 0; i < 5; ++i) {
            if (!detail::parse_real(tokens[i], v[i])) {
                throw Error("MalformedLine", "non-numeric intrinsics value");
            }
        }
        out.push_back({v[0], v[1], v[2], v[3], v[4]});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Run configuration: line-oriented "key = value", unknown keys rejected.
// Blank lines and lines starting with '#' are ignored. serialize() followed
// by parse() reproduces the configuration exactly.

struct RunConfig {
    // Loss weights (alpha 0.85, w_s 0.1, P_M 0.99; the pairwise-matching
    // setting uses w_g 0.001, the prior-weak-pose setting w_p 0.1).
    double alpha = 0.85;
    double w_s = 0.1;
    double w_g = 0.001;
    double w_p = 0.0;
    double w_r = 1.0;
    double w_t = 1.0;
    double p_m = 0.99;
    // Refinement.
    int refine_max_iters = 200;
    double refine_step = 1e-2;
    double refine_backtrack = 0.5;
    double refine_grad_eps = 1e-5;
    double refine_tol = 1e-10;
    bool refine_optimize_depth = false;
    // RANSAC.
    int ransac_iterations = 2000;
    double ransac_threshold = 1.0;
    int ransac_min_inliers = 15;
    // Evaluation.
    double depth_cap = 80.0;
    int snippet_n = 3;
    bool snippet_disjoint = false;
    // Shared.
    std::uint64_t seed = 0;
    std::string out_dir = "out";

    LossWeights loss_weights() const {
        LossWeights w;
        w.alpha = alpha;
        w.w_s = w_s;
        w.w_g = w_g;
        w.w_p = w_p;
        w.w_r = w_r;
        w.w_t = w_t;
        w.p_m = p_m;
        return w;
    }
    RefineConfig refine_config() const {
        RefineConfig c;
        c.max_iters = refine_max_iters;
        c.step = refine_step;
        c.backtrack = refine_backtrack;
        c.grad_eps = refine_grad_eps;
        c.tol = refine_tol;
        c.optimize_depth = refine_optimize_depth;
        return c;
    }
    RansacParams ransac_params() const {
        RansacParams p;
        p.iterations = ransac_iterations;
        p.threshold = ransac_threshold;
        p.min_inliers = ransac_min_inliers;
        p.seed = seed;
        return p;
    }

    std::string serialize() const;
    static RunConfig parse(std::istream& in);
    static RunConfig load(const std::string& path) {
        auto in = detail::open_input(path);
        return parse(in);
    }
    void save(const std::string& path) const {
        auto out = detail::open_output(path);
        out << serialize();
    }
};

namespace detail {

struct ConfigField {
    const char* key;
    enum class Kind { Real, Int, Bool, U64, Str } kind;
    void* ptr;
};

inline std::vector<ConfigField> config_fields(RunConfig& c) {
    using K = ConfigField::Kind;
    return {
        {"alpha", K::Real, &c.alpha},
        {"w_s", K::Real, &c.w_s},
        {"w_g", K::Real, &c.w_g},
        {"w_p", K::Real, &c.w_p},
        {"w_r", K::Real, &c.w_r},
        {"w_t", K::Real, &c.w_t},
        {"p_m", K::Real, &c.p_m},
        {"refine_max_iters", K::Int, &c.refine_max_iters},
        {"refine_step", K::Real, &c.refine_step},
        {"refine_backtrack", K::Real, &c.refine_backtrack},
        {"refine_grad_eps", K::Real, &c.refine_grad_eps},
        {"refine_tol", K::Real, &c.refine_tol},
        {"refine_optimize_depth", K::Bool, &c.refine_optimize_depth},
        {"ransac_iterations", K::Int, &c.ransac_iterations},
        {"ransac_threshold", K::Real, &c.ransac_threshold},
        {"ransac_min_inliers", K::Int, &c.ransac_min_inliers},
        {"depth_cap", K::Real, &c.depth_cap},
        {"snippet_n", K::Int, &c.snippet_n},
        {"snippet_disjoint", K::Bool, &c.snippet_disjoint},
        {"seed", K::U64, &c.seed},
        {"out_dir", K::Str, &c.out_dir},
    };
}

} // namespace detail

inline std::string RunConfig::serialize() const {
    RunConfig& self = const_cast<RunConfig&>(*this);
    std::ostringstream out;
    for (const detail::ConfigField& f : detail::config_fields(self)) {
        out << f.key << " = ";
        switch (f.kind) {
            case detail::ConfigField::Kind::Real:
                out << detail::format_real(*static_cast<double*>(f.ptr));
                break;
            case detail::ConfigField::Kind::Int:
                out << *static_cast<int*>(f.ptr);
                break;
            case detail::ConfigField::Kind::Bool:
                out << (*static_cast<bool*>(f.ptr) ? "true" : "false");
                break;
            case detail::ConfigField::Kind::U64:
                out << *static_cast<std::uint64_t*>(f.ptr);
                break;
            case detail::ConfigField::Kind::Str:
                out << *static_cast<std::string*>(f.ptr);
                break;
        }
        out << '\n';
    }
    return out.str();
}

inline RunConfig RunConfig::parse(std::istream& in) {
    RunConfig config;
    std::vector<detail::ConfigField> fields = detail::config_fields(config);
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error("ConfigError",
                        "config line " + std::to_string(line_number) + ": expected 'key = value'");
        }
        auto trim = [](std::string s) {
            const std::size_t b = s.find_first_not_of(" \t\r");
            const std::size_t e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        const detail::ConfigField* field = nullptr;
        for (const auto& f : fields) {
            if (key == f.key) {
                field = &f;
                break;
            }
        }
        if (field == nullptr) {
            throw Error("ConfigError", "unknown config key '" + key + "'");
        }
        bool ok = true;
        switch (field->kind) {
            case detail::ConfigField::Kind::Real:
                ok = detail::parse_real(value, *static_cast<double*>(field->ptr));
                break;
            case detail::ConfigField::Kind::Int: {
                double v = 0.0;
                ok = detail::parse_real(value, v) && v == static_cast<int>(v);
                if (ok) *static_cast<int*>(field->ptr) = static_cast<int>(v);
                break;
            }
            case detail::ConfigField::Kind::Bool:
                if (value == "true") {
                    *static_cast<bool*>(field->ptr) = true;
                } else if (value == "false") {
                    *static_cast<bool*>(field->ptr) = false;
                } else {
                    ok = false;
                }
                break;
            case detail::ConfigField::Kind::U64: {
                std::uint64_t v = 0;
                const auto [end, ec] =
                    std::from_chars(value.data(), value.data() + value.size(), v);
                ok = ec == std::errc{} && end == value.data() + value.size();
                if (ok) *static_cast<std::uint64_t*>(field->ptr) = v;
                break;
            }
            case detail::ConfigField::Kind::Str:
                *static_cast<std::string*>(field->ptr) = value;
                break;
        }
        if (!ok) {
            throw Error("ConfigError", "config line " + std::to_string(line_number) +
                                           ": bad value for '" + key + "'");
        }
    }
    return config;
}

} // namespace geosup
