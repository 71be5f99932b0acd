#pragma once

#include <cstdint>
#include <vector>

namespace geosup {

/// Dense intensity grid, row-major and channel-interleaved, values in [0, 1].
struct ImageBuffer {
    int width = 0;
    int height = 0;
    int channels = 1; // 1 or 3
    std::vector<double> data;

    static ImageBuffer zeros(int width, int height, int channels) {
        return {width, height, channels,
                std::vector<double>(static_cast<std::size_t>(width) * height * channels, 0.0)};
    }

    double& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    bool empty() const { return data.empty(); }
};

/// Per-pixel depth in meters, row-major. Predictions are strictly positive;
/// 0 encodes "missing" in ground-truth grids only.
struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    static DepthMap constant(int width, int height, double value) {
        return {width, height, std::vector<double>(static_cast<std::size_t>(width) * height, value)};
    }

    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    bool empty() const { return data.empty(); }
};

/// {0, 1} per pixel, row-major.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    static BinaryMask ones(int width, int height) {
        return {width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 1)};
    }

    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t count() const {
        std::size_t n = 0;
        for (const auto v : data) n += v;
        return n;
    }
};

/// Per-pixel scalar field (loss maps, SSIM maps).
struct ScalarMap {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    static ScalarMap zeros(int width, int height) {
        return {width, height, std::vector<double>(static_cast<std::size_t>(width) * height, 0.0)};
    }

    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

} // namespace geosup
