#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace riskplan {

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kSafeColor{255, 255, 255};
inline constexpr Rgb kRiskColor{0, 0, 0};
inline constexpr Rgb kDangerColor{255, 0, 0};
inline constexpr Rgb kPathColor{0, 0, 255};

// Row-major 8-bit RGB raster; row 0 is the top of the image (largest y).
struct MapImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // width * height * 3

    Rgb at(int row, int col) const {
        const size_t i = 3 * (static_cast<size_t>(row) * width + col);
        return {pixels[i], pixels[i + 1], pixels[i + 2]};
    }
    void set(int row, int col, Rgb c) {
        const size_t i = 3 * (static_cast<size_t>(row) * width + col);
        pixels[i] = c[0];
        pixels[i + 1] = c[1];
        pixels[i + 2] = c[2];
    }

    friend bool operator==(const MapImage&, const MapImage&) = default;
};

// Binary PPM (P6, maxval 255) -- the normative on-disk image format.
void write_ppm(const MapImage& img, const std::string& path);
MapImage read_ppm(const std::string& path);

std::vector<std::uint8_t> encode_ppm(const MapImage& img);

}  // namespace riskplan
