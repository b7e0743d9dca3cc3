#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chartagent/common.hpp"

namespace chartagent {

// 8-bit RGB bitmap, row-major, exactly width*height*3 bytes.
struct ChartImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;

    ChartImage() = default;
    ChartImage(int w, int h, Rgb fill = {255, 255, 255});

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    Rgb get(int x, int y) const {
        const size_t i = (size_t(y) * width + x) * 3;
        return {pixels[i], pixels[i + 1], pixels[i + 2]};
    }
    void set(int x, int y, Rgb c) {
        const size_t i = (size_t(y) * width + x) * 3;
        pixels[i] = c.r;
        pixels[i + 1] = c.g;
        pixels[i + 2] = c.b;
    }
    void set_clipped(int x, int y, Rgb c) {
        if (in_bounds(x, y)) set(x, y, c);
    }
    void fill_rect(const RectI& r, Rgb c);

    bool operator==(const ChartImage&) const = default;
};

// Binary PPM (P6), the bit-exact baseline format.
std::vector<uint8_t> encode_ppm(const ChartImage& img);
ChartImage decode_ppm(const std::vector<uint8_t>& bytes);
void write_ppm(const ChartImage& img, const std::string& path);
ChartImage read_ppm(const std::string& path);

// Optional PNG emitter (zlib-backed, 8-bit RGB, no interlacing).
std::vector<uint8_t> encode_png(const ChartImage& img);
void write_png(const ChartImage& img, const std::string& path);

std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes);
void write_file_bytes(const std::string& path, const std::string& bytes);

}  // namespace chartagent
