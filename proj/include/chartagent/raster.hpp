#pragma once

#include <cstdint>
#include <vector>

#include "chartagent/common.hpp"
#include "chartagent/image.hpp"

namespace chartagent::raster {

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> bits;  // row-major, 0/1

    BinaryMask() = default;
    BinaryMask(int w, int h) : width(w), height(h), bits(size_t(w) * h, 0) {}

    bool get(int x, int y) const { return bits[size_t(y) * width + x] != 0; }
    void set(int x, int y, bool v) { bits[size_t(y) * width + x] = v ? 1 : 0; }
    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    size_t count() const;

    bool operator==(const BinaryMask&) const = default;
};

struct Hsv {
    double h = 0.0;  // [0, 360)
    double s = 0.0;  // [0, 1]
    double v = 0.0;  // [0, 1]
};

// Standard hexcone conversion.
Hsv rgb_to_hsv(const Rgb& c);
Rgb hsv_to_rgb(const Hsv& c);

// Inclusive hue interval that may wrap past 360 (e.g. [350, 10]).
struct HueRange {
    double lo = 0.0;
    double hi = 360.0;
    bool contains(double h) const;
};

BinaryMask threshold_hsv(const ChartImage& image, const HueRange& h_range,
                         double s_min, double v_min,
                         double s_max = 1.0, double v_max = 1.0);

struct Component {
    std::vector<PointI> pixels;
    RectI bbox;
};

// Components ordered by (bbox.y, bbox.x); pixels in raster order.
std::vector<Component> connected_components(const BinaryMask& mask,
                                            int connectivity = 8);

// Morphological erosion with a (2r+1)-square structuring element.
BinaryMask erode(const BinaryMask& mask, int radius = 1);

// Zhang-Suen two-subiteration thinning plus a staircase cleanup pass so
// no 2x2 all-true block survives. Output is a subset of the input and
// preserves 8-connectivity of each component.
BinaryMask skeletonize(const BinaryMask& mask);

struct ColorCluster {
    Rgb centroid_u8;            // rounded centroid
    double centroid[3] = {0, 0, 0};
    long long pixel_count = 0;
    double share = 0.0;  // fraction of the sample, all clusters sum to 1
};

// Seeded k-means++ in RGB with a fixed iteration cap; clusters sorted by
// descending share. Throws KTooLarge if k exceeds the number of distinct
// colors.
std::vector<ColorCluster> kmeans_colors(const std::vector<Rgb>& sample, int k,
                                        uint64_t rng_seed,
                                        std::vector<double>* inertia_trace = nullptr,
                                        std::vector<int>* assignment_out = nullptr);

}  // namespace chartagent::raster
