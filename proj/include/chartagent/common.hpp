#pragma once

#include <cstdint>
#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace chartagent {

struct Rgb {
    uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

inline double rgb_distance(const Rgb& a, const Rgb& b) {
    const double dr = double(a.r) - double(b.r);
    const double dg = double(a.g) - double(b.g);
    const double db = double(a.b) - double(b.b);
    return dr * dr + dg * dg + db * db;
}

struct PointI {
    int x = 0, y = 0;
    bool operator==(const PointI&) const = default;
};

struct PointD {
    double x = 0.0, y = 0.0;
};

// Half-open pixel rectangle: x in [x, x+w), y in [y, y+h).
struct RectI {
    int x = 0, y = 0, w = 0, h = 0;
    bool operator==(const RectI&) const = default;

    int right() const { return x + w; }
    int bottom() const { return y + h; }
    long long area() const { return (long long)w * h; }
    bool empty() const { return w <= 0 || h <= 0; }
    bool contains(int px, int py) const {
        return px >= x && px < right() && py >= y && py < bottom();
    }
    bool contains(const RectI& o) const {
        return o.x >= x && o.y >= y && o.right() <= right() && o.bottom() <= bottom();
    }
};

inline double rect_iou(const RectI& a, const RectI& b) {
    const int ix = std::max(a.x, b.x);
    const int iy = std::max(a.y, b.y);
    const int ir = std::min(a.right(), b.right());
    const int ib = std::min(a.bottom(), b.bottom());
    const long long inter = (ir > ix && ib > iy) ? (long long)(ir - ix) * (ib - iy) : 0;
    const long long uni = a.area() + b.area() - inter;
    return uni > 0 ? double(inter) / double(uni) : 0.0;
}

enum class ChartType { bar, line, pie, donut, scatter, unknown };

std::string to_string(ChartType t);
ChartType chart_type_from_string(const std::string& s);

// Error with a stable machine-readable code (e.g. "UnsupportedChartType").
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(std::string code, const std::string& msg) {
    throw Error(std::move(code), msg);
}

// Deterministic RNG wrapper. mt19937_64 output is standardized; the
// derived distributions below avoid the implementation-defined std::
// distribution adapters so streams are reproducible across platforms.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inclusive bounds; modulo bias is irrelevant at the ranges used here.
    int uniform_int(int lo, int hi) {
        return lo + int(next_u64() % uint64_t(hi - lo + 1));
    }

    double gaussian();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = size_t(next_u64() % i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

uint64_t mix_seed(uint64_t a, uint64_t b);

// A pixel-space line segment, endpoints inclusive.
struct Segment {
    PointI a;
    PointI b;
    bool operator==(const Segment&) const = default;
};

// Functional role of a piece of chart text.
enum class TextRole { title, tick_label, legend_label, value_label };
std::string to_string(TextRole r);
TextRole text_role_from_string(const std::string& s);

}  // namespace chartagent
