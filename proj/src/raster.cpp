#include "chartagent/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace chartagent::raster {

size_t BinaryMask::count() const {
    size_t n = 0;
    for (uint8_t b : bits) n += b;
    return n;
}

Hsv rgb_to_hsv(const Rgb& c) {
    const double r = c.r / 255.0, g = c.g / 255.0, b = c.b / 255.0;
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double d = mx - mn;
    Hsv out;
    out.v = mx;
    out.s = mx <= 0.0 ? 0.0 : d / mx;
    if (d <= 0.0) {
        out.h = 0.0;
    } else if (mx == r) {
        out.h = 60.0 * std::fmod((g - b) / d, 6.0);
    } else if (mx == g) {
        out.h = 60.0 * ((b - r) / d + 2.0);
    } else {
        out.h = 60.0 * ((r - g) / d + 4.0);
    }
    if (out.h < 0.0) out.h += 360.0;
    return out;
}

Rgb hsv_to_rgb(const Hsv& c) {
    const double h = std::fmod(std::fmod(c.h, 360.0) + 360.0, 360.0);
    const double s = std::clamp(c.s, 0.0, 1.0);
    const double v = std::clamp(c.v, 0.0, 1.0);
    const double cc = v * s;
    const double x = cc * (1.0 - std::fabs(std::fmod(h / 60.0, 2.0) - 1.0));
    const double m = v - cc;
    double r = 0, g = 0, b = 0;
    if (h < 60)       { r = cc; g = x; }
    else if (h < 120) { r = x; g = cc; }
    else if (h < 180) { g = cc; b = x; }
    else if (h < 240) { g = x; b = cc; }
    else if (h < 300) { r = x; b = cc; }
    else              { r = cc; b = x; }
    auto to_u8 = [&](double u) {
        return uint8_t(std::lround(std::clamp((u + m) * 255.0, 0.0, 255.0)));
    };
    return Rgb{to_u8(r), to_u8(g), to_u8(b)};
}

bool HueRange::contains(double h) const {
    if (lo <= hi) return h >= lo && h <= hi;
    return h >= lo || h <= hi;  // wrapped interval, e.g. [350, 10]
}

BinaryMask threshold_hsv(const ChartImage& image, const HueRange& h_range,
                         double s_min, double v_min, double s_max,
                         double v_max) {
    BinaryMask mask(image.width, image.height);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const Hsv hsv = rgb_to_hsv(image.get(x, y));
            const bool ok = h_range.contains(hsv.h) && hsv.s >= s_min &&
                            hsv.s <= s_max && hsv.v >= v_min && hsv.v <= v_max;
            mask.set(x, y, ok);
        }
    }
    return mask;
}

std::vector<Component> connected_components(const BinaryMask& mask,
                                            int connectivity) {
    if (connectivity != 4 && connectivity != 8)
        fail("BadConnectivity", "connectivity must be 4 or 8");
    const int w = mask.width, h = mask.height;
    std::vector<int> label(size_t(w) * h, -1);
    std::vector<Component> comps;

    static const int dx8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
    static const int dy8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
    static const int dx4[] = {0, -1, 1, 0};
    static const int dy4[] = {-1, 0, 0, 1};
    const int* dx = connectivity == 8 ? dx8 : dx4;
    const int* dy = connectivity == 8 ? dy8 : dy4;
    const int nd = connectivity;

    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            if (!mask.get(sx, sy) || label[size_t(sy) * w + sx] != -1) continue;
            const int id = int(comps.size());
            Component comp;
            int min_x = sx, min_y = sy, max_x = sx, max_y = sy;
            std::queue<PointI> frontier;
            frontier.push({sx, sy});
            label[size_t(sy) * w + sx] = id;
            while (!frontier.empty()) {
                const PointI p = frontier.front();
                frontier.pop();
                comp.pixels.push_back(p);
                min_x = std::min(min_x, p.x);
                min_y = std::min(min_y, p.y);
                max_x = std::max(max_x, p.x);
                max_y = std::max(max_y, p.y);
                for (int i = 0; i < nd; ++i) {
                    const int nx = p.x + dx[i], ny = p.y + dy[i];
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    if (!mask.get(nx, ny)) continue;
                    int& l = label[size_t(ny) * w + nx];
                    if (l != -1) continue;
                    l = id;
                    frontier.push({nx, ny});
                }
            }
            std::sort(comp.pixels.begin(), comp.pixels.end(),
                      [](const PointI& a, const PointI& b) {
                          return a.y != b.y ? a.y < b.y : a.x < b.x;
                      });
            comp.bbox = RectI{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
            comps.push_back(std::move(comp));
        }
    }
    std::sort(comps.begin(), comps.end(),
              [](const Component& a, const Component& b) {
                  if (a.bbox.y != b.bbox.y) return a.bbox.y < b.bbox.y;
                  return a.bbox.x < b.bbox.x;
              });
    return comps;
}

BinaryMask erode(const BinaryMask& mask, int radius) {
    BinaryMask out(mask.width, mask.height);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            bool keep = true;
            for (int dy = -radius; keep && dy <= radius; ++dy) {
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (!mask.in_bounds(nx, ny) || !mask.get(nx, ny)) {
                        keep = false;
                        break;
                    }
                }
            }
            out.set(x, y, keep);
        }
    }
    return out;
}

namespace {

// Neighbourhood p2..p9 clockwise from north, as in the Zhang-Suen paper.
inline void neighbours(const BinaryMask& m, int x, int y, int p[8]) {
    auto at = [&](int nx, int ny) {
        return m.in_bounds(nx, ny) && m.get(nx, ny) ? 1 : 0;
    };
    p[0] = at(x, y - 1);      // p2 N
    p[1] = at(x + 1, y - 1);  // p3 NE
    p[2] = at(x + 1, y);      // p4 E
    p[3] = at(x + 1, y + 1);  // p5 SE
    p[4] = at(x, y + 1);      // p6 S
    p[5] = at(x - 1, y + 1);  // p7 SW
    p[6] = at(x - 1, y);      // p8 W
    p[7] = at(x - 1, y - 1);  // p9 NW
}

inline int transitions(const int p[8]) {
    int a = 0;
    for (int i = 0; i < 8; ++i)
        if (p[i] == 0 && p[(i + 1) % 8] == 1) ++a;
    return a;
}

}  // namespace

BinaryMask skeletonize(const BinaryMask& mask) {
    BinaryMask cur = mask;
    bool changed = true;
    std::vector<PointI> to_clear;
    while (changed) {
        changed = false;
        for (int pass = 0; pass < 2; ++pass) {
            to_clear.clear();
            for (int y = 0; y < cur.height; ++y) {
                for (int x = 0; x < cur.width; ++x) {
                    if (!cur.get(x, y)) continue;
                    int p[8];
                    neighbours(cur, x, y, p);
                    const int b = p[0] + p[1] + p[2] + p[3] + p[4] + p[5] +
                                  p[6] + p[7];
                    if (b < 2 || b > 6) continue;
                    if (transitions(p) != 1) continue;
                    if (pass == 0) {
                        if (p[0] * p[2] * p[4] != 0) continue;  // N*E*S
                        if (p[2] * p[4] * p[6] != 0) continue;  // E*S*W
                    } else {
                        if (p[0] * p[2] * p[6] != 0) continue;  // N*E*W
                        if (p[0] * p[4] * p[6] != 0) continue;  // N*S*W
                    }
                    to_clear.push_back({x, y});
                }
            }
            if (!to_clear.empty()) changed = true;
            for (const PointI& p : to_clear) cur.set(p.x, p.y, false);
        }
    }
    // Zhang-Suen can leave 2x2 staircase blocks. Remove one corner of each
    // remaining block; deleting the top-left pixel of a full 2x2 never
    // disconnects it since the other three stay mutually 8-adjacent, and the
    // removed pixel's other neighbours remain adjacent to the row/column
    // mates that survive.
    for (int y = 0; y + 1 < cur.height; ++y) {
        for (int x = 0; x + 1 < cur.width; ++x) {
            if (cur.get(x, y) && cur.get(x + 1, y) && cur.get(x, y + 1) &&
                cur.get(x + 1, y + 1)) {
                int p[8];
                neighbours(cur, x, y, p);
                // Only delete when it does not split the component: exactly
                // one 0->1 transition around the pixel.
                if (transitions(p) == 1) cur.set(x, y, false);
                else cur.set(x + 1, y + 1, false);
            }
        }
    }
    return cur;
}

std::vector<ColorCluster> kmeans_colors(const std::vector<Rgb>& sample, int k,
                                        uint64_t rng_seed,
                                        std::vector<double>* inertia_trace,
                                        std::vector<int>* assignment_out) {
    if (k <= 0) fail("KTooLarge", "k must be positive");
    if (sample.empty()) fail("KTooLarge", "empty sample");

    // Distinct-color count bounds the number of non-empty clusters.
    {
        std::vector<uint32_t> keys;
        keys.reserve(sample.size());
        for (const Rgb& c : sample)
            keys.push_back(uint32_t(c.r) << 16 | uint32_t(c.g) << 8 | c.b);
        std::sort(keys.begin(), keys.end());
        keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
        if (size_t(k) > keys.size())
            fail("KTooLarge", "k=" + std::to_string(k) + " exceeds " +
                                  std::to_string(keys.size()) +
                                  " distinct colors");
    }

    const size_t n = sample.size();
    auto dist2 = [&](const Rgb& c, const double* centre) {
        const double dr = c.r - centre[0];
        const double dg = c.g - centre[1];
        const double db = c.b - centre[2];
        return dr * dr + dg * dg + db * db;
    };

    // k-means++: first centre uniform, then proportional to squared
    // distance. Ties and the roulette draw are deterministic from the seed.
    Rng rng(rng_seed);
    std::vector<std::array<double, 3>> centres;
    centres.reserve(k);
    {
        const size_t first = size_t(rng.uniform_int(0, int64_t(n) - 1));
        centres.push_back({double(sample[first].r), double(sample[first].g),
                           double(sample[first].b)});
        std::vector<double> d2(n);
        while (int(centres.size()) < k) {
            double total = 0.0;
            for (size_t i = 0; i < n; ++i) {
                double best = std::numeric_limits<double>::max();
                for (const auto& c : centres)
                    best = std::min(best, dist2(sample[i], c.data()));
                d2[i] = best;
                total += best;
            }
            size_t pick = 0;
            if (total <= 0.0) {
                // All points coincide with existing centres; take the lowest
                // index not already a centre colour.
                for (size_t i = 0; i < n; ++i)
                    if (d2[i] > 0.0) { pick = i; break; }
            } else {
                double target = rng.uniform() * total;
                for (size_t i = 0; i < n; ++i) {
                    target -= d2[i];
                    if (target <= 0.0) { pick = i; break; }
                    pick = i;
                }
            }
            centres.push_back({double(sample[pick].r), double(sample[pick].g),
                               double(sample[pick].b)});
        }
    }

    std::vector<int> assign(n, 0);
    std::vector<double> trace;
    const int max_iters = 100;
    const double tol = 1e-6;  // max centroid movement per iteration
    for (int iter = 0; iter < max_iters; ++iter) {
        double inertia = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            int best_j = 0;
            for (int j = 0; j < k; ++j) {
                const double d = dist2(sample[i], centres[j].data());
                if (d < best - 1e-12) {
                    best = d;
                    best_j = j;
                }
            }
            assign[i] = best_j;
            inertia += best;
        }
        trace.push_back(inertia);

        std::vector<std::array<double, 3>> sums(k, {0, 0, 0});
        std::vector<long long> counts(k, 0);
        for (size_t i = 0; i < n; ++i) {
            sums[assign[i]][0] += sample[i].r;
            sums[assign[i]][1] += sample[i].g;
            sums[assign[i]][2] += sample[i].b;
            ++counts[assign[i]];
        }
        double movement = 0.0;
        for (int j = 0; j < k; ++j) {
            std::array<double, 3> next;
            if (counts[j] == 0) {
                // Re-seed an empty cluster at the lowest-index farthest point.
                double best = -1.0;
                size_t best_i = 0;
                for (size_t i = 0; i < n; ++i) {
                    const double d = dist2(sample[i], centres[assign[i]].data());
                    if (d > best + 1e-12) {
                        best = d;
                        best_i = i;
                    }
                }
                next = {double(sample[best_i].r), double(sample[best_i].g),
                        double(sample[best_i].b)};
            } else {
                next = {sums[j][0] / counts[j], sums[j][1] / counts[j],
                        sums[j][2] / counts[j]};
            }
            const double dr = next[0] - centres[j][0];
            const double dg = next[1] - centres[j][1];
            const double db = next[2] - centres[j][2];
            movement = std::max(movement, std::sqrt(dr * dr + dg * dg + db * db));
            centres[j] = next;
        }
        if (movement <= tol) break;
    }

    std::vector<ColorCluster> out(k);
    std::vector<std::array<double, 3>> sums(k, {0, 0, 0});
    for (size_t i = 0; i < n; ++i) {
        ColorCluster& cl = out[assign[i]];
        ++cl.pixel_count;
        sums[assign[i]][0] += sample[i].r;
        sums[assign[i]][1] += sample[i].g;
        sums[assign[i]][2] += sample[i].b;
    }
    for (int j = 0; j < k; ++j) {
        ColorCluster& cl = out[j];
        if (cl.pixel_count > 0) {
            for (int c = 0; c < 3; ++c)
                cl.centroid[c] = sums[j][c] / double(cl.pixel_count);
        } else {
            for (int c = 0; c < 3; ++c) cl.centroid[c] = centres[j][c];
        }
        cl.share = double(cl.pixel_count) / double(n);
        cl.centroid_u8 = Rgb{uint8_t(std::lround(cl.centroid[0])),
                             uint8_t(std::lround(cl.centroid[1])),
                             uint8_t(std::lround(cl.centroid[2]))};
    }
    // Remap assignments to the sorted order so callers can use them.
    std::vector<int> order(k);
    for (int j = 0; j < k; ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return out[a].pixel_count > out[b].pixel_count;
    });
    std::vector<ColorCluster> sorted;
    sorted.reserve(k);
    std::vector<int> new_index(k);
    for (int j = 0; j < k; ++j) {
        new_index[order[j]] = j;
        sorted.push_back(out[order[j]]);
    }
    if (assignment_out) {
        assignment_out->resize(n);
        for (size_t i = 0; i < n; ++i) (*assignment_out)[i] = new_index[assign[i]];
    }
    if (inertia_trace) *inertia_trace = trace;
    return sorted;
}

}  // namespace chartagent::raster
