#include "chartagent/perception.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <queue>

namespace chartagent::perception {

std::string to_string(AxisKind a) { return a == AxisKind::x ? "x" : "y"; }

std::vector<TickMark> KeyElements::ticks_on(AxisKind axis) const {
    std::vector<TickMark> out;
    for (const TickMark& t : ticks)
        if (t.axis == axis) out.push_back(t);
    return out;
}

// ---------------------------------------------------------------------------
// pixel classification
//
// "Darkish" covers ink: near-black pixels plus the desaturated grays that
// soft edge blending produces around 1-px strokes. "Colored" covers series
// fills: saturated, clearly away from both ink and background.

namespace {

raster::BinaryMask darkish_mask(const ChartImage& img) {
    raster::BinaryMask m(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (is_darkish(img.get(x, y))) m.set(x, y, true);
    return m;
}

struct Run {
    int start = 0;
    int length = 0;
};

// Longest contiguous true-run along one column of the mask.
Run longest_column_run(const raster::BinaryMask& m, int x) {
    Run best, cur;
    for (int y = 0; y <= m.height; ++y) {
        if (y < m.height && m.get(x, y)) {
            if (cur.length == 0) cur.start = y;
            ++cur.length;
        } else {
            if (cur.length > best.length) best = cur;
            cur.length = 0;
        }
    }
    return best;
}

Run longest_row_run(const raster::BinaryMask& m, int y) {
    Run best, cur;
    for (int x = 0; x <= m.width; ++x) {
        if (x < m.width && m.get(x, y)) {
            if (cur.length == 0) cur.start = x;
            ++cur.length;
        } else {
            if (cur.length > best.length) best = cur;
            cur.length = 0;
        }
    }
    return best;
}

// Bounding box of darkish pixels inside `roi`, if any.
std::optional<RectI> darkish_bbox(const ChartImage& img, const RectI& roi) {
    int x0 = 1 << 30, y0 = 1 << 30, x1 = -1, y1 = -1;
    for (int y = std::max(0, roi.y); y < std::min(img.height, roi.bottom()); ++y)
        for (int x = std::max(0, roi.x); x < std::min(img.width, roi.right()); ++x)
            if (is_darkish(img.get(x, y))) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    if (x1 < 0) return std::nullopt;
    return RectI{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

// Connected regions of colored pixels whose color stays close to the seed;
// the tolerance keeps touching bars of different series apart.
struct ColorRegion {
    RectI bbox;
    int pixel_count = 0;
    Rgb seed_color;
};

std::vector<ColorRegion> color_regions(const ChartImage& img, const RectI& roi,
                                       double tolerance = 40.0) {
    const RectI clip{std::max(0, roi.x), std::max(0, roi.y),
                     std::min(img.width, roi.right()) - std::max(0, roi.x),
                     std::min(img.height, roi.bottom()) - std::max(0, roi.y)};
    if (clip.w <= 0 || clip.h <= 0) return {};
    std::vector<int> label(size_t(clip.w) * clip.h, -1);
    auto idx = [&](int x, int y) {
        return size_t(y - clip.y) * clip.w + (x - clip.x);
    };
    std::vector<ColorRegion> regions;
    for (int sy = clip.y; sy < clip.bottom(); ++sy) {
        for (int sx = clip.x; sx < clip.right(); ++sx) {
            if (label[idx(sx, sy)] != -1 || !is_colored(img.get(sx, sy)))
                continue;
            ColorRegion region;
            region.seed_color = img.get(sx, sy);
            int x0 = sx, y0 = sy, x1 = sx, y1 = sy;
            std::queue<PointI> q;
            q.push({sx, sy});
            label[idx(sx, sy)] = int(regions.size());
            while (!q.empty()) {
                const PointI p = q.front();
                q.pop();
                ++region.pixel_count;
                x0 = std::min(x0, p.x);
                y0 = std::min(y0, p.y);
                x1 = std::max(x1, p.x);
                y1 = std::max(y1, p.y);
                static const int d8[8][2] = {{1, 0},  {-1, 0}, {0, 1},
                                             {0, -1}, {1, 1},  {1, -1},
                                             {-1, 1}, {-1, -1}};
                for (const auto& d : d8) {
                    const int nx = p.x + d[0], ny = p.y + d[1];
                    if (nx < clip.x || nx >= clip.right() || ny < clip.y ||
                        ny >= clip.bottom())
                        continue;
                    if (label[idx(nx, ny)] != -1) continue;
                    const Rgb c = img.get(nx, ny);
                    if (!is_colored(c) ||
                        rgb_distance(c, region.seed_color) > tolerance)
                        continue;
                    label[idx(nx, ny)] = int(regions.size());
                    q.push({nx, ny});
                }
            }
            region.bbox = RectI{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
            regions.push_back(region);
        }
    }
    return regions;
}

}  // namespace

// ---------------------------------------------------------------------------
// key-element detection

KeyElements detect_key_elements(const ChartImage& image) {
    if (image.width <= 0 || image.height <= 0)
        fail("NoAxesFound", "empty image");
    const raster::BinaryMask dark = darkish_mask(image);

    // Axes: the longest dark vertical and horizontal runs.
    int axis_col = -1, axis_row = -1;
    Run col_run, row_run;
    for (int x = 0; x < image.width; ++x) {
        const Run r = longest_column_run(dark, x);
        if (r.length > col_run.length) {
            col_run = r;
            axis_col = x;
        }
    }
    for (int y = 0; y < image.height; ++y) {
        const Run r = longest_row_run(dark, y);
        if (r.length > row_run.length) {
            row_run = r;
            axis_row = y;
        }
    }
    const int min_axis_px = 40;
    if (col_run.length < min_axis_px || row_run.length < min_axis_px)
        fail("NoAxesFound", "no axis-length dark runs in the image");

    KeyElements out;
    const int plot_x = axis_col + 1;
    const int plot_y = col_run.start;
    const int plot_w = row_run.start + row_run.length - 1 - axis_col;
    const int plot_h = axis_row - plot_y;
    if (plot_w <= 0 || plot_h <= 0)
        fail("NoAxesFound", "axes do not frame a plot area");
    out.plot_area = RectI{plot_x, plot_y, plot_w, plot_h};
    out.y_axis = Segment{{axis_col, plot_y}, {axis_col, axis_row}};
    out.x_axis = Segment{{axis_col, axis_row}, {axis_col + plot_w, axis_row}};

    // Value ticks: 4-px strokes jutting left from the y axis.
    for (int y = plot_y; y <= axis_row; ++y) {
        bool stroke = axis_col >= 4;
        for (int k = 1; stroke && k <= 4; ++k)
            stroke = dark.get(axis_col - k, y);
        if (!stroke) continue;
        TickMark tick;
        tick.axis = AxisKind::y;
        tick.pixel = {axis_col, y};
        tick.label_box = darkish_bbox(
            image, RectI{0, y - 4, std::max(0, axis_col - 6), 9});
        out.ticks.push_back(tick);
    }

    // Category ticks: 4-px strokes jutting down from the x axis.
    std::vector<int> xtick_cols;
    for (int x = plot_x; x < plot_x + plot_w; ++x) {
        bool stroke = axis_row + 4 < image.height;
        for (int k = 1; stroke && k <= 4; ++k)
            stroke = dark.get(x, axis_row + k);
        if (stroke) xtick_cols.push_back(x);
    }
    for (size_t i = 0; i < xtick_cols.size(); ++i) {
        const int cx = xtick_cols[i];
        // Label search window bounded by the midlines to neighboring ticks.
        const int lo = i == 0 ? std::max(0, cx - 40)
                              : (xtick_cols[i - 1] + cx) / 2 + 1;
        const int hi = i + 1 == xtick_cols.size()
                           ? std::min(image.width, cx + 40)
                           : (cx + xtick_cols[i + 1]) / 2;
        TickMark tick;
        tick.axis = AxisKind::x;
        tick.pixel = {cx, axis_row};
        tick.label_box = darkish_bbox(
            image, RectI{lo, axis_row + 6, hi - lo, 11});
        out.ticks.push_back(tick);
    }

    // Legend: small uniform color patches right of the plot with text beside.
    const RectI legend_roi{plot_x + plot_w + 2, plot_y,
                           image.width - (plot_x + plot_w + 2), plot_h};
    for (const ColorRegion& r : color_regions(image, legend_roi)) {
        if (r.bbox.w < 6 || r.bbox.w > 16 || r.bbox.h < 6 || r.bbox.h > 16)
            continue;
        if (r.pixel_count < int(0.8 * r.bbox.w * r.bbox.h)) continue;
        LegendEntry entry;
        entry.swatch_box = r.bbox;
        entry.swatch_color = image.get(r.bbox.x + r.bbox.w / 2,
                                       r.bbox.y + r.bbox.h / 2);
        const auto label = darkish_bbox(
            image, RectI{r.bbox.right() + 2, r.bbox.y - 2,
                         image.width - r.bbox.right() - 2, r.bbox.h + 4});
        entry.label_box = label.value_or(RectI{r.bbox.right() + 2, r.bbox.y, 0, 0});
        out.legend_entries.push_back(entry);
    }
    std::sort(out.legend_entries.begin(), out.legend_entries.end(),
              [](const LegendEntry& a, const LegendEntry& b) {
                  return a.swatch_box.y < b.swatch_box.y;
              });

    // Bars: solid colored regions anchored on the baseline.
    for (const ColorRegion& r : color_regions(image, out.plot_area)) {
        if (r.bbox.w < 3 || r.bbox.h < 3) continue;
        if (r.bbox.bottom() < axis_row - 2) continue;
        if (r.pixel_count < int(0.85 * r.bbox.w * r.bbox.h)) continue;
        out.bars.push_back(r.bbox);
    }
    std::sort(out.bars.begin(), out.bars.end(),
              [](const RectI& a, const RectI& b) {
                  return a.x != b.x ? a.x < b.x : a.y < b.y;
              });

    out.confidence["plot_area"] = 1.0;
    out.confidence["axes"] = 1.0;
    out.confidence["ticks"] = out.ticks.size() >= 2 ? 1.0 : 0.5;
    if (!out.legend_entries.empty()) out.confidence["legend"] = 1.0;
    if (!out.bars.empty()) out.confidence["bars"] = 1.0;
    return out;
}

// ---------------------------------------------------------------------------
// OCR

GroundTruthOcr::GroundTruthOcr(std::vector<TextItem> items, OcrNoise noise)
    : configured_(true), items_(std::move(items)), noise_(noise) {}

GroundTruthOcr GroundTruthOcr::from_truth(const synthgen::GroundTruth& truth,
                                          OcrNoise noise) {
    std::vector<TextItem> items;
    for (const synthgen::GtTextItem& t : truth.text_items)
        items.push_back({t.text, t.box, 1.0, t.role});
    return GroundTruthOcr(std::move(items), noise);
}

GroundTruthOcr GroundTruthOcr::from_sidecar(const std::string& path,
                                            OcrNoise noise) {
    return from_truth(synthgen::load_sidecar(path).truth, noise);
}

std::vector<TextItem> GroundTruthOcr::read(const ChartImage& image,
                                           const std::optional<RectI>& region) {
    if (!configured_)
        fail("BackendUnavailable", "ground-truth backend has no text data");
    // Seeded per call: repeated reads see identical corruption.
    Rng rng(mix_seed(noise_.seed, 0x0c2));
    std::vector<TextItem> out;
    for (const TextItem& src : items_) {
        TextItem item = src;
        if (noise_.p_drop > 0.0) {
            std::string kept;
            for (char ch : item.text)
                if (rng.uniform() >= noise_.p_drop) kept.push_back(ch);
            item.text = kept;
        }
        if (noise_.sigma_px > 0.0) {
            const auto jitter = [&] {
                return int(std::lround(rng.gaussian() * noise_.sigma_px));
            };
            int x0 = item.box.x + jitter();
            int y0 = item.box.y + jitter();
            int x1 = item.box.right() + jitter();
            int y1 = item.box.bottom() + jitter();
            x0 = std::clamp(x0, 0, image.width - 1);
            y0 = std::clamp(y0, 0, image.height - 1);
            x1 = std::clamp(x1, x0 + 1, image.width);
            y1 = std::clamp(y1, y0 + 1, image.height);
            item.box = RectI{x0, y0, x1 - x0, y1 - y0};
        }
        if (region) {
            const RectI r = *region;
            const bool overlaps = item.box.x < r.right() &&
                                  r.x < item.box.right() &&
                                  item.box.y < r.bottom() &&
                                  r.y < item.box.bottom();
            if (!overlaps) continue;
        }
        out.push_back(std::move(item));
    }
    return out;
}

std::vector<TextItem> read_text(const ChartImage& image, OcrBackend& backend,
                                const std::optional<RectI>& region) {
    return backend.read(image, region);
}

std::optional<double> parse_numeric_label(const std::string& text) {
    // Trim, strip thousands separators, honor a trailing percent sign.
    size_t b = text.find_first_not_of(" \t");
    size_t e = text.find_last_not_of(" \t");
    if (b == std::string::npos) return std::nullopt;
    std::string s = text.substr(b, e - b + 1);
    bool percent = false;
    if (!s.empty() && s.back() == '%') {
        percent = true;
        s.pop_back();
        while (!s.empty() && s.back() == ' ') s.pop_back();
    }
    std::string cleaned;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == ',') {
            // Valid only as a grouping separator: a digit before, exactly
            // three digits after.
            if (i == 0 || !std::isdigit(uint8_t(s[i - 1])))
                return std::nullopt;
            for (size_t k = 1; k <= 3; ++k)
                if (i + k >= s.size() || !std::isdigit(uint8_t(s[i + k])))
                    return std::nullopt;
            continue;
        }
        cleaned.push_back(s[i]);
    }
    if (cleaned.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(cleaned.c_str(), &end);
    if (end != cleaned.c_str() + cleaned.size()) return std::nullopt;
    if (!std::isfinite(v)) return std::nullopt;
    return percent ? v / 100.0 : v;
}

// ---------------------------------------------------------------------------
// calibration

Calibration calibrate_axis(const std::vector<std::pair<double, double>>& anchors,
                           AxisKind axis) {
    if (anchors.size() < 2)
        fail("InsufficientAnchors",
             "axis calibration needs at least 2 anchors, got " +
                 std::to_string(anchors.size()));
    const double n = double(anchors.size());
    double mp = 0, mv = 0;
    for (const auto& [p, v] : anchors) {
        mp += p;
        mv += v;
    }
    mp /= n;
    mv /= n;
    double sxx = 0, sxy = 0;
    for (const auto& [p, v] : anchors) {
        sxx += (p - mp) * (p - mp);
        sxy += (p - mp) * (v - mv);
    }
    if (sxx < 1e-12)
        fail("DegenerateAnchors", "anchors share one pixel position");
    Calibration cal;
    cal.alpha = sxy / sxx;
    cal.beta = mv - cal.alpha * mp;
    cal.axis = axis;
    cal.anchor_count = int(anchors.size());
    if (!std::isfinite(cal.alpha) || cal.alpha == 0.0)
        fail("DegenerateAnchors", "anchors span no value range");
    double ss = 0;
    for (const auto& [p, v] : anchors) {
        const double r = v - cal.value_at(p);
        ss += r * r;
    }
    cal.residual_rms = std::sqrt(ss / n);
    return cal;
}

// ---------------------------------------------------------------------------
// curve extraction

namespace {

// Least-squares line y = slope*x + intercept over the points whose x lies in
// [x_lo, x_hi]. Returns false when the window holds too few points to fit.
bool fit_line(const std::vector<PointD>& pts, double x_lo, double x_hi,
              double* slope, double* intercept) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    auto it = std::lower_bound(
        pts.begin(), pts.end(), x_lo,
        [](const PointD& p, double x) { return p.x < x; });
    for (; it != pts.end() && it->x <= x_hi; ++it) {
        sx += it->x;
        sy += it->y;
        sxx += it->x * it->x;
        sxy += it->x * it->y;
        ++n;
    }
    if (n < 3) return false;
    const double det = n * sxx - sx * sx;
    if (std::fabs(det) < 1e-9) return false;
    *slope = (n * sxy - sx * sy) / det;
    *intercept = (sy - *slope * sx) / n;
    return true;
}

// Thinning erodes the tip of a sharp turn in a thick stroke by a few pixels,
// leaving a clipped plateau where the polyline actually has a vertex. The
// branches on either side are straight, so refit them just outside the
// damaged zone and push the recorded rows back out to the branch lines.
void restore_clipped_vertices(std::vector<PointD>& pts) {
    if (pts.size() < 12) return;
    const double kMinSlope = 0.3;  // px per column; shallower turns survive thinning
    const double kMaxShift = 10.0;  // larger corrections mean the fit went wrong
    std::vector<PointD> fixed = pts;
    for (size_t i = 2; i + 2 < pts.size(); ++i) {
        const double v = pts[i].y;
        const bool weak_max = v >= pts[i - 1].y && v >= pts[i + 1].y;
        const bool weak_min = v <= pts[i - 1].y && v <= pts[i + 1].y;
        if (!weak_max && !weak_min) continue;
        double sl, bl, sr, br;
        if (!fit_line(pts, pts[i].x - 9, pts[i].x - 4, &sl, &bl)) continue;
        if (!fit_line(pts, pts[i].x + 4, pts[i].x + 9, &sr, &br)) continue;
        const bool valley = weak_max && sl >= kMinSlope && sr <= -kMinSlope;
        const bool peak = weak_min && sl <= -kMinSlope && sr >= kMinSlope;
        if (!valley && !peak) continue;
        const double x_star = (br - bl) / (sl - sr);
        if (std::fabs(x_star - pts[i].x) > 3.0) continue;
        const size_t k_lo = i >= 5 ? i - 5 : 0;
        const size_t k_hi = std::min(pts.size(), i + 6);
        for (size_t k = k_lo; k < k_hi; ++k) {
            if (std::fabs(pts[k].x - x_star) > 3.5) continue;
            const double left = sl * pts[k].x + bl;
            const double right = sr * pts[k].x + br;
            const double cand =
                valley ? std::min(left, right) : std::max(left, right);
            const bool outward = valley ? cand > fixed[k].y : cand < fixed[k].y;
            if (!outward || std::fabs(cand - fixed[k].y) > kMaxShift) continue;
            fixed[k].y = cand;
        }
    }
    pts = std::move(fixed);
}

}  // namespace

CurveSkeleton extract_curve_skeleton(const ChartImage& image, Rgb series_color,
                                     const RectI& plot_area) {
    const raster::Hsv want = raster::rgb_to_hsv(series_color);
    const double kHueWindow = 14.0;
    const RectI roi{std::max(0, plot_area.x), std::max(0, plot_area.y),
                    std::min(image.width, plot_area.right()) -
                        std::max(0, plot_area.x),
                    std::min(image.height, plot_area.bottom()) -
                        std::max(0, plot_area.y)};
    if (roi.w <= 0 || roi.h <= 0)
        fail("SeriesNotFound", "plot area lies outside the image");

    raster::BinaryMask mask(roi.w, roi.h);
    size_t hits = 0;
    for (int y = 0; y < roi.h; ++y)
        for (int x = 0; x < roi.w; ++x) {
            const Rgb c = image.get(roi.x + x, roi.y + y);
            if (!is_colored(c)) continue;
            const raster::Hsv h = raster::rgb_to_hsv(c);
            if (h.s < 0.25 || h.v < 0.25) continue;
            double dh = std::fabs(h.h - want.h);
            dh = std::min(dh, 360.0 - dh);
            if (dh > kHueWindow) continue;
            mask.set(x, y, true);
            ++hits;
        }
    if (hits == 0)
        fail("SeriesNotFound",
             "no pixels in the plot area match the series color");

    const raster::BinaryMask skel = raster::skeletonize(mask);
    CurveSkeleton out;
    out.series_color = series_color;
    for (int x = 0; x < roi.w; ++x) {
        std::vector<int> rows;
        for (int y = 0; y < roi.h; ++y)
            if (skel.get(x, y)) rows.push_back(y);
        if (rows.empty()) continue;
        const size_t n = rows.size();
        const double median =
            n % 2 ? double(rows[n / 2])
                  : (rows[n / 2 - 1] + rows[n / 2]) / 2.0;
        out.points.push_back({double(roi.x + x), roi.y + median});
    }
    if (out.points.empty())
        fail("SeriesNotFound", "series mask thinned to nothing");
    restore_clipped_vertices(out.points);
    return out;
}

// ---------------------------------------------------------------------------
// auxiliary-line readings

namespace {

constexpr Rgb kAuxColor{255, 0, 255};

ChartImage draw_aux_overlay(const ChartImage& base, int cross_x, int cross_y,
                            int drop_to_y) {
    ChartImage overlay = base;
    // Horizontal projection toward the value axis.
    for (int x = 0; x <= cross_x; ++x)
        overlay.set_clipped(x, cross_y, kAuxColor);
    // Vertical line through the target anchor.
    const int y_end = std::max(cross_y, drop_to_y);
    for (int y = cross_y; y <= y_end; ++y)
        overlay.set_clipped(cross_x, y, kAuxColor);
    // Emphasize the intersection.
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
            overlay.set_clipped(cross_x + dx, cross_y + dy, kAuxColor);
    return overlay;
}

NumericReading make_reading(double pixel_y, const Calibration& cal,
                            const ChartImage& base, int cross_x, int drop_to_y,
                            std::optional<double> tick_step) {
    NumericReading reading;
    reading.value = cal.value_at(pixel_y);
    reading.overlay = draw_aux_overlay(base, cross_x,
                                       int(std::lround(pixel_y)), drop_to_y);
    if (tick_step && *tick_step != 0.0)
        reading.tick_units = reading.value / *tick_step;
    return reading;
}

}  // namespace

NumericReading read_via_auxline(const CurveSkeleton& skeleton,
                                const Calibration& calibration, double target_x,
                                const ChartImage& base,
                                std::optional<double> tick_step) {
    const auto& pts = skeleton.points;
    if (pts.empty()) fail("NoIntersection", "skeleton is empty");
    if (target_x < pts.front().x || target_x > pts.back().x)
        fail("NoIntersection",
             "target x " + std::to_string(target_x) +
                 " lies outside the skeleton extent");
    // Rightmost point with x <= target, then interpolate to its successor.
    size_t i = 0;
    for (size_t k = 1; k < pts.size() && pts[k].x <= target_x; ++k) i = k;
    double y = pts[i].y;
    if (pts[i].x < target_x && i + 1 < pts.size()) {
        const double t = (target_x - pts[i].x) / (pts[i + 1].x - pts[i].x);
        y = pts[i].y + t * (pts[i + 1].y - pts[i].y);
    }
    return make_reading(y, calibration, base, int(std::lround(target_x)),
                        base.height - 1, tick_step);
}

NumericReading read_via_auxline(const KeyElements& elements,
                                const Calibration& calibration, int bar_index,
                                const ChartImage& base,
                                std::optional<double> tick_step) {
    if (bar_index < 0 || size_t(bar_index) >= elements.bars.size())
        fail("NoIntersection",
             "bar index " + std::to_string(bar_index) + " out of range");
    const RectI& bar = elements.bars[size_t(bar_index)];
    return make_reading(double(bar.y), calibration, base,
                        bar.x + bar.w / 2, elements.x_axis.a.y, tick_step);
}

// ---------------------------------------------------------------------------
// sector segmentation

std::optional<CircularRegion> find_circular_region(const ChartImage& image) {
    raster::BinaryMask colored(image.width, image.height);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            if (is_colored(image.get(x, y))) colored.set(x, y, true);

    const auto components = raster::connected_components(colored, 8);
    const raster::Component* body = nullptr;
    for (const raster::Component& c : components)
        if (!body || c.pixels.size() > body->pixels.size()) body = &c;
    if (!body || body->pixels.size() < 500) return std::nullopt;

    double cx = 0, cy = 0;
    for (const PointI& p : body->pixels) {
        cx += p.x + 0.5;
        cy += p.y + 0.5;
    }
    cx /= double(body->pixels.size());
    cy /= double(body->pixels.size());
    double outer = 0;
    for (const PointI& p : body->pixels)
        outer = std::max(outer, std::hypot(p.x + 0.5 - cx, p.y + 0.5 - cy));
    const double fill =
        double(body->pixels.size()) / (3.14159265358979323846 * outer * outer);
    if (outer < 10 || fill < 0.5) return std::nullopt;
    return CircularRegion{{cx, cy}, outer};
}

std::vector<SectorEstimate> segment_sectors(const ChartImage& image,
                                            ChartType chart_type,
                                            uint64_t rng_seed) {
    if (chart_type != ChartType::pie && chart_type != ChartType::donut)
        fail("UnsupportedChartType",
             "sector segmentation applies to pie and donut charts");

    const auto circle = find_circular_region(image);
    if (!circle)
        fail("NoCircularRegion", "no disk-like colored region in the image");
    const double cx = circle->center.x;
    const double cy = circle->center.y;
    const double outer = circle->outer;

    raster::BinaryMask colored(image.width, image.height);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            if (is_colored(image.get(x, y))) colored.set(x, y, true);

    // Inner radius from the radial occupancy histogram: the annulus of a
    // donut leaves the inner bins empty; a pie fills them from bin zero.
    double inner = 0.0;
    if (chart_type == ChartType::donut) {
        const int bins = int(std::ceil(outer));
        std::vector<int> occupied(bins, 0), total(bins, 0);
        for (int y = int(cy - outer); y <= int(cy + outer); ++y)
            for (int x = int(cx - outer); x <= int(cx + outer); ++x) {
                if (!image.in_bounds(x, y)) continue;
                const double d = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
                if (d >= outer) continue;
                ++total[int(d)];
                if (colored.get(x, y)) ++occupied[int(d)];
            }
        for (int b = 0; b < bins; ++b)
            if (total[b] > 0 && occupied[b] >= total[b] / 2) {
                inner = b;
                break;
            }
    }

    // Region mask (disk / annulus), eroded one pixel to shed the rim.
    raster::BinaryMask region(image.width, image.height);
    for (int y = int(cy - outer) - 1; y <= int(cy + outer) + 1; ++y)
        for (int x = int(cx - outer) - 1; x <= int(cx + outer) + 1; ++x) {
            if (!image.in_bounds(x, y)) continue;
            const double d = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
            if (d <= outer && d >= inner) region.set(x, y, true);
        }
    region = raster::erode(region, 1);

    std::vector<Rgb> sample;
    std::vector<PointI> positions;
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) {
            if (!region.get(x, y) || !colored.get(x, y)) continue;
            sample.push_back(image.get(x, y));
            positions.push_back({x, y});
        }
    if (sample.empty())
        fail("NoCircularRegion", "region mask contains no colored pixels");

    // k: one cluster per legend swatch when a legend is present; otherwise
    // the inertia elbow over k in [2, 8].
    int k = 0;
    for (const raster::Component& c : raster::connected_components(colored, 8)) {
        const RectI& b = c.bbox;
        if (b.w < 6 || b.w > 16 || b.h < 6 || b.h > 16) continue;
        if (c.pixels.size() < size_t(0.8 * b.w * b.h)) continue;
        const double d = std::hypot(b.x + b.w / 2.0 - cx, b.y + b.h / 2.0 - cy);
        if (d > outer + 2) ++k;
    }

    size_t distinct = 0;
    {
        std::vector<uint32_t> uniq;
        uniq.reserve(sample.size());
        for (const Rgb& c : sample)
            uniq.push_back(uint32_t(c.r) << 16 | uint32_t(c.g) << 8 | c.b);
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        distinct = uniq.size();
    }
    if (k == 0) {
        if (distinct <= 1) {
            k = 1;
        } else {
            // Inertia scan over k: an exact fit (hard-edged charts) shows up
            // as near-zero inertia; otherwise take the elbow, the largest
            // second difference.
            const int k_hi = int(std::min<size_t>(8, distinct));
            std::vector<double> inertia(size_t(k_hi) + 1, 0.0);
            for (int kk = 1; kk <= k_hi; ++kk) {
                std::vector<double> trace;
                raster::kmeans_colors(sample, kk, mix_seed(rng_seed, kk),
                                      &trace);
                inertia[size_t(kk)] = trace.empty() ? 0.0 : trace.back();
                if (kk >= 2 && inertia[size_t(kk)] <=
                                   1e-6 * double(sample.size())) {
                    k = kk;
                    break;
                }
            }
            if (k == 0) {
                double best = -1;
                for (int kk = 2; kk < k_hi; ++kk) {
                    const double second = inertia[size_t(kk) - 1] -
                                          2 * inertia[size_t(kk)] +
                                          inertia[size_t(kk) + 1];
                    if (second > best) {
                        best = second;
                        k = kk;
                    }
                }
            }
            if (k == 0) fail("KSelectionFailed",
                             "inertia scan found no usable k");
        }
    }
    k = int(std::min<size_t>(size_t(k), distinct));

    std::vector<int> assignment;
    const auto clusters =
        raster::kmeans_colors(sample, k, mix_seed(rng_seed, 0x5ec), nullptr,
                              &assignment);

    std::vector<SectorEstimate> out;
    for (size_t ci = 0; ci < clusters.size(); ++ci) {
        if (clusters[ci].share < 0.01) continue;  // quantization debris
        SectorEstimate est;
        est.cluster = clusters[ci];
        est.proportion = clusters[ci].share;
        est.implied_angle = 360.0 * est.proportion;
        raster::BinaryMask m(image.width, image.height);
        for (size_t i = 0; i < positions.size(); ++i)
            if (assignment[i] == int(ci))
                m.set(positions[i].x, positions[i].y, true);
        est.components = int(raster::connected_components(m, 8).size());
        out.push_back(std::move(est));
    }
    return out;
}

// ---------------------------------------------------------------------------
// legend matching

LegendAssignment match_colors_to_legend(const std::vector<LegendEntry>& legend,
                                        const std::vector<SeriesRegion>& regions) {
    if (legend.empty() || regions.empty())
        fail("LegendNotFound", "legend matching needs both sides nonempty");
    const int nl = int(legend.size());
    const int nr = int(regions.size());
    if (nr > 20)
        fail("CountMismatch", "too many candidate regions to assign");

    std::vector<std::vector<double>> cost;
    cost.assign(size_t(nl), std::vector<double>(size_t(nr), 0.0));
    for (int i = 0; i < nl; ++i)
        for (int j = 0; j < nr; ++j)
            cost[size_t(i)][size_t(j)] =
                rgb_distance(legend[size_t(i)].swatch_color,
                             regions[size_t(j)].mean_color);

    // Exact assignment of min(nl, nr) pairs by bitmask DP over regions.
    const int need = std::min(nl, nr);
    const int full = 1 << nr;
    const double kInf = 1e18;
    // dp[i][mask]: best cost using legends i.. with regions in `mask` used.
    std::vector<std::vector<double>> dp;
    dp.assign(size_t(nl) + 1, std::vector<double>(size_t(full), kInf));
    for (int mask = 0; mask < full; ++mask)
        dp[size_t(nl)][size_t(mask)] =
            __builtin_popcount(unsigned(mask)) == need ? 0.0 : kInf;
    for (int i = nl - 1; i >= 0; --i) {
        for (int mask = 0; mask < full; ++mask) {
            const int used = __builtin_popcount(unsigned(mask));
            if (used > need) continue;
            double best = kInf;
            // Skipping legend i is allowed when enough legends remain.
            if (nl - i - 1 >= need - used) best = dp[size_t(i) + 1][size_t(mask)];
            for (int j = 0; j < nr; ++j) {
                if (mask & (1 << j)) continue;
                const double c = cost[size_t(i)][size_t(j)] +
                                 dp[size_t(i) + 1][size_t(mask | (1 << j))];
                if (c < best) best = c;
            }
            dp[size_t(i)][size_t(mask)] = best;
        }
    }

    LegendAssignment out;
    out.count_mismatch = nl != nr;
    int mask = 0;
    for (int i = 0; i < nl; ++i) {
        const double here = dp[size_t(i)][size_t(mask)];
        const int used = __builtin_popcount(unsigned(mask));
        // Prefer matching over skipping, lower region index on cost ties.
        int pick = -1;
        for (int j = 0; j < nr; ++j) {
            if (mask & (1 << j)) continue;
            const double c = cost[size_t(i)][size_t(j)] +
                             dp[size_t(i) + 1][size_t(mask | (1 << j))];
            if (c <= here + 1e-12) {
                pick = j;
                break;
            }
        }
        if (pick < 0) {
            if (nl - i - 1 < need - used)
                fail("CountMismatch", "assignment reconstruction failed");
            continue;  // legend i left unmatched
        }
        out.pairs.push_back({i, regions[size_t(pick)].region,
                             cost[size_t(i)][size_t(pick)]});
        mask |= 1 << pick;
    }
    return out;
}

}  // namespace chartagent::perception
