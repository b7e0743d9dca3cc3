#include "chartagent/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "chartagent/evidence.hpp"
#include "chartagent/raster.hpp"
#include "font5x7.hpp"

namespace chartagent::synthgen {

namespace fs = std::filesystem;

std::string to_string(EdgeStyle s) {
    return s == EdgeStyle::hard ? "hard" : "soft";
}

EdgeStyle edge_style_from_string(const std::string& s) {
    if (s == "hard") return EdgeStyle::hard;
    if (s == "soft") return EdgeStyle::soft;
    fail("SchemaViolation", "unknown edge style: " + s);
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s(buf);
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
    return s;
}

// ---------------------------------------------------------------------------
// generation

namespace {

struct LabelPool {
    const char* dimension;
    std::vector<const char*> labels;
};

const std::vector<LabelPool>& label_pools() {
    static const std::vector<LabelPool> pools = {
        {"Quarter", {"Q1", "Q2", "Q3", "Q4"}},
        {"Region", {"North", "South", "East", "West", "Central", "Coast"}},
        {"City",
         {"Berlin", "Madrid", "Oslo", "Paris", "Rome", "Vienna", "Dublin",
          "Lisbon"}},
        {"Product",
         {"Alpha", "Beta", "Gamma", "Delta", "Epsilon", "Zeta", "Theta",
          "Kappa"}},
        {"Year",
         {"2014", "2015", "2016", "2017", "2018", "2019", "2020", "2021",
          "2022", "2023", "2024", "2025"}},
        {"Month",
         {"Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep",
          "Oct", "Nov", "Dec"}},
    };
    return pools;
}

const std::vector<const char*>& metric_pool() {
    static const std::vector<const char*> metrics = {
        "Revenue", "Profit", "Sales", "Output",
        "Traffic", "Yield",  "Cost",  "Demand"};
    return metrics;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

size_t max_label_len(const LabelPool& pool) {
    size_t m = 0;
    for (const char* l : pool.labels) m = std::max(m, std::string(l).size());
    return m;
}

}  // namespace

ChartSpec generate_spec(ChartType chart_type, uint64_t seed,
                        const GenConstraints& constraints) {
    if (chart_type == ChartType::unknown)
        fail("UnsupportedChartType", "cannot generate an unknown chart type");
    Rng rng(mix_seed(seed, uint64_t(chart_type)));

    ChartSpec spec;
    spec.chart_type = chart_type;
    spec.style_seed = seed;
    spec.annotated = constraints.annotated.value_or(true);
    spec.edge_style = constraints.edge_style.value_or(EdgeStyle::hard);
    spec.canvas_width = constraints.canvas_width.value_or(512);
    spec.canvas_height = constraints.canvas_height.value_or(384);
    if (spec.canvas_width < 128 || spec.canvas_height < 128)
        fail("CanvasTooSmall", "canvas must be at least 128x128");

    const bool circular =
        chart_type == ChartType::pie || chart_type == ChartType::donut;

    int n_categories;
    switch (chart_type) {
        case ChartType::bar: n_categories = int(rng.uniform_int(3, 7)); break;
        case ChartType::line: n_categories = int(rng.uniform_int(4, 10)); break;
        case ChartType::scatter:
            n_categories = int(rng.uniform_int(5, 10));
            break;
        default: n_categories = int(rng.uniform_int(3, 8)); break;
    }
    if (constraints.categories) n_categories = *constraints.categories;

    int n_series = 1;
    if (chart_type == ChartType::bar || chart_type == ChartType::line)
        n_series = int(rng.uniform_int(1, 3));
    else if (chart_type == ChartType::scatter)
        n_series = int(rng.uniform_int(1, 2));
    if (constraints.series_count) n_series = *constraints.series_count;

    // Wide category counts need short labels to keep x ticks legible.
    std::vector<const LabelPool*> eligible;
    for (const LabelPool& pool : label_pools())
        if (int(pool.labels.size()) >= n_categories &&
            (n_categories <= 7 || max_label_len(pool) <= 4))
            eligible.push_back(&pool);
    if (eligible.empty())
        fail("UnsupportedChartType",
             "no label pool supports " + std::to_string(n_categories) +
                 " categories");
    const LabelPool& pool =
        *eligible[size_t(rng.uniform_int(0, int64_t(eligible.size()) - 1))];
    const int start = int(rng.uniform_int(0, int64_t(pool.labels.size()) - 1));
    for (int i = 0; i < n_categories; ++i)
        spec.category_labels.push_back(
            pool.labels[(start + i) % pool.labels.size()]);

    // Distinct metric names for the series.
    std::vector<const char*> metrics = metric_pool();
    rng.shuffle(metrics);

    const int hue0 = int(rng.uniform_int(0, 359));
    const int color_count = circular ? n_categories : n_series;
    auto color_at = [&](int j) {
        const double hue = std::fmod(hue0 + j * 360.0 / color_count, 360.0);
        return raster::hsv_to_rgb({hue, 0.8, 0.85});
    };

    static const double vmax_pool[] = {5, 10, 20, 50, 100, 200, 500, 1000};
    const double vmax = vmax_pool[rng.uniform_int(0, 7)];
    spec.axis_min = 0.0;
    spec.axis_max = vmax;
    spec.tick_step = vmax / 10.0;

    if (circular) {
        // One value row per sector; shares bounded away from the minimum so
        // rounding cannot dip below it.
        const double min_share = constraints.min_share.value_or(0.04);
        const double floor = min_share + 0.005;
        std::vector<double> u(n_categories);
        double total = 0.0;
        for (double& x : u) {
            x = rng.uniform(0.1, 1.0);
            total += x;
        }
        SeriesDef series;
        series.label = metrics[0];
        series.color = color_at(0);
        for (int i = 0; i < n_categories; ++i) {
            const double share = floor + (u[i] / total) * (1.0 - floor * n_categories);
            series.values.push_back(round2(share * 100.0));
        }
        spec.series.push_back(std::move(series));
        spec.axis_max = 100.0;
        spec.tick_step = 10.0;
        spec.title = std::string(metrics[0]) + " share by " + pool.dimension;
        return spec;
    }

    for (int j = 0; j < n_series; ++j) {
        SeriesDef series;
        series.label = metrics[j];
        series.color = color_at(j);
        for (int i = 0; i < n_categories; ++i)
            series.values.push_back(round2(rng.uniform(0.15, 0.95) * vmax));
        spec.series.push_back(std::move(series));
    }
    spec.title = std::string(metrics[0]) + " by " + pool.dimension;
    return spec;
}

ChartSpec deannotate(ChartSpec spec) {
    spec.annotated = false;
    return spec;
}

// ---------------------------------------------------------------------------
// rendering

namespace {

constexpr Rgb kBlack{0, 0, 0};
constexpr Rgb kWhite{255, 255, 255};

constexpr int kMarginTop = 24;
constexpr int kMarginLeft = 44;
constexpr int kMarginBottom = 32;
constexpr int kMarginRight = 12;
constexpr int kLegendWidth = 118;
constexpr int kMinPlotSide = 64;

void validate_spec(const ChartSpec& spec) {
    if (spec.canvas_width < 128 || spec.canvas_height < 128)
        fail("CanvasTooSmall", "canvas must be at least 128x128");
    if (spec.series.empty()) fail("InvalidSpec", "no series");
    for (const SeriesDef& s : spec.series)
        if (s.values.size() != spec.category_labels.size())
            fail("InvalidSpec", "series length != category count");
    if (spec.tick_step <= 0) fail("InvalidSpec", "tick_step must be positive");
    if (!(spec.axis_max > spec.axis_min))
        fail("InvalidSpec", "axis range is degenerate");
    if (spec.chart_type == ChartType::pie ||
        spec.chart_type == ChartType::donut) {
        double total = 0.0;
        for (double v : spec.series[0].values) {
            if (v < 0) fail("InvalidSpec", "negative sector value");
            total += v;
        }
        if (total <= 0) fail("InvalidSpec", "sector values all zero");
    }
}

struct TextWriter {
    ChartImage& img;
    std::vector<GtTextItem>& items;

    RectI draw(int x, int y, const std::string& text, TextRole role,
               const Rgb& color = kBlack) {
        font::draw_text(img, x, y, text, color);
        const RectI box{x, y, font::text_width(text), font::text_height()};
        items.push_back({text, box, role});
        return box;
    }
    RectI draw_centered(int cx, int y, const std::string& text, TextRole role,
                        const Rgb& color = kBlack) {
        return draw(cx - font::text_width(text) / 2, y, text, role, color);
    }
    RectI draw_right(int x_end, int y, const std::string& text, TextRole role,
                     const Rgb& color = kBlack) {
        return draw(x_end - font::text_width(text), y, text, role, color);
    }
};

// Post-pass for the soft style: blend every color-boundary pixel with its
// 3x3 neighborhood mean.
void soften(ChartImage& img) {
    const ChartImage src = img;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const Rgb c = src.get(x, y);
            bool boundary = false;
            static const int d4[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
            for (const auto& d : d4) {
                const int nx = x + d[0], ny = y + d[1];
                if (src.in_bounds(nx, ny) && !(src.get(nx, ny) == c)) {
                    boundary = true;
                    break;
                }
            }
            if (!boundary) continue;
            int sr = 0, sg = 0, sb = 0, n = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (!src.in_bounds(nx, ny)) continue;
                    const Rgb p = src.get(nx, ny);
                    sr += p.r;
                    sg += p.g;
                    sb += p.b;
                    ++n;
                }
            img.set(x, y, Rgb{uint8_t((sr + n / 2) / n),
                              uint8_t((sg + n / 2) / n),
                              uint8_t((sb + n / 2) / n)});
        }
    }
}

struct CartesianFrame {
    RectI plot;
    int axis_row = 0;  // y of the x-axis line
    int axis_col = 0;  // x of the y-axis line

    int row_of(const ChartSpec& spec, double v) const {
        const double t =
            (v - spec.axis_min) / (spec.axis_max - spec.axis_min);
        return plot.y + plot.h - 1 - int(std::lround(t * (plot.h - 1)));
    }
    int category_x(int i, int n) const {
        return plot.x + int(std::lround((i + 0.5) * plot.w / double(n)));
    }
};

void draw_legend(ChartImage& img, TextWriter& tw, GroundTruth& gt,
                 const RectI& plot,
                 const std::vector<std::pair<std::string, Rgb>>& entries) {
    const int x = plot.right() + 14;
    int y = plot.y + 4;
    for (size_t j = 0; j < entries.size(); ++j) {
        const RectI swatch{x, y, 10, 10};
        img.fill_rect(swatch, entries[j].second);
        gt.legend_swatches.push_back({int(j), swatch, entries[j].second});
        tw.draw(x + 14, y + 1, entries[j].first, TextRole::legend_label);
        y += 16;
    }
}

CartesianFrame draw_cartesian_frame(const ChartSpec& spec, ChartImage& img,
                                    TextWriter& tw, GroundTruth& gt,
                                    bool legend) {
    CartesianFrame f;
    const int right = legend ? kLegendWidth : kMarginRight;
    f.plot = RectI{kMarginLeft, kMarginTop,
                   spec.canvas_width - kMarginLeft - right,
                   spec.canvas_height - kMarginTop - kMarginBottom};
    if (f.plot.w < kMinPlotSide || f.plot.h < kMinPlotSide)
        fail("CanvasTooSmall", "plot area too small for the canvas");
    f.axis_col = f.plot.x - 1;
    f.axis_row = f.plot.y + f.plot.h;

    gt.plot_area = f.plot;
    gt.has_axes = true;
    gt.y_axis = {{f.axis_col, f.plot.y}, {f.axis_col, f.axis_row}};
    gt.x_axis = {{f.axis_col, f.axis_row}, {f.plot.right() - 1, f.axis_row}};
    img.fill_rect(RectI{f.axis_col, f.plot.y, 1, f.plot.h + 1}, kBlack);
    img.fill_rect(RectI{f.axis_col, f.axis_row, f.plot.w + 1, 1}, kBlack);

    // Value ticks up the y axis.
    for (int k = 0;; ++k) {
        const double v = spec.axis_min + k * spec.tick_step;
        if (v > spec.axis_max + 1e-9) break;
        const int ry = f.row_of(spec, v);
        gt.y_ticks.push_back({{f.axis_col, ry}, v});
        img.fill_rect(RectI{f.plot.x - 5, ry, 4, 1}, kBlack);
        tw.draw_right(f.plot.x - 8, ry - 3, format_value(v),
                      TextRole::tick_label);
    }

    // Category anchors along the x axis.
    const int n = int(spec.category_labels.size());
    for (int i = 0; i < n; ++i) {
        const int cx = f.category_x(i, n);
        gt.x_ticks.push_back({{cx, f.axis_row}, double(i)});
        img.fill_rect(RectI{cx, f.axis_row + 1, 1, 4}, kBlack);
        tw.draw_centered(cx, f.axis_row + 8, spec.category_labels[i],
                         TextRole::tick_label);
    }
    return f;
}

void render_bars(const ChartSpec& spec, ChartImage& img, TextWriter& tw,
                 GroundTruth& gt, const CartesianFrame& f) {
    const int n = int(spec.category_labels.size());
    const int m = int(spec.series.size());
    for (int i = 0; i < n; ++i) {
        const int slot_x0 = f.plot.x + int(std::lround(i * f.plot.w / double(n)));
        const int slot_x1 =
            f.plot.x + int(std::lround((i + 1) * f.plot.w / double(n)));
        const int slot_w = slot_x1 - slot_x0;
        const int bar_w = std::max(3, int(slot_w * 0.7) / m);
        const int group_x0 = slot_x0 + (slot_w - bar_w * m) / 2;
        for (int j = 0; j < m; ++j) {
            const double v = spec.series[j].values[i];
            const int top = f.row_of(spec, v);
            const RectI rect{group_x0 + j * bar_w, top, bar_w,
                             f.axis_row - top};
            img.fill_rect(rect, spec.series[j].color);
            gt.bars.push_back({j, i, rect, v});
            if (spec.annotated && m == 1)
                tw.draw_centered(rect.x + rect.w / 2, top - 9, format_value(v),
                                 TextRole::value_label);
        }
        if (spec.annotated && m > 1) {
            // Grouped bars: stack the per-series labels above the group.
            for (int j = 0; j < m; ++j) {
                const double v = spec.series[j].values[i];
                const int top = f.row_of(spec, v);
                tw.draw_centered(group_x0 + j * bar_w + bar_w / 2, top - 9,
                                 format_value(v), TextRole::value_label);
            }
        }
    }
}

void stamp_square(ChartImage& img, int cx, int cy, int half, const Rgb& color) {
    for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx)
            img.set_clipped(cx + dx, cy + dy, color);
}

void render_lines(const ChartSpec& spec, ChartImage& img, TextWriter& tw,
                  GroundTruth& gt, const CartesianFrame& f, bool markers_only) {
    const int n = int(spec.category_labels.size());
    for (size_t j = 0; j < spec.series.size(); ++j) {
        const SeriesDef& s = spec.series[j];
        CurveGeom curve;
        curve.series = int(j);
        curve.color = s.color;
        std::vector<PointI> px;
        for (int i = 0; i < n; ++i) {
            const int cx = f.category_x(i, n);
            const int cy = f.row_of(spec, s.values[i]);
            px.push_back({cx, cy});
            curve.points.push_back({double(cx), double(cy)});
        }
        if (markers_only) {
            for (const PointI& p : px) stamp_square(img, p.x, p.y, 2, s.color);
        } else {
            for (size_t i = 0; i + 1 < px.size(); ++i) {
                // 3-px stroke: stamp along the longer-axis parameterization.
                const int steps =
                    std::max(std::abs(px[i + 1].x - px[i].x),
                             std::abs(px[i + 1].y - px[i].y));
                for (int t = 0; t <= steps; ++t) {
                    const double u = steps ? double(t) / steps : 0.0;
                    const int x = int(std::lround(px[i].x + u * (px[i + 1].x - px[i].x)));
                    const int y = int(std::lround(px[i].y + u * (px[i + 1].y - px[i].y)));
                    stamp_square(img, x, y, 1, s.color);
                }
            }
        }
        gt.curves.push_back(std::move(curve));
        if (spec.annotated)
            for (int i = 0; i < n; ++i)
                tw.draw_centered(px[i].x, px[i].y - 12,
                                 format_value(s.values[i]),
                                 TextRole::value_label);
    }
}

void render_circular(const ChartSpec& spec, ChartImage& img, TextWriter& tw,
                     GroundTruth& gt) {
    const int right = kLegendWidth;  // circular charts always carry a legend
    const RectI plot{kMarginLeft, kMarginTop,
                     spec.canvas_width - kMarginLeft - right,
                     spec.canvas_height - kMarginTop - kMarginBottom};
    if (plot.w < kMinPlotSide || plot.h < kMinPlotSide)
        fail("CanvasTooSmall", "plot area too small for the canvas");
    gt.plot_area = plot;
    gt.has_axes = false;

    const SeriesDef& s = spec.series[0];
    double total = 0.0;
    for (double v : s.values) total += v;

    const double cx = plot.x + plot.w / 2.0;
    const double cy = plot.y + plot.h / 2.0;
    const double outer = 0.45 * std::min(plot.w, plot.h);
    const double inner =
        spec.chart_type == ChartType::donut ? 0.45 * outer : 0.0;
    gt.pie_center = {cx, cy};
    gt.pie_outer_r = outer;
    gt.pie_inner_r = inner;

    std::vector<double> ends;
    double acc = 0.0;
    for (size_t i = 0; i < s.values.size(); ++i) {
        const double share = s.values[i] / total;
        SectorGeom sec;
        sec.label = spec.category_labels[i];
        sec.value = s.values[i];
        sec.share = share;
        sec.start_deg = acc;
        acc += share * 360.0;
        sec.end_deg = i + 1 == s.values.size() ? 360.0 : acc;
        sec.color = raster::hsv_to_rgb(
            {std::fmod(raster::rgb_to_hsv(spec.series[0].color).h +
                           i * 360.0 / double(s.values.size()),
                       360.0),
             0.8, 0.85});
        gt.sectors.push_back(sec);
        ends.push_back(sec.end_deg);
    }

    const int x0 = int(std::floor(cx - outer)) - 1;
    const int x1 = int(std::ceil(cx + outer)) + 1;
    const int y0 = int(std::floor(cy - outer)) - 1;
    const int y1 = int(std::ceil(cy + outer)) + 1;
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            if (!img.in_bounds(x, y)) continue;
            const double dx = x + 0.5 - cx;
            const double dy = y + 0.5 - cy;
            const double dist = std::hypot(dx, dy);
            if (dist > outer || dist < inner) continue;
            double theta = std::atan2(dx, -dy) * 180.0 / 3.14159265358979323846;
            if (theta < 0) theta += 360.0;
            size_t k = 0;
            while (k + 1 < ends.size() && theta >= ends[k]) ++k;
            img.set(x, y, gt.sectors[k].color);
        }
    }

    if (spec.annotated) {
        const double label_r = inner > 0 ? (inner + outer) / 2.0 : 0.7 * outer;
        for (const SectorGeom& sec : gt.sectors) {
            const double mid =
                (sec.start_deg + sec.end_deg) / 2.0 * 3.14159265358979323846 /
                180.0;
            const int lx = int(std::lround(cx + label_r * std::sin(mid)));
            const int ly = int(std::lround(cy - label_r * std::cos(mid)));
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.1f%%", sec.share * 100.0);
            tw.draw_centered(lx, ly - 3, buf, TextRole::value_label);
        }
    }

    std::vector<std::pair<std::string, Rgb>> entries;
    for (const SectorGeom& sec : gt.sectors)
        entries.emplace_back(sec.label, sec.color);
    draw_legend(img, tw, gt, plot, entries);
}

}  // namespace

Rendered render(const ChartSpec& spec) {
    validate_spec(spec);
    Rendered out{ChartImage(spec.canvas_width, spec.canvas_height, kWhite),
                 GroundTruth{}};
    GroundTruth& gt = out.truth;
    TextWriter tw{out.image, gt.text_items};

    tw.draw_centered(spec.canvas_width / 2, 8, spec.title, TextRole::title);

    const bool circular = spec.chart_type == ChartType::pie ||
                          spec.chart_type == ChartType::donut;
    if (circular) {
        render_circular(spec, out.image, tw, gt);
        for (size_t i = 0; i < gt.sectors.size(); ++i)
            gt.data_table.push_back({gt.sectors[i].label,
                                     spec.series[0].label,
                                     spec.series[0].values[i]});
    } else {
        const bool legend = spec.series.size() > 1;
        CartesianFrame f = draw_cartesian_frame(spec, out.image, tw, gt, legend);
        if (spec.chart_type == ChartType::bar)
            render_bars(spec, out.image, tw, gt, f);
        else
            render_lines(spec, out.image, tw, gt, f,
                         spec.chart_type == ChartType::scatter);
        if (legend) {
            std::vector<std::pair<std::string, Rgb>> entries;
            for (const SeriesDef& s : spec.series)
                entries.emplace_back(s.label, s.color);
            draw_legend(out.image, tw, gt, f.plot, entries);
        }
        for (size_t j = 0; j < spec.series.size(); ++j)
            for (size_t i = 0; i < spec.category_labels.size(); ++i)
                gt.data_table.push_back({spec.category_labels[i],
                                         spec.series[j].label,
                                         spec.series[j].values[i]});
    }

    if (spec.edge_style == EdgeStyle::soft) soften(out.image);
    return out;
}

// ---------------------------------------------------------------------------
// JSON forms

namespace {

json rect_to_json(const RectI& r) {
    return json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}};
}

RectI rect_from_json(const json& j) {
    return RectI{j.at("x").get<int>(), j.at("y").get<int>(),
                 j.at("w").get<int>(), j.at("h").get<int>()};
}

json rgb_to_json(const Rgb& c) {
    return json{{"r", c.r}, {"g", c.g}, {"b", c.b}};
}

Rgb rgb_from_json(const json& j) {
    return Rgb{j.at("r").get<uint8_t>(), j.at("g").get<uint8_t>(),
               j.at("b").get<uint8_t>()};
}

json segment_to_json(const Segment& s) {
    return json{{"x0", s.a.x}, {"y0", s.a.y}, {"x1", s.b.x}, {"y1", s.b.y}};
}

Segment segment_from_json(const json& j) {
    return Segment{{j.at("x0").get<int>(), j.at("y0").get<int>()},
                   {j.at("x1").get<int>(), j.at("y1").get<int>()}};
}

}  // namespace

json spec_to_json(const ChartSpec& spec) {
    json series = json::array();
    for (const SeriesDef& s : spec.series)
        series.push_back(json{{"label", s.label},
                              {"color", rgb_to_json(s.color)},
                              {"values", s.values}});
    return json{{"chart_type", chartagent::to_string(spec.chart_type)},
                {"series", series},
                {"category_labels", spec.category_labels},
                {"axis_min", spec.axis_min},
                {"axis_max", spec.axis_max},
                {"tick_step", spec.tick_step},
                {"annotated", spec.annotated},
                {"canvas_width", spec.canvas_width},
                {"canvas_height", spec.canvas_height},
                {"style_seed", spec.style_seed},
                {"edge_style", to_string(spec.edge_style)},
                {"title", spec.title}};
}

ChartSpec spec_from_json(const json& j) {
    ChartSpec spec;
    try {
        spec.chart_type =
            chart_type_from_string(j.at("chart_type").get<std::string>());
        for (const json& js : j.at("series")) {
            SeriesDef s;
            s.label = js.at("label").get<std::string>();
            s.color = rgb_from_json(js.at("color"));
            s.values = js.at("values").get<std::vector<double>>();
            spec.series.push_back(std::move(s));
        }
        spec.category_labels =
            j.at("category_labels").get<std::vector<std::string>>();
        spec.axis_min = j.at("axis_min").get<double>();
        spec.axis_max = j.at("axis_max").get<double>();
        spec.tick_step = j.at("tick_step").get<double>();
        spec.annotated = j.at("annotated").get<bool>();
        spec.canvas_width = j.at("canvas_width").get<int>();
        spec.canvas_height = j.at("canvas_height").get<int>();
        spec.style_seed = j.at("style_seed").get<uint64_t>();
        spec.edge_style =
            edge_style_from_string(j.at("edge_style").get<std::string>());
        spec.title = j.at("title").get<std::string>();
    } catch (const json::exception& e) {
        fail("SchemaViolation", std::string("spec field error: ") + e.what());
    }
    return spec;
}

json truth_to_json(const GroundTruth& gt) {
    json table = json::array();
    for (const CellTruth& c : gt.data_table)
        table.push_back(json{{"row_key", c.row_key},
                             {"col_key", c.col_key},
                             {"value", c.value}});
    auto ticks_to_json = [](const std::vector<TickAnchor>& ticks) {
        json out = json::array();
        for (const TickAnchor& t : ticks)
            out.push_back(
                json{{"x", t.px.x}, {"y", t.px.y}, {"value", t.value}});
        return out;
    };
    json swatches = json::array();
    for (const LegendSwatch& s : gt.legend_swatches) {
        json js = rect_to_json(s.rect);
        js["series"] = s.series;
        js["color"] = rgb_to_json(s.color);
        swatches.push_back(js);
    }
    json bars = json::array();
    for (const BarGeom& b : gt.bars) {
        json jb = rect_to_json(b.rect);
        jb["series"] = b.series;
        jb["category"] = b.category;
        jb["value"] = b.value;
        bars.push_back(jb);
    }
    json sectors = json::array();
    for (const SectorGeom& s : gt.sectors)
        sectors.push_back(json{{"label", s.label},
                               {"value", s.value},
                               {"share", s.share},
                               {"start_deg", s.start_deg},
                               {"end_deg", s.end_deg},
                               {"color", rgb_to_json(s.color)}});
    json curves = json::array();
    for (const CurveGeom& c : gt.curves) {
        json pts = json::array();
        for (const PointD& p : c.points)
            pts.push_back(json{{"x", p.x}, {"y", p.y}});
        curves.push_back(json{{"series", c.series},
                              {"color", rgb_to_json(c.color)},
                              {"points", pts}});
    }
    json texts = json::array();
    for (const GtTextItem& t : gt.text_items) {
        json jt = rect_to_json(t.box);
        jt["text"] = t.text;
        jt["role"] = to_string(t.role);
        texts.push_back(jt);
    }
    return json{{"data_table", table},
                {"plot_area", rect_to_json(gt.plot_area)},
                {"has_axes", gt.has_axes},
                {"x_axis", segment_to_json(gt.x_axis)},
                {"y_axis", segment_to_json(gt.y_axis)},
                {"y_ticks", ticks_to_json(gt.y_ticks)},
                {"x_ticks", ticks_to_json(gt.x_ticks)},
                {"legend_swatches", swatches},
                {"bars", bars},
                {"sectors", sectors},
                {"pie_center", json{{"x", gt.pie_center.x}, {"y", gt.pie_center.y}}},
                {"pie_outer_r", gt.pie_outer_r},
                {"pie_inner_r", gt.pie_inner_r},
                {"curves", curves},
                {"text_items", texts}};
}

GroundTruth truth_from_json(const json& j) {
    GroundTruth gt;
    try {
        for (const json& jc : j.at("data_table"))
            gt.data_table.push_back({jc.at("row_key").get<std::string>(),
                                     jc.at("col_key").get<std::string>(),
                                     jc.at("value").get<double>()});
        gt.plot_area = rect_from_json(j.at("plot_area"));
        gt.has_axes = j.at("has_axes").get<bool>();
        gt.x_axis = segment_from_json(j.at("x_axis"));
        gt.y_axis = segment_from_json(j.at("y_axis"));
        auto ticks_from_json = [](const json& ja) {
            std::vector<TickAnchor> out;
            for (const json& jt : ja)
                out.push_back({{jt.at("x").get<int>(), jt.at("y").get<int>()},
                               jt.at("value").get<double>()});
            return out;
        };
        gt.y_ticks = ticks_from_json(j.at("y_ticks"));
        gt.x_ticks = ticks_from_json(j.at("x_ticks"));
        for (const json& js : j.at("legend_swatches"))
            gt.legend_swatches.push_back({js.at("series").get<int>(),
                                          rect_from_json(js),
                                          rgb_from_json(js.at("color"))});
        for (const json& jb : j.at("bars"))
            gt.bars.push_back({jb.at("series").get<int>(),
                               jb.at("category").get<int>(),
                               rect_from_json(jb), jb.at("value").get<double>()});
        for (const json& js : j.at("sectors"))
            gt.sectors.push_back({js.at("label").get<std::string>(),
                                  js.at("value").get<double>(),
                                  js.at("share").get<double>(),
                                  js.at("start_deg").get<double>(),
                                  js.at("end_deg").get<double>(),
                                  rgb_from_json(js.at("color"))});
        gt.pie_center = {j.at("pie_center").at("x").get<double>(),
                         j.at("pie_center").at("y").get<double>()};
        gt.pie_outer_r = j.at("pie_outer_r").get<double>();
        gt.pie_inner_r = j.at("pie_inner_r").get<double>();
        for (const json& jc : j.at("curves")) {
            CurveGeom c;
            c.series = jc.at("series").get<int>();
            c.color = rgb_from_json(jc.at("color"));
            for (const json& jp : jc.at("points"))
                c.points.push_back(
                    {jp.at("x").get<double>(), jp.at("y").get<double>()});
            gt.curves.push_back(std::move(c));
        }
        for (const json& jt : j.at("text_items"))
            gt.text_items.push_back(
                {jt.at("text").get<std::string>(), rect_from_json(jt),
                 text_role_from_string(jt.at("role").get<std::string>())});
    } catch (const json::exception& e) {
        fail("SchemaViolation", std::string("truth field error: ") + e.what());
    }
    return gt;
}

// ---------------------------------------------------------------------------
// corpus IO

QaPair make_qa(const ChartSpec& spec, const GroundTruth& truth) {
    Rng rng(mix_seed(spec.style_seed, 0x9a));
    QaPair qa;
    qa.task = "number_qa";
    if (spec.chart_type == ChartType::pie ||
        spec.chart_type == ChartType::donut) {
        const auto& sectors = truth.sectors;
        const size_t i = size_t(rng.uniform_int(0, int64_t(sectors.size()) - 1));
        qa.question =
            "What is the share of " + sectors[i].label + " in percent?";
        qa.truth = sectors[i].share * 100.0;
    } else {
        const size_t j =
            size_t(rng.uniform_int(0, int64_t(spec.series.size()) - 1));
        const size_t i = size_t(
            rng.uniform_int(0, int64_t(spec.category_labels.size()) - 1));
        qa.question = "What is the " + spec.series[j].label + " of " +
                      spec.category_labels[i] + "?";
        qa.truth = spec.series[j].values[i];
    }
    return qa;
}

namespace {

std::string chart_basename(int id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "chart_%06d", id);
    return buf;
}

json manifest_to_json(const CorpusManifest& manifest) {
    json rows = json::array();
    for (const ManifestRow& r : manifest.rows)
        rows.push_back(json{
            {"id", r.id},
            {"seed", r.seed},
            {"chart_type", chartagent::to_string(r.chart_type)},
            {"image", r.image_file},
            {"truth", r.truth_file},
            {"annotated", r.annotated},
            {"qa", json{{"task", r.qa.task},
                        {"question", r.qa.question},
                        {"truth", r.qa.truth}}}});
    return json{{"rows", rows}};
}

CorpusManifest manifest_from_json(const json& j) {
    CorpusManifest manifest;
    try {
        for (const json& jr : j.at("rows")) {
            ManifestRow r;
            r.id = jr.at("id").get<int>();
            r.seed = jr.at("seed").get<uint64_t>();
            r.chart_type =
                chart_type_from_string(jr.at("chart_type").get<std::string>());
            r.image_file = jr.at("image").get<std::string>();
            r.truth_file = jr.at("truth").get<std::string>();
            r.annotated = jr.at("annotated").get<bool>();
            r.qa.task = jr.at("qa").at("task").get<std::string>();
            r.qa.question = jr.at("qa").at("question").get<std::string>();
            r.qa.truth = jr.at("qa").at("truth");
            manifest.rows.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        fail("SchemaViolation",
             std::string("manifest field error: ") + e.what());
    }
    return manifest;
}

}  // namespace

CorpusManifest write_corpus(const std::vector<ChartSpec>& specs,
                            const std::string& directory) {
    fs::create_directories(directory);
    CorpusManifest manifest;
    for (size_t i = 0; i < specs.size(); ++i) {
        const Rendered rendered = render(specs[i]);
        ManifestRow row;
        row.id = int(i);
        row.seed = specs[i].style_seed;
        row.chart_type = specs[i].chart_type;
        row.annotated = specs[i].annotated;
        row.image_file = chart_basename(row.id) + ".ppm";
        row.truth_file = chart_basename(row.id) + ".json";
        row.qa = make_qa(specs[i], rendered.truth);
        write_ppm(rendered.image,
                  (fs::path(directory) / row.image_file).string());
        const json sidecar{{"spec", spec_to_json(specs[i])},
                           {"truth", truth_to_json(rendered.truth)}};
        write_file_bytes((fs::path(directory) / row.truth_file).string(),
                         evidence::canonical_dump(sidecar));
        manifest.rows.push_back(std::move(row));
    }
    write_file_bytes((fs::path(directory) / "manifest.json").string(),
                     evidence::canonical_dump(manifest_to_json(manifest)));
    return manifest;
}

CorpusManifest load_manifest(const std::string& directory) {
    const auto bytes =
        read_file_bytes((fs::path(directory) / "manifest.json").string());
    json j = json::parse(bytes, nullptr, false);
    if (j.is_discarded()) fail("SchemaViolation", "manifest is not valid JSON");
    return manifest_from_json(j);
}

SidecarData load_sidecar(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    json j = json::parse(bytes, nullptr, false);
    if (j.is_discarded()) fail("SchemaViolation", "sidecar is not valid JSON");
    SidecarData data;
    data.spec = spec_from_json(j.at("spec"));
    data.truth = truth_from_json(j.at("truth"));
    return data;
}

}  // namespace chartagent::synthgen
