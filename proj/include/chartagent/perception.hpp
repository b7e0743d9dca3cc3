#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chartagent/common.hpp"
#include "chartagent/image.hpp"
#include "chartagent/raster.hpp"
#include "chartagent/synthgen.hpp"

namespace chartagent::perception {

// Pixel classes shared by the detectors. The darkish test keeps desaturated
// grays (axis ink, tick strokes, blended text) while rejecting saturated
// series colors, so it survives soft-edge blending.
inline bool is_darkish(Rgb c) {
    const int hi = std::max({int(c.r), int(c.g), int(c.b)});
    const int lo = std::min({int(c.r), int(c.g), int(c.b)});
    return hi < 60 || (hi - lo <= 30 && hi <= 200);
}
inline bool is_whiteish(Rgb c) {
    return std::min({int(c.r), int(c.g), int(c.b)}) >= 225;
}
inline bool is_colored(Rgb c) { return !is_darkish(c) && !is_whiteish(c); }

enum class AxisKind { x, y };
std::string to_string(AxisKind a);

struct TickMark {
    AxisKind axis = AxisKind::y;
    PointI pixel;                   // anchor on the axis line
    std::optional<RectI> label_box; // nearby text, when one is visible
};

struct LegendEntry {
    RectI swatch_box;
    RectI label_box;
    Rgb swatch_color;  // sampled at the swatch center
};

struct KeyElements {
    RectI plot_area;
    Segment x_axis;
    Segment y_axis;
    std::vector<TickMark> ticks;            // y ticks first, then x ticks
    std::vector<LegendEntry> legend_entries;
    std::vector<RectI> bars;
    std::map<std::string, double> confidence;  // element class -> [0,1]

    std::vector<TickMark> ticks_on(AxisKind axis) const;
};

// Geometric detector pass over the bitmap: axes as the longest dark
// orthogonal runs, ticks as short perpendicular strokes, legend swatches as
// small uniform color patches right of the plot, bars as baseline-anchored
// solid regions.
KeyElements detect_key_elements(const ChartImage& image);

// ---------------------------------------------------------------------------
// OCR

struct TextItem {
    std::string text;
    RectI box;
    double confidence = 1.0;
    TextRole role_guess = TextRole::tick_label;
};

class OcrBackend {
  public:
    virtual ~OcrBackend() = default;
    virtual std::string name() const = 0;
    // `region` restricts reading to items intersecting that rectangle.
    virtual std::vector<TextItem> read(
        const ChartImage& image,
        const std::optional<RectI>& region = std::nullopt) = 0;
};

struct OcrNoise {
    double p_drop = 0.0;    // per-character dropout probability
    double sigma_px = 0.0;  // gaussian jitter on each box edge
    uint64_t seed = 0;
};

// Test double that serves the renderer's text layer, optionally corrupted
// by seeded noise. A default-constructed instance has no data and reports
// BackendUnavailable.
class GroundTruthOcr : public OcrBackend {
  public:
    using Noise = OcrNoise;

    GroundTruthOcr() = default;
    explicit GroundTruthOcr(std::vector<TextItem> items, OcrNoise noise = {});
    static GroundTruthOcr from_truth(const synthgen::GroundTruth& truth,
                                     OcrNoise noise = {});
    static GroundTruthOcr from_sidecar(const std::string& path,
                                       OcrNoise noise = {});

    std::string name() const override { return "groundtruth"; }
    std::vector<TextItem> read(
        const ChartImage& image,
        const std::optional<RectI>& region = std::nullopt) override;

  private:
    bool configured_ = false;
    std::vector<TextItem> items_;
    OcrNoise noise_;
};

std::vector<TextItem> read_text(const ChartImage& image, OcrBackend& backend,
                                const std::optional<RectI>& region = std::nullopt);

// Numeric label parsing: plain decimals, scientific notation, thousands
// separators, and a % suffix (mapped to value/100). Non-numeric text -> nullopt.
std::optional<double> parse_numeric_label(const std::string& text);

// ---------------------------------------------------------------------------
// calibration

struct Calibration {
    double alpha = 0.0;  // value per pixel
    double beta = 0.0;   // value at pixel 0
    AxisKind axis = AxisKind::y;
    double residual_rms = 0.0;
    int anchor_count = 0;

    double value_at(double pixel) const { return alpha * pixel + beta; }
    double pixel_at(double value) const { return (value - beta) / alpha; }
};

// Least-squares line through (pixel, value) anchors.
Calibration calibrate_axis(const std::vector<std::pair<double, double>>& anchors,
                           AxisKind axis);

// ---------------------------------------------------------------------------
// curves

struct CurveSkeleton {
    Rgb series_color;
    std::vector<PointD> points;  // one point per integer x, x strictly increasing
};

CurveSkeleton extract_curve_skeleton(const ChartImage& image, Rgb series_color,
                                     const RectI& plot_area);

// ---------------------------------------------------------------------------
// auxiliary-line reading

struct NumericReading {
    double value = 0.0;
    ChartImage overlay;  // input image with the projection lines drawn in
    std::optional<double> tick_units;  // value / tick_step when known
};

// Projects from the target x through the curve to the value axis.
NumericReading read_via_auxline(const CurveSkeleton& skeleton,
                                const Calibration& calibration, double target_x,
                                const ChartImage& base,
                                std::optional<double> tick_step = std::nullopt);

// Projects from a bar's top edge to the value axis.
NumericReading read_via_auxline(const KeyElements& elements,
                                const Calibration& calibration, int bar_index,
                                const ChartImage& base,
                                std::optional<double> tick_step = std::nullopt);

// ---------------------------------------------------------------------------
// sectors

struct CircularRegion {
    PointD center;
    double outer = 0.0;  // radius to the farthest body pixel
};

// Largest colored connected component, when it is disk-like: radius at least
// 10 px and fill at least half of the enclosing circle (a donut annulus
// fills ~63%). Nullopt when no such body exists.
std::optional<CircularRegion> find_circular_region(const ChartImage& image);

struct SectorEstimate {
    raster::ColorCluster cluster;
    int components = 0;
    double proportion = 0.0;
    double implied_angle = 0.0;  // 360 * proportion
};

// Segment-cluster-quantify over the chart's circular region (disk for pie,
// annulus for donut), estimates ordered by descending proportion.
std::vector<SectorEstimate> segment_sectors(const ChartImage& image,
                                            ChartType chart_type,
                                            uint64_t rng_seed);

// ---------------------------------------------------------------------------
// legend matching

struct SeriesRegion {
    int region = 0;  // caller-side identifier (series/cluster index)
    Rgb mean_color;
};

struct LegendAssignment {
    struct Pair {
        int legend_index = 0;
        int region = 0;
        double distance = 0.0;
    };
    std::vector<Pair> pairs;     // ordered by legend_index
    bool count_mismatch = false; // sizes differed; pairs cover the smaller side
};

// Minimum-total-distance assignment between swatch colors and region colors,
// ties broken toward lower region index in legend order.
LegendAssignment match_colors_to_legend(const std::vector<LegendEntry>& legend,
                                        const std::vector<SeriesRegion>& regions);

}  // namespace chartagent::perception
