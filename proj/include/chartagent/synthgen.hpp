#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chartagent/common.hpp"
#include "chartagent/image.hpp"

namespace chartagent::synthgen {

using nlohmann::json;

enum class EdgeStyle { hard, soft };
std::string to_string(EdgeStyle s);
EdgeStyle edge_style_from_string(const std::string& s);

struct SeriesDef {
    std::string label;
    Rgb color;
    std::vector<double> values;
    bool operator==(const SeriesDef&) const = default;
};

struct ChartSpec {
    ChartType chart_type = ChartType::bar;
    std::vector<SeriesDef> series;
    std::vector<std::string> category_labels;
    double axis_min = 0.0;  // value axis
    double axis_max = 1.0;
    double tick_step = 0.1;
    bool annotated = true;
    int canvas_width = 512;
    int canvas_height = 384;
    uint64_t style_seed = 0;
    EdgeStyle edge_style = EdgeStyle::hard;
    std::string title;
    bool operator==(const ChartSpec&) const = default;
};

struct TickAnchor {
    PointI px;
    double value = 0.0;  // category index on the x axis of categorical charts
};

struct CellTruth {
    std::string row_key;
    std::string col_key;
    double value = 0.0;
};

struct BarGeom {
    int series = 0;
    int category = 0;
    RectI rect;
    double value = 0.0;
};

struct SectorGeom {
    std::string label;
    double value = 0.0;
    double share = 0.0;
    double start_deg = 0.0;  // 0 at 12 o'clock, clockwise
    double end_deg = 0.0;
    Rgb color;
};

struct CurveGeom {
    int series = 0;
    Rgb color;
    std::vector<PointD> points;  // line: vertices; scatter: marker centers
};

struct LegendSwatch {
    int series = 0;
    RectI rect;
    Rgb color;
};

struct GtTextItem {
    std::string text;
    RectI box;
    TextRole role = TextRole::tick_label;
};

struct GroundTruth {
    std::vector<CellTruth> data_table;
    RectI plot_area;
    bool has_axes = false;
    Segment x_axis;
    Segment y_axis;
    std::vector<TickAnchor> y_ticks;
    std::vector<TickAnchor> x_ticks;
    std::vector<LegendSwatch> legend_swatches;
    std::vector<BarGeom> bars;
    std::vector<SectorGeom> sectors;
    PointD pie_center;
    double pie_outer_r = 0.0;
    double pie_inner_r = 0.0;
    std::vector<CurveGeom> curves;
    std::vector<GtTextItem> text_items;
};

struct GenConstraints {
    std::optional<int> categories;
    std::optional<int> series_count;
    std::optional<double> min_share;  // pie/donut; default 0.04
    std::optional<bool> annotated;    // default true
    std::optional<int> canvas_width;
    std::optional<int> canvas_height;
    std::optional<EdgeStyle> edge_style;  // default hard
};

ChartSpec generate_spec(ChartType chart_type, uint64_t seed,
                        const GenConstraints& constraints = {});

struct Rendered {
    ChartImage image;
    GroundTruth truth;
};

Rendered render(const ChartSpec& spec);

ChartSpec deannotate(ChartSpec spec);

// Value formatting used for tick and value labels (≤ 2 decimals, trimmed).
std::string format_value(double v);

json spec_to_json(const ChartSpec& spec);
ChartSpec spec_from_json(const json& j);
json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const json& j);

struct QaPair {
    std::string task;  // number_qa | value_compare | chart_to_table
    std::string question;
    json truth;
};

// Deterministic per-chart question derived from the spec's seed.
QaPair make_qa(const ChartSpec& spec, const GroundTruth& truth);

struct ManifestRow {
    int id = 0;
    uint64_t seed = 0;
    ChartType chart_type = ChartType::bar;
    std::string image_file;
    std::string truth_file;
    bool annotated = true;
    QaPair qa;
};

struct CorpusManifest {
    std::vector<ManifestRow> rows;
};

CorpusManifest write_corpus(const std::vector<ChartSpec>& specs,
                            const std::string& directory);
CorpusManifest load_manifest(const std::string& directory);

// The {spec, truth} sidecar written next to each image.
struct SidecarData {
    ChartSpec spec;
    GroundTruth truth;
};
SidecarData load_sidecar(const std::string& path);

}  // namespace chartagent::synthgen
