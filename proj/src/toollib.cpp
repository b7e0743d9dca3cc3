#include "chartagent/toollib.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace chartagent::toollib {

using nlohmann::json;
using orchestrator::ToolContext;
using orchestrator::ToolOutput;
using perception::TextItem;
using scheduler::ToolSpec;

namespace {

// ---------------------------------------------------------------------------
// small shared helpers

std::string normalize_label(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    std::string t = s.substr(b, e - b);
    while (!t.empty() && (t.back() == '?' || t.back() == '.' ||
                          t.back() == '!' || t.back() == ','))
        t.pop_back();
    if (t.size() >= 2 && ((t.front() == '"' && t.back() == '"') ||
                          (t.front() == '\'' && t.back() == '\'')))
        t = t.substr(1, t.size() - 2);
    std::string lower;
    lower.reserve(t.size());
    for (char c : t)
        lower.push_back(char(std::tolower(static_cast<unsigned char>(c))));
    if (lower.rfind("the ", 0) == 0) lower = lower.substr(4);
    return lower;
}

bool rects_overlap(const RectI& a, const RectI& b) {
    return a.x < b.right() && b.x < a.right() && a.y < b.bottom() &&
           b.y < a.bottom();
}

double center_x(const RectI& r) { return r.x + r.w / 2.0; }

// The target of a value lookup: explicit parameter first, then the first
// referent without a reading yet, then the first referent (re-measure).
std::string resolve_target(const json& params, const ToolContext& ctx) {
    if (params.contains("target"))
        return params.at("target").get<std::string>();
    for (const auto& r : ctx.question.referents)
        if (!ctx.state.readings.count(normalize_label(r))) return r;
    if (!ctx.question.referents.empty()) return ctx.question.referents.front();
    fail("MissingTarget", "no target parameter and no question referent");
}

// Tick-label item whose text matches the target, by normalized equality
// first and containment second.
const TextItem* find_category_label(const std::vector<TextItem>& items,
                                    const std::string& target) {
    const std::string want = normalize_label(target);
    if (want.empty()) return nullptr;
    for (const auto& item : items)
        if (item.role_guess == TextRole::tick_label &&
            normalize_label(item.text) == want)
            return &item;
    for (const auto& item : items) {
        if (item.role_guess != TextRole::tick_label) continue;
        const std::string have = normalize_label(item.text);
        if (!have.empty() && (have.find(want) != std::string::npos ||
                              want.find(have) != std::string::npos))
            return &item;
    }
    return nullptr;
}

// Text attached to a legend entry's label box.
std::string legend_label_text(const std::vector<TextItem>& items,
                              const RectI& label_box) {
    for (const auto& item : items)
        if (rects_overlap(item.box, label_box)) return item.text;
    return "";
}

json rect_json(const RectI& r) { return json::array({r.x, r.y, r.w, r.h}); }

void require(bool ok, const char* code, const char* msg) {
    if (!ok) fail(code, msg);
}

// ---------------------------------------------------------------------------
// tool executors

ToolOutput run_classify_chart(const json&, ToolContext& ctx) {
    const auto c = reasoning::classify_chart(ctx.image);
    ctx.state.classification = c;
    ToolOutput out;
    out.summary["chart_type"] = to_string(c.chart_type);
    out.summary["confidence"] = c.confidence;
    out.summary_text = "chart_type=" + to_string(c.chart_type);
    return out;
}

ToolOutput run_detect_key_elements(const json&, ToolContext& ctx) {
    const auto elements = perception::detect_key_elements(ctx.image);
    ctx.state.elements = elements;

    json bars = json::array();
    for (const auto& b : elements.bars) bars.push_back(rect_json(b));
    json legend = json::array();
    for (const auto& e : elements.legend_entries)
        legend.push_back(rect_json(e.swatch_box));
    json payload;
    payload["plot_area"] = rect_json(elements.plot_area);
    payload["bars"] = std::move(bars);
    payload["legend_swatches"] = std::move(legend);

    const size_t ticks_y = elements.ticks_on(perception::AxisKind::y).size();
    const size_t ticks_x = elements.ticks_on(perception::AxisKind::x).size();
    ToolOutput out;
    out.summary["bars"] = elements.bars.size();
    out.summary["ticks_y"] = ticks_y;
    out.summary["ticks_x"] = ticks_x;
    out.summary["legend_entries"] = elements.legend_entries.size();
    out.summary_text = "bars=" + std::to_string(elements.bars.size()) +
                       " ticks=" + std::to_string(ticks_y + ticks_x) +
                       " legend=" +
                       std::to_string(elements.legend_entries.size());
    out.artifacts.push_back(
        evidence::Artifact::inline_json("bbox_set", payload));
    return out;
}

ToolOutput run_read_text(const json&, ToolContext& ctx) {
    require(ctx.ocr != nullptr, "BackendUnavailable",
            "no OCR backend configured for this episode");
    const auto items = perception::read_text(ctx.image, *ctx.ocr);
    ctx.state.text_items = items;
    ctx.state.text_read = true;

    std::map<std::string, int> roles;
    json listed = json::array();
    for (const auto& item : items) {
        ++roles[to_string(item.role_guess)];
        json ji;
        ji["text"] = item.text;
        ji["box"] = rect_json(item.box);
        ji["role"] = to_string(item.role_guess);
        listed.push_back(std::move(ji));
    }
    ToolOutput out;
    out.summary["count"] = items.size();
    out.summary["roles"] = roles;
    out.summary_text = "text items=" + std::to_string(items.size());
    out.artifacts.push_back(evidence::Artifact::inline_json(
        "text_items", json{{"items", std::move(listed)}}));
    return out;
}

ToolOutput run_calibrate_axis(const json& params, ToolContext& ctx) {
    require(ctx.state.elements.has_value(), "MissingDependency",
            "detect_key_elements must run before calibrate_axis");
    require(ctx.state.text_read, "MissingDependency",
            "read_text must run before calibrate_axis");
    const auto axis = params.value("axis", std::string("y")) == "x"
                          ? perception::AxisKind::x
                          : perception::AxisKind::y;

    std::vector<std::pair<double, double>> anchors;
    for (const auto& tick : ctx.state.elements->ticks_on(axis)) {
        if (!tick.label_box) continue;
        for (const auto& item : ctx.state.text_items) {
            if (!rects_overlap(item.box, *tick.label_box)) continue;
            const auto value = perception::parse_numeric_label(item.text);
            if (!value) continue;
            const double pixel = axis == perception::AxisKind::y
                                     ? double(tick.pixel.y)
                                     : double(tick.pixel.x);
            anchors.emplace_back(pixel, *value);
            break;
        }
    }
    require(anchors.size() >= 2, "InsufficientAnchors",
            "need at least two readable tick labels");

    const auto cal = perception::calibrate_axis(anchors, axis);
    ctx.state.calibration = cal;

    // Tick spacing in value units, for snapping readings to the grid.
    std::vector<double> values;
    for (const auto& [pixel, value] : anchors) values.push_back(value);
    std::sort(values.begin(), values.end());
    std::vector<double> diffs;
    for (size_t i = 1; i < values.size(); ++i) {
        const double d = values[i] - values[i - 1];
        if (d > 0.0) diffs.push_back(d);
    }
    if (!diffs.empty()) {
        std::sort(diffs.begin(), diffs.end());
        ctx.state.tick_step = diffs[diffs.size() / 2];
    }

    json payload;
    payload["alpha"] = cal.alpha;
    payload["beta"] = cal.beta;
    payload["axis"] = to_string(axis);
    payload["residual_rms"] = cal.residual_rms;
    payload["anchor_count"] = cal.anchor_count;
    if (ctx.state.tick_step) payload["tick_step"] = *ctx.state.tick_step;

    ToolOutput out;
    out.summary = payload;
    out.summary_text = "anchors=" + std::to_string(anchors.size()) +
                       " rms=" + std::to_string(cal.residual_rms);
    out.artifacts.push_back(
        evidence::Artifact::inline_json("calibration", payload));
    return out;
}

ToolOutput run_extract_curves(const json&, ToolContext& ctx) {
    require(ctx.state.elements.has_value(), "MissingDependency",
            "detect_key_elements must run before extract_curves");
    const RectI plot = ctx.state.elements->plot_area;

    std::vector<Rgb> colors;
    if (!ctx.state.elements->legend_entries.empty()) {
        for (const auto& e : ctx.state.elements->legend_entries)
            colors.push_back(e.swatch_color);
    } else {
        // No legend: take the dominant series color inside the plot.
        std::map<uint32_t, long long> tally;
        for (int y = plot.y; y < plot.bottom(); ++y)
            for (int x = plot.x; x < plot.right(); ++x) {
                if (!ctx.image.in_bounds(x, y)) continue;
                const Rgb c = ctx.image.get(x, y);
                if (!perception::is_colored(c)) continue;
                ++tally[(uint32_t(c.r) << 16) | (uint32_t(c.g) << 8) | c.b];
            }
        uint32_t best = 0;
        long long best_count = 0;
        for (const auto& [key, count] : tally)
            if (count > best_count) {
                best_count = count;
                best = key;
            }
        if (best_count > 0)
            colors.push_back(
                {uint8_t(best >> 16), uint8_t(best >> 8), uint8_t(best)});
    }

    std::vector<perception::CurveSkeleton> curves;
    for (const Rgb& color : colors) {
        auto skel = perception::extract_curve_skeleton(ctx.image, color, plot);
        if (skel.points.size() >= 5) curves.push_back(std::move(skel));
    }
    require(!curves.empty(), "NoCurves", "no traceable series in the plot");
    ctx.state.curves = curves;

    json listed = json::array();
    for (const auto& c : curves) {
        json jc;
        jc["color"] = json::array(
            {c.series_color.r, c.series_color.g, c.series_color.b});
        jc["points"] = c.points.size();
        listed.push_back(std::move(jc));
    }
    ToolOutput out;
    out.summary["curves"] = curves.size();
    out.summary["series"] = std::move(listed);
    out.summary_text = "curves=" + std::to_string(curves.size());
    return out;
}

ToolOutput run_segment_sectors(const json&, ToolContext& ctx) {
    const ChartType type = ctx.state.classification.chart_type;
    require(type != ChartType::unknown, "MissingDependency",
            "classify_chart must run before segment_sectors");
    require(type == ChartType::pie || type == ChartType::donut,
            "WrongChartType", "sector segmentation needs a pie or donut");

    const auto sectors = perception::segment_sectors(
        ctx.image, type, mix_seed(ctx.seed, uint64_t(ctx.call_order)));
    require(!sectors.empty(), "NoSectors", "no circular region to segment");
    ctx.state.sectors = sectors;

    json listed = json::array();
    for (const auto& s : sectors) {
        json js;
        js["share"] = s.proportion;
        js["angle"] = s.implied_angle;
        js["components"] = s.components;
        js["color"] = json::array({s.cluster.centroid_u8.r,
                                   s.cluster.centroid_u8.g,
                                   s.cluster.centroid_u8.b});
        listed.push_back(std::move(js));
    }
    ToolOutput out;
    out.summary["sectors"] = sectors.size();
    out.summary["shares"] = listed;
    out.summary_text = "sectors=" + std::to_string(sectors.size());
    out.artifacts.push_back(evidence::Artifact::inline_json(
        "mask_ref", json{{"sectors", std::move(listed)}}));
    return out;
}

ToolOutput run_match_legend(const json&, ToolContext& ctx) {
    require(ctx.state.elements.has_value(), "MissingDependency",
            "detect_key_elements must run before match_legend");
    require(ctx.state.text_read, "MissingDependency",
            "read_text must run before match_legend");
    const auto& legend = ctx.state.elements->legend_entries;
    require(!legend.empty(), "NoLegend", "chart has no legend entries");

    std::vector<perception::SeriesRegion> regions;
    if (!ctx.state.sectors.empty()) {
        for (size_t i = 0; i < ctx.state.sectors.size(); ++i)
            regions.push_back(
                {int(i), ctx.state.sectors[i].cluster.centroid_u8});
    } else if (!ctx.state.curves.empty()) {
        for (size_t i = 0; i < ctx.state.curves.size(); ++i)
            regions.push_back({int(i), ctx.state.curves[i].series_color});
    } else {
        for (size_t i = 0; i < ctx.state.elements->bars.size(); ++i) {
            const RectI& b = ctx.state.elements->bars[i];
            const int cx = b.x + b.w / 2;
            const int cy = b.y + b.h / 2;
            if (ctx.image.in_bounds(cx, cy))
                regions.push_back({int(i), ctx.image.get(cx, cy)});
        }
    }
    require(!regions.empty(), "MissingDependency",
            "no colored regions available to match against the legend");

    const auto assignment = perception::match_colors_to_legend(legend, regions);
    ctx.state.legend = assignment;
    ctx.state.legend_labels.clear();
    for (const auto& entry : legend)
        ctx.state.legend_labels.push_back(
            legend_label_text(ctx.state.text_items, entry.label_box));

    json pairs = json::array();
    for (const auto& p : assignment.pairs) {
        json jp;
        jp["legend"] = p.legend_index;
        jp["region"] = p.region;
        jp["distance"] = p.distance;
        jp["label"] = ctx.state.legend_labels[size_t(p.legend_index)];
        pairs.push_back(std::move(jp));
    }
    ToolOutput out;
    out.summary["pairs"] = pairs;
    out.summary["count_mismatch"] = assignment.count_mismatch;
    out.summary_text = "legend pairs=" + std::to_string(pairs.size());
    return out;
}

// Category position on the x axis for a target label, from the matched
// tick-label text item.
double target_x_center(const ToolContext& ctx, const std::string& target) {
    const TextItem* label = find_category_label(ctx.state.text_items, target);
    if (label == nullptr)
        fail("TargetNotFound", "no tick label matches: " + target);
    return center_x(label->box);
}

ToolOutput reading_output(const std::string& target, double value,
                          double confidence, json extra = json::object()) {
    ToolOutput out;
    out.summary = std::move(extra);
    out.summary["target"] = target;
    out.summary["value"] = value;
    out.reading = scheduler::AnswerValue{value};
    out.confidence = confidence;
    out.summary_text = target + " = " + std::to_string(value);
    return out;
}

ToolOutput run_read_value(const json& params, ToolContext& ctx) {
    const std::string target = resolve_target(params, ctx);
    const ChartType type = ctx.state.classification.chart_type;
    require(type != ChartType::unknown, "MissingDependency",
            "classify_chart must run before read_value");
    require(ctx.state.text_read, "MissingDependency",
            "read_text must run before read_value");

    if (type == ChartType::pie || type == ChartType::donut) {
        require(!ctx.state.sectors.empty(), "MissingDependency",
                "segment_sectors must run before read_value on a pie");
        require(ctx.state.legend.has_value(), "MissingDependency",
                "match_legend must run before read_value on a pie");
        const std::string want = normalize_label(target);
        for (const auto& pair : ctx.state.legend->pairs) {
            const auto& label =
                ctx.state.legend_labels[size_t(pair.legend_index)];
            if (normalize_label(label) != want) continue;
            if (pair.region < 0 ||
                size_t(pair.region) >= ctx.state.sectors.size())
                break;
            const double pct =
                ctx.state.sectors[size_t(pair.region)].proportion * 100.0;
            ToolOutput out = reading_output(target, pct, 0.8);
            out.summary["unit"] = "percent";
            ctx.state.readings[want] = pct;
            return out;
        }
        fail("TargetNotFound", "no legend entry matches: " + target);
    }

    require(ctx.state.calibration.has_value(), "MissingDependency",
            "calibrate_axis must run before read_value");
    const double tx = target_x_center(ctx, target);

    perception::NumericReading reading;
    if (type == ChartType::bar) {
        require(ctx.state.elements.has_value(), "MissingDependency",
                "detect_key_elements must run before read_value");
        const auto& bars = ctx.state.elements->bars;
        require(!bars.empty(), "NoBars",
                "detect_key_elements found no bars to read");
        size_t best = 0;
        double best_d = std::abs(center_x(bars[0]) - tx);
        for (size_t i = 1; i < bars.size(); ++i) {
            const double d = std::abs(center_x(bars[i]) - tx);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        reading = perception::read_via_auxline(*ctx.state.elements,
                                               *ctx.state.calibration,
                                               int(best), ctx.image,
                                               ctx.state.tick_step);
    } else if (type == ChartType::line || type == ChartType::scatter) {
        require(!ctx.state.curves.empty(), "MissingDependency",
                "extract_curves must run before read_value on a line");
        reading = perception::read_via_auxline(ctx.state.curves.front(),
                                               *ctx.state.calibration, tx,
                                               ctx.image,
                                               ctx.state.tick_step);
    } else {
        fail("WrongChartType", "no value-reading rule for this chart type");
    }

    ToolOutput out = reading_output(target, reading.value, 0.85);
    if (reading.tick_units) out.summary["tick_units"] = *reading.tick_units;
    out.artifacts.push_back(evidence::Artifact::file_blob(
        "overlay_image_ref", "png", encode_png(reading.overlay)));
    ctx.state.readings[normalize_label(target)] = reading.value;
    return out;
}

ToolOutput run_read_annotation(const json& params, ToolContext& ctx) {
    require(ctx.state.text_read, "MissingDependency",
            "read_text must run before read_annotation");
    const std::string target = resolve_target(params, ctx);
    const double tx = target_x_center(ctx, target);

    const TextItem* best = nullptr;
    double best_d = 0.0;
    std::optional<double> best_value;
    for (const auto& item : ctx.state.text_items) {
        if (item.role_guess != TextRole::value_label) continue;
        const auto value = perception::parse_numeric_label(item.text);
        if (!value) continue;
        const double d = std::abs(center_x(item.box) - tx);
        if (best == nullptr || d < best_d) {
            best = &item;
            best_d = d;
            best_value = value;
        }
    }
    require(best != nullptr, "NoAnnotation",
            "no printed value labels on this chart");

    ToolOutput out = reading_output(target, *best_value, 0.95);
    out.summary["label_text"] = best->text;
    ctx.state.readings[normalize_label(target)] = *best_value;
    return out;
}

ToolOutput run_compute(const json& params, ToolContext& ctx) {
    reasoning::CalcOp op = reasoning::CalcOp::compare;
    std::vector<double> operands;
    if (params.contains("op")) {
        op = reasoning::calc_op_from_string(
            params.at("op").get<std::string>());
        if (params.contains("operands"))
            for (const auto& v : params.at("operands"))
                operands.push_back(v.get<double>());
    } else {
        // Default behavior is question-driven: compare the two referent
        // readings of a comparison question.
        require(ctx.question.task == qtypes::QuestionTask::value_compare,
                "MissingOperands", "no computation requested");
        require(ctx.question.referents.size() >= 2, "MissingOperands",
                "comparison question names fewer than two referents");
        for (size_t i = 0; i < 2; ++i) {
            const auto it = ctx.state.readings.find(
                normalize_label(ctx.question.referents[i]));
            require(it != ctx.state.readings.end(), "MissingOperands",
                    "read the referent values first");
            operands.push_back(it->second);
        }
    }

    const auto result = reasoning::calc(op, operands);
    ToolOutput out;
    out.summary["op"] = reasoning::to_string(op);
    out.summary["operands"] = operands;
    if (const auto* number = std::get_if<double>(&result)) {
        out.summary["result"] = *number;
        out.reading = scheduler::AnswerValue{*number};
        out.confidence = 0.95;
        out.summary_text =
            reasoning::to_string(op) + " = " + std::to_string(*number);
    } else if (const auto* vec = std::get_if<std::vector<double>>(&result)) {
        out.summary["result"] = *vec;
        out.summary_text = reasoning::to_string(op) + " -> " +
                           std::to_string(vec->size()) + " values";
    } else {
        const auto ordering = std::get<reasoning::Ordering>(result);
        const std::string token = reasoning::to_string(ordering);
        out.summary["result"] = token;
        out.reading = scheduler::AnswerValue{token};
        out.confidence = 0.95;
        out.summary_text = reasoning::to_string(op) + " = " + token;
    }
    return out;
}

ToolOutput run_build_table(const json&, ToolContext& ctx) {
    const ChartType type = ctx.state.classification.chart_type;
    require(type == ChartType::bar || type == ChartType::line,
            "WrongChartType", "table structuring covers bar and line charts");
    require(ctx.state.elements.has_value(), "MissingDependency",
            "detect_key_elements must run before build_table");
    require(ctx.state.calibration.has_value(), "MissingDependency",
            "calibrate_axis must run before build_table");
    require(ctx.state.text_read, "MissingDependency",
            "read_text must run before build_table");

    std::vector<perception::NumericReading> readings;
    if (type == ChartType::bar) {
        require(!ctx.state.elements->bars.empty(), "NothingToTabulate",
                "no bars detected");
        for (size_t i = 0; i < ctx.state.elements->bars.size(); ++i) {
            auto r = perception::read_via_auxline(
                *ctx.state.elements, *ctx.state.calibration, int(i),
                ctx.image, ctx.state.tick_step);
            r.overlay = ChartImage();  // bulk read: keep the table light
            readings.push_back(std::move(r));
        }
    } else {
        require(!ctx.state.curves.empty(), "MissingDependency",
                "extract_curves must run before build_table on a line");
        const auto x_ticks =
            ctx.state.elements->ticks_on(perception::AxisKind::x);
        require(!x_ticks.empty(), "NothingToTabulate",
                "no x ticks to anchor the categories");
        for (const auto& tick : x_ticks) {
            for (const auto& curve : ctx.state.curves) {
                auto r = perception::read_via_auxline(
                    curve, *ctx.state.calibration, double(tick.pixel.x),
                    ctx.image, ctx.state.tick_step);
                r.overlay = ChartImage();
                readings.push_back(std::move(r));
            }
        }
    }

    const auto table = reasoning::structure_table(
        readings, ctx.state.text_items,
        ctx.state.legend.value_or(perception::LegendAssignment{}));
    ctx.state.table = table;

    const json payload = reasoning::table_to_json(table);
    ToolOutput out;
    out.summary["rows"] = table.row_keys.size();
    out.summary["cols"] = table.col_keys.size();
    out.summary_text = "table " + std::to_string(table.row_keys.size()) +
                       "x" + std::to_string(table.col_keys.size());
    out.artifacts.push_back(evidence::Artifact::inline_json("table", payload));
    return out;
}

const std::vector<ChartType> kAllConcrete = {
    ChartType::bar, ChartType::line, ChartType::pie, ChartType::donut,
    ChartType::scatter};

}  // namespace

void register_library_tools(orchestrator::ToolRegistry& registry) {
    ToolSpec spec;

    spec = {};
    spec.name = "classify_chart";
    spec.description = "Rule-based chart-type routing signal.";
    spec.cost = 0.2;
    spec.base_gain = 0.6;
    spec.quota = 2;
    registry.register_tool(spec, run_classify_chart);

    spec = {};
    spec.name = "detect_key_elements";
    spec.description =
        "Axes, ticks, bars, and legend swatches as geometric detections.";
    spec.cost = 1.0;
    spec.base_gain = 0.9;
    spec.quota = 2;
    spec.compatible = kAllConcrete;
    registry.register_tool(spec, run_detect_key_elements);

    spec = {};
    spec.name = "read_text";
    spec.description = "OCR pass over the full bitmap.";
    spec.cost = 1.0;
    spec.base_gain = 0.8;
    spec.quota = 3;
    registry.register_tool(spec, run_read_text);

    spec = {};
    spec.name = "calibrate_axis";
    spec.prerequisites = {"detect_key_elements", "read_text"};
    spec.description =
        "Least-squares pixel-to-value mapping from tick anchors.";
    spec.params_schema = {{"axis?", "string"}};
    spec.cost = 0.5;
    spec.base_gain = 0.8;
    spec.quota = 2;
    spec.compatible = {ChartType::bar, ChartType::line, ChartType::scatter};
    registry.register_tool(spec, run_calibrate_axis);

    spec = {};
    spec.name = "extract_curves";
    spec.prerequisites = {"detect_key_elements"};
    spec.description = "Per-series curve skeletons by color tracing.";
    spec.cost = 1.0;
    spec.base_gain = 0.8;
    spec.quota = 2;
    spec.compatible = {ChartType::line, ChartType::scatter};
    registry.register_tool(spec, run_extract_curves);

    spec = {};
    spec.name = "segment_sectors";
    spec.description =
        "Segment-cluster-quantify sector shares of a pie or donut.";
    spec.cost = 1.5;
    spec.base_gain = 1.0;
    spec.quota = 2;
    spec.compatible = {ChartType::pie, ChartType::donut};
    registry.register_tool(spec, run_segment_sectors);

    spec = {};
    spec.name = "match_legend";
    spec.prerequisites = {"detect_key_elements", "read_text"};
    spec.description = "Assign legend swatches to colored series regions.";
    spec.cost = 0.5;
    spec.base_gain = 0.5;
    spec.quota = 2;
    spec.compatible = {ChartType::bar, ChartType::line, ChartType::pie,
                       ChartType::donut};
    registry.register_tool(spec, run_match_legend);

    spec = {};
    spec.name = "read_value";
    spec.prerequisites = {"read_text"};
    spec.description =
        "Auxiliary-line numeric reading for a named category or sector.";
    spec.params_schema = {{"target?", "string"}};
    spec.cost = 0.8;
    spec.base_gain = 1.2;
    spec.quota = 6;
    spec.compatible = {ChartType::bar, ChartType::line, ChartType::pie,
                       ChartType::donut};
    registry.register_tool(spec, run_read_value);

    spec = {};
    spec.name = "read_annotation";
    spec.prerequisites = {"read_text"};
    spec.description = "Printed value label nearest the named category.";
    spec.params_schema = {{"target?", "string"}};
    spec.cost = 0.3;
    spec.base_gain = 1.0;
    spec.quota = 4;
    registry.register_tool(spec, run_read_annotation);

    spec = {};
    spec.name = "compute";
    spec.description =
        "Arithmetic over collected readings; compares referent values by "
        "default.";
    spec.params_schema = {{"op?", "string"}, {"operands?", "array"}};
    spec.cost = 0.1;
    spec.base_gain = 0.5;
    spec.quota = 4;
    registry.register_tool(spec, run_compute);

    spec = {};
    spec.name = "build_table";
    spec.prerequisites = {"detect_key_elements", "calibrate_axis", "read_text"};
    spec.description =
        "Read every mark and structure the chart as a data table.";
    spec.cost = 0.5;
    spec.base_gain = 0.7;
    spec.quota = 2;
    spec.compatible = {ChartType::bar, ChartType::line};
    registry.register_tool(spec, run_build_table);
}

orchestrator::ToolRegistry standard_registry() {
    orchestrator::ToolRegistry registry;
    register_library_tools(registry);
    return registry;
}

orchestrator::EpisodeResult answer_question(
    const ChartImage& image, const std::string& question_text,
    const scheduler::SchedulerConfig& config,
    const orchestrator::EpisodeOptions& options) {
    const auto question = qtypes::parse_question(question_text);
    const auto registry = standard_registry();
    orchestrator::EigPlanner planner;
    return orchestrator::run_episode(image, question, config, planner,
                                     registry, options);
}

// ---------------------------------------------------------------------------
// replay

LibraryReplayRunner::LibraryReplayRunner(
    const orchestrator::ToolRegistry& registry,
    orchestrator::EpisodeOptions options)
    : registry_(&registry), options_(std::move(options)) {}

bool LibraryReplayRunner::has_tool(const std::string& name) const {
    return registry_->has(name) || name == "planner" ||
           name == "orchestrator" || name == "grouptalk";
}

evidence::EvidencePackage LibraryReplayRunner::rerun(
    const evidence::EvidencePackage& recorded, const ChartImage& image) const {
    const auto question = qtypes::parse_question(recorded.question);
    const auto config = scheduler::parse_config(recorded.config.dump());
    orchestrator::EpisodeOptions options = options_;
    options.seed = recorded.seed;
    orchestrator::EigPlanner planner;
    const auto result = orchestrator::run_episode(image, question, config,
                                                  planner, *registry_, options);
    return result.package;
}

}  // namespace chartagent::toollib
