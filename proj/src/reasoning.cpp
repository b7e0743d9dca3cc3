#include "chartagent/reasoning.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace chartagent::reasoning {

// ---------------------------------------------------------------------------
// chart classification

Classification classify_chart(const ChartImage& image) {
    // Axis-bearing families first.
    bool has_axes = true;
    perception::KeyElements key;
    try {
        key = perception::detect_key_elements(image);
    } catch (const Error& e) {
        if (e.code() != "NoAxesFound") throw;
        has_axes = false;
    }

    if (has_axes) {
        // Count substantial bar rectangles; a stroke grazing the baseline
        // can masquerade as a sliver, so tiny ones don't vote.
        int solid_bars = 0;
        for (const RectI& b : key.bars)
            if (b.h >= 8 && b.w >= 3) ++solid_bars;
        if (solid_bars > 0) return {ChartType::bar, 0.95};

        // Continuity of colored ink across the plot columns separates a
        // drawn curve from isolated markers.
        const RectI& plot = key.plot_area;
        int colored_cols = 0;
        for (int x = plot.x; x < plot.right(); ++x)
            for (int y = plot.y; y < plot.bottom(); ++y)
                if (perception::is_colored(image.get(x, y))) {
                    ++colored_cols;
                    break;
                }
        if (colored_cols == 0) return {ChartType::unknown, 0.2};
        const double coverage = double(colored_cols) / std::max(1, plot.w);
        if (coverage >= 0.5) return {ChartType::line, 0.9};
        return {ChartType::scatter, 0.85};
    }

    // No axes: look for a circular body.
    const auto circle = perception::find_circular_region(image);
    if (!circle) {
        bool any_colored = false;
        for (int y = 0; y < image.height && !any_colored; ++y)
            for (int x = 0; x < image.width; ++x)
                if (perception::is_colored(image.get(x, y))) {
                    any_colored = true;
                    break;
                }
        return {ChartType::unknown, any_colored ? 0.2 : 0.1};
    }

    // A donut leaves the middle of the disk empty.
    int occupied = 0, total = 0;
    const double hole = 0.3 * circle->outer;
    for (int y = int(circle->center.y - hole); y <= int(circle->center.y + hole); ++y)
        for (int x = int(circle->center.x - hole); x <= int(circle->center.x + hole); ++x) {
            if (!image.in_bounds(x, y)) continue;
            if (std::hypot(x + 0.5 - circle->center.x,
                           y + 0.5 - circle->center.y) > hole)
                continue;
            ++total;
            if (perception::is_colored(image.get(x, y))) ++occupied;
        }
    if (total > 0 && occupied < total / 5) return {ChartType::donut, 0.95};
    return {ChartType::pie, 0.95};
}

// ---------------------------------------------------------------------------
// calculation

std::string to_string(CalcOp op) {
    switch (op) {
        case CalcOp::sum: return "sum";
        case CalcOp::normalize: return "normalize";
        case CalcOp::ratio: return "ratio";
        case CalcOp::diff: return "diff";
        case CalcOp::compare: return "compare";
        case CalcOp::scale: return "scale";
    }
    return "sum";
}

CalcOp calc_op_from_string(const std::string& s) {
    if (s == "sum") return CalcOp::sum;
    if (s == "normalize") return CalcOp::normalize;
    if (s == "ratio") return CalcOp::ratio;
    if (s == "diff") return CalcOp::diff;
    if (s == "compare") return CalcOp::compare;
    if (s == "scale") return CalcOp::scale;
    fail("UnknownOp", "not a calc operation: " + s);
}

std::string to_string(Ordering o) {
    switch (o) {
        case Ordering::less: return "less";
        case Ordering::equal: return "equal";
        case Ordering::greater: return "greater";
    }
    return "equal";
}

CalcResult calc(CalcOp op, const std::vector<double>& operands) {
    const auto need = [&](size_t n) {
        if (operands.size() != n)
            fail("ArityMismatch", to_string(op) + " takes " +
                                      std::to_string(n) + " operands, got " +
                                      std::to_string(operands.size()));
    };
    switch (op) {
        case CalcOp::sum: {
            if (operands.empty())
                fail("ArityMismatch", "sum needs at least one operand");
            return std::accumulate(operands.begin(), operands.end(), 0.0);
        }
        case CalcOp::normalize: {
            if (operands.empty())
                fail("ArityMismatch", "normalize needs at least one operand");
            const double s =
                std::accumulate(operands.begin(), operands.end(), 0.0);
            if (s == 0.0)
                fail("DivisionByZero", "normalize over a zero-sum vector");
            std::vector<double> out;
            out.reserve(operands.size());
            for (double v : operands) out.push_back(v / s);
            return out;
        }
        case CalcOp::ratio:
            need(2);
            if (operands[1] == 0.0)
                fail("DivisionByZero", "ratio with zero denominator");
            return operands[0] / operands[1];
        case CalcOp::diff:
            need(2);
            return operands[0] - operands[1];
        case CalcOp::compare:
            need(2);
            if (std::fabs(operands[0] - operands[1]) <= 1e-9)
                return Ordering::equal;
            return operands[0] > operands[1] ? Ordering::greater
                                             : Ordering::less;
        case CalcOp::scale:
            need(2);
            return operands[0] * operands[1];
    }
    fail("ArityMismatch", "unhandled calc operation");
}

// ---------------------------------------------------------------------------
// relation graph

std::string to_string(NodeKind k) {
    switch (k) {
        case NodeKind::bar: return "bar";
        case NodeKind::sector: return "sector";
        case NodeKind::legend: return "legend";
        case NodeKind::series: return "series";
    }
    return "bar";
}

std::string to_string(RelationKind k) {
    switch (k) {
        case RelationKind::left_of: return "left_of";
        case RelationKind::above: return "above";
        case RelationKind::same_series: return "same_series";
        case RelationKind::legend_of: return "legend_of";
    }
    return "left_of";
}

bool validate_graph(const RelationGraph& graph) {
    const int n = int(graph.nodes.size());
    std::set<std::pair<int, int>> left, above;
    for (const GraphEdge& e : graph.edges) {
        if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n) return false;
        if (e.kind == RelationKind::left_of || e.kind == RelationKind::above) {
            if (e.from == e.to) return false;
            auto& seen = e.kind == RelationKind::left_of ? left : above;
            if (seen.count({e.to, e.from})) return false;
            seen.insert({e.from, e.to});
        }
    }
    return true;
}

RelationGraph build_relation_graph(
    const perception::KeyElements& elements,
    const std::vector<perception::SectorEstimate>& sectors,
    const perception::LegendAssignment& mapping) {
    RelationGraph g;

    std::vector<int> bar_nodes, sector_nodes, legend_nodes;
    for (size_t i = 0; i < elements.bars.size(); ++i) {
        bar_nodes.push_back(int(g.nodes.size()));
        g.nodes.push_back({NodeKind::bar, int(i)});
    }
    for (size_t i = 0; i < sectors.size(); ++i) {
        sector_nodes.push_back(int(g.nodes.size()));
        g.nodes.push_back({NodeKind::sector, int(i)});
    }
    for (size_t i = 0; i < elements.legend_entries.size(); ++i) {
        legend_nodes.push_back(int(g.nodes.size()));
        g.nodes.push_back({NodeKind::legend, int(i)});
    }

    // left_of: chain over bars by x.
    std::vector<int> by_x = bar_nodes;
    std::sort(by_x.begin(), by_x.end(), [&](int a, int b) {
        return elements.bars[size_t(g.nodes[size_t(a)].index)].x <
               elements.bars[size_t(g.nodes[size_t(b)].index)].x;
    });
    for (size_t i = 0; i + 1 < by_x.size(); ++i) {
        const RectI& ra = elements.bars[size_t(g.nodes[size_t(by_x[i])].index)];
        const RectI& rb =
            elements.bars[size_t(g.nodes[size_t(by_x[i + 1])].index)];
        g.edges.push_back({RelationKind::left_of, by_x[i], by_x[i + 1],
                           double(rb.x - ra.x)});
    }

    // above: chain over bar tops by value-axis pixel order; ties get no edge.
    std::vector<int> by_y = bar_nodes;
    std::stable_sort(by_y.begin(), by_y.end(), [&](int a, int b) {
        return elements.bars[size_t(g.nodes[size_t(a)].index)].y <
               elements.bars[size_t(g.nodes[size_t(b)].index)].y;
    });
    for (size_t i = 0; i + 1 < by_y.size(); ++i) {
        const RectI& ra = elements.bars[size_t(g.nodes[size_t(by_y[i])].index)];
        const RectI& rb =
            elements.bars[size_t(g.nodes[size_t(by_y[i + 1])].index)];
        if (ra.y == rb.y) continue;
        g.edges.push_back({RelationKind::above, by_y[i], by_y[i + 1],
                           double(rb.y - ra.y)});
    }

    // legend_of: one edge per mapping pair, from the legend entry to the
    // matching sector, or to a synthesized series node for cartesian charts.
    std::map<int, int> series_nodes;
    for (const auto& pair : mapping.pairs) {
        if (pair.legend_index < 0 ||
            size_t(pair.legend_index) >= legend_nodes.size())
            continue;
        int target;
        if (pair.region >= 0 && size_t(pair.region) < sectors.size()) {
            target = sector_nodes[size_t(pair.region)];
        } else if (auto it = series_nodes.find(pair.region);
                   it != series_nodes.end()) {
            target = it->second;
        } else {
            target = int(g.nodes.size());
            g.nodes.push_back({NodeKind::series, pair.region});
            series_nodes[pair.region] = target;
        }
        g.edges.push_back({RelationKind::legend_of,
                           legend_nodes[size_t(pair.legend_index)], target,
                           pair.distance});
    }
    return g;
}

// ---------------------------------------------------------------------------
// data tables

json table_to_json(const DataTable& table) {
    json cells = json::array();
    for (const DataTable::Cell& cell : table.cells) {
        json jc{{"r", cell.r}, {"c", cell.c}, {"provenance", cell.provenance}};
        if (std::holds_alternative<double>(cell.value))
            jc["value"] = std::get<double>(cell.value);
        else
            jc["value"] = std::get<std::string>(cell.value);
        cells.push_back(std::move(jc));
    }
    return json{{"row_keys", table.row_keys},
                {"col_keys", table.col_keys},
                {"cells", std::move(cells)}};
}

DataTable table_from_json(const json& j) {
    try {
        DataTable table;
        table.row_keys = j.at("row_keys").get<std::vector<std::string>>();
        table.col_keys = j.at("col_keys").get<std::vector<std::string>>();
        for (const json& jc : j.at("cells")) {
            DataTable::Cell cell;
            cell.r = jc.at("r").get<int>();
            cell.c = jc.at("c").get<int>();
            cell.provenance = jc.at("provenance").get<int64_t>();
            const json& v = jc.at("value");
            if (v.is_string())
                cell.value = v.get<std::string>();
            else
                cell.value = v.get<double>();
            table.cells.push_back(std::move(cell));
        }
        return table;
    } catch (const json::exception& e) {
        fail("SchemaViolation", std::string("bad table document: ") + e.what());
    }
}

DataTable structure_table(
    const std::vector<perception::NumericReading>& readings,
    const std::vector<perception::TextItem>& labels,
    const perception::LegendAssignment& mapping,
    const std::vector<int64_t>& provenance) {
    if (readings.empty()) fail("EmptyInput", "no readings to structure");

    DataTable table;

    // Column keys: legend labels in mapping order, else one value column.
    std::vector<std::string> legend_texts;
    for (const perception::TextItem& item : labels)
        if (item.role_guess == TextRole::legend_label)
            legend_texts.push_back(item.text);
    const size_t n_cols = mapping.pairs.empty() ? 1 : mapping.pairs.size();
    for (size_t c = 0; c < n_cols; ++c) {
        if (!mapping.pairs.empty() && mapping.pairs[c].legend_index >= 0 &&
            size_t(mapping.pairs[c].legend_index) < legend_texts.size())
            table.col_keys.push_back(
                legend_texts[size_t(mapping.pairs[c].legend_index)]);
        else if (n_cols == 1)
            table.col_keys.push_back("value");
        else
            table.col_keys.push_back("s" + std::to_string(c));
    }

    // Row keys: the category axis is the band of tick labels that share one
    // baseline (y tick labels each sit at their own height). Take the lowest
    // such band, ordered by x.
    std::map<int, std::vector<const perception::TextItem*>> bands;
    for (const perception::TextItem& item : labels)
        if (item.role_guess == TextRole::tick_label)
            bands[item.box.y].push_back(&item);
    std::vector<const perception::TextItem*> categories;
    for (const auto& [y, group] : bands)
        if (group.size() >= 2) categories = group;  // ascending y: last wins
    std::sort(categories.begin(), categories.end(),
              [](const perception::TextItem* a, const perception::TextItem* b) {
                  return a->box.x < b->box.x;
              });

    const size_t n_rows = (readings.size() + n_cols - 1) / n_cols;
    for (size_t r = 0; r < n_rows; ++r)
        table.row_keys.push_back(r < categories.size()
                                     ? categories[r]->text
                                     : "c" + std::to_string(r));

    for (size_t i = 0; i < readings.size(); ++i) {
        DataTable::Cell cell;
        cell.r = int(i / n_cols);
        cell.c = int(i % n_cols);
        cell.value = readings[i].value;
        // A synthesized row key cannot be traced to a labeled category, so
        // the cell loses its evidence backing.
        if (size_t(cell.r) < categories.size() && i < provenance.size())
            cell.provenance = provenance[i];
        table.cells.push_back(std::move(cell));
    }
    return table;
}

}  // namespace chartagent::reasoning
