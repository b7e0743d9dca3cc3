#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "chartagent/common.hpp"
#include "chartagent/image.hpp"
#include "chartagent/perception.hpp"

namespace chartagent::reasoning {

using nlohmann::json;

// ---------------------------------------------------------------------------
// chart classification

struct Classification {
    ChartType chart_type = ChartType::unknown;
    double confidence = 0.0;
};

// Rule-based routing signal. Decision features: axis presence, bar-rectangle
// count, colored-column continuity (curve vs. markers), circular-region
// presence, and the donut's empty center. Unknown is a value, not an error.
Classification classify_chart(const ChartImage& image);

// ---------------------------------------------------------------------------
// calculation

enum class CalcOp { sum, normalize, ratio, diff, compare, scale };
enum class Ordering { less, equal, greater };

std::string to_string(CalcOp op);
CalcOp calc_op_from_string(const std::string& s);
std::string to_string(Ordering o);

// sum/diff/ratio/scale yield a number, normalize a vector, compare an
// ordering. compare treats values within an absolute 1e-9 band as equal.
using CalcResult = std::variant<double, std::vector<double>, Ordering>;

CalcResult calc(CalcOp op, const std::vector<double>& operands);

// ---------------------------------------------------------------------------
// relation graph

enum class NodeKind { bar, sector, legend, series };
enum class RelationKind { left_of, above, same_series, legend_of };

std::string to_string(NodeKind k);
std::string to_string(RelationKind k);

struct GraphNode {
    NodeKind kind = NodeKind::bar;
    int index = 0;  // position within the kind's source list
    bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
    RelationKind kind = RelationKind::left_of;
    int from = 0;  // index into RelationGraph::nodes
    int to = 0;
    std::optional<double> magnitude;
};

struct RelationGraph {
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;
};

// Every edge lands inside `nodes`, and the spatial relations (left_of,
// above) are irreflexive and antisymmetric.
bool validate_graph(const RelationGraph& graph);

// left_of: chain over bars ordered by x. above: chain over bar tops by
// value-axis pixel order (ties skipped). legend_of: one edge per mapping
// pair, pointing at the matching sector or at a synthesized series node.
RelationGraph build_relation_graph(
    const perception::KeyElements& elements,
    const std::vector<perception::SectorEstimate>& sectors,
    const perception::LegendAssignment& mapping);

// ---------------------------------------------------------------------------
// data tables

struct DataTable {
    struct Cell {
        int r = 0;
        int c = 0;
        std::variant<double, std::string> value;
        int64_t provenance = 0;  // evidence item id; 0 = not backed
    };
    std::vector<std::string> row_keys;
    std::vector<std::string> col_keys;
    std::vector<Cell> cells;
};

json table_to_json(const DataTable& table);
DataTable table_from_json(const json& j);

// Readings arrive row-major over categories x series. Row keys come from the
// x-axis tick labels (the band of tick labels sharing one baseline), column
// keys from the legend labels — or a single "value" column when the chart
// has no legend. Rows past the available labels fall back to positional
// "c<i>" keys with provenance cleared to zero.
DataTable structure_table(
    const std::vector<perception::NumericReading>& readings,
    const std::vector<perception::TextItem>& labels,
    const perception::LegendAssignment& mapping,
    const std::vector<int64_t>& provenance = {});

}  // namespace chartagent::reasoning
