#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "chartagent/perception.hpp"
#include "chartagent/reasoning.hpp"
#include "chartagent/synthgen.hpp"

using namespace chartagent;
using namespace chartagent::reasoning;

namespace {

perception::NumericReading reading(double v) {
    perception::NumericReading r;
    r.value = v;
    return r;
}

perception::TextItem text_item(const std::string& text, int x, int y,
                               TextRole role) {
    return {text, RectI{x, y, int(text.size()) * 6, 10}, 1.0, role};
}

perception::KeyElements bars_at(const std::vector<RectI>& rects) {
    perception::KeyElements key;
    key.bars = rects;
    return key;
}

}  // namespace

// ---------------------------------------------------------------------------
// classification

TEST_CASE("classification labels the synthetic corpus by family") {
    const ChartType types[] = {ChartType::bar, ChartType::line,
                               ChartType::scatter, ChartType::pie,
                               ChartType::donut};
    int total = 0, correct = 0;
    for (ChartType type : types)
        for (uint64_t seed = 0; seed < 100; ++seed) {
            const auto spec = synthgen::generate_spec(type, seed);
            const auto r = synthgen::render(spec);
            const Classification got = classify_chart(r.image);
            ++total;
            if (got.chart_type == type) ++correct;
        }
    CHECK(total == 500);
    CHECK(double(correct) / total >= 0.98);
}

TEST_CASE("blank images classify as unknown with low confidence") {
    const Classification got = classify_chart(ChartImage(256, 256));
    CHECK(got.chart_type == ChartType::unknown);
    CHECK(got.confidence <= 0.2);
}

TEST_CASE("axes without content classify as unknown") {
    ChartImage img(400, 300);
    const Rgb ink{40, 40, 40};
    for (int y = 30; y <= 260; ++y) img.set(60, y, ink);
    for (int x = 60; x <= 370; ++x) img.set(x, 260, ink);
    const Classification got = classify_chart(img);
    CHECK(got.chart_type == ChartType::unknown);
    CHECK(got.confidence <= 0.2);
}

TEST_CASE("classification is deterministic") {
    const auto r = synthgen::render(synthgen::generate_spec(ChartType::pie, 6));
    const Classification a = classify_chart(r.image);
    const Classification b = classify_chart(r.image);
    CHECK(a.chart_type == b.chart_type);
    CHECK(a.confidence == b.confidence);
    CHECK(a.chart_type == ChartType::pie);
}

// ---------------------------------------------------------------------------
// calc

TEST_CASE("calc arithmetic matches the operation semantics") {
    CHECK(std::get<double>(calc(CalcOp::sum, {1.5, 2.5, -1.0})) ==
          doctest::Approx(3.0).epsilon(1e-12));
    CHECK(std::get<double>(calc(CalcOp::ratio, {36.0, 360.0})) ==
          doctest::Approx(0.1).epsilon(1e-12));
    CHECK(std::get<double>(calc(CalcOp::diff, {4.0, 6.5})) ==
          doctest::Approx(-2.5).epsilon(1e-12));
    CHECK(std::get<double>(calc(CalcOp::scale, {4.55, 10.0})) ==
          doctest::Approx(45.5).epsilon(1e-12));

    const auto norm =
        std::get<std::vector<double>>(calc(CalcOp::normalize, {2, 3, 5}));
    REQUIRE(norm.size() == 3);
    CHECK(norm[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(norm[1] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(norm[2] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("compare orders reals with a 1e-9 equality band") {
    CHECK(std::get<Ordering>(calc(CalcOp::compare, {4.55, 3.2})) ==
          Ordering::greater);
    CHECK(std::get<Ordering>(calc(CalcOp::compare, {3.2, 4.55})) ==
          Ordering::less);
    CHECK(std::get<Ordering>(calc(CalcOp::compare, {1.0, 1.0})) ==
          Ordering::equal);
    CHECK(std::get<Ordering>(calc(CalcOp::compare, {1.0, 1.0 + 5e-10})) ==
          Ordering::equal);
    CHECK(std::get<Ordering>(calc(CalcOp::compare, {1.0, 1.0 + 2e-9})) ==
          Ordering::less);
    CHECK(std::get<Ordering>(calc(CalcOp::compare, {1.0 + 2e-9, 1.0})) ==
          Ordering::greater);
}

TEST_CASE("calc rejects wrong arities and zero denominators") {
    CHECK_THROWS_AS(calc(CalcOp::sum, {}), Error);
    CHECK_THROWS_AS(calc(CalcOp::ratio, {1.0}), Error);
    CHECK_THROWS_AS(calc(CalcOp::ratio, {1.0, 2.0, 3.0}), Error);
    CHECK_THROWS_AS(calc(CalcOp::compare, {1.0}), Error);
    CHECK_THROWS_AS(calc(CalcOp::scale, {1.0, 2.0, 3.0}), Error);
    try {
        calc(CalcOp::diff, {1.0});
    } catch (const Error& e) {
        CHECK(e.code() == "ArityMismatch");
    }
    try {
        calc(CalcOp::ratio, {1.0, 0.0});
    } catch (const Error& e) {
        CHECK(e.code() == "DivisionByZero");
    }
    try {
        calc(CalcOp::normalize, {1.0, -1.0});
    } catch (const Error& e) {
        CHECK(e.code() == "DivisionByZero");
    }
}

TEST_CASE("normalize sums to one for any positive vector") {
    Rng rng(31);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> v;
        const int n = rng.uniform_int(1, 12);
        for (int i = 0; i < n; ++i) v.push_back(rng.uniform(1e-6, 1e6));
        const auto norm = std::get<std::vector<double>>(calc(CalcOp::normalize, v));
        double s = 0;
        for (double x : norm) s += x;
        CHECK(std::fabs(s - 1.0) <= 1e-12);
    }
}

TEST_CASE("compare agrees with real ordering outside the band") {
    Rng rng(77);
    for (int trial = 0; trial < 500; ++trial) {
        const double a = rng.uniform(-100.0, 100.0);
        double b = rng.uniform(-100.0, 100.0);
        if (std::fabs(a - b) <= 2e-9) b += 1.0;
        const Ordering got = std::get<Ordering>(calc(CalcOp::compare, {a, b}));
        CHECK(got == (a > b ? Ordering::greater : Ordering::less));
    }
}

TEST_CASE("calc op names round-trip") {
    for (CalcOp op : {CalcOp::sum, CalcOp::normalize, CalcOp::ratio,
                      CalcOp::diff, CalcOp::compare, CalcOp::scale})
        CHECK(calc_op_from_string(to_string(op)) == op);
    CHECK_THROWS_AS(calc_op_from_string("mod"), Error);
}

// ---------------------------------------------------------------------------
// relation graph

TEST_CASE("two bars produce a single left_of edge") {
    const auto key = bars_at({{100, 50, 20, 100}, {200, 80, 20, 70}});
    const RelationGraph g = build_relation_graph(key, {}, {});
    REQUIRE(g.nodes.size() == 2);
    // left_of plus one above edge (distinct tops).
    int left_edges = 0;
    for (const GraphEdge& e : g.edges)
        if (e.kind == RelationKind::left_of) {
            ++left_edges;
            CHECK(g.nodes[size_t(e.from)].index == 0);
            CHECK(g.nodes[size_t(e.to)].index == 1);
            CHECK(e.magnitude == 100.0);
        }
    CHECK(left_edges == 1);
    CHECK(validate_graph(g));
}

TEST_CASE("one bar yields one node and no edges") {
    const RelationGraph g = build_relation_graph(
        bars_at({{100, 50, 20, 100}}), {}, {});
    CHECK(g.nodes.size() == 1);
    CHECK(g.edges.empty());
    CHECK(validate_graph(g));
}

TEST_CASE("five bars chain into four left_of edges without cycles") {
    const auto key = bars_at({{50, 90, 18, 60},
                              {100, 40, 18, 110},
                              {150, 120, 18, 30},
                              {200, 70, 18, 80},
                              {250, 100, 18, 50}});
    const RelationGraph g = build_relation_graph(key, {}, {});
    std::vector<int> out_deg(g.nodes.size(), 0), in_deg(g.nodes.size(), 0);
    int left_edges = 0;
    for (const GraphEdge& e : g.edges)
        if (e.kind == RelationKind::left_of) {
            ++left_edges;
            ++out_deg[size_t(e.from)];
            ++in_deg[size_t(e.to)];
        }
    CHECK(left_edges == 4);
    // A transitivity-reduced chain: every node has at most one left_of
    // edge on each side, and the degree sums leave exactly two chain ends.
    CHECK(*std::max_element(out_deg.begin(), out_deg.end()) == 1);
    CHECK(*std::max_element(in_deg.begin(), in_deg.end()) == 1);
    CHECK(validate_graph(g));
}

TEST_CASE("above edges order bars by top pixel and skip ties") {
    const auto key = bars_at({{50, 90, 18, 60},
                              {100, 40, 18, 110},
                              {150, 90, 18, 60},
                              {200, 20, 18, 130}});
    const RelationGraph g = build_relation_graph(key, {}, {});
    std::vector<std::pair<int, int>> above;
    for (const GraphEdge& e : g.edges)
        if (e.kind == RelationKind::above)
            above.push_back({g.nodes[size_t(e.from)].index,
                             g.nodes[size_t(e.to)].index});
    // Tops: bar3 at 20, bar1 at 40, bars 0 and 2 tied at 90.
    REQUIRE(above.size() == 2);
    CHECK(above[0] == std::pair<int, int>{3, 1});
    CHECK(above[1].first == 1);
    CHECK((above[1].second == 0 || above[1].second == 2));
    CHECK(validate_graph(g));
}

TEST_CASE("legend edges bind swatches to sectors or series nodes") {
    perception::KeyElements key;
    perception::LegendEntry e0, e1;
    e0.swatch_box = {300, 30, 10, 10};
    e1.swatch_box = {300, 46, 10, 10};
    key.legend_entries = {e0, e1};

    perception::LegendAssignment mapping;
    mapping.pairs = {{0, 1, 4.0}, {1, 0, 9.0}};

    SUBCASE("sectors present: edges land on sector nodes") {
        std::vector<perception::SectorEstimate> sectors(2);
        const RelationGraph g = build_relation_graph(key, sectors, mapping);
        REQUIRE(g.nodes.size() == 4);  // 2 sectors + 2 legend entries
        int legend_edges = 0;
        for (const GraphEdge& e : g.edges)
            if (e.kind == RelationKind::legend_of) {
                ++legend_edges;
                CHECK(g.nodes[size_t(e.from)].kind == NodeKind::legend);
                CHECK(g.nodes[size_t(e.to)].kind == NodeKind::sector);
            }
        CHECK(legend_edges == 2);
        CHECK(validate_graph(g));
    }

    SUBCASE("no sectors: series nodes are synthesized") {
        const RelationGraph g = build_relation_graph(key, {}, mapping);
        int series_nodes = 0;
        for (const GraphNode& n : g.nodes)
            if (n.kind == NodeKind::series) ++series_nodes;
        CHECK(series_nodes == 2);
        int legend_edges = 0;
        for (const GraphEdge& e : g.edges)
            if (e.kind == RelationKind::legend_of) {
                ++legend_edges;
                CHECK(g.nodes[size_t(e.to)].kind == NodeKind::series);
                CHECK(e.magnitude.has_value());
            }
        CHECK(legend_edges == 2);
        CHECK(validate_graph(g));
    }
}

TEST_CASE("graph validation rejects malformed graphs") {
    RelationGraph g;
    g.nodes = {{NodeKind::bar, 0}, {NodeKind::bar, 1}};

    SUBCASE("edge out of range") {
        g.edges = {{RelationKind::left_of, 0, 5, {}}};
        CHECK_FALSE(validate_graph(g));
    }
    SUBCASE("reflexive spatial edge") {
        g.edges = {{RelationKind::above, 1, 1, {}}};
        CHECK_FALSE(validate_graph(g));
    }
    SUBCASE("antisymmetry violation") {
        g.edges = {{RelationKind::left_of, 0, 1, {}},
                   {RelationKind::left_of, 1, 0, {}}};
        CHECK_FALSE(validate_graph(g));
    }
    SUBCASE("legend_of may self-reference without invalidating") {
        g.edges = {{RelationKind::legend_of, 0, 0, {}}};
        CHECK(validate_graph(g));
    }
}

TEST_CASE("relation graphs from rendered bar charts are well-formed") {
    for (uint64_t seed : {1u, 17u, 23u}) {
        const auto spec = synthgen::generate_spec(ChartType::bar, seed);
        const auto r = synthgen::render(spec);
        const auto key = perception::detect_key_elements(r.image);
        const RelationGraph g = build_relation_graph(key, {}, {});
        CHECK(validate_graph(g));
        int left_edges = 0;
        for (const GraphEdge& e : g.edges)
            if (e.kind == RelationKind::left_of) ++left_edges;
        CHECK(left_edges == int(key.bars.size()) - 1);
    }
}

// ---------------------------------------------------------------------------
// data tables

TEST_CASE("a single series structures into an n-by-one table") {
    const std::vector<perception::NumericReading> readings = {
        reading(1.0), reading(2.0), reading(3.0)};
    const std::vector<perception::TextItem> labels = {
        text_item("Q1", 80, 360, TextRole::tick_label),
        text_item("Q2", 180, 360, TextRole::tick_label),
        text_item("Q3", 280, 360, TextRole::tick_label),
        text_item("50", 20, 100, TextRole::tick_label),
        text_item("0", 26, 340, TextRole::tick_label),
    };
    const DataTable t = structure_table(readings, labels, {}, {4, 5, 6});
    CHECK(t.row_keys == std::vector<std::string>{"Q1", "Q2", "Q3"});
    CHECK(t.col_keys == std::vector<std::string>{"value"});
    REQUIRE(t.cells.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(t.cells[i].r == int(i));
        CHECK(t.cells[i].c == 0);
        CHECK(std::get<double>(t.cells[i].value) == double(i + 1));
        CHECK(t.cells[i].provenance == int64_t(i + 4));
    }
}

TEST_CASE("missing category labels fall back to positional keys") {
    const DataTable t =
        structure_table({reading(7.5)}, {}, {}, {42});
    REQUIRE(t.row_keys.size() == 1);
    CHECK(t.row_keys[0] == "c0");
    REQUIRE(t.cells.size() == 1);
    CHECK(std::get<double>(t.cells[0].value) == 7.5);
    // A synthesized key severs the evidence link.
    CHECK(t.cells[0].provenance == 0);
}

TEST_CASE("legend labels key the columns in mapping order") {
    const std::vector<perception::NumericReading> readings = {
        reading(1.0), reading(2.0), reading(3.0), reading(4.0)};
    const std::vector<perception::TextItem> labels = {
        text_item("Jan", 70, 360, TextRole::tick_label),
        text_item("Feb", 170, 360, TextRole::tick_label),
        text_item("Revenue", 420, 30, TextRole::legend_label),
        text_item("Cost", 420, 46, TextRole::legend_label),
    };
    perception::LegendAssignment mapping;
    mapping.pairs = {{0, 0, 0.0}, {1, 1, 0.0}};
    const DataTable t = structure_table(readings, labels, mapping, {1, 2, 3, 4});
    CHECK(t.row_keys == std::vector<std::string>{"Jan", "Feb"});
    CHECK(t.col_keys == std::vector<std::string>{"Revenue", "Cost"});
    REQUIRE(t.cells.size() == 4);
    CHECK(std::get<double>(t.cells[1].value) == 2.0);
    CHECK(t.cells[1].r == 0);
    CHECK(t.cells[1].c == 1);
    CHECK(t.cells[3].r == 1);
    CHECK(t.cells[3].c == 1);
}

TEST_CASE("empty readings are rejected") {
    try {
        structure_table({}, {}, {}, {});
        FAIL("expected EmptyInput");
    } catch (const Error& e) {
        CHECK(e.code() == "EmptyInput");
    }
}

TEST_CASE("tables serialize to the pinned schema and round-trip") {
    DataTable t;
    t.row_keys = {"Q1", "Q2"};
    t.col_keys = {"Revenue"};
    t.cells = {{0, 0, 12.5, 3}, {1, 0, std::string("n/a"), 0}};
    const json j = table_to_json(t);

    CHECK(j.size() == 3);
    CHECK(j.contains("row_keys"));
    CHECK(j.contains("col_keys"));
    REQUIRE(j.at("cells").size() == 2);
    const json& c0 = j.at("cells")[0];
    CHECK(c0.size() == 4);
    CHECK(c0.at("r") == 0);
    CHECK(c0.at("c") == 0);
    CHECK(c0.at("value") == 12.5);
    CHECK(c0.at("provenance") == 3);
    CHECK(j.at("cells")[1].at("value") == "n/a");

    const DataTable back = table_from_json(j);
    CHECK(back.row_keys == t.row_keys);
    CHECK(back.col_keys == t.col_keys);
    REQUIRE(back.cells.size() == 2);
    CHECK(std::get<double>(back.cells[0].value) == 12.5);
    CHECK(std::get<std::string>(back.cells[1].value) == "n/a");
    CHECK(back.cells[0].provenance == 3);
}

TEST_CASE("malformed table documents raise SchemaViolation") {
    try {
        table_from_json(json{{"row_keys", json::array()}});
        FAIL("expected SchemaViolation");
    } catch (const Error& e) {
        CHECK(e.code() == "SchemaViolation");
    }
    try {
        table_from_json(json::parse(R"({"row_keys":[],"col_keys":[],"cells":[{"r":0}]})"));
        FAIL("expected SchemaViolation");
    } catch (const Error& e) {
        CHECK(e.code() == "SchemaViolation");
    }
}

TEST_CASE("the full bar pipeline reproduces the chart's data table") {
    synthgen::GenConstraints gc;
    gc.series_count = 1;
    for (uint64_t seed : {5u, 21u, 33u}) {
        const auto spec = synthgen::generate_spec(ChartType::bar, seed, gc);
        const auto r = synthgen::render(spec);
        const auto key = perception::detect_key_elements(r.image);

        std::vector<std::pair<double, double>> anchors;
        for (const synthgen::TickAnchor& tick : r.truth.y_ticks)
            anchors.push_back({double(tick.px.y), tick.value});
        const auto cal = perception::calibrate_axis(anchors,
                                                    perception::AxisKind::y);

        std::vector<perception::NumericReading> readings;
        for (size_t b = 0; b < key.bars.size(); ++b)
            readings.push_back(perception::read_via_auxline(
                key, cal, int(b), r.image, spec.tick_step));

        perception::GroundTruthOcr ocr =
            perception::GroundTruthOcr::from_truth(r.truth);
        const auto labels = ocr.read(r.image);

        const DataTable t = structure_table(readings, labels, {}, {});
        REQUIRE(t.row_keys.size() == spec.category_labels.size());
        CHECK(t.row_keys == spec.category_labels);
        REQUIRE(t.cells.size() == r.truth.data_table.size());
        for (size_t i = 0; i < t.cells.size(); ++i) {
            const double got = std::get<double>(t.cells[i].value);
            const double want = r.truth.data_table[i].value;
            CHECK(std::fabs(got - want) /
                      std::max(std::fabs(want), 1e-9) <=
                  0.05);
        }
    }
}
