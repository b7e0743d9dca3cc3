#include <doctest.h>

#include <filesystem>
#include <set>

#include "chartagent/evidence.hpp"
#include "chartagent/synthgen.hpp"

using namespace chartagent;
using namespace chartagent::synthgen;
namespace fs = std::filesystem;

namespace {

ChartSpec pie_spec(std::vector<double> values) {
    ChartSpec spec;
    spec.chart_type = ChartType::pie;
    SeriesDef s;
    s.label = "Sales";
    s.color = Rgb{200, 60, 60};
    s.values = std::move(values);
    spec.series.push_back(s);
    for (size_t i = 0; i < spec.series[0].values.size(); ++i)
        spec.category_labels.push_back("C" + std::to_string(i));
    spec.axis_min = 0;
    spec.axis_max = 100;
    spec.tick_step = 10;
    spec.title = "Sales share by Segment";
    return spec;
}

int count_role(const GroundTruth& gt, TextRole role) {
    int n = 0;
    for (const GtTextItem& t : gt.text_items)
        if (t.role == role) ++n;
    return n;
}

}  // namespace

TEST_CASE("format_value trims trailing zeros") {
    CHECK(format_value(4.5) == "4.5");
    CHECK(format_value(100.0) == "100");
    CHECK(format_value(0.25) == "0.25");
    CHECK(format_value(37.50) == "37.5");
    CHECK(format_value(0.0) == "0");
    CHECK(format_value(-2.40) == "-2.4");
}

TEST_CASE("generation is deterministic and honors constraints") {
    const ChartSpec a = generate_spec(ChartType::bar, 7);
    const ChartSpec b = generate_spec(ChartType::bar, 7);
    CHECK(a == b);
    const ChartSpec c = generate_spec(ChartType::bar, 8);
    CHECK_FALSE(a == c);

    GenConstraints gc;
    gc.categories = 4;
    gc.series_count = 2;
    gc.annotated = false;
    gc.edge_style = EdgeStyle::soft;
    const ChartSpec d = generate_spec(ChartType::line, 3, gc);
    CHECK(d.category_labels.size() == 4);
    CHECK(d.series.size() == 2);
    CHECK_FALSE(d.annotated);
    CHECK(d.edge_style == EdgeStyle::soft);
    CHECK(d.series[0].values.size() == 4);
    CHECK_FALSE(d.series[0].label == d.series[1].label);
    CHECK(rgb_distance(d.series[0].color, d.series[1].color) > 40.0);
}

TEST_CASE("generated values stay inside the axis range") {
    for (uint64_t seed = 0; seed < 50; ++seed) {
        for (ChartType t : {ChartType::bar, ChartType::line,
                            ChartType::scatter}) {
            const ChartSpec spec = generate_spec(t, seed);
            CHECK(spec.axis_min == 0.0);
            for (const SeriesDef& s : spec.series)
                for (double v : s.values) {
                    CHECK(v > spec.axis_min);
                    CHECK(v < spec.axis_max);
                }
        }
    }
}

TEST_CASE("rendering is byte-deterministic") {
    const ChartSpec spec = generate_spec(ChartType::line, 11);
    const Rendered a = render(spec);
    const Rendered b = render(spec);
    CHECK(a.image == b.image);
    CHECK(evidence::canonical_dump(truth_to_json(a.truth)) ==
          evidence::canonical_dump(truth_to_json(b.truth)));
}

TEST_CASE("pie sector spans partition the circle in data order") {
    const Rendered r = render(pie_spec({40, 30, 20, 10}));
    const auto& sectors = r.truth.sectors;
    REQUIRE(sectors.size() == 4);
    CHECK(sectors[0].start_deg == doctest::Approx(0.0));
    CHECK(sectors[0].end_deg == doctest::Approx(144.0));
    CHECK(sectors[1].end_deg == doctest::Approx(252.0));
    CHECK(sectors[2].end_deg == doctest::Approx(324.0));
    CHECK(sectors[3].end_deg == doctest::Approx(360.0));
    for (size_t i = 1; i < sectors.size(); ++i)
        CHECK(sectors[i].start_deg == doctest::Approx(sectors[i - 1].end_deg));
    CHECK(sectors[0].share == doctest::Approx(0.40));
    CHECK(r.truth.pie_inner_r == 0.0);

    const Rendered donut = render([] {
        ChartSpec s = pie_spec({40, 30, 20, 10});
        s.chart_type = ChartType::donut;
        return s;
    }());
    CHECK(donut.truth.pie_inner_r ==
          doctest::Approx(0.45 * donut.truth.pie_outer_r));
}

TEST_CASE("generated pie shares never fall below the minimum") {
    for (uint64_t seed = 0; seed < 200; ++seed) {
        const ChartType t = seed % 2 ? ChartType::pie : ChartType::donut;
        const ChartSpec spec = generate_spec(t, seed);
        const Rendered r = render(spec);
        REQUIRE(r.truth.sectors.size() >= 3);
        REQUIRE(r.truth.sectors.size() <= 8);
        for (const SectorGeom& s : r.truth.sectors)
            CHECK(s.share >= 0.04);
    }
}

TEST_CASE("bar top row coincides with the matching value tick") {
    ChartSpec spec;
    spec.chart_type = ChartType::bar;
    SeriesDef s;
    s.label = "Yield";
    s.color = Rgb{60, 120, 200};
    s.values = {4.5, 2.0, 3.5};
    spec.series.push_back(s);
    spec.category_labels = {"Q1", "Q2", "Q3"};
    spec.axis_min = 0;
    spec.axis_max = 5;
    spec.tick_step = 0.5;
    spec.title = "Yield by Quarter";

    const Rendered r = render(spec);
    REQUIRE(r.truth.y_ticks.size() == 11);
    CHECK(r.truth.y_ticks[0].value == doctest::Approx(0.0));
    CHECK(r.truth.y_ticks[9].value == doctest::Approx(4.5));
    REQUIRE(r.truth.bars.size() == 3);
    // Value 4.5 sits exactly on the tenth tick row.
    CHECK(r.truth.bars[0].rect.y == r.truth.y_ticks[9].px.y);
    // Bars rest on the x axis.
    for (const BarGeom& b : r.truth.bars)
        CHECK(b.rect.bottom() == r.truth.x_axis.a.y);
    // Tick rows decrease as values increase.
    for (size_t i = 1; i < r.truth.y_ticks.size(); ++i)
        CHECK(r.truth.y_ticks[i].px.y < r.truth.y_ticks[i - 1].px.y);
}

TEST_CASE("hard-edge bar interiors are uniformly the series color") {
    const ChartSpec spec = generate_spec(ChartType::bar, 21);
    REQUIRE(spec.edge_style == EdgeStyle::hard);
    const Rendered r = render(spec);
    for (const BarGeom& b : r.truth.bars) {
        const Rgb want = spec.series[size_t(b.series)].color;
        // Probe strictly interior pixels, clear of any value label overlap.
        for (int y = b.rect.y + 1; y < b.rect.bottom() - 1; y += 3)
            for (int x = b.rect.x + 1; x < b.rect.right() - 1; ++x)
                REQUIRE(r.image.get(x, y) == want);
    }
}

TEST_CASE("legend swatches match series colors pixel-for-pixel") {
    GenConstraints gc;
    gc.series_count = 3;
    const ChartSpec spec = generate_spec(ChartType::line, 5, gc);
    const Rendered r = render(spec);
    REQUIRE(r.truth.legend_swatches.size() == 3);
    for (const LegendSwatch& sw : r.truth.legend_swatches) {
        const Rgb want = spec.series[size_t(sw.series)].color;
        CHECK(sw.color == want);
        const int cx = sw.rect.x + sw.rect.w / 2;
        const int cy = sw.rect.y + sw.rect.h / 2;
        CHECK(r.image.get(cx, cy) == want);
        CHECK(r.truth.plot_area.right() < sw.rect.x);
    }
    CHECK(count_role(r.truth, TextRole::legend_label) == 3);
}

TEST_CASE("value labels appear exactly when annotation is on") {
    for (uint64_t seed = 0; seed < 50; ++seed) {
        const ChartType t =
            std::vector<ChartType>{ChartType::bar, ChartType::line,
                                   ChartType::pie, ChartType::donut,
                                   ChartType::scatter}[seed % 5];
        const ChartSpec annotated = generate_spec(t, seed);
        REQUIRE(annotated.annotated);
        const Rendered ra = render(annotated);
        CHECK(count_role(ra.truth, TextRole::value_label) > 0);
        CHECK(count_role(ra.truth, TextRole::title) == 1);

        const ChartSpec plain = deannotate(annotated);
        const Rendered rp = render(plain);
        CHECK(count_role(rp.truth, TextRole::value_label) == 0);
        CHECK_FALSE(ra.image == rp.image);

        // Annotation never perturbs the underlying data.
        REQUIRE(ra.truth.data_table.size() == rp.truth.data_table.size());
        for (size_t i = 0; i < ra.truth.data_table.size(); ++i) {
            CHECK(ra.truth.data_table[i].row_key ==
                  rp.truth.data_table[i].row_key);
            CHECK(ra.truth.data_table[i].col_key ==
                  rp.truth.data_table[i].col_key);
            CHECK(ra.truth.data_table[i].value ==
                  rp.truth.data_table[i].value);
        }
    }
}

TEST_CASE("annotated single-series bar charts label every bar") {
    GenConstraints gc;
    gc.series_count = 1;
    const ChartSpec spec = generate_spec(ChartType::bar, 33, gc);
    const Rendered r = render(spec);
    CHECK(count_role(r.truth, TextRole::value_label) ==
          int(spec.category_labels.size()));
}

TEST_CASE("soft edges blur boundaries but keep interiors intact") {
    GenConstraints hard_c, soft_c;
    hard_c.edge_style = EdgeStyle::hard;
    soft_c.edge_style = EdgeStyle::soft;
    const ChartSpec hard = generate_spec(ChartType::bar, 9, hard_c);
    const ChartSpec soft = generate_spec(ChartType::bar, 9, soft_c);
    const Rendered rh = render(hard);
    const Rendered rs = render(soft);
    CHECK_FALSE(rh.image == rs.image);
    // Soft rendering's geometry truth is unchanged.
    CHECK(evidence::canonical_dump(truth_to_json(rh.truth)) ==
          evidence::canonical_dump(truth_to_json(rs.truth)));
    for (const BarGeom& b : rs.truth.bars) {
        const int cx = b.rect.x + b.rect.w / 2;
        const int cy = b.rect.y + (b.rect.h > 4 ? b.rect.h / 2 : 1);
        CHECK(rs.image.get(cx, cy) == soft.series[size_t(b.series)].color);
    }
}

TEST_CASE("curve truth records one anchor per category inside the plot") {
    const ChartSpec spec = generate_spec(ChartType::line, 13);
    const Rendered r = render(spec);
    REQUIRE(r.truth.curves.size() == spec.series.size());
    for (const CurveGeom& c : r.truth.curves) {
        CHECK(c.points.size() == spec.category_labels.size());
        for (const PointD& p : c.points) {
            CHECK(r.truth.plot_area.contains(int(p.x), int(p.y)));
        }
        // Anchors are in category order, strictly left to right.
        for (size_t i = 1; i < c.points.size(); ++i)
            CHECK(c.points[i].x > c.points[i - 1].x);
    }
}

TEST_CASE("spec and truth JSON forms round-trip byte-identically") {
    const ChartSpec spec = generate_spec(ChartType::donut, 17);
    const std::string spec_bytes = evidence::canonical_dump(spec_to_json(spec));
    const ChartSpec spec2 = spec_from_json(json::parse(spec_bytes));
    CHECK(spec2 == spec);
    CHECK(evidence::canonical_dump(spec_to_json(spec2)) == spec_bytes);

    const Rendered r = render(spec);
    const std::string truth_bytes =
        evidence::canonical_dump(truth_to_json(r.truth));
    const GroundTruth t2 = truth_from_json(json::parse(truth_bytes));
    CHECK(evidence::canonical_dump(truth_to_json(t2)) == truth_bytes);
}

TEST_CASE("tiny canvases are rejected") {
    GenConstraints gc;
    gc.canvas_width = 100;
    gc.canvas_height = 100;
    CHECK_THROWS_AS(generate_spec(ChartType::bar, 1, gc), Error);

    ChartSpec spec = generate_spec(ChartType::bar, 1);
    spec.canvas_width = 120;
    try {
        render(spec);
        FAIL("expected CanvasTooSmall");
    } catch (const Error& e) {
        CHECK(e.code() == "CanvasTooSmall");
    }

    // Legends eat horizontal space: a canvas that fits a bare chart can
    // still be too small for a pie with its legend column.
    ChartSpec pie = generate_spec(ChartType::pie, 1);
    pie.canvas_width = 210;
    pie.canvas_height = 200;
    try {
        render(pie);
        FAIL("expected CanvasTooSmall");
    } catch (const Error& e) {
        CHECK(e.code() == "CanvasTooSmall");
    }
}

TEST_CASE("question pairs reference real rows of the data table") {
    for (uint64_t seed = 100; seed < 140; ++seed) {
        const ChartType t =
            std::vector<ChartType>{ChartType::bar, ChartType::line,
                                   ChartType::pie}[seed % 3];
        const ChartSpec spec = generate_spec(t, seed);
        const Rendered r = render(spec);
        const QaPair qa = make_qa(spec, r.truth);
        CHECK(qa.task == "number_qa");
        CHECK(qa.truth.is_number());
        if (t == ChartType::pie) {
            // Shares in percent sum to 100, each question names a sector.
            bool found = false;
            for (const SectorGeom& s : r.truth.sectors)
                if (qa.question.find(s.label) != std::string::npos &&
                    qa.truth.get<double>() ==
                        doctest::Approx(s.share * 100.0))
                    found = true;
            CHECK(found);
        } else {
            bool found = false;
            for (const CellTruth& c : r.truth.data_table)
                if (qa.question.find(c.row_key) != std::string::npos &&
                    qa.question.find(c.col_key) != std::string::npos &&
                    qa.truth.get<double>() == doctest::Approx(c.value))
                    found = true;
            CHECK(found);
        }
    }
}

TEST_CASE("corpus round-trips through the manifest and sidecars") {
    const fs::path dir = fs::temp_directory_path() / "chartagent_corpus";
    fs::remove_all(dir);

    std::vector<ChartSpec> specs;
    for (uint64_t seed = 0; seed < 6; ++seed)
        specs.push_back(generate_spec(
            std::vector<ChartType>{ChartType::bar, ChartType::line,
                                   ChartType::pie}[seed % 3],
            seed));
    const CorpusManifest manifest = write_corpus(specs, dir.string());
    REQUIRE(manifest.rows.size() == 6);
    CHECK(fs::exists(dir / "manifest.json"));

    const CorpusManifest loaded = load_manifest(dir.string());
    REQUIRE(loaded.rows.size() == 6);
    for (size_t i = 0; i < loaded.rows.size(); ++i) {
        const ManifestRow& row = loaded.rows[i];
        CHECK(row.id == int(i));
        CHECK(row.seed == specs[i].style_seed);
        CHECK(row.chart_type == specs[i].chart_type);
        CHECK(fs::exists(dir / row.image_file));
        CHECK(fs::exists(dir / row.truth_file));

        // Sidecar spec re-renders to the stored image bytes.
        const SidecarData side = load_sidecar((dir / row.truth_file).string());
        CHECK(side.spec == specs[i]);
        const Rendered r = render(side.spec);
        CHECK(r.image == read_ppm((dir / row.image_file).string()));
        CHECK(evidence::canonical_dump(truth_to_json(side.truth)) ==
              evidence::canonical_dump(truth_to_json(r.truth)));
        CHECK(row.qa.question == manifest.rows[i].qa.question);
    }
    fs::remove_all(dir);
}
