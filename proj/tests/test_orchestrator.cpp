#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "chartagent/orchestrator.hpp"
#include "chartagent/perception.hpp"
#include "chartagent/synthgen.hpp"
#include "chartagent/toollib.hpp"

using namespace chartagent;
using namespace chartagent::orchestrator;
using nlohmann::json;

namespace {

std::string error_code(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

struct Fixture {
    synthgen::ChartSpec spec;
    synthgen::Rendered rendered;
    perception::GroundTruthOcr ocr;

    Fixture(ChartType type, uint64_t seed, bool annotated, int categories = 4) {
        synthgen::GenConstraints gc;
        gc.categories = categories;
        gc.series_count = 1;
        gc.annotated = annotated;
        spec = synthgen::generate_spec(type, seed, gc);
        rendered = synthgen::render(spec);
        ocr = perception::GroundTruthOcr::from_truth(rendered.truth);
    }

    double truth_of(const std::string& category) const {
        for (const auto& cell : rendered.truth.data_table)
            if (cell.row_key == category) return cell.value;
        FAIL("no truth for category " << category);
        return 0.0;
    }

    EpisodeOptions options(uint64_t seed = 42) {
        EpisodeOptions opt;
        opt.ocr = &ocr;
        opt.seed = seed;
        return opt;
    }
};

scheduler::ToolSpec minimal_spec(const std::string& name, double cost = 1.0,
                                 double gain = 1.0, int quota = 16) {
    scheduler::ToolSpec spec;
    spec.name = name;
    spec.cost = cost;
    spec.base_gain = gain;
    spec.quota = quota;
    return spec;
}

ToolOutput noop_tool(const json&, ToolContext&) {
    ToolOutput out;
    out.summary["ok"] = true;
    out.summary_text = "ok";
    return out;
}

Directive call_of(const std::string& name, json params = json::object()) {
    Directive d;
    d.kind = DirectiveKind::tool_call;
    d.tool_name = name;
    d.params = std::move(params);
    return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// registry

TEST_CASE("standard registry carries the library toolset in planner order") {
    const auto registry = toollib::standard_registry();
    const std::vector<std::string> expected = {
        "classify_chart", "detect_key_elements", "read_text",
        "calibrate_axis", "extract_curves",      "segment_sectors",
        "match_legend",   "read_value",          "read_annotation",
        "compute",        "build_table"};
    REQUIRE(registry.specs().size() == expected.size());
    for (size_t i = 0; i < expected.size(); ++i) {
        CHECK(registry.specs()[i].name == expected[i]);
        CHECK(registry.has(expected[i]));
        CHECK(registry.index_of(expected[i]) == int(i));
        CHECK(registry.specs()[i].cost >= 0.0);
        CHECK(registry.specs()[i].quota >= 1);
    }
    CHECK(registry.index_of("no_such_tool") == -1);
    CHECK_FALSE(registry.has("no_such_tool"));
}

TEST_CASE("registry rejects malformed registrations") {
    ToolRegistry registry;
    registry.register_tool(minimal_spec("probe"), noop_tool);

    CHECK(error_code([&] {
              registry.register_tool(minimal_spec("probe"), noop_tool);
          }) == "DuplicateName");
    CHECK(error_code([&] {
              registry.register_tool(minimal_spec(""), noop_tool);
          }) == "InvalidSchema");
    CHECK(error_code([&] {
              registry.register_tool(minimal_spec("neg", -1.0), noop_tool);
          }) == "InvalidSchema");
    CHECK(error_code([&] {
              registry.register_tool(minimal_spec("noq", 1.0, 1.0, 0),
                                     noop_tool);
          }) == "InvalidSchema");
    CHECK(error_code([&] {
              auto spec = minimal_spec("badtype");
              spec.params_schema = {{"x", "float"}};
              registry.register_tool(spec, noop_tool);
          }) == "InvalidSchema");
    CHECK(error_code([&] {
              auto spec = minimal_spec("badschema");
              spec.params_schema = json::array();
              registry.register_tool(spec, noop_tool);
          }) == "InvalidSchema");
    CHECK(error_code([&] {
              auto spec = minimal_spec("anon");
              spec.params_schema = {{"?", "string"}};
              registry.register_tool(spec, noop_tool);
          }) == "InvalidSchema");
    CHECK(error_code([&] {
              registry.register_tool(minimal_spec("nofn"), ToolFn{});
          }) == "InvalidSchema");
}

// ---------------------------------------------------------------------------
// directive grammar

TEST_CASE("directives parse, round-trip, and fail as values") {
    const auto call = parse_directive(
        R"(<tool_call>{"name":"calibrate_axis","params":{"axis":"y"},)"
        R"("rationale":"read ticks"}</tool_call>)");
    REQUIRE(call.ok);
    CHECK(call.directive.kind == DirectiveKind::tool_call);
    CHECK(call.directive.tool_name == "calibrate_axis");
    CHECK(call.directive.params.at("axis") == "y");
    CHECK(call.directive.rationale == "read ticks");

    const auto fin = parse_directive(R"(<finish>{"answer":"4.55"}</finish>)");
    REQUIRE(fin.ok);
    CHECK(fin.directive.kind == DirectiveKind::finish);
    CHECK(fin.directive.answer == "4.55");
    CHECK_FALSE(fin.directive.incomplete);

    const auto bail = parse_directive(R"(<finish>{"incomplete":true}</finish>)");
    REQUIRE(bail.ok);
    CHECK(bail.directive.incomplete);
    CHECK(bail.directive.answer.is_null());

    // Round trips: parse(to_string(d)) reproduces d for both kinds.
    for (const auto& d : {call.directive, fin.directive, bail.directive}) {
        const auto again = parse_directive(directive_to_string(d));
        REQUIRE(again.ok);
        CHECK(again.directive.kind == d.kind);
        CHECK(again.directive.tool_name == d.tool_name);
        CHECK(again.directive.params == d.params);
        CHECK(again.directive.answer == d.answer);
        CHECK(again.directive.incomplete == d.incomplete);
    }

    // Failure cases come back as values, never throws.
    const char* bad[] = {
        "let me think about this",
        "<tool_call>not json</tool_call>",
        R"(<tool_call>{"params":{}}</tool_call>)",
        R"(<tool_call>{"name":""}</tool_call>)",
        R"(<tool_call>{"name":"x","params":[1]}</tool_call>)",
        "<finish>{}</finish>",
        R"(<finish>{"answer":1}</finish> trailing)",
        "",
    };
    for (const char* text : bad) {
        const auto parsed = parse_directive(text);
        CHECK_FALSE(parsed.ok);
        CHECK_FALSE(parsed.error.empty());
    }
}

TEST_CASE("parameter validation enforces names, kinds, and optionality") {
    const json schema = {{"target?", "string"}, {"count", "integer"}};
    std::string why;
    CHECK(validate_params(schema, {{"count", 3}}, &why));
    CHECK(validate_params(schema, {{"count", 3}, {"target", "Q1"}}, &why));
    CHECK_FALSE(validate_params(schema, json::object(), &why));  // missing
    CHECK_FALSE(validate_params(schema, {{"count", "3"}}, &why));  // kind
    CHECK_FALSE(
        validate_params(schema, {{"count", 3}, {"extra", 1}}, &why));
    CHECK_FALSE(validate_params(schema, json::array(), &why));
    CHECK_FALSE(why.empty());
    // Empty schema accepts exactly the empty object.
    CHECK(validate_params(json::object(), json::object(), &why));
    CHECK_FALSE(validate_params(json::object(), {{"x", 1}}, &why));
}

// ---------------------------------------------------------------------------
// execution guards

TEST_CASE("rejected calls charge nothing and leave no record") {
    ToolRegistry registry;
    auto spec = minimal_spec("probe", 1.0, 1.0, 2);
    spec.params_schema = {{"count", "integer"}};
    registry.register_tool(spec, noop_tool);

    const ChartImage image(16, 16);
    Episode ep;
    ep.config.budget = 100.0;

    CHECK(error_code([&] {
              execute_tool(registry, call_of("ghost"), image, ep);
          }) == "UnknownTool");
    CHECK(error_code([&] {
              execute_tool(registry, call_of("probe"), image, ep);
          }) == "ParamValidationFailure");
    CHECK(ep.total_cost == 0.0);
    CHECK(ep.history.entries.empty());
    CHECK(ep.package.items.empty());

    const json good = {{"count", 1}};
    execute_tool(registry, call_of("probe", good), image, ep);
    execute_tool(registry, call_of("probe", good), image, ep);
    CHECK(error_code([&] {
              execute_tool(registry, call_of("probe", good), image, ep);
          }) == "QuotaExceeded");
    CHECK(ep.total_cost == doctest::Approx(2.0));
    CHECK(ep.history.entries.size() == 2);
    CHECK(ep.package.items.size() == 2);
}

TEST_CASE("tool failures are charged, recorded, and non-fatal") {
    ToolRegistry registry;
    registry.register_tool(
        minimal_spec("flaky", 0.5),
        [](const json&, ToolContext&) -> ToolOutput {
            fail("SensorGlitch", "lens cap still on");
        });

    const ChartImage image(16, 16);
    Episode ep;
    ep.config.budget = 100.0;
    const Observation obs = execute_tool(registry, call_of("flaky"), image, ep);

    CHECK(obs.executed);
    CHECK(obs.failed);
    CHECK(obs.error_code == "SensorGlitch");
    CHECK(ep.total_cost == doctest::Approx(0.5));
    REQUIRE(ep.history.entries.size() == 1);
    CHECK(ep.history.entries[0].summary.find("lens cap") != std::string::npos);
    REQUIRE(ep.package.items.size() == 1);
    REQUIRE(ep.package.items[0].artifacts.size() == 1);
    CHECK(ep.package.items[0].artifacts[0].kind == "error");
    CHECK(ep.package.items[0].artifacts[0].payload.at("code") ==
          "SensorGlitch");
}

// ---------------------------------------------------------------------------
// caches

TEST_CASE("state cache truncates oversized summaries to a preview") {
    StateCache cache;
    json small = {{"k", "v"}};
    cache.update("tidy", small, {1});
    CHECK(cache.entries.at("tidy").summary == small);

    json huge = {{"blob", std::string(4 * cache.per_tool_cap, 'x')}};
    cache.update("noisy", huge, {2});
    const json& kept = cache.entries.at("noisy").summary;
    CHECK(kept.at("truncated") == true);
    CHECK(kept.at("preview").get<std::string>().size() ==
          cache.per_tool_cap / 4);
    CHECK(evidence::canonical_dump(kept).size() <= cache.per_tool_cap);
}

TEST_CASE("history digest keeps only the most recent calls") {
    HistoryCache history;
    for (int i = 1; i <= 10; ++i)
        history.entries.push_back(
            {i, "tool" + std::to_string(i), json::object(), "ran", 0.1});
    const std::string digest = history.digest(8);
    CHECK(digest.find("(2 earlier calls pruned)") != std::string::npos);
    CHECK(digest.find("tool2 ") == std::string::npos);
    CHECK(digest.find("tool3 ") != std::string::npos);
    CHECK(digest.find("tool10 ") != std::string::npos);
    CHECK(history.calls_of("tool7") == 1);
    CHECK(history.calls_of("ghost") == 0);
}

// ---------------------------------------------------------------------------
// episode behavior

TEST_CASE("zero budget still produces a result") {
    Fixture fx(ChartType::bar, 11, true);
    scheduler::SchedulerConfig cfg;
    cfg.budget = 0.0;

    const auto numeric = toollib::answer_question(
        fx.rendered.image, "what is the value of " + fx.spec.category_labels[0],
        cfg, fx.options());
    CHECK(numeric.call_count == 0);
    CHECK(numeric.total_cost == 0.0);
    CHECK(numeric.incomplete);
    CHECK(numeric.answer.is_null());

    // A comparison question has a candidate space even before any call, so
    // the fallback answer is one of the orderings.
    const auto compare = toollib::answer_question(
        fx.rendered.image,
        "Is " + fx.spec.category_labels[0] + " greater than " +
            fx.spec.category_labels[1] + "?",
        cfg, fx.options());
    CHECK(compare.call_count == 0);
    CHECK(compare.incomplete);
    REQUIRE(compare.answer.is_string());
    const std::string token = compare.answer.get<std::string>();
    CHECK((token == "greater" || token == "less" || token == "equal"));
}

TEST_CASE("a tool with a known exact channel is called exactly once") {
    ToolRegistry registry;
    registry.register_tool(
        minimal_spec("oracle", 1.0, 1.0),
        [](const json&, ToolContext& ctx) -> ToolOutput {
            ToolOutput out;
            out.summary["told"] = "greater";
            out.summary_text = "told greater";
            out.reading = scheduler::AnswerValue{std::string("greater")};
            out.confidence = 1.0;
            out.model = scheduler::deterministic_channel(*ctx.belief);
            return out;
        });

    EigPlanner planner;
    planner.models["oracle"] = [](const scheduler::Belief& b) {
        return scheduler::deterministic_channel(b);
    };

    const ChartImage image(16, 16);
    const auto question = qtypes::parse_question("Is A greater than B?");
    scheduler::SchedulerConfig cfg;  // defaults; eta = 0

    const auto result =
        run_episode(image, question, cfg, planner, registry, {});
    // One call resolves the uncertainty; the next exact-EIG score is zero,
    // net of cost that is below the stopping threshold, so the loop ends.
    CHECK(result.call_count == 1);
    CHECK_FALSE(result.incomplete);
    CHECK(result.answer == json("greater"));
    CHECK(result.total_cost == doctest::Approx(1.0));
}

TEST_CASE("bar value questions answer within tolerance and replay cleanly") {
    Fixture fx(ChartType::bar, 7, false);
    const std::string target = fx.spec.category_labels[1];
    const double truth = fx.truth_of(target);

    const auto result = toollib::answer_question(
        fx.rendered.image, "what is the value of " + target + "?",
        scheduler::SchedulerConfig{}, fx.options());

    REQUIRE(result.answer.is_number());
    const double got = result.answer.get<double>();
    CHECK(std::abs(got - truth) / std::max(std::abs(truth), 1e-9) < 0.05);

    // The recorded package re-executes to the identical item stream.
    const auto registry = toollib::standard_registry();
    const toollib::LibraryReplayRunner runner(registry, fx.options());
    const auto report =
        evidence::replay_verify(result.package, fx.rendered.image, runner);
    CHECK(report.all_match());

    // Serialization round-trips byte-for-byte.
    const std::string wire = evidence::serialize(result.package);
    CHECK(evidence::serialize(evidence::parse_package(wire)) == wire);

    // A single flipped byte in any recorded summary breaks the chain.
    auto tampered = result.package;
    REQUIRE(!tampered.items.empty());
    auto& victim = tampered.items[tampered.items.size() / 2];
    victim.summary.push_back('!');
    const auto caught =
        evidence::replay_verify(tampered, fx.rendered.image, runner);
    CHECK_FALSE(caught.all_match());
}

TEST_CASE("annotated charts are answered from their printed labels") {
    Fixture fx(ChartType::bar, 19, true);
    const std::string target = fx.spec.category_labels[2];
    const double truth = fx.truth_of(target);

    const auto result = toollib::answer_question(
        fx.rendered.image, "what is the value of " + target + "?",
        scheduler::SchedulerConfig{}, fx.options());

    REQUIRE(result.answer.is_number());
    CHECK(std::abs(result.answer.get<double>() - truth) /
              std::max(std::abs(truth), 1e-9) <
          0.05);
    // The cheap annotation reading must appear in the evidence stream.
    bool annotated_read = false;
    for (const auto& item : result.package.items)
        if (item.tool == "read_annotation" &&
            item.summary.rfind("error", 0) != 0)
            annotated_read = true;
    CHECK(annotated_read);
}

TEST_CASE("comparison questions resolve to an ordering token") {
    Fixture fx(ChartType::bar, 7, false);
    // seed 7 truth: Central=101.99 Coast=139.97 North=156.54 South=38.04
    const auto result = toollib::answer_question(
        fx.rendered.image,
        "Is " + fx.spec.category_labels[1] + " greater than " +
            fx.spec.category_labels[3] + "?",
        scheduler::SchedulerConfig{}, fx.options());

    REQUIRE(result.answer.is_string());
    CHECK(result.answer.get<std::string>() ==
          (fx.truth_of(fx.spec.category_labels[1]) >
                   fx.truth_of(fx.spec.category_labels[3])
               ? "greater"
               : "less"));
    CHECK_FALSE(result.package.final_verdict.is_null());
}

TEST_CASE("table questions emit the structured table") {
    Fixture fx(ChartType::bar, 23, false);
    const auto result = toollib::answer_question(
        fx.rendered.image, "Convert this chart to a table",
        scheduler::SchedulerConfig{}, fx.options());

    REQUIRE(result.answer.is_object());
    const auto table = reasoning::table_from_json(result.answer);
    REQUIRE(table.row_keys.size() == fx.spec.category_labels.size());
    for (const auto& cell : table.cells) {
        const double truth = fx.truth_of(table.row_keys[size_t(cell.r)]);
        const double got = std::get<double>(cell.value);
        CHECK(std::abs(got - truth) / std::max(std::abs(truth), 1e-9) < 0.05);
    }
}

TEST_CASE("line value questions trace the curve") {
    Fixture fx(ChartType::line, 31, false, 5);
    const std::string target = fx.spec.category_labels[2];
    const double truth = fx.truth_of(target);

    const auto result = toollib::answer_question(
        fx.rendered.image, "what is the value of " + target + "?",
        scheduler::SchedulerConfig{}, fx.options());

    REQUIRE(result.answer.is_number());
    CHECK(std::abs(result.answer.get<double>() - truth) /
              std::max(std::abs(truth), 1e-9) <
          0.05);
}

TEST_CASE("pie share questions route through sectors and the legend") {
    Fixture fx(ChartType::pie, 37, false, 4);
    const std::string target = fx.spec.category_labels[0];
    const double truth = fx.truth_of(target);  // percentage share

    const auto result = toollib::answer_question(
        fx.rendered.image, "what is the value of " + target + "?",
        scheduler::SchedulerConfig{}, fx.options());

    REQUIRE(result.answer.is_number());
    // Sector shares tolerate a little more pixel quantization than bars.
    CHECK(std::abs(result.answer.get<double>() - truth) < 3.0);
}

TEST_CASE("episodes are deterministic and respect hard limits") {
    for (const uint64_t seed : {3u, 5u, 8u}) {
        Fixture fx(ChartType::bar, seed, seed % 2 == 0);
        scheduler::SchedulerConfig cfg;
        const std::string q =
            "what is the value of " + fx.spec.category_labels[0] + "?";

        const auto a =
            toollib::answer_question(fx.rendered.image, q, cfg, fx.options());
        const auto b =
            toollib::answer_question(fx.rendered.image, q, cfg, fx.options());
        CHECK(evidence::canonical_dump(episode_result_to_json(a)) ==
              evidence::canonical_dump(episode_result_to_json(b)));

        // Hard limits: budget never overshoots, quotas hold, the history
        // indexes densely, and every call left evidence behind.
        CHECK(a.total_cost <= cfg.budget + 1e-9);
        const auto registry = toollib::standard_registry();
        std::map<std::string, int> calls;
        int executed = 0;
        for (const auto& item : a.package.items) {
            if (registry.has(item.tool)) {
                ++calls[item.tool];
                ++executed;
            }
        }
        CHECK(executed == a.call_count);
        for (const auto& spec : registry.specs())
            CHECK(calls[spec.name] <= spec.quota);
        for (const auto& item : a.package.items) CHECK(!item.artifacts.empty());
    }
}
