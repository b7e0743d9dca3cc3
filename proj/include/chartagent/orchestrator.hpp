#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chartagent/common.hpp"
#include "chartagent/evidence.hpp"
#include "chartagent/image.hpp"
#include "chartagent/perception.hpp"
#include "chartagent/qtypes.hpp"
#include "chartagent/reasoning.hpp"
#include "chartagent/scheduler.hpp"

namespace chartagent::orchestrator {

using nlohmann::json;

// ---------------------------------------------------------------------------
// directive protocol

// The planner/agent boundary speaks a tiny tagged-JSON protocol so that the
// built-in policy and any external directive source share one execution path.
enum class DirectiveKind { tool_call, finish };

struct Directive {
    DirectiveKind kind = DirectiveKind::finish;
    std::string tool_name;         // tool_call
    json params = json::object();  // tool_call; defaults to {}
    std::string rationale;
    json answer;             // finish; null when the planner has none
    bool incomplete = false; // finish without a usable answer
};

// `<tool_call>{"name":...,"params":{...},"rationale":...}</tool_call>` or
// `<finish>{"answer":...}</finish>`.
std::string directive_to_string(const Directive& d);

// Parse failures are values, not exceptions: the episode loop logs them and
// keeps iterating instead of aborting on a malformed planner utterance.
struct ParsedDirective {
    bool ok = false;
    Directive directive;
    std::string error;  // set when !ok
};

ParsedDirective parse_directive(const std::string& text);

// ---------------------------------------------------------------------------
// caches

struct HistoryEntry {
    int order = 0;  // dense from 1, equals call order
    std::string tool;
    json params;
    std::string summary;
    double cost = 0.0;
};

// Full log of executed calls: who ran, with what, what came back, what it
// cost. Order indices double as the evidence step numbers.
struct HistoryCache {
    std::vector<HistoryEntry> entries;

    int calls_of(const std::string& tool) const;
    // Pruned, prompt-ready digest of the most recent entries.
    std::string digest(size_t max_entries = 8) const;
};

// Latest compressed summary per tool. Oversized summaries are truncated to
// a preview so the cache never exceeds its per-tool byte cap; the evidence
// ids point back at the full record.
struct StateCache {
    struct Entry {
        json summary;
        std::vector<int> evidence_ids;
    };
    std::map<std::string, Entry> entries;
    size_t per_tool_cap = 2048;  // bytes of serialized summary per tool

    void update(const std::string& tool, json summary,
                std::vector<int> evidence_ids);
    json to_json() const;
};

// ---------------------------------------------------------------------------
// shared episode state

// Derived perceptual facts the tools build up and hand to each other. This
// is the uncompressed working memory; the StateCache carries the trimmed
// view the planner sees.
struct EpisodeState {
    reasoning::Classification classification;  // unknown until classified
    std::optional<perception::KeyElements> elements;
    std::vector<perception::TextItem> text_items;
    bool text_read = false;
    std::optional<perception::Calibration> calibration;
    std::optional<double> tick_step;  // value per tick, from anchor spacing
    std::vector<perception::CurveSkeleton> curves;
    std::vector<perception::SectorEstimate> sectors;
    std::optional<perception::LegendAssignment> legend;
    std::vector<std::string> legend_labels;  // aligned with legend_entries
    std::map<std::string, double> readings;  // normalized referent -> value
    std::optional<reasoning::DataTable> table;
};

// ---------------------------------------------------------------------------
// tool interface

struct ToolContext {
    const ChartImage& image;
    const qtypes::Question& question;
    EpisodeState& state;
    const scheduler::Belief* belief = nullptr;
    perception::OcrBackend* ocr = nullptr;  // borrowed; may be null
    uint64_t seed = 0;                      // episode seed
    int call_order = 0;                     // 1-based order of this call
};

struct ToolOutput {
    json summary = json::object();  // compressed result for the state cache
    std::string summary_text;       // one line for the history log
    std::vector<evidence::Artifact> artifacts;
    // A value observation to fold into the belief, with the channel
    // accuracy to use. Tools that know their exact observation model (the
    // simulated channels) pass it instead.
    std::optional<scheduler::AnswerValue> reading;
    double confidence = 0.85;
    std::optional<scheduler::ObservationModel> model;
};

using ToolFn = std::function<ToolOutput(const json& params, ToolContext& ctx)>;

// Schema = JSON object mapping parameter name to a type name out of
// {number, integer, string, boolean, array, object}; a trailing '?' on the
// name marks the parameter optional. Unknown parameters are rejected.
bool validate_params(const json& schema, const json& params,
                     std::string* why = nullptr);

class ToolRegistry {
  public:
    // Handle is the registration index; registration order is the
    // tie-breaking order for action selection.
    int register_tool(scheduler::ToolSpec spec, ToolFn fn);

    const std::vector<scheduler::ToolSpec>& specs() const { return specs_; }
    bool has(const std::string& name) const;
    int index_of(const std::string& name) const;  // -1 when missing
    const ToolFn& executor(int index) const;

  private:
    std::vector<scheduler::ToolSpec> specs_;
    std::vector<ToolFn> fns_;
    std::map<std::string, int> by_name_;
};

// ---------------------------------------------------------------------------
// planners

// Everything a planner may look at when choosing the next directive.
struct PlannerView {
    const qtypes::Question* question = nullptr;
    const StateCache* state = nullptr;
    std::string history_digest;
    const std::vector<scheduler::ToolSpec>* tools = nullptr;
    std::vector<int> calls_used;  // per tool, registration order
    std::vector<int> quota_left;
    double budget_left = 0.0;
    ChartType chart_type = ChartType::unknown;
    const scheduler::Belief* belief = nullptr;
    scheduler::SchedulerConfig config;
    int round = 0;
};

class Planner {
  public:
    virtual ~Planner() = default;
    virtual std::string plan(const PlannerView& view) = 0;
};

// The default policy: rank tools by expected gain net of weighted cost,
// filtered by quota and remaining budget, and emit the winning directive.
// Tools with a registered channel factory are scored with exact expected
// information gain; the rest use the declared-gain heuristic.
class EigPlanner : public Planner {
  public:
    using ModelFactory =
        std::function<scheduler::ObservationModel(const scheduler::Belief&)>;
    std::map<std::string, ModelFactory> models;

    std::string plan(const PlannerView& view) override;
};

// ---------------------------------------------------------------------------
// episode execution

struct EpisodeOptions {
    uint64_t seed = 0;
    perception::OcrBackend* ocr = nullptr;  // borrowed; may be null
    double temperature = 1.0;               // reflection vote softmax
    double margin_threshold = 0.1;          // arbitration trigger
};

// Mutable per-episode runtime: caches, derived state, belief, evidence.
struct Episode {
    qtypes::Question question;
    scheduler::SchedulerConfig config;
    EpisodeOptions options;
    qtypes::CandidateKind candidate_kind = qtypes::CandidateKind::numeric;
    scheduler::Belief belief;
    HistoryCache history;
    StateCache state_cache;
    EpisodeState state;
    evidence::EvidencePackage package;
    double total_cost = 0.0;
    int round = 0;
};

// What one directive execution produced. `executed` means the call was
// charged and recorded — tool-internal failures still count as executed and
// come back with `failed` set instead of aborting the episode.
struct Observation {
    bool executed = false;
    bool failed = false;
    std::string error_code;
    double cost = 0.0;
    std::string summary_text;
    json summary;
    std::optional<scheduler::AnswerValue> reading;
    double confidence = 0.85;
    std::optional<scheduler::ObservationModel> model;
    std::vector<int> evidence_ids;
};

// Validates the call against the registry (unknown name, schema, quota),
// runs the tool, charges its cost, appends the history entry and evidence
// item, and refreshes the state cache. Rejected calls (QuotaExceeded,
// ParamValidationFailure, UnknownTool) charge nothing and record nothing.
Observation execute_tool(const ToolRegistry& registry, const Directive& call,
                         const ChartImage& image, Episode& episode);

struct EpisodeResult {
    json answer;  // number, token, or table; null when nothing usable
    scheduler::Belief belief;
    evidence::EvidencePackage package;
    int call_count = 0;
    double total_cost = 0.0;
    bool incomplete = false;
};

json episode_result_to_json(const EpisodeResult& r);

// The full loop: seed the belief from the question, iterate
// plan -> parse -> execute -> update under the budget/round guards, then
// close with the reflection vote (plus at most one arbitration call when
// the verdict is shaky or tools disagree). Never throws for planner or
// tool misbehavior — a degraded episode still yields a result and an
// auditable package.
EpisodeResult run_episode(const ChartImage& image,
                          const qtypes::Question& question,
                          const scheduler::SchedulerConfig& config,
                          Planner& planner, const ToolRegistry& registry,
                          const EpisodeOptions& options = {});

}  // namespace chartagent::orchestrator
