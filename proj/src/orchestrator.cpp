#include "chartagent/orchestrator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <utility>

#include "chartagent/grouptalk.hpp"

namespace chartagent::orchestrator {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool wrapped_by(const std::string& body, const std::string& open,
                const std::string& close, std::string* inner) {
    if (body.size() < open.size() + close.size()) return false;
    if (body.compare(0, open.size(), open) != 0) return false;
    if (body.compare(body.size() - close.size(), close.size(), close) != 0)
        return false;
    *inner = body.substr(open.size(), body.size() - open.size() - close.size());
    return true;
}

std::string format_gain(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// directive protocol

std::string directive_to_string(const Directive& d) {
    json j;
    if (d.kind == DirectiveKind::tool_call) {
        j["name"] = d.tool_name;
        j["params"] = d.params;
        if (!d.rationale.empty()) j["rationale"] = d.rationale;
        return "<tool_call>" + evidence::canonical_dump(j) + "</tool_call>";
    }
    if (!d.answer.is_null()) j["answer"] = d.answer;
    if (d.incomplete || d.answer.is_null()) j["incomplete"] = true;
    return "<finish>" + evidence::canonical_dump(j) + "</finish>";
}

ParsedDirective parse_directive(const std::string& text) {
    ParsedDirective out;
    const std::string body = trim(text);

    std::string inner;
    bool is_call = false;
    if (wrapped_by(body, "<tool_call>", "</tool_call>", &inner)) {
        is_call = true;
    } else if (!wrapped_by(body, "<finish>", "</finish>", &inner)) {
        out.error = "expected a <tool_call> or <finish> wrapper";
        return out;
    }

    const json j = json::parse(inner, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        out.error = "directive payload is not a JSON object";
        return out;
    }

    Directive d;
    if (is_call) {
        d.kind = DirectiveKind::tool_call;
        if (!j.contains("name") || !j.at("name").is_string() ||
            j.at("name").get<std::string>().empty()) {
            out.error = "tool_call needs a nonempty string \"name\"";
            return out;
        }
        d.tool_name = j.at("name").get<std::string>();
        if (j.contains("params")) {
            if (!j.at("params").is_object()) {
                out.error = "tool_call \"params\" must be a JSON object";
                return out;
            }
            d.params = j.at("params");
        }
        if (j.contains("rationale")) {
            if (!j.at("rationale").is_string()) {
                out.error = "tool_call \"rationale\" must be a string";
                return out;
            }
            d.rationale = j.at("rationale").get<std::string>();
        }
    } else {
        d.kind = DirectiveKind::finish;
        if (j.contains("answer")) d.answer = j.at("answer");
        if (j.contains("incomplete")) {
            if (!j.at("incomplete").is_boolean()) {
                out.error = "finish \"incomplete\" must be a boolean";
                return out;
            }
            d.incomplete = j.at("incomplete").get<bool>();
        }
        if (d.answer.is_null() && !d.incomplete) {
            out.error = "finish carries neither an answer nor the incomplete flag";
            return out;
        }
    }
    out.ok = true;
    out.directive = std::move(d);
    return out;
}

// ---------------------------------------------------------------------------
// caches

int HistoryCache::calls_of(const std::string& tool) const {
    int n = 0;
    for (const auto& e : entries)
        if (e.tool == tool) ++n;
    return n;
}

std::string HistoryCache::digest(size_t max_entries) const {
    std::string out;
    const size_t start =
        entries.size() > max_entries ? entries.size() - max_entries : 0;
    if (start > 0)
        out += "(" + std::to_string(start) + " earlier calls pruned)\n";
    for (size_t i = start; i < entries.size(); ++i) {
        const HistoryEntry& e = entries[i];
        out += "#" + std::to_string(e.order) + " " + e.tool +
               " cost=" + format_gain(e.cost) + ": " + e.summary + "\n";
    }
    return out;
}

void StateCache::update(const std::string& tool, json summary,
                        std::vector<int> evidence_ids) {
    const std::string dumped = evidence::canonical_dump(summary);
    if (dumped.size() > per_tool_cap) {
        json preview;
        preview["truncated"] = true;
        preview["preview"] = dumped.substr(0, per_tool_cap / 4);
        summary = std::move(preview);
    }
    entries[tool] = Entry{std::move(summary), std::move(evidence_ids)};
}

json StateCache::to_json() const {
    json j = json::object();
    for (const auto& [tool, entry] : entries) {
        json e;
        e["summary"] = entry.summary;
        e["evidence"] = entry.evidence_ids;
        j[tool] = std::move(e);
    }
    return j;
}

// ---------------------------------------------------------------------------
// tool registry

namespace {

bool known_type(const std::string& t) {
    return t == "number" || t == "integer" || t == "string" ||
           t == "boolean" || t == "array" || t == "object";
}

bool type_matches(const std::string& type, const json& v) {
    if (type == "number") return v.is_number();
    if (type == "integer") return v.is_number_integer();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    if (type == "array") return v.is_array();
    if (type == "object") return v.is_object();
    return false;
}

}  // namespace

bool validate_params(const json& schema, const json& params, std::string* why) {
    const auto reject = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (!params.is_object()) return reject("params must be a JSON object");

    std::map<std::string, std::string> fields;
    std::set<std::string> required;
    for (const auto& [key, val] : schema.items()) {
        std::string name = key;
        bool optional = false;
        if (!name.empty() && name.back() == '?') {
            optional = true;
            name.pop_back();
        }
        fields[name] = val.get<std::string>();
        if (!optional) required.insert(name);
    }
    for (const auto& name : required)
        if (!params.contains(name))
            return reject("missing required parameter: " + name);
    for (const auto& [key, val] : params.items()) {
        const auto it = fields.find(key);
        if (it == fields.end()) return reject("unexpected parameter: " + key);
        if (!type_matches(it->second, val))
            return reject("parameter " + key + " must be " + it->second);
    }
    return true;
}

int ToolRegistry::register_tool(scheduler::ToolSpec spec, ToolFn fn) {
    if (spec.name.empty()) fail("InvalidSchema", "tool name must not be empty");
    if (by_name_.count(spec.name))
        fail("DuplicateName", "tool already registered: " + spec.name);
    if (!(spec.cost >= 0.0))
        fail("InvalidSchema", spec.name + ": cost must be nonnegative");
    if (spec.quota < 1)
        fail("InvalidSchema", spec.name + ": quota must be at least 1");
    if (!spec.params_schema.is_object())
        fail("InvalidSchema", spec.name + ": params schema must be an object");
    for (const auto& [key, val] : spec.params_schema.items()) {
        if (key.empty() || key == "?")
            fail("InvalidSchema", spec.name + ": empty parameter name");
        if (!val.is_string() || !known_type(val.get<std::string>()))
            fail("InvalidSchema",
                 spec.name + ": unsupported type for parameter " + key);
    }
    if (!fn) fail("InvalidSchema", spec.name + ": executor must be callable");

    const int handle = int(specs_.size());
    by_name_[spec.name] = handle;
    specs_.push_back(std::move(spec));
    fns_.push_back(std::move(fn));
    return handle;
}

bool ToolRegistry::has(const std::string& name) const {
    return by_name_.count(name) > 0;
}

int ToolRegistry::index_of(const std::string& name) const {
    const auto it = by_name_.find(name);
    return it == by_name_.end() ? -1 : it->second;
}

const ToolFn& ToolRegistry::executor(int index) const {
    if (index < 0 || size_t(index) >= fns_.size())
        fail("UnknownTool", "no tool at handle " + std::to_string(index));
    return fns_[size_t(index)];
}

// ---------------------------------------------------------------------------
// default planner

namespace {

// Preconditions met = every required tool has produced a state entry.
bool prerequisites_met(const scheduler::ToolSpec& spec,
                       const StateCache& state) {
    for (const auto& dep : spec.prerequisites)
        if (!state.entries.count(dep)) return false;
    return true;
}

}  // namespace

std::string EigPlanner::plan(const PlannerView& view) {
    const auto& tools = *view.tools;
    std::vector<int> eligible;
    std::vector<double> scores;
    std::vector<double> costs;
    for (size_t i = 0; i < tools.size(); ++i) {
        if (view.quota_left[i] <= 0) continue;
        if (tools[i].cost > view.budget_left + 1e-9) continue;
        double gain = 0.0;
        const auto it = models.find(tools[i].name);
        if (it != models.end())
            gain = scheduler::eig_exact(*view.belief, it->second(*view.belief));
        else if (prerequisites_met(tools[i], *view.state))
            gain = scheduler::eig_heuristic(tools[i], view.calls_used[i],
                                            view.chart_type,
                                            view.config.gain_decay);
        eligible.push_back(int(i));
        scores.push_back(gain);
        costs.push_back(tools[i].cost);
    }

    const scheduler::Action action =
        scheduler::select_action(scores, costs, view.config);
    Directive d;
    if (action.finish) {
        d.kind = DirectiveKind::finish;
        const scheduler::Belief& b = *view.belief;
        int best = -1;
        double best_p = -1.0;
        for (size_t c = 0; c < b.probs.size(); ++c) {
            if (b.probs[c] > best_p) {
                best_p = b.probs[c];
                best = int(c);
            }
        }
        if (best >= 0)
            d.answer = scheduler::answer_to_json(b.candidates[size_t(best)]);
        else
            d.incomplete = true;
    } else {
        const size_t idx = size_t(eligible[size_t(action.tool)]);
        d.kind = DirectiveKind::tool_call;
        d.tool_name = tools[idx].name;
        d.rationale = "net gain " + format_gain(action.net_gain) + " at cost " +
                      format_gain(tools[idx].cost);
    }
    return directive_to_string(d);
}

// ---------------------------------------------------------------------------
// execution

Observation execute_tool(const ToolRegistry& registry, const Directive& call,
                         const ChartImage& image, Episode& ep) {
    if (call.kind != DirectiveKind::tool_call)
        fail("ParamValidationFailure", "directive is not a tool call");
    const int idx = registry.index_of(call.tool_name);
    if (idx < 0) fail("UnknownTool", "no such tool: " + call.tool_name);
    const scheduler::ToolSpec& spec = registry.specs()[size_t(idx)];
    if (ep.history.calls_of(spec.name) >= spec.quota)
        fail("QuotaExceeded", spec.name + " exhausted its quota of " +
                                  std::to_string(spec.quota));
    std::string why;
    if (!validate_params(spec.params_schema, call.params, &why))
        fail("ParamValidationFailure", spec.name + ": " + why);

    Observation obs;
    obs.cost = spec.cost;
    ToolContext ctx{image,          ep.question,    ep.state,
                    &ep.belief,     ep.options.ocr, ep.options.seed,
                    int(ep.history.entries.size()) + 1};
    ToolOutput out;
    try {
        out = registry.executor(idx)(call.params, ctx);
        obs.executed = true;
    } catch (const Error& e) {
        obs.executed = true;
        obs.failed = true;
        obs.error_code = e.code();
        obs.summary_text = std::string("error ") + e.what();
    } catch (const std::exception& e) {
        obs.executed = true;
        obs.failed = true;
        obs.error_code = "ToolError";
        obs.summary_text = std::string("error ToolError: ") + e.what();
    }

    std::vector<evidence::Artifact> artifacts;
    if (!obs.failed) {
        obs.summary = out.summary;
        obs.summary_text = out.summary_text.empty()
                               ? evidence::canonical_dump(out.summary)
                               : out.summary_text;
        obs.reading = out.reading;
        obs.confidence = out.confidence;
        obs.model = std::move(out.model);
        if (obs.reading) {
            json payload;
            payload["value"] = scheduler::answer_to_json(*obs.reading);
            payload["confidence"] = obs.confidence;
            artifacts.push_back(
                evidence::Artifact::inline_json("reading", payload));
        }
        for (auto& a : out.artifacts) artifacts.push_back(std::move(a));
        if (artifacts.empty())
            artifacts.push_back(
                evidence::Artifact::inline_json("log", out.summary));
    } else {
        json payload;
        payload["code"] = obs.error_code;
        payload["message"] = obs.summary_text;
        artifacts.push_back(evidence::Artifact::inline_json("error", payload));
    }

    // Charge and record: tool-internal failures are evidence too.
    ep.total_cost += spec.cost;
    const int order = int(ep.history.entries.size()) + 1;
    ep.history.entries.push_back(
        {order, spec.name, call.params, obs.summary_text, spec.cost});
    evidence::EvidenceItem& item =
        evidence::append(ep.package, ep.round, spec.name, call.params,
                         obs.summary_text, std::move(artifacts));
    // Logical clock instead of wall time: identical episodes must
    // serialize identically.
    item.timestamp_ms = item.id;
    obs.evidence_ids = {item.id};
    if (!obs.failed)
        ep.state_cache.update(spec.name, out.summary, obs.evidence_ids);
    return obs;
}

// ---------------------------------------------------------------------------
// episode loop

namespace {

json config_to_json(const scheduler::SchedulerConfig& c) {
    json j;
    j["lambda"] = c.lambda;
    j["budget"] = c.budget;
    j["eta"] = c.eta;
    j["gain_decay"] = c.gain_decay;
    j["max_rounds"] = c.max_rounds;
    return j;
}

void log_event(Episode& ep, const std::string& source,
               const std::string& summary, json payload) {
    auto& item = evidence::append(
        ep.package, ep.round, source, json::object(), summary,
        {evidence::Artifact::inline_json("log", std::move(payload))});
    item.timestamp_ms = item.id;
}

// Fold a value observation into the belief, filtered by the candidate kind
// so that intermediate measurements (per-referent numbers in a comparison
// episode) never masquerade as answer proposals.
void apply_reading(Episode& ep, const Observation& obs) {
    if (!obs.reading) return;
    const bool numeric = std::holds_alternative<double>(*obs.reading);
    switch (ep.candidate_kind) {
        case qtypes::CandidateKind::numeric:
            if (!numeric) return;
            break;
        case qtypes::CandidateKind::ordering:
            if (numeric) return;
            break;
        case qtypes::CandidateKind::table:
            return;
    }
    try {
        const scheduler::ObservationModel model =
            obs.model ? *obs.model
                      : scheduler::noisy_channel(
                            ep.belief, std::clamp(obs.confidence, 0.0, 1.0));
        ep.belief = scheduler::posterior(ep.belief, model, *obs.reading).belief;
    } catch (const Error&) {
        // A malformed custom model must not sink the episode; the reading
        // stays on record in the evidence package.
    }
}

PlannerView make_view(const Episode& ep, const ToolRegistry& registry) {
    PlannerView v;
    v.question = &ep.question;
    v.state = &ep.state_cache;
    v.history_digest = ep.history.digest();
    v.tools = &registry.specs();
    for (const auto& spec : registry.specs()) {
        const int used = ep.history.calls_of(spec.name);
        v.calls_used.push_back(used);
        v.quota_left.push_back(spec.quota - used);
    }
    v.budget_left = ep.config.budget - ep.total_cost;
    v.chart_type = ep.state.classification.chart_type;
    v.belief = &ep.belief;
    v.config = ep.config;
    v.round = ep.round;
    return v;
}

// Best quota- and budget-eligible tool by current net gain, ignoring the
// stopping threshold: arbitration wants one more measurement even when the
// thrifty policy would already have stopped.
std::optional<Directive> remedial_call(const Episode& ep,
                                       const ToolRegistry& registry) {
    const auto& specs = registry.specs();
    int best = -1;
    double best_net = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < specs.size(); ++i) {
        const auto& spec = specs[i];
        const int used = ep.history.calls_of(spec.name);
        if (used >= spec.quota) continue;
        if (ep.total_cost + spec.cost > ep.config.budget + 1e-9) continue;
        if (!prerequisites_met(spec, ep.state_cache)) continue;
        const double gain = scheduler::eig_heuristic(
            spec, used, ep.state.classification.chart_type,
            ep.config.gain_decay);
        const double net = gain - ep.config.lambda * spec.cost;
        if (net > best_net) {
            best_net = net;
            best = int(i);
        }
    }
    if (best < 0) return std::nullopt;
    Directive d;
    d.kind = DirectiveKind::tool_call;
    d.tool_name = specs[size_t(best)].name;
    d.rationale = "arbitration re-measure";
    return d;
}

}  // namespace

EpisodeResult run_episode(const ChartImage& image,
                          const qtypes::Question& question,
                          const scheduler::SchedulerConfig& config,
                          Planner& planner, const ToolRegistry& registry,
                          const EpisodeOptions& options) {
    Episode ep;
    ep.question = question;
    ep.config = config;
    ep.options = options;
    if (!(ep.options.temperature > 0.0)) ep.options.temperature = 1.0;
    const auto seeded = qtypes::seed_candidates(question, ChartType::unknown);
    ep.candidate_kind = seeded.candidates.kind;
    ep.belief = seeded.prior;
    ep.package.image_digest = evidence::sha256_hex(encode_ppm(image));
    ep.package.question = question.raw;
    ep.package.config = config_to_json(config);
    ep.package.seed = options.seed;

    bool finished = false;
    Directive finish_directive;
    while (ep.total_cost < config.budget && ep.round < config.max_rounds) {
        ++ep.round;
        const std::string text = planner.plan(make_view(ep, registry));
        ParsedDirective parsed = parse_directive(text);
        if (!parsed.ok) {
            json payload;
            payload["error"] = parsed.error;
            payload["text"] = text.substr(0, 256);
            log_event(ep, "planner", "unparseable directive: " + parsed.error,
                      std::move(payload));
            continue;
        }
        Directive d = std::move(parsed.directive);
        if (d.kind == DirectiveKind::finish) {
            finished = true;
            finish_directive = std::move(d);
            break;
        }
        const int idx = registry.index_of(d.tool_name);
        if (idx < 0) {
            log_event(ep, "planner", "unknown tool: " + d.tool_name,
                      {{"tool", d.tool_name}});
            continue;
        }
        const auto& spec = registry.specs()[size_t(idx)];
        if (ep.total_cost + spec.cost > config.budget + 1e-9) {
            log_event(ep, "orchestrator",
                      "budget cannot cover " + d.tool_name,
                      {{"tool", d.tool_name},
                       {"cost", spec.cost},
                       {"budget_left", config.budget - ep.total_cost}});
            continue;
        }
        Observation obs;
        try {
            obs = execute_tool(registry, d, image, ep);
        } catch (const Error& e) {
            log_event(ep, "orchestrator", e.what(),
                      {{"code", e.code()}, {"tool", d.tool_name}});
            continue;
        }
        if (obs.executed && !obs.failed) apply_reading(ep, obs);
    }

    // Reflection: multi-expert vote over the collected evidence, with at
    // most one arbitration measurement when the verdict is shaky.
    const auto experts = grouptalk::default_experts();
    std::vector<grouptalk::Vote> votes;
    std::optional<grouptalk::Verdict> verdict;
    const auto reflect = [&]() {
        votes = grouptalk::collect_votes(experts, ep.belief, ep.package,
                                         ep.question);
        if (votes.empty())
            verdict.reset();
        else
            verdict = grouptalk::aggregate(votes, ep.options.temperature);
    };
    reflect();

    bool arbitrated = false;
    if (verdict &&
        grouptalk::needs_arbitration(*verdict,
                                     grouptalk::detect_tool_conflicts(ep.package),
                                     ep.options.margin_threshold)) {
        if (const auto call = remedial_call(ep, registry)) {
            ++ep.round;
            try {
                const Observation obs =
                    execute_tool(registry, *call, image, ep);
                if (obs.executed && !obs.failed) apply_reading(ep, obs);
                arbitrated = true;
            } catch (const Error& e) {
                log_event(ep, "orchestrator", e.what(),
                          {{"code", e.code()}, {"tool", call->tool_name}});
            }
            if (arbitrated) reflect();
        }
    }
    if (verdict) verdict->arbitration_used = arbitrated;

    if (verdict) {
        const json vl = grouptalk::vote_log_json(votes, *verdict);
        auto& item = evidence::append(
            ep.package, ep.round, "grouptalk", json::object(),
            "reflection verdict",
            {evidence::Artifact::inline_json("vote_log", vl)});
        item.timestamp_ms = item.id;
        ep.package.final_verdict = vl.at("verdict");
    }

    bool incomplete = !finished || finish_directive.incomplete;
    json answer;
    if (ep.question.task == qtypes::QuestionTask::chart_to_table) {
        if (ep.state.table)
            answer = reasoning::table_to_json(*ep.state.table);
        else
            incomplete = true;
    } else if (verdict) {
        answer = scheduler::answer_to_json(verdict->candidate);
    } else if (!ep.belief.candidates.empty()) {
        int best = -1;
        double best_p = -1.0;
        for (size_t c = 0; c < ep.belief.probs.size(); ++c) {
            if (ep.belief.probs[c] > best_p) {
                best_p = ep.belief.probs[c];
                best = int(c);
            }
        }
        answer = scheduler::answer_to_json(ep.belief.candidates[size_t(best)]);
    }
    if (answer.is_null()) incomplete = true;

    ep.package.final_answer = answer;
    ep.package.incomplete = incomplete;

    EpisodeResult result;
    result.answer = std::move(answer);
    result.belief = std::move(ep.belief);
    result.call_count = int(ep.history.entries.size());
    result.total_cost = ep.total_cost;
    result.incomplete = incomplete;
    result.package = std::move(ep.package);
    return result;
}

json episode_result_to_json(const EpisodeResult& r) {
    json candidates = json::array();
    for (const auto& c : r.belief.candidates)
        candidates.push_back(scheduler::answer_to_json(c));
    json belief;
    belief["candidates"] = std::move(candidates);
    belief["probs"] = r.belief.probs;
    belief["residual_other"] = r.belief.residual_other;

    json j;
    j["answer"] = r.answer;
    j["belief"] = std::move(belief);
    j["call_count"] = r.call_count;
    j["total_cost"] = r.total_cost;
    j["incomplete"] = r.incomplete;
    j["verdict"] = r.package.final_verdict;
    j["package"] = json::parse(evidence::serialize(r.package));
    return j;
}

}  // namespace chartagent::orchestrator
