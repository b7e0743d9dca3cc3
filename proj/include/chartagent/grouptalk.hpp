#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "chartagent/evidence.hpp"
#include "chartagent/qtypes.hpp"
#include "chartagent/scheduler.hpp"

namespace chartagent::grouptalk {

using nlohmann::json;
using scheduler::AnswerValue;
using scheduler::Belief;

struct Vote {
    std::string expert_id;
    AnswerValue candidate;
    double score = 0.0;       // in [0, 1]
    double confidence = 0.0;  // in [0, 1]
    std::string rationale;
    std::vector<int> cited_evidence;  // item ids in the episode's package
};

struct Verdict {
    AnswerValue candidate;
    double aggregate_score = 0.0;
    double margin = 0.0;  // top-1 minus top-2 aggregate, >= 0
    bool arbitration_used = false;
};

// An expert issues one vote per candidate, scored from its own evidence
// dimension. Experts are pure evaluators and must be reentrant.
class Expert {
  public:
    virtual ~Expert() = default;
    virtual std::string id() const = 0;
    virtual std::vector<Vote> vote(const Belief& belief,
                                   const evidence::EvidencePackage& package,
                                   const qtypes::Question& question) const = 0;
};

// The built-in roster: the tool expert scores candidates by the confidence
// and health of the tool readings backing them; the synthesis expert by
// cross-tool agreement; the belief expert by posterior mass.
std::vector<std::unique_ptr<Expert>> default_experts();

std::vector<Vote> collect_votes(const std::vector<std::unique_ptr<Expert>>& experts,
                                const Belief& belief,
                                const evidence::EvidencePackage& package,
                                const qtypes::Question& question);

// Per expert, scores are softmax-normalized over that expert's votes at the
// given temperature; each expert carries one weight — its mean confidence,
// min-max rescaled to [0, 1] across experts (all-equal → 1). Candidates sum
// weighted normalized scores across experts; the argmax wins, ties breaking
// by candidate ordering (numbers ascending before tokens lexicographic).
Verdict aggregate(const std::vector<Vote>& votes, double temperature);

// True when the verdict is too close to call or tools disagree outright;
// the orchestrator may then grant one remedial call before re-voting.
bool needs_arbitration(const Verdict& verdict, bool tool_conflicts,
                       double margin_threshold);

// True when two tools' latest readings disagree beyond merge tolerance —
// each tool's newest reading is taken as its current opinion.
bool detect_tool_conflicts(const evidence::EvidencePackage& package);

// Ballot log embedded in the evidence package.
json vote_log_json(const std::vector<Vote>& votes, const Verdict& verdict);

}  // namespace chartagent::grouptalk
