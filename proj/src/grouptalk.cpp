#include "chartagent/grouptalk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace chartagent::grouptalk {

namespace {

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

struct Reading {
    int item_id = 0;
    std::string tool;
    AnswerValue value;
    double confidence = 0.8;  // default when the tool declares none
};

// Every reading artifact in the package, in item order, plus the set of
// tools that logged at least one error artifact.
void scan_package(const evidence::EvidencePackage& package,
                  std::vector<Reading>* readings,
                  std::set<std::string>* failed_tools) {
    for (const auto& item : package.items) {
        for (const auto& artifact : item.artifacts) {
            if (artifact.kind == "error") {
                failed_tools->insert(item.tool);
                continue;
            }
            if (artifact.kind != "reading" || !artifact.payload.is_object())
                continue;
            const auto it = artifact.payload.find("value");
            if (it == artifact.payload.end()) continue;
            if (!it->is_number() && !it->is_string()) continue;
            Reading r;
            r.item_id = item.id;
            r.tool = item.tool;
            r.value = scheduler::answer_from_json(*it);
            const auto conf = artifact.payload.find("confidence");
            if (conf != artifact.payload.end() && conf->is_number())
                r.confidence = clamp01(conf->get<double>());
            readings->push_back(std::move(r));
        }
    }
}

class ToolExpert : public Expert {
  public:
    std::string id() const override { return "tool"; }

    std::vector<Vote> vote(const Belief& belief,
                           const evidence::EvidencePackage& package,
                           const qtypes::Question&) const override {
        std::vector<Reading> readings;
        std::set<std::string> failed;
        scan_package(package, &readings, &failed);

        std::vector<Vote> votes;
        for (size_t c = 0; c < belief.candidates.size(); ++c) {
            Vote v;
            v.expert_id = id();
            v.candidate = belief.candidates[c];
            double conf_sum = 0.0;
            double health = 1.0;
            int supporting = 0;
            for (const auto& r : readings) {
                if (!scheduler::answers_merge(r.value, v.candidate)) continue;
                ++supporting;
                conf_sum += r.confidence;
                if (failed.count(r.tool)) health = 0.5;
                v.cited_evidence.push_back(r.item_id);
            }
            if (supporting == 0) {
                v.score = 0.2;
                v.confidence = 0.3;
                v.rationale = "no direct tool reading";
            } else {
                const double mean_conf = conf_sum / supporting;
                v.score = clamp01(mean_conf * health);
                v.confidence = clamp01(mean_conf) * health;
                v.rationale = "backed by " + std::to_string(supporting) +
                              " reading(s)" +
                              (health < 1.0 ? ", source tool reported errors" : "");
            }
            votes.push_back(std::move(v));
        }
        return votes;
    }
};

class SynthesisExpert : public Expert {
  public:
    std::string id() const override { return "synthesis"; }

    std::vector<Vote> vote(const Belief& belief,
                           const evidence::EvidencePackage& package,
                           const qtypes::Question&) const override {
        std::vector<Reading> readings;
        std::set<std::string> failed;
        scan_package(package, &readings, &failed);

        std::vector<Vote> votes;
        for (size_t c = 0; c < belief.candidates.size(); ++c) {
            Vote v;
            v.expert_id = id();
            v.candidate = belief.candidates[c];
            std::set<std::string> sources;
            for (const auto& r : readings) {
                if (!scheduler::answers_merge(r.value, v.candidate)) continue;
                sources.insert(r.tool);
                v.cited_evidence.push_back(r.item_id);
            }
            const int k = int(sources.size());
            v.score = k >= 2 ? 0.9 : (k == 1 ? 0.5 : 0.2);
            v.confidence = clamp01(0.4 + 0.15 * std::min(k, 4));
            v.rationale = k >= 2 ? "multiple tools agree"
                                 : (k == 1 ? "single-source reading"
                                           : "unconfirmed candidate");
            votes.push_back(std::move(v));
        }
        return votes;
    }
};

class BeliefExpert : public Expert {
  public:
    std::string id() const override { return "belief"; }

    std::vector<Vote> vote(const Belief& belief,
                           const evidence::EvidencePackage&,
                           const qtypes::Question&) const override {
        double top = 0.0;
        for (double p : belief.probs) top = std::max(top, p);
        std::vector<Vote> votes;
        for (size_t c = 0; c < belief.candidates.size(); ++c) {
            Vote v;
            v.expert_id = id();
            v.candidate = belief.candidates[c];
            v.score = clamp01(belief.probs[c]);
            v.confidence = clamp01(top);
            v.rationale = "posterior mass";
            votes.push_back(std::move(v));
        }
        return votes;
    }
};

}  // namespace

std::vector<std::unique_ptr<Expert>> default_experts() {
    std::vector<std::unique_ptr<Expert>> experts;
    experts.push_back(std::make_unique<ToolExpert>());
    experts.push_back(std::make_unique<SynthesisExpert>());
    experts.push_back(std::make_unique<BeliefExpert>());
    return experts;
}

std::vector<Vote> collect_votes(const std::vector<std::unique_ptr<Expert>>& experts,
                                const Belief& belief,
                                const evidence::EvidencePackage& package,
                                const qtypes::Question& question) {
    if (experts.empty()) fail("NoExperts", "reflection needs at least one expert");
    std::vector<Vote> votes;
    for (const auto& expert : experts) {
        auto ballot = expert->vote(belief, package, question);
        votes.insert(votes.end(), std::make_move_iterator(ballot.begin()),
                     std::make_move_iterator(ballot.end()));
    }
    return votes;
}

Verdict aggregate(const std::vector<Vote>& votes, double temperature) {
    if (votes.empty()) fail("EmptyVotes", "nothing to aggregate");
    if (!(temperature > 0.0))
        fail("InvalidConfig", "temperature must be positive");

    // Group vote indices per expert; the map keeps expert order canonical
    // so the fold is invariant to the incoming vote order.
    std::map<std::string, std::vector<size_t>> by_expert;
    for (size_t i = 0; i < votes.size(); ++i)
        by_expert[votes[i].expert_id].push_back(i);

    // One weight per expert: its mean confidence, min-max rescaled across
    // experts. A per-vote weight could zero out a unanimous winner, so the
    // weight must not depend on which candidate a vote names.
    std::map<std::string, double> expert_conf;
    double cmin = std::numeric_limits<double>::infinity();
    double cmax = -std::numeric_limits<double>::infinity();
    for (const auto& [expert_id, idx] : by_expert) {
        double sum = 0.0;
        for (size_t i : idx) sum += votes[i].confidence;
        const double conf = sum / double(idx.size());
        expert_conf[expert_id] = conf;
        cmin = std::min(cmin, conf);
        cmax = std::max(cmax, conf);
    }

    std::map<AnswerValue, double> totals;
    for (const auto& [expert_id, idx] : by_expert) {
        const double conf = expert_conf[expert_id];
        const double weight =
            cmax > cmin ? (conf - cmin) / (cmax - cmin) : 1.0;

        double max_score = -std::numeric_limits<double>::infinity();
        for (size_t i : idx) max_score = std::max(max_score, votes[i].score);
        double z = 0.0;
        for (size_t i : idx) z += std::exp((votes[i].score - max_score) / temperature);
        for (size_t i : idx) {
            const double normalized =
                std::exp((votes[i].score - max_score) / temperature) / z;
            totals[votes[i].candidate] += weight * normalized;
        }
    }

    Verdict verdict;
    double top1 = -1.0, top2 = 0.0;
    for (const auto& [candidate, total] : totals) {
        if (total > top1) {
            top2 = top1 < 0.0 ? 0.0 : top1;
            top1 = total;
            verdict.candidate = candidate;
        } else if (total > top2) {
            top2 = total;
        }
    }
    verdict.aggregate_score = top1;
    verdict.margin = top1 - top2;
    return verdict;
}

bool needs_arbitration(const Verdict& verdict, bool tool_conflicts,
                       double margin_threshold) {
    return verdict.margin < margin_threshold || tool_conflicts;
}

bool detect_tool_conflicts(const evidence::EvidencePackage& package) {
    std::vector<Reading> readings;
    std::set<std::string> failed;
    scan_package(package, &readings, &failed);
    std::map<std::string, AnswerValue> latest;
    for (const auto& r : readings) latest.insert_or_assign(r.tool, r.value);
    for (auto a = latest.begin(); a != latest.end(); ++a)
        for (auto b = std::next(a); b != latest.end(); ++b)
            if (!scheduler::answers_merge(a->second, b->second)) return true;
    return false;
}

json vote_log_json(const std::vector<Vote>& votes, const Verdict& verdict) {
    json ballot = json::array();
    for (const auto& v : votes) {
        ballot.push_back({{"expert", v.expert_id},
                          {"candidate", scheduler::answer_to_json(v.candidate)},
                          {"score", v.score},
                          {"confidence", v.confidence},
                          {"rationale", v.rationale},
                          {"cited_evidence", v.cited_evidence}});
    }
    return {{"votes", std::move(ballot)},
            {"verdict",
             {{"candidate", scheduler::answer_to_json(verdict.candidate)},
              {"aggregate_score", verdict.aggregate_score},
              {"margin", verdict.margin},
              {"arbitration_used", verdict.arbitration_used}}}};
}

}  // namespace chartagent::grouptalk
