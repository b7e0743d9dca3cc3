#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "chartagent/common.hpp"

namespace chartagent::scheduler {

using nlohmann::json;

// An answer hypothesis: a numeric value or a categorical token.
using AnswerValue = std::variant<double, std::string>;

// Numbers serialize as JSON numbers, tokens as strings.
json answer_to_json(const AnswerValue& v);
AnswerValue answer_from_json(const json& j);

// ---------------------------------------------------------------------------
// belief state

struct Belief {
    std::vector<AnswerValue> candidates;
    std::vector<double> probs;
    double residual_other = 0.0;  // mass on "none of these"
};

// probs and residual_other sum to 1 within 1e-12, all entries are
// nonnegative, and candidates are pairwise distinct.
bool belief_valid(const Belief& b);

// Uniform prior over the candidates with the remaining mass parked on
// residual_other. Half-open mass on "other" prevents false certainty
// before any tool has run.
Belief uniform_belief(std::vector<AnswerValue> candidates,
                      double residual_other = 0.5);

// Shannon entropy in nats over the candidate probabilities plus
// residual_other as one more outcome; 0·log 0 = 0.
double entropy(const Belief& b);

// ---------------------------------------------------------------------------
// observation models

// Likelihood table over a discrete observation space. Row i gives
// p(z | candidate i); the final extra row gives p(z | none-of-these).
// An empty outcome list marks a non-enumerable model.
struct ObservationModel {
    std::string tool;
    std::vector<AnswerValue> outcomes;
    std::vector<std::vector<double>> likelihood;  // [candidate+1][outcome]
    std::map<std::string, double> declared_noise;

    bool enumerable() const { return !outcomes.empty(); }
};

// Rows match candidates+1 and each row sums to 1 within 1e-9.
bool model_valid(const ObservationModel& m, size_t n_candidates);

// Standard channel families.
ObservationModel deterministic_channel(const Belief& b);
ObservationModel noisy_channel(const Belief& b, double accuracy);
ObservationModel uninformative_channel(const Belief& b, size_t n_outcomes);

// ---------------------------------------------------------------------------
// belief updates

// Numeric values within 0.5% relative distance count as the same answer;
// tokens merge only on exact equality.
bool answers_merge(const AnswerValue& a, const AnswerValue& b);

struct PosteriorResult {
    Belief belief;
    bool zero_evidence = false;  // all likelihoods vanished; belief unchanged
    bool inserted = false;       // observation spawned a new candidate
};

// Bayes rule over candidates and residual. An observation that is not near
// any existing candidate is inserted as a new candidate, drawing half the
// residual_other mass. An observation whose likelihood column vanishes (or
// that the model cannot score) passes the belief through with the
// zero_evidence flag set.
PosteriorResult posterior(const Belief& b, const ObservationModel& model,
                          const AnswerValue& observation);

// ---------------------------------------------------------------------------
// expected information gain

// H(b) − E_z[H(posterior)] for an enumerable model: the mutual information
// between the answer and the observation. Nonnegative, at most H(b).
double eig_exact(const Belief& b, const ObservationModel& model);

// The unified tool schema: invocation metadata plus the cost estimate and
// declared information gain the scheduler consumes.
struct ToolSpec {
    std::string name;
    std::string description;
    json params_schema = json::object();
    double cost = 0.0;       // c(a), cost units
    double base_gain = 0.0;  // g0, nats, before decay
    int quota = 16;          // max calls per episode, at least 1
    std::vector<ChartType> compatible;  // empty = applies to every type
    // Tools that must have succeeded first. A tool whose preconditions are
    // unmet can only fail, so its conditional information gain is zero;
    // planners use this to skip calls that cannot pay off yet.
    std::vector<std::string> prerequisites;
};

// Declared-gain heuristic for live tools: g0 · gain_decay^prior_calls,
// gated to zero when the tool does not apply to the chart type.
double eig_heuristic(const ToolSpec& tool, int prior_calls,
                     ChartType chart_type, double gain_decay);

// ---------------------------------------------------------------------------
// policy

struct SchedulerConfig {
    double lambda = 0.2;    // cost weight
    double budget = 8.0;    // B, cost units
    double eta = 0.0;       // stopping threshold on net gain
    double gain_decay = 0.5;
    int max_rounds = 16;
};

// Accepts a JSON object or flat key=value lines; keys lambda, budget, eta,
// gain_decay, max_rounds. Unknown keys or out-of-range values are errors.
SchedulerConfig parse_config(const std::string& text);
SchedulerConfig load_config(const std::string& path);

struct Action {
    bool finish = false;
    int tool = -1;         // index into the score arrays when not finishing
    double net_gain = 0.0; // best EIG(a) − λ·c(a) seen
};

// Myopic argmax of EIG(a) − λ·c(a); ties break toward the lower index.
// Returns finish when the best net gain drops to eta or below.
Action select_action(const std::vector<double>& scores,
                     const std::vector<double>& costs,
                     const SchedulerConfig& config);

// True when best_net_gain ≤ eta, cumulative_cost ≥ budget, or
// round ≥ max_rounds (all inclusive).
bool should_stop(double best_net_gain, double cumulative_cost,
                 const SchedulerConfig& config, int round);

}  // namespace chartagent::scheduler
