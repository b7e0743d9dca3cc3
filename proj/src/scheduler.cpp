#include "chartagent/scheduler.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

#include "chartagent/image.hpp"

namespace chartagent::scheduler {

namespace {

constexpr double kSimplexTol = 1e-12;
constexpr double kRowTol = 1e-9;
constexpr double kMergeRel = 0.005;  // 0.5% relative distance

double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace

json answer_to_json(const AnswerValue& v) {
    if (std::holds_alternative<double>(v)) return json(std::get<double>(v));
    return json(std::get<std::string>(v));
}

AnswerValue answer_from_json(const json& j) {
    if (j.is_number()) return AnswerValue{j.get<double>()};
    if (j.is_string()) return AnswerValue{j.get<std::string>()};
    fail("SchemaViolation", "answer must be a number or a string");
}

// ---------------------------------------------------------------------------
// belief state

bool belief_valid(const Belief& b) {
    if (b.candidates.size() != b.probs.size()) return false;
    if (b.residual_other < 0.0) return false;
    double sum = b.residual_other;
    for (double p : b.probs) {
        if (!(p >= 0.0)) return false;
        sum += p;
    }
    if (std::fabs(sum - 1.0) > kSimplexTol) return false;
    for (size_t i = 0; i < b.candidates.size(); ++i)
        for (size_t j = i + 1; j < b.candidates.size(); ++j)
            if (b.candidates[i] == b.candidates[j]) return false;
    return true;
}

Belief uniform_belief(std::vector<AnswerValue> candidates,
                      double residual_other) {
    if (candidates.empty()) fail("EmptyInput", "no candidates to believe in");
    if (residual_other < 0.0 || residual_other >= 1.0)
        fail("InvalidBelief", "residual mass must lie in [0, 1)");
    Belief b;
    b.probs.assign(candidates.size(),
                   (1.0 - residual_other) / double(candidates.size()));
    b.candidates = std::move(candidates);
    b.residual_other = residual_other;
    return b;
}

double entropy(const Belief& b) {
    double h = -xlogx(b.residual_other);
    for (double p : b.probs) h -= xlogx(p);
    return h;
}

// ---------------------------------------------------------------------------
// observation models

bool model_valid(const ObservationModel& m, size_t n_candidates) {
    if (!m.enumerable()) return false;
    if (m.likelihood.size() != n_candidates + 1) return false;
    for (const auto& row : m.likelihood) {
        if (row.size() != m.outcomes.size()) return false;
        double sum = 0.0;
        for (double p : row) {
            if (!(p >= 0.0)) return false;
            sum += p;
        }
        if (std::fabs(sum - 1.0) > kRowTol) return false;
    }
    return true;
}

namespace {

// Channel whose outcomes are the candidate values plus a "none of these"
// symbol; the caller fills in the rows.
ObservationModel candidate_channel(const Belief& b, const std::string& tool) {
    ObservationModel m;
    m.tool = tool;
    m.outcomes = b.candidates;
    m.outcomes.emplace_back(std::string("other"));
    m.likelihood.assign(b.candidates.size() + 1,
                        std::vector<double>(m.outcomes.size(), 0.0));
    return m;
}

}  // namespace

ObservationModel deterministic_channel(const Belief& b) {
    ObservationModel m = candidate_channel(b, "deterministic");
    for (size_t i = 0; i < m.likelihood.size(); ++i) m.likelihood[i][i] = 1.0;
    return m;
}

ObservationModel noisy_channel(const Belief& b, double accuracy) {
    if (accuracy < 0.0 || accuracy > 1.0)
        fail("InvalidConfig", "channel accuracy must lie in [0, 1]");
    ObservationModel m = candidate_channel(b, "noisy");
    m.declared_noise["accuracy"] = accuracy;
    const size_t n = m.outcomes.size();
    const double spread = n > 1 ? (1.0 - accuracy) / double(n - 1) : 0.0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j)
            m.likelihood[i][j] = i == j ? (n > 1 ? accuracy : 1.0) : spread;
    return m;
}

ObservationModel uninformative_channel(const Belief& b, size_t n_outcomes) {
    if (n_outcomes == 0) fail("EmptyInput", "channel needs at least one outcome");
    ObservationModel m;
    m.tool = "uninformative";
    for (size_t j = 0; j < n_outcomes; ++j)
        m.outcomes.emplace_back(std::string("z") + std::to_string(j));
    m.likelihood.assign(b.candidates.size() + 1,
                        std::vector<double>(n_outcomes, 1.0 / double(n_outcomes)));
    return m;
}

// ---------------------------------------------------------------------------
// belief updates

bool answers_merge(const AnswerValue& a, const AnswerValue& b) {
    if (a.index() != b.index()) return false;
    if (std::holds_alternative<std::string>(a))
        return std::get<std::string>(a) == std::get<std::string>(b);
    const double x = std::get<double>(a);
    const double y = std::get<double>(b);
    const double scale = std::max(std::fabs(x), std::fabs(y));
    return std::fabs(x - y) <= kMergeRel * scale;
}

namespace {

// Column index of the observation in the model's outcome space: exact match
// first, then the merge tolerance for numeric readings. -1 when unscorable.
int outcome_column(const ObservationModel& m, const AnswerValue& z) {
    for (size_t j = 0; j < m.outcomes.size(); ++j)
        if (m.outcomes[j] == z) return int(j);
    for (size_t j = 0; j < m.outcomes.size(); ++j)
        if (answers_merge(m.outcomes[j], z)) return int(j);
    return -1;
}

// Bayes update against column j. Returns false when every likelihood
// vanishes (the evidence rules out all hypotheses at once).
bool bayes_update(const Belief& b, const ObservationModel& m, int j,
                  Belief* out) {
    const size_t n = b.candidates.size();
    std::vector<double> w(n);
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
        w[i] = b.probs[i] * m.likelihood[i][size_t(j)];
        total += w[i];
    }
    const double wr = b.residual_other * m.likelihood[n][size_t(j)];
    total += wr;
    if (total <= 0.0) return false;
    out->candidates = b.candidates;
    out->probs.resize(n);
    for (size_t i = 0; i < n; ++i) out->probs[i] = w[i] / total;
    out->residual_other = wr / total;
    return true;
}

}  // namespace

PosteriorResult posterior(const Belief& b, const ObservationModel& model,
                          const AnswerValue& observation) {
    if (!belief_valid(b)) fail("InvalidBelief", "belief is not a simplex");

    PosteriorResult r;
    r.belief = b;

    bool near_candidate = false;
    for (const auto& c : b.candidates)
        if (answers_merge(c, observation)) { near_candidate = true; break; }

    const bool scorable = model.enumerable() && model_valid(model, b.candidates.size());
    const int j = scorable ? outcome_column(model, observation) : -1;

    if (j >= 0) {
        Belief updated;
        if (!bayes_update(b, model, j, &updated))
            r.zero_evidence = true;  // evidence rules out every hypothesis
        else
            r.belief = std::move(updated);
        return r;
    }

    if (!near_candidate) {
        // A genuinely new proposal the model did not anticipate: promote it
        // to a candidate, funding it from the none-of-these mass.
        const double drawn = b.residual_other / 2.0;
        r.belief.candidates.push_back(observation);
        r.belief.probs.push_back(drawn);
        r.belief.residual_other -= drawn;
        r.inserted = true;
        return r;
    }

    // The observation restates a known candidate but the model cannot
    // score it; surface why rather than silently skipping the update.
    if (!model.enumerable())
        fail("NonEnumerable", "model lacks a discrete observation space");
    if (!model_valid(model, b.candidates.size()))
        fail("ModelMismatch", "observation model does not fit the belief");
    r.zero_evidence = true;
    return r;
}

// ---------------------------------------------------------------------------
// expected information gain

double eig_exact(const Belief& b, const ObservationModel& model) {
    if (!belief_valid(b)) fail("InvalidBelief", "belief is not a simplex");
    if (!model.enumerable())
        fail("NonEnumerable", "exact gain needs a discrete observation space");
    if (!model_valid(model, b.candidates.size()))
        fail("ModelMismatch", "observation model does not fit the belief");

    const size_t n = b.candidates.size();
    double expected_post = 0.0;
    for (size_t j = 0; j < model.outcomes.size(); ++j) {
        double pz = b.residual_other * model.likelihood[n][j];
        for (size_t i = 0; i < n; ++i)
            pz += b.probs[i] * model.likelihood[i][j];
        if (pz <= 0.0) continue;
        Belief post;
        bayes_update(b, model, int(j), &post);
        expected_post += pz * entropy(post);
    }
    // Mutual information is nonnegative; clip the float dust.
    return std::max(0.0, entropy(b) - expected_post);
}

double eig_heuristic(const ToolSpec& tool, int prior_calls,
                     ChartType chart_type, double gain_decay) {
    if (!(gain_decay > 0.0 && gain_decay <= 1.0))
        fail("InvalidConfig", "gain_decay must lie in (0, 1]");
    if (!tool.compatible.empty()) {
        bool applies = false;
        for (ChartType t : tool.compatible)
            if (t == chart_type) { applies = true; break; }
        if (!applies) return 0.0;
    }
    const int calls = std::max(0, prior_calls);
    return tool.base_gain * std::pow(gain_decay, double(calls));
}

// ---------------------------------------------------------------------------
// policy

namespace {

void apply_config_key(SchedulerConfig* cfg, const std::string& key,
                      double value, bool integral) {
    if (!std::isfinite(value))
        fail("InvalidConfig", "non-finite value for " + key);
    if (key == "lambda") {
        cfg->lambda = value;
    } else if (key == "budget") {
        cfg->budget = value;
    } else if (key == "eta") {
        cfg->eta = value;
    } else if (key == "gain_decay") {
        cfg->gain_decay = value;
    } else if (key == "max_rounds") {
        if (!integral)
            fail("InvalidConfig", "max_rounds must be an integer");
        cfg->max_rounds = int(value);
    } else {
        fail("InvalidConfig", "unknown config key: " + key);
    }
}

void validate_config(const SchedulerConfig& cfg) {
    if (cfg.lambda < 0.0) fail("InvalidConfig", "lambda must be nonnegative");
    if (cfg.budget < 0.0) fail("InvalidConfig", "budget must be nonnegative");
    if (!std::isfinite(cfg.eta)) fail("InvalidConfig", "eta must be finite");
    if (!(cfg.gain_decay > 0.0 && cfg.gain_decay <= 1.0))
        fail("InvalidConfig", "gain_decay must lie in (0, 1]");
    if (cfg.max_rounds < 1) fail("InvalidConfig", "max_rounds must be at least 1");
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

SchedulerConfig parse_config(const std::string& text) {
    SchedulerConfig cfg;
    const std::string body = trim(text);
    if (body.empty()) return cfg;

    if (body.front() == '{') {
        json j;
        try {
            j = json::parse(body);
        } catch (const json::exception& e) {
            fail("InvalidConfig", std::string("bad config JSON: ") + e.what());
        }
        if (!j.is_object()) fail("InvalidConfig", "config must be an object");
        for (const auto& [key, value] : j.items()) {
            if (!value.is_number())
                fail("InvalidConfig", "non-numeric value for " + key);
            apply_config_key(&cfg, key, value.get<double>(),
                             value.is_number_integer());
        }
        validate_config(cfg);
        return cfg;
    }

    size_t pos = 0;
    while (pos <= body.size()) {
        const size_t nl = body.find('\n', pos);
        const std::string line =
            trim(body.substr(pos, nl == std::string::npos ? nl : nl - pos));
        pos = nl == std::string::npos ? body.size() + 1 : nl + 1;
        if (line.empty() || line.front() == '#') continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail("InvalidConfig", "expected key=value, got: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string raw = trim(line.substr(eq + 1));
        char* end = nullptr;
        const double value = std::strtod(raw.c_str(), &end);
        if (raw.empty() || end != raw.c_str() + raw.size())
            fail("InvalidConfig", "bad numeric value for " + key);
        const bool integral = raw.find_first_of(".eE") == std::string::npos;
        apply_config_key(&cfg, key, value, integral);
    }
    validate_config(cfg);
    return cfg;
}

SchedulerConfig load_config(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    return parse_config(std::string(bytes.begin(), bytes.end()));
}

Action select_action(const std::vector<double>& scores,
                     const std::vector<double>& costs,
                     const SchedulerConfig& config) {
    if (scores.size() != costs.size())
        fail("ArityMismatch", "score and cost arrays must align");
    Action best;
    best.net_gain = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < scores.size(); ++i) {
        const double net = scores[i] - config.lambda * costs[i];
        if (net > best.net_gain) {
            best.net_gain = net;
            best.tool = int(i);
        }
    }
    if (best.tool < 0 || best.net_gain <= config.eta) {
        best.finish = true;
        best.tool = -1;
    }
    return best;
}

bool should_stop(double best_net_gain, double cumulative_cost,
                 const SchedulerConfig& config, int round) {
    return best_net_gain <= config.eta || cumulative_cost >= config.budget ||
           round >= config.max_rounds;
}

}  // namespace chartagent::scheduler
