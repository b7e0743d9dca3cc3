#pragma once

#include <string>
#include <vector>

#include "chartagent/common.hpp"
#include "chartagent/scheduler.hpp"

namespace chartagent::qtypes {

// The three supported task families.
enum class QuestionTask { number_qa, value_compare, chart_to_table };

std::string to_string(QuestionTask t);
QuestionTask question_task_from_string(const std::string& s);

struct Question {
    std::string raw;
    QuestionTask task = QuestionTask::number_qa;
    std::vector<std::string> referents;  // extracted category/series mentions
    bool unclassified = false;  // no rule matched; defaulted to number_qa
};

// Deterministic rule-based classification and referent extraction. Total:
// every string (even empty or gibberish) yields a Question; inputs no rule
// recognizes come back flagged as unclassified.
Question parse_question(const std::string& text);

enum class CandidateKind { numeric, ordering, table };

struct CandidateSet {
    CandidateKind kind = CandidateKind::numeric;
    std::vector<scheduler::AnswerValue> values;
};

struct SeededBelief {
    CandidateSet candidates;
    scheduler::Belief prior;
};

// Builds the answer-candidate space and its prior. Compare questions start
// uniform over the three orderings; numeric questions start with all mass
// on residual_other so that candidates come only from tool readings; table
// questions track a single evolving table candidate.
SeededBelief seed_candidates(const Question& question, ChartType chart_type);

}  // namespace chartagent::qtypes
