#include "chartagent/qtypes.hpp"

#include <algorithm>
#include <cctype>

namespace chartagent::qtypes {

std::string to_string(QuestionTask t) {
    switch (t) {
        case QuestionTask::number_qa: return "number_qa";
        case QuestionTask::value_compare: return "value_compare";
        case QuestionTask::chart_to_table: return "chart_to_table";
    }
    fail("UnsupportedTask", "unhandled question task");
}

QuestionTask question_task_from_string(const std::string& s) {
    if (s == "number_qa") return QuestionTask::number_qa;
    if (s == "value_compare") return QuestionTask::value_compare;
    if (s == "chart_to_table") return QuestionTask::chart_to_table;
    fail("UnsupportedTask", "unknown question task: " + s);
}

namespace {

std::string lowercase(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    return out;
}

// Strips whitespace, closing punctuation, surrounding quotes, and a
// leading article from an extracted mention.
std::string clean_referent(std::string s) {
    const auto ws = [](char c) {
        return c == ' ' || c == '\t' || c == '\r' || c == '\n';
    };
    while (!s.empty() && (ws(s.back()) || s.back() == '?' || s.back() == '.' ||
                          s.back() == '!' || s.back() == ','))
        s.pop_back();
    while (!s.empty() && ws(s.front())) s.erase(s.begin());
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        s = s.substr(1, s.size() - 2);
    const std::string low = lowercase(s);
    if (low.rfind("the ", 0) == 0) s = s.substr(4);
    return s;
}

// The label after the last " of ", if any; mentions like "value of A" or
// "Number of Cars Sold of Hyundai" name the subject last.
std::string after_last_of(const std::string& text, const std::string& low) {
    const size_t pos = low.rfind(" of ");
    if (pos == std::string::npos) return "";
    return clean_referent(text.substr(pos + 4));
}

std::vector<std::string> quoted_labels(const std::string& text) {
    std::vector<std::string> out;
    for (char quote : {'"', '\''}) {
        size_t pos = 0;
        while (true) {
            const size_t open = text.find(quote, pos);
            if (open == std::string::npos) break;
            const size_t close = text.find(quote, open + 1);
            if (close == std::string::npos) break;
            if (close > open + 1)
                out.push_back(text.substr(open + 1, close - open - 1));
            pos = close + 1;
        }
        if (!out.empty()) break;  // don't mix quote styles
    }
    return out;
}

const char* kComparatives[] = {"greater", "less", "larger",  "smaller",
                               "higher",  "lower", "more than", "fewer"};

}  // namespace

Question parse_question(const std::string& text) {
    Question q;
    q.raw = text;
    const std::string low = lowercase(text);

    size_t comp_pos = std::string::npos;
    for (const char* word : kComparatives) {
        const size_t pos = low.find(word);
        if (pos != std::string::npos && (comp_pos == std::string::npos || pos < comp_pos))
            comp_pos = pos;
    }

    if (comp_pos != std::string::npos || low.find("compare") != std::string::npos) {
        q.task = QuestionTask::value_compare;
        q.referents = quoted_labels(text);
        if (q.referents.size() < 2 && comp_pos != std::string::npos) {
            // "Is <A> greater than <B>?" — split around the comparative.
            std::string lhs = text.substr(0, comp_pos);
            std::string lhs_low = low.substr(0, comp_pos);
            const size_t is_pos = lhs_low.rfind("is ");
            if (is_pos != std::string::npos) {
                lhs = lhs.substr(is_pos + 3);
                lhs_low = lhs_low.substr(is_pos + 3);
            }
            const std::string lhs_of = after_last_of(lhs, lhs_low);
            const std::string a = lhs_of.empty() ? clean_referent(lhs) : lhs_of;

            std::string b;
            const size_t than_pos = low.find(" than ", comp_pos);
            if (than_pos != std::string::npos) {
                std::string rhs = text.substr(than_pos + 6);
                const std::string rhs_low = low.substr(than_pos + 6);
                const std::string rhs_of = after_last_of(rhs, rhs_low);
                b = rhs_of.empty() ? clean_referent(rhs) : rhs_of;
            }
            q.referents.clear();
            if (!a.empty()) q.referents.push_back(a);
            if (!b.empty()) q.referents.push_back(b);
        }
        return q;
    }

    if (low.find("table") != std::string::npos) {
        q.task = QuestionTask::chart_to_table;
        q.referents = quoted_labels(text);
        return q;
    }

    const bool number_cue = low.find("what is") != std::string::npos ||
                            low.find("how many") != std::string::npos ||
                            low.find("how much") != std::string::npos ||
                            low.find("value") != std::string::npos ||
                            low.find(" of ") != std::string::npos;
    if (number_cue) {
        q.task = QuestionTask::number_qa;
        q.referents = quoted_labels(text);
        if (q.referents.empty()) {
            const std::string subject = after_last_of(text, low);
            if (!subject.empty()) q.referents.push_back(subject);
        }
        return q;
    }

    q.task = QuestionTask::number_qa;
    q.unclassified = true;
    return q;
}

SeededBelief seed_candidates(const Question& question, ChartType) {
    using scheduler::AnswerValue;
    SeededBelief out;
    switch (question.task) {
        case QuestionTask::value_compare: {
            out.candidates.kind = CandidateKind::ordering;
            out.candidates.values = {AnswerValue{std::string("greater")},
                                     AnswerValue{std::string("less")},
                                     AnswerValue{std::string("equal")}};
            out.prior = scheduler::uniform_belief(out.candidates.values, 0.0);
            break;
        }
        case QuestionTask::number_qa: {
            out.candidates.kind = CandidateKind::numeric;
            // No numeric hypotheses until a tool proposes one: all mass on
            // the residual keeps the prior from favoring any value.
            out.prior.residual_other = 1.0;
            break;
        }
        case QuestionTask::chart_to_table: {
            out.candidates.kind = CandidateKind::table;
            out.candidates.values = {AnswerValue{std::string("table")}};
            out.prior = scheduler::uniform_belief(out.candidates.values, 0.0);
            break;
        }
    }
    return out;
}

}  // namespace chartagent::qtypes
