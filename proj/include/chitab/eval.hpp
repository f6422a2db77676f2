#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chitab/qa.hpp"

namespace chitab {

struct ResponseRecord {
    std::string question_id;
    std::string group;  // model or cohort name
    int run_index = 0;
    PromptStyle prompt_style = PromptStyle::Base;
    std::string raw_text;
    std::optional<std::int64_t> parsed_answer;
    bool failed = false;  // transport failure marker; excluded from scoring by default
};

std::string response_to_jsonl(const ResponseRecord& record);
ResponseRecord response_from_jsonl(std::string_view line);

// Strict: the trimmed text is exactly one base-10 integer. Lenient: the
// first standalone integer token. No integer -> nullopt.
std::optional<std::int64_t> parse_answer(std::string_view raw_text, bool strict);

struct ScoreReport {
    std::string group;
    double shqa_accuracy = 0.0;    // 0..100
    double vlqa_accuracy = 0.0;
    double overall_accuracy = 0.0; // n-weighted mean of the per-type values
    std::int64_t shqa_n = 0;
    std::int64_t vlqa_n = 0;
};

// A question's credit is the fraction of its runs answered correctly;
// accuracy is 100 * mean credit. Responses naming unknown question_ids
// raise an error listing the offenders.
std::vector<ScoreReport> score(const std::vector<ResponseRecord>& responses,
                               const std::vector<QARecord>& gold, bool strict);

struct StabilityReport {
    std::string group;
    std::int64_t n_questions = 0;
    std::int64_t unstable_questions = 0;
    double stability_pct = 0.0;
    double mean_accuracy = 0.0;
};

// A question is stable iff all parsed answers (absent counted as a value of
// its own) are identical across runs_expected repetitions.
StabilityReport stability(const std::vector<ResponseRecord>& responses,
                          const std::vector<QARecord>& gold, int runs_expected = 29,
                          bool strict = false);

// table_id -> fraction of (question, group) pairs answered correctly.
std::map<std::string, double> per_table_solve_rate(
    const std::vector<ResponseRecord>& responses, const std::vector<QARecord>& gold,
    bool strict = false);

std::string solve_rates_to_csv(const std::map<std::string, double>& rates);

// Per question type, n_per_type questions with no two sharing a table
// within that type; deterministic under the seed; sorted output.
std::vector<std::string> sample_tuning_subset(const std::vector<QARecord>& validation_records,
                                              int n_per_type, std::uint64_t seed);

}  // namespace chitab
