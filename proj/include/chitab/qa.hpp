#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "chitab/hierarchy.hpp"

namespace chitab {

enum class QuestionType { SHQA, VLQA };

std::string question_type_name(QuestionType t);          // "SHQA" / "VLQA"
std::optional<QuestionType> question_type_from_name(std::string_view name);

enum class PromptStyle {
    Base,
    WithExplanation,
    Uppercase,
    Polite,
    GptShort,
    GptLong,
    Motivation,
    Reward,
};

inline constexpr std::array<PromptStyle, 8> kAllPromptStyles = {
    PromptStyle::Base,     PromptStyle::WithExplanation, PromptStyle::Uppercase,
    PromptStyle::Polite,   PromptStyle::GptShort,        PromptStyle::GptLong,
    PromptStyle::Motivation, PromptStyle::Reward,
};

std::string prompt_style_name(PromptStyle s);
std::optional<PromptStyle> prompt_style_from_name(std::string_view name);

// Count of value-level columns under the heading.
int vlqa_answer(const HeaderNode& node);

// Direct sub-headings: |I(h)| + |C(h)| - sum_c |I(c)|. A negative result
// means the forest violates containment and is reported as corrupt.
int shqa_answer(const HeaderForest& forest, int node_index, const std::string& table_id);

std::string render_prompt(PromptStyle style, QuestionType qtype,
                          const std::string& heading_text);

struct QARecord {
    std::string question_id;  // "<table_id>#n<node_idx>#<SH|VL>"
    std::string table_id;
    Split split = Split::Train;
    std::string image_name;
    std::string heading_text;
    BBox heading_bbox;
    QuestionType qtype = QuestionType::SHQA;
    int answer = 0;
    std::map<PromptStyle, std::string> prompts;
};

// Two records (SHQA then VLQA) per forest node, in node reading order.
std::vector<QARecord> generate_records(const EnrichedTable& table, const HeaderForest& forest);

// One record per line, fixed key order.
std::string record_to_jsonl(const QARecord& record);
QARecord record_from_jsonl(std::string_view line);

}  // namespace chitab
