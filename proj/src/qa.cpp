#include "chitab/qa.hpp"

#include <cctype>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace chitab {

std::string question_type_name(QuestionType t) {
    return t == QuestionType::SHQA ? "SHQA" : "VLQA";
}

std::optional<QuestionType> question_type_from_name(std::string_view name) {
    if (name == "SHQA") return QuestionType::SHQA;
    if (name == "VLQA") return QuestionType::VLQA;
    return std::nullopt;
}

std::string prompt_style_name(PromptStyle s) {
    switch (s) {
        case PromptStyle::Base: return "base";
        case PromptStyle::WithExplanation: return "with_explanation";
        case PromptStyle::Uppercase: return "uppercase";
        case PromptStyle::Polite: return "polite";
        case PromptStyle::GptShort: return "gpt_short";
        case PromptStyle::GptLong: return "gpt_long";
        case PromptStyle::Motivation: return "motivation";
        case PromptStyle::Reward: return "reward";
    }
    return "?";
}

std::optional<PromptStyle> prompt_style_from_name(std::string_view name) {
    for (PromptStyle s : kAllPromptStyles) {
        if (prompt_style_name(s) == name) return s;
    }
    return std::nullopt;
}

int vlqa_answer(const HeaderNode& node) {
    return static_cast<int>(node.value_columns.size());
}

int shqa_answer(const HeaderForest& forest, int node_index, const std::string& table_id) {
    const HeaderNode& h = forest.nodes.at(node_index);
    int n = static_cast<int>(h.value_columns.size()) + static_cast<int>(h.children.size());
    for (int c : h.children) {
        n -= static_cast<int>(forest.nodes.at(c).value_columns.size());
    }
    if (n < 0) {
        throw std::runtime_error("corrupt forest in table " + table_id +
                                 ": negative sub-heading count at node " +
                                 std::to_string(node_index));
    }
    return n;
}

namespace {

// `{}` marks where the quoted heading goes; the heading itself is inserted
// verbatim, so the uppercase style shouts only the template.
const char* base_template(QuestionType t) {
    return t == QuestionType::SHQA
               ? "How many immediate sub-headings does the heading '{}' have?"
               : "How many value-level columns fall under the heading '{}'?";
}

std::string fill(std::string_view tmpl, const std::string& heading) {
    std::size_t pos = tmpl.find("{}");
    std::string out(tmpl.substr(0, pos));
    out += heading;
    out += tmpl.substr(pos + 2);
    return out;
}

std::string upper_except_placeholder(std::string_view tmpl) {
    std::string out(tmpl);
    std::size_t pos = out.find("{}");
    for (std::size_t i = 0; i < out.size(); i++) {
        if (i == pos || i == pos + 1) continue;
        out[i] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[i])));
    }
    return out;
}

std::string lower_first(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
    return s;
}

}  // namespace

std::string render_prompt(PromptStyle style, QuestionType qtype,
                          const std::string& heading_text) {
    std::string base = base_template(qtype);
    switch (style) {
        case PromptStyle::Base:
            return fill(base, heading_text);
        case PromptStyle::WithExplanation: {
            std::string expl =
                qtype == QuestionType::SHQA
                    ? " An immediate sub-heading is one directly below the heading in "
                      "reading order."
                    : " A value-level column is a bottom-level column that holds data "
                      "values.";
            return fill(base, heading_text) + expl;
        }
        case PromptStyle::Uppercase:
            return fill(upper_except_placeholder(base), heading_text);
        case PromptStyle::Polite:
            return "Would you be so kind as to let me know " +
                   fill(lower_first(base), heading_text) + " Thank you so much for your time!";
        case PromptStyle::GptShort:
            return fill(qtype == QuestionType::SHQA
                            ? "What is the count of direct sub-headings under the heading "
                              "'{}'?"
                            : "What is the count of value-level columns under the heading "
                              "'{}'?",
                        heading_text);
        case PromptStyle::GptLong:
            return fill(qtype == QuestionType::SHQA
                            ? "Considering the hierarchical structure of the table, "
                              "determine how many immediate child headings are associated "
                              "with '{}'."
                            : "Considering the hierarchical structure of the table, "
                              "determine how many value-level columns are associated with "
                              "'{}'.",
                        heading_text);
        case PromptStyle::Motivation:
            return "I know this is a very hard task but you can do it! Don't give up now! " +
                   fill(base, heading_text);
        case PromptStyle::Reward:
            return "I will give you 1000 euros if you help me with this task. " +
                   fill(base, heading_text);
    }
    throw std::logic_error("unknown prompt style");
}

std::vector<QARecord> generate_records(const EnrichedTable& table,
                                       const HeaderForest& forest) {
    std::vector<QARecord> out;
    out.reserve(forest.nodes.size() * 2);
    for (std::size_t i = 0; i < forest.nodes.size(); i++) {
        const HeaderNode& node = forest.nodes[i];
        for (QuestionType qtype : {QuestionType::SHQA, QuestionType::VLQA}) {
            QARecord r;
            r.table_id = table.table_id;
            r.split = table.split;
            r.image_name = table.image_name;
            r.heading_text = node.cell.text;
            r.heading_bbox = node.cell.box;
            r.qtype = qtype;
            r.question_id = table.table_id + "#n" + std::to_string(i) + "#" +
                            (qtype == QuestionType::SHQA ? "SH" : "VL");
            r.answer = qtype == QuestionType::SHQA
                           ? shqa_answer(forest, static_cast<int>(i), table.table_id)
                           : vlqa_answer(node);
            for (PromptStyle s : kAllPromptStyles) {
                r.prompts.emplace(s, render_prompt(s, qtype, node.cell.text));
            }
            out.push_back(std::move(r));
        }
    }
    return out;
}

std::string record_to_jsonl(const QARecord& r) {
    nlohmann::ordered_json j;
    j["question_id"] = r.question_id;
    j["table_id"] = r.table_id;
    j["split"] = split_name(r.split);
    j["image_name"] = r.image_name;
    j["heading_text"] = r.heading_text;
    j["heading_bbox"] = {r.heading_bbox.x_min, r.heading_bbox.y_min, r.heading_bbox.x_max,
                         r.heading_bbox.y_max};
    j["qtype"] = question_type_name(r.qtype);
    j["answer"] = r.answer;
    nlohmann::ordered_json prompts;
    for (PromptStyle s : kAllPromptStyles) {
        prompts[prompt_style_name(s)] = r.prompts.at(s);
    }
    j["prompts"] = std::move(prompts);
    return j.dump();
}

QARecord record_from_jsonl(std::string_view line) {
    nlohmann::json j = nlohmann::json::parse(line);
    QARecord r;
    r.question_id = j.at("question_id").get<std::string>();
    r.table_id = j.at("table_id").get<std::string>();
    auto split = split_from_name(j.at("split").get<std::string>());
    if (!split) throw std::runtime_error("bad split in record " + r.question_id);
    r.split = *split;
    r.image_name = j.at("image_name").get<std::string>();
    r.heading_text = j.at("heading_text").get<std::string>();
    const auto& bb = j.at("heading_bbox");
    r.heading_bbox = {bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(),
                      bb[3].get<double>()};
    auto qtype = question_type_from_name(j.at("qtype").get<std::string>());
    if (!qtype) throw std::runtime_error("bad qtype in record " + r.question_id);
    r.qtype = *qtype;
    r.answer = j.at("answer").get<int>();
    for (const auto& [k, v] : j.at("prompts").items()) {
        auto style = prompt_style_from_name(k);
        if (!style) throw std::runtime_error("bad prompt style in record " + r.question_id);
        r.prompts.emplace(*style, v.get<std::string>());
    }
    return r;
}

}  // namespace chitab
