#include "chitab/eval.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <random>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace chitab {

std::string response_to_jsonl(const ResponseRecord& r) {
    nlohmann::ordered_json j;
    j["question_id"] = r.question_id;
    j["group"] = r.group;
    j["run_index"] = r.run_index;
    j["prompt_style"] = prompt_style_name(r.prompt_style);
    j["raw_text"] = r.raw_text;
    if (r.parsed_answer) {
        j["parsed_answer"] = *r.parsed_answer;
    } else {
        j["parsed_answer"] = nullptr;
    }
    if (r.failed) j["failed"] = true;
    return j.dump();
}

ResponseRecord response_from_jsonl(std::string_view line) {
    nlohmann::json j = nlohmann::json::parse(line);
    ResponseRecord r;
    r.question_id = j.at("question_id").get<std::string>();
    r.group = j.at("group").get<std::string>();
    r.run_index = j.at("run_index").get<int>();
    auto style = prompt_style_from_name(j.at("prompt_style").get<std::string>());
    if (!style) throw std::runtime_error("bad prompt_style in response " + r.question_id);
    r.prompt_style = *style;
    r.raw_text = j.at("raw_text").get<std::string>();
    if (j.contains("parsed_answer") && !j["parsed_answer"].is_null()) {
        r.parsed_answer = j["parsed_answer"].get<std::int64_t>();
    }
    if (j.contains("failed")) r.failed = j["failed"].get<bool>();
    return r;
}

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::string_view trim_view(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

std::optional<std::int64_t> parse_answer(std::string_view raw_text, bool strict) {
    if (strict) {
        std::string_view t = trim_view(raw_text);
        if (t.empty()) return std::nullopt;
        std::size_t start = t.front() == '-' ? 1 : 0;
        if (start == t.size()) return std::nullopt;
        for (std::size_t i = start; i < t.size(); i++) {
            if (!is_digit(t[i])) return std::nullopt;
        }
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc{} || p != t.data() + t.size()) return std::nullopt;
        return v;
    }

    // Lenient: first maximal digit run not glued to letters or digits and
    // not part of a decimal fraction.
    for (std::size_t i = 0; i < raw_text.size(); i++) {
        if (!is_digit(raw_text[i])) continue;
        std::size_t b = i;
        std::size_t e = i;
        while (e < raw_text.size() && is_digit(raw_text[e])) e++;
        i = e - 1;

        bool neg = false;
        std::size_t before = b;
        if (before > 0 && raw_text[before - 1] == '-' &&
            (before < 2 || !is_alnum(raw_text[before - 2]))) {
            neg = true;
            before--;
        }
        if (before > 0 && is_alnum(raw_text[before - 1])) continue;
        if (b >= 2 && raw_text[b - 1] == '.' && is_digit(raw_text[b - 2])) continue;
        if (e < raw_text.size() && is_alnum(raw_text[e])) continue;
        if (e + 1 < raw_text.size() && raw_text[e] == '.' && is_digit(raw_text[e + 1])) continue;

        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(raw_text.data() + b, raw_text.data() + e, v);
        if (ec != std::errc{}) continue;  // overflow: keep scanning
        return neg ? -v : v;
    }
    return std::nullopt;
}

namespace {

struct GoldIndex {
    std::map<std::string, const QARecord*> by_id;

    explicit GoldIndex(const std::vector<QARecord>& gold) {
        for (const auto& g : gold) by_id.emplace(g.question_id, &g);
    }

    const QARecord& lookup(const std::string& question_id) const {
        auto it = by_id.find(question_id);
        if (it == by_id.end()) {
            throw std::runtime_error("response references unknown question_id: " + question_id);
        }
        return *it->second;
    }
};

void check_orphans(const std::vector<ResponseRecord>& responses, const GoldIndex& gold) {
    std::set<std::string> orphans;
    for (const auto& r : responses) {
        if (gold.by_id.find(r.question_id) == gold.by_id.end()) orphans.insert(r.question_id);
    }
    if (!orphans.empty()) {
        std::string msg = "responses reference unknown question_ids:";
        for (const auto& id : orphans) msg += " " + id;
        throw std::runtime_error(msg);
    }
}

struct Tally {
    std::int64_t correct = 0;
    std::int64_t total = 0;
    double credit() const {
        return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    }
};

}  // namespace

std::vector<ScoreReport> score(const std::vector<ResponseRecord>& responses,
                               const std::vector<QARecord>& gold, bool strict) {
    GoldIndex index(gold);
    check_orphans(responses, index);

    // group -> question -> run tally
    std::map<std::string, std::map<std::string, Tally>> tallies;
    for (const auto& r : responses) {
        const QARecord& g = index.lookup(r.question_id);
        auto parsed = parse_answer(r.raw_text, strict);
        Tally& t = tallies[r.group][r.question_id];
        t.total++;
        if (parsed && *parsed == g.answer) t.correct++;
    }

    std::vector<ScoreReport> out;
    for (const auto& [group, questions] : tallies) {
        ScoreReport rep;
        rep.group = group;
        double sh_sum = 0.0, vl_sum = 0.0;
        for (const auto& [qid, tally] : questions) {
            const QARecord& g = index.lookup(qid);
            if (g.qtype == QuestionType::SHQA) {
                rep.shqa_n++;
                sh_sum += tally.credit();
            } else {
                rep.vlqa_n++;
                vl_sum += tally.credit();
            }
        }
        rep.shqa_accuracy = rep.shqa_n > 0 ? 100.0 * sh_sum / static_cast<double>(rep.shqa_n) : 0.0;
        rep.vlqa_accuracy = rep.vlqa_n > 0 ? 100.0 * vl_sum / static_cast<double>(rep.vlqa_n) : 0.0;
        std::int64_t n = rep.shqa_n + rep.vlqa_n;
        rep.overall_accuracy = n > 0 ? 100.0 * (sh_sum + vl_sum) / static_cast<double>(n) : 0.0;
        out.push_back(std::move(rep));
    }
    return out;
}

StabilityReport stability(const std::vector<ResponseRecord>& responses,
                          const std::vector<QARecord>& gold, int runs_expected, bool strict) {
    GoldIndex index(gold);
    check_orphans(responses, index);

    std::set<std::string> groups;
    for (const auto& r : responses) groups.insert(r.group);
    if (groups.size() != 1) {
        throw std::runtime_error("stability expects responses from exactly one group, got " +
                                 std::to_string(groups.size()));
    }

    std::map<std::string, std::vector<std::optional<std::int64_t>>> answers;
    Tally overall;
    for (const auto& r : responses) {
        auto parsed = parse_answer(r.raw_text, strict);
        answers[r.question_id].push_back(parsed);
        overall.total++;
        if (parsed && *parsed == index.lookup(r.question_id).answer) overall.correct++;
    }

    StabilityReport rep;
    rep.group = *groups.begin();
    for (const auto& [qid, runs] : answers) {
        if (static_cast<int>(runs.size()) != runs_expected) {
            throw std::runtime_error("question " + qid + " has " +
                                     std::to_string(runs.size()) + " runs, expected " +
                                     std::to_string(runs_expected));
        }
        rep.n_questions++;
        bool stable = std::all_of(runs.begin(), runs.end(),
                                  [&](const auto& a) { return a == runs.front(); });
        if (!stable) rep.unstable_questions++;
    }
    rep.stability_pct =
        rep.n_questions > 0
            ? 100.0 * static_cast<double>(rep.n_questions - rep.unstable_questions) /
                  static_cast<double>(rep.n_questions)
            : 0.0;
    rep.mean_accuracy = 100.0 * overall.credit();
    return rep;
}

std::map<std::string, double> per_table_solve_rate(
    const std::vector<ResponseRecord>& responses, const std::vector<QARecord>& gold,
    bool strict) {
    GoldIndex index(gold);
    check_orphans(responses, index);

    // (question, group) pair tallies, then averaged within each table.
    std::map<std::pair<std::string, std::string>, Tally> pairs;
    for (const auto& r : responses) {
        auto parsed = parse_answer(r.raw_text, strict);
        Tally& t = pairs[{r.question_id, r.group}];
        t.total++;
        if (parsed && *parsed == index.lookup(r.question_id).answer) t.correct++;
    }

    std::map<std::string, std::pair<double, std::int64_t>> per_table;
    for (const auto& [key, tally] : pairs) {
        const QARecord& g = index.lookup(key.first);
        auto& [sum, n] = per_table[g.table_id];
        sum += tally.credit();
        n++;
    }
    std::map<std::string, double> out;
    for (const auto& [table, agg] : per_table) {
        out[table] = agg.first / static_cast<double>(agg.second);
    }
    return out;
}

std::string solve_rates_to_csv(const std::map<std::string, double>& rates) {
    std::string out = "table_id,solve_rate\n";
    char buf[64];
    for (const auto& [table, rate] : rates) {
        std::snprintf(buf, sizeof(buf), "%.6f", rate);
        out += table;
        out += ',';
        out += buf;
        out += '\n';
    }
    return out;
}

std::vector<std::string> sample_tuning_subset(const std::vector<QARecord>& validation_records,
                                              int n_per_type, std::uint64_t seed) {
    std::vector<std::string> out;
    for (QuestionType qtype : {QuestionType::SHQA, QuestionType::VLQA}) {
        std::vector<const QARecord*> candidates;
        for (const auto& r : validation_records) {
            if (r.qtype == qtype) candidates.push_back(&r);
        }
        // Stable starting order, then a seeded Fisher-Yates, so the draw is
        // independent of input order and of the platform's std library.
        std::sort(candidates.begin(), candidates.end(),
                  [](const QARecord* a, const QARecord* b) {
                      return a->question_id < b->question_id;
                  });
        std::mt19937_64 rng(seed + (qtype == QuestionType::SHQA ? 0 : 1));
        for (std::size_t i = candidates.size(); i > 1; i--) {
            std::size_t j = rng() % i;
            std::swap(candidates[i - 1], candidates[j]);
        }
        std::set<std::string> used_tables;
        int picked = 0;
        for (const QARecord* r : candidates) {
            if (picked == n_per_type) break;
            if (used_tables.count(r->table_id)) continue;
            used_tables.insert(r->table_id);
            out.push_back(r->question_id);
            picked++;
        }
        if (picked < n_per_type) {
            throw std::runtime_error("not enough distinct tables for " +
                                     question_type_name(qtype) + ": requested " +
                                     std::to_string(n_per_type) + ", achievable maximum is " +
                                     std::to_string(picked));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace chitab
