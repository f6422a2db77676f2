#include <doctest.h>

#include <cmath>
#include <random>

#include "chitab/stats.hpp"

using namespace chitab;

namespace {

QARecord rec(const std::string& table, Split split, QuestionType t, int answer) {
    QARecord r;
    r.table_id = table;
    r.split = split;
    r.qtype = t;
    r.answer = answer;
    return r;
}

}  // namespace

TEST_CASE("coverage percentages") {
    std::map<Split, FilterCounts> counts;
    counts[Split::Train] = {758849, 18909, 0};
    counts[Split::Test] = {93834, 2428, 0};
    auto stats = coverage(counts);
    REQUIRE(stats.size() == 2);
    CHECK(stats[0].coverage_pct == doctest::Approx(2.49).epsilon(0.005));
    CHECK(stats[1].coverage_pct == doctest::Approx(2.59).epsilon(0.005));

    counts.clear();
    counts[Split::Valid] = {10, 10, 0};
    CHECK(coverage(counts)[0].coverage_pct == doctest::Approx(100.0));
}

TEST_CASE("answer_stats: constants and hand arithmetic") {
    AnswerStatsAccumulator acc;
    for (int i = 0; i < 5; i++) acc.add(rec("t", Split::Train, QuestionType::SHQA, 5));
    auto stats = acc.to_stats();
    REQUIRE(stats.size() == 1);
    CHECK(*stats[0].shqa_mean == doctest::Approx(5.0));
    CHECK(*stats[0].shqa_std == doctest::Approx(0.0));
    CHECK_FALSE(stats[0].vlqa_mean.has_value());  // absent, not zero

    AnswerStatsAccumulator acc2;
    acc2.add(rec("t", Split::Test, QuestionType::VLQA, 2));
    acc2.add(rec("t", Split::Test, QuestionType::VLQA, 4));
    auto s2 = acc2.to_stats();
    CHECK(*s2[0].vlqa_mean == doctest::Approx(3.0));
    CHECK(*s2[0].vlqa_std == doctest::Approx(1.0));  // population std
}

TEST_CASE("streaming stats match two-pass within 1e-9 relative, merge associatively") {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> d(-1000, 1000);
    const int n = 1000000;
    std::vector<double> values(n);
    for (auto& v : values) v = d(rng);

    RunningStats whole;
    RunningStats part1, part2, part3;
    for (int i = 0; i < n; i++) {
        whole.add(values[i]);
        (i % 3 == 0 ? part1 : i % 3 == 1 ? part2 : part3).add(values[i]);
    }
    RunningStats merged = part1;
    merged.merge(part2);
    merged.merge(part3);

    double mean = 0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0;
    for (double v : values) var += (v - mean) * (v - mean);
    double two_pass_std = std::sqrt(var / n);

    CHECK(whole.mean() == doctest::Approx(mean).epsilon(1e-9));
    CHECK(whole.population_std() == doctest::Approx(two_pass_std).epsilon(1e-9));
    CHECK(merged.count() == whole.count());
    CHECK(merged.mean() == doctest::Approx(whole.mean()).epsilon(1e-12));
    CHECK(merged.population_std() ==
          doctest::Approx(whole.population_std()).epsilon(1e-12));
}

TEST_CASE("questions_per_table_histogram") {
    QuestionHistogram hist;
    auto add_n = [&](const std::string& table, int n) {
        for (int i = 0; i < n; i++) hist.add(rec(table, Split::Train, QuestionType::SHQA, 1));
    };
    add_n("a", 2);
    add_n("b", 2);
    add_n("c", 6);
    auto buckets = hist.buckets();
    CHECK(buckets[2] == 2);
    CHECK(buckets[6] == 1);
    CHECK(hist.to_csv() == "questions_per_table,tables\n2,2\n6,1\n");
}

TEST_CASE("histogram mass equals total question count; equals brute-force group-by") {
    std::mt19937_64 rng(103);
    QuestionHistogram hist;
    std::map<std::string, std::int64_t> brute;
    std::int64_t total = 0;
    for (int t = 0; t < 200; t++) {
        std::string id = "t" + std::to_string(t);
        int n = 2 + static_cast<int>(rng() % 10) * 2;
        for (int i = 0; i < n; i++) hist.add(rec(id, Split::Train, QuestionType::VLQA, 1));
        brute[id] = n;
        total += n;
    }
    std::map<std::int64_t, std::int64_t> expected;
    for (const auto& [id, n] : brute) expected[n]++;
    CHECK(hist.buckets() == expected);

    std::int64_t mass = 0;
    for (const auto& [bucket, count] : hist.buckets()) mass += bucket * count;
    CHECK(mass == total);
}

TEST_CASE("report rendering") {
    std::map<Split, FilterCounts> counts;
    counts[Split::Train] = {100, 10, 0};
    auto stats = coverage(counts);
    AnswerStatsAccumulator acc;
    acc.add(rec("t", Split::Train, QuestionType::SHQA, 3));
    acc.fill(stats);
    std::string text = stats_to_text(stats);
    CHECK(text.find("train") != std::string::npos);
    CHECK(text.find("10.00") != std::string::npos);
    std::string json = stats_to_json(stats);
    CHECK(json.find("\"coverage_pct\": 10.0") != std::string::npos);
}
