#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chitab/qa.hpp"

namespace chitab {

// Mergeable single-pass mean/std accumulator (Welford / Chan update).
class RunningStats {
public:
    void add(double x);
    void merge(const RunningStats& other);
    std::int64_t count() const { return n_; }
    double mean() const { return mean_; }
    double population_std() const;

private:
    std::int64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct SplitStats {
    Split split = Split::Train;
    std::int64_t tables_in = 0;
    std::int64_t tables_kept = 0;
    double coverage_pct = 0.0;
    std::int64_t questions = 0;
    std::optional<double> shqa_mean, shqa_std, vlqa_mean, vlqa_std;
};

// Filter-pass counters for one split; merged across workers.
struct FilterCounts {
    std::int64_t tables_in = 0;
    std::int64_t tables_kept = 0;
    std::int64_t tables_failed = 0;  // unreadable / corrupt, excluded from kept
};

std::vector<SplitStats> coverage(const std::map<Split, FilterCounts>& counts);

// Per-split, per-type answer statistics over a record stream.
class AnswerStatsAccumulator {
public:
    void add(const QARecord& record);
    void merge(const AnswerStatsAccumulator& other);
    // Fills questions/mean/std fields; splits with no records stay absent.
    void fill(std::vector<SplitStats>& stats) const;
    std::vector<SplitStats> to_stats() const;

private:
    std::map<Split, RunningStats> shqa_, vlqa_;
};

// Per-table question-count histogram, all splits combined.
class QuestionHistogram {
public:
    void add(const QARecord& record);
    void merge(const QuestionHistogram& other);
    std::map<std::int64_t, std::int64_t> buckets() const;  // count -> #tables
    std::string to_csv() const;                            // "bucket,count" rows

private:
    std::map<std::string, std::int64_t> per_table_;
};

std::string stats_to_text(const std::vector<SplitStats>& stats);
std::string stats_to_json(const std::vector<SplitStats>& stats);

}  // namespace chitab
