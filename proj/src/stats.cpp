#include "chitab/stats.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

namespace chitab {

void RunningStats::add(double x) {
    n_++;
    double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
}

void RunningStats::merge(const RunningStats& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
        *this = other;
        return;
    }
    double delta = other.mean_ - mean_;
    std::int64_t n = n_ + other.n_;
    m2_ += other.m2_ +
           delta * delta * static_cast<double>(n_) * static_cast<double>(other.n_) /
               static_cast<double>(n);
    mean_ += delta * static_cast<double>(other.n_) / static_cast<double>(n);
    n_ = n;
}

double RunningStats::population_std() const {
    if (n_ == 0) return 0.0;
    return std::sqrt(std::max(0.0, m2_ / static_cast<double>(n_)));
}

std::vector<SplitStats> coverage(const std::map<Split, FilterCounts>& counts) {
    std::vector<SplitStats> out;
    for (const auto& [split, c] : counts) {
        SplitStats s;
        s.split = split;
        s.tables_in = c.tables_in;
        s.tables_kept = c.tables_kept;
        s.coverage_pct =
            c.tables_in > 0
                ? 100.0 * static_cast<double>(c.tables_kept) / static_cast<double>(c.tables_in)
                : 0.0;
        out.push_back(s);
    }
    return out;
}

void AnswerStatsAccumulator::add(const QARecord& r) {
    (r.qtype == QuestionType::SHQA ? shqa_ : vlqa_)[r.split].add(r.answer);
}

void AnswerStatsAccumulator::merge(const AnswerStatsAccumulator& other) {
    for (const auto& [s, acc] : other.shqa_) shqa_[s].merge(acc);
    for (const auto& [s, acc] : other.vlqa_) vlqa_[s].merge(acc);
}

void AnswerStatsAccumulator::fill(std::vector<SplitStats>& stats) const {
    for (auto& s : stats) {
        std::int64_t q = 0;
        if (auto it = shqa_.find(s.split); it != shqa_.end() && it->second.count() > 0) {
            s.shqa_mean = it->second.mean();
            s.shqa_std = it->second.population_std();
            q += it->second.count();
        }
        if (auto it = vlqa_.find(s.split); it != vlqa_.end() && it->second.count() > 0) {
            s.vlqa_mean = it->second.mean();
            s.vlqa_std = it->second.population_std();
            q += it->second.count();
        }
        s.questions = q;
    }
}

std::vector<SplitStats> AnswerStatsAccumulator::to_stats() const {
    std::vector<SplitStats> out;
    for (Split split : {Split::Train, Split::Valid, Split::Test}) {
        if (shqa_.count(split) == 0 && vlqa_.count(split) == 0) continue;
        SplitStats s;
        s.split = split;
        out.push_back(s);
    }
    fill(out);
    return out;
}

void QuestionHistogram::add(const QARecord& r) { per_table_[r.table_id]++; }

void QuestionHistogram::merge(const QuestionHistogram& other) {
    for (const auto& [id, n] : other.per_table_) per_table_[id] += n;
}

std::map<std::int64_t, std::int64_t> QuestionHistogram::buckets() const {
    std::map<std::int64_t, std::int64_t> out;
    for (const auto& [id, n] : per_table_) out[n]++;
    return out;
}

std::string QuestionHistogram::to_csv() const {
    std::ostringstream os;
    os << "questions_per_table,tables\n";
    for (const auto& [bucket, count] : buckets()) {
        os << bucket << ',' << count << '\n';
    }
    return os.str();
}

namespace {

std::string fmt2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string plus_minus(std::optional<double> mean, std::optional<double> std) {
    if (!mean || !std) return "-";
    return fmt2(*mean) + "+-" + fmt2(*std);
}

}  // namespace

std::string stats_to_text(const std::vector<SplitStats>& stats) {
    std::ostringstream os;
    os << "split   tables_in  tables_kept  coverage%  questions  SHQA         VLQA\n";
    for (const auto& s : stats) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%-7s %10lld %12lld %10s %10lld  %-12s %-12s\n",
                      split_name(s.split).c_str(), static_cast<long long>(s.tables_in),
                      static_cast<long long>(s.tables_kept), fmt2(s.coverage_pct).c_str(),
                      static_cast<long long>(s.questions),
                      plus_minus(s.shqa_mean, s.shqa_std).c_str(),
                      plus_minus(s.vlqa_mean, s.vlqa_std).c_str());
        os << buf;
    }
    return os.str();
}

std::string stats_to_json(const std::vector<SplitStats>& stats) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& s : stats) {
        nlohmann::ordered_json sj;
        sj["split"] = split_name(s.split);
        sj["tables_in"] = s.tables_in;
        sj["tables_kept"] = s.tables_kept;
        sj["coverage_pct"] = s.coverage_pct;
        sj["questions"] = s.questions;
        auto put = [&](const char* key, const std::optional<double>& v) {
            if (v) {
                sj[key] = *v;
            } else {
                sj[key] = nullptr;
            }
        };
        put("shqa_mean", s.shqa_mean);
        put("shqa_std", s.shqa_std);
        put("vlqa_mean", s.vlqa_mean);
        put("vlqa_std", s.vlqa_std);
        j.push_back(std::move(sj));
    }
    return j.dump(2);
}

}  // namespace chitab
