#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "chitab/filter.hpp"
#include "chitab/hierarchy.hpp"
#include "chitab/qa.hpp"
#include "chitab/stats.hpp"

namespace chitab {

struct RunConfig {
    std::filesystem::path structure_dir;
    std::filesystem::path words_dir;
    std::filesystem::path out_dir;
    // Optional explicit split membership, one table id per line.
    std::map<Split, std::filesystem::path> split_lists;
    FilterConfig filter;
    std::uint64_t seed = 0;
    int workers = 1;
    bool strict_parsing = false;
};

std::string config_hash(const RunConfig& cfg);

struct TablePaths {
    std::string table_id;
    Split split = Split::Train;
    std::filesystem::path structure_file;
    std::filesystem::path words_file;  // may be empty when missing
};

// Pairs structure and word files by shared id stem. Split membership comes
// from train/valid/test subdirectories, or from split-list files when the
// layout is flat.
std::vector<TablePaths> discover_corpus(const RunConfig& cfg);

struct TableResult {
    std::string table_id;
    Split split = Split::Train;
    bool ok = false;        // annotations parsed
    bool complex = false;   // survived the filter
    std::string error;      // set when !ok
    Diagnostics diag;
    std::vector<QARecord> records;  // filled when complex
    std::string forest_json;
};

TableResult process_table(const TablePaths& paths, const FilterConfig& cfg);

// Fan-out over tables with `workers` threads; results come back in input
// order, so downstream output is independent of scheduling.
std::vector<TableResult> run_corpus(const std::vector<TablePaths>& tables,
                                    const FilterConfig& cfg, int workers,
                                    const std::function<void(std::size_t, std::size_t)>& progress);

struct BuildOutput {
    std::map<Split, FilterCounts> counts;
    std::int64_t total_questions = 0;
};

// `build`: benchmark JSONL + forests per split, diagnostics sidecar, and a
// manifest carrying the config hash and per-split counts.
BuildOutput write_build_outputs(const RunConfig& cfg, const std::vector<TableResult>& results);

// `filter`: kept-table id lists per split plus the diagnostics sidecar.
BuildOutput write_filter_outputs(const RunConfig& cfg, const std::vector<TableResult>& results);

std::vector<QARecord> load_records_jsonl(const std::filesystem::path& file);

inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace chitab
