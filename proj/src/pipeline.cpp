#include "chitab/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace chitab {

namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::optional<fs::path> find_words_file(const fs::path& words_dir, const std::string& sub,
                                        const std::string& table_id) {
    for (const char* suffix : {"_words.json", ".json"}) {
        for (const fs::path& dir : {words_dir / sub, words_dir}) {
            fs::path candidate = dir / (table_id + suffix);
            if (fs::exists(candidate)) return candidate;
        }
    }
    return std::nullopt;
}

}  // namespace

std::string config_hash(const RunConfig& cfg) {
    std::ostringstream os;
    os << "coverage_threshold=" << cfg.filter.coverage_threshold
       << ";min_covered_columns=" << cfg.filter.min_covered_columns
       << ";containment_eps=" << cfg.filter.containment_eps << ";seed=" << cfg.seed
       << ";strict=" << cfg.strict_parsing;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(os.str())));
    return buf;
}

std::vector<TablePaths> discover_corpus(const RunConfig& cfg) {
    std::map<std::string, Split> id_split;
    for (const auto& [split, list] : cfg.split_lists) {
        std::ifstream in(list);
        if (!in) throw std::runtime_error("cannot open split list: " + list.string());
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
            if (!line.empty()) id_split[line] = split;
        }
    }

    std::vector<TablePaths> out;
    auto scan_dir = [&](const fs::path& dir, const std::string& sub,
                        std::optional<Split> dir_split) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".xml") continue;
            TablePaths t;
            t.table_id = entry.path().stem().string();
            t.structure_file = entry.path();
            if (auto it = id_split.find(t.table_id); it != id_split.end()) {
                t.split = it->second;
            } else if (dir_split) {
                t.split = *dir_split;
            } else {
                t.split = Split::Train;
            }
            if (!cfg.words_dir.empty()) {
                if (auto w = find_words_file(cfg.words_dir, sub, t.table_id)) {
                    t.words_file = *w;
                }
            }
            out.push_back(std::move(t));
        }
    };

    bool found_split_dirs = false;
    for (const auto& [name, split] :
         std::initializer_list<std::pair<const char*, Split>>{{"train", Split::Train},
                                                              {"val", Split::Valid},
                                                              {"valid", Split::Valid},
                                                              {"test", Split::Test}}) {
        fs::path sub = cfg.structure_dir / name;
        if (fs::is_directory(sub)) {
            found_split_dirs = true;
            scan_dir(sub, name, split);
        }
    }
    if (!found_split_dirs) {
        scan_dir(cfg.structure_dir, "", std::nullopt);
    }

    std::sort(out.begin(), out.end(), [](const TablePaths& a, const TablePaths& b) {
        if (a.table_id != b.table_id) return a.table_id < b.table_id;
        return a.split < b.split;
    });
    return out;
}

TableResult process_table(const TablePaths& paths, const FilterConfig& cfg) {
    TableResult res;
    res.table_id = paths.table_id;
    res.split = paths.split;
    try {
        Diagnostics& diag = res.diag;
        std::vector<StructElement> elements = parse_structure(read_file(paths.structure_file), diag);
        std::vector<Word> words;
        if (!paths.words_file.empty()) {
            words = parse_words(read_file(paths.words_file), diag);
        }

        bool has_row = false, has_col = false;
        for (const auto& e : elements) {
            has_row |= e.kind == ElementKind::Row;
            has_col |= e.kind == ElementKind::Column;
        }
        if (!has_row || !has_col) {
            res.error = "table lacks row or column elements";
            return res;
        }

        EnrichedTable table = enrich(paths.table_id, paths.split, paths.table_id + ".jpg",
                                     std::move(elements), std::move(words), diag);
        res.ok = true;

        std::vector<HeaderCell> cells = qualifying_spanners(table, cfg, diag);
        if (cells.size() < 2 || !has_vertical_dependency(cells, cfg.containment_eps)) {
            return res;
        }
        res.complex = true;
        HeaderForest forest = build_forest(std::move(cells), table_columns(table), cfg, diag);
        res.records = generate_records(table, forest);
        res.forest_json = forest_to_json(table.table_id, forest);
    } catch (const std::exception& e) {
        res.ok = false;
        res.complex = false;
        res.records.clear();
        res.error = e.what();
    }
    return res;
}

std::vector<TableResult> run_corpus(
    const std::vector<TablePaths>& tables, const FilterConfig& cfg, int workers,
    const std::function<void(std::size_t, std::size_t)>& progress) {
    std::vector<TableResult> results(tables.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};

    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= tables.size()) break;
            results[i] = process_table(tables[i], cfg);
            std::size_t d = done.fetch_add(1) + 1;
            if (progress && d % 10000 == 0) progress(d, tables.size());
        }
    };

    int n = std::max(1, workers);
    std::vector<std::thread> threads;
    threads.reserve(n);
    for (int t = 0; t < n; t++) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (progress) progress(tables.size(), tables.size());
    return results;
}

namespace {

void write_diagnostics(const fs::path& out_dir, const std::vector<TableResult>& results) {
    std::ofstream out(out_dir / "diagnostics.jsonl");
    for (const auto& r : results) {
        if (r.ok && r.diag.clean() && r.diag.messages.empty()) continue;
        nlohmann::ordered_json j;
        j["table_id"] = r.table_id;
        j["split"] = split_name(r.split);
        j["ok"] = r.ok;
        if (!r.error.empty()) j["error"] = r.error;
        j["skipped_labels"] = r.diag.skipped_labels;
        j["rejected_boxes"] = r.diag.rejected_boxes;
        j["dropped_empty_words"] = r.diag.dropped_empty_words;
        j["orphan_words"] = r.diag.orphan_words;
        j["noncontiguous_coverage"] = r.diag.noncontiguous_coverage;
        j["messages"] = r.diag.messages;
        out << j.dump() << '\n';
    }
}

void write_manifest(const RunConfig& cfg, const BuildOutput& built) {
    nlohmann::ordered_json j;
    j["tool_version"] = kToolVersion;
    j["config_hash"] = config_hash(cfg);
    j["coverage_threshold"] = cfg.filter.coverage_threshold;
    j["min_covered_columns"] = cfg.filter.min_covered_columns;
    j["containment_eps"] = cfg.filter.containment_eps;
    j["seed"] = cfg.seed;
    nlohmann::ordered_json splits;
    std::int64_t questions_total = 0;
    for (const auto& [split, c] : built.counts) {
        nlohmann::ordered_json sj;
        sj["tables_in"] = c.tables_in;
        sj["tables_kept"] = c.tables_kept;
        sj["tables_failed"] = c.tables_failed;
        splits[split_name(split)] = std::move(sj);
    }
    j["splits"] = std::move(splits);
    j["total_questions"] = built.total_questions;
    std::ofstream out(cfg.out_dir / "manifest.json");
    out << j.dump(2) << '\n';
}

BuildOutput tally(const std::vector<TableResult>& results) {
    BuildOutput out;
    for (const auto& r : results) {
        FilterCounts& c = out.counts[r.split];
        c.tables_in++;
        if (!r.ok) c.tables_failed++;
        if (r.complex) {
            c.tables_kept++;
            out.total_questions += static_cast<std::int64_t>(r.records.size());
        }
    }
    return out;
}

}  // namespace

BuildOutput write_build_outputs(const RunConfig& cfg, const std::vector<TableResult>& results) {
    fs::create_directories(cfg.out_dir);
    BuildOutput built = tally(results);

    for (const auto& [split, counts] : built.counts) {
        std::ofstream records_out(cfg.out_dir / ("chitab_" + split_name(split) + ".jsonl"));
        std::ofstream forests_out(cfg.out_dir / ("forests_" + split_name(split) + ".jsonl"));
        for (const auto& r : results) {
            if (r.split != split || !r.complex) continue;
            for (const auto& rec : r.records) records_out << record_to_jsonl(rec) << '\n';
            forests_out << r.forest_json << '\n';
        }
    }

    write_diagnostics(cfg.out_dir, results);
    write_manifest(cfg, built);
    return built;
}

BuildOutput write_filter_outputs(const RunConfig& cfg, const std::vector<TableResult>& results) {
    fs::create_directories(cfg.out_dir);
    BuildOutput built = tally(results);

    for (const auto& [split, counts] : built.counts) {
        std::ofstream kept(cfg.out_dir / ("kept_" + split_name(split) + ".txt"));
        for (const auto& r : results) {
            if (r.split == split && r.complex) kept << r.table_id << '\n';
        }
    }

    write_diagnostics(cfg.out_dir, results);
    write_manifest(cfg, built);
    return built;
}

std::vector<QARecord> load_records_jsonl(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open records file: " + file.string());
    std::vector<QARecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(record_from_jsonl(line));
    }
    return out;
}

}  // namespace chitab
