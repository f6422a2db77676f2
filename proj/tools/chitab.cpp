#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "chitab/collect.hpp"
#include "chitab/eval.hpp"
#include "chitab/pipeline.hpp"
#include "chitab/stats.hpp"

namespace fs = std::filesystem;
using namespace chitab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitUsageError = 2;

void add_run_flags(CLI::App* cmd, RunConfig& cfg, std::vector<std::string>& split_list_args) {
    cmd->add_option("--structure-dir", cfg.structure_dir, "Structure annotation XML root")
        ->required();
    cmd->add_option("--words-dir", cfg.words_dir, "Word annotation JSON root");
    cmd->add_option("--split-list", split_list_args,
                    "Split membership file as <split>=<path>; repeatable");
    cmd->add_option("--out", cfg.out_dir, "Output directory")->required();
    cmd->add_option("--threshold", cfg.filter.coverage_threshold,
                    "Column coverage threshold")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--min-columns", cfg.filter.min_covered_columns,
                    "Minimum covered columns for a qualifying spanner");
    cmd->add_option("--eps", cfg.filter.containment_eps, "Containment tolerance in px");
    cmd->add_option("--seed", cfg.seed, "Random seed");
    cmd->add_option("--workers", cfg.workers, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_flag("--strict", cfg.strict_parsing, "Strict answer parsing");
}

void apply_split_lists(RunConfig& cfg, const std::vector<std::string>& args) {
    for (const auto& arg : args) {
        std::size_t eq = arg.find('=');
        if (eq == std::string::npos) {
            throw CLI::ValidationError("--split-list", "expected <split>=<path>: " + arg);
        }
        auto split = split_from_name(arg.substr(0, eq));
        if (!split) {
            throw CLI::ValidationError("--split-list", "unknown split: " + arg.substr(0, eq));
        }
        cfg.split_lists[*split] = arg.substr(eq + 1);
    }
}

int run_pipeline(const RunConfig& cfg, bool build) {
    std::cerr << "config hash: " << config_hash(cfg) << "\n";
    std::vector<TablePaths> tables = discover_corpus(cfg);
    std::cerr << "discovered " << tables.size() << " tables\n";
    if (tables.empty()) {
        std::cerr << "error: no tables found under " << cfg.structure_dir << "\n";
        return kExitDataError;
    }
    auto progress = [](std::size_t done, std::size_t total) {
        std::cerr << "processed " << done << "/" << total << "\n";
    };
    std::vector<TableResult> results = run_corpus(tables, cfg.filter, cfg.workers, progress);
    BuildOutput out = build ? write_build_outputs(cfg, results)
                            : write_filter_outputs(cfg, results);
    for (const auto& [split, c] : out.counts) {
        std::cerr << split_name(split) << ": " << c.tables_kept << "/" << c.tables_in
                  << " kept, " << c.tables_failed << " failed\n";
    }
    std::cerr << "questions: " << out.total_questions << "\n";
    return kExitOk;
}

std::vector<QARecord> load_all_records(const std::vector<fs::path>& files) {
    std::vector<QARecord> all;
    for (const auto& f : files) {
        std::vector<QARecord> part = load_records_jsonl(f);
        all.insert(all.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
    }
    return all;
}

std::vector<ResponseRecord> load_all_responses(const std::vector<fs::path>& files,
                                               bool include_failures) {
    std::vector<ResponseRecord> all;
    for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) throw std::runtime_error("cannot open responses file: " + f.string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            ResponseRecord r = response_from_jsonl(line);
            if (r.failed && !include_failures) continue;
            all.push_back(std::move(r));
        }
    }
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CHiTab benchmark toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Key-value config file; flags take precedence");

    // filter / build
    RunConfig run_cfg;
    std::vector<std::string> split_list_args;
    CLI::App* cmd_filter =
        app.add_subcommand("filter", "Emit kept-table id lists per split");
    add_run_flags(cmd_filter, run_cfg, split_list_args);
    CLI::App* cmd_build =
        app.add_subcommand("build", "Emit benchmark JSONL, forests, and manifest");
    add_run_flags(cmd_build, run_cfg, split_list_args);

    // stats
    std::vector<fs::path> stats_records;
    fs::path stats_manifest;
    fs::path stats_out;
    std::string stats_format = "text";
    CLI::App* cmd_stats = app.add_subcommand("stats", "Coverage, answer stats, histogram");
    cmd_stats->add_option("--records", stats_records, "Benchmark JSONL files")->required();
    cmd_stats->add_option("--manifest", stats_manifest, "Manifest from a build run");
    cmd_stats->add_option("--out", stats_out, "Directory for the histogram CSV");
    cmd_stats->add_option("--format", stats_format, "text or json")
        ->check(CLI::IsMember({"text", "json"}));

    // prompts
    std::string prompts_style;
    std::string prompts_qtype = "SHQA";
    std::string prompts_heading = "column_name";
    CLI::App* cmd_prompts = app.add_subcommand("prompts", "Render prompt styles to stdout");
    cmd_prompts->add_option("--style", prompts_style, "Prompt style (default: all eight)");
    cmd_prompts->add_option("--qtype", prompts_qtype, "SHQA or VLQA")
        ->check(CLI::IsMember({"SHQA", "VLQA"}));
    cmd_prompts->add_option("--heading", prompts_heading, "Heading text to substitute");

    // collect
    std::vector<fs::path> collect_records;
    fs::path collect_endpoint_file, collect_images, collect_out;
    std::string collect_style = "base", collect_group;
    int collect_runs = 1, collect_concurrency = 4;
    CLI::App* cmd_collect = app.add_subcommand("collect", "Drive a vision-chat endpoint");
    cmd_collect->add_option("--records", collect_records, "Benchmark JSONL files")->required();
    cmd_collect->add_option("--endpoint-config", collect_endpoint_file, "Endpoint JSON config")
        ->required();
    cmd_collect->add_option("--images-dir", collect_images, "Table image directory")->required();
    cmd_collect->add_option("--out", collect_out, "Response JSONL (appended)")->required();
    cmd_collect->add_option("--style", collect_style, "Prompt style to send");
    cmd_collect->add_option("--group", collect_group, "Group label (default: model name)");
    cmd_collect->add_option("--runs", collect_runs, "Repetitions per question");
    cmd_collect->add_option("--max-concurrency", collect_concurrency, "In-flight requests");

    // score / stability / solve-rates
    std::vector<fs::path> eval_responses, eval_gold;
    bool eval_strict = false, eval_include_failures = false;
    int stability_runs = 29;
    fs::path solve_out;
    CLI::App* cmd_score = app.add_subcommand("score", "Exact-match accuracy per group");
    CLI::App* cmd_stability = app.add_subcommand("stability", "Repetition consistency per group");
    CLI::App* cmd_solve = app.add_subcommand("solve-rates", "Per-table solve rate CSV");
    for (CLI::App* c : {cmd_score, cmd_stability, cmd_solve}) {
        c->add_option("--responses", eval_responses, "Response JSONL files")->required();
        c->add_option("--gold", eval_gold, "Benchmark JSONL files")->required();
        c->add_flag("--strict", eval_strict, "Strict answer parsing");
        c->add_flag("--include-failures", eval_include_failures,
                    "Score persisted failure markers as empty answers");
    }
    cmd_stability->add_option("--runs-expected", stability_runs, "Repetitions per question");
    cmd_solve->add_option("--out", solve_out, "CSV output path (default: stdout)");

    // sample-subset
    std::vector<fs::path> sample_records;
    int sample_n = 1250;
    std::uint64_t sample_seed = 0;
    fs::path sample_out;
    CLI::App* cmd_sample =
        app.add_subcommand("sample-subset", "Prompt-tuning subset from the validation split");
    cmd_sample->add_option("--records", sample_records, "Validation benchmark JSONL")->required();
    cmd_sample->add_option("--n-per-type", sample_n, "Questions per type");
    cmd_sample->add_option("--seed", sample_seed, "Random seed");
    cmd_sample->add_option("--out", sample_out, "Output path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsageError;
    }

    try {
        if (*cmd_filter || *cmd_build) {
            apply_split_lists(run_cfg, split_list_args);
            return run_pipeline(run_cfg, cmd_build->parsed());
        }

        if (*cmd_stats) {
            std::vector<QARecord> records = load_all_records(stats_records);
            if (records.empty()) {
                std::cerr << "error: no records\n";
                return kExitDataError;
            }
            std::map<Split, FilterCounts> counts;
            if (!stats_manifest.empty()) {
                std::ifstream in(stats_manifest);
                if (!in) throw std::runtime_error("cannot open manifest: " + stats_manifest.string());
                nlohmann::json m = nlohmann::json::parse(in);
                for (const auto& [name, sj] : m.at("splits").items()) {
                    auto split = split_from_name(name);
                    if (!split) throw std::runtime_error("unknown split in manifest: " + name);
                    FilterCounts c;
                    c.tables_in = sj.at("tables_in").get<std::int64_t>();
                    c.tables_kept = sj.at("tables_kept").get<std::int64_t>();
                    counts[*split] = c;
                }
            }
            AnswerStatsAccumulator acc;
            QuestionHistogram hist;
            for (const auto& r : records) {
                acc.add(r);
                hist.add(r);
            }
            std::vector<SplitStats> stats;
            if (!counts.empty()) {
                stats = coverage(counts);
                acc.fill(stats);
            } else {
                stats = acc.to_stats();
            }
            std::cout << (stats_format == "json" ? stats_to_json(stats) : stats_to_text(stats))
                      << "\n";
            if (!stats_out.empty()) {
                fs::create_directories(stats_out);
                std::ofstream csv(stats_out / "questions_per_table.csv");
                csv << hist.to_csv();
            }
            return kExitOk;
        }

        if (*cmd_prompts) {
            auto qtype = question_type_from_name(prompts_qtype);
            if (prompts_style.empty()) {
                for (PromptStyle s : kAllPromptStyles) {
                    std::cout << prompt_style_name(s) << ": "
                              << render_prompt(s, *qtype, prompts_heading) << "\n";
                }
            } else {
                auto style = prompt_style_from_name(prompts_style);
                if (!style) {
                    std::cerr << "error: unknown prompt style: " << prompts_style << "\n";
                    return kExitUsageError;
                }
                std::cout << render_prompt(*style, *qtype, prompts_heading) << "\n";
            }
            return kExitOk;
        }

        if (*cmd_collect) {
            auto style = prompt_style_from_name(collect_style);
            if (!style) {
                std::cerr << "error: unknown prompt style: " << collect_style << "\n";
                return kExitUsageError;
            }
            EndpointConfig endpoint = endpoint_config_from_file(collect_endpoint_file);
            CollectOptions options;
            options.style = *style;
            options.runs = collect_runs;
            options.group = collect_group;
            options.images_dir = collect_images;
            options.out_file = collect_out;
            options.max_concurrency = collect_concurrency;
            std::vector<QARecord> records = load_all_records(collect_records);
            int n = collect_responses(endpoint, records, options,
                                      [](const std::string& m) { std::cerr << m << "\n"; });
            std::cerr << "persisted " << n << " responses\n";
            return kExitOk;
        }

        if (*cmd_score) {
            auto responses = load_all_responses(eval_responses, eval_include_failures);
            auto gold = load_all_records(eval_gold);
            for (const auto& rep : score(responses, gold, eval_strict)) {
                nlohmann::ordered_json j;
                j["group"] = rep.group;
                j["shqa_accuracy"] = rep.shqa_accuracy;
                j["vlqa_accuracy"] = rep.vlqa_accuracy;
                j["overall_accuracy"] = rep.overall_accuracy;
                j["shqa_n"] = rep.shqa_n;
                j["vlqa_n"] = rep.vlqa_n;
                std::cout << j.dump() << "\n";
            }
            return kExitOk;
        }

        if (*cmd_stability) {
            auto responses = load_all_responses(eval_responses, eval_include_failures);
            auto gold = load_all_records(eval_gold);
            std::map<std::string, std::vector<ResponseRecord>> by_group;
            for (auto& r : responses) by_group[r.group].push_back(std::move(r));
            for (const auto& [group, rs] : by_group) {
                StabilityReport rep = stability(rs, gold, stability_runs, eval_strict);
                nlohmann::ordered_json j;
                j["group"] = rep.group;
                j["n_questions"] = rep.n_questions;
                j["unstable_questions"] = rep.unstable_questions;
                j["stability_pct"] = rep.stability_pct;
                j["mean_accuracy"] = rep.mean_accuracy;
                std::cout << j.dump() << "\n";
            }
            return kExitOk;
        }

        if (*cmd_solve) {
            auto responses = load_all_responses(eval_responses, eval_include_failures);
            auto gold = load_all_records(eval_gold);
            std::string csv = solve_rates_to_csv(per_table_solve_rate(responses, gold, eval_strict));
            if (solve_out.empty()) {
                std::cout << csv;
            } else {
                std::ofstream out(solve_out);
                out << csv;
            }
            return kExitOk;
        }

        if (*cmd_sample) {
            auto records = load_all_records(sample_records);
            auto ids = sample_tuning_subset(records, sample_n, sample_seed);
            if (sample_out.empty()) {
                for (const auto& id : ids) std::cout << id << "\n";
            } else {
                std::ofstream out(sample_out);
                for (const auto& id : ids) out << id << "\n";
            }
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    }

    return kExitUsageError;
}
