#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "chitab/pipeline.hpp"

using namespace chitab;
namespace fs = std::filesystem;

namespace {

std::string obj(const std::string& label, double x1, double y1, double x2, double y2) {
    std::ostringstream os;
    os << "<object><name>" << label << "</name><bndbox><xmin>" << x1 << "</xmin><ymin>" << y1
       << "</ymin><xmax>" << x2 << "</xmax><ymax>" << y2 << "</ymax></bndbox></object>";
    return os.str();
}

// A 4-column table whose header is root -> {left, right}.
std::string complex_table_xml() {
    std::string body;
    body += obj("table", 0, 0, 100, 100);
    for (int i = 0; i < 4; i++) body += obj("table column", i * 25, 0, (i + 1) * 25, 100);
    body += obj("table row", 0, 0, 100, 10);
    body += obj("table row", 0, 10, 100, 20);
    body += obj("table row", 0, 20, 100, 100);
    body += obj("table column header", 0, 0, 100, 20);
    body += obj("table spanning cell", 0, 0, 100, 10);
    body += obj("table spanning cell", 0, 10, 50, 20);
    body += obj("table spanning cell", 50, 10, 100, 20);
    return "<annotation>" + body + "</annotation>";
}

std::string simple_table_xml() {
    std::string body;
    body += obj("table", 0, 0, 50, 50);
    body += obj("table column", 0, 0, 25, 50);
    body += obj("table column", 25, 0, 50, 50);
    body += obj("table row", 0, 0, 50, 10);
    return "<annotation>" + body + "</annotation>";
}

std::string words_json() {
    return R"([{"text":"All","bbox":[40,2,60,8]},
               {"text":"Left","bbox":[20,12,30,18]},
               {"text":"Right","bbox":[70,12,80,18]}])";
}

// Layout: <root>/structure/{train,test}/*.xml, <root>/words/{train,test}
fs::path write_fixture_corpus(const std::string& name) {
    fs::path root = fs::temp_directory_path() / name;
    fs::remove_all(root);
    for (const char* split : {"train", "test"}) {
        fs::create_directories(root / "structure" / split);
        fs::create_directories(root / "words" / split);
    }
    auto put = [&](const char* split, const std::string& id, const std::string& xml) {
        std::ofstream(root / "structure" / split / (id + ".xml")) << xml;
        std::ofstream(root / "words" / split / (id + "_words.json")) << words_json();
    };
    put("train", "PMC1_table_0", complex_table_xml());
    put("train", "PMC2_table_0", simple_table_xml());
    put("train", "PMC3_table_0", complex_table_xml());
    put("test", "PMC4_table_0", complex_table_xml());
    return root;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("discover_corpus pairs files and reads splits from directory layout") {
    fs::path root = write_fixture_corpus("chitab_pipeline_discover");
    RunConfig cfg;
    cfg.structure_dir = root / "structure";
    cfg.words_dir = root / "words";
    auto tables = discover_corpus(cfg);
    REQUIRE(tables.size() == 4);
    CHECK(tables[0].table_id == "PMC1_table_0");
    CHECK(tables[0].split == Split::Train);
    CHECK(tables[3].table_id == "PMC4_table_0");
    CHECK(tables[3].split == Split::Test);
    for (const auto& t : tables) CHECK_FALSE(t.words_file.empty());
    fs::remove_all(root);
}

TEST_CASE("discover_corpus flat layout with split lists") {
    fs::path root = fs::temp_directory_path() / "chitab_pipeline_flat";
    fs::remove_all(root);
    fs::create_directories(root / "structure");
    std::ofstream(root / "structure" / "a.xml") << simple_table_xml();
    std::ofstream(root / "structure" / "b.xml") << simple_table_xml();
    std::ofstream(root / "valid.txt") << "b\n";
    RunConfig cfg;
    cfg.structure_dir = root / "structure";
    cfg.split_lists[Split::Valid] = root / "valid.txt";
    auto tables = discover_corpus(cfg);
    REQUIRE(tables.size() == 2);
    CHECK(tables[0].split == Split::Train);  // unlisted ids default to train
    CHECK(tables[1].split == Split::Valid);
    fs::remove_all(root);
}

TEST_CASE("process_table end to end") {
    fs::path root = write_fixture_corpus("chitab_pipeline_process");
    FilterConfig fcfg;

    TablePaths complex_paths{"PMC1_table_0", Split::Train,
                             root / "structure/train/PMC1_table_0.xml",
                             root / "words/train/PMC1_table_0_words.json"};
    TableResult res = process_table(complex_paths, fcfg);
    CHECK(res.ok);
    CHECK(res.complex);
    CHECK(res.records.size() == 6);  // 3 header nodes x 2 types
    CHECK(res.records[0].heading_text == "All");
    CHECK(res.records[0].answer == 2);  // SHQA of the root: two children
    CHECK(res.records[1].answer == 4);  // VLQA of the root: four columns
    CHECK_FALSE(res.forest_json.empty());

    TablePaths simple_paths{"PMC2_table_0", Split::Train,
                            root / "structure/train/PMC2_table_0.xml",
                            root / "words/train/PMC2_table_0_words.json"};
    res = process_table(simple_paths, fcfg);
    CHECK(res.ok);
    CHECK_FALSE(res.complex);

    // corrupted annotation: error captured, not thrown
    std::ofstream(root / "structure/train/PMC1_table_0.xml") << "<object><name>table row";
    res = process_table(complex_paths, fcfg);
    CHECK_FALSE(res.ok);
    CHECK_FALSE(res.error.empty());

    fs::remove_all(root);
}

TEST_CASE("build outputs: counts, manifest, determinism across worker counts") {
    fs::path root = write_fixture_corpus("chitab_pipeline_build");
    RunConfig cfg;
    cfg.structure_dir = root / "structure";
    cfg.words_dir = root / "words";

    std::vector<std::string> dumps;
    for (int workers : {1, 4, 16}) {
        cfg.workers = workers;
        cfg.out_dir = root / ("out_w" + std::to_string(workers));
        auto tables = discover_corpus(cfg);
        auto results = run_corpus(tables, cfg.filter, cfg.workers, nullptr);
        BuildOutput built = write_build_outputs(cfg, results);
        CHECK(built.counts.at(Split::Train).tables_in == 3);
        CHECK(built.counts.at(Split::Train).tables_kept == 2);
        CHECK(built.counts.at(Split::Test).tables_kept == 1);
        CHECK(built.total_questions == 18);
        dumps.push_back(slurp(cfg.out_dir / "chitab_train.jsonl") +
                        slurp(cfg.out_dir / "chitab_test.jsonl") +
                        slurp(cfg.out_dir / "forests_train.jsonl") +
                        slurp(cfg.out_dir / "manifest.json"));
    }
    CHECK(dumps[0] == dumps[1]);
    CHECK(dumps[1] == dumps[2]);

    // records parse back
    auto records = load_records_jsonl(root / "out_w1" / "chitab_train.jsonl");
    CHECK(records.size() == 12);
    CHECK(records[0].split == Split::Train);

    fs::remove_all(root);
}

TEST_CASE("filter outputs write kept id lists") {
    fs::path root = write_fixture_corpus("chitab_pipeline_filter");
    RunConfig cfg;
    cfg.structure_dir = root / "structure";
    cfg.words_dir = root / "words";
    cfg.out_dir = root / "out";
    auto results = run_corpus(discover_corpus(cfg), cfg.filter, 2, nullptr);
    write_filter_outputs(cfg, results);
    CHECK(slurp(cfg.out_dir / "kept_train.txt") == "PMC1_table_0\nPMC3_table_0\n");
    CHECK(slurp(cfg.out_dir / "kept_test.txt") == "PMC4_table_0\n");
    fs::remove_all(root);
}

TEST_CASE("corrupted files are excluded, counted, and never abort the run") {
    fs::path root = write_fixture_corpus("chitab_pipeline_robust");
    std::ofstream(root / "structure/train/PMC9_table_0.xml") << "<object><name>garbage";
    RunConfig cfg;
    cfg.structure_dir = root / "structure";
    cfg.words_dir = root / "words";
    cfg.out_dir = root / "out";
    auto results = run_corpus(discover_corpus(cfg), cfg.filter, 2, nullptr);
    BuildOutput built = write_build_outputs(cfg, results);
    CHECK(built.counts.at(Split::Train).tables_in == 4);
    CHECK(built.counts.at(Split::Train).tables_failed == 1);
    CHECK(built.counts.at(Split::Train).tables_kept == 2);
    std::string diags = slurp(cfg.out_dir / "diagnostics.jsonl");
    CHECK(diags.find("PMC9_table_0") != std::string::npos);
    fs::remove_all(root);
}

TEST_CASE("config hash depends on thresholds") {
    RunConfig a, b;
    CHECK(config_hash(a) == config_hash(b));
    b.filter.coverage_threshold = 0.8;
    CHECK(config_hash(a) != config_hash(b));
}
