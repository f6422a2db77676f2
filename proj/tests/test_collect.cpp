#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "chitab/collect.hpp"

using namespace chitab;
namespace fs = std::filesystem;

namespace {

struct MockServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> requests{0};

    explicit MockServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
        server.Post("/v1/chat/completions",
                    [this, handler](const httplib::Request& req, httplib::Response& res) {
                        requests++;
                        handler(req, res);
                    });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~MockServer() {
        server.stop();
        thread.join();
    }

    EndpointConfig config() const {
        EndpointConfig cfg;
        cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
        cfg.model = "mock-model";
        cfg.max_retries = 2;
        cfg.backoff_initial_s = 0.01;
        return cfg;
    }
};

std::vector<QARecord> fixture_records(const fs::path& images_dir, int n) {
    fs::create_directories(images_dir);
    std::vector<QARecord> records;
    for (int i = 0; i < n; i++) {
        QARecord r;
        r.question_id = "t" + std::to_string(i) + "#n0#SH";
        r.table_id = "t" + std::to_string(i);
        r.image_name = "t" + std::to_string(i) + ".jpg";
        r.heading_text = "H";
        for (PromptStyle s : kAllPromptStyles) {
            r.prompts[s] = render_prompt(s, QuestionType::SHQA, "H");
        }
        std::ofstream(images_dir / r.image_name) << "fake image bytes " << i;
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<ResponseRecord> read_responses(const fs::path& file) {
    std::vector<ResponseRecord> out;
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(response_from_jsonl(line));
    }
    return out;
}

}  // namespace

TEST_CASE("base64 encoding") {
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("fo") == "Zm8=");
    CHECK(base64_encode("foo") == "Zm9v");
    CHECK(base64_encode("foobar") == "Zm9vYmFy");
}

TEST_CASE("render_request substitutes and escapes") {
    EndpointConfig cfg;
    cfg.model = "m";
    std::string body = render_request(cfg, "say \"hi\"\nplease", "QUJD");
    nlohmann::json j = nlohmann::json::parse(body);
    CHECK(j["model"] == "m");
    CHECK(j["messages"][0]["content"][0]["text"] == "say \"hi\"\nplease");
    CHECK(j["messages"][0]["content"][1]["image_url"]["url"] ==
          "data:image/jpeg;base64,QUJD");
}

TEST_CASE("collect_responses against a mock endpoint") {
    fs::path dir = fs::temp_directory_path() / "chitab_collect_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto records = fixture_records(dir / "images", 2);
    auto log = [](const std::string&) {};

    SUBCASE("echo endpoint: all parsed answers are 7") {
        MockServer mock([](const httplib::Request& req, httplib::Response& res) {
            // sanity: request carries text and image parts
            auto j = nlohmann::json::parse(req.body);
            REQUIRE(j["messages"][0]["content"].size() == 2);
            res.set_content(R"({"choices":[{"message":{"content":"7"}}]})", "application/json");
        });
        CollectOptions opts;
        opts.runs = 3;
        opts.group = "mock";
        opts.images_dir = dir / "images";
        opts.out_file = dir / "responses.jsonl";
        int n = collect_responses(mock.config(), records, opts, log);
        CHECK(n == 6);  // 2 records x 3 runs
        auto out = read_responses(opts.out_file);
        REQUIRE(out.size() == 6);
        for (const auto& r : out) {
            CHECK(r.parsed_answer == 7);
            CHECK(r.group == "mock");
            CHECK_FALSE(r.failed);
        }

        // rerun is a no-op: no duplicate (question, run) pairs
        CHECK(collect_responses(mock.config(), records, opts, log) == 0);
        CHECK(read_responses(opts.out_file).size() == 6);
        CHECK(mock.requests == 6);
    }

    SUBCASE("resume fills only the missing pairs") {
        MockServer mock([](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"choices":[{"message":{"content":"1"}}]})", "application/json");
        });
        CollectOptions opts;
        opts.runs = 2;
        opts.group = "mock";
        opts.images_dir = dir / "images";
        opts.out_file = dir / "resume.jsonl";
        // pre-seed one completed pair
        ResponseRecord seeded;
        seeded.question_id = records[0].question_id;
        seeded.group = "mock";
        seeded.run_index = 0;
        seeded.raw_text = "1";
        std::ofstream(opts.out_file) << response_to_jsonl(seeded) << "\n";

        CHECK(collect_responses(mock.config(), records, opts, log) == 3);
        CHECK(read_responses(opts.out_file).size() == 4);
    }

    SUBCASE("transient failures retried with backoff") {
        std::atomic<int> calls{0};
        MockServer mock([&](const httplib::Request&, httplib::Response& res) {
            if (calls.fetch_add(1) == 0) {
                res.status = 503;
                return;
            }
            res.set_content(R"({"choices":[{"message":{"content":"2"}}]})", "application/json");
        });
        CollectOptions opts;
        opts.runs = 1;
        opts.group = "mock";
        opts.images_dir = dir / "images";
        opts.out_file = dir / "retry.jsonl";
        opts.max_concurrency = 1;
        CHECK(collect_responses(mock.config(), {records[0]}, opts, log) == 1);
        auto out = read_responses(opts.out_file);
        REQUIRE(out.size() == 1);
        CHECK(out[0].parsed_answer == 2);
        CHECK(calls == 2);
    }

    SUBCASE("exhausted retries leave a persisted failure marker") {
        MockServer mock([](const httplib::Request&, httplib::Response& res) {
            res.status = 500;
        });
        CollectOptions opts;
        opts.runs = 1;
        opts.group = "mock";
        opts.images_dir = dir / "images";
        opts.out_file = dir / "fail.jsonl";
        CHECK(collect_responses(mock.config(), {records[0]}, opts, log) == 1);
        auto out = read_responses(opts.out_file);
        REQUIRE(out.size() == 1);
        CHECK(out[0].failed);
        CHECK_FALSE(out[0].parsed_answer.has_value());
    }

    fs::remove_all(dir);
}

TEST_CASE("endpoint config file round trip") {
    fs::path file = fs::temp_directory_path() / "chitab_endpoint.json";
    std::ofstream(file) << R"({"base_url":"http://h:1","model":"m","auth_env":"TOKEN_VAR",
                              "timeout_s":5,"max_retries":7,
                              "response_text_pointer":"/output/0/text"})";
    EndpointConfig cfg = endpoint_config_from_file(file);
    CHECK(cfg.base_url == "http://h:1");
    CHECK(cfg.auth_env == "TOKEN_VAR");
    CHECK(cfg.max_retries == 7);
    CHECK(cfg.response_text_pointer == "/output/0/text");
    fs::remove(file);
}
