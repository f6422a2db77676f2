#include "chitab/collect.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace chitab {

namespace fs = std::filesystem;

EndpointConfig endpoint_config_from_file(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open endpoint config: " + file.string());
    nlohmann::json j = nlohmann::json::parse(in);
    EndpointConfig cfg;
    cfg.base_url = j.at("base_url").get<std::string>();
    cfg.model = j.at("model").get<std::string>();
    if (j.contains("path")) cfg.path = j["path"].get<std::string>();
    if (j.contains("auth_env")) cfg.auth_env = j["auth_env"].get<std::string>();
    if (j.contains("timeout_s")) cfg.timeout_s = j["timeout_s"].get<int>();
    if (j.contains("max_retries")) cfg.max_retries = j["max_retries"].get<int>();
    if (j.contains("backoff_initial_s")) cfg.backoff_initial_s = j["backoff_initial_s"].get<double>();
    if (j.contains("backoff_factor")) cfg.backoff_factor = j["backoff_factor"].get<double>();
    if (j.contains("request_template")) cfg.request_template = j["request_template"].get<std::string>();
    if (j.contains("response_text_pointer"))
        cfg.response_text_pointer = j["response_text_pointer"].get<std::string>();
    return cfg;
}

std::string default_request_template() {
    // Chat-completions dialect: one user turn with a text part and an
    // image part. No decoding parameters; the endpoint's defaults apply.
    return R"({"model":"{{model}}","messages":[{"role":"user","content":[)"
           R"({"type":"text","text":"{{prompt}}"},)"
           R"({"type":"image_url","image_url":{"url":"data:image/jpeg;base64,{{image_base64}}"}})"
           R"(]}]})";
}

namespace {

std::string json_escape(const std::string& s) {
    std::string dumped = nlohmann::json(s).dump();
    return dumped.substr(1, dumped.size() - 2);  // strip surrounding quotes
}

std::string substitute(std::string tmpl, const std::string& key, const std::string& value) {
    std::string marker = "{{" + key + "}}";
    std::size_t pos = 0;
    while ((pos = tmpl.find(marker, pos)) != std::string::npos) {
        tmpl.replace(pos, marker.size(), value);
        pos += value.size();
    }
    return tmpl;
}

std::string iso8601_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open image: " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Extracts the first text content from the endpoint reply; tolerates both
// plain-string and parts-array content layouts.
std::string extract_text(const nlohmann::json& body, const std::string& pointer) {
    const nlohmann::json* node = &body;
    nlohmann::json resolved;
    try {
        resolved = body.at(nlohmann::json::json_pointer(pointer));
        node = &resolved;
    } catch (const nlohmann::json::exception&) {
        throw std::runtime_error("response missing content at " + pointer);
    }
    if (node->is_string()) return node->get<std::string>();
    if (node->is_array()) {
        for (const auto& part : *node) {
            if (part.is_object() && part.contains("text")) {
                return part["text"].get<std::string>();
            }
        }
    }
    throw std::runtime_error("response content at " + pointer + " is not text");
}

}  // namespace

std::string render_request(const EndpointConfig& cfg, const std::string& prompt,
                           const std::string& image_base64) {
    std::string tmpl =
        cfg.request_template.empty() ? default_request_template() : cfg.request_template;
    tmpl = substitute(std::move(tmpl), "model", json_escape(cfg.model));
    tmpl = substitute(std::move(tmpl), "prompt", json_escape(prompt));
    tmpl = substitute(std::move(tmpl), "image_base64", image_base64);
    return tmpl;
}

std::string base64_encode(const std::string& bytes) {
    static const char* alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= bytes.size()) {
        std::uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                          (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                          static_cast<unsigned char>(bytes[i + 2]);
        out += alphabet[(v >> 18) & 63];
        out += alphabet[(v >> 12) & 63];
        out += alphabet[(v >> 6) & 63];
        out += alphabet[v & 63];
        i += 3;
    }
    std::size_t rem = bytes.size() - i;
    if (rem == 1) {
        std::uint32_t v = static_cast<unsigned char>(bytes[i]) << 16;
        out += alphabet[(v >> 18) & 63];
        out += alphabet[(v >> 12) & 63];
        out += "==";
    } else if (rem == 2) {
        std::uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                          (static_cast<unsigned char>(bytes[i + 1]) << 8);
        out += alphabet[(v >> 18) & 63];
        out += alphabet[(v >> 12) & 63];
        out += alphabet[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

int collect_responses(const EndpointConfig& endpoint, const std::vector<QARecord>& records,
                      const CollectOptions& options,
                      const std::function<void(const std::string&)>& log) {
    // Already-persisted (question, run) pairs are skipped on resume.
    std::set<std::pair<std::string, int>> done;
    if (fs::exists(options.out_file)) {
        std::ifstream in(options.out_file);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            ResponseRecord r = response_from_jsonl(line);
            done.insert({r.question_id, r.run_index});
        }
    }

    struct Job {
        const QARecord* record;
        int run;
    };
    std::vector<Job> jobs;
    for (const auto& r : records) {
        for (int run = 0; run < options.runs; run++) {
            if (!done.count({r.question_id, run})) jobs.push_back({&r, run});
        }
    }
    if (jobs.empty()) return 0;

    std::string token;
    if (!endpoint.auth_env.empty()) {
        if (const char* v = std::getenv(endpoint.auth_env.c_str())) token = v;
    }

    std::ofstream out(options.out_file, std::ios::app);
    if (!out) throw std::runtime_error("cannot open output: " + options.out_file.string());
    std::mutex write_mutex;
    std::atomic<std::size_t> next{0};
    std::atomic<int> persisted{0};
    std::mutex log_mutex;

    auto worker = [&]() {
        httplib::Client client(endpoint.base_url);
        client.set_connection_timeout(endpoint.timeout_s, 0);
        client.set_read_timeout(endpoint.timeout_s, 0);
        httplib::Headers headers;
        if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) break;
            const Job& job = jobs[i];
            const std::string& prompt = job.record->prompts.at(options.style);
            std::string image_b64 = base64_encode(
                read_file_bytes(options.images_dir / job.record->image_name));
            std::string body = render_request(endpoint, prompt, image_b64);

            std::string raw_text;
            bool ok = false;
            double delay = endpoint.backoff_initial_s;
            for (int attempt = 0; attempt <= endpoint.max_retries; attempt++) {
                if (attempt > 0) {
                    std::this_thread::sleep_for(
                        std::chrono::milliseconds(static_cast<int>(delay * 1000)));
                    delay *= endpoint.backoff_factor;
                }
                auto res = client.Post(endpoint.path, headers, body, "application/json");
                if (!res || res->status < 200 || res->status >= 300) continue;
                try {
                    raw_text = extract_text(nlohmann::json::parse(res->body),
                                            endpoint.response_text_pointer);
                    ok = true;
                    break;
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lk(log_mutex);
                    log(std::string("bad response body: ") + e.what());
                }
            }

            ResponseRecord record;
            record.question_id = job.record->question_id;
            record.group = options.group.empty() ? endpoint.model : options.group;
            record.run_index = job.run;
            record.prompt_style = options.style;
            record.raw_text = raw_text;
            record.parsed_answer = ok ? parse_answer(raw_text, /*strict=*/false) : std::nullopt;
            record.failed = !ok;

            nlohmann::ordered_json line = nlohmann::ordered_json::parse(
                response_to_jsonl(record));
            line["timestamp"] = iso8601_now();
            {
                std::lock_guard<std::mutex> lk(write_mutex);
                out << line.dump() << '\n';
                out.flush();
            }
            persisted.fetch_add(1);
        }
    };

    int n_threads = std::max(1, std::min<int>(options.max_concurrency,
                                              static_cast<int>(jobs.size())));
    std::vector<std::thread> threads;
    for (int t = 0; t < n_threads; t++) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    return persisted.load();
}

}  // namespace chitab
