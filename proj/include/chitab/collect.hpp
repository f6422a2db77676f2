#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "chitab/eval.hpp"
#include "chitab/qa.hpp"

namespace chitab {

struct EndpointConfig {
    std::string base_url;  // scheme://host[:port]
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string auth_env;  // name of the env var holding the bearer token
    int timeout_s = 120;
    int max_retries = 3;
    double backoff_initial_s = 1.0;
    double backoff_factor = 2.0;
    // Request body with {{model}}, {{prompt}}, {{image_base64}} placeholders;
    // lets one binary talk to different endpoint dialects.
    std::string request_template;
    // JSON pointer to the response's text content.
    std::string response_text_pointer = "/choices/0/message/content";
};

EndpointConfig endpoint_config_from_file(const std::filesystem::path& file);

std::string default_request_template();

// Placeholder substitution with JSON string escaping applied to the values.
std::string render_request(const EndpointConfig& cfg, const std::string& prompt,
                           const std::string& image_base64);

std::string base64_encode(const std::string& bytes);

struct CollectOptions {
    PromptStyle style = PromptStyle::Base;
    int runs = 1;
    std::string group;
    std::filesystem::path images_dir;
    std::filesystem::path out_file;  // JSON-lines, append-only
    int max_concurrency = 4;
};

// One request per (record, run); raw text persisted verbatim. Pairs already
// present in out_file are skipped, so an interrupted run can resume.
// Transport failures after the retry budget become persisted failure
// markers. Returns the number of newly persisted records.
int collect_responses(const EndpointConfig& endpoint, const std::vector<QARecord>& records,
                      const CollectOptions& options,
                      const std::function<void(const std::string&)>& log);

}  // namespace chitab
