#include "draw3/llm.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "draw3/sketch_text.hpp"

namespace draw3 {
namespace {

std::atomic<long> g_llm_request_count{0};

const std::string kExperienceHeader = "Learned drawing experience (apply these principles):";

}  // namespace

SystemPromptSpec default_system_prompt_spec() {
    SystemPromptSpec spec;
    spec.role_instruction =
        "You are a professional 3D artist. You draw objects as sparse wireframe sketches "
        "made of cubic 3D Bezier curves, planning structure before detail.";
    spec.format_spec =
        "Output format: respond with only a Python list wrapped in <curves> and </curves>. "
        "Nothing else may appear between the delimiters.";
    spec.type_constraints =
        "Types: the list contains curves; each curve is a list of exactly 4 control points; "
        "each control point is a list of exactly 3 floats.";
    spec.coordinate_system =
        "Coordinate system: right-handed, Z-up. All coordinates must stay within "
        "[-0.8, 0.8] on every axis.";
    spec.edge_case_rules =
        "Rules: no comments, no variable assignments, no extra text inside the delimiters. "
        "Avoid zero-length curves (near-identical control points) and avoid flattening the "
        "whole sketch into a single plane.";

    // A tiny three-sided pyramid frame as the in-context example.
    Sketch pyramid;
    pyramid.curves = {
        {{-0.4, -0.4, -0.4}, {-0.4, -0.4, -0.4}, {0.4, -0.4, -0.4}, {0.4, -0.4, -0.4}},
        {{0.4, -0.4, -0.4}, {0.4, -0.4, -0.4}, {0.0, 0.4, -0.4}, {0.0, 0.4, -0.4}},
        {{0.0, 0.4, -0.4}, {0.0, 0.4, -0.4}, {-0.4, -0.4, -0.4}, {-0.4, -0.4, -0.4}},
        {{-0.4, -0.4, -0.4}, {-0.4, -0.4, -0.4}, {0.0, 0.0, 0.5}, {0.0, 0.0, 0.5}},
        {{0.4, -0.4, -0.4}, {0.4, -0.4, -0.4}, {0.0, 0.0, 0.5}, {0.0, 0.0, 0.5}},
        {{0.0, 0.4, -0.4}, {0.0, 0.4, -0.4}, {0.0, 0.0, 0.5}, {0.0, 0.0, 0.5}},
    };
    spec.gt_examples.push_back({"a simple pyramid", pyramid});
    return spec;
}

std::string build_system_prompt(const SystemPromptSpec& spec) {
    std::string out;
    out += spec.role_instruction;
    out += "\n\n";
    out += spec.format_spec;
    out += "\n\n";
    out += spec.type_constraints;
    out += "\n\n";
    out += spec.coordinate_system;
    out += "\n\n";
    for (const GtExample& example : spec.gt_examples) {
        out += "Example for prompt \"" + example.prompt + "\":\n";
        out += serialize(example.sketch);
        out += "\n\n";
    }
    out += spec.edge_case_rules;
    if (spec.curve_budget) {
        out += "\n\nCurve budget: draw the object using exactly " +
               std::to_string(*spec.curve_budget) + " curves.";
    }
    return out;
}

LlmTranscript generate(LlmEndpoint& endpoint, const LlmConfig& config,
                       const std::string& system_prompt, const std::string& user_prompt,
                       const std::string& experience) {
    std::vector<ChatMessage> messages;
    messages.push_back({"system", system_prompt});
    if (!experience.empty())
        messages.push_back({"system", kExperienceHeader + "\n" + experience});
    messages.push_back({"user", user_prompt});
    return endpoint.complete(config, messages);
}

long HttpLlmEndpoint::request_count() { return g_llm_request_count.load(); }

LlmTranscript HttpLlmEndpoint::complete(const LlmConfig& config,
                                        const std::vector<ChatMessage>& messages) {
    nlohmann::json body;
    body["model"] = config.model;
    body["temperature"] = config.temperature;
    body["max_tokens"] = config.max_output_tokens;
    body["messages"] = nlohmann::json::array();
    for (const auto& m : messages)
        body["messages"].push_back({{"role", m.role}, {"content", m.content}});

    std::string last_error;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        httplib::Client client(config.endpoint);
        client.set_read_timeout(static_cast<time_t>(config.timeout_s), 0);
        client.set_connection_timeout(static_cast<time_t>(config.timeout_s), 0);
        if (const char* key = std::getenv(config.api_key_env.c_str()))
            client.set_default_headers({{"Authorization", std::string("Bearer ") + key}});

        auto start = std::chrono::steady_clock::now();
        ++g_llm_request_count;
        auto res = client.Post("/v1/chat/completions", body.dump(), "application/json");
        auto elapsed = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start).count();
        if (!res) {
            last_error = "transport error (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        try {
            auto json = nlohmann::json::parse(res->body);
            const auto& choice = json.at("choices").at(0);
            LlmTranscript transcript;
            transcript.request = messages;
            transcript.raw_response = choice.at("message").at("content").get<std::string>();
            transcript.truncated = choice.value("finish_reason", "stop") == "length";
            if (json.contains("usage")) {
                transcript.prompt_tokens = json["usage"].value("prompt_tokens", -1);
                transcript.completion_tokens = json["usage"].value("completion_tokens", -1);
            }
            transcript.latency_ms = elapsed;
            return transcript;
        } catch (const std::exception& e) {
            last_error = std::string("bad response body: ") + e.what();
        }
    }
    throw TransportError("LLM endpoint failed after " + std::to_string(config.max_retries + 1) +
                         " attempts: " + last_error);
}

std::uint64_t stable_hash(std::string_view text) {
    std::uint64_t h = 14695981039346656037ull;  // FNV-1a
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

MockLlmEndpoint::MockLlmEndpoint(std::vector<MockScriptEntry> script, MockMode mode)
    : script_(std::move(script)), mode_(mode) {
    if (script_.empty()) throw std::invalid_argument("mock script must be non-empty");
    if (mode_ == MockMode::ByHash)
        for (const auto& entry : script_)
            if (!entry.hash) throw std::invalid_argument("by_hash script entry missing hash");
}

LlmTranscript MockLlmEndpoint::complete(const LlmConfig&,
                                        const std::vector<ChatMessage>& messages) {
    std::lock_guard<std::mutex> lock(mutex_);
    ++calls_;
    LlmTranscript transcript;
    transcript.request = messages;
    if (mode_ == MockMode::Sequential) {
        if (cursor_ >= script_.size())
            throw ScriptExhausted("mock script exhausted after " +
                                  std::to_string(script_.size()) + " responses");
        transcript.raw_response = script_[cursor_++].response;
        return transcript;
    }
    std::string final_user;
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == "user") {
            final_user = it->content;
            break;
        }
    }
    std::uint64_t key = stable_hash(final_user);
    for (const auto& entry : script_) {
        if (*entry.hash == key) {
            transcript.raw_response = entry.response;
            return transcript;
        }
    }
    throw ScriptExhausted("no mock script entry for prompt hash " + std::to_string(key));
}

std::unique_ptr<MockLlmEndpoint> mock_from_script(std::vector<MockScriptEntry> script,
                                                  MockMode mode) {
    return std::make_unique<MockLlmEndpoint>(std::move(script), mode);
}

namespace {

MockScriptEntry entry_from_json(const nlohmann::json& item) {
    MockScriptEntry entry;
    entry.response = item.at("response").get<std::string>();
    if (item.contains("match") && item["match"].is_string())
        entry.hash = std::stoull(item["match"].get<std::string>(), nullptr, 16);
    return entry;
}

}  // namespace

MockScriptFile load_mock_script(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open mock script: " + path);
    nlohmann::json json = nlohmann::json::parse(f);

    MockScriptFile script;
    auto load_array = [&](const nlohmann::json& array) {
        for (const auto& item : array) {
            std::string stream = item.value("stream", "generation");
            auto& target = stream == "judge" ? script.judge : script.generation;
            target.push_back(entry_from_json(item));
        }
    };
    if (json.is_array()) {
        load_array(json);
    } else {
        if (json.contains("generation"))
            for (const auto& item : json["generation"]) script.generation.push_back(entry_from_json(item));
        if (json.contains("judge"))
            for (const auto& item : json["judge"]) script.judge.push_back(entry_from_json(item));
        if (json.value("mode", "sequential") == "by_hash") script.mode = MockMode::ByHash;
    }
    if (script.generation.empty() && script.judge.empty())
        throw std::runtime_error("mock script is empty: " + path);
    return script;
}

}  // namespace draw3
