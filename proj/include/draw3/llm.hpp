#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "draw3/geometry.hpp"

namespace draw3 {

struct LlmConfig {
    std::string endpoint;  // chat-completion base URL, e.g. http://host:port
    std::string model;
    double temperature = 0.7;      // 0.7 exploration, 0.3 inference
    int max_output_tokens = 32768;
    std::string api_key_env = "LLM_API_KEY";
    double timeout_s = 300.0;
    int max_retries = 2;
};

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;
};

struct LlmTranscript {
    std::vector<ChatMessage> request;
    std::string raw_response;  // stored verbatim
    long prompt_tokens = -1;
    long completion_tokens = -1;
    double latency_ms = 0.0;
    bool truncated = false;  // token-limit truncation is flagged, not thrown
};

struct GtExample {
    std::string prompt;
    Sketch sketch;
};

struct SystemPromptSpec {
    std::string role_instruction;
    std::string format_spec;
    std::string type_constraints;
    std::string coordinate_system;
    std::vector<GtExample> gt_examples;
    std::string edge_case_rules;
    std::optional<int> curve_budget;
};

// Built-in spec: role, strict output format, type/shape constraints,
// [-0.8,0.8] right-handed Z-up canvas, one in-context example, edge-case bans.
SystemPromptSpec default_system_prompt_spec();

// Deterministic concatenation: role, format, types, coordinates, examples
// (canonical serialization), edge-case rules, optional curve budget.
std::string build_system_prompt(const SystemPromptSpec& spec);

struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class LlmEndpoint {
public:
    virtual ~LlmEndpoint() = default;
    virtual LlmTranscript complete(const LlmConfig& config,
                                   const std::vector<ChatMessage>& messages) = 0;
};

// One generation. A nonempty experience text goes in as its own labeled
// segment between the system and user messages.
LlmTranscript generate(LlmEndpoint& endpoint, const LlmConfig& config,
                       const std::string& system_prompt, const std::string& user_prompt,
                       const std::string& experience = {});

// OpenAI-style chat completions over HTTP (POST /v1/chat/completions).
class HttpLlmEndpoint : public LlmEndpoint {
public:
    LlmTranscript complete(const LlmConfig& config,
                           const std::vector<ChatMessage>& messages) override;

    static long request_count();
};

std::uint64_t stable_hash(std::string_view text);  // FNV-1a 64

enum class MockMode { Sequential, ByHash };

struct MockScriptEntry {
    std::string response;
    std::optional<std::uint64_t> hash;  // required in ByHash mode
};

struct ScriptExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Deterministic scripted endpoint. Sequential mode replays in order;
// ByHash keys on the stable hash of the final user message.
class MockLlmEndpoint : public LlmEndpoint {
public:
    MockLlmEndpoint(std::vector<MockScriptEntry> script, MockMode mode);

    LlmTranscript complete(const LlmConfig& config,
                           const std::vector<ChatMessage>& messages) override;

    std::size_t calls() const { return calls_; }

private:
    std::vector<MockScriptEntry> script_;
    MockMode mode_;
    std::size_t cursor_ = 0;
    std::size_t calls_ = 0;
    std::mutex mutex_;
};

std::unique_ptr<MockLlmEndpoint> mock_from_script(std::vector<MockScriptEntry> script,
                                                  MockMode mode = MockMode::Sequential);

// Script file: JSON array of {"match": <index or hash string>, "response": str},
// optionally tagged with "stream" ("generation" | "judge"). Alternatively an
// object {"generation": [...], "judge": [...]}.
struct MockScriptFile {
    std::vector<MockScriptEntry> generation;
    std::vector<MockScriptEntry> judge;
    MockMode mode = MockMode::Sequential;
};

MockScriptFile load_mock_script(const std::string& path);

}  // namespace draw3
