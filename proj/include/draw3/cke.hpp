#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "draw3/geometry.hpp"
#include "draw3/llm.hpp"
#include "draw3/render.hpp"
#include "draw3/reward.hpp"
#include "draw3/sketch_text.hpp"

namespace draw3 {

struct RolloutRecord {
    std::int64_t runid = 0;  // unique within a run
    std::string prompt;
    std::string response;  // raw LLM output, verbatim
    std::optional<Sketch> parsed;
    RewardScore reward;
    std::size_t curve_count = 0;
    bool parse_ok = false;
    int epoch = 0;
    int group_index = 0;  // position within the K-candidate group
};

nlohmann::json rollout_to_json(const RolloutRecord& record);
RolloutRecord rollout_from_json(const nlohmann::json& json);

struct ContrastivePair {
    std::int64_t better = 0;
    std::int64_t worse = 0;
    double gap = 0.0;
};

// All ordered pairs with reward gap > delta, ranked by gap descending,
// ties broken by (better runid, worse runid) ascending, truncated to max_pairs.
std::vector<ContrastivePair> make_pairs(const std::vector<RolloutRecord>& group, double delta,
                                        std::size_t max_pairs = 3);

struct ExperienceEntry {
    int id = 0;  // never reused after Delete
    std::string text;
    int created_epoch = 0;
    int last_modified_epoch = 0;
};

struct ExperienceLibrary {
    std::vector<ExperienceEntry> entries;
    long version = 0;  // increments on every applied edit
    int next_id = 0;
    std::size_t max_entries = 32;

    const ExperienceEntry* find(int id) const;
};

std::string serialize_library(const ExperienceLibrary& library);
ExperienceLibrary deserialize_library(const std::string& text, std::size_t max_entries = 32);
void save_library(const ExperienceLibrary& library, const std::string& path);
ExperienceLibrary load_library(const std::string& path, std::size_t max_entries = 32);

// Numbered-list prompt segment; empty string for an empty library.
std::string render_experience(const ExperienceLibrary& library);

enum class EditOp { Add, Delete, Modify, Keep };

const char* to_string(EditOp op);
std::optional<EditOp> edit_op_from_string(const std::string& text);

struct ExperienceEdit {
    EditOp op = EditOp::Keep;
    std::optional<int> target_id;    // Delete/Modify
    std::optional<std::string> text;  // Add/Modify
};

struct JudgeVerdict {
    std::string advantage_text;
    std::vector<ExperienceEdit> edits;
    bool valid = true;        // false: unparseable/invalid judge reply, treated as all-Keep
    std::string diagnostic;   // why the verdict was rejected, when !valid
};

// Extracts and validates the fenced JSON verdict from a raw judge reply.
// Anything invalid yields a no-op verdict with a diagnostic, never a throw.
JudgeVerdict parse_verdict(const std::string& raw_response, const ExperienceLibrary& library);

struct ApplyOutcome {
    ExperienceLibrary library;
    std::vector<bool> applied;        // one flag per edit, in order
    std::vector<std::string> events;  // e.g. capacity rejections
};

// Edits applied in listed order; version +1 per applied edit; Keep is
// identity; Add beyond capacity is rejected with an event.
ApplyOutcome apply_verdict(const ExperienceLibrary& library, const JudgeVerdict& verdict,
                           int epoch);

std::string build_judge_prompt(const ContrastivePair& pair, const RolloutRecord& better,
                               const RolloutRecord& worse, const ExperienceLibrary& library,
                               const std::string& task_prompt);

JudgeVerdict judge(const ContrastivePair& pair, const RolloutRecord& better,
                   const RolloutRecord& worse, const ExperienceLibrary& library,
                   const std::string& task_prompt, LlmEndpoint& gateway, const LlmConfig& config);

using Scorer = std::function<RewardScore(const Sketch&, const std::vector<RenderedView>&)>;

Scorer make_proxy_scorer(const ProxyWeights& weights = {});
Scorer make_service_scorer(const EmbeddingServiceConfig& svc, const PromptTemplate& tmpl,
                           const std::string& prompt);

// Append-only JSONL sink with one flushed line per record.
class JsonlWriter {
public:
    explicit JsonlWriter(const std::string& path);
    void write(const nlohmann::json& line);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream stream_;
};

struct CkeConfig {
    int K = 5;
    double delta = 0.05;
    std::size_t max_pairs = 3;
    std::size_t max_entries = 32;
    LlmConfig llm;  // exploration settings (temperature 0.7)
    std::string system_prompt;  // built from default_system_prompt_spec() when empty
    ParserLimits parser_limits;  // lenient during rollouts
    RigParams rig_params;
    RenderOptions render_options;
    std::string out_dir;  // rollouts.jsonl, verdicts.jsonl, library.json, report.json
};

struct RolloutStats {
    std::vector<double> similarity_mean_per_rollout;
    std::map<std::size_t, std::size_t> curve_count_histogram;
    std::map<int, std::size_t> reward_histogram;  // bin index, width 0.05
    double bracket_match_rate = 0.0;
};

constexpr double kRewardBinWidth = 0.05;
int reward_bin(double value);

RolloutStats rollout_stats(const std::vector<RolloutRecord>& records);
nlohmann::json stats_to_json(const RolloutStats& stats);

struct RunReport {
    struct EpochRow {
        int epoch = 0;
        double mean_reward = 0.0;
        std::size_t rollouts = 0;
        std::size_t pairs_judged = 0;
        std::size_t edits_applied = 0;
        RolloutStats stats;
    };
    std::vector<EpochRow> epochs;
};

nlohmann::json report_to_json(const RunReport& report);

struct RunResult {
    ExperienceLibrary library;
    RunReport report;
};

// One K-candidate group: generate, parse (lenient), render, score; every
// record, including failures, is persisted before returning.
std::vector<RolloutRecord> rollout_group(const std::string& task_prompt, int K,
                                         LlmEndpoint& gateway, const CkeConfig& config,
                                         const std::string& system_prompt,
                                         const ExperienceLibrary& library, const Scorer& scorer,
                                         int epoch, std::int64_t& next_runid,
                                         JsonlWriter* rollout_log);

// The full loop: rollout_group -> make_pairs -> judge -> apply_verdict per
// prompt per epoch, library persisted after every verdict.
RunResult run_epochs(const std::vector<std::string>& task_prompts, int epochs,
                     const CkeConfig& config, LlmEndpoint& gateway, LlmEndpoint& judge_gateway,
                     const Scorer& scorer, ExperienceLibrary initial_library = {});

// Re-applies a persisted verdict log to an empty library; byte-identical to
// the library the run produced.
ExperienceLibrary replay_verdict_log(const std::string& path, std::size_t max_entries = 32);

}  // namespace draw3
