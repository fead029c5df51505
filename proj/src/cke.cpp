#include "draw3/cke.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace draw3 {
namespace {

nlohmann::json reward_to_json(const RewardScore& reward) {
    nlohmann::json json;
    json["value"] = reward.value;
    json["kind"] = to_string(reward.kind);
    if (reward.per_view) json["per_view"] = *reward.per_view;
    return json;
}

RewardScore reward_from_json(const nlohmann::json& json) {
    RewardScore reward;
    reward.value = json.at("value").get<double>();
    std::string kind = json.at("kind").get<std::string>();
    if (kind == "embedding_text") reward.kind = RewardKind::EmbeddingText;
    else if (kind == "embedding_image") reward.kind = RewardKind::EmbeddingImage;
    else if (kind == "proxy") reward.kind = RewardKind::Proxy;
    else reward.kind = RewardKind::ParseFailure;
    if (json.contains("per_view")) reward.per_view = json["per_view"].get<std::vector<double>>();
    return reward;
}

nlohmann::json edits_to_json(const std::vector<ExperienceEdit>& edits) {
    nlohmann::json array = nlohmann::json::array();
    for (const auto& edit : edits) {
        nlohmann::json e;
        e["op"] = to_string(edit.op);
        if (edit.target_id) e["target_id"] = *edit.target_id;
        if (edit.text) e["text"] = *edit.text;
        array.push_back(e);
    }
    return array;
}

std::vector<ExperienceEdit> edits_from_json(const nlohmann::json& array) {
    std::vector<ExperienceEdit> edits;
    for (const auto& item : array) {
        ExperienceEdit edit;
        auto op = edit_op_from_string(item.at("op").get<std::string>());
        if (!op) throw std::runtime_error("unknown edit op in log");
        edit.op = *op;
        if (item.contains("target_id")) edit.target_id = item["target_id"].get<int>();
        if (item.contains("text")) edit.text = item["text"].get<std::string>();
        edits.push_back(edit);
    }
    return edits;
}

}  // namespace

nlohmann::json rollout_to_json(const RolloutRecord& record) {
    nlohmann::json json;
    json["runid"] = record.runid;
    json["prompt"] = record.prompt;
    json["response"] = record.response;
    json["reward"] = reward_to_json(record.reward);
    json["curve_count"] = record.curve_count;
    json["parse_ok"] = record.parse_ok;
    json["epoch"] = record.epoch;
    json["group_index"] = record.group_index;
    return json;
}

RolloutRecord rollout_from_json(const nlohmann::json& json) {
    RolloutRecord record;
    record.runid = json.at("runid").get<std::int64_t>();
    record.prompt = json.at("prompt").get<std::string>();
    record.response = json.at("response").get<std::string>();
    record.reward = reward_from_json(json.at("reward"));
    record.curve_count = json.at("curve_count").get<std::size_t>();
    record.parse_ok = json.at("parse_ok").get<bool>();
    record.epoch = json.at("epoch").get<int>();
    record.group_index = json.at("group_index").get<int>();
    if (record.parse_ok) {
        auto result = parse(record.response, ParserLimits{});
        if (auto* doc = std::get_if<ParsedDocument>(&result)) record.parsed = doc->sketch;
    }
    return record;
}

std::vector<ContrastivePair> make_pairs(const std::vector<RolloutRecord>& group, double delta,
                                        std::size_t max_pairs) {
    if (delta <= 0.0) throw std::invalid_argument("pairing threshold delta must be positive");
    std::vector<ContrastivePair> pairs;
    for (const RolloutRecord& a : group) {
        for (const RolloutRecord& b : group) {
            double gap = a.reward.value - b.reward.value;
            if (gap > delta) pairs.push_back({a.runid, b.runid, gap});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const ContrastivePair& a, const ContrastivePair& b) {
        if (a.gap != b.gap) return a.gap > b.gap;
        if (a.better != b.better) return a.better < b.better;
        return a.worse < b.worse;
    });
    if (pairs.size() > max_pairs) pairs.resize(max_pairs);
    return pairs;
}

const ExperienceEntry* ExperienceLibrary::find(int id) const {
    for (const auto& entry : entries)
        if (entry.id == id) return &entry;
    return nullptr;
}

std::string serialize_library(const ExperienceLibrary& library) {
    nlohmann::json json;
    json["version"] = library.version;
    json["next_id"] = library.next_id;
    json["entries"] = nlohmann::json::array();
    for (const auto& entry : library.entries) {
        json["entries"].push_back({{"id", entry.id},
                                   {"text", entry.text},
                                   {"created_epoch", entry.created_epoch},
                                   {"last_modified_epoch", entry.last_modified_epoch}});
    }
    return json.dump(2) + "\n";
}

ExperienceLibrary deserialize_library(const std::string& text, std::size_t max_entries) {
    nlohmann::json json = nlohmann::json::parse(text);
    ExperienceLibrary library;
    library.max_entries = max_entries;
    library.version = json.at("version").get<long>();
    library.next_id = json.at("next_id").get<int>();
    for (const auto& item : json.at("entries")) {
        library.entries.push_back({item.at("id").get<int>(), item.at("text").get<std::string>(),
                                   item.at("created_epoch").get<int>(),
                                   item.at("last_modified_epoch").get<int>()});
    }
    return library;
}

void save_library(const ExperienceLibrary& library, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write library: " + path);
    f << serialize_library(library);
}

ExperienceLibrary load_library(const std::string& path, std::size_t max_entries) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read library: " + path);
    std::stringstream buffer;
    buffer << f.rdbuf();
    return deserialize_library(buffer.str(), max_entries);
}

std::string render_experience(const ExperienceLibrary& library) {
    std::string out;
    for (std::size_t i = 0; i < library.entries.size(); ++i) {
        out += std::to_string(i + 1);
        out += ". ";
        out += library.entries[i].text;
        out += "\n";
    }
    return out;
}

const char* to_string(EditOp op) {
    switch (op) {
        case EditOp::Add: return "Add";
        case EditOp::Delete: return "Delete";
        case EditOp::Modify: return "Modify";
        case EditOp::Keep: return "Keep";
    }
    return "Keep";
}

std::optional<EditOp> edit_op_from_string(const std::string& text) {
    if (text == "Add") return EditOp::Add;
    if (text == "Delete") return EditOp::Delete;
    if (text == "Modify") return EditOp::Modify;
    if (text == "Keep") return EditOp::Keep;
    return std::nullopt;
}

namespace {

JudgeVerdict invalid_verdict(const std::string& diagnostic) {
    JudgeVerdict verdict;
    verdict.valid = false;
    verdict.diagnostic = diagnostic;
    return verdict;
}

// The verdict JSON may arrive inside a ``` fence or bare.
std::optional<std::string> extract_json_payload(const std::string& raw) {
    std::size_t fence = raw.find("```");
    if (fence != std::string::npos) {
        std::size_t start = raw.find('\n', fence);
        if (start == std::string::npos) return std::nullopt;
        ++start;
        std::size_t end = raw.find("```", start);
        if (end == std::string::npos) return std::nullopt;
        return raw.substr(start, end - start);
    }
    std::size_t open = raw.find('{');
    std::size_t close = raw.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open)
        return std::nullopt;
    return raw.substr(open, close - open + 1);
}

}  // namespace

JudgeVerdict parse_verdict(const std::string& raw_response, const ExperienceLibrary& library) {
    auto payload = extract_json_payload(raw_response);
    if (!payload) return invalid_verdict("no JSON object found in judge reply");

    nlohmann::json json = nlohmann::json::parse(*payload, nullptr, false);
    if (json.is_discarded()) return invalid_verdict("judge reply is not valid JSON");
    if (!json.is_object() || !json.contains("advantage_text") || !json.contains("edits") ||
        !json["advantage_text"].is_string() || !json["edits"].is_array())
        return invalid_verdict("judge JSON missing advantage_text/edits");

    JudgeVerdict verdict;
    verdict.advantage_text = json["advantage_text"].get<std::string>();
    for (const auto& item : json["edits"]) {
        if (!item.is_object() || !item.contains("op") || !item["op"].is_string())
            return invalid_verdict("edit without string op");
        auto op = edit_op_from_string(item["op"].get<std::string>());
        if (!op) return invalid_verdict("unknown edit op '" + item["op"].get<std::string>() + "'");
        ExperienceEdit edit;
        edit.op = *op;
        if (item.contains("target_id")) {
            if (!item["target_id"].is_number_integer())
                return invalid_verdict("non-integer target_id");
            edit.target_id = item["target_id"].get<int>();
        }
        if (item.contains("text")) {
            if (!item["text"].is_string()) return invalid_verdict("non-string edit text");
            edit.text = item["text"].get<std::string>();
        }
        switch (edit.op) {
            case EditOp::Add:
                if (!edit.text || edit.text->empty())
                    return invalid_verdict("Add without nonempty text");
                if (edit.target_id) return invalid_verdict("Add must not carry target_id");
                break;
            case EditOp::Delete:
                if (!edit.target_id || !library.find(*edit.target_id))
                    return invalid_verdict("Delete references unknown entry id");
                if (edit.text) return invalid_verdict("Delete must not carry text");
                break;
            case EditOp::Modify:
                if (!edit.target_id || !library.find(*edit.target_id))
                    return invalid_verdict("Modify references unknown entry id");
                if (!edit.text || edit.text->empty())
                    return invalid_verdict("Modify without nonempty text");
                break;
            case EditOp::Keep:
                if (edit.target_id || edit.text)
                    return invalid_verdict("Keep must carry neither target_id nor text");
                break;
        }
        verdict.edits.push_back(edit);
    }
    return verdict;
}

ApplyOutcome apply_verdict(const ExperienceLibrary& library, const JudgeVerdict& verdict,
                           int epoch) {
    ApplyOutcome outcome;
    outcome.library = library;
    if (!verdict.valid) return outcome;  // no-op, library untouched

    for (const ExperienceEdit& edit : verdict.edits) {
        bool applied = false;
        switch (edit.op) {
            case EditOp::Keep:
                applied = true;  // identity, version unchanged
                break;
            case EditOp::Add:
                if (outcome.library.entries.size() >= outcome.library.max_entries) {
                    outcome.events.push_back("Add rejected: library at capacity (" +
                                             std::to_string(outcome.library.max_entries) + ")");
                } else {
                    ExperienceEntry entry;
                    entry.id = outcome.library.next_id++;
                    entry.text = *edit.text;
                    entry.created_epoch = epoch;
                    entry.last_modified_epoch = epoch;
                    outcome.library.entries.push_back(std::move(entry));
                    ++outcome.library.version;
                    applied = true;
                }
                break;
            case EditOp::Delete: {
                auto it = std::find_if(outcome.library.entries.begin(),
                                       outcome.library.entries.end(),
                                       [&](const ExperienceEntry& e) { return e.id == *edit.target_id; });
                if (it == outcome.library.entries.end()) {
                    outcome.events.push_back("Delete skipped: id " +
                                             std::to_string(*edit.target_id) + " no longer exists");
                } else {
                    outcome.library.entries.erase(it);
                    ++outcome.library.version;
                    applied = true;
                }
                break;
            }
            case EditOp::Modify: {
                auto it = std::find_if(outcome.library.entries.begin(),
                                       outcome.library.entries.end(),
                                       [&](const ExperienceEntry& e) { return e.id == *edit.target_id; });
                if (it == outcome.library.entries.end()) {
                    outcome.events.push_back("Modify skipped: id " +
                                             std::to_string(*edit.target_id) + " no longer exists");
                } else {
                    it->text = *edit.text;
                    it->last_modified_epoch = epoch;
                    ++outcome.library.version;
                    applied = true;
                }
                break;
            }
        }
        outcome.applied.push_back(applied);
    }
    return outcome;
}

std::string build_judge_prompt(const ContrastivePair& pair, const RolloutRecord& better,
                               const RolloutRecord& worse, const ExperienceLibrary& library,
                               const std::string& task_prompt) {
    auto sketch_block = [](const RolloutRecord& record) {
        if (record.parsed) return serialize(*record.parsed);
        return std::string("(unparseable output)\n") + record.response;
    };
    std::ostringstream out;
    out << "Task prompt: " << task_prompt << "\n\n";
    out << "Two generated 3D sketches were scored by multi-view rendering. Explain why the "
           "better one is better or the worse one is worse in terms of structural integrity, "
           "spatial continuity, or geometric plausibility.\n\n";
    out << "Better sketch (runid " << better.runid << ", reward " << better.reward.value << "):\n"
        << sketch_block(better) << "\n\n";
    out << "Worse sketch (runid " << worse.runid << ", reward " << worse.reward.value << "):\n"
        << sketch_block(worse) << "\n\n";
    out << "Reward gap: " << pair.gap << "\n\n";
    out << "Current experience library:\n";
    if (library.entries.empty()) {
        out << "(empty)\n";
    } else {
        for (const auto& entry : library.entries)
            out << "[" << entry.id << "] " << entry.text << "\n";
    }
    out << "\nReply with a fenced JSON object:\n";
    out << "```json\n"
           "{\"advantage_text\": \"...\", \"edits\": [{\"op\": \"Add|Delete|Modify|Keep\", "
           "\"target_id\": <existing id, Delete/Modify only>, \"text\": \"<principle, "
           "Add/Modify only>\"}]}\n"
           "```\n";
    out << "Edit the library so it captures general drawing principles; prefer concise, "
           "high-level entries.";
    return out.str();
}

JudgeVerdict judge(const ContrastivePair& pair, const RolloutRecord& better,
                   const RolloutRecord& worse, const ExperienceLibrary& library,
                   const std::string& task_prompt, LlmEndpoint& gateway, const LlmConfig& config) {
    const std::string system_prompt =
        "You judge pairs of 3D Bezier sketches and maintain a library of drawing principles.";
    std::string user_prompt = build_judge_prompt(pair, better, worse, library, task_prompt);
    try {
        LlmTranscript transcript = generate(gateway, config, system_prompt, user_prompt);
        return parse_verdict(transcript.raw_response, library);
    } catch (const TransportError& e) {
        JudgeVerdict verdict;
        verdict.valid = false;
        verdict.diagnostic = std::string("judge transport failure: ") + e.what();
        return verdict;
    }
}

Scorer make_proxy_scorer(const ProxyWeights& weights) {
    return [weights](const Sketch& sketch, const std::vector<RenderedView>& views) {
        return score_proxy(sketch, views, weights);
    };
}

Scorer make_service_scorer(const EmbeddingServiceConfig& svc, const PromptTemplate& tmpl,
                           const std::string& prompt) {
    return [svc, tmpl, prompt](const Sketch&, const std::vector<RenderedView>& views) {
        return score_text(views, prompt, tmpl, svc);
    };
}

JsonlWriter::JsonlWriter(const std::string& path) : path_(path), stream_(path, std::ios::app) {
    if (!stream_) throw std::runtime_error("cannot open log for append: " + path);
}

void JsonlWriter::write(const nlohmann::json& line) {
    stream_ << line.dump() << "\n";
    stream_.flush();
    if (!stream_) throw std::runtime_error("write failed: " + path_);
}

int reward_bin(double value) {
    return static_cast<int>(std::floor(value / kRewardBinWidth + 1e-9));
}

RolloutStats rollout_stats(const std::vector<RolloutRecord>& records) {
    if (records.empty()) throw std::invalid_argument("rollout_stats needs at least one record");
    RolloutStats stats;
    std::vector<std::string> sources;
    sources.reserve(records.size());
    for (const RolloutRecord& record : records) {
        double similarity = 0.0;
        if (record.parsed && record.parsed->curve_count() >= 2)
            similarity = pairwise_curve_similarity(*record.parsed);
        stats.similarity_mean_per_rollout.push_back(similarity);
        ++stats.curve_count_histogram[record.curve_count];
        ++stats.reward_histogram[reward_bin(record.reward.value)];
        sources.push_back(record.response);
    }
    stats.bracket_match_rate = bracket_match_rate(sources);
    return stats;
}

nlohmann::json stats_to_json(const RolloutStats& stats) {
    nlohmann::json json;
    json["similarity_mean_per_rollout"] = stats.similarity_mean_per_rollout;
    json["curve_count_histogram"] = nlohmann::json::object();
    for (const auto& [count, n] : stats.curve_count_histogram)
        json["curve_count_histogram"][std::to_string(count)] = n;
    json["reward_histogram"] = nlohmann::json::object();
    for (const auto& [bin, n] : stats.reward_histogram) {
        char key[32];
        std::snprintf(key, sizeof(key), "%.2f", bin * kRewardBinWidth);
        json["reward_histogram"][key] = n;
    }
    json["bracket_match_rate"] = stats.bracket_match_rate;
    return json;
}

nlohmann::json report_to_json(const RunReport& report) {
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& row : report.epochs) {
        nlohmann::json json;
        json["epoch"] = row.epoch;
        json["mean_reward"] = row.mean_reward;
        json["rollouts"] = row.rollouts;
        json["pairs_judged"] = row.pairs_judged;
        json["edits_applied"] = row.edits_applied;
        json["stats"] = stats_to_json(row.stats);
        epochs.push_back(json);
    }
    return nlohmann::json{{"epochs", epochs}};
}

std::vector<RolloutRecord> rollout_group(const std::string& task_prompt, int K,
                                         LlmEndpoint& gateway, const CkeConfig& config,
                                         const std::string& system_prompt,
                                         const ExperienceLibrary& library, const Scorer& scorer,
                                         int epoch, std::int64_t& next_runid,
                                         JsonlWriter* rollout_log) {
    if (K < 2) throw std::invalid_argument("rollout group size K must be >= 2");
    CameraRig rig = default_rig(config.rig_params);
    std::string experience = render_experience(library);

    std::vector<RolloutRecord> group;
    group.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        RolloutRecord record;
        record.runid = next_runid++;
        record.prompt = task_prompt;
        record.epoch = epoch;
        record.group_index = k;
        record.reward = RewardScore::parse_failure();

        bool transport_failed = false;
        bool truncated = false;
        try {
            LlmTranscript transcript =
                generate(gateway, config.llm, system_prompt, task_prompt, experience);
            record.response = transcript.raw_response;
            truncated = transcript.truncated;
        } catch (const TransportError&) {
            transport_failed = true;  // recorded as a zero-reward failure, group continues
        }

        if (!transport_failed && !truncated) {
            auto result = parse(record.response, config.parser_limits);
            if (auto* doc = std::get_if<ParsedDocument>(&result)) {
                record.parsed = doc->sketch;
                record.parse_ok = true;
                record.curve_count = doc->sketch.curve_count();
                auto views = render(doc->sketch, rig, config.render_options);
                record.reward = scorer(doc->sketch, views);
            }
        }
        if (rollout_log) rollout_log->write(rollout_to_json(record));
        group.push_back(std::move(record));
    }
    return group;
}

RunResult run_epochs(const std::vector<std::string>& task_prompts, int epochs,
                     const CkeConfig& config, LlmEndpoint& gateway, LlmEndpoint& judge_gateway,
                     const Scorer& scorer, ExperienceLibrary initial_library) {
    if (task_prompts.empty()) throw std::invalid_argument("run_epochs needs at least one prompt");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");

    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    const std::string library_path = (fs::path(config.out_dir) / "library.json").string();
    JsonlWriter rollout_log((fs::path(config.out_dir) / "rollouts.jsonl").string());
    JsonlWriter verdict_log((fs::path(config.out_dir) / "verdicts.jsonl").string());

    std::string system_prompt = config.system_prompt.empty()
                                    ? build_system_prompt(default_system_prompt_spec())
                                    : config.system_prompt;

    RunResult result;
    result.library = std::move(initial_library);
    result.library.max_entries = config.max_entries;
    save_library(result.library, library_path);

    std::int64_t next_runid = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        RunReport::EpochRow row;
        row.epoch = epoch;
        std::vector<RolloutRecord> epoch_records;

        for (const std::string& prompt : task_prompts) {
            try {
                auto group = rollout_group(prompt, config.K, gateway, config, system_prompt,
                                           result.library, scorer, epoch, next_runid, &rollout_log);
                epoch_records.insert(epoch_records.end(), group.begin(), group.end());

                auto pairs = make_pairs(group, config.delta, config.max_pairs);
                for (const ContrastivePair& pair : pairs) {
                    auto by_runid = [&](std::int64_t id) -> const RolloutRecord& {
                        for (const auto& r : group)
                            if (r.runid == id) return r;
                        throw std::logic_error("pair references unknown runid");
                    };
                    const RolloutRecord& better = by_runid(pair.better);
                    const RolloutRecord& worse = by_runid(pair.worse);

                    JudgeVerdict verdict = judge(pair, better, worse, result.library, prompt,
                                                 judge_gateway, config.llm);
                    ApplyOutcome outcome = apply_verdict(result.library, verdict, epoch);
                    result.library = std::move(outcome.library);
                    save_library(result.library, library_path);

                    nlohmann::json line;
                    line["epoch"] = epoch;
                    line["pair"] = {{"better", pair.better}, {"worse", pair.worse}, {"gap", pair.gap}};
                    line["advantage_text"] = verdict.advantage_text;
                    line["edits"] = edits_to_json(verdict.edits);
                    line["valid"] = verdict.valid;
                    if (!verdict.valid) line["diagnostic"] = verdict.diagnostic;
                    line["applied"] = outcome.applied;
                    line["events"] = outcome.events;
                    verdict_log.write(line);

                    ++row.pairs_judged;
                    for (std::size_t i = 0; i < verdict.edits.size(); ++i)
                        if (outcome.applied[i] && verdict.edits[i].op != EditOp::Keep)
                            ++row.edits_applied;
                }
            } catch (const std::exception& e) {
                std::cerr << "task '" << prompt << "' failed in epoch " << epoch << ": "
                          << e.what() << "\n";
            }
        }

        row.rollouts = epoch_records.size();
        if (!epoch_records.empty()) {
            double sum = 0.0;
            for (const auto& record : epoch_records) sum += record.reward.value;
            row.mean_reward = sum / static_cast<double>(epoch_records.size());
            row.stats = rollout_stats(epoch_records);
        }
        result.report.epochs.push_back(std::move(row));
    }

    std::ofstream report_file(fs::path(config.out_dir) / "report.json", std::ios::trunc);
    report_file << report_to_json(result.report).dump(2) << "\n";
    return result;
}

ExperienceLibrary replay_verdict_log(const std::string& path, std::size_t max_entries) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read verdict log: " + path);
    ExperienceLibrary library;
    library.max_entries = max_entries;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        nlohmann::json json = nlohmann::json::parse(line);
        JudgeVerdict verdict;
        verdict.valid = json.value("valid", true);
        verdict.advantage_text = json.value("advantage_text", "");
        verdict.edits = edits_from_json(json.at("edits"));
        library = apply_verdict(library, verdict, json.at("epoch").get<int>()).library;
    }
    return library;
}

}  // namespace draw3
