#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "draw3/cke.hpp"
#include "draw3/llm.hpp"
#include "draw3/png_io.hpp"
#include "draw3/render.hpp"
#include "draw3/reward.hpp"
#include "draw3/sketch_text.hpp"

namespace fs = std::filesystem;
using namespace draw3;

namespace {

constexpr int kExitParseFailure = 2;
constexpr int kExitServiceFailure = 3;
constexpr int kExitConfigError = 4;

struct CliOptions {
    std::string config_file;
    std::string prompt;
    std::string prompts_file;
    std::string mock_script;
    std::string out_dir = "out";
    std::string scorer = "proxy";  // proxy | service
    std::string sketch_file;
    std::string rollout_log;
    std::string reference_image;
    std::string library_file;
    int curves = 0;  // 0: no budget
    int jobs = 1;
    int epochs = 2;
    int group_size = 5;
    unsigned seed = 0;
    double delta = 0.05;
    double rig_radius = 2.5;
    double temperature_explore = 0.7;
    double temperature_infer = 0.3;
    std::string llm_endpoint;
    std::string llm_model;
    std::string embed_url;
};

nlohmann::json transcript_to_json(const LlmTranscript& transcript, unsigned seed) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : transcript.request)
        messages.push_back({{"role", m.role}, {"content", m.content}});
    return {{"request", messages},
            {"response", transcript.raw_response},
            {"truncated", transcript.truncated},
            {"prompt_tokens", transcript.prompt_tokens},
            {"completion_tokens", transcript.completion_tokens},
            {"latency_ms", transcript.latency_ms},
            {"seed", seed}};
}

nlohmann::json score_to_json(const RewardScore& score) {
    nlohmann::json json{{"value", score.value}, {"kind", to_string(score.kind)}};
    if (score.per_view) json["per_view"] = *score.per_view;
    return json;
}

struct Gateways {
    std::unique_ptr<LlmEndpoint> generation;
    std::unique_ptr<LlmEndpoint> judge;  // may alias generation when null
    LlmEndpoint& judge_or_generation() { return judge ? *judge : *generation; }
};

Gateways make_gateways(const CliOptions& opt) {
    Gateways g;
    if (!opt.mock_script.empty()) {
        MockScriptFile script = load_mock_script(opt.mock_script);
        g.generation = std::make_unique<MockLlmEndpoint>(
            script.generation.empty() ? script.judge : script.generation, script.mode);
        if (!script.judge.empty() && !script.generation.empty())
            g.judge = std::make_unique<MockLlmEndpoint>(script.judge, script.mode);
        return g;
    }
    if (opt.llm_endpoint.empty())
        throw CLI::RuntimeError("either --mock-script or an LLM endpoint is required",
                                kExitConfigError);
    g.generation = std::make_unique<HttpLlmEndpoint>();
    return g;
}

LlmConfig make_llm_config(const CliOptions& opt, double temperature) {
    LlmConfig config;
    config.endpoint = opt.llm_endpoint;
    config.model = opt.llm_model;
    config.temperature = temperature;
    return config;
}

Sketch parse_sketch_file_or_exit(const std::string& path, bool strict) {
    std::ifstream f(path);
    if (!f) throw CLI::RuntimeError("cannot open sketch file: " + path, kExitConfigError);
    std::stringstream buffer;
    buffer << f.rdbuf();
    auto result = parse(buffer.str(), ParserLimits{.strict = strict});
    if (auto* err = std::get_if<ParseError>(&result)) {
        std::cerr << "parse error: " << to_string(err->kind) << " at byte " << err->position
                  << ": " << err->detail << "\n";
        throw CLI::RuntimeError("", kExitParseFailure);
    }
    return std::get<ParsedDocument>(result).sketch;
}

RewardScore score_sketch(const CliOptions& opt, const Sketch& sketch,
                         const std::vector<RenderedView>& views, const std::string& prompt) {
    if (opt.scorer == "service") {
        if (opt.embed_url.empty())
            throw CLI::RuntimeError("--scorer service requires an embedding service URL",
                                    kExitConfigError);
        EmbeddingServiceConfig svc;
        svc.base_url = opt.embed_url;
        return score_text(views, prompt, PromptTemplate{}, svc);
    }
    return score_proxy(sketch, views);
}

void write_views(const std::vector<RenderedView>& views, const fs::path& dir) {
    for (const RenderedView& view : views)
        export_png(view, (dir / view_filename(view.pose_index)).string());
}

int cmd_generate(const CliOptions& opt) {
    if (opt.prompt.empty())
        throw CLI::RuntimeError("generate requires --prompt", kExitConfigError);
    fs::create_directories(opt.out_dir);

    SystemPromptSpec spec = default_system_prompt_spec();
    if (opt.curves > 0) spec.curve_budget = opt.curves;
    std::string system_prompt = build_system_prompt(spec);

    Gateways gateways = make_gateways(opt);
    LlmConfig config = make_llm_config(opt, opt.temperature_infer);

    std::string experience;
    if (!opt.library_file.empty()) experience = render_experience(load_library(opt.library_file));

    // Pass@1: the first attempt is the result.
    LlmTranscript transcript;
    try {
        transcript = generate(*gateways.generation, config, system_prompt, opt.prompt, experience);
    } catch (const TransportError& e) {
        std::cerr << e.what() << "\n";
        return kExitServiceFailure;
    }
    fs::path transcript_path = fs::path(opt.out_dir) / "transcript.json";
    std::ofstream(transcript_path) << transcript_to_json(transcript, opt.seed).dump(2) << "\n";

    auto result = parse(transcript.raw_response, ParserLimits{.strict = true});
    if (auto* err = std::get_if<ParseError>(&result)) {
        std::cerr << "generation failed to parse (" << to_string(err->kind) << " at byte "
                  << err->position << "); transcript: " << transcript_path << "\n";
        return kExitParseFailure;
    }
    const ParsedDocument& doc = std::get<ParsedDocument>(result);
    if (opt.curves > 0 && doc.sketch.curve_count() != static_cast<std::size_t>(opt.curves))
        std::cerr << "warning: curve budget was " << opt.curves << " but sketch has "
                  << doc.sketch.curve_count() << " curves\n";

    std::ofstream(fs::path(opt.out_dir) / "sketch.txt") << serialize(doc.sketch) << "\n";

    RigParams rig_params;
    rig_params.radius = opt.rig_radius;
    RenderOptions render_options;
    render_options.jobs = opt.jobs;
    auto views = render(doc.sketch, default_rig(rig_params), render_options);
    write_views(views, opt.out_dir);

    try {
        RewardScore score = score_sketch(opt, doc.sketch, views, opt.prompt);
        std::ofstream(fs::path(opt.out_dir) / "score.json") << score_to_json(score).dump(2) << "\n";
    } catch (const ServiceError& e) {
        std::cerr << e.what() << "\n";
        return kExitServiceFailure;
    }
    std::cout << "wrote sketch, transcript, score and " << views.size() << " views to "
              << opt.out_dir << "\n";
    return 0;
}

int cmd_extract(const CliOptions& opt) {
    std::vector<std::string> prompts;
    if (!opt.prompts_file.empty()) {
        std::ifstream f(opt.prompts_file);
        if (!f) throw CLI::RuntimeError("cannot open prompt set: " + opt.prompts_file,
                                        kExitConfigError);
        std::string line;
        while (std::getline(f, line))
            if (!line.empty()) prompts.push_back(line);
    }
    if (!opt.prompt.empty()) prompts.push_back(opt.prompt);
    if (prompts.empty())
        throw CLI::RuntimeError("extract requires --prompt or --prompts", kExitConfigError);

    CkeConfig config;
    config.K = opt.group_size;
    config.delta = opt.delta;
    config.llm = make_llm_config(opt, opt.temperature_explore);
    config.rig_params.radius = opt.rig_radius;
    config.render_options.jobs = opt.jobs;
    config.out_dir = opt.out_dir;

    Gateways gateways = make_gateways(opt);
    Scorer scorer;
    if (opt.scorer == "service") {
        if (opt.embed_url.empty())
            throw CLI::RuntimeError("--scorer service requires an embedding service URL",
                                    kExitConfigError);
        EmbeddingServiceConfig svc;
        svc.base_url = opt.embed_url;
        scorer = make_service_scorer(svc, PromptTemplate{}, prompts.front());
    } else {
        scorer = make_proxy_scorer();
    }

    ExperienceLibrary initial;
    if (!opt.library_file.empty()) initial = load_library(opt.library_file);

    try {
        RunResult result = run_epochs(prompts, opt.epochs, config, *gateways.generation,
                                      gateways.judge_or_generation(), scorer, std::move(initial));
        std::cout << "library: " << result.library.entries.size() << " entries, version "
                  << result.library.version << "; outputs in " << opt.out_dir << "\n";
    } catch (const ServiceError& e) {
        std::cerr << e.what() << "\n";
        return kExitServiceFailure;
    }
    return 0;
}

int cmd_render(const CliOptions& opt) {
    Sketch sketch = parse_sketch_file_or_exit(opt.sketch_file, false);
    fs::create_directories(opt.out_dir);
    RigParams rig_params;
    rig_params.radius = opt.rig_radius;
    RenderOptions render_options;
    render_options.jobs = opt.jobs;
    auto views = render(sketch, default_rig(rig_params), render_options);
    write_views(views, opt.out_dir);
    std::cout << "wrote " << views.size() << " views to " << opt.out_dir << "\n";
    return 0;
}

int cmd_score(const CliOptions& opt) {
    Sketch sketch = parse_sketch_file_or_exit(opt.sketch_file, false);
    RigParams rig_params;
    rig_params.radius = opt.rig_radius;
    RenderOptions render_options;
    render_options.jobs = opt.jobs;
    auto views = render(sketch, default_rig(rig_params), render_options);
    try {
        RewardScore score = score_sketch(opt, sketch, views, opt.prompt);
        std::cout << score_to_json(score).dump(2) << "\n";
    } catch (const ServiceError& e) {
        std::cerr << e.what() << "\n";
        return kExitServiceFailure;
    }
    return 0;
}

int cmd_stats(const CliOptions& opt) {
    std::ifstream f(opt.rollout_log);
    if (!f) throw CLI::RuntimeError("cannot open rollout log: " + opt.rollout_log,
                                    kExitConfigError);
    std::vector<RolloutRecord> records;
    std::string line;
    while (std::getline(f, line))
        if (!line.empty()) records.push_back(rollout_from_json(nlohmann::json::parse(line)));
    if (records.empty())
        throw CLI::RuntimeError("rollout log is empty: " + opt.rollout_log, kExitConfigError);
    std::cout << stats_to_json(rollout_stats(records)).dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Text-to-3D Bezier sketch agent: generation, experience extraction, "
                 "rendering, scoring and rollout statistics"};
    app.require_subcommand(1);

    CliOptions opt;
    app.set_config("--config", "", "TOML/INI config file");
    app.add_option("--llm-endpoint", opt.llm_endpoint, "chat-completion base URL");
    app.add_option("--llm-model", opt.llm_model, "model identifier");
    app.add_option("--embed-url", opt.embed_url, "embedding service base URL");
    app.add_option("--mock-script", opt.mock_script, "scripted mock LLM (JSON)");
    app.add_option("--scorer", opt.scorer, "reward source")
        ->check(CLI::IsMember({"proxy", "service"}));
    app.add_option("--seed", opt.seed, "run seed, recorded in outputs");
    app.add_option("--jobs", opt.jobs, "parallel render workers / network fan-out bound")
        ->check(CLI::PositiveNumber);
    app.add_option("--out", opt.out_dir, "output directory");
    app.add_option("--rig-radius", opt.rig_radius, "camera ring radius");
    app.add_option("--library", opt.library_file, "experience library JSON to load");

    auto* gen = app.add_subcommand("generate", "one Pass@1 generation (temperature 0.3)");
    gen->add_option("--prompt", opt.prompt, "text prompt")->required();
    gen->add_option("--curves", opt.curves, "curve budget directive");

    auto* extract = app.add_subcommand("extract", "contrastive experience extraction");
    extract->add_option("--prompt", opt.prompt, "single task prompt");
    extract->add_option("--prompts", opt.prompts_file, "prompt set, one per line");
    extract->add_option("--epochs", opt.epochs, "number of epochs")->check(CLI::PositiveNumber);
    extract->add_option("--group-size", opt.group_size, "candidates per group (K)");
    extract->add_option("--delta", opt.delta, "pairing gap threshold");

    auto* render_cmd = app.add_subcommand("render", "render a sketch file to 16 views");
    render_cmd->add_option("sketch", opt.sketch_file, "sketch text file")->required();

    auto* score_cmd = app.add_subcommand("score", "score a sketch file");
    score_cmd->add_option("sketch", opt.sketch_file, "sketch text file")->required();
    score_cmd->add_option("--prompt", opt.prompt, "text prompt for the reward");

    auto* stats_cmd = app.add_subcommand("stats", "statistics over a rollout log");
    stats_cmd->add_option("log", opt.rollout_log, "rollout JSONL file")->required();

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return cmd_generate(opt);
        if (extract->parsed()) return cmd_extract(opt);
        if (render_cmd->parsed()) return cmd_render(opt);
        if (score_cmd->parsed()) return cmd_score(opt);
        if (stats_cmd->parsed()) return cmd_stats(opt);
    } catch (const CLI::RuntimeError& e) {
        if (*e.what()) std::cerr << e.what() << "\n";
        return e.get_exit_code();
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
    return kExitConfigError;
}
