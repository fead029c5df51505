// Shared deterministic fixtures for the CKE loop tests: sketches at known
// proxy-score levels and scripted mock responses.
#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "draw3/cke.hpp"
#include "draw3/geometry.hpp"
#include "draw3/llm.hpp"
#include "draw3/sketch_text.hpp"

namespace fixtures {

inline draw3::Point3 mix(const draw3::Point3& a, const draw3::Point3& b, double t) {
    return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, a.z + (b.z - a.z) * t};
}

inline draw3::BezierCurve straight(const draw3::Point3& a, const draw3::Point3& b) {
    return {a, mix(a, b, 1.0 / 3.0), mix(a, b, 2.0 / 3.0), b};
}

// 12-edge axis-aligned box wireframe, full 3D spread. Scores high under the
// proxy reward.
inline draw3::Sketch box_sketch(double half = 0.5) {
    using draw3::Point3;
    auto corner = [half](int i) {
        return Point3{(i & 1) ? half : -half, (i & 2) ? half : -half, (i & 4) ? half : -half};
    };
    const int edges[12][2] = {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {0, 2}, {1, 3},
                              {4, 6}, {5, 7}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
    draw3::Sketch sketch;
    for (const auto& e : edges) sketch.curves.push_back(straight(corner(e[0]), corner(e[1])));
    return sketch;
}

// Same 12 edges flattened onto z = 0.
inline draw3::Sketch flattened_box_sketch(double half = 0.5) {
    draw3::Sketch sketch = box_sketch(half);
    for (auto& c : sketch.curves) {
        c.p0.z = c.p1.z = c.p2.z = c.p3.z = 0.0;
    }
    return sketch;
}

// One short planar stroke: parses fine but scores low.
inline draw3::Sketch sparse_planar_sketch() {
    draw3::Sketch sketch;
    sketch.curves.push_back(straight({-0.2, 0.0, 0.0}, {0.2, 0.0, 0.0}));
    sketch.curves.push_back(straight({-0.2, 0.1, 0.0}, {0.2, 0.1, 0.0}));
    return sketch;
}

inline std::string with_prose(const draw3::Sketch& sketch) {
    return "Here is my plan: outline the object first.\n" + draw3::serialize(sketch) +
           "\nDone.";
}

inline std::string judge_add_verdict(const std::string& principle) {
    nlohmann::json verdict = {
        {"advantage_text", "The better sketch spans all three axes and avoids degenerate curves."},
        {"edits", nlohmann::json::array({{{"op", "Add"}, {"text", principle}}})}};
    return "Analysis follows.\n```json\n" + verdict.dump() + "\n```\n";
}

inline std::string judge_keep_verdict() {
    nlohmann::json verdict = {{"advantage_text", "Existing principles already cover this."},
                              {"edits", nlohmann::json::array({{{"op", "Keep"}}})}};
    return "```json\n" + verdict.dump() + "\n```";
}

// Epoch 0: two malformed responses and three sparse planar sketches.
// Epoch 1: five box wireframes. Later responses are better formed and score
// higher under the proxy reward.
inline std::vector<draw3::MockScriptEntry> improving_generation_script() {
    std::vector<draw3::MockScriptEntry> script;
    script.push_back({"I will draw it now, but here is prose with no curves block.", {}});
    script.push_back({"<curves>[[[0.1,0.1,0.1],[0.2,0.2,0.2]</curves>", {}});  // unbalanced
    for (int i = 0; i < 3; ++i) script.push_back({with_prose(sparse_planar_sketch()), {}});
    for (int i = 0; i < 5; ++i) script.push_back({with_prose(box_sketch()), {}});
    return script;
}

inline std::vector<draw3::MockScriptEntry> judge_script() {
    return {
        {judge_add_verdict("Avoid zero-length curves; control points must not coincide."), {}},
        {judge_add_verdict("Distribute control points across all three axes; never collapse "
                           "the sketch into a single plane."), {}},
        {judge_keep_verdict(), {}},
        {judge_keep_verdict(), {}},
        {judge_keep_verdict(), {}},
        {judge_keep_verdict(), {}},
    };
}

// 200-record rollout log shaped like the reward distribution reported for the
// agent: 30 failed parses at reward 0.0 and 170 successes spread across
// [0.6, 0.7). Bracket matching holds for exactly the 170 successes.
inline std::vector<draw3::RolloutRecord> fig4_records() {
    std::vector<draw3::RolloutRecord> records;
    std::string good = draw3::serialize(box_sketch());
    for (int i = 0; i < 30; ++i) {
        draw3::RolloutRecord r;
        r.runid = i;
        r.prompt = "a chair";
        r.response = "<curves>[[[0.1,0.1,0.1],[0.2,0.2,0.2]</curves>";
        r.reward = draw3::RewardScore::parse_failure();
        records.push_back(r);
    }
    for (int i = 0; i < 170; ++i) {
        draw3::RolloutRecord r;
        r.runid = 30 + i;
        r.prompt = "a chair";
        r.response = good;
        r.parsed = box_sketch();
        r.parse_ok = true;
        r.curve_count = 12;
        r.reward.kind = draw3::RewardKind::EmbeddingText;
        r.reward.value = 0.6 + 0.005 * (i % 17);  // 0.600 .. 0.680
        records.push_back(r);
    }
    return records;
}

inline void write_mock_script_file(const std::string& path) {
    nlohmann::json generation = nlohmann::json::array();
    for (const auto& entry : improving_generation_script())
        generation.push_back({{"response", entry.response}});
    nlohmann::json judge = nlohmann::json::array();
    for (const auto& entry : judge_script()) judge.push_back({{"response", entry.response}});
    std::ofstream f(path, std::ios::trunc);
    f << nlohmann::json{{"generation", generation}, {"judge", judge}}.dump(2) << "\n";
}

}  // namespace fixtures
