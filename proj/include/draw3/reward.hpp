#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "draw3/geometry.hpp"
#include "draw3/render.hpp"

namespace draw3 {

enum class RewardKind { EmbeddingText, EmbeddingImage, Proxy, ParseFailure };

const char* to_string(RewardKind kind);

struct RewardScore {
    double value = 0.0;
    RewardKind kind = RewardKind::Proxy;
    std::optional<std::vector<double>> per_view;

    // Failed parses score exactly zero.
    static RewardScore parse_failure() { return {0.0, RewardKind::ParseFailure, std::nullopt}; }
};

// One {C} slot, substituted with the object category / prompt text.
struct PromptTemplate {
    std::string pattern = "{C}, minimal 2d line drawing, on a white background, black and white.";

    std::string render(const std::string& category) const;
};

struct EmbeddingServiceConfig {
    std::string base_url;  // e.g. http://localhost:8321
    double timeout_s = 30.0;
    int max_retries = 2;
    std::string api_key_env = "EMBED_API_KEY";
};

struct ServiceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// JSON-over-HTTP embedding client. POST /embed_text {"text":...} and
// POST /embed_image {"png_base64":...}, both answering {"vector":[...]}.
class EmbeddingClient {
public:
    explicit EmbeddingClient(EmbeddingServiceConfig config);

    std::vector<double> embed_text(const std::string& text) const;
    std::vector<double> embed_image(const std::vector<std::uint8_t>& png_bytes) const;

    // Total HTTP requests issued by all clients in this process. The offline
    // code paths are asserted to leave this untouched.
    static long request_count();

private:
    std::vector<double> post_embed(const std::string& route, const std::string& body) const;

    EmbeddingServiceConfig config_;
};

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

RewardScore score_text(const std::vector<RenderedView>& views, const std::string& prompt,
                       const PromptTemplate& tmpl, const EmbeddingServiceConfig& svc);

RewardScore score_image(const std::vector<RenderedView>& views,
                        const std::vector<std::uint8_t>& reference_png,
                        const EmbeddingServiceConfig& svc);

struct ProxyWeights {
    double coverage = 0.4;
    double degeneracy = 0.4;
    double spread = 0.2;
    double target_inked = 2000.0;     // per-view pixel count at which coverage saturates
    double degeneracy_epsilon = kDefaultDegeneracyEpsilon;
    double spread_saturation = 0.25;  // min-axis stddev at which spread saturates
};

// Deterministic offline reward. Rewards ink coverage, non-degenerate curves
// and genuinely 3D control-point spread (the min-axis stddev term goes to
// zero on planar collapse).
RewardScore score_proxy(const Sketch& sketch, const std::vector<RenderedView>& views,
                        const ProxyWeights& weights = {});

}  // namespace draw3
