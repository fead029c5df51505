#include "draw3/reward.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "draw3/base64.hpp"
#include "draw3/png_io.hpp"

namespace draw3 {
namespace {

std::atomic<long> g_request_count{0};

void require_16_views(const std::vector<RenderedView>& views) {
    if (views.size() != kViewCount)
        throw std::invalid_argument("scoring requires exactly 16 rendered views");
}

double mean(const std::vector<double>& values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

}  // namespace

const char* to_string(RewardKind kind) {
    switch (kind) {
        case RewardKind::EmbeddingText: return "embedding_text";
        case RewardKind::EmbeddingImage: return "embedding_image";
        case RewardKind::Proxy: return "proxy";
        case RewardKind::ParseFailure: return "parse_failure";
    }
    return "unknown";
}

std::string PromptTemplate::render(const std::string& category) const {
    std::size_t slot = pattern.find("{C}");
    if (slot == std::string::npos || pattern.find("{C}", slot + 1) != std::string::npos)
        throw std::invalid_argument("prompt template must contain exactly one {C} slot");
    std::string out = pattern;
    out.replace(slot, 3, category);
    return out;
}

EmbeddingClient::EmbeddingClient(EmbeddingServiceConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty())
        throw std::invalid_argument("embedding service base_url must be non-empty");
}

long EmbeddingClient::request_count() { return g_request_count.load(); }

std::vector<double> EmbeddingClient::post_embed(const std::string& route,
                                                const std::string& body) const {
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        httplib::Client client(config_.base_url);
        client.set_read_timeout(static_cast<time_t>(config_.timeout_s),
                                static_cast<time_t>(config_.timeout_s * 1e6) % 1000000);
        client.set_connection_timeout(static_cast<time_t>(config_.timeout_s), 0);
        if (const char* key = std::getenv(config_.api_key_env.c_str()))
            client.set_default_headers({{"Authorization", std::string("Bearer ") + key}});
        ++g_request_count;
        auto res = client.Post(route, body, "application/json");
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
            return json.at("vector").get<std::vector<double>>();
        } catch (const std::exception& e) {
            last_error = std::string("bad response body: ") + e.what();
        }
    }
    throw ServiceError("embedding service " + route + " failed after " +
                       std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
}

std::vector<double> EmbeddingClient::embed_text(const std::string& text) const {
    return post_embed("/embed_text", nlohmann::json{{"text", text}}.dump());
}

std::vector<double> EmbeddingClient::embed_image(const std::vector<std::uint8_t>& png_bytes) const {
    return post_embed("/embed_image", nlohmann::json{{"png_base64", base64_encode(png_bytes)}}.dump());
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty())
        throw ServiceError("embedding dimension mismatch: " + std::to_string(a.size()) + " vs " +
                           std::to_string(b.size()));
    double num = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw ServiceError("zero-norm embedding vector");
    return num / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

RewardScore score_against(const std::vector<RenderedView>& views,
                          const std::vector<double>& reference, RewardKind kind,
                          const EmbeddingClient& client) {
    std::vector<double> per_view;
    per_view.reserve(views.size());
    for (const RenderedView& view : views) {
        auto image_vec = client.embed_image(encode_png(quantize(view)));
        per_view.push_back(cosine_similarity(image_vec, reference));
    }
    RewardScore score;
    score.kind = kind;
    score.value = mean(per_view);
    score.per_view = std::move(per_view);
    return score;
}

}  // namespace

RewardScore score_text(const std::vector<RenderedView>& views, const std::string& prompt,
                       const PromptTemplate& tmpl, const EmbeddingServiceConfig& svc) {
    require_16_views(views);
    EmbeddingClient client(svc);
    auto text_vec = client.embed_text(tmpl.render(prompt));
    return score_against(views, text_vec, RewardKind::EmbeddingText, client);
}

RewardScore score_image(const std::vector<RenderedView>& views,
                        const std::vector<std::uint8_t>& reference_png,
                        const EmbeddingServiceConfig& svc) {
    require_16_views(views);
    EmbeddingClient client(svc);
    auto ref_vec = client.embed_image(reference_png);
    return score_against(views, ref_vec, RewardKind::EmbeddingImage, client);
}

RewardScore score_proxy(const Sketch& sketch, const std::vector<RenderedView>& views,
                        const ProxyWeights& weights) {
    require_16_views(views);
    RewardScore score;
    score.kind = RewardKind::Proxy;
    if (sketch.empty()) return score;  // all terms zero

    double coverage = 0.0;
    for (const RenderedView& view : views)
        coverage += std::min(1.0, static_cast<double>(inked_pixel_count(view)) / weights.target_inked);
    coverage /= static_cast<double>(views.size());

    std::size_t degenerate = 0;
    for (const BezierCurve& curve : sketch.curves)
        if (is_degenerate(curve, weights.degeneracy_epsilon)) ++degenerate;
    double degeneracy_term =
        1.0 - static_cast<double>(degenerate) / static_cast<double>(sketch.curve_count());

    // Per-axis stddev of every control point; the smallest axis catches
    // planar collapse.
    Point3 sum{}, sum_sq{};
    double n = 0.0;
    for (const BezierCurve& curve : sketch.curves) {
        for (int i = 0; i < 4; ++i) {
            const Point3& p = curve.control(i);
            sum = sum + p;
            sum_sq = sum_sq + Point3{p.x * p.x, p.y * p.y, p.z * p.z};
            n += 1.0;
        }
    }
    auto axis_std = [&](double s, double sq) {
        double var = sq / n - (s / n) * (s / n);
        return std::sqrt(std::max(0.0, var));
    };
    double min_std = std::min({axis_std(sum.x, sum_sq.x), axis_std(sum.y, sum_sq.y),
                               axis_std(sum.z, sum_sq.z)});
    double spread = std::min(1.0, min_std / weights.spread_saturation);

    score.value = weights.coverage * coverage + weights.degeneracy * degeneracy_term +
                  weights.spread * spread;
    return score;
}

}  // namespace draw3
