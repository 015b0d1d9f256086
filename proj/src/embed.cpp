#include "corpusmap/embed.hpp"

#include <future>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "corpusmap/http_util.hpp"
#include "corpusmap/text.hpp"

namespace corpusmap::embed {

namespace {

void add_feature(Vector& v, std::string_view feature, double weight)
{
    const std::uint64_t h = text::fnv1a64(feature);
    const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
    v[h % v.size()] += sign * weight;
}

}  // namespace

Vector hash_embed(std::string_view text, int dim)
{
    if (dim < 2) fail(ErrorCode::invalid_argument, "hash_embed: dimension must be at least 2");
    Vector v(static_cast<std::size_t>(dim), 0.0);
    const auto tokens = text::tokenize(text);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        add_feature(v, tokens[i], 1.0);
        if (i + 1 < tokens.size()) add_feature(v, tokens[i] + " " + tokens[i + 1], 0.5);
    }
    const double n = l2_norm(std::span<const double>(v));
    if (n == 0.0) {
        // No tokens, or contributions cancelled exactly.
        std::fill(v.begin(), v.end(), 0.0);
        v[0] = 1.0;
        return v;
    }
    for (double& x : v) x /= n;
    return v;
}

HashEmbedder::HashEmbedder(int dim) : dim_(dim)
{
    if (dim < 2) fail(ErrorCode::invalid_argument, "HashEmbedder: dimension must be at least 2");
}

std::vector<Vector> HashEmbedder::embed(std::span<const std::string> texts) const
{
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(hash_embed(t, dim_));
    return out;
}

RemoteEmbedder::RemoteEmbedder(RemoteEndpoint endpoint, int dim, int batch_size, int max_in_flight,
                               RetryPolicy retry)
    : endpoint_(std::move(endpoint)),
      dim_(dim),
      batch_size_(std::max(1, batch_size)),
      max_in_flight_(std::max(1, max_in_flight)),
      retry_(retry)
{
    if (endpoint_.url.empty()) fail(ErrorCode::invalid_argument, "RemoteEmbedder: endpoint URL is empty");
}

std::vector<Vector> RemoteEmbedder::embed_batch(std::span<const std::string> texts) const
{
    const UrlParts url = split_url(endpoint_.url);
    const nlohmann::json body{{"model", endpoint_.model},
                              {"inputs", std::vector<std::string>(texts.begin(), texts.end())}};
    const std::string payload = body.dump();

    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt < retry_.attempts; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(retry_.base_delay * (1 << (attempt - 1)));
        httplib::Client client(url.base);
        client.set_connection_timeout(endpoint_.timeout_seconds, 0);
        client.set_read_timeout(endpoint_.timeout_seconds, 0);
        auto res = client.Post(url.path, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP status " + std::to_string(res->status);
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(res->body);
            const auto& rows = j.at("vectors");
            if (!rows.is_array() || rows.size() != texts.size()) {
                last_error = "response vector count does not match request";
                continue;
            }
            std::vector<Vector> out;
            out.reserve(rows.size());
            for (const auto& row : rows) {
                auto v = row.get<Vector>();
                if (static_cast<int>(v.size()) != dim_) fail(ErrorCode::invalid_argument, "dimension mismatch");
                out.push_back(normalize(v));
            }
            return out;
        } catch (const std::exception& e) {
            last_error = std::string("malformed response: ") + e.what();
        }
    }
    fail(ErrorCode::provider_unavailable, "embedding service failed after retries: " + last_error);
}

std::vector<Vector> RemoteEmbedder::embed(std::span<const std::string> texts) const
{
    struct Batch {
        std::size_t begin;
        std::size_t end;
    };
    std::vector<Batch> batches;
    for (std::size_t b = 0; b < texts.size(); b += static_cast<std::size_t>(batch_size_)) {
        batches.push_back({b, std::min(texts.size(), b + static_cast<std::size_t>(batch_size_))});
    }

    std::vector<Vector> out(texts.size());
    std::vector<std::size_t> failed;
    std::string first_error;
    for (std::size_t wave = 0; wave < batches.size(); wave += static_cast<std::size_t>(max_in_flight_)) {
        const std::size_t wave_end = std::min(batches.size(), wave + static_cast<std::size_t>(max_in_flight_));
        std::vector<std::future<std::vector<Vector>>> inflight;
        for (std::size_t b = wave; b < wave_end; ++b) {
            inflight.push_back(std::async(std::launch::async, [this, texts, batch = batches[b]] {
                return embed_batch(texts.subspan(batch.begin, batch.end - batch.begin));
            }));
        }
        for (std::size_t b = wave; b < wave_end; ++b) {
            try {
                auto vectors = inflight[b - wave].get();
                std::move(vectors.begin(), vectors.end(), out.begin() + static_cast<std::ptrdiff_t>(batches[b].begin));
            } catch (const Error& e) {
                if (first_error.empty()) first_error = e.what();
                for (std::size_t i = batches[b].begin; i < batches[b].end; ++i) failed.push_back(i);
            }
        }
    }
    if (!failed.empty()) throw ProviderFailure(first_error, std::move(failed));
    return out;
}

std::unique_ptr<EmbeddingProvider> make_provider(const EngineConfig& cfg)
{
    if (cfg.embedder.url.empty()) return std::make_unique<HashEmbedder>(cfg.embedding_dim);
    return std::make_unique<RemoteEmbedder>(cfg.embedder, cfg.embedding_dim, cfg.embed_batch_size,
                                            cfg.embed_max_in_flight);
}

std::string document_text(const Document& d)
{
    return d.title + " " + d.body;
}

namespace {

template <typename Item, typename TextOf, typename IdOf>
std::vector<Embedding> embed_items(const std::vector<Item>& items, const EmbeddingProvider& provider,
                                   TextOf text_of, IdOf id_of)
{
    std::vector<std::string> texts;
    texts.reserve(items.size());
    for (const auto& it : items) texts.push_back(text_of(it));
    std::vector<Vector> vectors;
    try {
        vectors = provider.embed(texts);
    } catch (const ProviderFailure& e) {
        std::string ids;
        for (std::size_t i : e.failed_indices()) {
            if (!ids.empty()) ids += ", ";
            ids += id_of(items[i]);
        }
        fail(ErrorCode::provider_unavailable, std::string(e.what()) + " (failed: " + ids + ")", ids);
    }
    std::vector<Embedding> out;
    out.reserve(vectors.size());
    for (const auto& v : vectors) out.push_back(to_embedding(v));
    return out;
}

}  // namespace

std::vector<Embedding> embed_documents(const std::vector<Document>& docs, const EmbeddingProvider& provider)
{
    return embed_items(docs, provider, document_text, [](const Document& d) { return d.doc_id; });
}

std::vector<Embedding> embed_sentences(const std::vector<SentenceChunk>& chunks, const EmbeddingProvider& provider)
{
    return embed_items(
        chunks, provider, [](const SentenceChunk& c) { return c.text; },
        [](const SentenceChunk& c) { return c.doc_id + "#" + std::to_string(c.seq); });
}

}  // namespace corpusmap::embed
