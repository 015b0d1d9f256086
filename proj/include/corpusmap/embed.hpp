#pragma once

#include <chrono>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corpusmap/config.hpp"
#include "corpusmap/error.hpp"
#include "corpusmap/types.hpp"

namespace corpusmap::embed {

/// Deterministic feature-hashing embedding: signed unigram hits at weight 1,
/// bigram hits at weight 0.5, L2-normalized. Text without tokens maps to
/// (1, 0, ..., 0).
Vector hash_embed(std::string_view text, int dim);

/// Thrown by providers when some inputs could not be embedded.
class ProviderFailure : public Error {
public:
    ProviderFailure(const std::string& message, std::vector<std::size_t> failed)
        : Error(ErrorCode::provider_unavailable, message), failed_(std::move(failed))
    {}
    const std::vector<std::size_t>& failed_indices() const noexcept { return failed_; }

private:
    std::vector<std::size_t> failed_;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual int dimension() const = 0;
    virtual std::string_view kind() const = 0;
    /// One unit vector per input, order-aligned.
    virtual std::vector<Vector> embed(std::span<const std::string> texts) const = 0;
};

class HashEmbedder final : public EmbeddingProvider {
public:
    explicit HashEmbedder(int dim);
    int dimension() const override { return dim_; }
    std::string_view kind() const override { return "hash"; }
    std::vector<Vector> embed(std::span<const std::string> texts) const override;

private:
    int dim_;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds base_delay{500};
};

/// Client for an embedding service speaking
///   POST {"model": ..., "inputs": [...]}  ->  {"vectors": [[...], ...]}
/// Responses are normalized client-side.
class RemoteEmbedder final : public EmbeddingProvider {
public:
    RemoteEmbedder(RemoteEndpoint endpoint, int dim, int batch_size, int max_in_flight, RetryPolicy retry = {});
    int dimension() const override { return dim_; }
    std::string_view kind() const override { return "remote"; }
    std::vector<Vector> embed(std::span<const std::string> texts) const override;

private:
    std::vector<Vector> embed_batch(std::span<const std::string> texts) const;

    RemoteEndpoint endpoint_;
    int dim_;
    int batch_size_;
    int max_in_flight_;
    RetryPolicy retry_;
};

std::unique_ptr<EmbeddingProvider> make_provider(const EngineConfig& cfg);

std::vector<Embedding> embed_documents(const std::vector<Document>& docs, const EmbeddingProvider& provider);
std::vector<Embedding> embed_sentences(const std::vector<SentenceChunk>& chunks, const EmbeddingProvider& provider);

/// Text a document is embedded from.
std::string document_text(const Document& d);

}  // namespace corpusmap::embed
