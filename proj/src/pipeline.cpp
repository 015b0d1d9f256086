#include "corpusmap/pipeline.hpp"

#include "corpusmap/atlas.hpp"
#include "corpusmap/error.hpp"
#include "corpusmap/topics.hpp"

namespace corpusmap::pipeline {

index::Snapshot build_snapshot(std::vector<Document> docs, ingest::CorpusStats stats, const EngineConfig& cfg,
                               const embed::EmbeddingProvider& embedder, const llm::LlmProvider& llm,
                               const Progress& progress)
{
    cfg.validate();
    if (docs.empty()) fail(ErrorCode::empty_corpus, "nothing to build: the corpus is empty");
    if (embedder.dimension() != cfg.embedding_dim) {
        fail(ErrorCode::invalid_argument, "embedding provider dimension differs from embedding_dim");
    }
    auto note = [&](std::string_view msg) {
        if (progress) progress(msg);
    };

    index::Snapshot snap;
    snap.config = cfg;

    note("embedding documents");
    auto doc_vectors = embed::embed_documents(docs, embedder);
    for (std::size_t i = 0; i < docs.size(); ++i) docs[i].embedding = std::move(doc_vectors[i]);

    note("embedding sentences");
    snap.sentences = ingest::chunk_documents(docs);
    auto sentence_vectors = embed::embed_sentences(snap.sentences, embedder);

    note("clustering intervals");
    const auto partitions = ingest::partition_intervals(docs, cfg.interval_days);
    for (const auto& p : partitions) {
        auto model = topics::cluster_interval(p.interval, docs, p.members, cfg);
        topics::describe_topics(model.topics, model.members, docs, llm, static_cast<std::size_t>(cfg.top_n_keywords));
        snap.intervals.push_back(std::move(model));
    }

    note("merging topics");
    const atlas::AtlasContext ctx{docs, llm, static_cast<std::size_t>(cfg.top_n_keywords)};
    snap.atlas = atlas::merge_models(snap.intervals, cfg.merge_threshold, ctx);
    atlas::build_hierarchy(snap.atlas, cfg.hierarchy_thresholds, ctx);

    note("laying out the map");
    atlas::LayoutOptions layout;
    layout.refine = cfg.layout_refine;
    layout.refine_options = {cfg.refine_iterations, cfg.refine_neighbors, cfg.rng_seed};
    atlas::layout_atlas(snap.atlas, docs, layout);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const std::string& t = snap.atlas.doc_assignments[i];
        docs[i].topic_id = t.empty() ? std::nullopt : std::optional<std::string>(t);
        docs[i].coords = snap.atlas.doc_coords[i];
    }

    note("indexing");
    snap.lexical = index::LexicalIndex::build(docs);
    snap.doc_vectors = index::VectorIndex(cfg.embedding_dim);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        snap.doc_vectors.add({docs[i].doc_id, 0, static_cast<std::uint32_t>(i)}, docs[i].embedding);
    }
    std::unordered_map<std::string, std::uint32_t> position;
    for (std::size_t i = 0; i < docs.size(); ++i) position[docs[i].doc_id] = static_cast<std::uint32_t>(i);
    snap.sentence_vectors = index::VectorIndex(cfg.embedding_dim);
    for (std::size_t i = 0; i < snap.sentences.size(); ++i) {
        const auto& s = snap.sentences[i];
        snap.sentence_vectors.add({s.doc_id, s.seq, position.at(s.doc_id)}, sentence_vectors[i]);
    }

    stats.doc_count = docs.size();
    stats.sentence_count = snap.sentences.size();
    stats.interval_count = ingest::interval_count(stats.min_date, stats.max_date, cfg.interval_days);
    snap.stats = stats;
    snap.docs = std::move(docs);
    return snap;
}

}  // namespace corpusmap::pipeline
