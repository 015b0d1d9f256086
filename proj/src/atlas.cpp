#include "corpusmap/atlas.hpp"

#include <algorithm>
#include <numeric>

#include "corpusmap/error.hpp"

namespace corpusmap::atlas {

std::size_t MergedAtlas::leaf_count() const
{
    return static_cast<std::size_t>(std::count_if(topics.begin(), topics.end(),
                                                  [](const Topic& t) { return t.level == 0 && !t.is_outlier(); }));
}

const Topic* MergedAtlas::find(std::string_view topic_id) const
{
    for (const auto& t : topics) {
        if (t.topic_id == topic_id) return &t;
    }
    return nullptr;
}

namespace {

void union_sorted(std::vector<std::int32_t>& into, const std::vector<std::int32_t>& from)
{
    std::vector<std::int32_t> out;
    std::set_union(into.begin(), into.end(), from.begin(), from.end(), std::back_inserter(out));
    into = std::move(out);
}

std::vector<std::size_t> sorted_union(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b)
{
    std::vector<std::size_t> out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

std::string leaf_id(std::size_t k) { return "t" + std::to_string(k); }

std::string parent_id(int level, std::size_t k)
{
    return "L" + std::to_string(level) + "." + std::to_string(k);
}

// Leaf pool plus gathered outliers; the working state of a merge.
struct Pool {
    std::vector<Topic> topics;
    std::vector<std::vector<std::size_t>> members;
    std::vector<std::size_t> outliers;
    std::vector<std::int32_t> outlier_intervals;
};

Pool pool_from(const MergedAtlas& atlas)
{
    Pool pool;
    for (std::size_t i = 0; i < atlas.topics.size(); ++i) {
        const Topic& t = atlas.topics[i];
        if (t.level != 0) continue;
        if (t.is_outlier()) {
            pool.outliers = atlas.members[i];
            pool.outlier_intervals = t.source_intervals;
        } else {
            pool.topics.push_back(t);
            pool.members.push_back(atlas.members[i]);
        }
    }
    return pool;
}

void absorb_models(Pool& pool, std::vector<MergeDecision>& log, const std::vector<topics::IntervalModel>& models,
                   double merge_threshold, const std::vector<Document>& docs)
{
    std::vector<const topics::IntervalModel*> order;
    for (const auto& m : models) order.push_back(&m);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto* a, const auto* b) { return a->interval.id < b->interval.id; });

    for (const topics::IntervalModel* model : order) {
        for (std::size_t k = 0; k < model->topics.size(); ++k) {
            const Topic& incoming = model->topics[k];
            std::size_t best = pool.topics.size();
            double best_sim = 0.0;
            for (std::size_t j = 0; j < pool.topics.size(); ++j) {
                const double s = cosine_similarity(pool.topics[j].centroid, incoming.centroid);
                if (best == pool.topics.size() || s > best_sim) {
                    best = j;
                    best_sim = s;
                }
            }
            if (best < pool.topics.size() && best_sim >= merge_threshold) {
                Topic& target = pool.topics[best];
                pool.members[best] = sorted_union(pool.members[best], model->members[k]);
                target.centroid = topics::centroid_of(docs, pool.members[best]);
                target.size += incoming.size;
                union_sorted(target.source_intervals, incoming.source_intervals);
                log.push_back({incoming.topic_id, target.topic_id, best_sim, true});
            } else {
                Topic t;
                t.topic_id = leaf_id(pool.topics.size());
                t.centroid = incoming.centroid;
                t.size = incoming.size;
                t.level = 0;
                t.source_intervals = incoming.source_intervals;
                log.push_back({incoming.topic_id, t.topic_id, best_sim, false});
                pool.topics.push_back(std::move(t));
                pool.members.push_back(model->members[k]);
            }
        }
        if (!model->outliers.empty()) {
            pool.outliers = sorted_union(pool.outliers, model->outliers);
            union_sorted(pool.outlier_intervals, {model->interval.id});
        }
    }
}

void finalize(MergedAtlas& atlas, Pool pool, const AtlasContext& ctx)
{
    topics::describe_topics(pool.topics, pool.members, ctx.docs, ctx.llm, ctx.top_n_keywords);
    atlas.topics = std::move(pool.topics);
    atlas.members = std::move(pool.members);
    if (!pool.outliers.empty()) {
        Topic out;
        out.topic_id = std::string(kOutlierTopicId);
        out.centroid = topics::centroid_of(ctx.docs, pool.outliers);
        out.label = "Outliers";
        out.description = "Documents not assigned to any topic";
        out.size = pool.outliers.size();
        out.level = 0;
        out.source_intervals = std::move(pool.outlier_intervals);
        atlas.topics.push_back(std::move(out));
        atlas.members.push_back(std::move(pool.outliers));
    }
    atlas.doc_assignments.assign(ctx.docs.size(), std::string());
    for (std::size_t i = 0; i < atlas.topics.size(); ++i) {
        for (std::size_t m : atlas.members[i]) atlas.doc_assignments[m] = atlas.topics[i].topic_id;
    }
    atlas.doc_coords.clear();
}

class DisjointSet {
public:
    explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
    std::size_t find(std::size_t x)
    {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

// Rounds through a float in memory. GCC 11 at -O3 folds the plain
// double -> float -> double round trip away.
double to_f32(double v)
{
    volatile float f = static_cast<float>(v);
    return f;
}

}  // namespace

MergedAtlas merge_models(const std::vector<topics::IntervalModel>& models, double merge_threshold,
                         const AtlasContext& ctx)
{
    MergedAtlas atlas;
    merge_into(atlas, models, merge_threshold, ctx);
    return atlas;
}

void merge_into(MergedAtlas& atlas, const std::vector<topics::IntervalModel>& models, double merge_threshold,
                const AtlasContext& ctx)
{
    if (models.empty()) return;
    if (merge_threshold <= 0.0 || merge_threshold > 1.0) {
        fail(ErrorCode::invalid_argument, "merge_models: threshold must lie in (0, 1]");
    }
    Pool pool = pool_from(atlas);
    absorb_models(pool, atlas.merge_log, models, merge_threshold, ctx.docs);
    finalize(atlas, std::move(pool), ctx);
}

void build_hierarchy(MergedAtlas& atlas, const std::vector<double>& thresholds, const AtlasContext& ctx)
{
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > 0.0 && thresholds[i] < 1.0)) {
            fail(ErrorCode::invalid_argument, "build_hierarchy: thresholds must lie in (0, 1)");
        }
        if (i > 0 && !(thresholds[i] < thresholds[i - 1])) {
            fail(ErrorCode::invalid_argument, "build_hierarchy: thresholds must be strictly descending");
        }
    }

    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < atlas.topics.size(); ++i) {
        if (atlas.topics[i].level == 0 && !atlas.topics[i].is_outlier()) current.push_back(i);
    }

    for (std::size_t lvl = 0; lvl < thresholds.size() && !current.empty(); ++lvl) {
        const int level = static_cast<int>(lvl) + 1;
        const std::size_t n = current.size();
        DisjointSet sets(n);
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                const double s = cosine_similarity(atlas.topics[current[a]].centroid, atlas.topics[current[b]].centroid);
                if (s >= thresholds[lvl]) sets.unite(a, b);
            }
        }
        // Components in order of their first node.
        std::vector<std::vector<std::size_t>> components;
        std::vector<std::size_t> slot(n, n);
        for (std::size_t a = 0; a < n; ++a) {
            const std::size_t root = sets.find(a);
            if (slot[root] == n) {
                slot[root] = components.size();
                components.emplace_back();
            }
            components[slot[root]].push_back(current[a]);
        }

        std::vector<Topic> parents;
        std::vector<std::vector<std::size_t>> parent_members;
        std::vector<bool> lifted;
        for (std::size_t k = 0; k < components.size(); ++k) {
            const auto& comp = components[k];
            Topic p;
            if (comp.size() == 1) {
                p = atlas.topics[comp.front()];
                parent_members.push_back(atlas.members[comp.front()]);
                lifted.push_back(true);
            } else {
                Vector sum(atlas.topics[comp.front()].centroid.size(), 0.0);
                std::vector<std::size_t> docs_below;
                for (std::size_t child : comp) {
                    const Topic& c = atlas.topics[child];
                    for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += static_cast<double>(c.size) * c.centroid[j];
                    p.size += c.size;
                    union_sorted(p.source_intervals, c.source_intervals);
                    docs_below = sorted_union(docs_below, atlas.members[child]);
                }
                p.centroid = normalize(sum);
                parent_members.push_back(std::move(docs_below));
                lifted.push_back(false);
            }
            p.topic_id = parent_id(level, k);
            p.level = level;
            p.parent_id.reset();
            parents.push_back(std::move(p));
        }

        const topics::ClassTfidf tfidf(topics::cluster_term_counts(ctx.docs, parent_members));
        for (std::size_t k = 0; k < parents.size(); ++k) {
            if (lifted[k]) continue;
            parents[k].keywords = tfidf.keywords(k, ctx.top_n_keywords);
            if (parents[k].keywords.empty()) {
                parents[k].label = "untitled topic";
                continue;
            }
            const topics::TopicLabel l = topics::generate_label(ctx.llm, parents[k].keywords);
            parents[k].label = l.label;
            parents[k].description = l.description;
            parents[k].degraded_label = l.degraded;
        }

        std::vector<std::size_t> next;
        for (std::size_t k = 0; k < parents.size(); ++k) {
            for (std::size_t child : components[k]) atlas.topics[child].parent_id = parents[k].topic_id;
            next.push_back(atlas.topics.size());
            atlas.topics.push_back(std::move(parents[k]));
            atlas.members.push_back(std::move(parent_members[k]));
        }
        current = std::move(next);
    }
}

void layout_atlas(MergedAtlas& atlas, const std::vector<Document>& docs, const LayoutOptions& opts)
{
    atlas.doc_coords.assign(docs.size(), Point2{});
    if (docs.size() >= 2) {
        std::vector<Vector> vectors;
        vectors.reserve(docs.size());
        for (const auto& d : docs) vectors.push_back(to_vector(d.embedding));
        const ProjectionTransform t = project_fit(vectors, 2);
        std::vector<Vector> coords;
        coords.reserve(docs.size());
        for (const auto& v : vectors) coords.push_back(t.apply(std::span<const double>(v)));
        if (opts.refine) coords = refine_layout(std::move(coords), vectors, opts.refine_options);
        for (std::size_t i = 0; i < docs.size(); ++i) {
            atlas.doc_coords[i] = {to_f32(coords[i][0]), to_f32(coords[i][1])};
        }
    }
    for (std::size_t i = 0; i < atlas.topics.size(); ++i) {
        const auto& members = atlas.members[i];
        if (members.empty()) continue;
        double x = 0.0;
        double y = 0.0;
        for (std::size_t m : members) {
            x += atlas.doc_coords[m].x;
            y += atlas.doc_coords[m].y;
        }
        const double n = static_cast<double>(members.size());
        atlas.topics[i].coords = {to_f32(x / n), to_f32(y / n)};
    }
}

}  // namespace corpusmap::atlas
