#include "corpusmap/hdbscan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "corpusmap/error.hpp"

namespace corpusmap::topics {

namespace {

// Zero distances (duplicate points) map to a finite, very large lambda.
constexpr double kMinDistance = 1e-10;

double lambda_of(double distance)
{
    return 1.0 / std::max(distance, kMinDistance);
}

double euclidean(const Vector& a, const Vector& b)
{
    return std::sqrt(squared_distance(std::span<const double>(a), std::span<const double>(b)));
}

class DisjointSet {
public:
    explicit DisjointSet(std::size_t n) : parent_(n)
    {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }
    std::size_t find(std::size_t x)
    {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    std::size_t unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        parent_[b] = a;
        return a;
    }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<double> core_distances(const std::vector<Vector>& points, int min_samples)
{
    if (min_samples < 1) fail(ErrorCode::invalid_argument, "core_distances: min_samples must be positive");
    const std::size_t n = points.size();
    const auto k = static_cast<std::size_t>(min_samples);
    if (n <= k) fail(ErrorCode::invalid_argument, "core_distances: need more points than min_samples");

    std::vector<double> cores(n);
    std::vector<double> dist;
    dist.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        dist.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) dist.push_back(euclidean(points[i], points[j]));
        }
        std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
        cores[i] = dist[k - 1];
    }
    return cores;
}

MutualReachability::MutualReachability(const std::vector<Vector>& points, std::vector<double> cores)
    : points_(&points), cores_(std::move(cores))
{
    if (cores_.size() != points.size()) fail(ErrorCode::invalid_argument, "mutual_reachability: core count mismatch");
}

double MutualReachability::operator()(std::size_t a, std::size_t b) const
{
    if (a == b) return cores_[a];
    return std::max({cores_[a], cores_[b], euclidean((*points_)[a], (*points_)[b])});
}

std::vector<Edge> minimum_spanning_tree(const MutualReachability& mr)
{
    const std::size_t n = mr.size();
    std::vector<Edge> tree;
    if (n < 2) return tree;
    tree.reserve(n - 1);

    std::vector<bool> in_tree(n, false);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> from(n, 0);
    std::size_t current = 0;
    in_tree[0] = true;
    for (std::size_t step = 1; step < n; ++step) {
        std::size_t next = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (in_tree[j]) continue;
            const double d = mr(current, j);
            if (d < best[j]) {
                best[j] = d;
                from[j] = current;
            }
            if (next == n || best[j] < best[next]) next = j;
        }
        in_tree[next] = true;
        tree.push_back({from[next], next, best[next]});
        current = next;
    }
    return tree;
}

std::vector<Merge> single_linkage(std::size_t n_points, std::vector<Edge> mst)
{
    std::stable_sort(mst.begin(), mst.end(), [](const Edge& x, const Edge& y) { return x.weight < y.weight; });
    DisjointSet sets(n_points);
    std::vector<std::size_t> node(n_points);
    std::iota(node.begin(), node.end(), std::size_t{0});
    std::vector<std::size_t> sizes(n_points, 1);

    std::vector<Merge> merges;
    merges.reserve(mst.size());
    for (const Edge& e : mst) {
        const std::size_t ra = sets.find(e.a);
        const std::size_t rb = sets.find(e.b);
        if (ra == rb) fail(ErrorCode::invalid_argument, "single_linkage: edge list contains a cycle");
        const std::size_t size = sizes[ra] + sizes[rb];
        merges.push_back({node[ra], node[rb], e.weight, size});
        const std::size_t root = sets.unite(ra, rb);
        node[root] = n_points + merges.size() - 1;
        sizes[root] = size;
    }
    return merges;
}

CondensedTree condense(const std::vector<Merge>& merges, std::size_t n_points, int min_cluster_size)
{
    const auto mcs = static_cast<std::size_t>(min_cluster_size);
    CondensedTree tree;
    tree.point_cluster.assign(n_points, 0);
    tree.point_lambda.assign(n_points, 0.0);
    tree.clusters.push_back(CondensedNode{0, std::nullopt, 0.0, 0.0, n_points, 0.0, {}});
    if (n_points == 0) return tree;
    if (merges.size() + 1 != n_points) fail(ErrorCode::invalid_argument, "condense: dendrogram does not span the points");

    auto size_of = [&](std::size_t node) { return node < n_points ? std::size_t{1} : merges[node - n_points].size; };

    auto drop_points = [&](std::size_t node, std::size_t cluster, double lambda) {
        std::vector<std::size_t> stack{node};
        CondensedNode& c = tree.clusters[cluster];
        while (!stack.empty()) {
            const std::size_t x = stack.back();
            stack.pop_back();
            if (x < n_points) {
                tree.point_cluster[x] = cluster;
                tree.point_lambda[x] = lambda;
                c.stability += lambda - c.lambda_birth;
                c.lambda_death = std::max(c.lambda_death, lambda);
            } else {
                stack.push_back(merges[x - n_points].left);
                stack.push_back(merges[x - n_points].right);
            }
        }
    };

    if (n_points == 1) return tree;

    std::vector<std::pair<std::size_t, std::size_t>> work{{2 * n_points - 2, 0}};
    while (!work.empty()) {
        const auto [node, cluster] = work.back();
        work.pop_back();
        const Merge& m = merges[node - n_points];
        const double lambda = lambda_of(m.distance);
        const std::size_t sides[2] = {m.left, m.right};

        if (size_of(m.left) >= mcs && size_of(m.right) >= mcs) {
            for (std::size_t side : sides) {
                const std::size_t id = tree.clusters.size();
                const std::size_t sz = size_of(side);
                {
                    CondensedNode& parent = tree.clusters[cluster];
                    parent.stability += (lambda - parent.lambda_birth) * static_cast<double>(sz);
                    parent.lambda_death = std::max(parent.lambda_death, lambda);
                    parent.children.push_back(id);
                }
                tree.clusters.push_back(CondensedNode{id, cluster, lambda, lambda, sz, 0.0, {}});
                work.emplace_back(side, id);
            }
            continue;
        }
        for (std::size_t side : sides) {
            if (size_of(side) < mcs) {
                drop_points(side, cluster, lambda);
            } else {
                work.emplace_back(side, cluster);
            }
        }
    }
    return tree;
}

std::vector<std::size_t> select_clusters(const CondensedTree& tree)
{
    const std::size_t n = tree.clusters.size();
    std::vector<double> best(n, 0.0);
    std::vector<bool> selected(n, false);
    for (std::size_t c = n; c-- > 0;) {
        const CondensedNode& node = tree.clusters[c];
        if (node.children.empty()) {
            best[c] = node.stability;
            selected[c] = true;
            continue;
        }
        double below = 0.0;
        for (std::size_t ch : node.children) below += best[ch];
        if (c != 0 && node.stability >= below) {
            best[c] = node.stability;
            selected[c] = true;
            std::vector<std::size_t> stack(node.children.begin(), node.children.end());
            while (!stack.empty()) {
                const std::size_t x = stack.back();
                stack.pop_back();
                selected[x] = false;
                stack.insert(stack.end(), tree.clusters[x].children.begin(), tree.clusters[x].children.end());
            }
        } else {
            best[c] = below;
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < n; ++c) {
        if (selected[c]) out.push_back(c);
    }
    return out;
}

std::vector<int> label_points(const CondensedTree& tree, const std::vector<std::size_t>& selected)
{
    std::vector<int> label_of_cluster(tree.clusters.size(), -1);
    for (std::size_t i = 0; i < selected.size(); ++i) label_of_cluster[selected[i]] = static_cast<int>(i);

    std::vector<int> labels(tree.point_cluster.size(), -1);
    for (std::size_t p = 0; p < labels.size(); ++p) {
        std::optional<std::size_t> c = tree.point_cluster[p];
        while (c) {
            if (label_of_cluster[*c] >= 0) {
                labels[p] = label_of_cluster[*c];
                break;
            }
            c = tree.clusters[*c].parent;
        }
    }
    return labels;
}

DensityClustering density_cluster(const std::vector<Vector>& points, int min_cluster_size, int min_samples)
{
    MutualReachability mr(points, core_distances(points, min_samples));
    auto merges = single_linkage(points.size(), minimum_spanning_tree(mr));
    DensityClustering out;
    out.tree = condense(merges, points.size(), min_cluster_size);
    const auto selected = select_clusters(out.tree);
    const auto raw = label_points(out.tree, selected);

    // Renumber so clusters appear in order of their first member.
    std::vector<int> remap(selected.size(), -1);
    int next = 0;
    out.labels.assign(raw.size(), -1);
    for (std::size_t p = 0; p < raw.size(); ++p) {
        if (raw[p] < 0) continue;
        int& r = remap[static_cast<std::size_t>(raw[p])];
        if (r < 0) r = next++;
        out.labels[p] = r;
    }
    out.cluster_count = static_cast<std::size_t>(next);
    return out;
}

}  // namespace corpusmap::topics
