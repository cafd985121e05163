#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "litesem/dispersion.hpp"
#include "litesem/vector_math.hpp"

namespace litesem {

inline constexpr int kNoise = -1;

struct ClusterResult {
    std::vector<int> labels;  // cluster index per point, kNoise for noise
    int cluster_count = 0;

    [[nodiscard]] std::size_t noise_count() const {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoise));
    }
    [[nodiscard]] double noise_fraction() const {
        return labels.empty() ? 0.0 : static_cast<double>(noise_count()) / static_cast<double>(labels.size());
    }
};

namespace hdbscan {

/// Condensed-tree row: `child` is a point index (< n) or a cluster label (>= n).
struct CondensedEdge {
    std::size_t parent;
    std::size_t child;
    double lambda;
    std::size_t size;
};

inline double cosine_distance(std::span<const float> a, std::span<const float> b) {
    return std::max(0.0, 1.0 - cosine(a, b));
}

inline double lambda_of(double distance) {
    constexpr double kMinDistance = 1e-12;
    return 1.0 / std::max(distance, kMinDistance);
}

/// Mutual-reachability MST (Prim, dense) sorted by weight; ties keep discovery order.
struct MstEdge {
    std::size_t a;
    std::size_t b;
    double w;
};

inline std::vector<MstEdge> mutual_reachability_mst(std::span<const Embedding> points, std::size_t min_samples) {
    const std::size_t n = points.size();
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = cosine_distance(points[i], points[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    std::vector<double> core(n, 0.0);
    {
        std::vector<double> row(n);
        const std::size_t k = std::min(min_samples, n) - 1;  // the point itself is neighbour 0
        for (std::size_t i = 0; i < n; ++i) {
            std::copy(dist.begin() + static_cast<std::ptrdiff_t>(i * n),
                      dist.begin() + static_cast<std::ptrdiff_t>((i + 1) * n), row.begin());
            std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), row.end());
            core[i] = row[k];
        }
    }
    auto mreach = [&](std::size_t i, std::size_t j) { return std::max({core[i], core[j], dist[i * n + j]}); };

    std::vector<MstEdge> edges;
    edges.reserve(n > 0 ? n - 1 : 0);
    std::vector<bool> in_tree(n, false);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> from(n, 0);
    std::size_t current = 0;
    in_tree[0] = true;
    for (std::size_t step = 1; step < n; ++step) {
        std::size_t next = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (in_tree[j]) {
                continue;
            }
            const double d = mreach(current, j);
            if (d < best[j]) {
                best[j] = d;
                from[j] = current;
            }
            if (next == n || best[j] < best[next]) {
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push_back({from[next], next, best[next]});
        current = next;
    }
    std::stable_sort(edges.begin(), edges.end(), [](const MstEdge& x, const MstEdge& y) { return x.w < y.w; });
    return edges;
}

/// Single-linkage dendrogram condensed with `min_cluster_size`. Cluster labels start at n
/// (the root) and grow in breadth-first order, so children always outnumber parents.
inline std::vector<CondensedEdge> condense(std::size_t n, const std::vector<MstEdge>& mst,
                                           std::size_t min_cluster_size) {
    // Dendrogram nodes: 0..n-1 leaves, n..2n-2 merges.
    struct Merge {
        std::size_t left;
        std::size_t right;
        double distance;
        std::size_t size;
    };
    std::vector<Merge> merges;
    merges.reserve(n > 0 ? n - 1 : 0);
    std::vector<std::size_t> parent(2 * n, 0);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    std::vector<std::size_t> size(2 * n, 1);
    auto find = [&parent](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (const auto& e : mst) {
        const std::size_t ra = find(e.a);
        const std::size_t rb = find(e.b);
        const std::size_t node = n + merges.size();
        merges.push_back({ra, rb, e.w, size[ra] + size[rb]});
        parent[ra] = node;
        parent[rb] = node;
        size[node] = size[ra] + size[rb];
    }

    auto node_size = [&](std::size_t node) { return node < n ? std::size_t{1} : merges[node - n].size; };
    auto collect_leaves = [&](std::size_t node, std::vector<std::size_t>& out) {
        std::vector<std::size_t> stack{node};
        while (!stack.empty()) {
            const std::size_t x = stack.back();
            stack.pop_back();
            if (x < n) {
                out.push_back(x);
            } else {
                stack.push_back(merges[x - n].right);
                stack.push_back(merges[x - n].left);
            }
        }
    };

    std::vector<CondensedEdge> tree;
    if (n < 2) {
        return tree;
    }
    const std::size_t root = 2 * n - 2;
    std::size_t next_label = n + 1;
    // (dendrogram node, cluster label it currently represents)
    std::vector<std::pair<std::size_t, std::size_t>> queue{{root, n}};
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        auto [node, label] = queue[qi];
        // Follow the chain of merges that keep `label` alive.
        while (node >= n) {
            const auto& m = merges[node - n];
            const double lambda = lambda_of(m.distance);
            const std::size_t ls = node_size(m.left);
            const std::size_t rs = node_size(m.right);
            if (ls >= min_cluster_size && rs >= min_cluster_size) {
                const std::size_t l_label = next_label++;
                const std::size_t r_label = next_label++;
                tree.push_back({label, l_label, lambda, ls});
                tree.push_back({label, r_label, lambda, rs});
                queue.push_back({m.left, l_label});
                queue.push_back({m.right, r_label});
                break;
            }
            std::vector<std::size_t> dropped;
            if (ls < min_cluster_size) {
                collect_leaves(m.left, dropped);
            }
            if (rs < min_cluster_size) {
                collect_leaves(m.right, dropped);
            }
            std::sort(dropped.begin(), dropped.end());
            for (auto p : dropped) {
                tree.push_back({label, p, lambda, 1});
            }
            if (ls < min_cluster_size && rs < min_cluster_size) {
                break;
            }
            node = ls >= min_cluster_size ? m.left : m.right;
        }
    }
    return tree;
}

/// Excess-of-mass selection; the root is never selectable.
inline std::vector<std::size_t> select_clusters(std::size_t n, const std::vector<CondensedEdge>& tree) {
    std::size_t max_label = n;
    for (const auto& e : tree) {
        max_label = std::max(max_label, std::max(e.parent, e.child));
    }
    const std::size_t m = max_label - n + 1;
    std::vector<double> birth(m, 0.0);
    std::vector<double> stability(m, 0.0);
    std::vector<std::vector<std::size_t>> children(m);
    for (const auto& e : tree) {
        if (e.child >= n) {
            birth[e.child - n] = e.lambda;
            children[e.parent - n].push_back(e.child);
        }
    }
    for (const auto& e : tree) {
        stability[e.parent - n] += (e.lambda - birth[e.parent - n]) * static_cast<double>(e.size);
    }
    std::vector<bool> selected(m, false);
    for (std::size_t c = 1; c < m; ++c) {
        selected[c] = true;
    }
    std::vector<double> best(stability);
    for (std::size_t c = m; c-- > 1;) {
        double subtree = 0.0;
        for (auto ch : children[c]) {
            subtree += best[ch - n];
        }
        if (children[c].empty()) {
            continue;
        }
        if (subtree > stability[c]) {
            selected[c] = false;
            best[c] = subtree;
        } else {
            std::vector<std::size_t> stack(children[c].begin(), children[c].end());
            while (!stack.empty()) {
                const std::size_t x = stack.back();
                stack.pop_back();
                selected[x - n] = false;
                for (auto ch : children[x - n]) {
                    stack.push_back(ch);
                }
            }
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t c = 1; c < m; ++c) {
        if (selected[c]) {
            out.push_back(c + n);
        }
    }
    return out;
}

} // namespace hdbscan

/// HDBSCAN over cosine distance (min_samples = min_cluster_size, excess-of-mass selection).
/// A selected cluster is kept only when its size-corrected dispersion (1 - S-mean) is below
/// `tightness` times that of the whole set; the rest becomes noise. When nothing
/// survives, a set whose S-mean reaches `cohesion_floor` is reported as one cluster and
/// anything else as all noise. Labels are numbered by each cluster's lowest point index.
inline ClusterResult density_cluster(std::span<const Embedding> points, std::size_t min_cluster_size,
                                     double cohesion_floor = 0.85, double tightness = 0.7) {
    const std::size_t n = points.size();
    ClusterResult result;
    result.labels.assign(n, kNoise);
    min_cluster_size = std::max<std::size_t>(min_cluster_size, 2);
    if (n < min_cluster_size) {
        return result;
    }
    const double whole = s_mean(points);
    auto single_cluster = [&] {
        std::fill(result.labels.begin(), result.labels.end(), 0);
        result.cluster_count = 1;
        return result;
    };
    constexpr double kFlat = 1e-9;
    // 1 - S-mean of m i.i.d. points shrinks like (m - 1) / m; undo that before comparing sizes.
    auto spread = [](double dispersion, std::size_t m) {
        return dispersion * static_cast<double>(m) / static_cast<double>(m - 1);
    };
    if (1.0 - whole <= kFlat) {
        return single_cluster();
    }

    const auto mst = hdbscan::mutual_reachability_mst(points, min_cluster_size);
    const auto tree = hdbscan::condense(n, mst, min_cluster_size);
    const auto chosen = hdbscan::select_clusters(n, tree);

    // Point -> the cluster it fell out of; cluster -> parent cluster.
    std::vector<std::size_t> point_home(n, n);
    std::vector<std::size_t> cluster_parent;
    for (const auto& e : tree) {
        if (e.child < n) {
            point_home[e.child] = e.parent;
        } else {
            if (cluster_parent.size() <= e.child - n) {
                cluster_parent.resize(e.child - n + 1, n);
            }
            cluster_parent[e.child - n] = e.parent;
        }
    }
    std::vector<bool> is_chosen(cluster_parent.size() + 1, false);
    for (auto c : chosen) {
        if (is_chosen.size() <= c - n) {
            is_chosen.resize(c - n + 1, false);
        }
        is_chosen[c - n] = true;
    }
    std::vector<std::size_t> raw(n, 0);  // chosen cluster label, or 0 for noise
    for (std::size_t p = 0; p < n; ++p) {
        std::size_t c = point_home[p];
        while (c > n && !(c - n < is_chosen.size() && is_chosen[c - n])) {
            c = c - n < cluster_parent.size() ? cluster_parent[c - n] : n;
        }
        raw[p] = (c > n) ? c : 0;
    }

    // Demote clusters no tighter than the whole set, then renumber by first member.
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> groups;
    for (auto c : chosen) {
        std::vector<std::size_t> members;
        for (std::size_t p = 0; p < n; ++p) {
            if (raw[p] == c) {
                members.push_back(p);
            }
        }
        if (members.size() < min_cluster_size) {
            continue;
        }
        std::vector<Embedding> subset;
        subset.reserve(members.size());
        for (auto p : members) {
            subset.push_back(points[p]);
        }
        if (!(spread(1.0 - s_mean(subset), members.size()) < tightness * spread(1.0 - whole, n))) {
            continue;
        }
        groups.emplace_back(members.front(), std::move(members));
    }
    if (groups.empty()) {
        return whole >= cohesion_floor ? single_cluster() : result;
    }
    std::sort(groups.begin(), groups.end());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (auto p : groups[g].second) {
            result.labels[p] = static_cast<int>(g);
        }
    }
    result.cluster_count = static_cast<int>(groups.size());
    return result;
}

} // namespace litesem
