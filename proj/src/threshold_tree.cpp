#include "threshold_tree.hpp"

#include <algorithm>

namespace nucleo::seg {

namespace {

// Same run-based union-find as find_components, but kept in scan order and
// with per-node stats accumulated in one pass.
void build_level(const GrayImage& img, int threshold, TreeLevel& level) {
    const int w = img.width(), h = img.height();

    struct RawRun {
        int y, x0, x1, label;
    };
    std::vector<RawRun> runs;
    std::vector<int> row_begin(h + 1, 0);
    for (int y = 0; y < h; ++y) {
        row_begin[y] = static_cast<int>(runs.size());
        const std::uint8_t* row = img.pixels().data() + static_cast<std::size_t>(y) * w;
        int x = 0;
        while (x < w) {
            if (row[x] >= threshold) {
                ++x;
                continue;
            }
            int x0 = x;
            while (x < w && row[x] < threshold) ++x;
            runs.push_back(RawRun{y, x0, x - 1, static_cast<int>(runs.size())});
        }
    }
    row_begin[h] = static_cast<int>(runs.size());

    auto find = [&](int i) {
        while (runs[i].label != i) {
            runs[i].label = runs[runs[i].label].label;
            i = runs[i].label;
        }
        return i;
    };
    auto unite = [&](int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b)
            runs[b].label = a;
        else
            runs[a].label = b;
    };
    for (int y = 1; y < h; ++y) {
        int prev = row_begin[y - 1];
        const int prev_end = row_begin[y];
        for (int i = row_begin[y]; i < row_begin[y + 1]; ++i) {
            while (prev < prev_end && runs[prev].x1 < runs[i].x0 - 1) ++prev;
            for (int j = prev; j < prev_end && runs[j].x0 <= runs[i].x1 + 1; ++j)
                unite(i, j);
        }
    }

    level.runs.reserve(runs.size());
    level.run_node.assign(runs.size(), -1);
    level.row_begin.assign(row_begin.begin(), row_begin.end());

    std::vector<std::int32_t> node_of_root(runs.size(), -1);
    std::vector<std::vector<std::int64_t>> hull_pts;  // per node: x,y pairs
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const RawRun& r = runs[i];
        int root = find(static_cast<int>(i));
        std::int32_t n = node_of_root[root];
        if (n < 0) {
            n = static_cast<std::int32_t>(level.nodes.size());
            node_of_root[root] = n;
            level.nodes.emplace_back();
            TreeNode& node = level.nodes[n];
            node.min_x = r.x0;
            node.max_x = r.x1;
            node.min_y = node.max_y = r.y;
            hull_pts.emplace_back();
        }
        TreeNode& node = level.nodes[n];
        node.area += r.x1 - r.x0 + 1;
        node.min_x = std::min(node.min_x, r.x0);
        node.max_x = std::max(node.max_x, r.x1);
        node.min_y = std::min(node.min_y, r.y);
        node.max_y = std::max(node.max_y, r.y);
        std::int64_t s = 0;
        const std::uint8_t* row = img.pixels().data() + static_cast<std::size_t>(r.y) * w;
        for (int x = r.x0; x <= r.x1; ++x) s += row[x];
        node.intensity_sum += s;
        hull_pts[n].push_back(r.x0);
        hull_pts[n].push_back(r.y);
        if (r.x1 != r.x0) {
            hull_pts[n].push_back(r.x1);
            hull_pts[n].push_back(r.y);
        }
        level.runs.push_back(PixelRun{r.y, r.x0, r.x1});
        level.run_node[i] = n;
    }

    for (std::size_t n = 0; n < level.nodes.size(); ++n) {
        std::vector<PixelRun> endpoint_runs;
        endpoint_runs.reserve(hull_pts[n].size() / 2);
        for (std::size_t k = 0; k < hull_pts[n].size(); k += 2) {
            int x = static_cast<int>(hull_pts[n][k]);
            int y = static_cast<int>(hull_pts[n][k + 1]);
            endpoint_runs.push_back(PixelRun{y, x, x});
        }
        // region_solidity only looks at run endpoints, so single-pixel runs
        // carrying the true endpoints give the same hull
        level.nodes[n].solidity = region_solidity(endpoint_runs, level.nodes[n].area);
    }
}

}  // namespace

int ThresholdTree::node_at(int level, int x, int y) const {
    const TreeLevel& lvl = levels[level];
    if (y < 0 || y >= height) return -1;
    int lo = lvl.row_begin[y], hi = lvl.row_begin[y + 1];
    // last run in row with x0 <= x
    int left = lo, right = hi;
    while (left < right) {
        int mid = (left + right) / 2;
        if (lvl.runs[mid].x0 <= x)
            left = mid + 1;
        else
            right = mid;
    }
    if (left == lo) return -1;
    const PixelRun& r = lvl.runs[left - 1];
    return (x <= r.x1) ? lvl.run_node[left - 1] : -1;
}

Region ThresholdTree::extract(int level, int node) const {
    const TreeLevel& lvl = levels[level];
    const TreeNode& n = lvl.nodes[node];
    Region reg;
    reg.area = n.area;
    reg.mean_intensity = n.mean_intensity();
    reg.solidity = n.solidity;
    reg.min_x = n.min_x;
    reg.min_y = n.min_y;
    reg.max_x = n.max_x;
    reg.max_y = n.max_y;
    for (std::size_t i = 0; i < lvl.runs.size(); ++i)
        if (lvl.run_node[i] == node) reg.runs.push_back(lvl.runs[i]);
    return reg;
}

ThresholdTree build_threshold_tree(const GrayImage& img,
                                   const std::vector<int>& schedule) {
    ThresholdTree tree;
    tree.width = img.width();
    tree.height = img.height();
    tree.schedule = schedule;
    tree.levels.resize(schedule.size());
    for (std::size_t i = 0; i < schedule.size(); ++i)
        build_level(img, schedule[i], tree.levels[i]);

    // parent = component at the next level containing this node's first pixel
    for (std::size_t i = 0; i + 1 < tree.levels.size(); ++i) {
        TreeLevel& lvl = tree.levels[i];
        std::vector<char> done(lvl.nodes.size(), 0);
        for (std::size_t r = 0; r < lvl.runs.size(); ++r) {
            std::int32_t n = lvl.run_node[r];
            if (done[n]) continue;
            done[n] = 1;
            lvl.nodes[n].parent = static_cast<std::int32_t>(
                tree.node_at(static_cast<int>(i) + 1, lvl.runs[r].x0, lvl.runs[r].y));
        }
    }
    return tree;
}

std::vector<std::pair<int, int>> walk_tree(const ThresholdTree& tree,
                                           const SegParams& params) {
    struct Carried {
        int level;   // level of the current extent
        int node;    // node of the current extent
        bool frozen;
        int cursor;  // node at the level being processed
    };
    std::vector<Carried> carried;
    std::vector<char> alive;
    std::vector<int> order;

    const int n_levels = static_cast<int>(tree.levels.size());
    for (int L = 0; L < n_levels; ++L) {
        const TreeLevel& lvl = tree.levels[L];
        if (L > 0) {
            const TreeLevel& prev = tree.levels[L - 1];
            for (std::size_t i = 0; i < carried.size(); ++i)
                if (alive[i]) carried[i].cursor = prev.nodes[carried[i].cursor].parent;
        }
        order.clear();
        for (std::size_t i = 0; i < carried.size(); ++i)
            if (alive[i]) order.push_back(static_cast<int>(i));
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return carried[a].cursor < carried[b].cursor ||
                   (carried[a].cursor == carried[b].cursor && a < b);
        });

        std::size_t ptr = 0;
        const int n_nodes = static_cast<int>(lvl.nodes.size());
        for (int n = 0; n < n_nodes; ++n) {
            std::size_t begin = ptr;
            while (ptr < order.size() && carried[order[ptr]].cursor == n) ++ptr;
            const std::size_t members = ptr - begin;
            const TreeNode& node = lvl.nodes[n];

            if (members == 0) {
                if (node.area >= params.seed_min_size) {
                    carried.push_back(Carried{L, n, false, n});
                    alive.push_back(1);
                }
            } else if (members == 1) {
                Carried& c = carried[order[begin]];
                if (!c.frozen) {
                    if (node.solidity >= params.min_solidity &&
                        params.intensity_in_band(node.mean_intensity())) {
                        c.level = L;
                        c.node = n;
                    } else {
                        c.frozen = true;
                    }
                }
            } else {
                // merge only if the union is more solid than every part
                double max_part = 0.0;
                for (std::size_t k = begin; k < ptr; ++k) {
                    const Carried& c = carried[order[k]];
                    max_part =
                        std::max(max_part, tree.levels[c.level].nodes[c.node].solidity);
                }
                if (node.solidity > max_part) {
                    for (std::size_t k = begin; k < ptr; ++k) alive[order[k]] = 0;
                    carried.push_back(Carried{L, n, false, n});
                    alive.push_back(1);
                } else {
                    for (std::size_t k = begin; k < ptr; ++k)
                        carried[order[k]].frozen = true;
                }
            }
        }
    }

    std::vector<std::pair<int, int>> result;
    for (std::size_t i = 0; i < carried.size(); ++i) {
        if (!alive[i]) continue;
        const TreeNode& node = tree.levels[carried[i].level].nodes[carried[i].node];
        if (node.area < params.min_size) continue;
        if (node.solidity < params.min_solidity) continue;
        if (!params.intensity_in_band(node.mean_intensity())) continue;
        result.emplace_back(carried[i].level, carried[i].node);
    }
    std::sort(result.begin(), result.end(), [&](const auto& a, const auto& b) {
        const TreeNode& na = tree.levels[a.first].nodes[a.second];
        const TreeNode& nb = tree.levels[b.first].nodes[b.second];
        return std::tie(na.min_y, na.min_x, a.first, a.second) <
               std::tie(nb.min_y, nb.min_x, b.first, b.second);
    });
    return result;
}

}  // namespace nucleo::seg
