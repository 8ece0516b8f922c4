#include "nucleo/grid_search.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "nucleo/csv.hpp"
#include "nucleo/eval.hpp"
#include "threshold_tree.hpp"

namespace nucleo::seg {

ParamGrid ParamGrid::standard() {
    ParamGrid g;
    g.min_size = {50, 100, 150, 200, 250, 300};
    g.min_avg_intensity = {0, 10, 20, 30};
    g.max_avg_intensity = {100, 120, 140, 160};
    for (int i = 0; i <= 7; ++i) g.min_solidity.push_back(0.80 + 0.02 * i);
    return g;
}

namespace {

template <typename T>
std::vector<T> sorted_axis(std::vector<T> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// Everything the walk needs for one frame, with the pixel data dropped.
struct FrameTree {
    ThresholdTree tree;
    std::vector<std::vector<int>> gt_chains;  // per gt point: node id per level
    int width = 0, height = 0;
};

FrameTree prepare_frame(const TuneFrame& frame, const SegParams& base) {
    FrameTree ft;
    ft.width = frame.image.width();
    ft.height = frame.image.height();
    GrayImage filtered = denoise(frame.image, base.noise_window);
    ft.tree = build_threshold_tree(filtered, base.threshold_schedule);
    ft.gt_chains.resize(frame.gt.size());
    const int n_levels = static_cast<int>(ft.tree.levels.size());
    for (std::size_t g = 0; g < frame.gt.size(); ++g) {
        ft.gt_chains[g].resize(n_levels);
        for (int L = 0; L < n_levels; ++L)
            ft.gt_chains[g][L] = ft.tree.node_at(L, frame.gt[g].x, frame.gt[g].y);
    }
    // the walk and the scoring only touch node stats from here on
    for (TreeLevel& lvl : ft.tree.levels) {
        lvl.runs = {};
        lvl.run_node = {};
        lvl.row_begin = {};
    }
    return ft;
}

eval::MatchOutcome score_frame(const FrameTree& ft, const SegParams& params) {
    std::vector<std::pair<int, int>> kept;
    for (auto [level, node] : walk_tree(ft.tree, params)) {
        const TreeNode& n = ft.tree.levels[level].nodes[node];
        if (n.min_x == 0 || n.min_y == 0 || n.max_x == ft.width - 1 ||
            n.max_y == ft.height - 1)
            continue;
        kept.emplace_back(level, node);
    }
    std::vector<std::vector<int>> adj(kept.size());
    for (std::size_t r = 0; r < kept.size(); ++r)
        for (std::size_t g = 0; g < ft.gt_chains.size(); ++g)
            if (ft.gt_chains[g][kept[r].first] == kept[r].second)
                adj[r].push_back(static_cast<int>(g));
    return eval::match_region_adjacency(adj, ft.gt_chains.size());
}

}  // namespace

TuneResult grid_search(const std::vector<TuneFrame>& frames, const ParamGrid& grid,
                       int threads) {
    if (frames.empty()) throw SegError("grid search needs at least one frame");
    grid.base.validate();

    const auto sizes = sorted_axis(grid.min_size);
    const auto lows = sorted_axis(grid.min_avg_intensity);
    const auto highs = sorted_axis(grid.max_avg_intensity);
    const auto solidities = sorted_axis(grid.min_solidity);

    std::vector<SegParams> combos;
    for (int ms : sizes)
        for (int lo : lows)
            for (int hi : highs)
                for (double sol : solidities) {
                    if (lo >= hi || sol <= 0.0 || sol > 1.0 || ms < 1) continue;
                    SegParams p = grid.base;
                    p.min_size = ms;
                    p.min_avg_intensity = lo;
                    p.max_avg_intensity = hi;
                    p.min_solidity = sol;
                    combos.push_back(p);
                }
    if (combos.empty()) throw EmptyGrid();

    std::vector<FrameTree> trees(frames.size());
    {
        std::size_t n_workers = std::max(1,
            std::min(threads, static_cast<int>(frames.size())));
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (std::size_t w = 0; w < n_workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < frames.size();
                     i = next.fetch_add(1))
                    trees[i] = prepare_frame(frames[i], grid.base);
            });
        for (auto& t : pool) t.join();
    }

    std::vector<GridPointScore> scores(combos.size());
    auto score_combo = [&](std::size_t c) {
        std::vector<std::pair<std::string, eval::MatchOutcome>> per_frame;
        per_frame.reserve(frames.size());
        for (std::size_t i = 0; i < frames.size(); ++i)
            per_frame.emplace_back(frames[i].frame_id, score_frame(trees[i], combos[c]));
        eval::MetricsReport rep = eval::aggregate(std::move(per_frame));
        scores[c].params = combos[c];
        scores[c].precision = rep.macro_precision;
        scores[c].recall = rep.macro_recall;
        scores[c].f = rep.f_measure;
    };
    {
        std::size_t n_workers = std::max(1,
            std::min(threads, static_cast<int>(combos.size())));
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (std::size_t w = 0; w < n_workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t c = next.fetch_add(1); c < combos.size();
                     c = next.fetch_add(1))
                    score_combo(c);
            });
        for (auto& t : pool) t.join();
    }

    TuneResult result;
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c)
        if (scores[c].f > scores[best].f) best = c;
    result.best = scores[best].params;
    result.best_precision = scores[best].precision;
    result.best_recall = scores[best].recall;
    result.best_f = scores[best].f;
    result.scores = std::move(scores);
    return result;
}

std::string tune_csv(const TuneResult& result) {
    std::string out = "min_size,min_avg_intensity,max_avg_intensity,min_solidity,precision,recall,f\n";
    for (const GridPointScore& s : result.scores) {
        out += std::to_string(s.params.min_size) + ',' +
               std::to_string(s.params.min_avg_intensity) + ',' +
               std::to_string(s.params.max_avg_intensity) + ',' +
               fmt_double(s.params.min_solidity) + ',' + fmt_double(s.precision) +
               ',' + fmt_double(s.recall) + ',' + fmt_double(s.f) + '\n';
    }
    return out;
}

}  // namespace nucleo::seg
