#pragma once

// Internal machinery for the iterative segmenter. One tree per frame: level i
// holds the connected components of binarize_below(denoised, schedule[i]).
// Thresholds increase, so masks are nested and every component at level i is
// contained in exactly one component at level i+1 (its parent). Carrying,
// freezing and merging then only ever touch per-component stats, which is
// what makes the grid search cheap: the pixel work happens once per frame.

#include <cstdint>
#include <utility>
#include <vector>

#include "nucleo/image.hpp"
#include "nucleo/segment.hpp"

namespace nucleo::seg {

struct TreeNode {
    std::int32_t parent = -1;  // node index at the next level
    std::int64_t area = 0;
    std::int64_t intensity_sum = 0;  // over the image the tree was built from
    double solidity = 0.0;
    int min_x = 0, min_y = 0, max_x = 0, max_y = 0;

    double mean_intensity() const {
        return static_cast<double>(intensity_sum) / static_cast<double>(area);
    }
};

struct TreeLevel {
    std::vector<TreeNode> nodes;
    std::vector<PixelRun> runs;           // row-major scan order
    std::vector<std::int32_t> run_node;   // node id per run
    std::vector<std::int32_t> row_begin;  // size height+1, run index per row
};

struct ThresholdTree {
    int width = 0, height = 0;
    std::vector<int> schedule;
    std::vector<TreeLevel> levels;

    // node id containing (x,y) at the given level, or -1
    int node_at(int level, int x, int y) const;
    Region extract(int level, int node) const;
};

// `img` is the already-denoised image the schedule is applied to.
ThresholdTree build_threshold_tree(const GrayImage& img, const std::vector<int>& schedule);

// Runs the carry/freeze/merge process for one parameter set; returns the
// surviving (level, node) pairs after the final size/solidity/intensity
// filter, ordered by (min_y, min_x).
std::vector<std::pair<int, int>> walk_tree(const ThresholdTree& tree,
                                           const SegParams& params);

}  // namespace nucleo::seg
