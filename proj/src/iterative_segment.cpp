#include "nucleo/segment.hpp"
#include "threshold_tree.hpp"

namespace nucleo::seg {

std::vector<Region> iterative_segment(const GrayImage& img, const SegParams& params) {
    params.validate();
    GrayImage filtered = denoise(img, params.noise_window);
    ThresholdTree tree = build_threshold_tree(filtered, params.threshold_schedule);
    std::vector<Region> out;
    for (auto [level, node] : walk_tree(tree, params))
        out.push_back(tree.extract(level, node));
    return out;
}

}  // namespace nucleo::seg
