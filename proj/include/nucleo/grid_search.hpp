#pragma once

#include <string>
#include <vector>

#include "nucleo/dataset.hpp"
#include "nucleo/image.hpp"
#include "nucleo/segment.hpp"

namespace nucleo::seg {

struct EmptyGrid : SegError {
    EmptyGrid() : SegError("parameter grid has no valid combination") {}
};

// Axes of the tuning grid. Combinations violating SegParams invariants
// (min_avg >= max_avg, solidity outside (0,1]) are skipped. Schedule,
// seed_min_size and noise_window are taken from `base` for every point.
struct ParamGrid {
    std::vector<int> min_size;
    std::vector<int> min_avg_intensity;
    std::vector<int> max_avg_intensity;
    std::vector<double> min_solidity;
    SegParams base;

    static ParamGrid standard();
};

struct TuneFrame {
    std::string frame_id;
    GrayImage image;
    std::vector<Point> gt;
};

struct GridPointScore {
    SegParams params;
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;  // macro F over the frames
};

struct TuneResult {
    SegParams best;
    double best_precision = 0.0;
    double best_recall = 0.0;
    double best_f = 0.0;
    std::vector<GridPointScore> scores;  // grid enumeration order
};

// Scores segment_frame (including boundary removal) on every frame for every
// grid point and returns the macro-F argmax. Axes are sorted ascending and
// enumerated lexicographically as (min_size, min_avg, max_avg, min_solidity);
// ties keep the first, i.e. lexicographically smallest, tuple. The result is
// independent of `threads`.
TuneResult grid_search(const std::vector<TuneFrame>& frames, const ParamGrid& grid,
                       int threads = 1);

// min_size,min_avg_intensity,max_avg_intensity,min_solidity,precision,recall,f
std::string tune_csv(const TuneResult& result);

}  // namespace nucleo::seg
