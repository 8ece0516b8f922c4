#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "nucleo/dataset.hpp"
#include "nucleo/image.hpp"
#include "nucleo/segment.hpp"

namespace nucleo::eval {

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionMismatch : EvalError {
    DimensionMismatch(int mw, int mh, int fw, int fh)
        : EvalError("mask is " + std::to_string(mw) + "x" + std::to_string(mh) +
                    " but the frame is " + std::to_string(fw) + "x" +
                    std::to_string(fh)) {}
};
struct EmptyInput : EvalError {
    EmptyInput() : EvalError("aggregate needs at least one frame") {}
};

// The three detection encodings a method can hand in for one frame.
struct PointsDetections {
    std::vector<Point> points;
};
struct SingleMask {
    BinaryMask mask;
};
struct MaskList {
    std::vector<BinaryMask> masks;  // one detection per mask
};
using DetectionSet = std::variant<PointsDetections, SingleMask, MaskList>;

struct MatchOutcome {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    std::vector<std::pair<int, int>> pairing;  // (detection idx, gt idx)
};

// Maximum-cardinality one-to-one matching; detection d is linkable to gt
// point p iff their Euclidean distance is strictly below radius. Pairing is
// deterministic: detections in index order, candidates by (distance, gt idx).
MatchOutcome match_points(const std::vector<Point>& detections,
                          const std::vector<Point>& gt, int radius = 10);

// Region/point matching. A region is linkable to every gt point inside it.
// tp = matched pairs, fn = unmatched points, fp = regions containing no gt
// point at all; a region whose only points are matched elsewhere counts
// neither way.
MatchOutcome match_regions(const std::vector<seg::Region>& regions,
                           const std::vector<Point>& gt);

// Same matching after decomposing the mask into 8-connected regions.
MatchOutcome match_mask(const BinaryMask& mask, const std::vector<Point>& gt);

// Same matching with each mask acting as one region.
MatchOutcome match_masks(const std::vector<BinaryMask>& masks,
                         const std::vector<Point>& gt);

// Region matching on a precomputed containment relation: region_to_gt[r]
// lists the gt indices inside region r, ascending. Lets callers that already
// know containment (the tuner) skip building pixel regions.
MatchOutcome match_region_adjacency(const std::vector<std::vector<int>>& region_to_gt,
                                    std::size_t gt_count);

// Dispatch on the encoding; masks are checked against the frame size.
MatchOutcome match_detections(const DetectionSet& det, const std::vector<Point>& gt,
                              int frame_width, int frame_height, int radius = 10);

// (precision, recall). Degenerate denominators resolve to 1 only when both
// the detection side and the gt side are empty, else 0.
std::pair<double, double> frame_metrics(const MatchOutcome& outcome);

// 2PR/(P+R), 0 when P+R == 0.
double f_measure(double precision, double recall);

struct FrameScore {
    std::string frame_id;
    MatchOutcome outcome;
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;
};

struct MetricsReport {
    std::vector<FrameScore> per_frame;  // sorted by frame_id
    double macro_precision = 0.0, macro_precision_std = 0.0;
    double macro_recall = 0.0, macro_recall_std = 0.0;
    double macro_f_std = 0.0;
    double micro_precision = 0.0, micro_recall = 0.0, micro_f = 0.0;
    double f_measure = 0.0;  // headline: from macro precision and recall
    long long tp = 0, fp = 0, fn = 0;
};

MetricsReport aggregate(std::vector<std::pair<std::string, MatchOutcome>> per_frame);

// frame,tp,fp,fn,precision,recall,f
//   one row per frame (sorted), then summary_macro (the headline row, f
//   recomputed from that row's P and R), summary_macro_std (population STDs
//   of the per-frame columns) and summary_micro (pooled counts).
std::string report_csv(const MetricsReport& report);

// The summary rows of a report_csv artifact, for merging reports later.
struct ReportSummary {
    double macro_precision = 0.0, macro_recall = 0.0;
    double macro_precision_std = 0.0, macro_recall_std = 0.0;
    double micro_precision = 0.0, micro_recall = 0.0;
    double f = 0.0;  // as stored on the summary_macro row
};
ReportSummary parse_report_summary(const std::string& csv_text);

}  // namespace nucleo::eval
