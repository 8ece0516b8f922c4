#include "nucleo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "nucleo/csv.hpp"

namespace nucleo::eval {

namespace {

// Kuhn's augmenting-path matching. adj[d] holds the candidate gt indices of
// detection d in preference order; detections are seeded in index order, so
// the resulting pairing is deterministic.
MatchOutcome run_matching(const std::vector<std::vector<int>>& adj, std::size_t n_gt) {
    std::vector<int> gt_match(n_gt, -1);
    std::vector<int> det_match(adj.size(), -1);
    std::vector<char> visited(n_gt, 0);

    std::function<bool(int)> augment = [&](int d) -> bool {
        for (int g : adj[d]) {
            if (visited[g]) continue;
            visited[g] = 1;
            if (gt_match[g] < 0 || augment(gt_match[g])) {
                gt_match[g] = d;
                det_match[d] = g;
                return true;
            }
        }
        return false;
    };
    for (std::size_t d = 0; d < adj.size(); ++d) {
        std::fill(visited.begin(), visited.end(), 0);
        augment(static_cast<int>(d));
    }

    MatchOutcome out;
    for (std::size_t d = 0; d < adj.size(); ++d) {
        if (det_match[d] >= 0) out.pairing.emplace_back(static_cast<int>(d), det_match[d]);
    }
    out.tp = static_cast<long long>(out.pairing.size());
    out.fn = static_cast<long long>(n_gt) - out.tp;
    return out;
}

}  // namespace

MatchOutcome match_points(const std::vector<Point>& detections,
                          const std::vector<Point>& gt, int radius) {
    const long long r2 = static_cast<long long>(radius) * radius;
    std::vector<std::vector<int>> adj(detections.size());
    std::vector<std::pair<long long, int>> cand;
    for (std::size_t d = 0; d < detections.size(); ++d) {
        cand.clear();
        for (std::size_t g = 0; g < gt.size(); ++g) {
            const long long dx = detections[d].x - gt[g].x;
            const long long dy = detections[d].y - gt[g].y;
            const long long dist2 = dx * dx + dy * dy;
            if (dist2 < r2) cand.emplace_back(dist2, static_cast<int>(g));
        }
        std::sort(cand.begin(), cand.end());
        adj[d].reserve(cand.size());
        for (auto& [dist2, g] : cand) adj[d].push_back(g);
    }
    MatchOutcome out = run_matching(adj, gt.size());
    out.fp = static_cast<long long>(detections.size()) - out.tp;
    return out;
}

MatchOutcome match_region_adjacency(const std::vector<std::vector<int>>& region_to_gt,
                                    std::size_t gt_count) {
    MatchOutcome out = run_matching(region_to_gt, gt_count);
    // a region is a false positive only when it holds no manual point at
    // all; losing the matching competition does not make it one
    for (const auto& gts : region_to_gt)
        if (gts.empty()) ++out.fp;
    return out;
}

MatchOutcome match_regions(const std::vector<seg::Region>& regions,
                           const std::vector<Point>& gt) {
    std::vector<std::vector<int>> adj(regions.size());
    for (std::size_t r = 0; r < regions.size(); ++r)
        for (std::size_t g = 0; g < gt.size(); ++g)
            if (regions[r].contains(gt[g].x, gt[g].y)) adj[r].push_back(static_cast<int>(g));
    return match_region_adjacency(adj, gt.size());
}

MatchOutcome match_mask(const BinaryMask& mask, const std::vector<Point>& gt) {
    return match_regions(seg::find_components(mask, 8), gt);
}

MatchOutcome match_masks(const std::vector<BinaryMask>& masks,
                         const std::vector<Point>& gt) {
    std::vector<std::vector<int>> adj(masks.size());
    for (std::size_t m = 0; m < masks.size(); ++m) {
        for (std::size_t g = 0; g < gt.size(); ++g) {
            const Point& p = gt[g];
            if (p.x >= 0 && p.x < masks[m].width() && p.y >= 0 &&
                p.y < masks[m].height() && masks[m].get(p.x, p.y))
                adj[m].push_back(static_cast<int>(g));
        }
    }
    return match_region_adjacency(adj, gt.size());
}

MatchOutcome match_detections(const DetectionSet& det, const std::vector<Point>& gt,
                              int frame_width, int frame_height, int radius) {
    auto check_dims = [&](const BinaryMask& m) {
        if (m.width() != frame_width || m.height() != frame_height)
            throw DimensionMismatch(m.width(), m.height(), frame_width, frame_height);
    };
    if (const auto* p = std::get_if<PointsDetections>(&det))
        return match_points(p->points, gt, radius);
    if (const auto* s = std::get_if<SingleMask>(&det)) {
        check_dims(s->mask);
        return match_mask(s->mask, gt);
    }
    const auto& list = std::get<MaskList>(det);
    for (const auto& m : list.masks) check_dims(m);
    return match_masks(list.masks, gt);
}

std::pair<double, double> frame_metrics(const MatchOutcome& o) {
    double precision, recall;
    if (o.tp + o.fp > 0)
        precision = static_cast<double>(o.tp) / static_cast<double>(o.tp + o.fp);
    else
        precision = (o.tp + o.fn == 0) ? 1.0 : 0.0;
    if (o.tp + o.fn > 0)
        recall = static_cast<double>(o.tp) / static_cast<double>(o.tp + o.fn);
    else
        recall = (o.tp + o.fp == 0) ? 1.0 : 0.0;
    return {precision, recall};
}

double f_measure(double precision, double recall) {
    const double s = precision + recall;
    return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

namespace {

double population_std(const std::vector<double>& values, double mean) {
    double acc = 0.0;
    for (double v : values) acc += (v - mean) * (v - mean);
    return std::sqrt(acc / static_cast<double>(values.size()));
}

}  // namespace

MetricsReport aggregate(std::vector<std::pair<std::string, MatchOutcome>> per_frame) {
    if (per_frame.empty()) throw EmptyInput();
    std::sort(per_frame.begin(), per_frame.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    MetricsReport rep;
    std::vector<double> ps, rs, fs;
    for (auto& [id, outcome] : per_frame) {
        FrameScore fs_row;
        fs_row.frame_id = id;
        fs_row.outcome = std::move(outcome);
        auto [p, r] = frame_metrics(fs_row.outcome);
        fs_row.precision = p;
        fs_row.recall = r;
        fs_row.f = f_measure(p, r);
        rep.tp += fs_row.outcome.tp;
        rep.fp += fs_row.outcome.fp;
        rep.fn += fs_row.outcome.fn;
        ps.push_back(p);
        rs.push_back(r);
        fs.push_back(fs_row.f);
        rep.per_frame.push_back(std::move(fs_row));
    }
    const double n = static_cast<double>(ps.size());
    for (double p : ps) rep.macro_precision += p;
    for (double r : rs) rep.macro_recall += r;
    rep.macro_precision /= n;
    rep.macro_recall /= n;
    rep.macro_precision_std = population_std(ps, rep.macro_precision);
    rep.macro_recall_std = population_std(rs, rep.macro_recall);
    double mean_f = 0.0;
    for (double f : fs) mean_f += f;
    rep.macro_f_std = population_std(fs, mean_f / n);

    MatchOutcome pooled;
    pooled.tp = rep.tp;
    pooled.fp = rep.fp;
    pooled.fn = rep.fn;
    auto [mp, mr] = frame_metrics(pooled);
    rep.micro_precision = mp;
    rep.micro_recall = mr;
    rep.micro_f = f_measure(mp, mr);
    rep.f_measure = f_measure(rep.macro_precision, rep.macro_recall);
    return rep;
}

std::string report_csv(const MetricsReport& rep) {
    std::string out = "frame,tp,fp,fn,precision,recall,f\n";
    for (const FrameScore& s : rep.per_frame) {
        out += s.frame_id + ',' + std::to_string(s.outcome.tp) + ',' +
               std::to_string(s.outcome.fp) + ',' + std::to_string(s.outcome.fn) +
               ',' + fmt_double(s.precision) + ',' + fmt_double(s.recall) + ',' +
               fmt_double(s.f) + '\n';
    }
    out += "summary_macro,,,," + fmt_double(rep.macro_precision) + ',' +
           fmt_double(rep.macro_recall) + ',' + fmt_double(rep.f_measure) + '\n';
    out += "summary_macro_std,,,," + fmt_double(rep.macro_precision_std) + ',' +
           fmt_double(rep.macro_recall_std) + ',' + fmt_double(rep.macro_f_std) + '\n';
    out += "summary_micro," + std::to_string(rep.tp) + ',' + std::to_string(rep.fp) +
           ',' + std::to_string(rep.fn) + ',' + fmt_double(rep.micro_precision) +
           ',' + fmt_double(rep.micro_recall) + ',' + fmt_double(rep.micro_f) + '\n';
    return out;
}

ReportSummary parse_report_summary(const std::string& csv_text) {
    ReportSummary sum;
    bool saw_macro = false;
    for (const std::string& line : split_lines(csv_text)) {
        auto fields = split_csv_line(line);
        if (fields.size() != 7) continue;
        if (fields[0] == "summary_macro") {
            sum.macro_precision = std::stod(fields[4]);
            sum.macro_recall = std::stod(fields[5]);
            sum.f = std::stod(fields[6]);
            saw_macro = true;
        } else if (fields[0] == "summary_macro_std") {
            sum.macro_precision_std = std::stod(fields[4]);
            sum.macro_recall_std = std::stod(fields[5]);
        } else if (fields[0] == "summary_micro") {
            sum.micro_precision = std::stod(fields[4]);
            sum.micro_recall = std::stod(fields[5]);
        }
    }
    if (!saw_macro) throw EvalError("no summary_macro row in evaluation CSV");
    return sum;
}

}  // namespace nucleo::eval
