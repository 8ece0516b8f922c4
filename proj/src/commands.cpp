#include "nucleo/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <random>
#include <thread>

#include "nucleo/cnn.hpp"
#include "nucleo/csv.hpp"
#include "nucleo/dataset.hpp"
#include "nucleo/eval.hpp"
#include "nucleo/grid_search.hpp"
#include "nucleo/image.hpp"
#include "nucleo/segment.hpp"

namespace fs = std::filesystem;

namespace nucleo::cli {

const std::vector<std::string> kCommandNames = {
    "check",     "segment",    "tune",    "evaluate",
    "cnn-train", "cnn-detect", "overlay", "report"};

namespace {

// a thrown DataFailure always maps to exit 2
struct DataFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const std::vector<std::string> kGlobalKeys = {"dataset", "output_dir", "seed",
                                              "threads"};
const std::vector<std::string> kSegKeys = {
    "seg.min_size",      "seg.min_avg_intensity", "seg.max_avg_intensity",
    "seg.min_solidity",  "seg.thresholds",        "seg.seed_min_size",
    "seg.noise_window",  "seg.split",             "seg.frames"};
const std::vector<std::string> kGridKeys = {
    "grid.min_size", "grid.min_avg_intensity", "grid.max_avg_intensity",
    "grid.min_solidity"};
const std::vector<std::string> kEvalKeys = {"eval.split", "eval.detections",
                                            "eval.encoding", "eval.radius"};
const std::vector<std::string> kCnnKeys = {
    "cnn.split",           "cnn.stride",  "cnn.pos_radius", "cnn.epochs",
    "cnn.lr",              "cnn.batch",   "cnn.oversample", "cnn.max_patches",
    "cnn.model",           "cnn.infer_stride", "cnn.dilation_radius",
    "cnn.cutoff",          "cnn.min_area",     "cnn.save_hitmaps"};
const std::vector<std::string> kReportKeys = {"report.inputs", "report.names"};
const std::vector<std::string> kOverlayKeys = {"overlay.frame", "overlay.detections",
                                               "overlay.out"};

std::vector<std::string> allowed_keys(const std::string& command) {
    std::vector<std::string> keys = kGlobalKeys;
    auto add = [&](const std::vector<std::string>& more) {
        keys.insert(keys.end(), more.begin(), more.end());
    };
    if (command == "segment") add(kSegKeys);
    if (command == "tune") {
        add(kSegKeys);
        add(kGridKeys);
    }
    if (command == "evaluate") add(kEvalKeys);
    if (command == "cnn-train" || command == "cnn-detect") add(kCnnKeys);
    if (command == "report") add(kReportKeys);
    if (command == "overlay") add(kOverlayKeys);
    return keys;
}

std::string resolve_dataset_root(const KeyValueConfig& cfg) {
    std::string root = cfg.get_string("dataset", "");
    if (root.empty()) {
        const char* env = std::getenv("NUCLEO_DATASET");
        if (env) root = env;
    }
    if (root.empty())
        throw ConfigError("no dataset root: set the dataset key or NUCLEO_DATASET");
    return root;
}

std::string require_output_dir(const KeyValueConfig& cfg) {
    std::string dir = cfg.require_string("output_dir");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataFailure("cannot create output_dir " + dir + ": " + ec.message());
    return dir;
}

int resolve_threads(const KeyValueConfig& cfg) {
    long long t = cfg.get_int("threads", 0);
    if (t < 0) throw ConfigError("threads must be >= 0");
    if (t == 0) {
        unsigned hw = std::thread::hardware_concurrency();
        t = hw == 0 ? 1 : static_cast<long long>(hw);
    }
    return static_cast<int>(std::min<long long>(t, 64));
}

// nullopt = both splits
std::optional<Split> parse_split(const std::string& name, const std::string& key) {
    if (name == "train") return Split::Train;
    if (name == "test") return Split::Test;
    if (name == "all") return std::nullopt;
    throw ConfigError("key \"" + key + "\": expected train, test or all, got \"" +
                      name + "\"");
}

std::vector<const FrameRecord*> select_frames(const GroundTruthSet& gt,
                                              std::optional<Split> split,
                                              const std::vector<std::string>& only) {
    std::vector<const FrameRecord*> out;
    for (const FrameRecord& rec : gt.frames) {
        if (split && rec.split != *split) continue;
        if (!only.empty() &&
            std::find(only.begin(), only.end(), rec.frame_id) == only.end())
            continue;
        out.push_back(&rec);
    }
    for (const std::string& id : only) {
        bool found = false;
        for (const FrameRecord* rec : out)
            if (rec->frame_id == id) found = true;
        if (!found)
            throw ConfigError("seg.frames names \"" + id +
                              "\" which is not in the selected split");
    }
    if (out.empty()) throw DataFailure("no frames selected");
    return out;
}

seg::SegParams seg_params_from(const KeyValueConfig& cfg) {
    seg::SegParams p;
    p.min_size = static_cast<int>(cfg.get_int("seg.min_size", p.min_size));
    p.min_avg_intensity =
        static_cast<int>(cfg.get_int("seg.min_avg_intensity", p.min_avg_intensity));
    p.max_avg_intensity =
        static_cast<int>(cfg.get_int("seg.max_avg_intensity", p.max_avg_intensity));
    p.min_solidity = cfg.get_double("seg.min_solidity", p.min_solidity);
    p.threshold_schedule = cfg.get_int_list("seg.thresholds", p.threshold_schedule);
    p.seed_min_size = static_cast<int>(cfg.get_int("seg.seed_min_size", p.seed_min_size));
    p.noise_window = static_cast<int>(cfg.get_int("seg.noise_window", p.noise_window));
    try {
        p.validate();
    } catch (const seg::SegError& e) {
        throw ConfigError(e.what());
    }
    return p;
}

std::string points_csv(const std::vector<Point>& points) {
    std::string out = "x,y\n";
    for (const Point& p : points)
        out += std::to_string(p.x) + ',' + std::to_string(p.y) + '\n';
    return out;
}

// ------------------------------------------------------------------ check

int cmd_check(const KeyValueConfig& cfg, std::ostream& out, std::ostream& err) {
    GroundTruthSet gt = load_dataset(resolve_dataset_root(cfg));
    SummaryTable table = dataset_summary(gt);
    const std::string csv = table.to_csv();
    out << csv;
    if (cfg.has("output_dir"))
        write_file_atomic(require_output_dir(cfg) + "/summary.csv", csv);
    if (!table.matches_published_counts()) {
        err << "counts do not match the published per-grade totals\n";
        return kExitData;
    }
    return kExitOk;
}

// ---------------------------------------------------------------- segment

int cmd_segment(const KeyValueConfig& cfg, std::ostream& out, std::ostream&) {
    const std::string out_dir = require_output_dir(cfg);
    const seg::SegParams params = seg_params_from(cfg);
    GroundTruthSet gt = load_dataset(resolve_dataset_root(cfg));
    auto frames = select_frames(gt, parse_split(cfg.get_string("seg.split", "test"),
                                                "seg.split"),
                                cfg.get_string_list("seg.frames"));

    std::string regions_csv =
        "frame_id,region_id,centroid_x,centroid_y,area,solidity,mean_intensity\n";
    long long total = 0;
    for (const FrameRecord* rec : frames) {
        const std::vector<seg::Region> regions =
            seg::segment_frame(rec->edf_image, params);
        Gray16Image labels;
        labels.width = rec->edf_image.width();
        labels.height = rec->edf_image.height();
        labels.pixels.assign(static_cast<std::size_t>(labels.width) * labels.height, 0);
        BinaryMask mask(labels.width, labels.height);
        for (std::size_t i = 0; i < regions.size(); ++i) {
            const auto label = static_cast<std::uint16_t>(i + 1);
            for (const seg::PixelRun& run : regions[i].runs)
                for (int x = run.x0; x <= run.x1; ++x) {
                    labels.pixels[static_cast<std::size_t>(run.y) * labels.width + x] =
                        label;
                    mask.set(x, run.y, true);
                }
            auto [cx, cy] = regions[i].centroid();
            regions_csv += rec->frame_id + ',' + std::to_string(i + 1) + ',' +
                           fmt_double(cx) + ',' + fmt_double(cy) + ',' +
                           std::to_string(regions[i].area) + ',' +
                           fmt_double(regions[i].solidity) + ',' +
                           fmt_double(regions[i].mean_intensity) + '\n';
        }
        save_png(out_dir + "/" + rec->frame_id + "_labels.png", labels);
        save_mask_png(out_dir + "/" + rec->frame_id + "_mask.png", mask);
        total += static_cast<long long>(regions.size());
    }
    write_file_atomic(out_dir + "/regions.csv", regions_csv);
    out << "segmented " << frames.size() << " frames, " << total << " regions\n";
    return kExitOk;
}

// ------------------------------------------------------------------- tune

int cmd_tune(const KeyValueConfig& cfg, std::ostream& out, std::ostream&) {
    const std::string out_dir = require_output_dir(cfg);
    seg::ParamGrid grid = seg::ParamGrid::standard();
    grid.base = seg_params_from(cfg);
    grid.min_size = cfg.get_int_list("grid.min_size", grid.min_size);
    grid.min_avg_intensity =
        cfg.get_int_list("grid.min_avg_intensity", grid.min_avg_intensity);
    grid.max_avg_intensity =
        cfg.get_int_list("grid.max_avg_intensity", grid.max_avg_intensity);
    grid.min_solidity = cfg.get_double_list("grid.min_solidity", grid.min_solidity);

    GroundTruthSet gt = load_dataset(resolve_dataset_root(cfg));
    std::vector<seg::TuneFrame> frames;
    for (const FrameRecord& rec : gt.frames)
        if (rec.split == Split::Train)
            frames.push_back(seg::TuneFrame{rec.frame_id, rec.edf_image, rec.gt_points});
    if (frames.empty()) throw DataFailure("no training frames in the dataset");

    seg::TuneResult result;
    try {
        result = seg::grid_search(frames, grid, resolve_threads(cfg));
    } catch (const seg::EmptyGrid& e) {
        throw ConfigError(e.what());
    }
    write_file_atomic(out_dir + "/tuning.csv", tune_csv(result));
    std::string best = "seg.min_size = " + std::to_string(result.best.min_size) +
                       "\nseg.min_avg_intensity = " +
                       std::to_string(result.best.min_avg_intensity) +
                       "\nseg.max_avg_intensity = " +
                       std::to_string(result.best.max_avg_intensity) +
                       "\nseg.min_solidity = " + fmt_double(result.best.min_solidity) +
                       '\n';
    write_file_atomic(out_dir + "/best_params.cfg", best);
    out << "best F " << fmt_double(result.best_f) << " at min_size="
        << result.best.min_size << " min_avg=" << result.best.min_avg_intensity
        << " max_avg=" << result.best.max_avg_intensity
        << " min_solidity=" << fmt_double(result.best.min_solidity) << "\n";
    return kExitOk;
}

// --------------------------------------------------------------- evaluate

eval::DetectionSet load_detections(const std::string& encoding, const std::string& dir,
                                   const std::string& frame_id) {
    if (encoding == "points") {
        const std::string path = dir + "/" + frame_id + ".csv";
        if (!fs::exists(path)) throw DataFailure("missing detections file " + path);
        return eval::PointsDetections{parse_points_file(path)};
    }
    if (encoding == "mask") {
        const std::string path = dir + "/" + frame_id + "_mask.png";
        if (!fs::exists(path)) throw DataFailure("missing detections mask " + path);
        return eval::SingleMask{load_mask(path)};
    }
    if (encoding == "mask-list") {
        const std::string sub = dir + "/" + frame_id;
        if (!fs::is_directory(sub))
            throw DataFailure("missing detections directory " + sub);
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(sub))
            if (entry.path().extension() == ".png") files.push_back(entry.path().string());
        std::sort(files.begin(), files.end());
        eval::MaskList list;
        for (const std::string& f : files) list.masks.push_back(load_mask(f));
        return list;
    }
    if (encoding == "labels") {
        const std::string path = dir + "/" + frame_id + "_labels.png";
        if (!fs::exists(path)) throw DataFailure("missing label raster " + path);
        const Gray16Image labels = load_png16(path);
        std::uint16_t max_label = 0;
        for (std::uint16_t v : labels.pixels) max_label = std::max(max_label, v);
        eval::MaskList list;
        for (std::uint16_t id = 1; id <= max_label; ++id) {
            BinaryMask m(labels.width, labels.height);
            bool any = false;
            for (int y = 0; y < labels.height; ++y)
                for (int x = 0; x < labels.width; ++x)
                    if (labels.at(x, y) == id) {
                        m.set(x, y, true);
                        any = true;
                    }
            if (any) list.masks.push_back(std::move(m));
        }
        return list;
    }
    throw ConfigError("eval.encoding must be points, mask, mask-list or labels");
}

int cmd_evaluate(const KeyValueConfig& cfg, std::ostream& out, std::ostream&) {
    const std::string out_dir = require_output_dir(cfg);
    const std::string det_dir = cfg.require_string("eval.detections");
    const std::string encoding = cfg.get_string("eval.encoding", "points");
    const int radius = static_cast<int>(cfg.get_int("eval.radius", 10));
    if (radius < 1) throw ConfigError("eval.radius must be >= 1");
    if (!fs::is_directory(det_dir))
        throw DataFailure("eval.detections is not a directory: " + det_dir);

    GroundTruthSet gt = load_dataset(resolve_dataset_root(cfg));
    auto frames = select_frames(gt, parse_split(cfg.get_string("eval.split", "test"),
                                                "eval.split"),
                                {});
    std::vector<std::pair<std::string, eval::MatchOutcome>> per_frame;
    for (const FrameRecord* rec : frames) {
        eval::DetectionSet det = load_detections(encoding, det_dir, rec->frame_id);
        per_frame.emplace_back(
            rec->frame_id,
            eval::match_detections(det, rec->gt_points, rec->edf_image.width(),
                                   rec->edf_image.height(), radius));
    }
    eval::MetricsReport rep = eval::aggregate(std::move(per_frame));
    write_file_atomic(out_dir + "/evaluation.csv", eval::report_csv(rep));
    out << "frames " << rep.per_frame.size() << "  macro P "
        << fmt_double(rep.macro_precision) << " +- "
        << fmt_double(rep.macro_precision_std) << "  macro R "
        << fmt_double(rep.macro_recall) << " +- " << fmt_double(rep.macro_recall_std)
        << "  F " << fmt_double(rep.f_measure) << "\n";
    return kExitOk;
}

// -------------------------------------------------------------- cnn-train

int cmd_cnn_train(const KeyValueConfig& cfg, std::ostream& out, std::ostream&) {
    const std::string out_dir = require_output_dir(cfg);
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    const int stride = static_cast<int>(cfg.get_int("cnn.stride", 15));
    const int pos_radius = static_cast<int>(cfg.get_int("cnn.pos_radius", 15));
    cnn::TrainOptions opt;
    opt.epochs = static_cast<int>(cfg.get_int("cnn.epochs", 100));
    opt.lr = cfg.get_double("cnn.lr", 0.001);
    opt.batch = static_cast<int>(cfg.get_int("cnn.batch", 64));
    opt.seed = seed + 1;
    opt.threads = resolve_threads(cfg);
    opt.oversample_positives = cfg.get_bool("cnn.oversample", false);
    const long long max_patches = cfg.get_int("cnn.max_patches", 0);
    if (opt.epochs < 0 || opt.batch < 1 || stride < 1 || max_patches < 0)
        throw ConfigError("cnn training sizes must be positive");

    GroundTruthSet gt = load_dataset(resolve_dataset_root(cfg));
    auto split = parse_split(cfg.get_string("cnn.split", "train"), "cnn.split");
    if (!split) throw ConfigError("cnn-train needs a single split, not all");
    cnn::PatchSet patches =
        cnn::extract_patches_split(gt, *split, stride, 75, pos_radius);
    if (patches.patches.empty()) throw DataFailure("no patches extracted");

    if (max_patches > 0 &&
        max_patches < static_cast<long long>(patches.patches.size())) {
        // seeded subsample; the normalization mean stays the full-grid one
        std::vector<std::uint32_t> idx(patches.patches.size());
        for (std::uint32_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::mt19937_64 rng(seed + 2);
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng() % i]);
        idx.resize(static_cast<std::size_t>(max_patches));
        std::sort(idx.begin(), idx.end());
        std::vector<cnn::PatchRef> keep;
        keep.reserve(idx.size());
        for (std::uint32_t i : idx) keep.push_back(patches.patches[i]);
        patches.patches = std::move(keep);
    }

    cnn::CnnModel model = cnn::CnnModel::random_init(cnn::CnnConfig::standard(), seed);
    cnn::TrainResult result = cnn::train(std::move(model), patches, opt);
    const std::string model_path =
        cfg.get_string("cnn.model", out_dir + "/model.bin");
    cnn::save_model(model_path, result.model);
    write_file_atomic(out_dir + "/training_log.csv",
                      cnn::training_log_csv(result.log));
    out << "trained on " << patches.patches.size() << " patches ("
        << patches.positives() << " positive), " << opt.epochs
        << " epochs, model at " << model_path << "\n";
    if (!result.log.empty())
        out << "final loss " << fmt_double(result.log.back().mean_loss)
            << " accuracy " << fmt_double(result.log.back().accuracy) << "\n";
    return kExitOk;
}

// ------------------------------------------------------------- cnn-detect

int cmd_cnn_detect(const KeyValueConfig& cfg, std::ostream& out, std::ostream&) {
    const std::string out_dir = require_output_dir(cfg);
    const std::string model_path = cfg.require_string("cnn.model");
    const int stride = static_cast<int>(cfg.get_int("cnn.infer_stride", 3));
    const int dilation = static_cast<int>(cfg.get_int("cnn.dilation_radius", 2));
    const double cutoff = cfg.get_double("cnn.cutoff", 0.5);
    const int min_area = static_cast<int>(cfg.get_int("cnn.min_area", 100));
    const bool save_hitmaps = cfg.get_bool("cnn.save_hitmaps", false);
    if (stride < 1 || dilation < 0 || min_area < 0)
        throw ConfigError("cnn inference sizes must be positive");
    if (!fs::exists(model_path)) throw DataFailure("missing model " + model_path);

    const cnn::CnnModel model = cnn::load_model(model_path);
    GroundTruthSet gt = load_dataset(resolve_dataset_root(cfg));
    auto frames = select_frames(gt, parse_split(cfg.get_string("cnn.split", "test"),
                                                "cnn.split"),
                                {});
    const int threads = resolve_threads(cfg);
    long long total = 0;
    for (const FrameRecord* rec : frames) {
        cnn::HitMap map = cnn::infer_hitmap(model, rec->edf_image, stride, threads);
        std::vector<Point> detections =
            cnn::postprocess_hitmap(map, dilation, cutoff, min_area);
        write_file_atomic(out_dir + "/" + rec->frame_id + ".csv",
                          points_csv(detections));
        if (save_hitmaps)
            save_png(out_dir + "/" + rec->frame_id + "_hitmap.png",
                     cnn::hitmap_to_gray16(map));
        total += static_cast<long long>(detections.size());
    }
    out << "detected " << total << " nuclei over " << frames.size() << " frames\n";
    return kExitOk;
}

// ----------------------------------------------------------------- report

int cmd_report(const KeyValueConfig& cfg, std::ostream& out, std::ostream&) {
    const std::string out_dir = require_output_dir(cfg);
    const std::vector<std::string> inputs = cfg.get_string_list("report.inputs");
    if (inputs.empty()) throw ConfigError("report.inputs must list evaluation files");
    std::vector<std::string> names = cfg.get_string_list("report.names");
    if (!names.empty() && names.size() != inputs.size())
        throw ConfigError("report.names must match report.inputs in length");
    if (names.empty())
        for (const std::string& path : inputs)
            names.push_back(fs::path(path).stem().string());

    std::string csv = "method,precision,precision_std,recall,recall_std,f\n";
    out << "method                precision          recall             f\n";
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!fs::exists(inputs[i]))
            throw DataFailure("missing evaluation file " + inputs[i]);
        eval::ReportSummary s;
        try {
            s = eval::parse_report_summary(read_text_file(inputs[i]));
        } catch (const eval::EvalError& e) {
            throw DataFailure(inputs[i] + ": " + e.what());
        }
        const double f = eval::f_measure(s.macro_precision, s.macro_recall);
        csv += names[i] + ',' + fmt_double(s.macro_precision) + ',' +
               fmt_double(s.macro_precision_std) + ',' + fmt_double(s.macro_recall) +
               ',' + fmt_double(s.macro_recall_std) + ',' + fmt_double(f) + '\n';
        char line[160];
        std::snprintf(line, sizeof line, "%-20s  %.3f +- %.3f    %.3f +- %.3f    %.3f\n",
                      names[i].c_str(), s.macro_precision, s.macro_precision_std,
                      s.macro_recall, s.macro_recall_std, f);
        out << line;
    }
    write_file_atomic(out_dir + "/report.csv", csv);
    return kExitOk;
}

// ---------------------------------------------------------------- overlay

void draw_gt_cross(RgbImage& img, int cx, int cy) {
    for (int d = -5; d <= 5; ++d) {
        if (cx + d >= 0 && cx + d < img.width() && cy >= 0 && cy < img.height())
            img.set(cx + d, cy, 0, 255, 0);
        if (cy + d >= 0 && cy + d < img.height() && cx >= 0 && cx < img.width())
            img.set(cx, cy + d, 0, 255, 0);
    }
}

void draw_detection_point(RgbImage& img, int cx, int cy) {
    for (int d = -4; d <= 4; ++d)
        for (int sx : {-1, 1}) {
            const int x = cx + d * sx, y = cy + d;
            if (x >= 0 && x < img.width() && y >= 0 && y < img.height())
                img.set(x, y, 255, 0, 0);
        }
}

void draw_mask_contour(RgbImage& img, const BinaryMask& mask) {
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.get(x, y)) continue;
            const bool edge = x == 0 || y == 0 || x == mask.width() - 1 ||
                              y == mask.height() - 1 || !mask.get(x - 1, y) ||
                              !mask.get(x + 1, y) || !mask.get(x, y - 1) ||
                              !mask.get(x, y + 1);
            if (edge && x < img.width() && y < img.height()) img.set(x, y, 255, 0, 0);
        }
}

int cmd_overlay(const KeyValueConfig& cfg, std::ostream& out, std::ostream&) {
    const std::string out_dir = require_output_dir(cfg);
    const std::string frame_id = cfg.require_string("overlay.frame");
    const std::string det_path = cfg.require_string("overlay.detections");

    GroundTruthSet gt = load_dataset(resolve_dataset_root(cfg));
    const FrameRecord* rec = gt.find(frame_id);
    if (!rec) throw DataFailure("frame " + frame_id + " not in the dataset");

    RgbImage img(rec->edf_image);
    if (!fs::exists(det_path)) throw DataFailure("missing detections " + det_path);
    if (fs::is_directory(det_path)) {
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(det_path))
            if (entry.path().extension() == ".png") files.push_back(entry.path().string());
        std::sort(files.begin(), files.end());
        for (const std::string& f : files) draw_mask_contour(img, load_mask(f));
    } else if (det_path.size() > 4 && det_path.ends_with(".csv")) {
        for (const Point& p : parse_points_file(det_path))
            draw_detection_point(img, p.x, p.y);
    } else if (det_path.ends_with("_labels.png")) {
        const Gray16Image labels = load_png16(det_path);
        BinaryMask mask(labels.width, labels.height);
        for (int y = 0; y < labels.height; ++y)
            for (int x = 0; x < labels.width; ++x)
                if (labels.at(x, y) != 0) mask.set(x, y, true);
        draw_mask_contour(img, mask);
    } else {
        draw_mask_contour(img, load_mask(det_path));
    }
    for (const Point& p : rec->gt_points) draw_gt_cross(img, p.x, p.y);

    const std::string out_path =
        out_dir + "/" + cfg.get_string("overlay.out", "overlay_" + frame_id + ".png");
    save_png(out_path, img);
    out << "wrote " << out_path << "\n";
    return kExitOk;
}

}  // namespace

int run_command(const std::string& name, const KeyValueConfig& cfg, std::ostream& out,
                std::ostream& err) {
    if (std::find(kCommandNames.begin(), kCommandNames.end(), name) ==
        kCommandNames.end()) {
        err << "unknown command: " << name << "\n";
        return kExitConfig;
    }
    const std::string marker =
        cfg.has("output_dir") ? cfg.get_string("output_dir", "") + "/" + name + ".failed"
                              : "";
    auto fail = [&](int code, const std::string& message) {
        err << "error: " << message << "\n";
        if (!marker.empty() && fs::is_directory(cfg.get_string("output_dir", ""))) {
            try {
                write_file_atomic(marker, message + "\n");
            } catch (...) {
            }
        }
        return code;
    };
    try {
        cfg.reject_unknown_keys(allowed_keys(name));
        if (!marker.empty()) {
            std::error_code ec;
            fs::remove(marker, ec);
        }
        if (name == "check") return cmd_check(cfg, out, err);
        if (name == "segment") return cmd_segment(cfg, out, err);
        if (name == "tune") return cmd_tune(cfg, out, err);
        if (name == "evaluate") return cmd_evaluate(cfg, out, err);
        if (name == "cnn-train") return cmd_cnn_train(cfg, out, err);
        if (name == "cnn-detect") return cmd_cnn_detect(cfg, out, err);
        if (name == "report") return cmd_report(cfg, out, err);
        return cmd_overlay(cfg, out, err);
    } catch (const ConfigError& e) {
        return fail(kExitConfig, e.what());
    } catch (const seg::InvalidParams& e) {
        return fail(kExitConfig, e.what());
    } catch (const std::exception& e) {
        // dataset, image, model and filesystem problems all land here
        return fail(kExitData, e.what());
    }
}

}  // namespace nucleo::cli
