#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "nucleo/commands.hpp"
#include "nucleo/config.hpp"
#include "nucleo/csv.hpp"
#include "nucleo/image.hpp"
#include "support/synthetic.hpp"

using namespace nucleo;
using nucleo::cli::KeyValueConfig;
using nucleo::cli::kExitConfig;
using nucleo::cli::kExitData;
using nucleo::cli::kExitOk;
namespace fs = std::filesystem;

namespace {

const std::string kBase = (fs::temp_directory_path() / "nucleo_cli").string();
const std::string kData = kBase + "/data";

struct RunResult {
    int code = 0;
    std::string out;
    std::string err;
};

RunResult run(const std::string& command, const KeyValueConfig& cfg) {
    std::ostringstream out, err;
    RunResult r;
    r.code = cli::run_command(command, cfg, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

KeyValueConfig base_cfg(const std::string& out_dir) {
    KeyValueConfig cfg;
    cfg.set("dataset", kData);
    cfg.set("output_dir", kBase + "/" + out_dir);
    cfg.set("threads", "2");
    return cfg;
}

void ensure_dataset() {
    static bool done = false;
    if (!done) {
        fs::remove_all(kBase);
        // 100x100 disk frames; frame000 holds a nucleus at a patch center
        testsup::write_disk_dataset(kData, 4, 2, 100, 100, 9, 12345);
        done = true;
    }
}

std::string slurp(const std::string& path) { return read_text_file(path); }

}  // namespace

TEST_CASE("check reports counts and flags non-published totals") {
    ensure_dataset();
    auto cfg = base_cfg("out_check");
    const RunResult r = run("check", cfg);
    CHECK(r.code == kExitData);  // six synthetic frames are not the survey data
    CHECK(r.out.find("frames_total,2,2,2,6") != std::string::npos);
    CHECK(slurp(kBase + "/out_check/summary.csv") == r.out);
}

TEST_CASE("unknown keys and malformed values exit with config errors") {
    ensure_dataset();
    auto cfg = base_cfg("out_badkey");
    cfg.set("seg.min_sized", "10");
    CHECK(run("segment", cfg).code == kExitConfig);

    auto cfg2 = base_cfg("out_badval");
    cfg2.set("seg.min_size", "abc");
    CHECK(run("segment", cfg2).code == kExitConfig);

    auto cfg3 = base_cfg("out_badband");
    cfg3.set("seg.min_avg_intensity", "130");
    cfg3.set("seg.max_avg_intensity", "120");
    CHECK(run("segment", cfg3).code == kExitConfig);

    CHECK(run("nonsense", base_cfg("out_nocmd")).code == kExitConfig);
}

TEST_CASE("missing dataset is a config error") {
#ifndef _WIN32
    unsetenv("NUCLEO_DATASET");
#endif
    KeyValueConfig cfg;
    cfg.set("output_dir", kBase + "/out_nodata");
    CHECK(run("segment", cfg).code == kExitConfig);
}

TEST_CASE("segment writes regions, labels and masks per frame") {
    ensure_dataset();
    auto cfg = base_cfg("out_seg");
    cfg.set("seg.split", "test");
    const RunResult r = run("segment", cfg);
    REQUIRE(r.code == kExitOk);

    const std::string dir = kBase + "/out_seg";
    const std::string csv = slurp(dir + "/regions.csv");
    CHECK(csv.rfind("frame_id,region_id,centroid_x,centroid_y,area,solidity,"
                    "mean_intensity\n",
                    0) == 0);
    CHECK(csv.find("frame004,1,") != std::string::npos);
    CHECK(fs::exists(dir + "/frame004_labels.png"));
    CHECK(fs::exists(dir + "/frame004_mask.png"));
    CHECK(fs::exists(dir + "/frame005_labels.png"));
    CHECK_FALSE(fs::exists(dir + "/frame000_labels.png"));  // train frame

    // the label raster covers the mask exactly
    const Gray16Image labels = load_png16(dir + "/frame004_labels.png");
    const BinaryMask mask = load_mask(dir + "/frame004_mask.png");
    long long labeled = 0;
    for (std::size_t i = 0; i < labels.pixels.size(); ++i) {
        if (labels.pixels[i] != 0) ++labeled;
        CHECK((labels.pixels[i] != 0) == (mask.bits()[i] != 0));
    }
    CHECK(labeled > 0);
}

TEST_CASE("segment honors frame selection") {
    ensure_dataset();
    auto cfg = base_cfg("out_seg_one");
    cfg.set("seg.split", "all");
    cfg.set("seg.frames", "frame001");
    REQUIRE(run("segment", cfg).code == kExitOk);
    CHECK(fs::exists(kBase + "/out_seg_one/frame001_labels.png"));
    CHECK_FALSE(fs::exists(kBase + "/out_seg_one/frame000_labels.png"));

    auto bad = base_cfg("out_seg_two");
    bad.set("seg.split", "test");
    bad.set("seg.frames", "frame001");  // train frame: not in the split
    CHECK(run("segment", bad).code == kExitConfig);
}

TEST_CASE("evaluate scores hand-planted perfect detections") {
    ensure_dataset();
    const std::string det = kBase + "/dets_exact";
    fs::create_directories(det);
    const GroundTruthSet gt = load_dataset(kData);
    for (const FrameRecord& f : gt.frames) {
        if (f.split != Split::Test) continue;
        std::string rows = "x,y\n";
        for (const Point& p : f.gt_points)
            rows += std::to_string(p.x) + ',' + std::to_string(p.y) + '\n';
        write_file_atomic(det + "/" + f.frame_id + ".csv", rows);
    }
    auto cfg = base_cfg("out_eval_exact");
    cfg.set("eval.detections", det);
    const RunResult r = run("evaluate", cfg);
    REQUIRE(r.code == kExitOk);
    const std::string csv = slurp(kBase + "/out_eval_exact/evaluation.csv");
    CHECK(csv.find("summary_macro,,,,1.000000,1.000000,1.000000") !=
          std::string::npos);
    CHECK(csv.find("summary_macro_std,,,,0.000000,0.000000,0.000000") !=
          std::string::npos);

    // the failure marker from previous bad runs must be gone
    CHECK_FALSE(fs::exists(kBase + "/out_eval_exact/evaluate.failed"));
}

TEST_CASE("evaluate consumes segmentation rasters") {
    ensure_dataset();
    auto seg_cfg = base_cfg("out_seg_eval");
    seg_cfg.set("seg.split", "test");
    REQUIRE(run("segment", seg_cfg).code == kExitOk);

    for (const char* encoding : {"labels", "mask"}) {
        auto cfg = base_cfg(std::string("out_eval_") + encoding);
        cfg.set("eval.detections", kBase + "/out_seg_eval");
        cfg.set("eval.encoding", encoding);
        const RunResult r = run("evaluate", cfg);
        REQUIRE(r.code == kExitOk);
        const std::string csv =
            slurp(kBase + "/out_eval_" + encoding + "/evaluation.csv");
        // clean disks on clean frames: the segmenter nails every nucleus
        CHECK(csv.find("summary_macro,,,,1.000000,1.000000,1.000000") !=
              std::string::npos);
    }
}

TEST_CASE("evaluate fails with a marker when detections are missing") {
    ensure_dataset();
    auto cfg = base_cfg("out_eval_missing");
    cfg.set("eval.detections", kBase + "/no_such_dir");
    const RunResult r = run("evaluate", cfg);
    CHECK(r.code == kExitData);
    CHECK(fs::exists(kBase + "/out_eval_missing/evaluate.failed"));
    CHECK_FALSE(r.err.empty());

    // a directory that lacks one frame's file also fails
    const std::string det = kBase + "/dets_partial";
    fs::create_directories(det);
    write_file_atomic(det + "/frame004.csv", "x,y\n");
    auto cfg2 = base_cfg("out_eval_partial");
    cfg2.set("eval.detections", det);
    CHECK(run("evaluate", cfg2).code == kExitData);
}

TEST_CASE("tune finds the planted optimum on a small grid") {
    ensure_dataset();
    auto cfg = base_cfg("out_tune");
    cfg.set("grid.min_size", "120,4000");  // 4000 kills every candidate
    cfg.set("grid.min_avg_intensity", "10");
    cfg.set("grid.max_avg_intensity", "120");
    cfg.set("grid.min_solidity", "0.8");
    const RunResult r = run("tune", cfg);
    REQUIRE(r.code == kExitOk);
    const std::string csv = slurp(kBase + "/out_tune/tuning.csv");
    CHECK(csv.rfind("min_size,min_avg_intensity,max_avg_intensity,min_solidity",
                    0) == 0);
    CHECK(csv.find("\n120,10,120,") != std::string::npos);
    CHECK(csv.find("\n4000,10,120,") != std::string::npos);
    const std::string best = slurp(kBase + "/out_tune/best_params.cfg");
    CHECK(best.find("seg.min_size = 120") != std::string::npos);
    CHECK(r.out.find("best F") != std::string::npos);

    // best_params.cfg are valid config lines
    auto parsed = KeyValueConfig::parse(best);
    CHECK(parsed.get_int("seg.min_size", 0) == 120);
}

TEST_CASE("cnn training and detection round-trip") {
    ensure_dataset();
    auto tcfg = base_cfg("out_cnn");
    tcfg.set("seed", "5");
    tcfg.set("threads", "1");
    tcfg.set("cnn.epochs", "3");
    tcfg.set("cnn.batch", "8");
    const RunResult tr = run("cnn-train", tcfg);
    REQUIRE(tr.code == kExitOk);
    const std::string model_path = kBase + "/out_cnn/model.bin";
    CHECK(fs::exists(model_path));
    const std::string log = slurp(kBase + "/out_cnn/training_log.csv");
    CHECK(log.rfind("epoch,mean_loss,accuracy\n", 0) == 0);
    CHECK(log.find("\n3,") != std::string::npos);

    auto dcfg = base_cfg("out_det");
    dcfg.set("cnn.model", model_path);
    dcfg.set("cnn.infer_stride", "5");
    dcfg.set("threads", "2");
    dcfg.set("cnn.save_hitmaps", "1");
    const RunResult dr = run("cnn-detect", dcfg);
    REQUIRE(dr.code == kExitOk);
    for (const char* id : {"frame004", "frame005"}) {
        const std::string csv = slurp(kBase + "/out_det/" + std::string(id) + ".csv");
        CHECK(csv.rfind("x,y\n", 0) == 0);
        CHECK(fs::exists(kBase + "/out_det/" + std::string(id) + "_hitmap.png"));
    }

    // a missing model is a data error
    auto bad = base_cfg("out_det_bad");
    bad.set("cnn.model", kBase + "/nope.bin");
    CHECK(run("cnn-detect", bad).code == kExitData);
}

TEST_CASE("identical config and seed reproduce artifacts byte for byte") {
    ensure_dataset();
    for (const char* which : {"a", "b"}) {
        auto cfg = base_cfg(std::string("out_rep_") + which);
        cfg.set("seg.split", "test");
        REQUIRE(run("segment", cfg).code == kExitOk);

        auto ecfg = base_cfg(std::string("out_repe_") + which);
        ecfg.set("eval.detections", kBase + "/out_rep_" + which);
        ecfg.set("eval.encoding", "labels");
        REQUIRE(run("evaluate", ecfg).code == kExitOk);

        auto ccfg = base_cfg(std::string("out_repc_") + which);
        ccfg.set("seed", "9");
        ccfg.set("threads", "1");
        ccfg.set("cnn.epochs", "2");
        REQUIRE(run("cnn-train", ccfg).code == kExitOk);
    }
    CHECK(slurp(kBase + "/out_rep_a/regions.csv") ==
          slurp(kBase + "/out_rep_b/regions.csv"));
    CHECK(slurp(kBase + "/out_repe_a/evaluation.csv") ==
          slurp(kBase + "/out_repe_b/evaluation.csv"));
    CHECK(slurp(kBase + "/out_repc_a/training_log.csv") ==
          slurp(kBase + "/out_repc_b/training_log.csv"));
    CHECK(slurp(kBase + "/out_repc_a/model.bin") ==
          slurp(kBase + "/out_repc_b/model.bin"));
}

TEST_CASE("report merges evaluation files") {
    ensure_dataset();
    // reuse the byte-identical evaluations from the determinism case if
    // present, else build one pair
    const std::string in1 = kBase + "/out_repe_a/evaluation.csv";
    const std::string in2 = kBase + "/out_repe_b/evaluation.csv";
    if (!fs::exists(in1)) return;

    auto cfg = base_cfg("out_report");
    cfg.set("report.inputs", in1 + "," + in2);
    cfg.set("report.names", "baseline,baseline_rerun");
    const RunResult r = run("report", cfg);
    REQUIRE(r.code == kExitOk);
    const std::string csv = slurp(kBase + "/out_report/report.csv");
    CHECK(csv.rfind("method,precision,precision_std,recall,recall_std,f\n", 0) == 0);
    CHECK(csv.find("baseline,") != std::string::npos);
    CHECK(csv.find("baseline_rerun,") != std::string::npos);
    CHECK(r.out.find("baseline") != std::string::npos);

    auto bad = base_cfg("out_report_bad");
    bad.set("report.inputs", in1);
    bad.set("report.names", "a,b");  // count mismatch
    CHECK(run("report", bad).code == kExitConfig);

    auto gone = base_cfg("out_report_gone");
    gone.set("report.inputs", kBase + "/missing_eval.csv");
    CHECK(run("report", gone).code == kExitData);
}

TEST_CASE("overlay draws ground truth and detections") {
    ensure_dataset();
    const std::string det = kBase + "/dets_overlay";
    fs::create_directories(det);
    write_file_atomic(det + "/frame004.csv", "x,y\n50,50\n");

    auto cfg = base_cfg("out_overlay");
    cfg.set("overlay.frame", "frame004");
    cfg.set("overlay.detections", det + "/frame004.csv");
    const RunResult r = run("overlay", cfg);
    REQUIRE(r.code == kExitOk);
    const std::string png = kBase + "/out_overlay/overlay_frame004.png";
    REQUIRE(fs::exists(png));
    // marks mean the decoded luminance differs from the source frame
    const GroundTruthSet gt = load_dataset(kData);
    const GrayImage back = load_frame(png);
    CHECK(back.width() == 100);
    CHECK(back.pixels() != gt.find("frame004")->edf_image.pixels());

    auto bad = base_cfg("out_overlay_bad");
    bad.set("overlay.frame", "frame999");
    bad.set("overlay.detections", det + "/frame004.csv");
    CHECK(run("overlay", bad).code == kExitData);
}
