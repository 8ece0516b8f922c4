#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <utility>

#include "nucleo/cnn.hpp"
#include "nucleo/dataset.hpp"
#include "nucleo/eval.hpp"
#include "nucleo/image.hpp"
#include "nucleo/segment.hpp"

namespace py = pybind11;
using namespace nucleo;

namespace {

GrayImage image_from_array(const py::array_t<std::uint8_t>& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2d uint8 array");
    const py::buffer_info info = a.request();
    const int h = static_cast<int>(info.shape[0]);
    const int w = static_cast<int>(info.shape[1]);
    GrayImage img(w, h);
    auto acc = a.unchecked<2>();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.at(x, y) = acc(y, x);
    return img;
}

py::array_t<std::uint8_t> array_from_image(const GrayImage& img) {
    py::array_t<std::uint8_t> out({img.height(), img.width()});
    std::memcpy(out.mutable_data(), img.pixels().data(), img.pixels().size());
    return out;
}

std::vector<Point> points_from_array(const py::array_t<long long>& a) {
    if (a.ndim() != 2 || (a.shape(0) > 0 && a.shape(1) != 2))
        throw py::value_error("expected an (n, 2) array of x,y points");
    std::vector<Point> pts(static_cast<std::size_t>(a.shape(0)));
    auto acc = a.unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i) {
        pts[i].x = static_cast<int>(acc(i, 0));
        pts[i].y = static_cast<int>(acc(i, 1));
    }
    return pts;
}

py::array_t<long long> array_from_points(const std::vector<Point>& pts) {
    py::array_t<long long> out(
        {static_cast<py::ssize_t>(pts.size()), py::ssize_t{2}});
    auto acc = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        acc(static_cast<py::ssize_t>(i), 0) = pts[i].x;
        acc(static_cast<py::ssize_t>(i), 1) = pts[i].y;
    }
    return out;
}

BinaryMask mask_from_array(const py::array& a) {
    py::array_t<std::uint8_t> bytes = py::cast<py::array_t<std::uint8_t>>(
        a.attr("astype")(py::dtype::of<std::uint8_t>()));
    if (bytes.ndim() != 2) throw py::value_error("expected a 2d mask array");
    const int h = static_cast<int>(bytes.shape(0));
    const int w = static_cast<int>(bytes.shape(1));
    BinaryMask m(w, h);
    auto acc = bytes.unchecked<2>();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (acc(y, x) != 0) m.set(x, y, true);
    return m;
}

py::tuple outcome_tuple(const eval::MatchOutcome& o) {
    return py::make_tuple(o.tp, o.fp, o.fn);
}

GroundTruthSet set_from_lists(const std::vector<py::array_t<std::uint8_t>>& frames,
                              const std::vector<py::array_t<long long>>& points) {
    if (frames.size() != points.size())
        throw py::value_error("frames and points must have the same length");
    if (frames.empty()) throw py::value_error("no frames given");
    GroundTruthSet gt;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        FrameRecord rec;
        rec.frame_id = "frame" + std::to_string(i);
        rec.split = Split::Train;
        rec.edf_image = image_from_array(frames[i]);
        rec.gt_points = points_from_array(points[i]);
        gt.frames.push_back(std::move(rec));
    }
    return gt;
}

}  // namespace

PYBIND11_MODULE(_nucleo, m) {
    m.doc() = "nucleus detection toolkit core";

    m.def(
        "load_frame",
        [](const std::string& path) { return array_from_image(load_frame(path)); },
        py::arg("path"), "Load a PNG/BMP/PGM frame as a 2d uint8 array.");

    m.def(
        "dataset_summary",
        [](const std::string& root) {
            return dataset_summary(load_dataset(root)).to_csv();
        },
        py::arg("root"), "Per-grade frame and point counts as CSV text.");

    m.def(
        "denoise",
        [](const py::array_t<std::uint8_t>& img, int window) {
            return array_from_image(seg::denoise(image_from_array(img), window));
        },
        py::arg("image"), py::arg("window") = 5);

    m.def(
        "segment",
        [](const py::array_t<std::uint8_t>& img, int min_size,
           int min_avg_intensity, int max_avg_intensity, double min_solidity,
           std::vector<int> thresholds, int seed_min_size, int noise_window) {
            seg::SegParams p;
            p.min_size = min_size;
            p.min_avg_intensity = min_avg_intensity;
            p.max_avg_intensity = max_avg_intensity;
            p.min_solidity = min_solidity;
            if (!thresholds.empty()) p.threshold_schedule = std::move(thresholds);
            p.seed_min_size = seed_min_size;
            p.noise_window = noise_window;
            const GrayImage frame = image_from_array(img);
            const std::vector<seg::Region> regions = seg::segment_frame(frame, p);

            py::array_t<std::uint16_t> labels({frame.height(), frame.width()});
            auto acc = labels.mutable_unchecked<2>();
            for (int y = 0; y < frame.height(); ++y)
                for (int x = 0; x < frame.width(); ++x) acc(y, x) = 0;
            py::list stats;
            for (std::size_t i = 0; i < regions.size(); ++i) {
                for (const seg::PixelRun& run : regions[i].runs)
                    for (int x = run.x0; x <= run.x1; ++x)
                        acc(run.y, x) = static_cast<std::uint16_t>(i + 1);
                auto [cx, cy] = regions[i].centroid();
                py::dict d;
                d["label"] = i + 1;
                d["centroid"] = py::make_tuple(cx, cy);
                d["area"] = regions[i].area;
                d["solidity"] = regions[i].solidity;
                d["mean_intensity"] = regions[i].mean_intensity;
                stats.append(std::move(d));
            }
            return py::make_tuple(std::move(labels), std::move(stats));
        },
        py::arg("image"), py::arg("min_size") = 150,
        py::arg("min_avg_intensity") = 10, py::arg("max_avg_intensity") = 120,
        py::arg("min_solidity") = 0.88,
        py::arg("thresholds") = std::vector<int>{}, py::arg("seed_min_size") = 15,
        py::arg("noise_window") = 5,
        "Run the thresholding segmenter; returns (label_image, region_stats).");

    m.def(
        "match_points",
        [](const py::array_t<long long>& dets, const py::array_t<long long>& gt,
           int radius) {
            return outcome_tuple(eval::match_points(points_from_array(dets),
                                                    points_from_array(gt), radius));
        },
        py::arg("detections"), py::arg("ground_truth"), py::arg("radius") = 10,
        "(tp, fp, fn) for point detections against point ground truth.");

    m.def(
        "match_mask",
        [](const py::array& mask, const py::array_t<long long>& gt) {
            return outcome_tuple(
                eval::match_mask(mask_from_array(mask), points_from_array(gt)));
        },
        py::arg("mask"), py::arg("ground_truth"),
        "(tp, fp, fn) for a binary detection mask against point ground truth.");

    m.def("f_measure", &eval::f_measure, py::arg("precision"), py::arg("recall"));

    m.def(
        "solidity",
        [](const py::array& mask) {
            const BinaryMask m2 = mask_from_array(mask);
            std::vector<Point> pixels;
            for (int y = 0; y < m2.height(); ++y)
                for (int x = 0; x < m2.width(); ++x)
                    if (m2.get(x, y)) pixels.push_back({x, y});
            return seg::solidity(pixels);
        },
        py::arg("mask"), "Area over convex hull lattice count of a pixel set.");

    m.def(
        "extract_patches",
        [](const py::array_t<std::uint8_t>& img, const py::array_t<long long>& gt,
           int stride, int patch, int pos_radius) {
            const cnn::PatchSet set =
                cnn::extract_patches(image_from_array(img), "frame",
                                     points_from_array(gt), stride, patch,
                                     pos_radius);
            std::vector<Point> centers;
            py::list labels;
            for (const cnn::PatchRef& p : set.patches) {
                centers.push_back(p.center);
                labels.append(p.positive);
            }
            py::dict out;
            out["count"] = set.patches.size();
            out["positives"] = set.positives();
            out["mean"] = set.mean;
            out["centers"] = array_from_points(centers);
            out["positive_flags"] = std::move(labels);
            return out;
        },
        py::arg("image"), py::arg("ground_truth"), py::arg("stride") = 15,
        py::arg("patch") = 75, py::arg("pos_radius") = 15);

    py::class_<cnn::CnnModel>(m, "Model")
        .def_static("load", &cnn::load_model, py::arg("path"))
        .def("save",
             [](const cnn::CnnModel& model, const std::string& path) {
                 cnn::save_model(path, model);
             },
             py::arg("path"))
        .def_property_readonly("input_mean",
                               [](const cnn::CnnModel& m2) { return m2.input_mean; })
        .def_property_readonly(
            "parameter_count",
            [](const cnn::CnnModel& m2) { return m2.parameter_count(); })
        .def(
            "forward",
            [](const cnn::CnnModel& model, const py::array_t<std::uint8_t>& patch) {
                const GrayImage img = image_from_array(patch);
                if (img.width() != model.cfg.input || img.height() != model.cfg.input)
                    throw py::value_error("patch must match the model input size");
                const std::vector<double> x = cnn::normalize_patch(
                    img, 0, 0, model.cfg.input, model.input_mean);
                auto [pn, pp] = cnn::forward(model, x);
                return py::make_tuple(pn, pp);
            },
            py::arg("patch"), "Class probabilities (p_negative, p_positive).")
        .def(
            "hitmap",
            [](const cnn::CnnModel& model, const py::array_t<std::uint8_t>& frame,
               int stride, int threads) {
                const cnn::HitMap hm =
                    cnn::infer_hitmap(model, image_from_array(frame), stride, threads);
                py::array_t<float> out({hm.height, hm.width});
                std::memcpy(out.mutable_data(), hm.values.data(),
                            hm.values.size() * sizeof(float));
                return out;
            },
            py::arg("frame"), py::arg("stride") = 3, py::arg("threads") = 1)
        .def(
            "detect",
            [](const cnn::CnnModel& model, const py::array_t<std::uint8_t>& frame,
               int stride, int dilation_radius, double cutoff, int min_area,
               int threads) {
                const cnn::HitMap hm =
                    cnn::infer_hitmap(model, image_from_array(frame), stride, threads);
                return array_from_points(
                    cnn::postprocess_hitmap(hm, dilation_radius, cutoff, min_area));
            },
            py::arg("frame"), py::arg("stride") = 3, py::arg("dilation_radius") = 2,
            py::arg("cutoff") = 0.5, py::arg("min_area") = 100,
            py::arg("threads") = 1, "Detected nucleus centers as an (n, 2) array.");

    m.def(
        "train_model",
        [](const std::vector<py::array_t<std::uint8_t>>& frames,
           const std::vector<py::array_t<long long>>& points, int epochs, double lr,
           int batch, std::uint64_t seed, int threads, int stride, int pos_radius,
           bool oversample, int patch) {
            const GroundTruthSet gt = set_from_lists(frames, points);
            const cnn::PatchSet set = cnn::extract_patches_split(
                gt, Split::Train, stride, patch, pos_radius);
            cnn::CnnConfig cfg = cnn::CnnConfig::standard();
            cfg.input = patch;
            cnn::TrainOptions opt;
            opt.epochs = epochs;
            opt.lr = lr;
            opt.batch = batch;
            opt.seed = seed;
            opt.threads = threads;
            opt.oversample_positives = oversample;
            cnn::TrainResult r =
                cnn::train(cnn::CnnModel::random_init(cfg, seed), set, opt);
            py::list log;
            for (const cnn::EpochStats& e : r.log)
                log.append(py::make_tuple(e.epoch, e.mean_loss, e.accuracy));
            return py::make_tuple(std::move(r.model), std::move(log));
        },
        py::arg("frames"), py::arg("points"), py::arg("epochs") = 10,
        py::arg("lr") = 0.001, py::arg("batch") = 64, py::arg("seed") = 0,
        py::arg("threads") = 1, py::arg("stride") = 15, py::arg("pos_radius") = 15,
        py::arg("oversample") = false, py::arg("patch") = 75,
        "Train a patch classifier; returns (model, [(epoch, loss, accuracy)]).");
}
