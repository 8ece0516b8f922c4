#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nucleo/dataset.hpp"
#include "nucleo/image.hpp"

namespace nucleo::cnn {

struct CnnError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShapeMismatch : CnnError {
    using CnnError::CnnError;
};
struct FrameTooSmall : CnnError {
    FrameTooSmall(int w, int h, int patch)
        : CnnError("frame " + std::to_string(w) + "x" + std::to_string(h) +
                   " cannot hold a " + std::to_string(patch) + "x" +
                   std::to_string(patch) + " patch") {}
};
struct NonFiniteLoss : CnnError {
    NonFiniteLoss() : CnnError("training loss is not finite, run aborted") {}
};
struct ModelIoError : CnnError {
    using CnnError::CnnError;
};

// Layer stack: conv k1 (c1 filters) -> 2x2 max pool -> conv k2 (c2 filters)
// -> 2x2 max pool -> FC hidden + ReLU -> FC 2 -> softmax. Tensors are
// channel-major [c][y][x]; the flatten order is (c, y, x).
struct CnnConfig {
    int input = 75;
    int k1 = 5;
    int c1 = 6;
    int k2 = 5;
    int c2 = 12;
    int hidden = 128;

    int conv1_out() const { return input - k1 + 1; }
    int pool1_out() const { return conv1_out() / 2; }
    int conv2_out() const { return pool1_out() - k2 + 1; }
    int pool2_out() const { return conv2_out() / 2; }
    int fc_in() const { return pool2_out() * pool2_out() * c2; }
    void validate() const;  // throws ShapeMismatch
    static CnnConfig standard();  // 75 -> 71 -> 35 -> 31 -> 15, 6/12/128

    friend bool operator==(const CnnConfig&, const CnnConfig&) = default;
};

struct CnnModel {
    CnnConfig cfg;
    std::vector<double> conv1_w, conv1_b;  // [c1][1][k1][k1], [c1]
    std::vector<double> conv2_w, conv2_b;  // [c2][c1][k2][k2], [c2]
    std::vector<double> fc1_w, fc1_b;      // [hidden][fc_in], [hidden]
    std::vector<double> fc2_w, fc2_b;      // [2][hidden], [2]
    double input_mean = 0.0;  // subtracted from scaled pixels, stored with the weights

    static CnnModel zeros(const CnnConfig& cfg);
    // fan-in uniform: each tensor from U(-sqrt(6/fan_in), +sqrt(6/fan_in)),
    // biases zero. Same seed, same bits, independent of the platform RNG.
    static CnnModel random_init(const CnnConfig& cfg, std::uint64_t seed);

    std::size_t parameter_count() const;
};

// One sampled window. Pixel data stays in the source frame; patches are
// materialized per batch.
struct PatchRef {
    int frame = 0;  // index into PatchSet::frames
    int x0 = 0, y0 = 0;
    Point center;
    bool positive = false;
};

struct PatchSet {
    std::vector<GrayImage> frames;
    std::vector<std::string> frame_ids;
    std::vector<PatchRef> patches;
    int patch_size = 75;
    double mean = 0.0;  // mean of scaled ([0,1]) pixel values over all patches

    long long positives() const;
};

// Stride grid of fully contained windows; a patch is positive iff its center
// is within pos_radius (Euclidean) of some gt point.
PatchSet extract_patches(const GrayImage& frame, const std::string& frame_id,
                         const std::vector<Point>& gt, int stride = 15,
                         int patch = 75, int pos_radius = 15);

// Same over every frame of one split, loading frame images from disk.
PatchSet extract_patches_split(const GroundTruthSet& gt, Split split,
                               int stride = 15, int patch = 75, int pos_radius = 15);

// patch pixels scaled to [0,1] minus mean, row-major
std::vector<double> normalize_patch(const GrayImage& frame, int x0, int y0,
                                    int patch, double mean);

// (p_neg, p_pos), summing to 1
std::pair<double, double> forward(const CnnModel& model,
                                  const std::vector<double>& patch);

struct PatchSample {
    std::vector<double> pixels;
    int label = 0;  // 1 = positive
};

// One SGD step on the mean softmax cross-entropy of the batch; returns that
// loss. Per-sample gradients are summed in sample order (thread chunks are
// combined in thread order), so a fixed (seed, threads) pair reproduces bits.
double train_step(CnnModel& model, const std::vector<PatchSample>& batch,
                  double lr = 0.001, int threads = 1);

struct TrainOptions {
    int epochs = 100;
    double lr = 0.001;
    int batch = 64;
    std::uint64_t seed = 0;
    int threads = 1;
    bool oversample_positives = false;
};

struct EpochStats {
    int epoch = 0;       // 1-based
    double mean_loss = 0.0;
    double accuracy = 0.0;  // over the epoch's samples, measured pre-update
};

struct TrainResult {
    CnnModel model;
    std::vector<EpochStats> log;
};

TrainResult train(CnnModel model, const PatchSet& patches, const TrainOptions& opt);

// epoch,mean_loss,accuracy
std::string training_log_csv(const std::vector<EpochStats>& log);

struct HitMap {
    int width = 0, height = 0;
    std::vector<float> values;  // p_pos at probed centers, 0 elsewhere

    float at(int x, int y) const {
        return values[static_cast<std::size_t>(y) * width + x];
    }
};

// Scores every stride-aligned fully contained window and writes p_pos at the
// window center. Uses a dense reformulation of the layer stack that is
// bit-equal to calling forward() per window.
HitMap infer_hitmap(const CnnModel& model, const GrayImage& frame, int stride = 3,
                    int threads = 1);

// grayscale disk dilation -> strictly-above-cutoff mask -> 8-connected
// components -> drop area < min_area -> rounded centroids, in component scan
// order
std::vector<Point> postprocess_hitmap(const HitMap& map, int dilation_radius = 2,
                                      double cutoff = 0.5, int min_area = 100);

Gray16Image hitmap_to_gray16(const HitMap& map);

// versioned little-endian binary dump; round-trips exactly
void save_model(const std::string& path, const CnnModel& model);
CnnModel load_model(const std::string& path);

}  // namespace nucleo::cnn
