#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "nucleo/dataset.hpp"
#include "nucleo/image.hpp"

namespace nucleo::seg {

struct SegError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidWindow : SegError {
    explicit InvalidWindow(int w)
        : SegError("noise window must be odd and >= 3, got " + std::to_string(w)) {}
};
struct InvalidParams : SegError {
    using SegError::SegError;
};
struct EmptyRegion : SegError {
    EmptyRegion() : SegError("empty region") {}
};

// Horizontal run of foreground pixels, x0..x1 inclusive.
struct PixelRun {
    int y = 0;
    int x0 = 0;
    int x1 = 0;
    friend bool operator==(const PixelRun&, const PixelRun&) = default;
};

// Connected pixel region with the stats the segmenter filters on.
// mean_intensity is taken over whichever image the region was labeled
// against (the denoised image inside iterative_segment).
struct Region {
    std::vector<PixelRun> runs;  // sorted by (y, x0), non-overlapping
    long long area = 0;
    double mean_intensity = 0.0;
    double solidity = 1.0;
    int min_x = 0, min_y = 0, max_x = 0, max_y = 0;

    bool contains(int x, int y) const;
    // centroid of the pixel centers
    std::pair<double, double> centroid() const;
    std::vector<Point> pixels() const;
    bool touches_border(int width, int height) const {
        return min_x == 0 || min_y == 0 || max_x == width - 1 || max_y == height - 1;
    }
};

Region region_from_points(const std::vector<Point>& pixels,
                          const GrayImage* intensity = nullptr);

struct SegParams {
    int min_size = 150;
    int min_avg_intensity = 10;
    int max_avg_intensity = 120;
    double min_solidity = 0.88;
    std::vector<int> threshold_schedule = default_threshold_schedule();
    int seed_min_size = 15;
    int noise_window = 5;

    static std::vector<int> default_threshold_schedule();  // 10..140 step 10
    void validate() const;  // throws InvalidParams
    bool intensity_in_band(double mean) const {
        return mean >= min_avg_intensity && mean <= max_avg_intensity;
    }
};

// Local-statistics (Wiener-type) adaptive filter. Per pixel: local mean and
// variance over an odd window with edge-replicated borders, noise variance
// estimated as the mean of all local variances, then
//   out = mu + max(0, var - noise) / max(var, noise) * (x - mu)
// rounded and clamped to [0,255].
GrayImage denoise(const GrayImage& img, int window);

// Foreground = pixels strictly below t (nuclei are dark).
BinaryMask binarize_below(const GrayImage& img, int t);

// Maximal connected components of the mask, ordered by their first pixel in
// row-major scan order. mean_intensity is computed against `intensity`,
// which must match the mask size.
std::vector<Region> label_components(const BinaryMask& mask, const GrayImage& intensity,
                                     int connectivity = 8);

// Components without intensities (mean_intensity left 0).
std::vector<Region> find_components(const BinaryMask& mask, int connectivity = 8);

// area / count of lattice points inside or on the convex hull of the pixel
// centers. 1.0 for convex pixel sets; in (0,1] always.
double solidity(const std::vector<Point>& pixels);
double region_solidity(const std::vector<PixelRun>& runs, long long area);

// Iterative thresholding with region carrying:
//  - new components of at least seed_min_size become candidates;
//  - a component extending exactly one growing candidate replaces it while
//    the extension keeps min_solidity and the intensity band, otherwise the
//    candidate freezes at its previous extent;
//  - a component swallowing several candidates replaces them only when it is
//    more solid than every one of them, otherwise they all freeze;
//  - after the last threshold, candidates failing min_size, min_solidity or
//    the intensity band are dropped.
// Output regions are pairwise disjoint, ordered by (min_y, min_x).
std::vector<Region> iterative_segment(const GrayImage& img, const SegParams& params);

// Drops every region with a pixel on the outermost rows or columns.
std::vector<Region> remove_boundary_regions(std::vector<Region> regions, int width,
                                            int height);

// The full baseline method for one frame: denoise + iterative thresholding +
// boundary removal.
std::vector<Region> segment_frame(const GrayImage& img, const SegParams& params);

}  // namespace nucleo::seg
