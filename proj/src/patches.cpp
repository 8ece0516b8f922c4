#include <cstdint>
#include <string>
#include <vector>

#include "nucleo/cnn.hpp"

namespace nucleo::cnn {

long long PatchSet::positives() const {
    long long n = 0;
    for (const PatchRef& p : patches) n += p.positive ? 1 : 0;
    return n;
}

namespace {

// appends one frame's grid to `set` and returns the raw integer sum of all
// patch pixels, so multi-frame means are exact
std::int64_t extract_into(PatchSet& set, const GrayImage& frame,
                          const std::string& frame_id,
                          const std::vector<Point>& gt, int stride, int patch,
                          int pos_radius) {
    const int w = frame.width(), h = frame.height();
    if (w < patch || h < patch) throw FrameTooSmall(w, h, patch);
    if (stride < 1) throw CnnError("stride must be >= 1");

    const int frame_idx = static_cast<int>(set.frames.size());
    set.frames.push_back(frame);
    set.frame_ids.push_back(frame_id);

    // integral image for O(1) window sums
    std::vector<std::int64_t> ii(static_cast<std::size_t>(w + 1) * (h + 1), 0);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* row = frame.pixels().data() + static_cast<std::size_t>(y) * w;
        std::int64_t rowsum = 0;
        for (int x = 0; x < w; ++x) {
            rowsum += row[x];
            ii[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] =
                ii[static_cast<std::size_t>(y) * (w + 1) + x + 1] + rowsum;
        }
    }
    auto window_sum = [&](int x0, int y0) {
        const std::size_t W = w + 1;
        return ii[(y0 + patch) * W + x0 + patch] - ii[(y0 + patch) * W + x0] -
               ii[static_cast<std::size_t>(y0) * W + x0 + patch] +
               ii[static_cast<std::size_t>(y0) * W + x0];
    };

    const long long r2 = static_cast<long long>(pos_radius) * pos_radius;
    std::int64_t pixel_sum = 0;
    for (int y0 = 0; y0 + patch <= h; y0 += stride) {
        for (int x0 = 0; x0 + patch <= w; x0 += stride) {
            PatchRef ref;
            ref.frame = frame_idx;
            ref.x0 = x0;
            ref.y0 = y0;
            ref.center = Point{x0 + patch / 2, y0 + patch / 2};
            for (const Point& p : gt) {
                const long long dx = ref.center.x - p.x;
                const long long dy = ref.center.y - p.y;
                if (dx * dx + dy * dy <= r2) {
                    ref.positive = true;
                    break;
                }
            }
            pixel_sum += window_sum(x0, y0);
            set.patches.push_back(ref);
        }
    }
    return pixel_sum;
}

double mean_from_sum(std::int64_t pixel_sum, std::size_t n_patches, int patch) {
    if (n_patches == 0) return 0.0;
    const double total_pixels =
        static_cast<double>(n_patches) * patch * patch;
    return static_cast<double>(pixel_sum) / total_pixels / 255.0;
}

}  // namespace

PatchSet extract_patches(const GrayImage& frame, const std::string& frame_id,
                         const std::vector<Point>& gt, int stride, int patch,
                         int pos_radius) {
    PatchSet set;
    set.patch_size = patch;
    std::int64_t sum = extract_into(set, frame, frame_id, gt, stride, patch, pos_radius);
    set.mean = mean_from_sum(sum, set.patches.size(), patch);
    return set;
}

PatchSet extract_patches_split(const GroundTruthSet& gt, Split split, int stride,
                               int patch, int pos_radius) {
    PatchSet set;
    set.patch_size = patch;
    std::int64_t sum = 0;
    for (const FrameRecord& rec : gt.frames) {
        if (rec.split != split) continue;
        sum += extract_into(set, rec.edf_image, rec.frame_id, rec.gt_points, stride,
                            patch, pos_radius);
    }
    set.mean = mean_from_sum(sum, set.patches.size(), patch);
    return set;
}

std::vector<double> normalize_patch(const GrayImage& frame, int x0, int y0,
                                    int patch, double mean) {
    if (x0 < 0 || y0 < 0 || x0 + patch > frame.width() || y0 + patch > frame.height())
        throw ShapeMismatch("patch window outside the frame");
    std::vector<double> out(static_cast<std::size_t>(patch) * patch);
    for (int y = 0; y < patch; ++y) {
        const std::uint8_t* row =
            frame.pixels().data() + static_cast<std::size_t>(y0 + y) * frame.width() + x0;
        for (int x = 0; x < patch; ++x)
            out[static_cast<std::size_t>(y) * patch + x] = row[x] / 255.0 - mean;
    }
    return out;
}

}  // namespace nucleo::cnn
