#include "nucleo/segment.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>

namespace nucleo::seg {

bool Region::contains(int x, int y) const {
    if (x < min_x || x > max_x || y < min_y || y > max_y) return false;
    // first run with run.y > y, or run.y == y && run.x0 > x
    auto it = std::upper_bound(runs.begin(), runs.end(), std::pair(y, x),
                               [](const std::pair<int, int>& p, const PixelRun& r) {
                                   return p.first < r.y ||
                                          (p.first == r.y && p.second < r.x0);
                               });
    if (it == runs.begin()) return false;
    --it;
    return it->y == y && x >= it->x0 && x <= it->x1;
}

std::pair<double, double> Region::centroid() const {
    double sx = 0, sy = 0;
    for (const auto& r : runs) {
        long long len = r.x1 - r.x0 + 1;
        sx += 0.5 * (r.x0 + r.x1) * len;
        sy += static_cast<double>(r.y) * len;
    }
    return {sx / area, sy / area};
}

std::vector<Point> Region::pixels() const {
    std::vector<Point> out;
    out.reserve(static_cast<std::size_t>(area));
    for (const auto& r : runs)
        for (int x = r.x0; x <= r.x1; ++x) out.push_back(Point{x, r.y});
    return out;
}

Region region_from_points(const std::vector<Point>& pixels, const GrayImage* intensity) {
    if (pixels.empty()) throw EmptyRegion();
    std::vector<Point> sorted = pixels;
    std::sort(sorted.begin(), sorted.end(), [](const Point& a, const Point& b) {
        return a.y < b.y || (a.y == b.y && a.x < b.x);
    });
    Region reg;
    reg.min_x = reg.max_x = sorted[0].x;
    reg.min_y = sorted[0].y;
    reg.max_y = sorted.back().y;
    long long intensity_sum = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const Point& p = sorted[i];
        reg.min_x = std::min(reg.min_x, p.x);
        reg.max_x = std::max(reg.max_x, p.x);
        if (intensity) intensity_sum += intensity->at(p.x, p.y);
        if (!reg.runs.empty() && reg.runs.back().y == p.y && reg.runs.back().x1 + 1 == p.x) {
            reg.runs.back().x1 = p.x;
        } else {
            reg.runs.push_back(PixelRun{p.y, p.x, p.x});
        }
        ++reg.area;
    }
    if (intensity) reg.mean_intensity = static_cast<double>(intensity_sum) / reg.area;
    reg.solidity = region_solidity(reg.runs, reg.area);
    return reg;
}

std::vector<int> SegParams::default_threshold_schedule() {
    std::vector<int> s;
    for (int t = 10; t <= 140; t += 10) s.push_back(t);
    return s;
}

void SegParams::validate() const {
    if (min_avg_intensity >= max_avg_intensity)
        throw InvalidParams("min_avg_intensity must be < max_avg_intensity");
    if (!(min_solidity > 0.0 && min_solidity <= 1.0))
        throw InvalidParams("min_solidity must be in (0,1]");
    if (threshold_schedule.empty())
        throw InvalidParams("threshold schedule is empty");
    for (std::size_t i = 0; i < threshold_schedule.size(); ++i) {
        int t = threshold_schedule[i];
        if (t < 0 || t > 255) throw InvalidParams("threshold out of [0,255]");
        if (i > 0 && threshold_schedule[i] <= threshold_schedule[i - 1])
            throw InvalidParams("threshold schedule must be strictly increasing");
    }
    if (min_size < 0 || seed_min_size < 0)
        throw InvalidParams("sizes must be non-negative");
    if (noise_window < 3 || noise_window % 2 == 0) throw InvalidWindow(noise_window);
}

GrayImage denoise(const GrayImage& img, int window) {
    if (window < 3 || window % 2 == 0) throw InvalidWindow(window);
    const int w = img.width(), h = img.height();
    const int r = window / 2;
    const int pw = w + 2 * r, ph = h + 2 * r;

    // edge-replicated padding, then prefix sums of values and squares
    std::vector<std::int64_t> sum((pw + 1) * (ph + 1), 0);
    std::vector<std::int64_t> sum2((pw + 1) * (ph + 1), 0);
    for (int y = 0; y < ph; ++y) {
        int sy = std::clamp(y - r, 0, h - 1);
        for (int x = 0; x < pw; ++x) {
            int sx = std::clamp(x - r, 0, w - 1);
            std::int64_t v = img.at(sx, sy);
            std::size_t i = static_cast<std::size_t>(y + 1) * (pw + 1) + (x + 1);
            std::size_t up = i - (pw + 1);
            sum[i] = v + sum[i - 1] + sum[up] - sum[up - 1];
            sum2[i] = v * v + sum2[i - 1] + sum2[up] - sum2[up - 1];
        }
    }
    auto window_sums = [&](int x, int y, std::int64_t& s, std::int64_t& s2) {
        // window around (x,y) maps to padded rect [x, x+2r] x [y, y+2r]
        std::size_t x0 = x, y0 = y, x1 = x + 2 * r + 1, y1 = y + 2 * r + 1;
        std::size_t stride = pw + 1;
        s = sum[y1 * stride + x1] - sum[y0 * stride + x1] - sum[y1 * stride + x0] +
            sum[y0 * stride + x0];
        s2 = sum2[y1 * stride + x1] - sum2[y0 * stride + x1] - sum2[y1 * stride + x0] +
             sum2[y0 * stride + x0];
    };

    const double n = static_cast<double>(window) * window;
    std::vector<double> mean(static_cast<std::size_t>(w) * h);
    std::vector<double> var(static_cast<std::size_t>(w) * h);
    double noise = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::int64_t s, s2;
            window_sums(x, y, s, s2);
            double mu = s / n;
            double v = s2 / n - mu * mu;
            if (v < 0) v = 0;  // numeric guard
            std::size_t i = static_cast<std::size_t>(y) * w + x;
            mean[i] = mu;
            var[i] = v;
            noise += v;
        }
    }
    noise /= static_cast<double>(w) * h;

    GrayImage out(w, h);
    const double noise_floor = std::max(noise, DBL_MIN);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * w + x;
            double gain = std::max(0.0, var[i] - noise) / std::max(var[i], noise_floor);
            double v = mean[i] + gain * (img.at(x, y) - mean[i]);
            long q = std::lround(v);
            out.at(x, y) = static_cast<std::uint8_t>(std::clamp(q, 0L, 255L));
        }
    }
    return out;
}

BinaryMask binarize_below(const GrayImage& img, int t) {
    BinaryMask mask(img.width(), img.height());
    const auto& px = img.pixels();
    auto& bits = mask.bits();
    for (std::size_t i = 0; i < px.size(); ++i) bits[i] = px[i] < t ? 1 : 0;
    return mask;
}

namespace {

struct RawRun {
    int y, x0, x1;
    int label;  // union-find parent index
};

int uf_find(std::vector<RawRun>& runs, int i) {
    while (runs[i].label != i) {
        runs[i].label = runs[runs[i].label].label;
        i = runs[i].label;
    }
    return i;
}

void uf_union(std::vector<RawRun>& runs, int a, int b) {
    a = uf_find(runs, a);
    b = uf_find(runs, b);
    if (a == b) return;
    if (a < b)
        runs[b].label = a;  // keep the earliest run as root for scan ordering
    else
        runs[a].label = b;
}

}  // namespace

std::vector<Region> find_components(const BinaryMask& mask, int connectivity) {
    if (connectivity != 4 && connectivity != 8)
        throw SegError("connectivity must be 4 or 8");
    const int w = mask.width(), h = mask.height();
    const int slack = connectivity == 8 ? 1 : 0;

    std::vector<RawRun> runs;
    std::vector<int> row_begin(h + 1, 0);
    for (int y = 0; y < h; ++y) {
        row_begin[y] = static_cast<int>(runs.size());
        const std::uint8_t* row = mask.bits().data() + static_cast<std::size_t>(y) * w;
        int x = 0;
        while (x < w) {
            if (!row[x]) {
                ++x;
                continue;
            }
            int x0 = x;
            while (x < w && row[x]) ++x;
            runs.push_back(RawRun{y, x0, x - 1, static_cast<int>(runs.size())});
        }
    }
    row_begin[h] = static_cast<int>(runs.size());

    for (int y = 1; y < h; ++y) {
        int prev = row_begin[y - 1], prev_end = row_begin[y];
        for (int i = row_begin[y]; i < row_begin[y + 1]; ++i) {
            while (prev < prev_end && runs[prev].x1 < runs[i].x0 - slack) ++prev;
            for (int j = prev; j < prev_end && runs[j].x0 <= runs[i].x1 + slack; ++j)
                uf_union(runs, i, j);
        }
    }

    // bucket runs by root; components ordered by first run (scan order)
    std::vector<int> comp_of_root(runs.size(), -1);
    std::vector<Region> regions;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        int root = uf_find(runs, static_cast<int>(i));
        int c = comp_of_root[root];
        if (c < 0) {
            c = static_cast<int>(regions.size());
            comp_of_root[root] = c;
            regions.emplace_back();
            regions[c].min_x = runs[i].x0;
            regions[c].max_x = runs[i].x1;
            regions[c].min_y = regions[c].max_y = runs[i].y;
        }
        Region& reg = regions[c];
        reg.runs.push_back(PixelRun{runs[i].y, runs[i].x0, runs[i].x1});
        reg.area += runs[i].x1 - runs[i].x0 + 1;
        reg.min_x = std::min(reg.min_x, runs[i].x0);
        reg.max_x = std::max(reg.max_x, runs[i].x1);
        reg.min_y = std::min(reg.min_y, runs[i].y);
        reg.max_y = std::max(reg.max_y, runs[i].y);
    }
    return regions;
}

std::vector<Region> label_components(const BinaryMask& mask, const GrayImage& intensity,
                                     int connectivity) {
    if (mask.width() != intensity.width() || mask.height() != intensity.height())
        throw SegError("mask and intensity image sizes differ");
    std::vector<Region> regions = find_components(mask, connectivity);
    for (Region& reg : regions) {
        std::int64_t s = 0;
        for (const auto& r : reg.runs)
            for (int x = r.x0; x <= r.x1; ++x) s += intensity.at(x, r.y);
        reg.mean_intensity = static_cast<double>(s) / reg.area;
        reg.solidity = region_solidity(reg.runs, reg.area);
    }
    return regions;
}

double solidity(const std::vector<Point>& pixels) {
    if (pixels.empty()) throw EmptyRegion();
    Region reg = region_from_points(pixels);
    return reg.solidity;
}

std::vector<Region> remove_boundary_regions(std::vector<Region> regions, int width,
                                            int height) {
    std::erase_if(regions,
                  [&](const Region& r) { return r.touches_border(width, height); });
    return regions;
}

std::vector<Region> segment_frame(const GrayImage& img, const SegParams& params) {
    return remove_boundary_regions(iterative_segment(img, params), img.width(),
                                   img.height());
}

}  // namespace nucleo::seg
