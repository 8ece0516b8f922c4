#include "synthetic.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <random>

#include "nucleo/csv.hpp"

namespace fs = std::filesystem;

namespace testsup {

GrayImage disk_frame(int w, int h, const std::vector<Point>& centers, int radius,
                     std::uint8_t bg, std::uint8_t fg) {
    GrayImage img(w, h, bg);
    const long long r2 = static_cast<long long>(radius) * radius;
    for (const Point& c : centers)
        for (int dy = -radius; dy <= radius; ++dy)
            for (int dx = -radius; dx <= radius; ++dx) {
                if (static_cast<long long>(dx) * dx + static_cast<long long>(dy) * dy > r2)
                    continue;
                const int x = c.x + dx, y = c.y + dy;
                if (img.contains(x, y)) img.at(x, y) = fg;
            }
    return img;
}

nucleo::GroundTruthSet write_disk_dataset(const std::string& root, int n_train,
                                          int n_test, int w, int h, int radius,
                                          std::uint64_t seed) {
    fs::remove_all(root);
    fs::create_directories(root + "/EDF");
    fs::create_directories(root + "/points");

    std::mt19937_64 rng(seed);
    const int margin = radius + 6;
    const long long min_sep2 = 4LL * (radius + 4) * (radius + 4);
    const char grades[3] = {'N', 'L', 'H'};

    nucleo::GroundTruthSet gt;
    std::string labels = "frame,grade,split\n";
    const int total = n_train + n_test;
    for (int i = 0; i < total; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "frame%03d", i);

        std::vector<Point> pts;
        if (i == 0) pts.push_back({37, 37});
        const int want = 2 + static_cast<int>(rng() % 3);
        for (int attempt = 0; attempt < 200 && static_cast<int>(pts.size()) < want;
             ++attempt) {
            Point p{margin + static_cast<int>(rng() % (w - 2 * margin)),
                    margin + static_cast<int>(rng() % (h - 2 * margin))};
            bool ok = true;
            for (const Point& q : pts) {
                const long long dx = p.x - q.x, dy = p.y - q.y;
                if (dx * dx + dy * dy < min_sep2) ok = false;
            }
            if (ok) pts.push_back(p);
        }

        nucleo::FrameRecord rec;
        rec.frame_id = id;
        rec.grade = i % 3 == 0 ? nucleo::Grade::Negative
                    : i % 3 == 1 ? nucleo::Grade::LSIL
                                 : nucleo::Grade::HSIL;
        rec.split = i < n_train ? nucleo::Split::Train : nucleo::Split::Test;
        rec.edf_image = disk_frame(w, h, pts, radius);
        rec.gt_points = pts;

        nucleo::save_png(root + "/EDF/" + std::string(id) + ".png", rec.edf_image);
        std::string rows = "x,y\n";
        for (const Point& p : pts)
            rows += std::to_string(p.x) + ',' + std::to_string(p.y) + '\n';
        nucleo::write_file_atomic(root + "/points/" + std::string(id) + ".csv", rows);
        labels += std::string(id) + ',' + grades[i % 3] + ',' +
                  (rec.split == nucleo::Split::Train ? "0" : "1") + '\n';
        gt.frames.push_back(std::move(rec));
    }
    nucleo::write_file_atomic(root + "/label.csv", labels);
    return gt;
}

long long oracle_max_matching(const std::vector<std::vector<bool>>& compat) {
    const int nd = static_cast<int>(compat.size());
    const int ng = nd == 0 ? 0 : static_cast<int>(compat[0].size());
    if (nd == 0 || ng == 0) return 0;
    std::vector<std::vector<int>> memo(nd, std::vector<int>(std::size_t{1} << ng, -1));
    auto best = [&](auto&& self, int i, unsigned mask) -> int {
        if (i == nd) return 0;
        int& slot = memo[i][mask];
        if (slot >= 0) return slot;
        int b = self(self, i + 1, mask);
        for (int j = 0; j < ng; ++j)
            if (compat[i][j] && !(mask >> j & 1))
                b = std::max(b, 1 + self(self, i + 1, mask | (1u << j)));
        return slot = b;
    };
    return best(best, 0, 0u);
}

namespace {

long long cross(const Point& o, const Point& a, const Point& b) {
    return static_cast<long long>(a.x - o.x) * (b.y - o.y) -
           static_cast<long long>(a.y - o.y) * (b.x - o.x);
}

// Andrew's monotone chain; oriented so every interior point has a
// nonnegative cross product against each edge. Collinear points dropped.
std::vector<Point> convex_hull(std::vector<Point> pts) {
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() <= 2) return pts;
    std::vector<Point> hull(2 * pts.size());
    std::size_t k = 0;
    for (const Point& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

}  // namespace

double oracle_solidity(const std::vector<Point>& pixels) {
    std::vector<Point> unique_pts = pixels;
    std::sort(unique_pts.begin(), unique_pts.end(),
              [](const Point& a, const Point& b) {
                  return a.x != b.x ? a.x < b.x : a.y < b.y;
              });
    unique_pts.erase(std::unique(unique_pts.begin(), unique_pts.end()),
                     unique_pts.end());
    const auto area = static_cast<double>(unique_pts.size());

    const std::vector<Point> hull = convex_hull(unique_pts);
    long long inside = 0;
    if (hull.size() == 1) {
        inside = 1;
    } else if (hull.size() == 2) {
        const long long dx = std::abs(hull[1].x - hull[0].x);
        const long long dy = std::abs(hull[1].y - hull[0].y);
        inside = std::gcd(dx, dy) + 1;
    } else {
        int min_x = hull[0].x, max_x = hull[0].x, min_y = hull[0].y, max_y = hull[0].y;
        for (const Point& p : hull) {
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
        for (int y = min_y; y <= max_y; ++y)
            for (int x = min_x; x <= max_x; ++x) {
                bool in = true;
                for (std::size_t i = 0; i < hull.size() && in; ++i) {
                    const Point& a = hull[i];
                    const Point& b = hull[(i + 1) % hull.size()];
                    if (cross(a, b, Point{x, y}) < 0) in = false;
                }
                if (in) ++inside;
            }
    }
    return area / static_cast<double>(inside);
}

GrayImage oracle_denoise(const GrayImage& img, int window) {
    const int w = img.width(), h = img.height(), r = window / 2;
    const double n = static_cast<double>(window) * window;
    auto clamped = [&](int x, int y) {
        return img.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
    };
    std::vector<double> mean(static_cast<std::size_t>(w) * h);
    std::vector<double> var(static_cast<std::size_t>(w) * h);
    double noise = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0, s2 = 0.0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const double v = clamped(x + dx, y + dy);
                    s += v;
                    s2 += v * v;
                }
            const double mu = s / n;
            double v2 = s2 / n - mu * mu;
            if (v2 < 0) v2 = 0;
            mean[static_cast<std::size_t>(y) * w + x] = mu;
            var[static_cast<std::size_t>(y) * w + x] = v2;
            noise += v2;
        }
    noise /= static_cast<double>(w) * h;
    const double floor = std::max(noise, DBL_MIN);

    GrayImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double gain =
                std::max(0.0, var[i] - noise) / std::max(var[i], floor);
            const double v = mean[i] + gain * (img.at(x, y) - mean[i]);
            out.at(x, y) =
                static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    return out;
}

}  // namespace testsup
