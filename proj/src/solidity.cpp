#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "nucleo/segment.hpp"

namespace nucleo::seg {

namespace {

struct Pt {
    std::int64_t x, y;
    friend bool operator<(const Pt& a, const Pt& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    }
    friend bool operator==(const Pt& a, const Pt& b) { return a.x == b.x && a.y == b.y; }
};

std::int64_t cross(const Pt& o, const Pt& a, const Pt& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Andrew monotone chain; returns CCW hull without collinear vertices.
// Collinear input collapses to its two extreme points (or one).
std::vector<Pt> convex_hull(std::vector<Pt> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const std::size_t n = pts.size();
    if (n <= 2) return pts;
    std::vector<Pt> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {  // lower
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {  // upper
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {  // b > 0
    return a >= 0 ? a / b : -((-a + b - 1) / b);
}
std::int64_t ceil_div(std::int64_t a, std::int64_t b) {  // b > 0
    return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

std::int64_t gcd64(std::int64_t a, std::int64_t b) {
    return std::gcd(a < 0 ? -a : a, b < 0 ? -b : b);
}

// Count of lattice points inside or on the hull, computed per row from the
// half-plane constraints of the CCW polygon edges. Exact integer arithmetic.
std::int64_t hull_lattice_count(const std::vector<Pt>& hull) {
    if (hull.empty()) return 0;
    if (hull.size() == 1) return 1;
    if (hull.size() == 2) {
        std::int64_t dx = hull[1].x - hull[0].x, dy = hull[1].y - hull[0].y;
        return gcd64(dx, dy) + 1;
    }
    std::int64_t min_y = hull[0].y, max_y = hull[0].y;
    std::int64_t min_x = hull[0].x, max_x = hull[0].x;
    for (const Pt& p : hull) {
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
    }
    std::int64_t total = 0;
    for (std::int64_t y = min_y; y <= max_y; ++y) {
        std::int64_t lo = min_x, hi = max_x;
        bool empty = false;
        for (std::size_t i = 0; i < hull.size() && !empty; ++i) {
            const Pt& a = hull[i];
            const Pt& b = hull[(i + 1) % hull.size()];
            std::int64_t dx = b.x - a.x, dy = b.y - a.y;
            // inside: dx*(y - a.y) - dy*(x - a.x) >= 0  =>  dy*x <= dx*(y - a.y) + dy*a.x
            std::int64_t c = dx * (y - a.y) + dy * a.x;
            if (dy > 0) {
                hi = std::min(hi, floor_div(c, dy));
            } else if (dy < 0) {
                lo = std::max(lo, ceil_div(-c, -dy));
            } else if (dx * (y - a.y) < 0) {
                empty = true;
            }
        }
        if (!empty && hi >= lo) total += hi - lo + 1;
    }
    return total;
}

}  // namespace

double region_solidity(const std::vector<PixelRun>& runs, long long area) {
    if (runs.empty() || area <= 0) throw EmptyRegion();
    // run endpoints are a sufficient superset of the hull vertices
    std::vector<Pt> candidates;
    candidates.reserve(runs.size() * 2);
    for (const auto& r : runs) {
        candidates.push_back(Pt{r.x0, r.y});
        if (r.x1 != r.x0) candidates.push_back(Pt{r.x1, r.y});
    }
    std::vector<Pt> hull = convex_hull(std::move(candidates));
    std::int64_t denom = hull_lattice_count(hull);
    return static_cast<double>(area) / static_cast<double>(denom);
}

}  // namespace nucleo::seg
