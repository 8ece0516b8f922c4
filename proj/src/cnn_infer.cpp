#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "cnn_internal.hpp"
#include "nucleo/cnn.hpp"
#include "nucleo/segment.hpp"

namespace nucleo::cnn {

// The hit map scores every stride-aligned window. Running forward() per
// window would redo the convolutions under overlapping windows hundreds of
// times, so the layer stack is evaluated densely instead: conv1 once over
// the whole frame, then each 2x2 pooling splits into two phases per axis
// (window start parity), giving per-phase conv2/pool2 maps from which every
// window's 15x15x12 FC input is a plain slice. All primitive calls use the
// same accumulation orders as forward(), which keeps the dense path
// bit-equal to the per-window one (verified by test).
HitMap infer_hitmap(const CnnModel& model, const GrayImage& frame, int stride,
                    int threads) {
    const CnnConfig& c = model.cfg;
    const int P = c.input;
    const int W = frame.width(), H = frame.height();
    if (W < P || H < P) throw FrameTooSmall(W, H, P);
    if (stride < 1) throw CnnError("stride must be >= 1");

    HitMap map;
    map.width = W;
    map.height = H;
    map.values.assign(static_cast<std::size_t>(W) * H, 0.0f);

    std::vector<double> norm(static_cast<std::size_t>(W) * H);
    for (std::size_t i = 0; i < norm.size(); ++i)
        norm[i] = frame.pixels()[i] / 255.0 - model.input_mean;

    const int H1 = H - c.k1 + 1, W1 = W - c.k1 + 1;
    std::vector<double> f1(static_cast<std::size_t>(c.c1) * H1 * W1);
    detail::conv_valid(norm.data(), 1, H, W, model.conv1_w.data(),
                       model.conv1_b.data(), c.c1, c.k1, f1.data());
    norm = {};

    const int m2 = c.pool2_out();
    const int n_fc = c.fc_in();

    for (int py = 0; py < 2; ++py) {
        for (int px = 0; px < 2; ++px) {
            // window starts handled by this phase pair
            std::vector<std::pair<int, int>> starts;  // (sy, sx)
            for (int sy = 0; sy + P <= H; sy += stride)
                for (int sx = 0; sx + P <= W; sx += stride)
                    if ((sy & 1) == py && (sx & 1) == px) starts.emplace_back(sy, sx);
            if (starts.empty()) continue;

            const int U1 = (H1 - py) / 2, V1 = (W1 - px) / 2;
            std::vector<double> p1(static_cast<std::size_t>(c.c1) * U1 * V1);
            detail::maxpool2_phase(f1.data(), c.c1, H1, W1, py, px, p1.data());

            const int U2 = U1 - c.k2 + 1, V2 = V1 - c.k2 + 1;
            std::vector<double> c2(static_cast<std::size_t>(c.c2) * U2 * V2);
            detail::conv_valid(p1.data(), c.c1, U1, V1, model.conv2_w.data(),
                               model.conv2_b.data(), c.c2, c.k2, c2.data());
            p1 = {};

            std::vector<double> p2[2][2];
            int A[2], B[2];
            for (int q = 0; q < 2; ++q) {
                A[q] = (U2 - q) / 2;
                B[q] = (V2 - q) / 2;
            }
            for (int qy = 0; qy < 2; ++qy)
                for (int qx = 0; qx < 2; ++qx) {
                    p2[qy][qx].resize(static_cast<std::size_t>(c.c2) * A[qy] * B[qx]);
                    detail::maxpool2_phase(c2.data(), c.c2, U2, V2, qy, qx,
                                           p2[qy][qx].data());
                }
            c2 = {};

            auto score_chunk = [&](std::size_t lo, std::size_t hi) {
                std::vector<double> x(n_fc), h_pre(c.hidden), h(c.hidden);
                for (std::size_t s = lo; s < hi; ++s) {
                    const auto [sy, sx] = starts[s];
                    const int ty = (sy - py) / 2, tx = (sx - px) / 2;
                    const int qy = ty & 1, qx = tx & 1;
                    const int ay = (ty - qy) / 2, bx = (tx - qx) / 2;
                    const std::vector<double>& src = p2[qy][qx];
                    const int rows = A[qy], cols = B[qx];
                    double* xp = x.data();
                    for (int oc = 0; oc < c.c2; ++oc) {
                        const double* base =
                            src.data() +
                            (static_cast<std::size_t>(oc) * rows + ay) * cols + bx;
                        for (int i = 0; i < m2; ++i) {
                            for (int j = 0; j < m2; ++j) *xp++ = base[j];
                            base += cols;
                        }
                    }
                    detail::fc_forward(model.fc1_w.data(), model.fc1_b.data(),
                                       x.data(), c.hidden, n_fc, h_pre.data());
                    for (int i = 0; i < c.hidden; ++i)
                        h[i] = h_pre[i] > 0.0 ? h_pre[i] : 0.0;
                    double logits[2];
                    detail::fc_forward(model.fc2_w.data(), model.fc2_b.data(),
                                       h.data(), 2, c.hidden, logits);
                    const double p_pos =
                        detail::softmax2(logits[0], logits[1]).second;
                    map.values[(static_cast<std::size_t>(sy) + P / 2) * W + sx +
                               P / 2] = static_cast<float>(p_pos);
                }
            };
            const int n_workers =
                std::max(1, std::min<int>(threads, static_cast<int>(starts.size())));
            if (n_workers == 1) {
                score_chunk(0, starts.size());
            } else {
                std::vector<std::thread> pool;
                for (int w = 0; w < n_workers; ++w)
                    pool.emplace_back(score_chunk, starts.size() * w / n_workers,
                                      starts.size() * (w + 1) / n_workers);
                for (auto& t : pool) t.join();
            }
        }
    }
    return map;
}

std::vector<Point> postprocess_hitmap(const HitMap& map, int dilation_radius,
                                      double cutoff, int min_area) {
    const int W = map.width, H = map.height;
    std::vector<std::pair<int, int>> disk;
    for (int dy = -dilation_radius; dy <= dilation_radius; ++dy)
        for (int dx = -dilation_radius; dx <= dilation_radius; ++dx)
            if (dx * dx + dy * dy <= dilation_radius * dilation_radius)
                disk.emplace_back(dy, dx);

    BinaryMask above(W, H);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            float best = 0.0f;
            for (auto [dy, dx] : disk) {
                const int sy = y + dy, sx = x + dx;
                if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
                best = std::max(best, map.at(sx, sy));
            }
            if (static_cast<double>(best) > cutoff) above.set(x, y, true);
        }
    }

    std::vector<Point> out;
    for (const seg::Region& r : seg::find_components(above, 8)) {
        if (r.area < min_area) continue;
        auto [cx, cy] = r.centroid();
        out.push_back(Point{static_cast<int>(std::llround(cx)),
                            static_cast<int>(std::llround(cy))});
    }
    return out;
}

Gray16Image hitmap_to_gray16(const HitMap& map) {
    Gray16Image img;
    img.width = map.width;
    img.height = map.height;
    img.pixels.resize(map.values.size());
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        const double v = std::clamp(static_cast<double>(map.values[i]), 0.0, 1.0);
        img.pixels[i] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
    }
    return img;
}

}  // namespace nucleo::cnn
