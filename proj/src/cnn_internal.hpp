#pragma once

// Layer primitives shared by the per-patch forward pass and the dense
// whole-frame inference. Both paths must run the exact same floating-point
// operations in the exact same order, so every accumulation order here is
// fixed: conv sums run (in_channel, ky, kx) ascending, dot products run over
// ascending input index, max pooling scans its 2x2 block in (ky, kx) order
// with strict > updates.

#include <cmath>
#include <cstdint>
#include <utility>

namespace nucleo::cnn::detail {

// valid convolution, stride 1; in [in_c][in_h][in_w], w [out_c][in_c][k][k],
// out [out_c][in_h-k+1][in_w-k+1]
inline void conv_valid(const double* in, int in_c, int in_h, int in_w,
                       const double* w, const double* b, int out_c, int k,
                       double* out) {
    const int oh = in_h - k + 1, ow = in_w - k + 1;
    for (int oc = 0; oc < out_c; ++oc) {
        const double* wf = w + static_cast<std::size_t>(oc) * in_c * k * k;
        double* op = out + static_cast<std::size_t>(oc) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = b[oc];
                const double* wp = wf;
                for (int ic = 0; ic < in_c; ++ic) {
                    const double* ip =
                        in + (static_cast<std::size_t>(ic) * in_h + oy) * in_w + ox;
                    for (int ky = 0; ky < k; ++ky) {
                        for (int kx = 0; kx < k; ++kx) acc += ip[kx] * wp[kx];
                        ip += in_w;
                        wp += k;
                    }
                }
                op[static_cast<std::size_t>(oy) * ow + ox] = acc;
            }
        }
    }
}

// 2x2 max pool, stride 2, floor semantics (a trailing odd row/column is
// dropped). arg, when non-null, receives the flat input index of each
// cell's max for backprop.
inline void maxpool2(const double* in, int c, int h, int w, double* out,
                     std::int32_t* arg) {
    const int mh = h / 2, mw = w / 2;
    for (int ch = 0; ch < c; ++ch) {
        const double* ip = in + static_cast<std::size_t>(ch) * h * w;
        double* op = out + static_cast<std::size_t>(ch) * mh * mw;
        std::int32_t* ap = arg ? arg + static_cast<std::size_t>(ch) * mh * mw : nullptr;
        for (int cy = 0; cy < mh; ++cy) {
            for (int cx = 0; cx < mw; ++cx) {
                int base = (2 * cy) * w + 2 * cx;
                double best = ip[base];
                int best_i = base;
                for (int ky = 0; ky < 2; ++ky)
                    for (int kx = 0; kx < 2; ++kx) {
                        int i = base + ky * w + kx;
                        if (ip[i] > best) {
                            best = ip[i];
                            best_i = i;
                        }
                    }
                op[static_cast<std::size_t>(cy) * mw + cx] = best;
                if (ap) ap[static_cast<std::size_t>(cy) * mw + cx] = best_i;
            }
        }
    }
}

// 2x2/stride-2 max pool starting at (off_y, off_x) instead of the origin;
// scans each block in the same (ky, kx) strict-> order as maxpool2, so the
// pooled values are bit-equal to pooling the shifted sub-image.
inline void maxpool2_phase(const double* in, int c, int in_h, int in_w, int off_y,
                           int off_x, double* out) {
    const int mh = (in_h - off_y) / 2, mw = (in_w - off_x) / 2;
    for (int ch = 0; ch < c; ++ch) {
        const double* ip = in + static_cast<std::size_t>(ch) * in_h * in_w;
        double* op = out + static_cast<std::size_t>(ch) * mh * mw;
        for (int cy = 0; cy < mh; ++cy) {
            for (int cx = 0; cx < mw; ++cx) {
                const double* bp =
                    ip + static_cast<std::size_t>(2 * cy + off_y) * in_w + 2 * cx + off_x;
                double best = bp[0];
                for (int ky = 0; ky < 2; ++ky)
                    for (int kx = 0; kx < 2; ++kx) {
                        const double v = bp[static_cast<std::size_t>(ky) * in_w + kx];
                        if (v > best) best = v;
                    }
                op[static_cast<std::size_t>(cy) * mw + cx] = best;
            }
        }
    }
}

inline void fc_forward(const double* w, const double* b, const double* in,
                       int n_out, int n_in, double* out) {
    for (int i = 0; i < n_out; ++i) {
        double acc = b[i];
        const double* wp = w + static_cast<std::size_t>(i) * n_in;
        for (int j = 0; j < n_in; ++j) acc += wp[j] * in[j];
        out[i] = acc;
    }
}

inline std::pair<double, double> softmax2(double l0, double l1) {
    const double m = l0 > l1 ? l0 : l1;
    const double e0 = std::exp(l0 - m), e1 = std::exp(l1 - m);
    const double s = e0 + e1;
    return {e0 / s, e1 / s};
}

// -log p_target via the numerically stable form
inline double ce_loss2(double l0, double l1, int target) {
    const double m = l0 > l1 ? l0 : l1;
    const double lse = m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
    return lse - (target == 0 ? l0 : l1);
}

// uniform double in [0,1) from the generator's raw 64-bit output, so the
// stream is identical on every platform
template <typename Rng>
inline double u01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace nucleo::cnn::detail
