#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gmge/tape.hpp"
#include "gmge/tensor.hpp"

namespace gmge {

enum class Mode { train, eval };

namespace detail {

template <typename T>
inline void expect_ndim(const Tensor<T>& t, int nd, const char* what) {
    if (!t.defined() || t.ndim() != nd)
        throw DimError(std::string(what) + " must be " + std::to_string(nd) +
                       "-dimensional, got " + (t.defined() ? shape_str(t.shape()) : "undefined"));
}

inline int conv_out_extent(int in, int pad, int k, int stride, const char* axis) {
    if (stride < 1) throw ValueError(std::string("stride must be >= 1 on axis ") + axis);
    if (pad < 0) throw ValueError(std::string("padding must be >= 0 on axis ") + axis);
    if (k > in + 2 * pad)
        throw DimError(std::string("kernel extent ") + std::to_string(k) +
                       " exceeds padded input extent " + std::to_string(in + 2 * pad) +
                       " on axis " + axis);
    int out = (in + 2 * pad - k) / stride + 1;
    if (out < 1)
        throw DimError(std::string("non-positive output extent on axis ") + axis);
    return out;
}

// Inclusive output-index range [lo, hi] for which the input index
// o*stride + k - pad stays inside [0, in_ext).
struct AxisRange {
    int lo, hi;
};
inline AxisRange conv_range(int k, int pad, int stride, int in_ext, int out_ext) {
    int shift = k - pad;  // input index = o*stride + shift
    int lo = shift >= 0 ? 0 : (-shift + stride - 1) / stride;
    int hi_num = in_ext - 1 - shift;
    int hi = hi_num < 0 ? -1 : hi_num / stride;
    if (hi > out_ext - 1) hi = out_ext - 1;
    return {lo, hi};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// conv3d: cross-correlation (no kernel flip), input [N,Cin,D,H,W],
// weight [Cout,Cin,kd,kh,kw], optional bias [Cout].
// ---------------------------------------------------------------------------
template <typename T>
Tensor<T> conv3d(Tape<T>* tape, const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias = {}, std::array<int, 3> stride = {1, 1, 1},
                 std::array<int, 3> padding = {0, 0, 0}) {
    detail::expect_ndim(input, 5, "conv3d input");
    detail::expect_ndim(weight, 5, "conv3d weight");
    const int N = input.dim(0), Ci = input.dim(1), D = input.dim(2), H = input.dim(3),
              W = input.dim(4);
    const int Co = weight.dim(0), kd = weight.dim(2), kh = weight.dim(3), kw = weight.dim(4);
    if (weight.dim(1) != Ci)
        throw DimError("conv3d channel mismatch: input has " + std::to_string(Ci) +
                       " channels, weight expects " + std::to_string(weight.dim(1)));
    if (bias.defined() && (bias.ndim() != 1 || bias.dim(0) != Co))
        throw DimError("conv3d bias must have shape (" + std::to_string(Co) + ")");
    const int Do = detail::conv_out_extent(D, padding[0], kd, stride[0], "D");
    const int Ho = detail::conv_out_extent(H, padding[1], kh, stride[1], "H");
    const int Wo = detail::conv_out_extent(W, padding[2], kw, stride[2], "W");

    Tensor<T> out({N, Co, Do, Ho, Wo});
    const T* in = input.data();
    const T* wd = weight.data();
    T* od = out.data();
    const std::size_t in_c = static_cast<std::size_t>(D) * H * W;
    const std::size_t out_c = static_cast<std::size_t>(Do) * Ho * Wo;

    for (int n = 0; n < N; ++n) {
        for (int co = 0; co < Co; ++co) {
            T* obase = od + (static_cast<std::size_t>(n) * Co + co) * out_c;
            const T b = bias.defined() ? bias.data()[co] : T(0);
            std::fill(obase, obase + out_c, b);
            for (int ci = 0; ci < Ci; ++ci) {
                const T* ibase = in + (static_cast<std::size_t>(n) * Ci + ci) * in_c;
                const T* wbase = wd + ((static_cast<std::size_t>(co) * Ci + ci) * kd) *
                                          static_cast<std::size_t>(kh) * kw;
                for (int kz = 0; kz < kd; ++kz) {
                    auto rz = detail::conv_range(kz, padding[0], stride[0], D, Do);
                    for (int ky = 0; ky < kh; ++ky) {
                        auto ry = detail::conv_range(ky, padding[1], stride[1], H, Ho);
                        for (int kx = 0; kx < kw; ++kx) {
                            auto rx = detail::conv_range(kx, padding[2], stride[2], W, Wo);
                            const T wv = wbase[(kz * kh + ky) * kw + kx];
                            const int xoff = kx - padding[2];
                            for (int oz = rz.lo; oz <= rz.hi; ++oz) {
                                const int iz = oz * stride[0] + kz - padding[0];
                                for (int oy = ry.lo; oy <= ry.hi; ++oy) {
                                    const int iy = oy * stride[1] + ky - padding[1];
                                    const T* irow =
                                        ibase + (static_cast<std::size_t>(iz) * H + iy) * W;
                                    T* orow =
                                        obase + (static_cast<std::size_t>(oz) * Ho + oy) * Wo;
                                    if (stride[2] == 1) {
                                        const T* ix = irow + rx.lo + xoff;
                                        for (int ox = rx.lo; ox <= rx.hi; ++ox)
                                            orow[ox] += wv * ix[ox - rx.lo];
                                    } else {
                                        for (int ox = rx.lo; ox <= rx.hi; ++ox)
                                            orow[ox] += wv * irow[ox * stride[2] + xoff];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    if (should_record<T>(tape, {&input, &weight, bias.defined() ? &bias : nullptr})) {
        out.set_tracked(true);
        typename Tape<T>::Record rec;
        rec.tensors = {input.impl_ptr(), weight.impl_ptr(), out.impl_ptr()};
        if (bias.defined()) rec.tensors.push_back(bias.impl_ptr());
        rec.output = out.impl();
        Tensor<T> input_h = input, weight_h = weight, bias_h = bias;
        rec.backward = [input_h, weight_h, bias_h, stride, padding, N, Ci, Co, D, H, W, kd, kh,
                        kw, Do, Ho, Wo](const std::vector<T>& go, typename Tape<T>::Adjoints& adj) {
            const std::size_t in_c = static_cast<std::size_t>(D) * H * W;
            const std::size_t out_c = static_cast<std::size_t>(Do) * Ho * Wo;
            const T* in = input_h.data();
            const T* wd = weight_h.data();
            if (bias_h.defined() && bias_h.tracked()) {
                auto& gb = Tape<T>::adj_of(adj, bias_h.impl());
                for (int n = 0; n < N; ++n)
                    for (int co = 0; co < Co; ++co) {
                        const T* g = go.data() + (static_cast<std::size_t>(n) * Co + co) * out_c;
                        T acc = T(0);
                        for (std::size_t i = 0; i < out_c; ++i) acc += g[i];
                        gb[co] += acc;
                    }
            }
            const bool want_in = input_h.tracked();
            const bool want_w = weight_h.tracked();
            if (!want_in && !want_w) return;
            std::vector<T>* gi = want_in ? &Tape<T>::adj_of(adj, input_h.impl()) : nullptr;
            std::vector<T>* gw = want_w ? &Tape<T>::adj_of(adj, weight_h.impl()) : nullptr;
            for (int n = 0; n < N; ++n) {
                for (int co = 0; co < Co; ++co) {
                    const T* gbase = go.data() + (static_cast<std::size_t>(n) * Co + co) * out_c;
                    for (int ci = 0; ci < Ci; ++ci) {
                        const T* ibase = in + (static_cast<std::size_t>(n) * Ci + ci) * in_c;
                        T* gibase = want_in
                                        ? gi->data() + (static_cast<std::size_t>(n) * Ci + ci) * in_c
                                        : nullptr;
                        const std::size_t woff =
                            ((static_cast<std::size_t>(co) * Ci + ci) * kd) *
                            static_cast<std::size_t>(kh) * kw;
                        for (int kz = 0; kz < kd; ++kz) {
                            auto rz = detail::conv_range(kz, padding[0], stride[0], D, Do);
                            for (int ky = 0; ky < kh; ++ky) {
                                auto ry = detail::conv_range(ky, padding[1], stride[1], H, Ho);
                                for (int kx = 0; kx < kw; ++kx) {
                                    auto rx = detail::conv_range(kx, padding[2], stride[2], W, Wo);
                                    const int xoff = kx - padding[2];
                                    const T wv = wd[woff + (kz * kh + ky) * kw + kx];
                                    T wacc = T(0);
                                    for (int oz = rz.lo; oz <= rz.hi; ++oz) {
                                        const int iz = oz * stride[0] + kz - padding[0];
                                        for (int oy = ry.lo; oy <= ry.hi; ++oy) {
                                            const int iy = oy * stride[1] + ky - padding[1];
                                            const T* irow =
                                                ibase + (static_cast<std::size_t>(iz) * H + iy) * W;
                                            const T* grow =
                                                gbase + (static_cast<std::size_t>(oz) * Ho + oy) * Wo;
                                            T* girow =
                                                want_in ? gibase + (static_cast<std::size_t>(iz) * H +
                                                                    iy) * W
                                                        : nullptr;
                                            for (int ox = rx.lo; ox <= rx.hi; ++ox) {
                                                const int ix = ox * stride[2] + xoff;
                                                const T g = grow[ox];
                                                if (want_w) wacc += g * irow[ix];
                                                if (want_in) girow[ix] += wv * g;
                                            }
                                        }
                                    }
                                    if (want_w) (*gw)[woff + (kz * kh + ky) * kw + kx] += wacc;
                                }
                            }
                        }
                    }
                }
            }
        };
        tape->record(std::move(rec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// batchnorm3d
// ---------------------------------------------------------------------------
template <typename T>
struct BatchNorm3dState {
    Tensor<T> gamma, beta;  // per-channel scale / shift
    std::vector<T> running_mean, running_var;
    T momentum = T(0.1);

    explicit BatchNorm3dState(int channels)
        : gamma(Tensor<T>::full({channels}, T(1))),
          beta(Tensor<T>::zeros({channels})),
          running_mean(static_cast<std::size_t>(channels), T(0)),
          running_var(static_cast<std::size_t>(channels), T(1)) {}

    int channels() const { return gamma.dim(0); }
};

// Train mode normalizes by batch statistics over (N,D,H,W) per channel
// (biased variance) and updates the running stats by exponential moving
// average; eval mode normalizes by the running stats. Differentiable in
// both modes (eval is a fixed affine map, which Grad-CAM relies on).
template <typename T>
Tensor<T> batchnorm3d(Tape<T>* tape, const Tensor<T>& input, BatchNorm3dState<T>& state,
                      Mode mode, T eps = T(1e-5)) {
    detail::expect_ndim(input, 5, "batchnorm3d input");
    if (!(eps > T(0))) throw ValueError("batchnorm3d epsilon must be > 0");
    const int N = input.dim(0), C = input.dim(1), D = input.dim(2), H = input.dim(3),
              W = input.dim(4);
    if (C != state.channels())
        throw DimError("batchnorm3d channel mismatch: input has " + std::to_string(C) +
                       " channels, state has " + std::to_string(state.channels()));
    const std::size_t spatial = static_cast<std::size_t>(D) * H * W;
    const std::size_t per_channel = static_cast<std::size_t>(N) * spatial;
    if (mode == Mode::train && per_channel == 1)
        throw ValueError("batchnorm3d degenerate batch: a single value per channel in train mode");

    std::vector<T> mean(C), inv_std(C);
    if (mode == Mode::train) {
        for (int c = 0; c < C; ++c) {
            double m = 0;
            for (int n = 0; n < N; ++n) {
                const T* p = input.data() + (static_cast<std::size_t>(n) * C + c) * spatial;
                for (std::size_t i = 0; i < spatial; ++i) m += p[i];
            }
            m /= static_cast<double>(per_channel);
            double v = 0;
            for (int n = 0; n < N; ++n) {
                const T* p = input.data() + (static_cast<std::size_t>(n) * C + c) * spatial;
                for (std::size_t i = 0; i < spatial; ++i) {
                    const double d = p[i] - m;
                    v += d * d;
                }
            }
            v /= static_cast<double>(per_channel);
            mean[c] = static_cast<T>(m);
            inv_std[c] = static_cast<T>(1.0 / std::sqrt(v + static_cast<double>(eps)));
            state.running_mean[c] =
                (T(1) - state.momentum) * state.running_mean[c] + state.momentum * static_cast<T>(m);
            state.running_var[c] =
                (T(1) - state.momentum) * state.running_var[c] + state.momentum * static_cast<T>(v);
        }
    } else {
        for (int c = 0; c < C; ++c) {
            mean[c] = state.running_mean[c];
            inv_std[c] = T(1) / std::sqrt(state.running_var[c] + eps);
        }
    }

    Tensor<T> out(input.shape());
    std::vector<T> xhat(input.numel());
    const T* in = input.data();
    T* od = out.data();
    const T* g = state.gamma.data();
    const T* b = state.beta.data();
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const std::size_t off = (static_cast<std::size_t>(n) * C + c) * spatial;
            const T m = mean[c], is = inv_std[c], gc = g[c], bc = b[c];
            for (std::size_t i = 0; i < spatial; ++i) {
                const T xh = (in[off + i] - m) * is;
                xhat[off + i] = xh;
                od[off + i] = gc * xh + bc;
            }
        }

    if (should_record<T>(tape, {&input, &state.gamma, &state.beta})) {
        out.set_tracked(true);
        typename Tape<T>::Record rec;
        rec.tensors = {input.impl_ptr(), state.gamma.impl_ptr(), state.beta.impl_ptr(),
                       out.impl_ptr()};
        rec.output = out.impl();
        Tensor<T> input_h = input, gamma_h = state.gamma, beta_h = state.beta;
        auto xhat_s = std::make_shared<std::vector<T>>(std::move(xhat));
        auto inv_std_s = std::make_shared<std::vector<T>>(std::move(inv_std));
        rec.backward = [input_h, gamma_h, beta_h, xhat_s, inv_std_s, mode, N, C,
                        spatial](const std::vector<T>& go, typename Tape<T>::Adjoints& adj) {
            const std::size_t per_channel = static_cast<std::size_t>(N) * spatial;
            const std::vector<T>& xh = *xhat_s;
            std::vector<T>* ggamma =
                gamma_h.tracked() ? &Tape<T>::adj_of(adj, gamma_h.impl()) : nullptr;
            std::vector<T>* gbeta =
                beta_h.tracked() ? &Tape<T>::adj_of(adj, beta_h.impl()) : nullptr;
            std::vector<T>* gin =
                input_h.tracked() ? &Tape<T>::adj_of(adj, input_h.impl()) : nullptr;
            for (int c = 0; c < C; ++c) {
                double sum_go = 0, sum_go_xh = 0;
                for (int n = 0; n < N; ++n) {
                    const std::size_t off = (static_cast<std::size_t>(n) * C + c) * spatial;
                    for (std::size_t i = 0; i < spatial; ++i) {
                        sum_go += go[off + i];
                        sum_go_xh += go[off + i] * xh[off + i];
                    }
                }
                if (ggamma) (*ggamma)[c] += static_cast<T>(sum_go_xh);
                if (gbeta) (*gbeta)[c] += static_cast<T>(sum_go);
                if (!gin) continue;
                const T gc = gamma_h.data()[c];
                const T is = (*inv_std_s)[c];
                if (mode == Mode::train) {
                    const T inv_m = T(1) / static_cast<T>(per_channel);
                    const T mean_go = static_cast<T>(sum_go) * inv_m;
                    const T mean_go_xh = static_cast<T>(sum_go_xh) * inv_m;
                    for (int n = 0; n < N; ++n) {
                        const std::size_t off = (static_cast<std::size_t>(n) * C + c) * spatial;
                        for (std::size_t i = 0; i < spatial; ++i)
                            (*gin)[off + i] +=
                                gc * is * (go[off + i] - mean_go - xh[off + i] * mean_go_xh);
                    }
                } else {
                    for (int n = 0; n < N; ++n) {
                        const std::size_t off = (static_cast<std::size_t>(n) * C + c) * spatial;
                        for (std::size_t i = 0; i < spatial; ++i)
                            (*gin)[off + i] += gc * is * go[off + i];
                    }
                }
            }
        };
        tape->record(std::move(rec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// relu
// ---------------------------------------------------------------------------
template <typename T>
Tensor<T> relu(Tape<T>* tape, const Tensor<T>& input) {
    Tensor<T> out(input.shape());
    const T* in = input.data();
    T* od = out.data();
    for (std::size_t i = 0; i < input.numel(); ++i) od[i] = in[i] > T(0) ? in[i] : T(0);
    if (should_record<T>(tape, {&input})) {
        out.set_tracked(true);
        typename Tape<T>::Record rec;
        rec.tensors = {input.impl_ptr(), out.impl_ptr()};
        rec.output = out.impl();
        Tensor<T> input_h = input;
        rec.backward = [input_h](const std::vector<T>& go, typename Tape<T>::Adjoints& adj) {
            auto& gi = Tape<T>::adj_of(adj, input_h.impl());
            const T* in = input_h.data();
            // subgradient 0 at exactly 0
            for (std::size_t i = 0; i < gi.size(); ++i)
                if (in[i] > T(0)) gi[i] += go[i];
        };
        tape->record(std::move(rec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// maxpool3d / avgpool3d / globalavgpool3d
// ---------------------------------------------------------------------------
namespace detail {
template <typename T>
inline void check_pool(const Tensor<T>& input, const std::array<int, 3>& window,
                       const std::array<int, 3>& stride) {
    expect_ndim(input, 5, "pool3d input");
    const char* axes = "DHW";
    for (int a = 0; a < 3; ++a) {
        if (window[a] < 1 || stride[a] < 1)
            throw ValueError("pool3d window and stride must be >= 1");
        if (window[a] > input.dim(2 + a))
            throw DimError(std::string("pool3d window ") + std::to_string(window[a]) +
                           " larger than input extent " + std::to_string(input.dim(2 + a)) +
                           " on axis " + std::string(1, axes[a]));
    }
}
}  // namespace detail

template <typename T>
Tensor<T> maxpool3d(Tape<T>* tape, const Tensor<T>& input, std::array<int, 3> window,
                    std::array<int, 3> stride) {
    detail::check_pool(input, window, stride);
    const int N = input.dim(0), C = input.dim(1), D = input.dim(2), H = input.dim(3),
              W = input.dim(4);
    const int Do = (D - window[0]) / stride[0] + 1;
    const int Ho = (H - window[1]) / stride[1] + 1;
    const int Wo = (W - window[2]) / stride[2] + 1;
    Tensor<T> out({N, C, Do, Ho, Wo});
    auto argmax = std::make_shared<std::vector<std::size_t>>(out.numel());
    const T* in = input.data();
    T* od = out.data();
    std::size_t oidx = 0;
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const T* ibase = in + (static_cast<std::size_t>(n) * C + c) *
                                      (static_cast<std::size_t>(D) * H * W);
            for (int oz = 0; oz < Do; ++oz)
                for (int oy = 0; oy < Ho; ++oy)
                    for (int ox = 0; ox < Wo; ++ox, ++oidx) {
                        T best{};
                        std::size_t best_i = 0;
                        bool first = true;
                        for (int kz = 0; kz < window[0]; ++kz)
                            for (int ky = 0; ky < window[1]; ++ky)
                                for (int kx = 0; kx < window[2]; ++kx) {
                                    const std::size_t ii =
                                        (static_cast<std::size_t>(oz * stride[0] + kz) * H +
                                         (oy * stride[1] + ky)) *
                                            W +
                                        (ox * stride[2] + kx);
                                    const T v = ibase[ii];
                                    if (first || v > best) {
                                        best = v;
                                        best_i = ii + (ibase - in);
                                        first = false;
                                    }
                                }
                        od[oidx] = best;
                        (*argmax)[oidx] = best_i;
                    }
        }
    if (should_record<T>(tape, {&input})) {
        out.set_tracked(true);
        typename Tape<T>::Record rec;
        rec.tensors = {input.impl_ptr(), out.impl_ptr()};
        rec.output = out.impl();
        Tensor<T> input_h = input;
        rec.backward = [input_h, argmax](const std::vector<T>& go,
                                         typename Tape<T>::Adjoints& adj) {
            auto& gi = Tape<T>::adj_of(adj, input_h.impl());
            for (std::size_t i = 0; i < go.size(); ++i) gi[(*argmax)[i]] += go[i];
        };
        tape->record(std::move(rec));
    }
    return out;
}

template <typename T>
Tensor<T> avgpool3d(Tape<T>* tape, const Tensor<T>& input, std::array<int, 3> window,
                    std::array<int, 3> stride) {
    detail::check_pool(input, window, stride);
    const int N = input.dim(0), C = input.dim(1), D = input.dim(2), H = input.dim(3),
              W = input.dim(4);
    const int Do = (D - window[0]) / stride[0] + 1;
    const int Ho = (H - window[1]) / stride[1] + 1;
    const int Wo = (W - window[2]) / stride[2] + 1;
    const T inv_vol = T(1) / static_cast<T>(window[0] * window[1] * window[2]);
    Tensor<T> out({N, C, Do, Ho, Wo});
    const T* in = input.data();
    T* od = out.data();
    std::size_t oidx = 0;
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const T* ibase = in + (static_cast<std::size_t>(n) * C + c) *
                                      (static_cast<std::size_t>(D) * H * W);
            for (int oz = 0; oz < Do; ++oz)
                for (int oy = 0; oy < Ho; ++oy)
                    for (int ox = 0; ox < Wo; ++ox, ++oidx) {
                        T acc = T(0);
                        for (int kz = 0; kz < window[0]; ++kz)
                            for (int ky = 0; ky < window[1]; ++ky)
                                for (int kx = 0; kx < window[2]; ++kx)
                                    acc += ibase[(static_cast<std::size_t>(oz * stride[0] + kz) * H +
                                                  (oy * stride[1] + ky)) *
                                                     W +
                                                 (ox * stride[2] + kx)];
                        od[oidx] = acc * inv_vol;
                    }
        }
    if (should_record<T>(tape, {&input})) {
        out.set_tracked(true);
        typename Tape<T>::Record rec;
        rec.tensors = {input.impl_ptr(), out.impl_ptr()};
        rec.output = out.impl();
        Tensor<T> input_h = input;
        const int Dh = D, Hh = H, Wh = W, Ch = C;
        rec.backward = [input_h, window, stride, inv_vol, Do, Ho, Wo, Dh, Hh, Wh, Ch,
                        N](const std::vector<T>& go, typename Tape<T>::Adjoints& adj) {
            auto& gi = Tape<T>::adj_of(adj, input_h.impl());
            std::size_t oidx = 0;
            for (int n = 0; n < N; ++n)
                for (int c = 0; c < Ch; ++c) {
                    T* gbase = gi.data() + (static_cast<std::size_t>(n) * Ch + c) *
                                               (static_cast<std::size_t>(Dh) * Hh * Wh);
                    for (int oz = 0; oz < Do; ++oz)
                        for (int oy = 0; oy < Ho; ++oy)
                            for (int ox = 0; ox < Wo; ++ox, ++oidx) {
                                const T g = go[oidx] * inv_vol;
                                for (int kz = 0; kz < window[0]; ++kz)
                                    for (int ky = 0; ky < window[1]; ++ky)
                                        for (int kx = 0; kx < window[2]; ++kx)
                                            gbase[(static_cast<std::size_t>(oz * stride[0] + kz) *
                                                       Hh +
                                                   (oy * stride[1] + ky)) *
                                                      Wh +
                                                  (ox * stride[2] + kx)] += g;
                            }
                }
        };
        tape->record(std::move(rec));
    }
    return out;
}

// Spatial mean per channel: [N,C,D,H,W] -> [N,C].
template <typename T>
Tensor<T> globalavgpool3d(Tape<T>* tape, const Tensor<T>& input) {
    detail::expect_ndim(input, 5, "globalavgpool3d input");
    const int N = input.dim(0), C = input.dim(1);
    const std::size_t spatial =
        static_cast<std::size_t>(input.dim(2)) * input.dim(3) * input.dim(4);
    Tensor<T> out({N, C});
    const T* in = input.data();
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const T* p = in + (static_cast<std::size_t>(n) * C + c) * spatial;
            double acc = 0;
            for (std::size_t i = 0; i < spatial; ++i) acc += p[i];
            out.data()[static_cast<std::size_t>(n) * C + c] =
                static_cast<T>(acc / static_cast<double>(spatial));
        }
    if (should_record<T>(tape, {&input})) {
        out.set_tracked(true);
        typename Tape<T>::Record rec;
        rec.tensors = {input.impl_ptr(), out.impl_ptr()};
        rec.output = out.impl();
        Tensor<T> input_h = input;
        rec.backward = [input_h, N, C, spatial](const std::vector<T>& go,
                                                typename Tape<T>::Adjoints& adj) {
            auto& gi = Tape<T>::adj_of(adj, input_h.impl());
            const T inv = T(1) / static_cast<T>(spatial);
            for (int n = 0; n < N; ++n)
                for (int c = 0; c < C; ++c) {
                    const T g = go[static_cast<std::size_t>(n) * C + c] * inv;
                    T* p = gi.data() + (static_cast<std::size_t>(n) * C + c) * spatial;
                    for (std::size_t i = 0; i < spatial; ++i) p[i] += g;
                }
        };
        tape->record(std::move(rec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// concat_channels / slice_channels
// ---------------------------------------------------------------------------
template <typename T>
Tensor<T> concat_channels(Tape<T>* tape, const std::vector<Tensor<T>>& inputs) {
    if (inputs.empty()) throw ValueError("concat_channels needs at least one input");
    for (const auto& t : inputs) detail::expect_ndim(t, 5, "concat_channels input");
    const Tensor<T>& first = inputs.front();
    int total_c = 0;
    for (const auto& t : inputs) {
        for (int a : {0, 2, 3, 4})
            if (t.dim(a) != first.dim(a))
                throw DimError("concat_channels batch/spatial mismatch: " + shape_str(t.shape()) +
                               " vs " + shape_str(first.shape()));
        total_c += t.dim(1);
    }
    const int N = first.dim(0), D = first.dim(2), H = first.dim(3), W = first.dim(4);
    const std::size_t spatial = static_cast<std::size_t>(D) * H * W;
    Tensor<T> out({N, total_c, D, H, W});
    for (int n = 0; n < N; ++n) {
        std::size_t c_off = 0;
        for (const auto& t : inputs) {
            const std::size_t chunk = static_cast<std::size_t>(t.dim(1)) * spatial;
            std::copy(t.data() + static_cast<std::size_t>(n) * chunk,
                      t.data() + static_cast<std::size_t>(n + 1) * chunk,
                      out.data() + (static_cast<std::size_t>(n) * total_c) * spatial +
                          c_off * spatial);
            c_off += static_cast<std::size_t>(t.dim(1));
        }
    }
    bool track = false;
    for (const auto& t : inputs) track = track || (tape && t.tracked());
    if (track) {
        out.set_tracked(true);
        typename Tape<T>::Record rec;
        for (const auto& t : inputs) rec.tensors.push_back(t.impl_ptr());
        rec.tensors.push_back(out.impl_ptr());
        rec.output = out.impl();
        std::vector<Tensor<T>> ins = inputs;
        rec.backward = [ins, N, total_c, spatial](const std::vector<T>& go,
                                                  typename Tape<T>::Adjoints& adj) {
            std::size_t c_off = 0;
            for (const auto& t : ins) {
                const std::size_t chunk = static_cast<std::size_t>(t.dim(1)) * spatial;
                if (t.tracked()) {
                    auto& gi = Tape<T>::adj_of(adj, t.impl());
                    for (int n = 0; n < N; ++n) {
                        const T* src = go.data() +
                                       (static_cast<std::size_t>(n) * total_c + c_off) * spatial;
                        T* dst = gi.data() + static_cast<std::size_t>(n) * chunk;
                        for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
                    }
                }
                c_off += static_cast<std::size_t>(t.dim(1));
            }
        };
        tape->record(std::move(rec));
    }
    return out;
}

// Channel range [c0, c1) of a 5-D tensor.
template <typename T>
Tensor<T> slice_channels(Tape<T>* tape, const Tensor<T>& input, int c0, int c1) {
    detail::expect_ndim(input, 5, "slice_channels input");
    const int C = input.dim(1);
    if (c0 < 0 || c1 > C || c0 >= c1)
        throw DimError("slice_channels range [" + std::to_string(c0) + "," + std::to_string(c1) +
                       ") invalid for " + std::to_string(C) + " channels");
    const int N = input.dim(0), D = input.dim(2), H = input.dim(3), W = input.dim(4);
    const std::size_t spatial = static_cast<std::size_t>(D) * H * W;
    Tensor<T> out({N, c1 - c0, D, H, W});
    for (int n = 0; n < N; ++n)
        std::copy(input.data() + (static_cast<std::size_t>(n) * C + c0) * spatial,
                  input.data() + (static_cast<std::size_t>(n) * C + c1) * spatial,
                  out.data() + static_cast<std::size_t>(n) * (c1 - c0) * spatial);
    if (should_record<T>(tape, {&input})) {
        out.set_tracked(true);
        typename Tape<T>::Record rec;
        rec.tensors = {input.impl_ptr(), out.impl_ptr()};
        rec.output = out.impl();
        Tensor<T> input_h = input;
        rec.backward = [input_h, c0, c1, N, C, spatial](const std::vector<T>& go,
                                                        typename Tape<T>::Adjoints& adj) {
            auto& gi = Tape<T>::adj_of(adj, input_h.impl());
            const std::size_t chunk = static_cast<std::size_t>(c1 - c0) * spatial;
            for (int n = 0; n < N; ++n) {
                const T* src = go.data() + static_cast<std::size_t>(n) * chunk;
                T* dst = gi.data() + (static_cast<std::size_t>(n) * C + c0) * spatial;
                for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
            }
        };
        tape->record(std::move(rec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// linear / sigmoid / bce_loss
// ---------------------------------------------------------------------------
template <typename T>
Tensor<T> linear(Tape<T>* tape, const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias) {
    detail::expect_ndim(input, 2, "linear input");
    detail::expect_ndim(weight, 2, "linear weight");
    const int N = input.dim(0), F = input.dim(1), O = weight.dim(0);
    if (weight.dim(1) != F)
        throw DimError("linear feature mismatch: input has " + std::to_string(F) +
                       " features, weight expects " + std::to_string(weight.dim(1)));
    if (bias.defined() && (bias.ndim() != 1 || bias.dim(0) != O))
        throw DimError("linear bias must have shape (" + std::to_string(O) + ")");
    Tensor<T> out({N, O});
    for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o) {
            double acc = bias.defined() ? bias.data()[o] : T(0);
            const T* x = input.data() + static_cast<std::size_t>(n) * F;
            const T* w = weight.data() + static_cast<std::size_t>(o) * F;
            for (int f = 0; f < F; ++f) acc += static_cast<double>(x[f]) * w[f];
            out.data()[static_cast<std::size_t>(n) * O + o] = static_cast<T>(acc);
        }
    if (should_record<T>(tape, {&input, &weight, bias.defined() ? &bias : nullptr})) {
        out.set_tracked(true);
        typename Tape<T>::Record rec;
        rec.tensors = {input.impl_ptr(), weight.impl_ptr(), out.impl_ptr()};
        if (bias.defined()) rec.tensors.push_back(bias.impl_ptr());
        rec.output = out.impl();
        Tensor<T> input_h = input, weight_h = weight, bias_h = bias;
        rec.backward = [input_h, weight_h, bias_h, N, F, O](const std::vector<T>& go,
                                                            typename Tape<T>::Adjoints& adj) {
            if (input_h.tracked()) {
                auto& gi = Tape<T>::adj_of(adj, input_h.impl());
                for (int n = 0; n < N; ++n)
                    for (int o = 0; o < O; ++o) {
                        const T g = go[static_cast<std::size_t>(n) * O + o];
                        const T* w = weight_h.data() + static_cast<std::size_t>(o) * F;
                        T* dst = gi.data() + static_cast<std::size_t>(n) * F;
                        for (int f = 0; f < F; ++f) dst[f] += g * w[f];
                    }
            }
            if (weight_h.tracked()) {
                auto& gw = Tape<T>::adj_of(adj, weight_h.impl());
                for (int n = 0; n < N; ++n)
                    for (int o = 0; o < O; ++o) {
                        const T g = go[static_cast<std::size_t>(n) * O + o];
                        const T* x = input_h.data() + static_cast<std::size_t>(n) * F;
                        T* dst = gw.data() + static_cast<std::size_t>(o) * F;
                        for (int f = 0; f < F; ++f) dst[f] += g * x[f];
                    }
            }
            if (bias_h.defined() && bias_h.tracked()) {
                auto& gb = Tape<T>::adj_of(adj, bias_h.impl());
                for (int n = 0; n < N; ++n)
                    for (int o = 0; o < O; ++o) gb[o] += go[static_cast<std::size_t>(n) * O + o];
            }
        };
        tape->record(std::move(rec));
    }
    return out;
}

template <typename T>
Tensor<T> sigmoid(Tape<T>* tape, const Tensor<T>& input) {
    Tensor<T> out(input.shape());
    const T* in = input.data();
    T* od = out.data();
    for (std::size_t i = 0; i < input.numel(); ++i) {
        const T x = in[i];
        if (x >= T(0)) {
            const T e = std::exp(-x);
            od[i] = T(1) / (T(1) + e);
        } else {
            const T e = std::exp(x);
            od[i] = e / (T(1) + e);
        }
    }
    if (should_record<T>(tape, {&input})) {
        out.set_tracked(true);
        typename Tape<T>::Record rec;
        rec.tensors = {input.impl_ptr(), out.impl_ptr()};
        rec.output = out.impl();
        Tensor<T> out_h = out, input_h = input;
        rec.backward = [input_h, out_h](const std::vector<T>& go,
                                        typename Tape<T>::Adjoints& adj) {
            auto& gi = Tape<T>::adj_of(adj, input_h.impl());
            const T* y = out_h.data();
            for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += go[i] * y[i] * (T(1) - y[i]);
        };
        tape->record(std::move(rec));
    }
    return out;
}

// Binary cross-entropy, mean over the batch. Probabilities are clamped
// to [1e-7, 1 - 1e-7] before the logs; labels must be exactly 0 or 1.
template <typename T>
Tensor<T> bce_loss(Tape<T>* tape, const Tensor<T>& probs, const Tensor<T>& labels) {
    if (probs.shape() != labels.shape())
        throw DimError("bce_loss shape mismatch: " + shape_str(probs.shape()) + " vs " +
                       shape_str(labels.shape()));
    const T floor = T(1e-7);
    const std::size_t n = probs.numel();
    for (std::size_t i = 0; i < n; ++i) {
        const T y = labels.data()[i];
        if (y != T(0) && y != T(1))
            throw ValueError("bce_loss label at index " + std::to_string(i) +
                             " is not in {0,1}");
    }
    double acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const T p = std::min(std::max(probs.data()[i], floor), T(1) - floor);
        const T y = labels.data()[i];
        acc -= static_cast<double>(y) * std::log(static_cast<double>(p)) +
               (1.0 - static_cast<double>(y)) * std::log(1.0 - static_cast<double>(p));
    }
    Tensor<T> out({1}, std::vector<T>{static_cast<T>(acc / static_cast<double>(n))});
    if (should_record<T>(tape, {&probs})) {
        out.set_tracked(true);
        typename Tape<T>::Record rec;
        rec.tensors = {probs.impl_ptr(), labels.impl_ptr(), out.impl_ptr()};
        rec.output = out.impl();
        Tensor<T> probs_h = probs, labels_h = labels;
        rec.backward = [probs_h, labels_h, floor, n](const std::vector<T>& go,
                                                     typename Tape<T>::Adjoints& adj) {
            if (!probs_h.tracked()) return;
            auto& gp = Tape<T>::adj_of(adj, probs_h.impl());
            const T g = go[0] / static_cast<T>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const T p = probs_h.data()[i];
                if (p <= floor || p >= T(1) - floor) continue;  // clamped: zero slope
                const T y = labels_h.data()[i];
                gp[i] += g * (-y / p + (T(1) - y) / (T(1) - p));
            }
        };
        tape->record(std::move(rec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Elementwise helpers (add / mul / sum / scale) — enough to express the
// losses and test functions used around the model ops.
// ---------------------------------------------------------------------------
template <typename T>
Tensor<T> add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape())
        throw DimError("add shape mismatch: " + shape_str(a.shape()) + " vs " +
                       shape_str(b.shape()));
    Tensor<T> out(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
    if (should_record<T>(tape, {&a, &b})) {
        out.set_tracked(true);
        typename Tape<T>::Record rec;
        rec.tensors = {a.impl_ptr(), b.impl_ptr(), out.impl_ptr()};
        rec.output = out.impl();
        Tensor<T> ah = a, bh = b;
        rec.backward = [ah, bh](const std::vector<T>& go, typename Tape<T>::Adjoints& adj) {
            for (const Tensor<T>& t : {ah, bh})
                if (t.tracked()) {
                    auto& g = Tape<T>::adj_of(adj, t.impl());
                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i];
                }
        };
        tape->record(std::move(rec));
    }
    return out;
}

template <typename T>
Tensor<T> mul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape())
        throw DimError("mul shape mismatch: " + shape_str(a.shape()) + " vs " +
                       shape_str(b.shape()));
    Tensor<T> out(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    if (should_record<T>(tape, {&a, &b})) {
        out.set_tracked(true);
        typename Tape<T>::Record rec;
        rec.tensors = {a.impl_ptr(), b.impl_ptr(), out.impl_ptr()};
        rec.output = out.impl();
        Tensor<T> ah = a, bh = b;
        rec.backward = [ah, bh](const std::vector<T>& go, typename Tape<T>::Adjoints& adj) {
            if (ah.tracked()) {
                auto& g = Tape<T>::adj_of(adj, ah.impl());
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i] * bh.data()[i];
            }
            if (bh.tracked()) {
                auto& g = Tape<T>::adj_of(adj, bh.impl());
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i] * ah.data()[i];
            }
        };
        tape->record(std::move(rec));
    }
    return out;
}

template <typename T>
Tensor<T> sum(Tape<T>* tape, const Tensor<T>& a) {
    double acc = 0;
    for (std::size_t i = 0; i < a.numel(); ++i) acc += a.data()[i];
    Tensor<T> out({1}, std::vector<T>{static_cast<T>(acc)});
    if (should_record<T>(tape, {&a})) {
        out.set_tracked(true);
        typename Tape<T>::Record rec;
        rec.tensors = {a.impl_ptr(), out.impl_ptr()};
        rec.output = out.impl();
        Tensor<T> ah = a;
        rec.backward = [ah](const std::vector<T>& go, typename Tape<T>::Adjoints& adj) {
            auto& g = Tape<T>::adj_of(adj, ah.impl());
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[0];
        };
        tape->record(std::move(rec));
    }
    return out;
}

template <typename T>
Tensor<T> scale(Tape<T>* tape, const Tensor<T>& a, T factor) {
    Tensor<T> out(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] * factor;
    if (should_record<T>(tape, {&a})) {
        out.set_tracked(true);
        typename Tape<T>::Record rec;
        rec.tensors = {a.impl_ptr(), out.impl_ptr()};
        rec.output = out.impl();
        Tensor<T> ah = a;
        rec.backward = [ah, factor](const std::vector<T>& go, typename Tape<T>::Adjoints& adj) {
            auto& g = Tape<T>::adj_of(adj, ah.impl());
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i] * factor;
        };
        tape->record(std::move(rec));
    }
    return out;
}

}  // namespace gmge
