// SPDX-License-Identifier: Apache-2.0
//
// xband - cross-band radio channel prediction toolkit
// Copyright (C) 2026 the xband contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <functional>
#include <memory>
#include <numeric>

#include "threading.hpp"

namespace xband {

// Reverse-mode autodiff over dense n-d arrays. Templated on the scalar so
// training runs in float and gradient verification in double.

template <class T> struct TensorImpl {
    std::vector<int> shape;
    std::vector<T> val;
    std::vector<T> grad; // allocated lazily when first seeded
    bool needs_grad = false;
    std::function<void()> backward; // set on op outputs

    int64_t numel() const
    {
        int64_t n = 1;
        for (int d : shape)
            n *= d;
        return n;
    }

    void ensure_grad()
    {
        if (grad.empty())
            grad.assign(val.size(), T(0));
    }
};

template <class T> class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorImpl<T>> i) : impl_(std::move(i)) {}

    static Tensor zeros(std::vector<int> shape, bool needs_grad = false)
    {
        auto impl = std::make_shared<TensorImpl<T>>();
        impl->shape = std::move(shape);
        impl->val.assign(size_t(impl->numel()), T(0));
        impl->needs_grad = needs_grad;
        return Tensor(impl);
    }

    bool valid() const { return impl_ != nullptr; }
    TensorImpl<T> &node() const { return *impl_; }
    const std::vector<int> &shape() const { return impl_->shape; }
    int64_t numel() const { return impl_->numel(); }
    T *data() const { return impl_->val.data(); }
    T *grad_data() const { return impl_->grad.data(); }
    std::shared_ptr<TensorImpl<T>> ptr() const { return impl_; }

    void zero_grad() const
    {
        if (!impl_->grad.empty())
            std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
    }

  private:
    std::shared_ptr<TensorImpl<T>> impl_;
};

// Records op outputs in creation order; reverse order is a valid
// topological order for backpropagation.
template <class T> struct Graph {
    std::vector<Tensor<T>> tape;

    Tensor<T> make(std::vector<int> shape, bool track)
    {
        Tensor<T> t = Tensor<T>::zeros(std::move(shape), track);
        if (track)
            tape.push_back(t);
        return t;
    }

    void backward(const Tensor<T> &loss)
    {
        if (loss.numel() != 1)
            throw NumericError("backward: loss must be scalar");
        loss.node().ensure_grad();
        loss.node().grad[0] = T(1);
        for (auto it = tape.rbegin(); it != tape.rend(); ++it) {
            auto &n = it->node();
            if (!n.grad.empty() && n.backward)
                n.backward();
        }
    }
};

namespace nn {

template <class T> bool track(const Tensor<T> &a) { return a.node().needs_grad; }

inline void check3d(const std::vector<int> &s, const char *op)
{
    if (s.size() != 3)
        throw NumericError(strf("%s: expected a CHW tensor, got %zu dims", op, s.size()));
}

// ---------------------------------------------------------------- add ----

template <class T> Tensor<T> add(Graph<T> &g, const Tensor<T> &a, const Tensor<T> &b)
{
    if (a.shape() != b.shape())
        throw NumericError("add: shape mismatch");
    bool tr = track(a) || track(b);
    Tensor<T> out = g.make(a.shape(), tr);
    const int64_t n = out.numel();
    {
        const T *xa = a.data();
        const T *xb = b.data();
        T *y = out.data();
        parallel_for(n, 1 << 15, [&](int64_t i0, int64_t i1) {
            for (int64_t i = i0; i < i1; ++i)
                y[i] = xa[i] + xb[i];
        });
    }
    if (tr) {
        auto ai = a.ptr(), bi = b.ptr(), oi = out.ptr();
        out.node().backward = [ai, bi, oi, n]() {
            const T *gy = oi->grad.data();
            if (ai->needs_grad) {
                ai->ensure_grad();
                T *ga = ai->grad.data();
                for (int64_t i = 0; i < n; ++i)
                    ga[i] += gy[i];
            }
            if (bi->needs_grad) {
                bi->ensure_grad();
                T *gb = bi->grad.data();
                for (int64_t i = 0; i < n; ++i)
                    gb[i] += gy[i];
            }
        };
    }
    return out;
}

// --------------------------------------------------------------- relu ----

template <class T> Tensor<T> relu(Graph<T> &g, const Tensor<T> &a)
{
    bool tr = track(a);
    Tensor<T> out = g.make(a.shape(), tr);
    const int64_t n = out.numel();
    const T *x = a.data();
    T *y = out.data();
    parallel_for(n, 1 << 15, [&](int64_t i0, int64_t i1) {
        for (int64_t i = i0; i < i1; ++i)
            y[i] = x[i] > T(0) ? x[i] : T(0);
    });
    if (tr) {
        auto ai = a.ptr(), oi = out.ptr();
        out.node().backward = [ai, oi, n]() {
            ai->ensure_grad();
            const T *gy = oi->grad.data();
            const T *xv = ai->val.data();
            T *ga = ai->grad.data();
            for (int64_t i = 0; i < n; ++i)
                if (xv[i] > T(0))
                    ga[i] += gy[i];
        };
    }
    return out;
}

// ------------------------------------------------------------ sigmoid ----

template <class T> Tensor<T> sigmoid(Graph<T> &g, const Tensor<T> &a)
{
    bool tr = track(a);
    Tensor<T> out = g.make(a.shape(), tr);
    const int64_t n = out.numel();
    const T *x = a.data();
    T *y = out.data();
    parallel_for(n, 1 << 14, [&](int64_t i0, int64_t i1) {
        for (int64_t i = i0; i < i1; ++i) {
            T v = x[i];
            if (v >= T(0))
                y[i] = T(1) / (T(1) + std::exp(-v));
            else {
                T e = std::exp(v);
                y[i] = e / (T(1) + e);
            }
        }
    });
    if (tr) {
        auto ai = a.ptr(), oi = out.ptr();
        out.node().backward = [ai, oi, n]() {
            ai->ensure_grad();
            const T *gy = oi->grad.data();
            const T *yv = oi->val.data();
            T *ga = ai->grad.data();
            for (int64_t i = 0; i < n; ++i)
                ga[i] += gy[i] * yv[i] * (T(1) - yv[i]);
        };
    }
    return out;
}

// ------------------------------------------------------------- conv2d ----
// Stride-1 KxK convolution with zero padding K/2 (K odd), NCHW single
// sample: x [C,H,W], w [OC,IC,K,K], b [OC].

namespace detail {

template <class T>
void pad_input(const T *x, int c, int h, int w, int p, std::vector<T> &xp)
{
    const int hp = h + 2 * p, wp = w + 2 * p;
    xp.assign(size_t(c) * hp * wp, T(0));
    for (int ic = 0; ic < c; ++ic)
        for (int y = 0; y < h; ++y)
            std::copy(x + (size_t(ic) * h + y) * w, x + (size_t(ic) * h + y + 1) * w,
                      xp.begin() + (size_t(ic) * hp + y + p) * wp + p);
}

template <class T>
void conv_forward(const T *xp, const T *wgt, const T *bias, T *out, int ic_n, int oc_n, int h,
                  int w, int k)
{
    const int p = k / 2, hp = h + 2 * p, wp = w + 2 * p;
    std::function<void(int)> task = [&](int oc) {
        T *oplane = out + size_t(oc) * h * w;
        T bv = bias ? bias[oc] : T(0);
        std::fill(oplane, oplane + size_t(h) * w, bv);
        for (int ic = 0; ic < ic_n; ++ic) {
            const T *wk = wgt + (size_t(oc) * ic_n + ic) * k * k;
            const T *plane = xp + size_t(ic) * hp * wp;
            for (int y = 0; y < h; ++y) {
                T *orow = oplane + size_t(y) * w;
                for (int ky = 0; ky < k; ++ky) {
                    const T *row = plane + size_t(y + ky) * wp;
                    for (int kx = 0; kx < k; ++kx) {
                        const T wv = wk[ky * k + kx];
                        const T *r = row + kx;
                        for (int x = 0; x < w; ++x)
                            orow[x] += wv * r[x];
                    }
                }
            }
        }
    };
    ThreadPool::instance().run_tasks(oc_n, task);
}

} // namespace detail

template <class T>
Tensor<T> conv2d(Graph<T> &g, const Tensor<T> &x, const Tensor<T> &w, const Tensor<T> &b)
{
    check3d(x.shape(), "conv2d");
    if (w.shape().size() != 4 || w.shape()[1] != x.shape()[0])
        throw NumericError(strf("conv2d: weight [%d,%d,...] does not match input channels %d",
                                w.shape()[0], w.shape()[1], x.shape()[0]));
    const int ic_n = x.shape()[0], h = x.shape()[1], wd = x.shape()[2];
    const int oc_n = w.shape()[0], k = w.shape()[2];
    if (w.shape()[3] != k || k % 2 == 0)
        throw NumericError("conv2d: kernel must be square and odd");
    if (b.shape() != std::vector<int>{oc_n})
        throw NumericError("conv2d: bias shape mismatch");

    bool tr = track(x) || track(w) || track(b);
    Tensor<T> out = g.make({oc_n, h, wd}, tr);

    auto xp = std::make_shared<std::vector<T>>();
    detail::pad_input(x.data(), ic_n, h, wd, k / 2, *xp);
    detail::conv_forward(xp->data(), w.data(), b.data(), out.data(), ic_n, oc_n, h, wd, k);

    if (tr) {
        auto xi = x.ptr(), wi = w.ptr(), bi = b.ptr(), oi = out.ptr();
        out.node().backward = [xi, wi, bi, oi, xp, ic_n, oc_n, h, wd, k]() {
            const int p = k / 2, hp = h + 2 * p, wp = wd + 2 * p;
            const T *gy = oi->grad.data();
            if (bi->needs_grad) {
                bi->ensure_grad();
                for (int oc = 0; oc < oc_n; ++oc) {
                    T s = T(0);
                    const T *gp = gy + size_t(oc) * h * wd;
                    for (int64_t i = 0; i < int64_t(h) * wd; ++i)
                        s += gp[i];
                    bi->grad[size_t(oc)] += s;
                }
            }
            if (wi->needs_grad) {
                wi->ensure_grad();
                T *gw = wi->grad.data();
                const T *xpd = xp->data();
                std::function<void(int)> task = [&](int oc) {
                    const T *gp = gy + size_t(oc) * h * wd;
                    for (int ic = 0; ic < ic_n; ++ic) {
                        const T *plane = xpd + size_t(ic) * hp * wp;
                        T *gwk = gw + (size_t(oc) * ic_n + ic) * k * k;
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                T s = T(0);
                                for (int y = 0; y < h; ++y) {
                                    const T *r = plane + size_t(y + ky) * wp + kx;
                                    const T *gr = gp + size_t(y) * wd;
                                    for (int x = 0; x < wd; ++x)
                                        s += gr[x] * r[x];
                                }
                                gwk[ky * k + kx] += s;
                            }
                    }
                };
                ThreadPool::instance().run_tasks(oc_n, task);
            }
            if (xi->needs_grad) {
                xi->ensure_grad();
                const T *wv = wi->val.data();
                T *gx = xi->grad.data();
                std::function<void(int)> task = [&](int ic) {
                    std::vector<T> gxp(size_t(hp) * wp, T(0));
                    for (int oc = 0; oc < oc_n; ++oc) {
                        const T *gp = gy + size_t(oc) * h * wd;
                        const T *wk = wv + (size_t(oc) * ic_n + ic) * k * k;
                        for (int y = 0; y < h; ++y) {
                            const T *gr = gp + size_t(y) * wd;
                            for (int ky = 0; ky < k; ++ky) {
                                T *xr = gxp.data() + size_t(y + ky) * wp;
                                for (int kx = 0; kx < k; ++kx) {
                                    const T wvv = wk[ky * k + kx];
                                    T *xr2 = xr + kx;
                                    for (int x = 0; x < wd; ++x)
                                        xr2[x] += wvv * gr[x];
                                }
                            }
                        }
                    }
                    for (int y = 0; y < h; ++y) {
                        const T *src = gxp.data() + size_t(y + p) * wp + p;
                        T *dst = gx + (size_t(ic) * h + y) * wd;
                        for (int x = 0; x < wd; ++x)
                            dst[x] += src[x];
                    }
                };
                ThreadPool::instance().run_tasks(ic_n, task);
            }
        };
    }
    return out;
}

// ----------------------------------------------------------- maxpool2 ----

template <class T> Tensor<T> maxpool2(Graph<T> &g, const Tensor<T> &x)
{
    check3d(x.shape(), "maxpool2");
    const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    if (h % 2 || w % 2)
        throw NumericError("maxpool2: spatial dims must be even");
    const int ho = h / 2, wo = w / 2;
    bool tr = track(x);
    Tensor<T> out = g.make({c, ho, wo}, tr);
    auto arg = std::make_shared<std::vector<int32_t>>(size_t(c) * ho * wo);
    const T *xv = x.data();
    T *y = out.data();
    parallel_for(c, 1, [&](int64_t c0, int64_t c1) {
        for (int64_t ch = c0; ch < c1; ++ch)
            for (int yo = 0; yo < ho; ++yo)
                for (int xo = 0; xo < wo; ++xo) {
                    int base = int((ch * h + 2 * yo) * w + 2 * xo);
                    int idx[4] = {base, base + 1, base + w, base + w + 1};
                    int best = idx[0];
                    for (int i = 1; i < 4; ++i)
                        if (xv[idx[i]] > xv[best])
                            best = idx[i];
                    (*arg)[size_t((ch * ho + yo) * wo + xo)] = best;
                    y[(ch * ho + yo) * wo + xo] = xv[best];
                }
    });
    if (tr) {
        auto xi = x.ptr(), oi = out.ptr();
        out.node().backward = [xi, oi, arg]() {
            xi->ensure_grad();
            const T *gy = oi->grad.data();
            T *gx = xi->grad.data();
            for (size_t i = 0; i < arg->size(); ++i)
                gx[size_t((*arg)[i])] += gy[i];
        };
    }
    return out;
}

// ------------------------------------------------- upsample2 (nearest) ----

template <class T> Tensor<T> upsample2(Graph<T> &g, const Tensor<T> &x)
{
    check3d(x.shape(), "upsample2");
    const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    bool tr = track(x);
    Tensor<T> out = g.make({c, 2 * h, 2 * w}, tr);
    const T *xv = x.data();
    T *y = out.data();
    parallel_for(c, 1, [&](int64_t c0, int64_t c1) {
        for (int64_t ch = c0; ch < c1; ++ch)
            for (int yi = 0; yi < h; ++yi)
                for (int xi2 = 0; xi2 < w; ++xi2) {
                    T v = xv[(ch * h + yi) * w + xi2];
                    size_t o = size_t(ch * 2 * h + 2 * yi) * 2 * w + 2 * xi2;
                    y[o] = v;
                    y[o + 1] = v;
                    y[o + size_t(2 * w)] = v;
                    y[o + size_t(2 * w) + 1] = v;
                }
    });
    if (tr) {
        auto xi = x.ptr(), oi = out.ptr();
        out.node().backward = [xi, oi, c, h, w]() {
            xi->ensure_grad();
            const T *gy = oi->grad.data();
            T *gx = xi->grad.data();
            for (int ch = 0; ch < c; ++ch)
                for (int yi = 0; yi < h; ++yi)
                    for (int xi2 = 0; xi2 < w; ++xi2) {
                        size_t o = size_t(ch * 2 * h + 2 * yi) * 2 * w + 2 * xi2;
                        gx[(size_t(ch) * h + yi) * w + xi2] +=
                            gy[o] + gy[o + 1] + gy[o + size_t(2 * w)] + gy[o + size_t(2 * w) + 1];
                    }
        };
    }
    return out;
}

// ----------------------------------------------------------- avgpool2 ----

template <class T> Tensor<T> avgpool2(Graph<T> &g, const Tensor<T> &x)
{
    check3d(x.shape(), "avgpool2");
    const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    if (h % 2 || w % 2)
        throw NumericError("avgpool2: spatial dims must be even");
    const int ho = h / 2, wo = w / 2;
    bool tr = track(x);
    Tensor<T> out = g.make({c, ho, wo}, tr);
    const T *xv = x.data();
    T *y = out.data();
    for (int ch = 0; ch < c; ++ch)
        for (int yo = 0; yo < ho; ++yo)
            for (int xo = 0; xo < wo; ++xo) {
                size_t base = size_t(ch * h + 2 * yo) * w + 2 * xo;
                y[(size_t(ch) * ho + yo) * wo + xo] =
                    (xv[base] + xv[base + 1] + xv[base + w] + xv[base + w + 1]) * T(0.25);
            }
    if (tr) {
        auto xi = x.ptr(), oi = out.ptr();
        out.node().backward = [xi, oi, c, h, w, ho, wo]() {
            xi->ensure_grad();
            const T *gy = oi->grad.data();
            T *gx = xi->grad.data();
            for (int ch = 0; ch < c; ++ch)
                for (int yo = 0; yo < ho; ++yo)
                    for (int xo = 0; xo < wo; ++xo) {
                        T v = gy[(size_t(ch) * ho + yo) * wo + xo] * T(0.25);
                        size_t base = size_t(ch * h + 2 * yo) * w + 2 * xo;
                        gx[base] += v;
                        gx[base + 1] += v;
                        gx[base + w] += v;
                        gx[base + w + 1] += v;
                    }
        };
    }
    return out;
}

// Nearest (top-left) 2x downsample for categorical channels.
template <class T> Tensor<T> nearest_down2(Graph<T> &g, const Tensor<T> &x)
{
    check3d(x.shape(), "nearest_down2");
    const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    if (h % 2 || w % 2)
        throw NumericError("nearest_down2: spatial dims must be even");
    const int ho = h / 2, wo = w / 2;
    bool tr = track(x);
    Tensor<T> out = g.make({c, ho, wo}, tr);
    const T *xv = x.data();
    T *y = out.data();
    for (int ch = 0; ch < c; ++ch)
        for (int yo = 0; yo < ho; ++yo)
            for (int xo = 0; xo < wo; ++xo)
                y[(size_t(ch) * ho + yo) * wo + xo] = xv[size_t(ch * h + 2 * yo) * w + 2 * xo];
    if (tr) {
        auto xi = x.ptr(), oi = out.ptr();
        out.node().backward = [xi, oi, c, h, w, ho, wo]() {
            xi->ensure_grad();
            const T *gy = oi->grad.data();
            T *gx = xi->grad.data();
            for (int ch = 0; ch < c; ++ch)
                for (int yo = 0; yo < ho; ++yo)
                    for (int xo = 0; xo < wo; ++xo)
                        gx[size_t(ch * h + 2 * yo) * w + 2 * xo] +=
                            gy[(size_t(ch) * ho + yo) * wo + xo];
        };
    }
    return out;
}

// ------------------------------------------------------------- concat ----

template <class T> Tensor<T> concat(Graph<T> &g, const std::vector<Tensor<T>> &xs)
{
    if (xs.empty())
        throw NumericError("concat: no inputs");
    const int h = xs[0].shape()[1], w = xs[0].shape()[2];
    int c_total = 0;
    bool tr = false;
    for (const auto &x : xs) {
        check3d(x.shape(), "concat");
        if (x.shape()[1] != h || x.shape()[2] != w)
            throw NumericError("concat: spatial dims differ");
        c_total += x.shape()[0];
        tr = tr || track(x);
    }
    Tensor<T> out = g.make({c_total, h, w}, tr);
    T *y = out.data();
    size_t off = 0;
    for (const auto &x : xs) {
        std::copy(x.data(), x.data() + x.numel(), y + off);
        off += size_t(x.numel());
    }
    if (tr) {
        std::vector<std::shared_ptr<TensorImpl<T>>> parents;
        for (const auto &x : xs)
            parents.push_back(x.ptr());
        auto oi = out.ptr();
        out.node().backward = [parents, oi]() {
            const T *gy = oi->grad.data();
            size_t o = 0;
            for (auto &p : parents) {
                size_t n = p->val.size();
                if (p->needs_grad) {
                    p->ensure_grad();
                    T *gp = p->grad.data();
                    for (size_t i = 0; i < n; ++i)
                        gp[i] += gy[o + i];
                }
                o += n;
            }
        };
    }
    return out;
}

// Copy an arbitrary channel subset.
template <class T>
Tensor<T> gather_channels(Graph<T> &g, const Tensor<T> &x, const std::vector<int> &channels)
{
    check3d(x.shape(), "gather_channels");
    const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    for (int ch : channels)
        if (ch < 0 || ch >= c)
            throw NumericError(strf("gather_channels: channel %d out of range %d", ch, c));
    bool tr = track(x);
    Tensor<T> out = g.make({int(channels.size()), h, w}, tr);
    const size_t plane = size_t(h) * w;
    const T *xv = x.data();
    T *y = out.data();
    for (size_t i = 0; i < channels.size(); ++i)
        std::copy(xv + size_t(channels[i]) * plane, xv + size_t(channels[i] + 1) * plane,
                  y + i * plane);
    if (tr) {
        auto xi = x.ptr(), oi = out.ptr();
        auto chans = channels;
        out.node().backward = [xi, oi, chans, plane]() {
            xi->ensure_grad();
            const T *gy = oi->grad.data();
            T *gx = xi->grad.data();
            for (size_t i = 0; i < chans.size(); ++i)
                for (size_t j = 0; j < plane; ++j)
                    gx[size_t(chans[i]) * plane + j] += gy[i * plane + j];
        };
    }
    return out;
}

// Broadcast multiply of x [C,H,W] by a single-channel mask [1,H,W].
template <class T> Tensor<T> mul_gate(Graph<T> &g, const Tensor<T> &x, const Tensor<T> &m)
{
    check3d(x.shape(), "mul_gate");
    if (m.shape() != std::vector<int>{1, x.shape()[1], x.shape()[2]})
        throw NumericError("mul_gate: mask must be [1,H,W] aligned with x");
    const int c = x.shape()[0];
    const size_t plane = size_t(x.shape()[1]) * x.shape()[2];
    bool tr = track(x) || track(m);
    Tensor<T> out = g.make(x.shape(), tr);
    const T *xv = x.data();
    const T *mv = m.data();
    T *y = out.data();
    parallel_for(c, 1, [&](int64_t c0, int64_t c1) {
        for (int64_t ch = c0; ch < c1; ++ch)
            for (size_t j = 0; j < plane; ++j)
                y[size_t(ch) * plane + j] = xv[size_t(ch) * plane + j] * mv[j];
    });
    if (tr) {
        auto xi = x.ptr(), mi = m.ptr(), oi = out.ptr();
        out.node().backward = [xi, mi, oi, c, plane]() {
            const T *gy = oi->grad.data();
            if (xi->needs_grad) {
                xi->ensure_grad();
                const T *mv2 = mi->val.data();
                T *gx = xi->grad.data();
                for (int ch = 0; ch < c; ++ch)
                    for (size_t j = 0; j < plane; ++j)
                        gx[size_t(ch) * plane + j] += gy[size_t(ch) * plane + j] * mv2[j];
            }
            if (mi->needs_grad) {
                mi->ensure_grad();
                const T *xv2 = xi->val.data();
                T *gm = mi->grad.data();
                for (int ch = 0; ch < c; ++ch)
                    for (size_t j = 0; j < plane; ++j)
                        gm[j] += gy[size_t(ch) * plane + j] * xv2[size_t(ch) * plane + j];
            }
        };
    }
    return out;
}

// ---------------------------------------------------------- losses ------
// Weighted mean-squared error: sum_i w_i d_i^2 / sum_i w_i where d is the
// plain or circularly wrapped difference. Targets and weights are plain
// buffers (no gradient).

template <class T>
Tensor<T> masked_mse(Graph<T> &g, const Tensor<T> &pred, const std::vector<T> &target,
                     const std::vector<T> &weight, bool wrapped)
{
    const int64_t n = pred.numel();
    if (int64_t(target.size()) != n || int64_t(weight.size()) != n)
        throw NumericError("masked_mse: target/weight size mismatch");
    double wsum = 0;
    for (int64_t i = 0; i < n; ++i)
        wsum += double(weight[size_t(i)]);
    if (wsum <= 0)
        throw NumericError("masked_mse: no entries included by the mask");

    auto diff = std::make_shared<std::vector<T>>(size_t(n));
    const T *pv = pred.data();
    double acc = parallel_sum(n, [&](int64_t i) {
        T d = pv[i] - target[size_t(i)];
        if (wrapped)
            d = T(wrap_pi(double(d)));
        (*diff)[size_t(i)] = d;
        return double(weight[size_t(i)]) * double(d) * double(d);
    });

    bool tr = track(pred);
    Tensor<T> out = g.make({1}, tr);
    out.data()[0] = T(acc / wsum);
    if (tr) {
        auto pi = pred.ptr(), oi = out.ptr();
        auto wts = std::make_shared<std::vector<T>>(weight);
        out.node().backward = [pi, oi, diff, wts, wsum, n]() {
            pi->ensure_grad();
            const T gy = oi->grad[0];
            T *gp = pi->grad.data();
            const T scale = T(2.0 / wsum) * gy;
            for (int64_t i = 0; i < n; ++i)
                gp[size_t(i)] += scale * (*wts)[size_t(i)] * (*diff)[size_t(i)];
        };
    }
    return out;
}

// Scalar accumulate: sum of scalars (for batch-averaged losses).
template <class T> Tensor<T> add_scaled(Graph<T> &g, const Tensor<T> &a, const Tensor<T> &b, T sb)
{
    if (a.numel() != 1 || b.numel() != 1)
        throw NumericError("add_scaled: scalars only");
    bool tr = track(a) || track(b);
    Tensor<T> out = g.make({1}, tr);
    out.data()[0] = a.data()[0] + sb * b.data()[0];
    if (tr) {
        auto ai = a.ptr(), bi = b.ptr(), oi = out.ptr();
        out.node().backward = [ai, bi, oi, sb]() {
            if (ai->needs_grad) {
                ai->ensure_grad();
                ai->grad[0] += oi->grad[0];
            }
            if (bi->needs_grad) {
                bi->ensure_grad();
                bi->grad[0] += sb * oi->grad[0];
            }
        };
    }
    return out;
}

} // namespace nn

} // namespace xband
