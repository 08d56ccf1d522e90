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

#include <sstream>

#include "tensor.hpp"

namespace xband {

enum class Arch { unet, aunet, aunet_parallel, aunet_aux };

inline const char *arch_name(Arch a)
{
    switch (a) {
    case Arch::unet: return "unet";
    case Arch::aunet: return "aunet";
    case Arch::aunet_parallel: return "aunet_parallel";
    case Arch::aunet_aux: return "aunet_aux";
    }
    return "?";
}

inline Arch arch_from_name(const std::string &s)
{
    if (s == "unet") return Arch::unet;
    if (s == "aunet") return Arch::aunet;
    if (s == "aunet_parallel") return Arch::aunet_parallel;
    if (s == "aunet_aux") return Arch::aunet_aux;
    throw ConfigError(strf("unknown architecture '%s'", s.c_str()));
}

struct ModelSpec {
    Arch arch = Arch::aunet;
    int in_channels = 0;
    int out_channels = 0;
    int base_width = 16;
    int depth = 4; // downsampling stages
    std::vector<int> aux_channels;      // inputs replicated into decoder skips (aunet_aux)
    std::vector<int> aux_categorical;   // subset pooled with nearest instead of average
    std::vector<int> residual_input_channels; // per output channel, input channel added to head
    bool zero_init_head = false;
    int parallel_split = 1; // output channels handled by the first core of aunet_parallel
    uint64_t seed = 1;

    std::string canonical() const
    {
        std::ostringstream os;
        os << "arch=" << arch_name(arch) << ";in=" << in_channels << ";out=" << out_channels
           << ";base=" << base_width << ";depth=" << depth << ";aux=";
        for (int c : aux_channels)
            os << c << ",";
        os << ";auxcat=";
        for (int c : aux_categorical)
            os << c << ",";
        os << ";res=";
        for (int c : residual_input_channels)
            os << c << ",";
        os << ";zh=" << int(zero_init_head) << ";split=" << parallel_split << ";seed=" << seed;
        return os.str();
    }

    uint64_t digest() const { return fnv1a64(canonical()); }

    void validate() const
    {
        if (in_channels < 1 || out_channels < 1)
            throw ConfigError("model needs positive channel counts");
        if (depth < 1)
            throw ConfigError("model depth must be >= 1");
        if (!aux_channels.empty() && arch != Arch::aunet_aux)
            throw ConfigError("aux channel indices are only valid for the aunet_aux arch");
        for (int c : aux_channels)
            if (c < 0 || c >= in_channels)
                throw ConfigError(strf("aux channel %d outside the input range", c));
        if (!residual_input_channels.empty() &&
            int(residual_input_channels.size()) != out_channels)
            throw ConfigError("residual_input_channels must list one input per output channel");
        for (int c : residual_input_channels)
            if (c < 0 || c >= in_channels)
                throw ConfigError(strf("residual channel %d outside the input range", c));
        if (arch == Arch::aunet_parallel &&
            (parallel_split < 1 || parallel_split >= out_channels))
            throw ConfigError("parallel_split must be inside (0, out_channels)");
    }
};

template <class T> struct ConvLayer {
    Tensor<T> w, b;
};

template <class T> struct BlockLayer {
    ConvLayer<T> c1, c2;
};

template <class T> struct AttnGate {
    ConvLayer<T> wx, wg, psi;
};

template <class T> struct UNetCore {
    std::vector<BlockLayer<T>> enc;
    BlockLayer<T> bottleneck;
    std::vector<ConvLayer<T>> upconv; // index k operates at level k
    std::vector<BlockLayer<T>> dec;
    std::vector<AttnGate<T>> gates;   // empty for plain unet
    ConvLayer<T> head;
    std::vector<int> dec_in_width;    // bookkeeping for tests
};

template <class T> class Model {
  public:
    ModelSpec spec;
    UNetCore<T> core;
    std::optional<UNetCore<T>> second; // aunet_parallel

    std::vector<Tensor<T>> params() const
    {
        std::vector<Tensor<T>> out;
        auto add_conv = [&](const ConvLayer<T> &c) {
            out.push_back(c.w);
            out.push_back(c.b);
        };
        auto add_core = [&](const UNetCore<T> &u) {
            for (const auto &b : u.enc) {
                add_conv(b.c1);
                add_conv(b.c2);
            }
            add_conv(u.bottleneck.c1);
            add_conv(u.bottleneck.c2);
            for (const auto &c : u.upconv)
                add_conv(c);
            for (const auto &b : u.dec) {
                add_conv(b.c1);
                add_conv(b.c2);
            }
            for (const auto &gt : u.gates) {
                add_conv(gt.wx);
                add_conv(gt.wg);
                add_conv(gt.psi);
            }
            add_conv(u.head);
        };
        add_core(core);
        if (second)
            add_core(*second);
        return out;
    }

    int64_t param_count() const
    {
        int64_t n = 0;
        for (const auto &p : params())
            n += p.numel();
        return n;
    }

    void zero_grad() const
    {
        for (auto &p : params())
            p.zero_grad();
    }

    // Forward pass for one CHW sample. When `train` is false nothing is
    // recorded on the tape.
    Tensor<T> forward(Graph<T> &g, const Tensor<T> &x) const
    {
        if (x.shape().size() != 3 || x.shape()[0] != spec.in_channels)
            throw NumericError(strf("model expects %d input channels, got %d", spec.in_channels,
                                    x.shape().size() == 3 ? x.shape()[0] : -1));
        const int h = x.shape()[1], w = x.shape()[2];
        if ((h >> spec.depth) << spec.depth != h || (w >> spec.depth) << spec.depth != w ||
            (h >> spec.depth) < 1 || (w >> spec.depth) < 1)
            throw NumericError(strf("input %dx%d not divisible by 2^%d", h, w, spec.depth));

        Tensor<T> out;
        if (spec.arch == Arch::aunet_parallel) {
            Tensor<T> a = core_forward(g, core, x);
            Tensor<T> b = core_forward(g, *second, x);
            out = nn::concat(g, {a, b});
        } else {
            out = core_forward(g, core, x);
        }
        if (!spec.residual_input_channels.empty()) {
            Tensor<T> res = nn::gather_channels(g, x, spec.residual_input_channels);
            out = nn::add(g, out, res);
        }
        return out;
    }

  private:
    Tensor<T> core_forward(Graph<T> &g, const UNetCore<T> &u, const Tensor<T> &x) const
    {
        auto block = [&](const BlockLayer<T> &b, const Tensor<T> &in) {
            Tensor<T> t = nn::relu(g, nn::conv2d(g, in, b.c1.w, b.c1.b));
            return nn::relu(g, nn::conv2d(g, t, b.c2.w, b.c2.b));
        };

        // Aux pyramid: the flagged input channels pooled to each level.
        std::vector<Tensor<T>> aux_levels;
        if (!spec.aux_channels.empty()) {
            std::vector<int> cont, cat;
            for (int c : spec.aux_channels) {
                bool is_cat = std::find(spec.aux_categorical.begin(), spec.aux_categorical.end(),
                                        c) != spec.aux_categorical.end();
                (is_cat ? cat : cont).push_back(c);
            }
            Tensor<T> cont_t = cont.empty() ? Tensor<T>() : nn::gather_channels(g, x, cont);
            Tensor<T> cat_t = cat.empty() ? Tensor<T>() : nn::gather_channels(g, x, cat);
            for (int level = 0; level < spec.depth; ++level) {
                if (level > 0) {
                    if (cont_t.valid())
                        cont_t = nn::avgpool2(g, cont_t);
                    if (cat_t.valid())
                        cat_t = nn::nearest_down2(g, cat_t);
                }
                if (cont_t.valid() && cat_t.valid())
                    aux_levels.push_back(nn::concat(g, {cont_t, cat_t}));
                else
                    aux_levels.push_back(cont_t.valid() ? cont_t : cat_t);
            }
        }

        std::vector<Tensor<T>> skips;
        Tensor<T> h = x;
        for (int k = 0; k < spec.depth; ++k) {
            h = block(u.enc[size_t(k)], h);
            skips.push_back(h);
            h = nn::maxpool2(g, h);
        }
        h = block(u.bottleneck, h);
        for (int k = spec.depth - 1; k >= 0; --k) {
            Tensor<T> gate_src = h; // coarser-scale feature drives the gate
            Tensor<T> up = nn::conv2d(g, nn::upsample2(g, h), u.upconv[size_t(k)].w,
                                      u.upconv[size_t(k)].b);
            Tensor<T> skip = skips[size_t(k)];
            if (!u.gates.empty()) {
                const AttnGate<T> &gt = u.gates[size_t(k)];
                skip = attention_gate(g, gt, skip, gate_src);
            }
            std::vector<Tensor<T>> cat = {up, skip};
            if (!aux_levels.empty())
                cat.push_back(aux_levels[size_t(k)]);
            h = block(u.dec[size_t(k)], nn::concat(g, cat));
        }
        return nn::conv2d(g, h, u.head.w, u.head.b);
    }

  public:
    // out = x .* sigmoid(psi(relu(Wx x + up(Wg g)))), mask broadcast over
    // channels. g comes from the next-coarser stage.
    static Tensor<T> attention_gate(Graph<T> &g, const AttnGate<T> &gt, const Tensor<T> &x,
                                    const Tensor<T> &gate_src)
    {
        Tensor<T> q = nn::conv2d(g, x, gt.wx.w, gt.wx.b);
        Tensor<T> p = nn::upsample2(g, nn::conv2d(g, gate_src, gt.wg.w, gt.wg.b));
        if (q.shape() != p.shape())
            throw NumericError("attention_gate: spatial dims of x and gating signal misaligned");
        Tensor<T> a = nn::relu(g, nn::add(g, q, p));
        Tensor<T> m = nn::sigmoid(g, nn::conv2d(g, a, gt.psi.w, gt.psi.b));
        return nn::mul_gate(g, x, m);
    }
};

namespace detail {

template <class T>
ConvLayer<T> make_conv(Rng &rng, int oc, int ic, int k, bool zero_init)
{
    ConvLayer<T> c;
    c.w = Tensor<T>::zeros({oc, ic, k, k}, true);
    c.b = Tensor<T>::zeros({oc}, true);
    if (!zero_init) {
        double scale = std::sqrt(2.0 / (double(ic) * k * k)); // Kaiming fan-in
        T *w = c.w.data();
        for (int64_t i = 0; i < c.w.numel(); ++i)
            w[i] = T(rng.normal() * scale);
    }
    return c;
}

template <class T>
UNetCore<T> make_core(const ModelSpec &spec, Rng &rng, int out_channels)
{
    UNetCore<T> u;
    const int d = spec.depth;
    std::vector<int> width(size_t(d) + 1);
    for (int k = 0; k <= d; ++k)
        width[size_t(k)] = spec.base_width << k;
    const int n_aux = int(spec.aux_channels.size());

    int in_c = spec.in_channels;
    for (int k = 0; k < d; ++k) {
        BlockLayer<T> b;
        b.c1 = make_conv<T>(rng, width[size_t(k)], in_c, 3, false);
        b.c2 = make_conv<T>(rng, width[size_t(k)], width[size_t(k)], 3, false);
        u.enc.push_back(b);
        in_c = width[size_t(k)];
    }
    u.bottleneck.c1 = make_conv<T>(rng, width[size_t(d)], width[size_t(d - 1)], 3, false);
    u.bottleneck.c2 = make_conv<T>(rng, width[size_t(d)], width[size_t(d)], 3, false);

    u.upconv.resize(size_t(d));
    u.dec.resize(size_t(d));
    u.dec_in_width.resize(size_t(d));
    for (int k = d - 1; k >= 0; --k) {
        int coarser = (k == d - 1) ? width[size_t(d)] : width[size_t(k + 1)];
        u.upconv[size_t(k)] = make_conv<T>(rng, width[size_t(k)], coarser, 3, false);
        int cat_w = width[size_t(k)] * 2 + n_aux;
        u.dec_in_width[size_t(k)] = cat_w;
        u.dec[size_t(k)].c1 = make_conv<T>(rng, width[size_t(k)], cat_w, 3, false);
        u.dec[size_t(k)].c2 = make_conv<T>(rng, width[size_t(k)], width[size_t(k)], 3, false);
    }
    if (spec.arch != Arch::unet) {
        for (int k = 0; k < d; ++k) {
            AttnGate<T> gt;
            int ci = std::max(width[size_t(k)] / 2, 4);
            int coarser = (k == d - 1) ? width[size_t(d)] : width[size_t(k + 1)];
            gt.wx = make_conv<T>(rng, ci, width[size_t(k)], 1, false);
            gt.wg = make_conv<T>(rng, ci, coarser, 1, false);
            gt.psi = make_conv<T>(rng, 1, ci, 1, false);
            u.gates.push_back(gt);
        }
    }
    u.head = make_conv<T>(rng, out_channels, width[0], 1, spec.zero_init_head);
    return u;
}

} // namespace detail

template <class T> Model<T> build_model(const ModelSpec &spec)
{
    spec.validate();
    Model<T> m;
    m.spec = spec;
    Rng rng(spec.seed ^ 0x6d6f64656cULL);
    if (spec.arch == Arch::aunet_parallel) {
        m.core = detail::make_core<T>(spec, rng, spec.parallel_split);
        m.second = detail::make_core<T>(spec, rng, spec.out_channels - spec.parallel_split);
    } else {
        m.core = detail::make_core<T>(spec, rng, spec.out_channels);
    }
    return m;
}

// Conv blocks per core: depth encoder blocks + bottleneck + depth decoder
// blocks (upconvs, gates and the 1x1 head are not blocks).
inline int conv_block_count(const ModelSpec &spec) { return 2 * spec.depth + 1; }

} // namespace xband
