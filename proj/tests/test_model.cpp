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

#include <catch2/catch_amalgamated.hpp>

#include "xband/gradcheck.hpp"
#include "xband/model.hpp"

using namespace xband;
using Catch::Matchers::WithinAbs;

namespace {

template <class T> void fill_smooth(Tensor<T> &t, uint64_t seed)
{
    Rng rng(seed);
    T *p = t.data();
    for (int64_t i = 0; i < t.numel(); ++i) {
        double v = rng.normal();
        if (std::fabs(v) < 0.05)
            v = v < 0 ? v - 0.05 : v + 0.05;
        p[i] = T(v);
    }
}

} // namespace

TEST_CASE("output shape law for the gain model")
{
    ModelSpec spec;
    spec.arch = Arch::aunet;
    spec.in_channels = 81;
    spec.out_channels = 20;
    spec.base_width = 4; // width does not affect the shape law
    spec.seed = 5;
    auto m = build_model<float>(spec);
    Graph<float> g;
    Tensor<float> x = Tensor<float>::zeros({81, 128, 128});
    auto y = m.forward(g, x);
    CHECK(y.shape() == std::vector<int>{20, 128, 128});
    CHECK_THROWS_AS(m.forward(g, Tensor<float>::zeros({81, 100, 100})), NumericError);
    CHECK_THROWS_AS(m.forward(g, Tensor<float>::zeros({80, 128, 128})), NumericError);
}

TEST_CASE("same seed builds identical parameters")
{
    ModelSpec spec;
    spec.arch = Arch::aunet;
    spec.in_channels = 12;
    spec.out_channels = 5;
    spec.base_width = 8;
    spec.seed = 77;
    auto a = build_model<float>(spec);
    auto b = build_model<float>(spec);
    auto pa = a.params(), pb = b.params();
    REQUIRE(pa.size() == pb.size());
    CHECK(a.param_count() == b.param_count());
    for (size_t i = 0; i < pa.size(); ++i)
        for (int64_t j = 0; j < pa[i].numel(); ++j)
            REQUIRE(pa[i].data()[j] == pb[i].data()[j]);
}

TEST_CASE("depth-4 cores contain nine conv blocks")
{
    ModelSpec spec;
    spec.depth = 4;
    spec.in_channels = 8;
    spec.out_channels = 4;
    CHECK(conv_block_count(spec) == 9);
    auto m = build_model<float>(spec);
    CHECK(int(m.core.enc.size() + m.core.dec.size() + 1) == 9);
}

TEST_CASE("aux variant widens decoder blocks by the pooled aux width")
{
    ModelSpec plain;
    plain.arch = Arch::aunet;
    plain.in_channels = 81;
    plain.out_channels = 20;
    plain.base_width = 8;
    ModelSpec aux = plain;
    aux.arch = Arch::aunet_aux;
    for (int c = 20; c < 80; ++c)
        aux.aux_channels.push_back(c); // 60 aux channels
    for (int c = 20; c < 40; ++c)
        aux.aux_categorical.push_back(c);
    auto ma = build_model<float>(plain);
    auto mb = build_model<float>(aux);
    REQUIRE(ma.core.dec_in_width.size() == mb.core.dec_in_width.size());
    for (size_t k = 0; k < ma.core.dec_in_width.size(); ++k)
        CHECK(mb.core.dec_in_width[k] - ma.core.dec_in_width[k] == 60);
    // And the forward pass respects the widths end to end.
    Graph<float> g;
    Tensor<float> x = Tensor<float>::zeros({81, 32, 32});
    fill_smooth(x, 3);
    auto y = mb.forward(g, x);
    CHECK(y.shape() == std::vector<int>{20, 32, 32});
}

TEST_CASE("aux indices on a non-aux arch are rejected")
{
    ModelSpec spec;
    spec.arch = Arch::aunet;
    spec.in_channels = 10;
    spec.out_channels = 2;
    spec.aux_channels = {3};
    CHECK_THROWS_AS(build_model<float>(spec), ConfigError);
}

TEST_CASE("parallel variant concatenates the two core outputs")
{
    ModelSpec spec;
    spec.arch = Arch::aunet_parallel;
    spec.in_channels = 16;
    spec.out_channels = 6;
    spec.parallel_split = 1; // first-arrival slot vs the rest
    spec.base_width = 4;
    auto m = build_model<float>(spec);
    REQUIRE(m.second.has_value());
    Graph<float> g;
    Tensor<float> x = Tensor<float>::zeros({16, 16, 16});
    fill_smooth(x, 4);
    auto y = m.forward(g, x);
    CHECK(y.shape() == std::vector<int>{6, 16, 16});
    // First channel comes from core A: zeroing core B's head leaves it alone.
    auto before = y.data()[0];
    for (auto &p : {m.second->head.w, m.second->head.b})
        std::fill(p.data(), p.data() + p.numel(), 0.0f);
    Graph<float> g2;
    auto y2 = m.forward(g2, x);
    CHECK(y2.data()[0] == before);
    for (int64_t i = int64_t(1) * 16 * 16; i < y2.numel(); ++i)
        CHECK(y2.data()[i] == 0.0f);
}

TEST_CASE("attention gate closed-form behaviours")
{
    // All-zero parameters: mask = sigmoid(0) = 0.5 everywhere.
    AttnGate<float> gt;
    gt.wx.w = Tensor<float>::zeros({4, 3, 1, 1}, true);
    gt.wx.b = Tensor<float>::zeros({4}, true);
    gt.wg.w = Tensor<float>::zeros({4, 5, 1, 1}, true);
    gt.wg.b = Tensor<float>::zeros({4}, true);
    gt.psi.w = Tensor<float>::zeros({1, 4, 1, 1}, true);
    gt.psi.b = Tensor<float>::zeros({1}, true);
    Tensor<float> x = Tensor<float>::zeros({3, 8, 8});
    Tensor<float> gsrc = Tensor<float>::zeros({5, 4, 4});
    fill_smooth(x, 5);
    fill_smooth(gsrc, 6);
    Graph<float> g;
    auto out = Model<float>::attention_gate(g, gt, x, gsrc);
    for (int64_t i = 0; i < x.numel(); ++i)
        CHECK_THAT(double(out.data()[i]), WithinAbs(0.5 * double(x.data()[i]), 1e-7));

    // Large psi bias saturates the mask at 1 and passes x through.
    gt.psi.b.data()[0] = 50.0f;
    Graph<float> g2;
    auto out2 = Model<float>::attention_gate(g2, gt, x, gsrc);
    for (int64_t i = 0; i < x.numel(); ++i)
        CHECK_THAT(double(out2.data()[i]), WithinAbs(double(x.data()[i]), 1e-6));

    // Misaligned gating signal is rejected.
    Graph<float> g3;
    CHECK_THROWS_AS(Model<float>::attention_gate(g3, gt, x, Tensor<float>::zeros({5, 8, 8})),
                    NumericError);
}

TEST_CASE("attention gate gradients match finite differences")
{
    AttnGate<double> gt;
    Rng rng(7);
    auto init = [&](std::vector<int> shape) {
        Tensor<double> t = Tensor<double>::zeros(shape, true);
        fill_smooth(t, rng.next_u64());
        return t;
    };
    gt.wx.w = init({4, 3, 1, 1});
    gt.wx.b = init({4});
    gt.wg.w = init({4, 5, 1, 1});
    gt.wg.b = init({4});
    gt.psi.w = init({1, 4, 1, 1});
    gt.psi.b = init({1});
    Tensor<double> x = init({3, 8, 8});
    Tensor<double> gsrc = init({5, 4, 4});
    std::vector<double> target(size_t(3) * 8 * 8);
    std::vector<double> weight(target.size(), 1.0);
    Rng trng(8);
    for (auto &t : target)
        t = trng.normal();
    auto fn = [&](Graph<double> &g) {
        auto out = Model<double>::attention_gate(g, gt, x, gsrc);
        return nn::masked_mse(g, out, target, weight, false);
    };
    double err = grad_check<double>({x, gsrc, gt.wx.w, gt.wg.w, gt.psi.w, gt.psi.b}, fn, 1e-6,
                                    40, 123);
    CHECK(err < 1e-4);
}

TEST_CASE("zero model maps zero input to the head bias")
{
    ModelSpec spec;
    spec.arch = Arch::unet;
    spec.in_channels = 4;
    spec.out_channels = 3;
    spec.base_width = 4;
    auto m = build_model<float>(spec);
    for (auto &p : m.params())
        std::fill(p.data(), p.data() + p.numel(), 0.0f);
    m.core.head.b.data()[0] = 1.5f;
    m.core.head.b.data()[1] = -2.0f;
    Graph<float> g;
    auto y = m.forward(g, Tensor<float>::zeros({4, 16, 16}));
    for (int i = 0; i < 16 * 16; ++i) {
        CHECK(y.data()[i] == 1.5f);
        CHECK(y.data()[16 * 16 + i] == -2.0f);
        CHECK(y.data()[2 * 16 * 16 + i] == 0.0f);
    }
}

TEST_CASE("forward is pure: identical samples give identical outputs")
{
    ModelSpec spec;
    spec.arch = Arch::aunet;
    spec.in_channels = 6;
    spec.out_channels = 2;
    spec.base_width = 4;
    spec.seed = 9;
    auto m = build_model<float>(spec);
    Tensor<float> x = Tensor<float>::zeros({6, 16, 16});
    fill_smooth(x, 10);
    Graph<float> g1, g2;
    auto y1 = m.forward(g1, x);
    auto y2 = m.forward(g2, x);
    for (int64_t i = 0; i < y1.numel(); ++i)
        REQUIRE(y1.data()[i] == y2.data()[i]);
}

TEST_CASE("residual input channels with zero head give the copy solution")
{
    ModelSpec spec;
    spec.arch = Arch::aunet;
    spec.in_channels = 8;
    spec.out_channels = 4;
    spec.base_width = 4;
    spec.residual_input_channels = {0, 1, 2, 3};
    spec.zero_init_head = true;
    auto m = build_model<float>(spec);
    Tensor<float> x = Tensor<float>::zeros({8, 16, 16});
    fill_smooth(x, 11);
    Graph<float> g;
    auto y = m.forward(g, x);
    for (int c = 0; c < 4; ++c)
        for (int i = 0; i < 16 * 16; ++i)
            REQUIRE(y.data()[c * 256 + i] == x.data()[c * 256 + i]);
}

TEST_CASE("full tiny attention unet passes the gradient suite")
{
    ModelSpec spec;
    spec.arch = Arch::aunet_aux;
    spec.in_channels = 6;
    spec.out_channels = 2;
    spec.base_width = 4;
    spec.depth = 2; // 8x8 input floor
    spec.aux_channels = {2, 3, 4};
    spec.aux_categorical = {3};
    spec.seed = 31;

    SECTION("double precision, tight tolerance")
    {
        auto m = build_model<double>(spec);
        Tensor<double> x = Tensor<double>::zeros({6, 8, 8}, true);
        fill_smooth(x, 12);
        std::vector<double> target(size_t(2) * 8 * 8);
        std::vector<double> weight(target.size(), 1.0);
        Rng trng(13);
        for (auto &t : target)
            t = trng.normal();
        auto fn = [&](Graph<double> &g) {
            return nn::masked_mse(g, m.forward(g, x), target, weight, false);
        };
        std::vector<Tensor<double>> checked = m.params();
        checked.push_back(x);
        CHECK(grad_check<double>(checked, fn, 1e-6, 6, 321) < 1e-4);
    }
    SECTION("float32, loose tolerance")
    {
        auto m = build_model<float>(spec);
        Tensor<float> x = Tensor<float>::zeros({6, 8, 8}, true);
        fill_smooth(x, 12);
        std::vector<float> target(size_t(2) * 8 * 8);
        std::vector<float> weight(target.size(), 1.0f);
        Rng trng(13);
        for (auto &t : target)
            t = float(trng.normal());
        auto fn = [&](Graph<float> &g) {
            return nn::masked_mse(g, m.forward(g, x), target, weight, false);
        };
        std::vector<Tensor<float>> checked = m.params();
        checked.push_back(x);
        CHECK(grad_check<float>(checked, fn, 1e-3f, 4, 321, 1e-2) < 1e-2);
    }
}
