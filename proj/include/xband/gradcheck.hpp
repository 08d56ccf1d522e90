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

#include "tensor.hpp"

namespace xband {

// Central-difference comparison of analytic gradients. `loss_fn` must build a
// fresh graph from the current tensor values and return the scalar loss.
// Coordinates of ReLU kinks are the caller's concern: pick evaluation points
// away from zero pre-activations. `denom_floor` sets the scale below which a
// coordinate counts as zero; float32 checks need it at the central-difference
// cancellation noise (|loss| * 2^-23 / eps), double checks can keep 1e-6.
template <class T, class LossFn>
double grad_check(const std::vector<Tensor<T>> &checked, LossFn &&loss_fn, T eps,
                  int coords_per_tensor, uint64_t seed, double denom_floor = 1e-6)
{
    // Analytic pass.
    for (const auto &t : checked) {
        t.node().ensure_grad();
        t.zero_grad();
    }
    {
        Graph<T> g;
        Tensor<T> loss = loss_fn(g);
        g.backward(loss);
    }
    std::vector<std::vector<T>> analytic;
    for (const auto &t : checked) {
        t.node().ensure_grad();
        analytic.emplace_back(t.node().grad);
    }

    auto eval = [&]() {
        Graph<T> g;
        Tensor<T> loss = loss_fn(g);
        return double(loss.data()[0]);
    };

    Rng rng(seed);
    double worst = 0.0;
    for (size_t ti = 0; ti < checked.size(); ++ti) {
        const int64_t n = checked[ti].numel();
        T *vals = checked[ti].data();
        int n_coords = int(std::min<int64_t>(coords_per_tensor, n));
        for (int c = 0; c < n_coords; ++c) {
            int64_t i = int64_t(rng.uniform_int(uint64_t(n)));
            T saved = vals[i];
            vals[i] = saved + eps;
            double lp = eval();
            vals[i] = saved - eps;
            double lm = eval();
            vals[i] = saved;
            double fd = (lp - lm) / (2.0 * double(eps));
            double ad = double(analytic[ti][size_t(i)]);
            double denom = std::max({std::fabs(fd), std::fabs(ad), denom_floor});
            worst = std::max(worst, std::fabs(fd - ad) / denom);
        }
    }
    return worst;
}

} // namespace xband
