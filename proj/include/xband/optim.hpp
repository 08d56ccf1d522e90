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

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <class T> struct AdamState {
    std::vector<std::vector<T>> m, v;
    int64_t t = 0;

    void init(const std::vector<Tensor<T>> &params)
    {
        m.clear();
        v.clear();
        for (const auto &p : params) {
            m.emplace_back(size_t(p.numel()), T(0));
            v.emplace_back(size_t(p.numel()), T(0));
        }
        t = 0;
    }
};

enum class StepStatus { ok, rejected_nonfinite };

// Bias-corrected Adam. A step with any non-finite gradient is rejected and
// leaves parameters and moments untouched.
template <class T>
StepStatus adam_step(const std::vector<Tensor<T>> &params, AdamState<T> &state,
                     const AdamHyper &hp)
{
    if (state.m.size() != params.size())
        throw NumericError("adam_step: state does not match parameter list");
    for (const auto &p : params) {
        p.node().ensure_grad();
        const T *gp = p.grad_data();
        for (int64_t i = 0; i < p.numel(); ++i)
            if (!std::isfinite(double(gp[i])))
                return StepStatus::rejected_nonfinite;
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(hp.beta1, double(state.t));
    const double bc2 = 1.0 - std::pow(hp.beta2, double(state.t));
    for (size_t pi = 0; pi < params.size(); ++pi) {
        T *w = params[pi].data();
        const T *gp = params[pi].grad_data();
        T *m = state.m[pi].data();
        T *v = state.v[pi].data();
        const int64_t n = params[pi].numel();
        parallel_for(n, 1 << 14, [&](int64_t i0, int64_t i1) {
            for (int64_t i = i0; i < i1; ++i) {
                double gi = double(gp[i]);
                double mi = hp.beta1 * double(m[i]) + (1 - hp.beta1) * gi;
                double vi = hp.beta2 * double(v[i]) + (1 - hp.beta2) * gi * gi;
                m[i] = T(mi);
                v[i] = T(vi);
                double mhat = mi / bc1;
                double vhat = vi / bc2;
                w[i] = T(double(w[i]) - hp.lr * mhat / (std::sqrt(vhat) + hp.eps));
            }
        });
    }
    return StepStatus::ok;
}

} // namespace xband
