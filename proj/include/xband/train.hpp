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

#include "container.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "optim.hpp"

namespace xband {

struct TrainConfig {
    int epochs = 200;
    int batch = 4;
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    bool augment = true;
    uint64_t seed = 1;
    double stop_at_train_loss = 0.0; // 0 disables early stop
    bool verbose = false;

    void validate() const
    {
        if (epochs < 1 || batch < 1)
            throw ConfigError("training requires epochs >= 1 and batch >= 1");
    }
};

struct EpochStats {
    double train_loss = 0, val_loss = 0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    int best_epoch = -1;
    double best_val = std::numeric_limits<double>::infinity();
    bool diverged = false;

    uint64_t history_digest() const
    {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto &e : history) {
            h = fnv1a64(&e.train_loss, sizeof(double), h);
            h = fnv1a64(&e.val_loss, sizeof(double), h);
        }
        return h;
    }
};

namespace detail {

inline bool loss_is_wrapped(DatasetKind kind) { return kind == DatasetKind::phase; }

struct StepTensors {
    Tensor<float> input;
    std::vector<float> target;
    std::vector<float> weight;
};

inline StepTensors make_step(const Sample &s, const FeatureConfig &cfg)
{
    StepTensors st;
    st.input = sample_to_input<float>(s, cfg);
    st.target = sample_to_target<float>(s, cfg);
    st.weight = sample_to_weights<float>(s);
    return st;
}

} // namespace detail

// Masked-MSE loss of a model on one sample (no augmentation); used for
// validation and tests.
inline double eval_loss(const Model<float> &model, const Sample &s, const FeatureConfig &cfg)
{
    auto st = detail::make_step(s, cfg);
    Graph<float> g;
    Tensor<float> y = model.forward(g, st.input);
    Tensor<float> l =
        nn::masked_mse(g, y, st.target, st.weight, detail::loss_is_wrapped(s.kind));
    return double(l.data()[0]);
}

// Physical-unit prediction for one sample (HWC layout, like targets).
inline std::vector<float> predict(const Model<float> &model, const Sample &s,
                                  const FeatureConfig &cfg)
{
    Graph<float> g;
    Tensor<float> x = sample_to_input<float>(s, cfg);
    Tensor<float> y = model.forward(g, x);
    for (int64_t i = 0; i < y.numel(); ++i)
        if (!std::isfinite(double(y.data()[i])))
            throw NumericError("predict: non-finite model output");
    std::vector<float> chw(y.data(), y.data() + y.numel());
    return denormalize_output(chw, s, cfg);
}

// Trains in place; on return the model carries the parameters of the best
// validation epoch. Augmentation draws one transform per sample visit from a
// seeded stream; validation always runs un-augmented.
inline TrainResult train(Model<float> &model, const std::vector<Sample> &samples,
                         const std::vector<size_t> &train_idx, const std::vector<size_t> &val_idx,
                         const TrainConfig &tc, const FeatureConfig &fc)
{
    tc.validate();
    if (train_idx.empty())
        throw DataError("train: empty training set");
    for (size_t i : train_idx)
        if (i >= samples.size())
            throw DataError("train: index out of range");

    auto params = model.params();
    AdamState<float> adam;
    adam.init(params);
    AdamHyper hp{tc.lr, tc.beta1, tc.beta2, tc.adam_eps};

    const Transform kTransforms[6] = {Transform::identity, Transform::rot90, Transform::rot180,
                                      Transform::rot270, Transform::mirror_x,
                                      Transform::mirror_y};
    const bool square = !samples.empty() && samples[0].nx == samples[0].ny;
    Rng rng(tc.seed ^ 0x747261696eULL);

    TrainResult res;
    std::vector<std::vector<float>> best_params;
    auto snapshot = [&]() {
        best_params.clear();
        for (const auto &p : params)
            best_params.emplace_back(p.data(), p.data() + p.numel());
    };
    auto restore = [&]() {
        if (best_params.empty())
            return;
        for (size_t i = 0; i < params.size(); ++i)
            std::copy(best_params[i].begin(), best_params[i].end(), params[i].data());
    };
    snapshot(); // fall back to the initial parameters if nothing improves

    std::vector<size_t> order(train_idx);
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0;
        size_t loss_n = 0;
        for (size_t start = 0; start < order.size(); start += size_t(tc.batch)) {
            size_t bend = std::min(order.size(), start + size_t(tc.batch));
            float inv_b = 1.0f / float(bend - start);
            model.zero_grad();
            bool bad = false;
            for (size_t bi = start; bi < bend; ++bi) {
                const Sample &base = samples[order[bi]];
                Transform t = Transform::identity;
                if (tc.augment) {
                    int pick = int(rng.uniform_int(square ? 6 : 3));
                    // Non-square grids draw from {identity, rot180, mirror_x}.
                    t = square ? kTransforms[pick]
                               : (pick == 0 ? Transform::identity
                                            : (pick == 1 ? Transform::rot180
                                                         : Transform::mirror_x));
                }
                Sample aug = t == Transform::identity ? base : augment(base, t, fc);
                auto st = detail::make_step(aug, fc);
                Graph<float> g;
                Tensor<float> y = model.forward(g, st.input);
                Tensor<float> l =
                    nn::masked_mse(g, y, st.target, st.weight, detail::loss_is_wrapped(aug.kind));
                double lv = double(l.data()[0]);
                if (!std::isfinite(lv)) {
                    bad = true;
                    break;
                }
                loss_sum += lv;
                ++loss_n;
                // Seed with 1/B so the step uses the batch-mean gradient.
                l.node().ensure_grad();
                l.node().grad[0] = inv_b;
                for (auto it = g.tape.rbegin(); it != g.tape.rend(); ++it)
                    if (!it->node().grad.empty() && it->node().backward)
                        it->node().backward();
            }
            if (bad) {
                res.diverged = true;
                break;
            }
            if (adam_step(params, adam, hp) == StepStatus::rejected_nonfinite) {
                res.diverged = true;
                break;
            }
        }
        if (res.diverged) {
            restore();
            return res;
        }
        EpochStats es;
        es.train_loss = loss_n ? loss_sum / double(loss_n) : 0.0;
        es.val_loss = 0;
        if (!val_idx.empty()) {
            double v = 0;
            for (size_t i : val_idx)
                v += eval_loss(model, samples[i], fc);
            es.val_loss = v / double(val_idx.size());
        } else {
            es.val_loss = es.train_loss;
        }
        res.history.push_back(es);
        if (es.val_loss < res.best_val) {
            res.best_val = es.val_loss;
            res.best_epoch = epoch;
            snapshot();
        }
        if (tc.verbose)
            std::fprintf(stderr, "epoch %4d train %.6g val %.6g\n", epoch, es.train_loss,
                         es.val_loss);
        if (tc.stop_at_train_loss > 0 && es.train_loss < tc.stop_at_train_loss)
            break;
    }
    restore();
    return res;
}

// ----------------------------------------------------------------------
// Checkpoints: binary container, refuses to load on spec digest mismatch.
// ----------------------------------------------------------------------

namespace checkpoint {
inline constexpr char kMagic[4] = {'X', 'B', 'C', 'K'};
inline constexpr uint32_t kVersion = 1;
} // namespace checkpoint

inline void save_checkpoint(const std::string &path, const Model<float> &model,
                            const AdamState<float> *adam, uint32_t epoch, double best_val)
{
    std::vector<uint8_t> buf;
    container::Writer w(buf);
    buf.insert(buf.end(), checkpoint::kMagic, checkpoint::kMagic + 4);
    w.put<uint32_t>(checkpoint::kVersion);
    w.put<uint64_t>(model.spec.digest());
    std::string canon = model.spec.canonical();
    w.put<uint32_t>(uint32_t(canon.size()));
    buf.insert(buf.end(), canon.begin(), canon.end());
    w.put<uint32_t>(epoch);
    w.put<double>(best_val);
    auto params = model.params();
    w.put<uint64_t>(params.size());
    for (const auto &p : params) {
        w.put<uint32_t>(uint32_t(p.shape().size()));
        for (int d : p.shape())
            w.put<uint32_t>(uint32_t(d));
        w.put_array(p.node().val);
    }
    w.put<uint8_t>(adam ? 1 : 0);
    if (adam) {
        w.put<uint64_t>(uint64_t(adam->t));
        for (size_t i = 0; i < params.size(); ++i) {
            w.put_array(adam->m[i]);
            w.put_array(adam->v[i]);
        }
    }
    uint32_t crc = uint32_t(::crc32(0, buf.data() + 4, uInt(buf.size() - 4)));
    w.put<uint32_t>(crc);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw DataError(strf("cannot open '%s' for writing", path.c_str()));
    os.write(reinterpret_cast<const char *>(buf.data()), std::streamsize(buf.size()));
}

struct LoadedCheckpoint {
    Model<float> model;
    AdamState<float> adam;
    bool has_adam = false;
    uint32_t epoch = 0;
    double best_val = 0;
};

inline LoadedCheckpoint load_checkpoint(const std::string &path, const ModelSpec &spec)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw DataError(strf("cannot open checkpoint '%s'", path.c_str()));
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(is)),
                             std::istreambuf_iterator<char>());
    if (buf.size() < 8 || std::memcmp(buf.data(), checkpoint::kMagic, 4) != 0)
        throw DataError(strf("'%s' is not a checkpoint (bad magic)", path.c_str()));
    {
        uint32_t crc_expect = uint32_t(::crc32(0, buf.data() + 4, uInt(buf.size() - 8)));
        uint32_t crc_stored;
        std::memcpy(&crc_stored, buf.data() + buf.size() - 4, 4);
        if (crc_expect != crc_stored)
            throw DataError(strf("checkpoint '%s' failed its CRC check", path.c_str()));
    }
    container::Reader r(buf.data() + 4, buf.size() - 8);
    uint32_t version = r.get<uint32_t>();
    if (version != checkpoint::kVersion)
        throw DataError(strf("checkpoint '%s' has version %u, reader supports %u", path.c_str(),
                             version, checkpoint::kVersion));
    uint64_t digest = r.get<uint64_t>();
    uint32_t canon_len = r.get<uint32_t>();
    std::string canon(canon_len, '\0');
    std::vector<char> tmp;
    {
        std::vector<uint8_t> raw;
        r.get_array(raw, canon_len);
        canon.assign(raw.begin(), raw.end());
    }
    (void)tmp;
    if (digest != spec.digest())
        throw ConfigError(strf("checkpoint '%s' was trained with spec {%s}, requested {%s}",
                               path.c_str(), canon.c_str(), spec.canonical().c_str()));
    LoadedCheckpoint lc{build_model<float>(spec), {}, false, 0, 0};
    lc.epoch = r.get<uint32_t>();
    lc.best_val = r.get<double>();
    uint64_t n_params = r.get<uint64_t>();
    auto params = lc.model.params();
    if (n_params != params.size())
        throw DataError("checkpoint parameter count mismatch");
    for (auto &p : params) {
        uint32_t rank = r.get<uint32_t>();
        std::vector<int> shape(rank);
        for (auto &d : shape)
            d = int(r.get<uint32_t>());
        if (shape != p.shape())
            throw DataError("checkpoint tensor shape mismatch");
        r.get_array(p.node().val, size_t(p.numel()));
    }
    lc.has_adam = r.get<uint8_t>() != 0;
    if (lc.has_adam) {
        lc.adam.init(params);
        lc.adam.t = int64_t(r.get<uint64_t>());
        for (size_t i = 0; i < params.size(); ++i) {
            r.get_array(lc.adam.m[i], size_t(params[i].numel()));
            r.get_array(lc.adam.v[i], size_t(params[i].numel()));
        }
    }
    return lc;
}

} // namespace xband
