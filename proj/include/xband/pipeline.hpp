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

#include "commap.hpp"
#include "config.hpp"
#include "raytrace_oracle.hpp"

namespace xband {

// End-to-end experiment wiring shared by the CLI and the test suites. Every
// stage is a pure function of (config, seed), which is what makes two runs
// of the same invocation byte-identical.
struct PipelineConfig {
    // [scene]
    double extent = 256.0;
    double density = 0.2;
    double min_side = 8.0, max_side = 30.0;
    double min_height = 8.0, max_height = 25.0;
    int scene_count = 20;

    // [grid]
    int nx = 128, ny = 128;

    // [trace]
    int max_order = 3;
    int max_paths = 64;
    TraceMode mode = TraceMode::image_method;
    int sbr_ray_count = 100000;
    double rx_height = 1.5;
    double bs_height = 10.0;
    int bs_per_scene = 1;
    bool enable_diffuse = false;

    // [dataset]
    FeatureConfig features;
    DatasetKind kind = DatasetKind::gain;

    // [model]
    Arch arch = Arch::aunet;
    int base_width = 16;
    int depth = 4;
    bool use_default_aux = true; // aunet_aux: aux = all non-gain slot groups
    bool copy_init = false;      // phase models: start at the copy solution

    // [train]
    TrainConfig train;

    // [split]
    double train_ratio = 0.8, val_ratio = 0.1, test_ratio = 0.1;

    // [mimo]
    MimoConfig mimo;

    // [run]
    uint64_t seed = 1;
    int workers = 0; // 0 = library default

    static const std::map<std::string, std::vector<std::string>> &schema()
    {
        static const std::map<std::string, std::vector<std::string>> s = {
            {"scene",
             {"extent", "density", "min_side", "max_side", "min_height", "max_height", "count"}},
            {"grid", {"nx", "ny"}},
            {"trace",
             {"max_order", "max_paths", "mode", "sbr_ray_count", "rx_height", "bs_height",
              "bs_per_scene", "enable_diffuse"}},
            {"dataset",
             {"kind", "L", "include_delay", "include_antenna_pattern", "include_aod",
              "band_in", "band_out", "gain_floor_db", "phase_input", "tput_max_mbps"}},
            {"model", {"arch", "base_width", "depth", "use_default_aux", "copy_init"}},
            {"train",
             {"epochs", "batch", "lr", "augment", "stop_at_train_loss", "verbose"}},
            {"split", {"train", "val", "test"}},
            {"mimo", {"nt", "nr", "bandwidth", "n_sc", "rho", "edge_distance_m"}},
            {"run", {"seed", "workers"}},
        };
        return s;
    }

    static PipelineConfig from_config(const Config &c)
    {
        c.validate(schema());
        PipelineConfig p;
        p.extent = c.get_num("scene", "extent", p.extent);
        p.density = c.get_num("scene", "density", p.density);
        p.min_side = c.get_num("scene", "min_side", p.min_side);
        p.max_side = c.get_num("scene", "max_side", p.max_side);
        p.min_height = c.get_num("scene", "min_height", p.min_height);
        p.max_height = c.get_num("scene", "max_height", p.max_height);
        p.scene_count = c.get_int("scene", "count", p.scene_count);
        p.nx = c.get_int("grid", "nx", p.nx);
        p.ny = c.get_int("grid", "ny", p.ny);
        p.max_order = c.get_int("trace", "max_order", p.max_order);
        p.max_paths = c.get_int("trace", "max_paths", p.max_paths);
        std::string mode = c.get_str("trace", "mode", "image_method");
        if (mode == "image_method")
            p.mode = TraceMode::image_method;
        else if (mode == "sbr")
            p.mode = TraceMode::sbr;
        else
            throw ConfigError(strf("trace.mode '%s' is not image_method|sbr", mode.c_str()));
        p.sbr_ray_count = c.get_int("trace", "sbr_ray_count", p.sbr_ray_count);
        p.rx_height = c.get_num("trace", "rx_height", p.rx_height);
        p.bs_height = c.get_num("trace", "bs_height", p.bs_height);
        p.bs_per_scene = c.get_int("trace", "bs_per_scene", p.bs_per_scene);
        p.enable_diffuse = c.get_bool("trace", "enable_diffuse", p.enable_diffuse);
        std::string kind = c.get_str("dataset", "kind", "gain");
        if (kind == "gain")
            p.kind = DatasetKind::gain;
        else if (kind == "phase")
            p.kind = DatasetKind::phase;
        else if (kind == "commap")
            p.kind = DatasetKind::commap;
        else
            throw ConfigError(strf("dataset.kind '%s' is not gain|phase|commap", kind.c_str()));
        p.features.L = c.get_int("dataset", "L", p.features.L);
        p.features.include_delay =
            c.get_bool("dataset", "include_delay", p.features.include_delay);
        p.features.include_antenna_pattern =
            c.get_bool("dataset", "include_antenna_pattern", p.features.include_antenna_pattern);
        p.features.include_aod = c.get_bool("dataset", "include_aod", p.features.include_aod);
        p.features.band_in = c.get_num("dataset", "band_in", p.features.band_in);
        p.features.band_out = c.get_num("dataset", "band_out", p.features.band_out);
        p.features.gain_floor_db =
            c.get_num("dataset", "gain_floor_db", p.features.gain_floor_db);
        std::string pin = c.get_str("dataset", "phase_input", "delay_based");
        if (pin == "delay_based")
            p.features.phase_input = PhaseInputMode::delay_based;
        else if (pin == "raw_low_band")
            p.features.phase_input = PhaseInputMode::raw_low_band;
        else
            throw ConfigError("dataset.phase_input must be delay_based|raw_low_band");
        p.features.tput_max_mbps =
            c.get_num("dataset", "tput_max_mbps", p.features.tput_max_mbps);
        p.arch = arch_from_name(c.get_str("model", "arch", "aunet"));
        p.base_width = c.get_int("model", "base_width", p.base_width);
        p.depth = c.get_int("model", "depth", p.depth);
        p.use_default_aux = c.get_bool("model", "use_default_aux", p.use_default_aux);
        p.copy_init = c.get_bool("model", "copy_init", p.copy_init);
        p.train.epochs = c.get_int("train", "epochs", p.train.epochs);
        p.train.batch = c.get_int("train", "batch", p.train.batch);
        p.train.lr = c.get_num("train", "lr", p.train.lr);
        p.train.augment = c.get_bool("train", "augment", p.train.augment);
        p.train.stop_at_train_loss =
            c.get_num("train", "stop_at_train_loss", p.train.stop_at_train_loss);
        p.train.verbose = c.get_bool("train", "verbose", p.train.verbose);
        p.train_ratio = c.get_num("split", "train", p.train_ratio);
        p.val_ratio = c.get_num("split", "val", p.val_ratio);
        p.test_ratio = c.get_num("split", "test", p.test_ratio);
        p.mimo.nt = c.get_int("mimo", "nt", p.mimo.nt);
        p.mimo.nr = c.get_int("mimo", "nr", p.mimo.nr);
        p.mimo.bandwidth_hz = c.get_num("mimo", "bandwidth", p.mimo.bandwidth_hz);
        p.mimo.n_sc = c.get_int("mimo", "n_sc", p.mimo.n_sc);
        p.mimo.rho = c.get_num("mimo", "rho", p.mimo.rho);
        p.mimo.edge_distance_m = c.get_num("mimo", "edge_distance_m", p.mimo.edge_distance_m);
        p.mimo.carrier_hz = p.features.band_out;
        p.seed = c.get_u64("run", "seed", p.seed);
        p.workers = c.get_int("run", "workers", p.workers);
        return p;
    }

    SceneGenParams scene_params() const
    {
        SceneGenParams sp;
        sp.density = density;
        sp.min_side = min_side;
        sp.max_side = max_side;
        sp.min_height = min_height;
        sp.max_height = max_height;
        return sp;
    }

    TraceLimits trace_limits() const
    {
        TraceLimits tl;
        tl.max_order = max_order;
        tl.max_paths = max_paths;
        tl.mode = mode;
        tl.sbr_ray_count = sbr_ray_count;
        tl.enable_diffuse = enable_diffuse;
        tl.diffuse_seed = seed ^ 0x64696666ULL;
        return tl;
    }

    ModelSpec model_spec(DatasetKind for_kind) const
    {
        ModelSpec ms;
        ms.arch = arch;
        ms.base_width = base_width;
        ms.depth = depth;
        ms.seed = seed ^ 0x6d6f64ULL;
        ms.out_channels = for_kind == DatasetKind::commap ? 1 : features.L;
        switch (for_kind) {
        case DatasetKind::gain: ms.in_channels = features.gain_in_channels(); break;
        case DatasetKind::phase: ms.in_channels = features.phase_in_channels(); break;
        case DatasetKind::commap: ms.in_channels = features.commap_in_channels(); break;
        }
        if (arch == Arch::aunet_aux && use_default_aux) {
            if (for_kind == DatasetKind::gain) {
                ms.aux_channels = features.aux_channel_indices();
                ms.aux_categorical = features.aux_categorical_indices();
            } else if (for_kind == DatasetKind::commap) {
                for (int c = features.L; c < features.commap_in_channels(); ++c)
                    ms.aux_channels.push_back(c);
            } else {
                for (int c = features.L; c < 2 * features.L; ++c) {
                    ms.aux_channels.push_back(c);
                    ms.aux_categorical.push_back(c);
                }
            }
        }
        if (for_kind == DatasetKind::phase && copy_init) {
            for (int l = 0; l < features.L; ++l)
                ms.residual_input_channels.push_back(l);
            ms.zero_init_head = true;
        }
        return ms;
    }
};

// ----------------------------------------------------------------------
// Stages
// ----------------------------------------------------------------------

inline uint64_t stage_seed(uint64_t master, const char *stage, uint64_t a = 0, uint64_t b = 0)
{
    uint64_t h = fnv1a64(stage, master);
    h = fnv1a64(&a, sizeof(a), h);
    h = fnv1a64(&b, sizeof(b), h);
    return h;
}

inline std::vector<Scene> pipeline_scenes(const PipelineConfig &p)
{
    std::vector<Scene> scenes;
    for (int i = 0; i < p.scene_count; ++i)
        scenes.push_back(generate_scene(stage_seed(p.seed, "scene", uint64_t(i)),
                                        p.scene_params(), p.extent, p.extent));
    return scenes;
}

// Uniform BS placement over free ground with a seeded draw.
inline BsConfig place_bs(const Scene &scene, const OccupancyMap &occ, uint64_t seed,
                         double bs_height)
{
    Rng rng(seed);
    for (int attempt = 0; attempt < 4096; ++attempt) {
        double x = rng.uniform(0.0, scene.lx);
        double y = rng.uniform(0.0, scene.ly);
        int ix = std::min(occ.grid.nx - 1, int(x / occ.grid.res));
        int iy = std::min(occ.grid.ny - 1, int(y / occ.grid.res));
        if (occ.at(ix, iy))
            continue;
        bool inside = false;
        for (const auto &bld : scene.buildings)
            inside = inside || bld.footprint().contains_closed(x, y);
        if (inside)
            continue;
        return {{x, y, bs_height}, rng.uniform(0.0, kTwoPi)};
    }
    throw DataError("place_bs: no free ground found");
}

// Traces one scene/BS pair and builds the configured sample kind.
inline Sample pipeline_sample(const PipelineConfig &p, const Scene &scene, uint32_t scene_id,
                              int bs_index, DatasetKind kind)
{
    GridSpec grid = GridSpec::for_scene(scene, p.nx, p.ny);
    OccupancyMap occ = rasterize_occupancy(scene, grid);
    uint64_t bseed = stage_seed(p.seed, "bs", scene_id, uint64_t(bs_index));
    BsConfig bs = place_bs(scene, occ, bseed, p.bs_height);
    TraceGeometry geom = TraceGeometry::from_scene(scene);
    auto traces = trace_map(geom, bs.position, grid, occ, p.trace_limits(), p.rx_height);
    if (kind == DatasetKind::phase)
        return build_phase_sample(scene, scene_id, bs, grid, occ, traces, p.features, bseed,
                                  p.rx_height);
    Sample gain = build_gain_sample(scene, scene_id, bs, grid, occ, traces, p.features, bseed,
                                    p.rx_height);
    if (kind == DatasetKind::gain)
        return gain;
    MimoConfig mimo = p.mimo;
    mimo.carrier_hz = p.features.band_out;
    return assemble_commap_sample(gain, nullptr, mimo, p.features);
}

inline std::vector<Sample> pipeline_dataset(const PipelineConfig &p,
                                            const std::vector<Scene> &scenes, DatasetKind kind)
{
    std::vector<Sample> samples;
    for (uint32_t sid = 0; sid < scenes.size(); ++sid)
        for (int b = 0; b < p.bs_per_scene; ++b)
            samples.push_back(pipeline_sample(p, scenes[sid], sid, b, kind));
    return samples;
}

// Scene-level split expanded to sample indices.
struct SampleSplit {
    std::vector<size_t> train, val, test;
    SplitSet scenes;
};

inline SampleSplit split_samples(const PipelineConfig &p, const std::vector<Sample> &samples)
{
    std::vector<uint32_t> ids;
    for (const auto &s : samples)
        ids.push_back(s.meta.scene_id);
    SampleSplit out;
    out.scenes = split_dataset(ids, p.train_ratio, p.val_ratio, p.test_ratio,
                               stage_seed(p.seed, "split"));
    auto in = [](const std::vector<uint32_t> &v, uint32_t id) {
        return std::find(v.begin(), v.end(), id) != v.end();
    };
    for (size_t i = 0; i < samples.size(); ++i) {
        uint32_t id = samples[i].meta.scene_id;
        if (in(out.scenes.train, id))
            out.train.push_back(i);
        else if (in(out.scenes.val, id))
            out.val.push_back(i);
        else
            out.test.push_back(i);
    }
    return out;
}

// Full train stage: builds the model from the config and trains on the
// scene-level split.
struct TrainedModel {
    Model<float> model;
    TrainResult result;
    SampleSplit split;
};

inline TrainedModel pipeline_train(const PipelineConfig &p, const std::vector<Sample> &samples)
{
    if (samples.empty())
        throw DataError("pipeline_train: no samples");
    DatasetKind kind = samples[0].kind;
    TrainedModel tm{build_model<float>(p.model_spec(kind)), {}, split_samples(p, samples)};
    TrainConfig tc = p.train;
    tc.seed = stage_seed(p.seed, "train");
    tm.result = train(tm.model, samples, tm.split.train, tm.split.val, tc, p.features);
    return tm;
}

// Test-split evaluation into a stratified report.
inline MetricReport pipeline_evaluate(const PipelineConfig &p, const Model<float> &model,
                                      const std::vector<Sample> &samples,
                                      const std::vector<size_t> &idx)
{
    std::vector<ErrorEntry> entries;
    for (size_t i : idx) {
        auto pred = predict(model, samples[i], p.features);
        auto e = per_entry_errors(samples[i], pred);
        entries.insert(entries.end(), e.begin(), e.end());
    }
    const char *metric = samples.empty() ? "g_err_db"
                         : samples[0].kind == DatasetKind::gain
                             ? "g_err_db"
                             : (samples[0].kind == DatasetKind::phase ? "p_err_rad"
                                                                      : "tput_mbps");
    return stratified_report(entries, metric);
}

} // namespace xband
