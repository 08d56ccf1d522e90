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

#include "channel.hpp"
#include "tensor.hpp"

namespace xband {

enum class DatasetKind : uint32_t { gain = 0, phase = 1, commap = 2 };

enum class PhaseInputMode { delay_based, raw_low_band };

// Per-channel affine range mapped onto [-1, 1].
struct NormRange {
    double lo = -1.0, hi = 1.0;

    double normalize(double x) const { return 2.0 * (x - lo) / (hi - lo) - 1.0; }
    double denormalize(double y) const { return lo + (y + 1.0) * 0.5 * (hi - lo); }
};

struct FeatureConfig {
    int L = 20;
    bool include_delay = false;
    bool include_antenna_pattern = true;
    bool include_aod = true;
    double band_in = 3.5e9;
    double band_out = 7e9;
    double gain_floor_db = -250.0;
    PhaseInputMode phase_input = PhaseInputMode::delay_based;

    // Boresight gains / beamwidths per band (the base-station side);
    // receivers are isotropic.
    double tx_g0_in_dbi = 6.3;
    double tx_bw_in_rad = 65.0 * kPi / 180.0;
    double tx_g0_out_dbi = 12.3;
    double tx_bw_out_rad = 32.5 * kPi / 180.0;

    NormRange gain_range{-250.0, 0.0};
    NormRange delay_range{0.0, 2e-6};
    NormRange inter_range{-1.0, 5.0};
    NormRange aod_range{-kPi, kPi};
    NormRange antpat_range{-30.0, 15.0};
    NormRange occ_range{0.0, 1.0};
    // Phases stay in radians end to end: they are already order-1, the
    // wrapped loss needs radians, and the copy-initialized residual model
    // must see input and output on the same scale.
    NormRange phase_range{-1.0, 1.0};
    double tput_max_mbps = 1900.0;

    AntennaPattern pattern_in(double boresight) const
    {
        return {tx_g0_in_dbi, tx_bw_in_rad, boresight};
    }
    AntennaPattern pattern_out(double boresight) const
    {
        return {tx_g0_out_dbi, tx_bw_out_rad, boresight};
    }

    void validate() const
    {
        if (L < 1)
            throw ConfigError("feature config requires L >= 1");
        if (band_in == band_out)
            throw ConfigError("input and output bands must differ");
        if (gain_floor_db >= -200.0)
            throw ConfigError("gain floor must sit below all physical gains");
    }

    // Gain-sample input channel groups, in storage order.
    int gain_group_count() const
    {
        return 2 + (include_aod ? 1 : 0) + (include_antenna_pattern ? 1 : 0) +
               (include_delay ? 1 : 0);
    }
    int gain_in_channels() const { return gain_group_count() * L + 1; }
    int phase_in_channels() const { return 2 * L; }
    static constexpr int commap_groups = 6;
    int commap_in_channels() const { return commap_groups * L; }

    // Channel offsets within a gain sample.
    int ch_gain() const { return 0; }
    int ch_inter() const { return L; }
    int ch_aod() const { return include_aod ? 2 * L : -1; }
    int ch_antpat() const
    {
        return include_antenna_pattern ? (2 + (include_aod ? 1 : 0)) * L : -1;
    }
    int ch_delay() const { return include_delay ? (gain_group_count() - 1) * L : -1; }
    int ch_occupancy() const { return gain_group_count() * L; }

    // Default auxiliary set for aunet_aux: every per-slot group except the
    // low-band gains.
    std::vector<int> aux_channel_indices() const
    {
        std::vector<int> idx;
        for (int c = L; c < gain_group_count() * L; ++c)
            idx.push_back(c);
        return idx;
    }
    std::vector<int> aux_categorical_indices() const
    {
        std::vector<int> idx;
        for (int c = ch_inter(); c < ch_inter() + L; ++c)
            idx.push_back(c);
        return idx;
    }

    std::string canonical() const
    {
        std::ostringstream os;
        os << "L=" << L << ";delay=" << include_delay << ";antpat=" << include_antenna_pattern
           << ";aod=" << include_aod << ";fin=" << fmt_double(band_in)
           << ";fout=" << fmt_double(band_out) << ";floor=" << fmt_double(gain_floor_db)
           << ";pin=" << (phase_input == PhaseInputMode::delay_based ? "delay" : "raw")
           << ";g0in=" << fmt_double(tx_g0_in_dbi) << ";bwin=" << fmt_double(tx_bw_in_rad)
           << ";g0out=" << fmt_double(tx_g0_out_dbi) << ";bwout=" << fmt_double(tx_bw_out_rad)
           << ";tput=" << fmt_double(tput_max_mbps);
        return os.str();
    }
    uint64_t digest() const { return fnv1a64(canonical()); }
};

struct BsConfig {
    Vec3 position;
    double boresight = 0.0; // radians
};

// Per-cell per-slot geometry retained for stratification, commap assembly
// and physics checks.
struct SampleMeta {
    uint32_t scene_id = 0;
    uint64_t scene_seed = 0;
    uint64_t sample_seed = 0;
    Vec3 bs;
    double boresight = 0.0;
    double rx_height = 1.5;
    std::vector<int8_t> m;      // (y,x,slot); -1 = empty slot
    std::vector<float> tau;     // seconds
    std::vector<float> aod_h, aod_v, aoa_h, aoa_v; // radians
    std::vector<float> phase_out;                  // wrapped, target band
};

struct Sample {
    DatasetKind kind = DatasetKind::gain;
    int nx = 0, ny = 0, L = 0;
    int c_in = 0, c_out = 0;
    double res = 1.0; // meters per cell
    std::vector<float> inputs;  // row-major (y, x, channel)
    std::vector<float> targets; // row-major (y, x, channel)
    std::vector<uint8_t> valid; // (y, x)
    SampleMeta meta;

    size_t cell_count() const { return size_t(nx) * ny; }
    float in_at(int ix, int iy, int c) const
    {
        return inputs[(size_t(iy) * nx + ix) * c_in + c];
    }
    float tgt_at(int ix, int iy, int c) const
    {
        return targets[(size_t(iy) * nx + ix) * c_out + c];
    }
    bool slot_filled(int ix, int iy, int slot) const
    {
        return meta.m[(size_t(iy) * nx + ix) * L + slot] >= 0;
    }
};

// Delay-ascending slot assignment: the first min(count, L) paths (the tracer
// returns them sorted) land in slots 0..; the LoS path, when present, is the
// shortest and therefore occupies slot 0.
inline std::vector<const PathRecord *> select_paths(const std::vector<PathRecord> &paths, int L)
{
    if (L < 1)
        throw ConfigError("select_paths: L must be >= 1");
    std::vector<const PathRecord *> slots(static_cast<size_t>(L), nullptr);
    for (size_t i = 0; i < paths.size() && int(i) < L; ++i)
        slots[i] = &paths[i];
    return slots;
}

namespace detail {

inline void check_traces(const GridSpec &grid, const OccupancyMap &occ,
                         const std::vector<TraceResult> &traces)
{
    if (traces.size() != size_t(grid.nx) * grid.ny)
        throw DataError(strf("trace sweep covers %zu cells, grid has %d x %d", traces.size(),
                             grid.nx, grid.ny));
    for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix)
            if (!occ.at(ix, iy) &&
                traces[size_t(iy) * grid.nx + ix].status != TraceStatus::ok)
                throw DataError(strf("free cell (%d, %d) has no trace", ix, iy));
}

inline void init_meta(Sample &s, const Scene &scene, uint32_t scene_id, const BsConfig &bs,
                      uint64_t sample_seed, double rx_height)
{
    s.meta.scene_id = scene_id;
    s.meta.scene_seed = scene.seed;
    s.meta.sample_seed = sample_seed;
    s.meta.bs = bs.position;
    s.meta.boresight = bs.boresight;
    s.meta.rx_height = rx_height;
    size_t n = s.cell_count() * size_t(s.L);
    s.meta.m.assign(n, -1);
    s.meta.tau.assign(n, 0.f);
    s.meta.aod_h.assign(n, 0.f);
    s.meta.aod_v.assign(n, 0.f);
    s.meta.aoa_h.assign(n, 0.f);
    s.meta.aoa_v.assign(n, 0.f);
    s.meta.phase_out.assign(n, 0.f);
}

} // namespace detail

// Builds the low-band-features -> high-band-gains sample. Both bands are
// evaluated from the same frequency-invariant path records.
inline Sample build_gain_sample(const Scene &scene, uint32_t scene_id, const BsConfig &bs,
                                const GridSpec &grid, const OccupancyMap &occ,
                                const std::vector<TraceResult> &traces, const FeatureConfig &cfg,
                                uint64_t sample_seed = 0, double rx_height = 1.5)
{
    cfg.validate();
    detail::check_traces(grid, occ, traces);
    Sample s;
    s.kind = DatasetKind::gain;
    s.nx = grid.nx;
    s.ny = grid.ny;
    s.res = grid.res;
    s.L = cfg.L;
    s.c_in = cfg.gain_in_channels();
    s.c_out = cfg.L;
    s.inputs.assign(s.cell_count() * size_t(s.c_in), 0.f);
    s.targets.assign(s.cell_count() * size_t(s.c_out), 0.f);
    s.valid.assign(s.cell_count(), 0);
    detail::init_meta(s, scene, scene_id, bs, sample_seed, rx_height);

    AntennaPattern pat_in = cfg.pattern_in(bs.boresight);
    AntennaPattern pat_out = cfg.pattern_out(bs.boresight);
    AntennaPattern rx_iso{};
    const int L = cfg.L;

    parallel_for(int64_t(s.cell_count()), 256, [&](int64_t b, int64_t e) {
        for (int64_t idx = b; idx < e; ++idx) {
            int iy = int(idx / grid.nx), ix = int(idx % grid.nx);
            float *in = s.inputs.data() + size_t(idx) * s.c_in;
            float *tg = s.targets.data() + size_t(idx) * s.c_out;
            // Sentinels everywhere first.
            for (int l = 0; l < L; ++l) {
                in[cfg.ch_gain() + l] = float(cfg.gain_floor_db);
                in[cfg.ch_inter() + l] = -1.f;
                if (cfg.include_aod)
                    in[cfg.ch_aod() + l] = 0.f;
                if (cfg.include_antenna_pattern)
                    in[cfg.ch_antpat() + l] = 0.f;
                if (cfg.include_delay)
                    in[cfg.ch_delay() + l] = 0.f;
                tg[l] = float(cfg.gain_floor_db);
            }
            in[cfg.ch_occupancy()] = float(occ.at(ix, iy));
            if (occ.at(ix, iy))
                continue;
            s.valid[size_t(idx)] = 1;
            const auto &paths = traces[size_t(idx)].paths;
            auto slots = select_paths(paths, L);
            for (int l = 0; l < L; ++l) {
                const PathRecord *p = slots[size_t(l)];
                if (!p)
                    break; // delay-sorted: the first empty slot ends the list
                cplx h_in = path_coefficient(*p, cfg.band_in, pat_in, rx_iso, {0, 0, 0},
                                             {0, 0, 0}, scene.materials);
                cplx h_out = path_coefficient(*p, cfg.band_out, pat_out, rx_iso, {0, 0, 0},
                                              {0, 0, 0}, scene.materials);
                in[cfg.ch_gain() + l] = float(amp_to_db(std::abs(h_in)));
                in[cfg.ch_inter() + l] = float(p->order());
                if (cfg.include_aod)
                    in[cfg.ch_aod() + l] = float(p->aod_az);
                if (cfg.include_antenna_pattern)
                    in[cfg.ch_antpat() + l] = float(antenna_gain_toward_db(p->aod_az, pat_out));
                if (cfg.include_delay)
                    in[cfg.ch_delay() + l] = float(p->tau);
                tg[l] = float(amp_to_db(std::abs(h_out)));
                size_t mi = size_t(idx) * L + l;
                s.meta.m[mi] = int8_t(p->order());
                s.meta.tau[mi] = float(p->tau);
                s.meta.aod_h[mi] = float(p->aod_az);
                s.meta.aod_v[mi] = float(p->aod_el);
                s.meta.aoa_h[mi] = float(p->aoa_az);
                s.meta.aoa_v[mi] = float(p->aoa_el);
                s.meta.phase_out[mi] = float(std::arg(h_out));
            }
        }
    });
    return s;
}

// Phase sample: wrapped delay phase at the target band (or the raw low-band
// phase) plus interaction counts in, target-band phases out.
inline Sample build_phase_sample(const Scene &scene, uint32_t scene_id, const BsConfig &bs,
                                 const GridSpec &grid, const OccupancyMap &occ,
                                 const std::vector<TraceResult> &traces,
                                 const FeatureConfig &cfg, uint64_t sample_seed = 0,
                                 double rx_height = 1.5)
{
    cfg.validate();
    detail::check_traces(grid, occ, traces);
    Sample s;
    s.kind = DatasetKind::phase;
    s.nx = grid.nx;
    s.ny = grid.ny;
    s.res = grid.res;
    s.L = cfg.L;
    s.c_in = cfg.phase_in_channels();
    s.c_out = cfg.L;
    s.inputs.assign(s.cell_count() * size_t(s.c_in), 0.f);
    s.targets.assign(s.cell_count() * size_t(s.c_out), 0.f);
    s.valid.assign(s.cell_count(), 0);
    detail::init_meta(s, scene, scene_id, bs, sample_seed, rx_height);

    AntennaPattern pat_in = cfg.pattern_in(bs.boresight);
    AntennaPattern pat_out = cfg.pattern_out(bs.boresight);
    AntennaPattern rx_iso{};
    const int L = cfg.L;

    parallel_for(int64_t(s.cell_count()), 256, [&](int64_t b, int64_t e) {
        for (int64_t idx = b; idx < e; ++idx) {
            int iy = int(idx / grid.nx), ix = int(idx % grid.nx);
            float *in = s.inputs.data() + size_t(idx) * s.c_in;
            float *tg = s.targets.data() + size_t(idx) * s.c_out;
            for (int l = 0; l < L; ++l) {
                in[l] = 0.f;           // sentinel phase
                in[L + l] = -1.f;      // sentinel interaction count
                tg[l] = 0.f;
            }
            if (occ.at(ix, iy))
                continue;
            s.valid[size_t(idx)] = 1;
            const auto &paths = traces[size_t(idx)].paths;
            auto slots = select_paths(paths, L);
            for (int l = 0; l < L; ++l) {
                const PathRecord *p = slots[size_t(l)];
                if (!p)
                    break;
                cplx h_out = path_coefficient(*p, cfg.band_out, pat_out, rx_iso, {0, 0, 0},
                                              {0, 0, 0}, scene.materials);
                if (cfg.phase_input == PhaseInputMode::delay_based) {
                    in[l] = float(delay_phase(p->tau, cfg.band_out));
                } else {
                    cplx h_in = path_coefficient(*p, cfg.band_in, pat_in, rx_iso, {0, 0, 0},
                                                 {0, 0, 0}, scene.materials);
                    in[l] = float(std::arg(h_in));
                }
                in[L + l] = float(p->order());
                tg[l] = float(std::arg(h_out));
                size_t mi = size_t(idx) * L + l;
                s.meta.m[mi] = int8_t(p->order());
                s.meta.tau[mi] = float(p->tau);
                s.meta.aod_h[mi] = float(p->aod_az);
                s.meta.aod_v[mi] = float(p->aod_el);
                s.meta.aoa_h[mi] = float(p->aoa_az);
                s.meta.aoa_v[mi] = float(p->aoa_el);
                s.meta.phase_out[mi] = float(std::arg(h_out));
            }
        }
    });
    return s;
}

// ----------------------------------------------------------------------
// Augmentation
// ----------------------------------------------------------------------

enum class Transform { identity, rot90, rot180, rot270, mirror_x, mirror_y };

inline const char *transform_name(Transform t)
{
    switch (t) {
    case Transform::identity: return "identity";
    case Transform::rot90: return "rot90";
    case Transform::rot180: return "rot180";
    case Transform::rot270: return "rot270";
    case Transform::mirror_x: return "mirror_x";
    case Transform::mirror_y: return "mirror_y";
    }
    return "?";
}

namespace detail {

inline void map_cell(Transform t, int nx, int ny, int ix, int iy, int &ox, int &oy)
{
    switch (t) {
    case Transform::identity: ox = ix; oy = iy; break;
    case Transform::rot90: ox = nx - 1 - iy; oy = ix; break;
    case Transform::rot180: ox = nx - 1 - ix; oy = ny - 1 - iy; break;
    case Transform::rot270: ox = iy; oy = ny - 1 - ix; break;
    case Transform::mirror_x: ox = nx - 1 - ix; oy = iy; break;
    case Transform::mirror_y: ox = ix; oy = ny - 1 - iy; break;
    }
}

inline double map_angle(Transform t, double phi)
{
    switch (t) {
    case Transform::identity: return phi;
    case Transform::rot90: return wrap_pi(phi + kPi / 2);
    case Transform::rot180: return wrap_pi(phi + kPi);
    case Transform::rot270: return wrap_pi(phi - kPi / 2);
    case Transform::mirror_x: return wrap_pi(kPi - phi);
    case Transform::mirror_y: return wrap_pi(-phi);
    }
    return phi;
}

inline Vec3 map_point(Transform t, double lx, double ly, const Vec3 &p)
{
    double cx = lx / 2, cy = ly / 2;
    double dx = p.x - cx, dy = p.y - cy;
    switch (t) {
    case Transform::identity: break;
    case Transform::rot90: return {cx - dy, cy + dx, p.z};
    case Transform::rot180: return {cx - dx, cy - dy, p.z};
    case Transform::rot270: return {cx + dy, cy - dx, p.z};
    case Transform::mirror_x: return {cx - dx, p.y, p.z};
    case Transform::mirror_y: return {p.x, cy - dy, p.z};
    }
    return p;
}

} // namespace detail

// Rotates/mirrors a scene (used by the augmentation consistency checks).
inline Scene transform_scene(const Scene &s, Transform t)
{
    if ((t == Transform::rot90 || t == Transform::rot270) && s.lx != s.ly)
        throw DataError("quarter rotations require a square scene");
    Scene out = s;
    out.buildings.clear();
    for (const auto &b : s.buildings) {
        Vec3 lo = detail::map_point(t, s.lx, s.ly, {b.x, b.y, 0});
        Vec3 hi = detail::map_point(t, s.lx, s.ly, {b.x + b.w, b.y + b.d, 0});
        Building nb = b;
        nb.x = std::min(lo.x, hi.x);
        nb.y = std::min(lo.y, hi.y);
        nb.w = std::fabs(hi.x - lo.x);
        nb.d = std::fabs(hi.y - lo.y);
        out.buildings.push_back(nb);
    }
    return out;
}

// Spatially permutes every channel, remaps azimuth-valued channels and the
// boresight, and recomputes the antenna-pattern channel from the remapped
// angles. Scalar channels are only permuted.
inline Sample augment(const Sample &s, Transform t, const FeatureConfig &cfg)
{
    if ((t == Transform::rot90 || t == Transform::rot270) && s.nx != s.ny)
        throw DataError("quarter rotations require a square grid");
    Sample out = s;
    if (t == Transform::identity)
        return out;
    out.meta.boresight = detail::map_angle(t, s.meta.boresight);
    out.meta.bs = detail::map_point(t, s.nx * s.res, s.ny * s.res, s.meta.bs);

    const int L = s.L;
    AntennaPattern pat_out = cfg.pattern_out(out.meta.boresight);
    bool is_gain = s.kind == DatasetKind::gain;

    for (int iy = 0; iy < s.ny; ++iy)
        for (int ix = 0; ix < s.nx; ++ix) {
            int ox, oy;
            detail::map_cell(t, s.nx, s.ny, ix, iy, ox, oy);
            size_t src = size_t(iy) * s.nx + ix;
            size_t dst = size_t(oy) * s.nx + ox;
            out.valid[dst] = s.valid[src];
            for (int c = 0; c < s.c_in; ++c)
                out.inputs[dst * s.c_in + c] = s.inputs[src * s.c_in + c];
            for (int c = 0; c < s.c_out; ++c)
                out.targets[dst * s.c_out + c] = s.targets[src * s.c_out + c];
            for (int l = 0; l < L; ++l) {
                size_t ms = src * L + l, md = dst * L + l;
                out.meta.m[md] = s.meta.m[ms];
                out.meta.tau[md] = s.meta.tau[ms];
                out.meta.aod_v[md] = s.meta.aod_v[ms];
                out.meta.aoa_v[md] = s.meta.aoa_v[ms];
                out.meta.phase_out[md] = s.meta.phase_out[ms];
                bool filled = s.meta.m[ms] >= 0;
                out.meta.aod_h[md] =
                    filled ? float(detail::map_angle(t, s.meta.aod_h[ms])) : s.meta.aod_h[ms];
                out.meta.aoa_h[md] =
                    filled ? float(detail::map_angle(t, s.meta.aoa_h[ms])) : s.meta.aoa_h[ms];
                if (is_gain && filled) {
                    if (cfg.include_aod)
                        out.inputs[dst * s.c_in + cfg.ch_aod() + l] = out.meta.aod_h[md];
                    if (cfg.include_antenna_pattern)
                        out.inputs[dst * s.c_in + cfg.ch_antpat() + l] =
                            float(antenna_gain_toward_db(out.meta.aod_h[md], pat_out));
                }
            }
        }
    return out;
}

// ----------------------------------------------------------------------
// Splits
// ----------------------------------------------------------------------

struct SplitSet {
    std::vector<uint32_t> train, val, test;
    bool short_split_warning = false;
};

// Deterministic scene-level split. Counts follow floor(ratio * n) for val
// and test; when flooring empties the validation split, it steals one scene
// from train (val-priority rounding, flagged with a warning).
inline SplitSet split_dataset(std::vector<uint32_t> scene_ids, double train_r = 0.8,
                              double val_r = 0.1, double test_r = 0.1, uint64_t seed = 0)
{
    if (scene_ids.empty())
        throw DataError("split_dataset: empty scene list");
    if (std::fabs(train_r + val_r + test_r - 1.0) > 1e-9)
        throw ConfigError("split ratios must sum to 1");
    std::sort(scene_ids.begin(), scene_ids.end());
    scene_ids.erase(std::unique(scene_ids.begin(), scene_ids.end()), scene_ids.end());
    Rng rng(seed ^ 0x73706c6974ULL);
    rng.shuffle(scene_ids);
    size_t n = scene_ids.size();
    size_t n_val = size_t(std::floor(val_r * double(n)));
    size_t n_test = size_t(std::floor(test_r * double(n)));
    SplitSet out;
    if (n_val == 0 && n >= 2) {
        n_val = 1;
        out.short_split_warning = true;
    }
    size_t n_train = n - n_val - n_test;
    out.train.assign(scene_ids.begin(), scene_ids.begin() + long(n_train));
    out.val.assign(scene_ids.begin() + long(n_train), scene_ids.begin() + long(n_train + n_val));
    out.test.assign(scene_ids.begin() + long(n_train + n_val), scene_ids.end());
    return out;
}

// ----------------------------------------------------------------------
// Normalization to model tensors (CHW float) and loss weights
// ----------------------------------------------------------------------

inline NormRange channel_range(const FeatureConfig &cfg, DatasetKind kind, int c, bool target)
{
    const int L = cfg.L;
    if (target) {
        if (kind == DatasetKind::gain)
            return cfg.gain_range;
        if (kind == DatasetKind::phase)
            return cfg.phase_range;
        return NormRange{0.0, cfg.tput_max_mbps};
    }
    if (kind == DatasetKind::gain) {
        if (c < L)
            return cfg.gain_range;
        if (c < 2 * L)
            return cfg.inter_range;
        if (cfg.include_aod && c >= cfg.ch_aod() && c < cfg.ch_aod() + L)
            return cfg.aod_range;
        if (cfg.include_antenna_pattern && c >= cfg.ch_antpat() && c < cfg.ch_antpat() + L)
            return cfg.antpat_range;
        if (cfg.include_delay && c >= cfg.ch_delay() && c < cfg.ch_delay() + L)
            return cfg.delay_range;
        return cfg.occ_range;
    }
    if (kind == DatasetKind::phase)
        return c < L ? cfg.phase_range : cfg.inter_range;
    // commap inputs: [gain, tau, aod_h, aod_v, aoa_h, aoa_v] x L
    int group = c / L;
    switch (group) {
    case 0: return cfg.gain_range;
    case 1: return cfg.delay_range;
    default: return cfg.aod_range;
    }
}

// HWC sample tensors to normalized CHW model input.
template <class T> Tensor<T> sample_to_input(const Sample &s, const FeatureConfig &cfg)
{
    Tensor<T> x = Tensor<T>::zeros({s.c_in, s.ny, s.nx});
    T *p = x.data();
    for (int c = 0; c < s.c_in; ++c) {
        NormRange r = channel_range(cfg, s.kind, c, false);
        for (int iy = 0; iy < s.ny; ++iy)
            for (int ix = 0; ix < s.nx; ++ix)
                p[(size_t(c) * s.ny + iy) * s.nx + ix] =
                    T(r.normalize(double(s.inputs[(size_t(iy) * s.nx + ix) * s.c_in + c])));
    }
    return x;
}

template <class T> std::vector<T> sample_to_target(const Sample &s, const FeatureConfig &cfg)
{
    std::vector<T> t(size_t(s.c_out) * s.ny * s.nx);
    for (int c = 0; c < s.c_out; ++c) {
        NormRange r = channel_range(cfg, s.kind, c, true);
        bool raw = s.kind == DatasetKind::phase; // phase loss works in radians
        for (int iy = 0; iy < s.ny; ++iy)
            for (int ix = 0; ix < s.nx; ++ix) {
                double v = double(s.targets[(size_t(iy) * s.nx + ix) * s.c_out + c]);
                t[(size_t(c) * s.ny + iy) * s.nx + ix] = T(raw ? v : r.normalize(v));
            }
    }
    return t;
}

// Loss weights: valid cell and filled slot. Commap targets have one channel
// weighted by the valid mask alone.
template <class T> std::vector<T> sample_to_weights(const Sample &s)
{
    std::vector<T> w(size_t(s.c_out) * s.ny * s.nx, T(0));
    for (int iy = 0; iy < s.ny; ++iy)
        for (int ix = 0; ix < s.nx; ++ix) {
            size_t cell = size_t(iy) * s.nx + ix;
            if (!s.valid[cell])
                continue;
            for (int c = 0; c < s.c_out; ++c) {
                bool filled = s.c_out == 1 || s.meta.m[cell * s.L + c] >= 0;
                if (filled)
                    w[(size_t(c) * s.ny + iy) * s.nx + ix] = T(1);
            }
        }
    return w;
}

// Model output (normalized CHW) back to physical HWC values.
inline std::vector<float> denormalize_output(const std::vector<float> &chw, const Sample &s,
                                             const FeatureConfig &cfg)
{
    std::vector<float> out(size_t(s.c_out) * s.ny * s.nx);
    for (int c = 0; c < s.c_out; ++c) {
        NormRange r = channel_range(cfg, s.kind, c, true);
        bool raw = s.kind == DatasetKind::phase;
        for (int iy = 0; iy < s.ny; ++iy)
            for (int ix = 0; ix < s.nx; ++ix) {
                double v = double(chw[(size_t(c) * s.ny + iy) * s.nx + ix]);
                double d = raw ? wrap_pi(v) : r.denormalize(v);
                out[(size_t(iy) * s.nx + ix) * s.c_out + c] = float(d);
            }
    }
    return out;
}

} // namespace xband
