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

#include "xband/container.hpp"
#include "xband/pipeline.hpp"

using namespace xband;
using Catch::Matchers::WithinAbs;

namespace {

struct BuiltScene {
    Scene scene;
    GridSpec grid;
    OccupancyMap occ;
    BsConfig bs;
    std::vector<TraceResult> traces;
};

BuiltScene trace_small_scene(uint64_t seed, int n = 16, double extent = 64.0, int max_order = 2)
{
    BuiltScene b;
    SceneGenParams sp;
    sp.density = 0.18;
    sp.min_side = 6;
    sp.max_side = 18;
    b.scene = generate_scene(seed, sp, extent, extent);
    b.grid = GridSpec::for_scene(b.scene, n, n);
    b.occ = rasterize_occupancy(b.scene, b.grid);
    b.bs = place_bs(b.scene, b.occ, seed ^ 0xb5, 12.0);
    TraceLimits lim;
    lim.max_order = max_order;
    b.traces = trace_map(TraceGeometry::from_scene(b.scene), b.bs.position, b.grid, b.occ, lim,
                         1.5);
    return b;
}

} // namespace

TEST_CASE("channel count laws")
{
    FeatureConfig cfg;
    CHECK(cfg.gain_in_channels() == 81); // 4L + 1
    cfg.include_delay = true;
    CHECK(cfg.gain_in_channels() == 101); // 5L + 1
    CHECK(cfg.phase_in_channels() == 40); // 2L
    CHECK(cfg.commap_in_channels() == 120);
    FeatureConfig ablated;
    ablated.include_aod = false;
    ablated.include_antenna_pattern = false;
    CHECK(ablated.gain_in_channels() == 2 * 20 + 1); // gain + interactions + occupancy
    ablated.include_antenna_pattern = true;
    CHECK(ablated.gain_in_channels() == 3 * 20 + 1);
}

TEST_CASE("select_paths slot rules")
{
    std::vector<PathRecord> paths;
    for (int i = 0; i < 25; ++i) {
        PathRecord p;
        p.tau = 1e-7 * (i + 1);
        p.d = p.tau * kSpeedOfLight;
        paths.push_back(p);
    }
    auto slots = select_paths(paths, 20);
    REQUIRE(slots.size() == 20);
    for (int i = 0; i < 20; ++i)
        CHECK(slots[size_t(i)] == &paths[size_t(i)]); // 5 largest-delay paths dropped
    auto empty = select_paths({}, 20);
    for (auto *p : empty)
        CHECK(p == nullptr);
    CHECK_THROWS_AS(select_paths(paths, 0), ConfigError);
}

TEST_CASE("gain sample structure, sentinels and cross-band alignment")
{
    auto b = trace_small_scene(21);
    FeatureConfig cfg;
    Sample s = build_gain_sample(b.scene, 0, b.bs, b.grid, b.occ, b.traces, cfg);
    REQUIRE(s.c_in == 81);
    REQUIRE(s.c_out == 20);

    size_t occupied = 0, filled_slots = 0;
    for (int iy = 0; iy < s.ny; ++iy)
        for (int ix = 0; ix < s.nx; ++ix) {
            size_t cell = size_t(iy) * s.nx + ix;
            if (b.occ.at(ix, iy)) {
                ++occupied;
                CHECK(s.valid[cell] == 0);
                CHECK(s.in_at(ix, iy, cfg.ch_occupancy()) == 1.0f);
                for (int l = 0; l < s.L; ++l) {
                    CHECK(s.in_at(ix, iy, cfg.ch_gain() + l) == float(cfg.gain_floor_db));
                    CHECK(s.meta.m[cell * s.L + l] == -1);
                }
                continue;
            }
            CHECK(s.valid[cell] == 1);
            const auto &paths = b.traces[cell].paths;
            for (int l = 0; l < s.L; ++l) {
                bool has = size_t(l) < paths.size();
                CHECK(s.slot_filled(ix, iy, l) == has);
                if (!has)
                    continue;
                ++filled_slots;
                const auto &p = paths[size_t(l)];
                // Input and target slot l describe the same path record.
                CHECK(int(s.meta.m[cell * s.L + l]) == p.order());
                CHECK_THAT(double(s.meta.tau[cell * s.L + l]), WithinAbs(p.tau, 1e-12));
                if (cfg.include_delay)
                    CHECK(s.in_at(ix, iy, cfg.ch_delay() + l) == float(p.tau));
                // Cross-band free-space offset holds exactly on LoS slots.
                if (p.is_los()) {
                    double gin = double(s.in_at(ix, iy, cfg.ch_gain() + l));
                    double gout = double(s.tgt_at(ix, iy, l));
                    double pat_in = antenna_gain_toward_db(p.aod_az, cfg.pattern_in(s.meta.boresight));
                    double pat_out = antenna_gain_toward_db(p.aod_az, cfg.pattern_out(s.meta.boresight));
                    double expect = 20.0 * std::log10(2.0) + pat_in - pat_out;
                    CHECK_THAT(gin - gout, WithinAbs(expect, 1e-4));
                }
            }
        }
    CHECK(occupied > 0);
    CHECK(filled_slots > 100);
    // Mask/occupancy agreement.
    for (size_t cell = 0; cell < s.cell_count(); ++cell)
        CHECK(int(s.valid[cell]) == 1 - int(b.occ.values[cell]));
}

TEST_CASE("missing trace for a free cell is a build error naming the cell")
{
    auto b = trace_small_scene(22);
    // Damage one free cell's trace.
    for (size_t i = 0; i < b.traces.size(); ++i)
        if (b.traces[i].status == TraceStatus::ok) {
            b.traces[i].status = TraceStatus::occluded_endpoint;
            break;
        }
    FeatureConfig cfg;
    CHECK_THROWS_WITH(build_gain_sample(b.scene, 0, b.bs, b.grid, b.occ, b.traces, cfg),
                      Catch::Matchers::ContainsSubstring("free cell"));
}

TEST_CASE("phase sample: LoS input equals target under the delay-based mode")
{
    auto b = trace_small_scene(23);
    FeatureConfig cfg;
    Sample s = build_phase_sample(b.scene, 0, b.bs, b.grid, b.occ, b.traces, cfg);
    REQUIRE(s.c_in == 40);
    size_t los_checked = 0;
    for (int iy = 0; iy < s.ny; ++iy)
        for (int ix = 0; ix < s.nx; ++ix) {
            size_t cell = size_t(iy) * s.nx + ix;
            for (int l = 0; l < s.L; ++l) {
                if (s.meta.m[cell * s.L + l] != 0)
                    continue; // LoS slots only
                double in = double(s.in_at(ix, iy, l));
                double tg = double(s.tgt_at(ix, iy, l));
                CHECK(circ_abs_diff(in, tg) < 1e-6);
                ++los_checked;
            }
        }
    CHECK(los_checked > 50);
    // Absent slots: sentinel phase 0, interaction -1.
    bool saw_empty = false;
    for (int iy = 0; iy < s.ny && !saw_empty; ++iy)
        for (int ix = 0; ix < s.nx && !saw_empty; ++ix)
            if (s.valid[size_t(iy) * s.nx + ix] && !s.slot_filled(ix, iy, s.L - 1)) {
                CHECK(s.in_at(ix, iy, s.L - 1) == 0.0f);
                CHECK(s.in_at(ix, iy, s.L + s.L - 1) == -1.0f);
                saw_empty = true;
            }
    CHECK(saw_empty);
}

TEST_CASE("augmentation involutions and angle remaps")
{
    auto b = trace_small_scene(24);
    FeatureConfig cfg;
    Sample s = build_gain_sample(b.scene, 0, b.bs, b.grid, b.occ, b.traces, cfg);

    auto equal_samples = [](const Sample &a, const Sample &c) {
        REQUIRE(a.inputs.size() == c.inputs.size());
        // Angle channels are rewrapped per transform and the pattern channel
        // recomputed, so repeated transforms accumulate float rounding.
        for (size_t i = 0; i < a.inputs.size(); ++i)
            if (std::fabs(a.inputs[i] - c.inputs[i]) > 1e-3f)
                return false;
        for (size_t i = 0; i < a.targets.size(); ++i)
            if (a.targets[i] != c.targets[i])
                return false;
        return a.valid == c.valid;
    };

    SECTION("rot180 twice is identity")
    {
        Sample t = augment(augment(s, Transform::rot180, cfg), Transform::rot180, cfg);
        CHECK(equal_samples(s, t));
    }
    SECTION("mirror twice is identity")
    {
        Sample t = augment(augment(s, Transform::mirror_x, cfg), Transform::mirror_x, cfg);
        CHECK(equal_samples(s, t));
        Sample u = augment(augment(s, Transform::mirror_y, cfg), Transform::mirror_y, cfg);
        CHECK(equal_samples(s, u));
    }
    SECTION("four quarter turns are identity")
    {
        Sample t = s;
        for (int i = 0; i < 4; ++i)
            t = augment(t, Transform::rot90, cfg);
        CHECK(equal_samples(s, t));
    }
    SECTION("rot90 remaps an AoD of 0 to pi/2")
    {
        // Find a filled slot, overwrite its AoD with 0, rotate, check pi/2.
        Sample t = s;
        int fx = -1, fy = -1;
        for (int iy = 0; iy < t.ny && fx < 0; ++iy)
            for (int ix = 0; ix < t.nx && fx < 0; ++ix)
                if (t.slot_filled(ix, iy, 0)) {
                    fx = ix;
                    fy = iy;
                }
        REQUIRE(fx >= 0);
        size_t cell = size_t(fy) * t.nx + fx;
        t.meta.aod_h[cell * t.L] = 0.f;
        t.inputs[cell * t.c_in + cfg.ch_aod()] = 0.f;
        Sample r = augment(t, Transform::rot90, cfg);
        int ox, oy;
        ox = t.nx - 1 - fy;
        oy = fx;
        CHECK_THAT(double(r.in_at(ox, oy, cfg.ch_aod())), WithinAbs(kPi / 2, 1e-6));
    }
    SECTION("quarter rotation rejects non-square grids")
    {
        Sample t = s;
        t.nx = 8;
        CHECK_THROWS_AS(augment(t, Transform::rot90, cfg), DataError);
    }
}

TEST_CASE("augmented sample equals the sample of the transformed world")
{
    // Rotating the scene, BS and boresight and re-tracing must reproduce
    // augment(sample, rot90) up to floating-point noise.
    for (Transform t : {Transform::rot90, Transform::mirror_x}) {
        auto b = trace_small_scene(25);
        FeatureConfig cfg;
        cfg.include_delay = true;
        Sample base = build_gain_sample(b.scene, 0, b.bs, b.grid, b.occ, b.traces, cfg);
        Sample aug = augment(base, t, cfg);

        Scene rs = transform_scene(b.scene, t);
        BsConfig rbs;
        rbs.position = detail::map_point(t, b.scene.lx, b.scene.ly, b.bs.position);
        rbs.boresight = detail::map_angle(t, b.bs.boresight);
        GridSpec rgrid = GridSpec::for_scene(rs, b.grid.nx, b.grid.ny);
        OccupancyMap rocc = rasterize_occupancy(rs, rgrid);
        TraceLimits lim;
        lim.max_order = 2;
        auto rtraces = trace_map(TraceGeometry::from_scene(rs), rbs.position, rgrid, rocc, lim,
                                 1.5);
        Sample retraced = build_gain_sample(rs, 0, rbs, rgrid, rocc, rtraces, cfg);

        REQUIRE(aug.valid == retraced.valid);
        size_t cells_checked = 0;
        for (int iy = 0; iy < aug.ny; ++iy)
            for (int ix = 0; ix < aug.nx; ++ix) {
                size_t cell = size_t(iy) * aug.nx + ix;
                if (!aug.valid[cell])
                    continue;
                for (int l = 0; l < aug.L; ++l) {
                    REQUIRE(aug.meta.m[cell * aug.L + l] == retraced.meta.m[cell * aug.L + l]);
                    if (aug.meta.m[cell * aug.L + l] < 0)
                        break;
                    // float32 channel storage bounds the match at the ulp
                    // of gain values around -100 dB (~2e-5 dB).
                    CHECK_THAT(double(aug.in_at(ix, iy, cfg.ch_gain() + l)),
                               WithinAbs(double(retraced.in_at(ix, iy, cfg.ch_gain() + l)),
                                         2e-5));
                    CHECK_THAT(double(aug.tgt_at(ix, iy, l)),
                               WithinAbs(double(retraced.tgt_at(ix, iy, l)), 2e-5));
                    CHECK(circ_abs_diff(double(aug.in_at(ix, iy, cfg.ch_aod() + l)),
                                        double(retraced.in_at(ix, iy, cfg.ch_aod() + l))) < 1e-6);
                    CHECK_THAT(double(aug.in_at(ix, iy, cfg.ch_antpat() + l)),
                               WithinAbs(double(retraced.in_at(ix, iy, cfg.ch_antpat() + l)),
                                         2e-5));
                }
                ++cells_checked;
            }
        CHECK(cells_checked > 100);
        CHECK(norm(aug.meta.bs - retraced.meta.bs) < 1e-9);
    }
}

TEST_CASE("split rules")
{
    std::vector<uint32_t> ten(10);
    for (uint32_t i = 0; i < 10; ++i)
        ten[i] = i;
    auto s = split_dataset(ten, 0.8, 0.1, 0.1, 7);
    CHECK(s.train.size() == 8);
    CHECK(s.val.size() == 1);
    CHECK(s.test.size() == 1);
    CHECK(!s.short_split_warning);

    std::vector<uint32_t> seven(7);
    for (uint32_t i = 0; i < 7; ++i)
        seven[i] = i;
    auto s7 = split_dataset(seven, 0.8, 0.1, 0.1, 7);
    CHECK(s7.train.size() == 6);
    CHECK(s7.val.size() == 1);
    CHECK(s7.test.size() == 0);
    CHECK(s7.short_split_warning);

    auto again = split_dataset(ten, 0.8, 0.1, 0.1, 7);
    CHECK(again.train == s.train);
    CHECK(again.val == s.val);
    // Disjointness.
    for (auto id : s.train) {
        CHECK(std::find(s.val.begin(), s.val.end(), id) == s.val.end());
        CHECK(std::find(s.test.begin(), s.test.end(), id) == s.test.end());
    }
    CHECK_THROWS_AS(split_dataset({}, 0.8, 0.1, 0.1, 1), DataError);
}

TEST_CASE("container round trip and corruption detection")
{
    auto b = trace_small_scene(26);
    FeatureConfig cfg;
    Sample s = build_gain_sample(b.scene, 3, b.bs, b.grid, b.occ, b.traces, cfg);
    std::string path = "/tmp/xband_test_dataset.bin";
    write_dataset(path, {s, s}, cfg);
    auto back = read_dataset(path, &cfg);
    REQUIRE(back.size() == 2);
    CHECK(back[0].inputs == s.inputs);
    CHECK(back[0].targets == s.targets);
    CHECK(back[0].valid == s.valid);
    CHECK(back[0].meta.m == s.meta.m);
    CHECK(back[0].meta.tau == s.meta.tau);
    CHECK(back[0].meta.scene_id == 3);
    CHECK(back[0].meta.bs == s.meta.bs);
    CHECK(back[0].res == s.res);

    SECTION("bad magic")
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("ZZZZ", 4);
        f.close();
        CHECK_THROWS_WITH(read_dataset(path), Catch::Matchers::ContainsSubstring("magic"));
    }
    SECTION("future version")
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        uint32_t v = 2;
        f.write(reinterpret_cast<const char *>(&v), 4);
        f.close();
        CHECK_THROWS_WITH(read_dataset(path), Catch::Matchers::ContainsSubstring("format_version"));
    }
    SECTION("payload corruption fails the CRC")
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(200);
        char junk = 0x5a;
        f.write(&junk, 1);
        f.close();
        CHECK_THROWS_WITH(read_dataset(path), Catch::Matchers::ContainsSubstring("CRC"));
    }
    SECTION("truncation")
    {
        std::ifstream in(path, std::ios::binary);
        std::vector<char> all((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
        in.close();
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(all.data(), std::streamsize(all.size() / 2));
        out.close();
        CHECK_THROWS_WITH(read_dataset(path), Catch::Matchers::ContainsSubstring("truncated"));
    }
    SECTION("config digest mismatch")
    {
        FeatureConfig other;
        other.include_delay = true;
        CHECK_THROWS_WITH(read_dataset(path, &other),
                          Catch::Matchers::ContainsSubstring("feature config"));
    }
}

TEST_CASE("normalization round trip")
{
    FeatureConfig cfg;
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        NormRange r{-250.0, 0.0};
        double x = rng.uniform(-250.0, 0.0);
        CHECK_THAT(r.denormalize(r.normalize(x)), WithinAbs(x, 1e-6 * 250));
        NormRange a{-kPi, kPi};
        double phi = rng.uniform(-kPi, kPi);
        CHECK_THAT(a.denormalize(a.normalize(phi)), WithinAbs(phi, 1e-9));
    }
    // Tensor conversion and back.
    auto b = trace_small_scene(27);
    Sample s = build_gain_sample(b.scene, 0, b.bs, b.grid, b.occ, b.traces, cfg);
    auto x = sample_to_input<float>(s, cfg);
    CHECK(x.shape() == std::vector<int>{s.c_in, s.ny, s.nx});
    auto t = sample_to_target<float>(s, cfg);
    std::vector<float> back = denormalize_output(t, s, cfg);
    for (size_t i = 0; i < back.size(); ++i)
        CHECK_THAT(double(back[i]), WithinAbs(double(s.targets[i]), 1e-3));
}
