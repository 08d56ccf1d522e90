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

TEST_CASE("config parsing and lookups")
{
    Config c = Config::parse("[scene]\nextent = 128  # meters\ncount = 4\n\n[run]\nseed = 9\n");
    CHECK(c.get_num("scene", "extent", 0) == 128);
    CHECK(c.get_int("scene", "count", 0) == 4);
    CHECK(c.get_u64("run", "seed", 0) == 9);
    CHECK(c.get_num("scene", "missing", 7.5) == 7.5);
    CHECK_THROWS_AS(Config::parse("key = 1\n"), ConfigError);      // outside a section
    CHECK_THROWS_AS(Config::parse("[scene\nx = 1\n"), ConfigError); // malformed header
    CHECK_THROWS_AS(Config::parse("[a]\nnokey\n"), ConfigError);
}

TEST_CASE("schema validation rejects unknown keys and sections")
{
    Config c = Config::parse("[scene]\nextent = 64\n");
    CHECK_NOTHROW(c.validate(PipelineConfig::schema()));
    Config bad = Config::parse("[scene]\nextnet = 64\n");
    CHECK_THROWS_WITH(PipelineConfig::from_config(bad),
                      Catch::Matchers::ContainsSubstring("extnet"));
    Config bad2 = Config::parse("[scenery]\nextent = 64\n");
    CHECK_THROWS_WITH(PipelineConfig::from_config(bad2),
                      Catch::Matchers::ContainsSubstring("scenery"));
}

TEST_CASE("dotted overrides and digests")
{
    Config c = Config::parse("[scene]\nextent = 64\n");
    uint64_t d1 = c.digest();
    c.set_dotted("scene.extent=128");
    CHECK(c.get_num("scene", "extent", 0) == 128);
    CHECK(c.digest() != d1);
    c.set_dotted("train.epochs=5");
    CHECK(c.get_int("train", "epochs", 0) == 5);
    CHECK_THROWS_AS(c.set_dotted("no_dot=3"), ConfigError);
    CHECK_THROWS_AS(c.set_dotted("a.b"), ConfigError);
    // Digest is stable for identical content.
    Config c2 = Config::parse(c.serialize());
    CHECK(c2.digest() == c.digest());
}

TEST_CASE("pipeline config round trip from text")
{
    Config c = Config::parse("[scene]\nextent = 96\ncount = 2\ndensity = 0.12\n"
                             "[grid]\nnx = 16\nny = 16\n"
                             "[trace]\nmax_order = 2\nbs_per_scene = 2\n"
                             "[dataset]\nkind = phase\ninclude_delay = true\n"
                             "[model]\narch = aunet_aux\nbase_width = 8\n"
                             "[train]\nepochs = 11\nlr = 0.0005\n"
                             "[mimo]\nnt = 2\nnr = 2\n"
                             "[run]\nseed = 123\n");
    PipelineConfig p = PipelineConfig::from_config(c);
    CHECK(p.extent == 96);
    CHECK(p.scene_count == 2);
    CHECK(p.nx == 16);
    CHECK(p.max_order == 2);
    CHECK(p.bs_per_scene == 2);
    CHECK(p.kind == DatasetKind::phase);
    CHECK(p.features.include_delay);
    CHECK(p.arch == Arch::aunet_aux);
    CHECK(p.base_width == 8);
    CHECK(p.train.epochs == 11);
    CHECK(p.train.lr == 0.0005);
    CHECK(p.mimo.nt == 2);
    CHECK(p.seed == 123);
    CHECK_THROWS_AS(
        PipelineConfig::from_config(Config::parse("[dataset]\nkind = nonsense\n")), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_config(Config::parse("[trace]\nmode = warp\n")),
                    ConfigError);
}

TEST_CASE("pipeline stages are reproducible end to end")
{
    Config c = Config::parse("[scene]\nextent = 64\ncount = 2\ndensity = 0.15\n"
                             "[grid]\nnx = 16\nny = 16\n"
                             "[trace]\nmax_order = 2\n"
                             "[model]\nbase_width = 4\n"
                             "[train]\nepochs = 2\n"
                             "[run]\nseed = 55\n");
    PipelineConfig p = PipelineConfig::from_config(c);
    auto run_once = [&](const std::string &path) {
        auto scenes = pipeline_scenes(p);
        auto samples = pipeline_dataset(p, scenes, DatasetKind::gain);
        write_dataset(path, samples, p.features);
        return file_crc32(path);
    };
    uint32_t a = run_once("/tmp/xband_repro_a.bin");
    uint32_t b = run_once("/tmp/xband_repro_b.bin");
    CHECK(a == b);
}

TEST_CASE("scene seeds differ per scene index")
{
    PipelineConfig p;
    p.extent = 64;
    p.scene_count = 3;
    p.density = 0.2;
    p.seed = 5;
    auto scenes = pipeline_scenes(p);
    REQUIRE(scenes.size() == 3);
    CHECK(serialize_scene(scenes[0]) != serialize_scene(scenes[1]));
    CHECK(serialize_scene(scenes[1]) != serialize_scene(scenes[2]));
}

TEST_CASE("path dump round trip")
{
    SceneGenParams sp;
    sp.density = 0.2;
    Scene s = generate_scene(77, sp, 64, 64);
    TraceLimits lim;
    lim.max_order = 2;
    auto res = trace_paths(s, {32, 32, 20}, {10, 50, 1.5}, lim);
    REQUIRE(!res.paths.empty());
    write_path_dump("/tmp/xband_paths.bin", res.paths);
    auto back = read_path_dump("/tmp/xband_paths.bin");
    REQUIRE(back.size() == res.paths.size());
    for (size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].d == res.paths[i].d);
        CHECK(back[i].tau == res.paths[i].tau);
        CHECK(back[i].facet_seq() == res.paths[i].facet_seq());
        for (size_t m = 0; m < back[i].interactions.size(); ++m) {
            CHECK(back[i].interactions[m].point == res.paths[i].interactions[m].point);
            CHECK(back[i].interactions[m].theta0 == res.paths[i].interactions[m].theta0);
        }
    }
}
