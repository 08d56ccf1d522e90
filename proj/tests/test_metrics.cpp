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

#include "xband/metrics.hpp"

using namespace xband;
using Catch::Matchers::WithinAbs;

TEST_CASE("quartile stats follow linear interpolation")
{
    auto s = quartile_stats({1, 2, 3, 5});
    CHECK_THAT(s.median, WithinAbs(2.5, 1e-12));
    CHECK_THAT(s.q1, WithinAbs(1.75, 1e-12));
    CHECK_THAT(s.q3, WithinAbs(3.5, 1e-12));
    CHECK_THAT(s.iqr, WithinAbs(1.75, 1e-12));

    auto c = quartile_stats({4.2, 4.2, 4.2});
    CHECK(c.q1 == 4.2);
    CHECK(c.median == 4.2);
    CHECK(c.q3 == 4.2);
    CHECK(c.iqr == 0.0);

    auto one = quartile_stats({7.5});
    CHECK(one.q1 == 7.5);
    CHECK(one.median == 7.5);
    CHECK(one.q3 == 7.5);

    CHECK_THROWS_AS(quartile_stats({}), DataError);
}

TEST_CASE("g_err hand-computed values")
{
    SECTION("exact prediction")
    {
        std::vector<double> v = {1, 2, 3};
        CHECK(g_err(v, v, {1, 1, 1}) == 0.0);
    }
    SECTION("arithmetic example")
    {
        // P_eff = 2, L = 2, |errors| = {0, 1, 2, 0} -> 0.75 dB
        std::vector<double> pred = {0, 1, 2, 0};
        std::vector<double> truth = {0, 0, 0, 0};
        CHECK_THAT(g_err(pred, truth, {1, 1, 1, 1}), WithinAbs(0.75, 1e-12));
    }
    SECTION("permutation invariance")
    {
        std::vector<double> pred = {3, 1, 4, 1, 5};
        std::vector<double> truth = {2, 2, 2, 2, 2};
        std::vector<double> pred2 = {5, 1, 4, 1, 3};
        std::vector<double> truth2 = {2, 2, 2, 2, 2};
        CHECK(g_err(pred, truth, {1, 1, 1, 1, 1}) == g_err(pred2, truth2, {1, 1, 1, 1, 1}));
    }
    SECTION("masking excludes entries entirely")
    {
        std::vector<double> pred = {0, 1e9};
        std::vector<double> truth = {0, 0};
        CHECK(g_err(pred, truth, {1, 0}) == 0.0);
        CHECK_THROWS_AS(g_err(pred, truth, {0, 0}), DataError);
    }
}

TEST_CASE("p_err wrap arithmetic")
{
    SECTION("wrap example")
    {
        // 6.2 rad == -0.0832; |0.1 - (-0.0832)| = 0.1832
        std::vector<double> pred = {0.1};
        std::vector<double> truth = {6.2};
        CHECK_THAT(p_err(pred, truth, {1}), WithinAbs(2 * kPi - 6.1, 1e-12));
    }
    SECTION("2 pi shifts are invisible")
    {
        Rng rng(4);
        for (int i = 0; i < 10000; ++i) {
            double a = rng.uniform(-kPi, kPi);
            int k = int(rng.uniform_int(7)) - 3;
            std::vector<double> pred = {a + k * kTwoPi};
            std::vector<double> truth = {a};
            CHECK(p_err(pred, truth, {1}) < 1e-9);
        }
    }
    SECTION("antipodal pair attains the pi bound")
    {
        std::vector<double> pred = {0.0};
        std::vector<double> truth = {kPi};
        CHECK_THAT(p_err(pred, truth, {1}), WithinAbs(kPi, 1e-12));
    }
    SECTION("entries stay within [0, pi]")
    {
        Rng rng(5);
        for (int i = 0; i < 1000; ++i) {
            double d = circ_abs_diff(rng.uniform(-10, 10), rng.uniform(-10, 10));
            CHECK(d >= 0.0);
            CHECK(d <= kPi + 1e-15);
        }
    }
}

namespace {

Sample synthetic_sample(int n, int L, uint64_t seed, bool phase = false)
{
    Sample s;
    s.kind = phase ? DatasetKind::phase : DatasetKind::gain;
    s.nx = s.ny = n;
    s.L = L;
    s.c_in = 2 * L;
    s.c_out = L;
    s.res = 2.0;
    s.inputs.assign(s.cell_count() * size_t(s.c_in), 0.f);
    s.targets.assign(s.cell_count() * size_t(s.c_out), 0.f);
    s.valid.assign(s.cell_count(), 1);
    s.meta.m.assign(s.cell_count() * size_t(L), -1);
    s.meta.tau.assign(s.cell_count() * size_t(L), 0.f);
    s.meta.aod_h.assign(s.cell_count() * size_t(L), 0.f);
    s.meta.aod_v.assign(s.cell_count() * size_t(L), 0.f);
    s.meta.aoa_h.assign(s.cell_count() * size_t(L), 0.f);
    s.meta.aoa_v.assign(s.cell_count() * size_t(L), 0.f);
    s.meta.phase_out.assign(s.cell_count() * size_t(L), 0.f);
    Rng rng(seed);
    for (size_t cell = 0; cell < s.cell_count(); ++cell)
        for (int l = 0; l < L; ++l) {
            int order = l == 0 ? 0 : int(rng.uniform_int(6));
            s.meta.m[cell * size_t(L) + size_t(l)] = int8_t(order);
            s.targets[cell * size_t(L) + size_t(l)] = float(rng.uniform(-120, -60));
        }
    return s;
}

} // namespace

TEST_CASE("stratified report")
{
    SECTION("all-LoS data emits only the LoS strata")
    {
        Sample s = synthetic_sample(4, 2, 11);
        for (auto &m : s.meta.m)
            m = 0;
        std::vector<float> pred = s.targets;
        for (auto &v : pred)
            v += 1.0f;
        auto rep = stratified_report(per_entry_errors(s, pred), "g_err_db");
        CHECK(find_row(rep, "I=LoS") != nullptr);
        CHECK(find_row(rep, "I=1") == nullptr);
        CHECK(find_row(rep, "nlos") == nullptr);
        CHECK_THAT(find_row(rep, "all")->stats.median, WithinAbs(1.0, 1e-6));
    }
    SECTION("noise proportional to interaction count gives monotone medians")
    {
        Sample s = synthetic_sample(16, 8, 12);
        std::vector<float> pred = s.targets;
        Rng rng(13);
        for (size_t cell = 0; cell < s.cell_count(); ++cell)
            for (int l = 0; l < s.L; ++l) {
                int m = s.meta.m[cell * size_t(s.L) + size_t(l)];
                pred[cell * size_t(s.L) + size_t(l)] +=
                    float((m + 1) * (0.5 + rng.uniform()));
            }
        auto rep = stratified_report(per_entry_errors(s, pred), "g_err_db");
        double prev = 0;
        for (const std::string key : {"I=LoS", "I=1", "I=2", "I=3", "I=4", "I=5"}) {
            const ReportRow *row = find_row(rep, key);
            REQUIRE(row != nullptr);
            CHECK(row->stats.median >= prev);
            prev = row->stats.median;
        }
    }
    SECTION("row invariants on random data")
    {
        Sample s = synthetic_sample(8, 4, 14);
        std::vector<float> pred = s.targets;
        Rng rng(15);
        for (auto &v : pred)
            v += float(rng.normal() * 3);
        auto rep = stratified_report(per_entry_errors(s, pred), "g_err_db");
        for (const auto &row : rep.rows) {
            CHECK(row.stats.q1 <= row.stats.median);
            CHECK(row.stats.median <= row.stats.q3);
            CHECK_THAT(row.stats.iqr, WithinAbs(row.stats.q3 - row.stats.q1, 1e-12));
            CHECK(row.stats.count > 0);
        }
    }
}

TEST_CASE("top error map")
{
    Sample s = synthetic_sample(10, 2, 16);
    std::vector<float> pred = s.targets;
    SECTION("uniform errors tie-break by cell index")
    {
        for (size_t cell = 0; cell < s.cell_count(); ++cell)
            pred[cell * 2] += 1.0f;
        auto tem = top_error_map(s, pred, 5.0);
        CHECK(tem.cells.size() == size_t(std::ceil(0.05 * 100)));
        CHECK(tem.cells[0].ix == 0);
        CHECK(tem.cells[0].iy == 0);
        CHECK(tem.cells[1].ix == 1);
    }
    SECTION("single outlier is captured")
    {
        pred[(5 * 10 + 7) * 2] += 50.0f;
        auto tem = top_error_map(s, pred, 5.0);
        CHECK(tem.worst.ix == 7);
        CHECK(tem.worst.iy == 5);
        bool found = false;
        for (const auto &c : tem.cells)
            found = found || (c.ix == 7 && c.iy == 5);
        CHECK(found);
    }
    SECTION("k=100 returns every valid cell")
    {
        s.valid[3] = 0;
        auto tem = top_error_map(s, pred, 100.0);
        CHECK(tem.cells.size() == s.cell_count() - 1);
    }
    SECTION("bad k rejected")
    {
        CHECK_THROWS_AS(top_error_map(s, pred, 0.0), ConfigError);
        CHECK_THROWS_AS(top_error_map(s, pred, 101.0), ConfigError);
    }
}

TEST_CASE("report serialization")
{
    Sample s = synthetic_sample(4, 2, 17);
    std::vector<float> pred = s.targets;
    for (auto &v : pred)
        v += 2.0f;
    auto rep = stratified_report(per_entry_errors(s, pred), "g_err_db");
    std::string csv = report_to_csv(rep);
    CHECK(csv.find("stratum,metric,count,q1,median,q3,iqr") == 0);
    CHECK(csv.find("all,g_err_db,") != std::string::npos);
    std::string box = boxplot_to_csv(rep);
    CHECK(box.find("whisker_lo") != std::string::npos);
}
