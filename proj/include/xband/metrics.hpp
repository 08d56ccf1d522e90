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

#include <map>

#include "dataset.hpp"

namespace xband {

// Quartiles by linear interpolation between order statistics (the common
// "type-7" rule): position h = (n - 1) q on the sorted values.
struct QuartileStats {
    double q1 = 0, median = 0, q3 = 0, iqr = 0;
    size_t count = 0;
};

inline QuartileStats quartile_stats(std::vector<double> v)
{
    if (v.empty())
        throw DataError("quartile_stats: empty value list");
    std::sort(v.begin(), v.end());
    auto quantile = [&](double q) {
        double h = double(v.size() - 1) * q;
        size_t lo = size_t(std::floor(h));
        size_t hi = std::min(lo + 1, v.size() - 1);
        double frac = h - double(lo);
        return v[lo] + frac * (v[hi] - v[lo]);
    };
    QuartileStats s;
    s.q1 = quantile(0.25);
    s.median = quantile(0.5);
    s.q3 = quantile(0.75);
    s.iqr = s.q3 - s.q1;
    s.count = v.size();
    return s;
}

// Mean absolute error over mask-included entries (gains, dB).
inline double g_err(const std::vector<double> &pred, const std::vector<double> &truth,
                    const std::vector<uint8_t> &mask)
{
    if (pred.size() != truth.size() || pred.size() != mask.size())
        throw DataError("g_err: size mismatch");
    double sum = 0;
    size_t n = 0;
    for (size_t i = 0; i < pred.size(); ++i)
        if (mask[i]) {
            sum += std::fabs(pred[i] - truth[i]);
            ++n;
        }
    if (n == 0)
        throw DataError("g_err: no entries included by the mask");
    return sum / double(n);
}

// Wrap-aware mean absolute phase error, radians in [0, pi].
inline double p_err(const std::vector<double> &pred, const std::vector<double> &truth,
                    const std::vector<uint8_t> &mask)
{
    if (pred.size() != truth.size() || pred.size() != mask.size())
        throw DataError("p_err: size mismatch");
    double sum = 0;
    size_t n = 0;
    for (size_t i = 0; i < pred.size(); ++i)
        if (mask[i]) {
            sum += circ_abs_diff(pred[i], truth[i]);
            ++n;
        }
    if (n == 0)
        throw DataError("p_err: no entries included by the mask");
    return sum / double(n);
}

// One per-path error observation with its stratification keys.
struct ErrorEntry {
    double err = 0;
    uint32_t scene_id = 0;
    int interactions = -1; // slot M value; 0 = LoS
    bool los = false;
};

struct ReportRow {
    std::string stratum;
    QuartileStats stats;
};

struct MetricReport {
    std::string metric; // "g_err_db" | "p_err_rad" | "tput_mbps"
    std::vector<ReportRow> rows;
};

// Per-entry absolute errors of a prediction against a sample, with metadata.
// `pred` is physical-unit HWC (same layout as sample targets).
inline std::vector<ErrorEntry> per_entry_errors(const Sample &s, const std::vector<float> &pred)
{
    if (pred.size() != s.targets.size())
        throw DataError("per_entry_errors: prediction shape mismatch");
    std::vector<ErrorEntry> out;
    const bool phase = s.kind == DatasetKind::phase;
    for (int iy = 0; iy < s.ny; ++iy)
        for (int ix = 0; ix < s.nx; ++ix) {
            size_t cell = size_t(iy) * s.nx + ix;
            if (!s.valid[cell])
                continue;
            for (int c = 0; c < s.c_out; ++c) {
                bool filled = s.c_out == 1 || s.meta.m[cell * s.L + c] >= 0;
                if (!filled)
                    continue;
                double p = double(pred[cell * s.c_out + c]);
                double t = double(s.targets[cell * s.c_out + c]);
                ErrorEntry e;
                e.err = phase ? circ_abs_diff(p, t) : std::fabs(p - t);
                e.scene_id = s.meta.scene_id;
                e.interactions = s.c_out == 1 ? -1 : int(s.meta.m[cell * s.L + c]);
                e.los = e.interactions == 0;
                out.push_back(e);
            }
        }
    return out;
}

// Quartile rows per stratum: overall, per scene, LoS/NLoS, and per
// interaction count. Strata with no entries are not emitted.
inline MetricReport stratified_report(const std::vector<ErrorEntry> &entries,
                                      const std::string &metric)
{
    MetricReport rep;
    rep.metric = metric;
    if (entries.empty())
        throw DataError("stratified_report: no entries");
    std::map<std::string, std::vector<double>> strata;
    for (const auto &e : entries) {
        strata["all"].push_back(e.err);
        strata[strf("scene=%u", e.scene_id)].push_back(e.err);
        if (e.interactions >= 0) {
            strata[e.los ? "los" : "nlos"].push_back(e.err);
            strata[e.interactions == 0 ? "I=LoS" : strf("I=%d", e.interactions)].push_back(e.err);
        }
    }
    for (auto &[key, vals] : strata)
        rep.rows.push_back({key, quartile_stats(std::move(vals))});
    return rep;
}

inline const ReportRow *find_row(const MetricReport &rep, const std::string &stratum)
{
    for (const auto &r : rep.rows)
        if (r.stratum == stratum)
            return &r;
    return nullptr;
}

// Cells whose first-slot absolute error lies in the top k percent, ties
// broken by cell index; exactly ceil(k% * P_eff) cells are returned.
struct TopErrorCell {
    int ix = 0, iy = 0;
    double err = 0;
};

struct TopErrorMap {
    std::vector<TopErrorCell> cells;
    Vec3 bs;
    TopErrorCell worst;
};

inline TopErrorMap top_error_map(const Sample &s, const std::vector<float> &pred,
                                 double k_percent)
{
    if (k_percent <= 0 || k_percent > 100)
        throw ConfigError("top_error_map: k must be in (0, 100]");
    if (pred.size() != s.targets.size())
        throw DataError("top_error_map: prediction shape mismatch");
    const bool phase = s.kind == DatasetKind::phase;
    std::vector<TopErrorCell> cells;
    for (int iy = 0; iy < s.ny; ++iy)
        for (int ix = 0; ix < s.nx; ++ix) {
            size_t cell = size_t(iy) * s.nx + ix;
            if (!s.valid[cell])
                continue;
            double p = double(pred[cell * s.c_out]);
            double t = double(s.targets[cell * s.c_out]);
            cells.push_back({ix, iy, phase ? circ_abs_diff(p, t) : std::fabs(p - t)});
        }
    if (cells.empty())
        throw DataError("top_error_map: no valid cells");
    std::stable_sort(cells.begin(), cells.end(), [&](const TopErrorCell &a, const TopErrorCell &b) {
        if (a.err != b.err)
            return a.err > b.err;
        return size_t(a.iy) * s.nx + a.ix < size_t(b.iy) * s.nx + b.ix;
    });
    size_t keep = size_t(std::ceil(k_percent / 100.0 * double(cells.size())));
    keep = std::min(keep, cells.size());
    TopErrorMap out;
    out.bs = s.meta.bs;
    out.worst = cells.front();
    out.cells.assign(cells.begin(), cells.begin() + long(keep));
    return out;
}

// ----------------------------------------------------------------------
// Emission
// ----------------------------------------------------------------------

inline std::string report_to_csv(const MetricReport &rep)
{
    std::ostringstream os;
    os << "stratum,metric,count,q1,median,q3,iqr\n";
    for (const auto &r : rep.rows)
        os << r.stratum << "," << rep.metric << "," << r.stats.count << ","
           << fmt_double(r.stats.q1) << "," << fmt_double(r.stats.median) << ","
           << fmt_double(r.stats.q3) << "," << fmt_double(r.stats.iqr) << "\n";
    return os.str();
}

// Boxplot-ready dump: whiskers at Q1 - 1.5 IQR and Q3 + 1.5 IQR clamped to
// the observed range.
inline std::string boxplot_to_csv(const MetricReport &rep)
{
    std::ostringstream os;
    os << "stratum,metric,count,q1,median,q3,iqr,whisker_lo,whisker_hi\n";
    for (const auto &r : rep.rows) {
        double lo = r.stats.q1 - 1.5 * r.stats.iqr;
        double hi = r.stats.q3 + 1.5 * r.stats.iqr;
        os << r.stratum << "," << rep.metric << "," << r.stats.count << ","
           << fmt_double(r.stats.q1) << "," << fmt_double(r.stats.median) << ","
           << fmt_double(r.stats.q3) << "," << fmt_double(r.stats.iqr) << "," << fmt_double(lo)
           << "," << fmt_double(hi) << "\n";
    }
    return os.str();
}

} // namespace xband
