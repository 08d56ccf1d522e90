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

#include "raytrace.hpp"

namespace xband {

// Exhaustive mirror-image path enumeration, written as an independent check
// on trace_paths. Unlike the tracer it enumerates every facet sequence
// without pruning and reconstructs reflection points by unfolding the
// receiver instead of the transmitter, then re-verifies the specular law
// from explicit angles. Refuses geometries with more than 8 reflectors.
inline TraceResult image_method_oracle(const TraceGeometry &g, const Vec3 &tx, const Vec3 &rx,
                                       int max_order)
{
    if (g.facets.size() > 8)
        throw ConfigError(strf("image_method_oracle: %zu reflectors exceed the supported 8",
                               g.facets.size()));
    if (max_order > 2)
        throw ConfigError("image_method_oracle supports max_order <= 2");

    TraceResult res;
    if (g.point_in_solid(rx) || g.point_in_solid(tx)) {
        res.status = TraceStatus::occluded_endpoint;
        return res;
    }

    auto blocked = [&](Vec3 a, Vec3 b, const Facet *fa, const Facet *fb) {
        Vec3 a2 = rt::lift_endpoint(a, b, fa);
        Vec3 b2 = rt::lift_endpoint(b, a, fb);
        return g.segment_blocked(a2, b2);
    };

    // Line of sight.
    if (distance(tx, rx) > 0 && !blocked(tx, rx, nullptr, nullptr)) {
        PathRecord los;
        los.tx = tx;
        los.rx = rx;
        los.d = distance(tx, rx);
        los.tau = los.d / kSpeedOfLight;
        los.r_tx = normalized(rx - tx);
        los.r_rx = normalized(tx - rx);
        direction_angles(los.r_tx, los.aod_az, los.aod_el);
        direction_angles(los.r_rx, los.aoa_az, los.aoa_el);
        res.paths.push_back(std::move(los));
    }

    const int nf = int(g.facets.size());
    std::vector<int> seq;

    auto try_seq = [&]() {
        const int k = int(seq.size());
        // Receiver unfolded through the sequence suffixes: unfolded[m] is rx
        // mirrored across facets seq[k-1], ..., seq[m].
        std::vector<Vec3> unfolded(static_cast<size_t>(k));
        Vec3 img = rx;
        for (int m = k - 1; m >= 0; --m) {
            img = g.facets[size_t(seq[size_t(m)])].mirror(img);
            unfolded[size_t(m)] = img;
        }
        std::vector<Vec3> pts(static_cast<size_t>(k));
        Vec3 src = tx;
        for (int m = 0; m < k; ++m) {
            const Facet &f = g.facets[size_t(seq[size_t(m)])];
            double s_src = f.signed_dist(src);
            double s_img = f.signed_dist(unfolded[size_t(m)]);
            if (s_src <= rt::kFrontEps || s_img >= -rt::kFrontEps)
                return;
            double t = s_src / (s_src - s_img);
            if (t <= 0 || t >= 1)
                return;
            Vec3 p = src + t * (unfolded[size_t(m)] - src);
            if (!f.contains(p, rt::kEdgeTol))
                return;
            pts[size_t(m)] = p;
            src = p;
        }
        // Specular-law verification from explicit angles.
        for (int m = 0; m < k; ++m) {
            const Facet &f = g.facets[size_t(seq[size_t(m)])];
            Vec3 before = (m == 0) ? tx : pts[size_t(m - 1)];
            Vec3 after = (m == k - 1) ? rx : pts[size_t(m + 1)];
            Vec3 din = normalized(pts[size_t(m)] - before);
            Vec3 dout = normalized(after - pts[size_t(m)]);
            double cin = -dot(din, f.normal);
            double cout = dot(dout, f.normal);
            if (cin <= 0 || cout <= 0)
                return;
            if (std::fabs(std::acos(std::min(1.0, cin)) - std::acos(std::min(1.0, cout))) > 1e-9)
                return;
        }
        // Occlusion leg by leg.
        {
            Vec3 prev = tx;
            const Facet *prev_f = nullptr;
            for (int m = 0; m <= k; ++m) {
                Vec3 next = (m == k) ? rx : pts[size_t(m)];
                const Facet *next_f = (m == k) ? nullptr : &g.facets[size_t(seq[size_t(m)])];
                if (blocked(prev, next, prev_f, next_f))
                    return;
                prev = next;
                prev_f = next_f;
            }
        }
        PathRecord rec;
        rec.tx = tx;
        rec.rx = rx;
        double d = 0;
        Vec3 prev = tx;
        for (int m = 0; m < k; ++m) {
            const Facet &f = g.facets[size_t(seq[size_t(m)])];
            Vec3 inc = pts[size_t(m)] - prev;
            double seg = norm(inc);
            d += seg;
            Interaction ia;
            ia.point = pts[size_t(m)];
            ia.normal = f.normal;
            double c = std::min(1.0, std::max(-1.0, -dot(inc, f.normal) / seg));
            ia.theta0 = std::acos(c);
            ia.material = f.material;
            ia.facet_id = f.id;
            rec.interactions.push_back(ia);
            prev = pts[size_t(m)];
        }
        d += distance(prev, rx);
        rec.d = d;
        rec.tau = d / kSpeedOfLight;
        Vec3 first = pts.empty() ? rx : pts[0];
        Vec3 last = pts.empty() ? tx : pts.back();
        rec.r_tx = normalized(first - tx);
        rec.r_rx = normalized(last - rx);
        direction_angles(rec.r_tx, rec.aod_az, rec.aod_el);
        direction_angles(rec.r_rx, rec.aoa_az, rec.aoa_el);
        res.paths.push_back(std::move(rec));
    };

    // Every sequence of length 1..max_order (repeats allowed except
    // immediate repetition, which cannot reflect twice in a row).
    for (int f1 = 0; f1 < nf && max_order >= 1; ++f1) {
        seq = {f1};
        try_seq();
        for (int f2 = 0; f2 < nf && max_order >= 2; ++f2) {
            if (f2 == f1)
                continue;
            seq = {f1, f2};
            try_seq();
        }
    }

    TraceLimits lim;
    lim.max_order = max_order;
    lim.max_paths = 1 << 20;
    rt::finalize_paths(res.paths, lim);
    return res;
}

inline TraceResult image_method_oracle(const Scene &s, const Vec3 &tx, const Vec3 &rx,
                                       int max_order)
{
    return image_method_oracle(TraceGeometry::from_scene(s), tx, rx, max_order);
}

} // namespace xband
