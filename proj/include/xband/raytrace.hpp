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

#include <optional>
#include <set>

#include "scene.hpp"
#include "threading.hpp"

namespace xband {

enum class InteractionKind { specular_reflection, diffuse_scatter };

struct Interaction {
    InteractionKind kind = InteractionKind::specular_reflection;
    Vec3 point;
    Vec3 normal;        // unit, front side of the reflecting surface
    double theta0 = 0;  // incidence angle from the normal, [0, pi/2)
    int material = 0;
    int facet_id = -1;
    double chi1 = 0, chi2 = 0; // seeded scatter phases, 0 for specular
};

// Frequency-invariant geometry of one resolved path.
struct PathRecord {
    double d = 0;   // total length, meters
    double tau = 0; // delay d / c, seconds
    double aod_az = 0, aod_el = 0;
    double aoa_az = 0, aoa_el = 0;
    Vec3 r_tx, r_rx; // unit departure direction / unit arrival direction (from rx toward the path)
    Vec3 tx, rx;     // endpoints
    std::vector<Interaction> interactions;

    int order() const { return int(interactions.size()); }
    bool is_los() const { return interactions.empty(); }

    std::vector<int> facet_seq() const
    {
        std::vector<int> s;
        s.reserve(interactions.size());
        for (const auto &i : interactions)
            s.push_back(i.facet_id);
        return s;
    }
};

enum class TraceMode { image_method, sbr };

struct TraceLimits {
    int max_order = 3;      // reflections per path, <= 5
    int max_paths = 64;     // kept after delay sorting
    TraceMode mode = TraceMode::image_method;
    int sbr_ray_count = 100000;
    double sbr_capture_scale = 3.0; // capture radius in units of ray-spacing * distance
    bool enable_diffuse = false;    // mark reflections as scatter events with seeded phases
    uint64_t diffuse_seed = 0;

    void validate() const
    {
        if (max_order < 0 || max_order > 5)
            throw ConfigError("trace max_order must be in [0, 5]");
        if (max_paths < 1)
            throw ConfigError("trace max_paths must be >= 1");
        if (mode == TraceMode::sbr && sbr_ray_count < 16)
            throw ConfigError("sbr_ray_count too small");
    }
};

enum class TraceStatus { ok, occluded_endpoint };

struct TraceResult {
    TraceStatus status = TraceStatus::ok;
    std::vector<PathRecord> paths;
};

namespace rt {
inline constexpr double kBlockChord = 1e-7; // m of penetration that counts as blocked
inline constexpr double kEdgeTol = 1e-9;    // m tolerance for on-facet tests
inline constexpr double kFrontEps = 1e-9;   // m clearance for front-side tests
} // namespace rt

// Reflecting facets plus solid occluders derived from a scene (or supplied
// directly for bare-mirror test geometries).
struct TraceGeometry {
    std::vector<Facet> facets;
    std::vector<Box3> boxes;
    std::vector<Material> materials;
    double lx = 0, ly = 0;
    bool facets_occlude = false; // bare facets also block rays (thin mirrors)

    static TraceGeometry from_scene(const Scene &s)
    {
        TraceGeometry g;
        g.materials = s.materials;
        g.lx = s.lx;
        g.ly = s.ly;
        int id = 0;
        // Ground plane covers the whole extent.
        g.facets.push_back(Facet::make({s.lx / 2, s.ly / 2, 0.0}, {1, 0, 0}, s.lx / 2, {0, 1, 0},
                                       s.ly / 2, s.ground_material, id++));
        for (const auto &b : s.buildings) {
            double cx = b.x + b.w / 2, cy = b.y + b.d / 2, cz = b.h / 2;
            int m = b.material;
            // Four walls; u x v = outward normal.
            g.facets.push_back(Facet::make({b.x, cy, cz}, {0, 0, 1}, b.h / 2, {0, 1, 0}, b.d / 2,
                                           m, id++)); // -x face
            g.facets.push_back(Facet::make({b.x + b.w, cy, cz}, {0, 1, 0}, b.d / 2, {0, 0, 1},
                                           b.h / 2, m, id++)); // +x face
            g.facets.push_back(Facet::make({cx, b.y, cz}, {1, 0, 0}, b.w / 2, {0, 0, 1}, b.h / 2,
                                           m, id++)); // -y face
            g.facets.push_back(Facet::make({cx, b.y + b.d, cz}, {0, 0, 1}, b.h / 2, {1, 0, 0},
                                           b.w / 2, m, id++)); // +y face
            // Roof.
            g.facets.push_back(Facet::make({cx, cy, b.h}, {1, 0, 0}, b.w / 2, {0, 1, 0}, b.d / 2,
                                           m, id++));
            g.boxes.push_back(b.box());
        }
        return g;
    }

    static TraceGeometry from_facets(std::vector<Facet> facets, std::vector<Material> materials,
                                     bool facets_occlude = true)
    {
        TraceGeometry g;
        g.facets = std::move(facets);
        g.materials = std::move(materials);
        g.facets_occlude = facets_occlude;
        for (size_t i = 0; i < g.facets.size(); ++i)
            g.facets[i].id = int(i);
        return g;
    }

    bool point_in_solid(const Vec3 &p) const
    {
        for (const auto &b : boxes)
            if (b.contains(p))
                return true;
        return false;
    }

    // Open-set blocking test: grazing contact does not block.
    bool segment_blocked(const Vec3 &a, const Vec3 &b) const
    {
        for (const auto &box : boxes)
            if (segment_box_chord(a, b, box) > rt::kBlockChord)
                return true;
        if (facets_occlude) {
            for (const auto &f : facets)
                if (segment_facet_hit(a, b, f, 1e-9, -rt::kEdgeTol) > 0)
                    return true;
        }
        return false;
    }
};

inline bool los_visibility(const TraceGeometry &g, const Vec3 &a, const Vec3 &b)
{
    return !g.segment_blocked(a, b);
}

inline bool los_visibility(const Scene &s, const Vec3 &a, const Vec3 &b)
{
    return los_visibility(TraceGeometry::from_scene(s), a, b);
}

namespace rt {

// Nudge an endpoint that sits on a reflecting surface slightly along the
// segment and off the surface so the blocking test does not see the surface
// itself.
inline Vec3 lift_endpoint(const Vec3 &p, const Vec3 &toward, const Facet *on)
{
    Vec3 dir = normalized(toward - p);
    Vec3 q = p + dir * 1e-6;
    if (on)
        q = q + on->normal * 1e-7;
    return q;
}

// Validates the ordered facet sequence between tx and rx with the image
// construction and emits the path record. Images must be precomputed:
// images[k] is tx mirrored across seq[0..k].
inline std::optional<PathRecord> build_path(const TraceGeometry &g,
                                            const std::vector<const Facet *> &seq,
                                            const std::vector<Vec3> &images, const Vec3 &tx,
                                            const Vec3 &rx)
{
    const int k = int(seq.size());
    std::vector<Vec3> pts(static_cast<size_t>(k)); // reflection points, in propagation order
    Vec3 q = rx;
    for (int m = k - 1; m >= 0; --m) {
        const Facet &f = *seq[size_t(m)];
        double sq = f.signed_dist(q);
        double si = f.signed_dist(images[size_t(m)]);
        // The downstream point must see the front face; the image sits behind.
        if (sq <= rt::kFrontEps || si >= -rt::kFrontEps)
            return std::nullopt;
        double t = si / (si - sq);
        Vec3 p = images[size_t(m)] + t * (q - images[size_t(m)]);
        if (!f.contains(p, rt::kEdgeTol))
            return std::nullopt;
        pts[size_t(m)] = p;
        q = p;
    }

    // Occlusion along every leg (endpoints lifted off their surfaces).
    {
        const Vec3 *prev = &tx;
        const Facet *prev_f = nullptr;
        for (int m = 0; m <= k; ++m) {
            const Vec3 &next = (m == k) ? rx : pts[size_t(m)];
            const Facet *next_f = (m == k) ? nullptr : seq[size_t(m)];
            Vec3 a = lift_endpoint(*prev, next, prev_f);
            Vec3 b = lift_endpoint(next, *prev, next_f);
            if (g.segment_blocked(a, b))
                return std::nullopt;
            prev = &next;
            prev_f = next_f;
        }
    }

    PathRecord rec;
    rec.tx = tx;
    rec.rx = rx;
    double d = 0;
    Vec3 prev = tx;
    for (int m = 0; m < k; ++m) {
        const Facet &f = *seq[size_t(m)];
        Vec3 inc = pts[size_t(m)] - prev;
        double seg = norm(inc);
        if (seg <= 0)
            return std::nullopt;
        d += seg;
        Interaction ia;
        ia.kind = InteractionKind::specular_reflection;
        ia.point = pts[size_t(m)];
        ia.normal = f.normal;
        double c = -dot(inc, f.normal) / seg;
        c = std::min(1.0, std::max(-1.0, c));
        ia.theta0 = std::acos(c);
        if (ia.theta0 >= kPi / 2)
            return std::nullopt;
        ia.material = f.material;
        ia.facet_id = f.id;
        rec.interactions.push_back(ia);
        prev = pts[size_t(m)];
    }
    d += distance(prev, rx);
    rec.d = d;
    rec.tau = d / kSpeedOfLight;

    Vec3 first = k > 0 ? pts[0] : rx;
    Vec3 last = k > 0 ? pts[size_t(k - 1)] : tx;
    rec.r_tx = normalized(first - tx);
    rec.r_rx = normalized(last - rx);
    direction_angles(rec.r_tx, rec.aod_az, rec.aod_el);
    direction_angles(rec.r_rx, rec.aoa_az, rec.aoa_el);
    return rec;
}

} // namespace rt

// Virtual-source tree for the image method. Built once per (geometry, tx)
// and shared across receivers.
class ImageTree {
  public:
    struct Node {
        int facet = -1;   // index into geometry facets
        int parent = -1;  // node index, -1 for the root level
        int depth = 1;
        Vec3 image;       // tx mirrored across the facet chain
    };

    ImageTree(const TraceGeometry &g, const Vec3 &tx, int max_order) : geom_(&g), tx_(tx)
    {
        const int nf = int(g.facets.size());
        // Facet-pair successor matrix: B can follow A only if some part of B
        // lies in front of A's plane and some part of A lies in front of B's.
        std::vector<uint8_t> succ(size_t(nf) * nf, 0);
        for (int a = 0; a < nf; ++a)
            for (int b = 0; b < nf; ++b)
                if (a != b && facet_sees(g.facets[a], g.facets[b]) &&
                    facet_sees(g.facets[b], g.facets[a]))
                    succ[size_t(a) * nf + b] = 1;

        std::vector<int> frontier;
        for (int f = 0; f < nf; ++f) {
            if (g.facets[f].signed_dist(tx) > rt::kFrontEps) {
                nodes_.push_back({f, -1, 1, g.facets[f].mirror(tx)});
                frontier.push_back(int(nodes_.size()) - 1);
            }
        }
        for (int depth = 2; depth <= max_order; ++depth) {
            std::vector<int> next;
            for (int ni : frontier) {
                Node n = nodes_[size_t(ni)];
                for (int f = 0; f < nf; ++f) {
                    if (!succ[size_t(n.facet) * nf + f])
                        continue;
                    // The previous image acts as the virtual source; it must
                    // face the next facet.
                    if (g.facets[f].signed_dist(n.image) <= rt::kFrontEps)
                        continue;
                    nodes_.push_back({f, ni, depth, g.facets[f].mirror(n.image)});
                    next.push_back(int(nodes_.size()) - 1);
                }
            }
            frontier = std::move(next);
        }
    }

    size_t size() const { return nodes_.size(); }

    // All valid paths from tx to rx with order <= the tree depth.
    void collect(const Vec3 &rx, int max_order, std::vector<PathRecord> &out) const
    {
        const TraceGeometry &g = *geom_;
        if (!g.segment_blocked(tx_, rx) && distance(tx_, rx) > 0) {
            PathRecord los;
            los.tx = tx_;
            los.rx = rx;
            los.d = distance(tx_, rx);
            los.tau = los.d / kSpeedOfLight;
            los.r_tx = normalized(rx - tx_);
            los.r_rx = normalized(tx_ - rx);
            direction_angles(los.r_tx, los.aod_az, los.aod_el);
            direction_angles(los.r_rx, los.aoa_az, los.aoa_el);
            out.push_back(std::move(los));
        }
        std::vector<const Facet *> seq;
        std::vector<Vec3> images;
        for (size_t ni = 0; ni < nodes_.size(); ++ni) {
            const Node &n = nodes_[ni];
            if (n.depth > max_order)
                continue;
            // Cheap reject: rx must see the front side of the last facet.
            if (g.facets[size_t(n.facet)].signed_dist(rx) <= rt::kFrontEps)
                continue;
            seq.clear();
            images.clear();
            for (int cur = int(ni); cur >= 0; cur = nodes_[size_t(cur)].parent) {
                seq.push_back(&g.facets[size_t(nodes_[size_t(cur)].facet)]);
                images.push_back(nodes_[size_t(cur)].image);
            }
            std::reverse(seq.begin(), seq.end());
            std::reverse(images.begin(), images.end());
            if (auto rec = rt::build_path(g, seq, images, tx_, rx))
                out.push_back(std::move(*rec));
        }
    }

  private:
    static bool facet_sees(const Facet &a, const Facet &b)
    {
        // Any corner of b strictly in front of a's plane.
        for (int su = -1; su <= 1; su += 2)
            for (int sv = -1; sv <= 1; sv += 2) {
                Vec3 corner = b.center + b.u * (su * b.hu) + b.v * (sv * b.hv);
                if (a.signed_dist(corner) > rt::kFrontEps)
                    return true;
            }
        return false;
    }

    const TraceGeometry *geom_;
    Vec3 tx_;
    std::vector<Node> nodes_;
};

namespace rt {

inline void finalize_paths(std::vector<PathRecord> &paths, const TraceLimits &limits)
{
    std::sort(paths.begin(), paths.end(), [](const PathRecord &a, const PathRecord &b) {
        if (a.tau != b.tau)
            return a.tau < b.tau;
        if (a.order() != b.order())
            return a.order() < b.order();
        return a.facet_seq() < b.facet_seq();
    });
    if (int(paths.size()) > limits.max_paths)
        paths.resize(size_t(limits.max_paths));
    if (limits.enable_diffuse) {
        for (auto &p : paths) {
            if (p.interactions.empty())
                continue;
            uint64_t key = limits.diffuse_seed;
            for (int fid : p.facet_seq())
                key = key * 0x100000001b3ULL + uint64_t(fid + 1);
            Rng rng(key);
            for (auto &ia : p.interactions) {
                ia.kind = InteractionKind::diffuse_scatter;
                ia.chi1 = rng.uniform(-kPi, kPi);
                ia.chi2 = rng.uniform(-kPi, kPi);
            }
        }
    }
}

// Deterministic Fibonacci-sphere direction fan.
inline Vec3 fibonacci_dir(int i, int n)
{
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    double z = 1.0 - (2.0 * i + 1.0) / n;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double phi = kTwoPi * std::fmod(i / golden, 1.0);
    return {r * std::cos(phi), r * std::sin(phi), z};
}

inline double point_segment_distance(const Vec3 &p, const Vec3 &a, const Vec3 &b, double &t_out)
{
    Vec3 ab = b - a;
    double len2 = dot(ab, ab);
    double t = len2 > 0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::min(1.0, std::max(0.0, t));
    t_out = t;
    return distance(p, a + t * ab);
}

// SBR discovery: march a ray fan through specular bounces; whenever a leg
// passes near the receiver, validate the accumulated facet sequence exactly
// with the image construction.
inline std::vector<PathRecord> sbr_search(const TraceGeometry &g, const Vec3 &tx, const Vec3 &rx,
                                          const TraceLimits &limits)
{
    std::vector<PathRecord> out;
    std::set<std::vector<int>> seen;

    const int n = limits.sbr_ray_count;
    const double spacing = std::sqrt(4.0 * kPi / n);
    const double far = 16.0 * (g.lx + g.ly + 1000.0);

    auto try_sequence = [&](const std::vector<const Facet *> &seq) {
        std::vector<int> key;
        key.reserve(seq.size());
        for (auto *f : seq)
            key.push_back(f->id);
        if (seen.count(key))
            return;
        std::vector<Vec3> images;
        Vec3 img = tx;
        for (auto *f : seq) {
            img = f->mirror(img);
            images.push_back(img);
        }
        if (auto rec = build_path(g, seq, images, tx, rx)) {
            seen.insert(key);
            out.push_back(std::move(*rec));
        }
    };

    std::vector<const Facet *> seq;
    try_sequence(seq); // LoS
    for (int i = 0; i < n; ++i) {
        Vec3 pos = tx;
        Vec3 dir = fibonacci_dir(i, n);
        double traveled = 0;
        seq.clear();
        for (int bounce = 0; bounce <= limits.max_order; ++bounce) {
            // Nearest facet hit along the open ray.
            double best_t = std::numeric_limits<double>::infinity();
            const Facet *best_f = nullptr;
            Vec3 end = pos + dir * far;
            for (const auto &f : g.facets) {
                double t = segment_facet_hit(pos + dir * 1e-6, end, f, 1e-12, kEdgeTol);
                if (t > 0 && t < best_t && f.signed_dist(pos) > 0) {
                    best_t = t;
                    best_f = &f;
                }
            }
            Vec3 leg_end = best_f ? (pos + dir * 1e-6) + best_t * (end - (pos + dir * 1e-6)) : end;
            // Solid occluders clip the leg.
            for (const auto &box : g.boxes) {
                Vec3 a = pos + dir * 1e-6;
                double chord = segment_box_chord(a, leg_end, box);
                if (chord > kBlockChord) {
                    // Shorten to the entry point.
                    Vec3 d2 = leg_end - a;
                    double t0 = 1.0, t1 = 0.0;
                    // Recompute entry parameter with the slab method.
                    double lo = 0.0, hi = 1.0;
                    const double *av = &a.x, *dv = &d2.x, *lov = &box.lo.x, *hiv = &box.hi.x;
                    bool okk = true;
                    for (int ax = 0; ax < 3; ++ax) {
                        if (std::fabs(dv[ax]) < 1e-300) {
                            if (av[ax] < lov[ax] || av[ax] > hiv[ax])
                                okk = false;
                        } else {
                            double inv = 1.0 / dv[ax];
                            double ta = (lov[ax] - av[ax]) * inv;
                            double tb = (hiv[ax] - av[ax]) * inv;
                            if (ta > tb)
                                std::swap(ta, tb);
                            lo = std::max(lo, ta);
                            hi = std::min(hi, tb);
                        }
                    }
                    (void)t0;
                    (void)t1;
                    if (okk && lo < hi && lo > 0)
                        leg_end = a + lo * d2;
                }
            }
            // Capture test against this leg.
            double t_near;
            double dist_rx = point_segment_distance(rx, pos, leg_end, t_near);
            double reach = traveled + t_near * distance(pos, leg_end);
            double capture = limits.sbr_capture_scale * spacing * std::max(reach, 1.0);
            if (dist_rx < capture)
                try_sequence(seq);
            if (!best_f || bounce == limits.max_order)
                break;
            // Only continue if the reflection point was not clipped away.
            if (distance(leg_end, (pos + dir * 1e-6) + best_t * (end - (pos + dir * 1e-6))) >
                1e-6)
                break;
            traveled += distance(pos, leg_end);
            seq.push_back(best_f);
            pos = leg_end;
            dir = normalized(dir - 2.0 * dot(dir, best_f->normal) * best_f->normal);
        }
    }
    return out;
}

} // namespace rt

inline TraceResult trace_paths(const TraceGeometry &g, const Vec3 &tx, const Vec3 &rx,
                               const TraceLimits &limits)
{
    limits.validate();
    TraceResult res;
    if (g.point_in_solid(rx) || g.point_in_solid(tx)) {
        res.status = TraceStatus::occluded_endpoint;
        return res;
    }
    if (limits.mode == TraceMode::image_method) {
        ImageTree tree(g, tx, limits.max_order);
        tree.collect(rx, limits.max_order, res.paths);
    } else {
        res.paths = rt::sbr_search(g, tx, rx, limits);
    }
    rt::finalize_paths(res.paths, limits);
    return res;
}

inline TraceResult trace_paths(const Scene &s, const Vec3 &tx, const Vec3 &rx,
                               const TraceLimits &limits)
{
    return trace_paths(TraceGeometry::from_scene(s), tx, rx, limits);
}

// Per-cell sweep over a map; results are positionally stored and bitwise
// independent of the worker count. Receivers sit at cell centers at height
// rx_height; building-occupied cells get occluded_endpoint with no paths.
inline std::vector<TraceResult> trace_map(const TraceGeometry &g, const Vec3 &tx,
                                          const GridSpec &grid, const OccupancyMap &occ,
                                          const TraceLimits &limits, double rx_height)
{
    limits.validate();
    ImageTree tree(g, tx, limits.max_order);
    std::vector<TraceResult> results(size_t(grid.nx) * grid.ny);
    parallel_for(int64_t(grid.nx) * grid.ny, 64, [&](int64_t b, int64_t e) {
        for (int64_t idx = b; idx < e; ++idx) {
            int iy = int(idx / grid.nx);
            int ix = int(idx % grid.nx);
            TraceResult &r = results[size_t(idx)];
            if (occ.at(ix, iy)) {
                r.status = TraceStatus::occluded_endpoint;
                continue;
            }
            Vec3 rx{grid.cell_cx(ix), grid.cell_cy(iy), rx_height};
            if (g.point_in_solid(rx)) {
                r.status = TraceStatus::occluded_endpoint;
                continue;
            }
            tree.collect(rx, limits.max_order, r.paths);
            rt::finalize_paths(r.paths, limits);
        }
    });
    return results;
}

} // namespace xband
