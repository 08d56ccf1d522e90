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

#include <algorithm>
#include <cmath>
#include <limits>

#include "common.hpp"

namespace xband {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3 &o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3 &o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    bool operator==(const Vec3 &o) const { return x == o.x && y == o.y && z == o.z; }
};

inline Vec3 operator*(double s, const Vec3 &v) { return v * s; }
inline double dot(const Vec3 &a, const Vec3 &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3 &a, const Vec3 &b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3 &v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3 &v)
{
    double n = norm(v);
    return n > 0 ? v * (1.0 / n) : Vec3{0, 0, 0};
}
inline double distance(const Vec3 &a, const Vec3 &b) { return norm(a - b); }

// Azimuth in (-pi, pi], elevation in [-pi/2, pi/2] measured from the
// horizontal plane. dir need not be normalized.
inline void direction_angles(const Vec3 &dir, double &azimuth, double &elevation)
{
    azimuth = std::atan2(dir.y, dir.x);
    double h = std::hypot(dir.x, dir.y);
    elevation = std::atan2(dir.z, h);
}

inline Vec3 angles_to_direction(double azimuth, double elevation)
{
    double ce = std::cos(elevation);
    return {ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation)};
}

// Axis-aligned box.
struct Box3 {
    Vec3 lo, hi;

    bool contains(const Vec3 &p) const
    {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z &&
               p.z <= hi.z;
    }
};

// Length of the chord cut by `box` out of segment a-b. A graze along a face,
// edge or corner yields a chord of (numerically) zero length, so callers can
// apply the open-set blocking convention with a single threshold.
inline double segment_box_chord(const Vec3 &a, const Vec3 &b, const Box3 &box)
{
    Vec3 d = b - a;
    double t0 = 0.0, t1 = 1.0;
    const double *av = &a.x, *dv = &d.x, *lov = &box.lo.x, *hiv = &box.hi.x;
    for (int i = 0; i < 3; ++i) {
        if (std::fabs(dv[i]) < 1e-300) {
            if (av[i] < lov[i] || av[i] > hiv[i])
                return 0.0;
        } else {
            double inv = 1.0 / dv[i];
            double ta = (lov[i] - av[i]) * inv;
            double tb = (hiv[i] - av[i]) * inv;
            if (ta > tb)
                std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
            if (t0 >= t1)
                return 0.0;
        }
    }
    return (t1 - t0) * norm(d);
}

// Planar rectangular reflector. `center` with orthonormal in-plane axes u, v
// and half extents; normal = u x v defines the front side.
struct Facet {
    Vec3 center;
    Vec3 u, v;          // unit, mutually orthogonal
    double hu = 0, hv = 0; // half extents along u and v
    Vec3 normal;        // unit, u x v
    int material = 0;
    int id = -1;

    static Facet make(const Vec3 &center, const Vec3 &u_axis, double hu, const Vec3 &v_axis,
                      double hv, int material, int id)
    {
        Facet f;
        f.center = center;
        f.u = normalized(u_axis);
        f.v = normalized(v_axis);
        f.hu = hu;
        f.hv = hv;
        f.normal = normalized(cross(f.u, f.v));
        f.material = material;
        f.id = id;
        return f;
    }

    double signed_dist(const Vec3 &p) const { return dot(p - center, normal); }

    bool contains(const Vec3 &p, double tol) const
    {
        Vec3 r = p - center;
        return std::fabs(dot(r, u)) <= hu + tol && std::fabs(dot(r, v)) <= hv + tol;
    }

    Vec3 mirror(const Vec3 &p) const { return p - 2.0 * signed_dist(p) * normal; }
};

// Intersection parameter of segment a-b with the facet plane, if the segment
// crosses it and the hit lies on the rectangle. Returns t in (tol_t, 1-tol_t)
// or a negative value when there is no acceptable hit.
inline double segment_facet_hit(const Vec3 &a, const Vec3 &b, const Facet &f, double tol_t,
                                double tol_in)
{
    double sa = f.signed_dist(a);
    double sb = f.signed_dist(b);
    if ((sa > 0) == (sb > 0))
        return -1.0;
    double denom = sa - sb;
    if (std::fabs(denom) < 1e-300)
        return -1.0;
    double t = sa / denom;
    if (t <= tol_t || t >= 1.0 - tol_t)
        return -1.0;
    Vec3 p = a + t * (b - a);
    if (!f.contains(p, tol_in))
        return -1.0;
    return t;
}

// 2D axis-aligned rectangle (building footprint).
struct Rect2 {
    double x = 0, y = 0, w = 0, d = 0;

    bool contains_closed(double px, double py) const
    {
        return px >= x && px <= x + w && py >= y && py <= y + d;
    }

    bool interior_overlaps(const Rect2 &o) const
    {
        return x < o.x + o.w && o.x < x + w && y < o.y + o.d && o.y < y + d;
    }
};

} // namespace xband
