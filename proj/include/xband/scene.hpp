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

#include <complex>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace xband {

// Dielectric described by the ITU-style parametrization
//   eps_r (real relative permittivity), sigma(f) = sigma_c * f_GHz^sigma_e [S/m]
// evaluated as eta(f) = eps_r - j 60 lambda sigma(f).
struct Material {
    std::string name;
    double eps_r = 1.0;
    double sigma_c = 0.0;
    double sigma_e = 0.0;

    double conductivity(double freq_hz) const
    {
        double f_ghz = freq_hz * 1e-9;
        return sigma_c * std::pow(f_ghz, sigma_e);
    }

    std::complex<double> eta(double freq_hz) const
    {
        double lambda = kSpeedOfLight / freq_hz;
        return {eps_r, -60.0 * lambda * conductivity(freq_hz)};
    }

    bool operator==(const Material &o) const
    {
        return name == o.name && eps_r == o.eps_r && sigma_c == o.sigma_c && sigma_e == o.sigma_e;
    }
};

// ITU-recommended concrete parametrization; the library default.
inline Material default_concrete()
{
    return {"concrete", 5.24, 0.0462, 0.7822};
}

struct Building {
    double x = 0, y = 0; // footprint corner, meters
    double w = 0, d = 0; // width (x) and depth (y), meters
    double h = 0;        // height, meters
    int material = 0;    // index into Scene::materials

    Rect2 footprint() const { return {x, y, w, d}; }
    Box3 box() const { return {{x, y, 0.0}, {x + w, y + d, h}}; }

    bool operator==(const Building &o) const
    {
        return x == o.x && y == o.y && w == o.w && d == o.d && h == o.h && material == o.material;
    }
};

struct Scene {
    double lx = 0, ly = 0; // extent, meters
    uint64_t seed = 0;     // seed the scene was generated from (0 if authored)
    std::vector<Material> materials;
    int ground_material = 0;
    std::vector<Building> buildings;

    int material_index(std::string_view name) const
    {
        for (size_t i = 0; i < materials.size(); ++i)
            if (materials[i].name == name)
                return int(i);
        return -1;
    }

    bool operator==(const Scene &o) const
    {
        return lx == o.lx && ly == o.ly && seed == o.seed && materials == o.materials &&
               ground_material == o.ground_material && buildings == o.buildings;
    }
};

struct GridSpec {
    double res = 1.0; // meters per cell
    int nx = 0, ny = 0;
    double ox = 0, oy = 0; // map origin, meters

    double cell_cx(int ix) const { return ox + (ix + 0.5) * res; }
    double cell_cy(int iy) const { return oy + (iy + 0.5) * res; }

    static GridSpec for_scene(const Scene &s, int nx, int ny)
    {
        GridSpec g;
        g.nx = nx;
        g.ny = ny;
        g.res = s.lx / nx;
        double ry = s.ly / ny;
        if (std::fabs(g.res - ry) > 1e-9 * std::max(g.res, ry))
            throw DataError(strf("grid %dx%d is not square-celled for extent %g x %g", nx, ny,
                                 s.lx, s.ly));
        return g;
    }

    void validate_against(const Scene &s) const
    {
        if (nx <= 0 || ny <= 0 || res <= 0)
            throw DataError("grid spec has non-positive dimensions");
        if (std::fabs(nx * res - s.lx) > 1e-9 * s.lx || std::fabs(ny * res - s.ly) > 1e-9 * s.ly)
            throw DataError(strf("grid %dx%d @ %g m does not tile extent %g x %g m", nx, ny, res,
                                 s.lx, s.ly));
    }
};

// Binary building map: 1 where the cell center lies inside some footprint
// (closed boundaries), 0 elsewhere.
struct OccupancyMap {
    GridSpec grid;
    std::vector<uint8_t> values; // row-major (y, x)

    uint8_t at(int ix, int iy) const { return values[size_t(iy) * grid.nx + ix]; }
    size_t count_occupied() const
    {
        size_t n = 0;
        for (auto v : values)
            n += v;
        return n;
    }
};

inline OccupancyMap rasterize_occupancy(const Scene &scene, const GridSpec &grid)
{
    grid.validate_against(scene);
    OccupancyMap m;
    m.grid = grid;
    m.values.assign(size_t(grid.nx) * grid.ny, 0);
    for (int iy = 0; iy < grid.ny; ++iy) {
        double cy = grid.cell_cy(iy);
        for (int ix = 0; ix < grid.nx; ++ix) {
            double cx = grid.cell_cx(ix);
            for (const auto &b : scene.buildings) {
                if (b.footprint().contains_closed(cx, cy)) {
                    m.values[size_t(iy) * grid.nx + ix] = 1;
                    break;
                }
            }
        }
    }
    return m;
}

// ----------------------------------------------------------------------
// Procedural generation
// ----------------------------------------------------------------------

struct SceneGenParams {
    double density = 0.2;     // target fraction of area covered by footprints
    double min_side = 8.0;    // footprint side range, meters
    double max_side = 30.0;
    double min_height = 8.0;  // meters
    double max_height = 25.0;
    double margin = 2.0;      // keep-out border inside the extent, meters
    int max_rejects = 4000;   // consecutive failed placements before giving up
};

inline Scene generate_scene(uint64_t seed, const SceneGenParams &p, double lx, double ly)
{
    if (lx <= 0 || ly <= 0)
        throw ConfigError("scene extent must be positive");
    if (p.min_side <= 0 || p.max_side < p.min_side || p.min_height <= 0 ||
        p.max_height < p.min_height || p.density < 0)
        throw ConfigError("scene generator parameter ranges must be positive");

    Scene s;
    s.lx = lx;
    s.ly = ly;
    s.seed = seed;
    s.materials = {default_concrete()};
    s.ground_material = 0;

    Rng rng(seed);
    const double area = lx * ly;
    double covered = 0.0;
    int rejects = 0;
    while (covered < p.density * area) {
        double w = rng.uniform(p.min_side, std::min(p.max_side, lx - 2 * p.margin));
        double d = rng.uniform(p.min_side, std::min(p.max_side, ly - 2 * p.margin));
        double x = rng.uniform(p.margin, lx - p.margin - w);
        double y = rng.uniform(p.margin, ly - p.margin - d);
        double h = rng.uniform(p.min_height, p.max_height);
        Building b{x, y, w, d, h, 0};
        bool ok = true;
        for (const auto &e : s.buildings)
            if (e.footprint().interior_overlaps(b.footprint())) {
                ok = false;
                break;
            }
        if (!ok) {
            if (++rejects > p.max_rejects)
                throw DataError(strf("building density %.3f infeasible: %d consecutive "
                                     "rejections at coverage %.3f",
                                     p.density, rejects, covered / area));
            continue;
        }
        rejects = 0;
        s.buildings.push_back(b);
        covered += w * d;
    }
    return s;
}

// ----------------------------------------------------------------------
// Scene document (structured text, versioned)
// ----------------------------------------------------------------------
//
//   format_version 1
//   extent <lx> <ly>
//   seed <u64>
//   material name=<id> eps_r=<f> sigma_c=<f> sigma_e=<f>
//   ground_material <name>
//   building x=<f> y=<f> w=<f> d=<f> h=<f> material=<name>

inline std::string serialize_scene(const Scene &s)
{
    std::ostringstream os;
    os << "format_version 1\n";
    os << "extent " << fmt_double(s.lx) << " " << fmt_double(s.ly) << "\n";
    os << "seed " << s.seed << "\n";
    for (const auto &m : s.materials)
        os << "material name=" << m.name << " eps_r=" << fmt_double(m.eps_r)
           << " sigma_c=" << fmt_double(m.sigma_c) << " sigma_e=" << fmt_double(m.sigma_e)
           << "\n";
    os << "ground_material " << s.materials[size_t(s.ground_material)].name << "\n";
    for (const auto &b : s.buildings)
        os << "building x=" << fmt_double(b.x) << " y=" << fmt_double(b.y)
           << " w=" << fmt_double(b.w) << " d=" << fmt_double(b.d) << " h=" << fmt_double(b.h)
           << " material=" << s.materials[size_t(b.material)].name << "\n";
    return os.str();
}

namespace detail {

inline std::map<std::string, std::string> parse_kv_fields(const std::string &rest, int line_no,
                                                          const char *record)
{
    std::map<std::string, std::string> kv;
    std::istringstream is(rest);
    std::string tok;
    while (is >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw DataError(strf("scene line %d: %s field '%s' is not key=value", line_no,
                                 record, tok.c_str()));
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

inline std::string require_field(const std::map<std::string, std::string> &kv,
                                 const std::string &key, int line_no, const char *record)
{
    auto it = kv.find(key);
    if (it == kv.end())
        throw DataError(strf("scene line %d: %s is missing field '%s'", line_no, record,
                             key.c_str()));
    return it->second;
}

inline double parse_num(const std::string &s, int line_no, const std::string &key)
{
    size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception &) {
        throw DataError(strf("scene line %d: field '%s' has non-numeric value '%s'", line_no,
                             key.c_str(), s.c_str()));
    }
    if (pos != s.size())
        throw DataError(strf("scene line %d: field '%s' has trailing characters in '%s'", line_no,
                             key.c_str(), s.c_str()));
    return v;
}

} // namespace detail

inline Scene parse_scene(const std::string &text)
{
    Scene s;
    bool have_version = false, have_extent = false;
    std::string ground_name;
    std::vector<std::pair<Building, std::string>> pending; // building + material name
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key))
            continue;
        std::string rest;
        std::getline(ls, rest);
        if (key == "format_version") {
            int v = int(detail::parse_num(rest.substr(rest.find_first_not_of(' ')), line_no, key));
            if (v != 1)
                throw DataError(strf("scene line %d: unsupported format_version %d", line_no, v));
            have_version = true;
        } else if (key == "extent") {
            std::istringstream rs(rest);
            if (!(rs >> s.lx >> s.ly))
                throw DataError(strf("scene line %d: extent requires two numbers", line_no));
            have_extent = true;
        } else if (key == "seed") {
            std::istringstream rs(rest);
            if (!(rs >> s.seed))
                throw DataError(strf("scene line %d: seed requires an integer", line_no));
        } else if (key == "material") {
            auto kv = detail::parse_kv_fields(rest, line_no, "material");
            Material m;
            m.name = detail::require_field(kv, "name", line_no, "material");
            m.eps_r = detail::parse_num(detail::require_field(kv, "eps_r", line_no, "material"),
                                        line_no, "eps_r");
            m.sigma_c = detail::parse_num(
                detail::require_field(kv, "sigma_c", line_no, "material"), line_no, "sigma_c");
            m.sigma_e = detail::parse_num(
                detail::require_field(kv, "sigma_e", line_no, "material"), line_no, "sigma_e");
            if (m.eps_r < 1.0)
                throw DataError(strf("scene line %d: material '%s' has eps_r < 1", line_no,
                                     m.name.c_str()));
            if (m.sigma_c < 0.0)
                throw DataError(strf("scene line %d: material '%s' has negative sigma_c", line_no,
                                     m.name.c_str()));
            s.materials.push_back(m);
        } else if (key == "ground_material") {
            std::istringstream rs(rest);
            rs >> ground_name;
        } else if (key == "building") {
            auto kv = detail::parse_kv_fields(rest, line_no, "building");
            Building b;
            b.x = detail::parse_num(detail::require_field(kv, "x", line_no, "building"), line_no,
                                    "x");
            b.y = detail::parse_num(detail::require_field(kv, "y", line_no, "building"), line_no,
                                    "y");
            b.w = detail::parse_num(detail::require_field(kv, "w", line_no, "building"), line_no,
                                    "w");
            b.d = detail::parse_num(detail::require_field(kv, "d", line_no, "building"), line_no,
                                    "d");
            b.h = detail::parse_num(detail::require_field(kv, "h", line_no, "building"), line_no,
                                    "h");
            pending.emplace_back(b, detail::require_field(kv, "material", line_no, "building"));
        } else {
            throw DataError(strf("scene line %d: unknown record '%s'", line_no, key.c_str()));
        }
    }
    if (!have_version)
        throw DataError("scene document is missing field 'format_version'");
    if (!have_extent)
        throw DataError("scene document is missing field 'extent'");
    if (s.lx <= 0 || s.ly <= 0)
        throw DataError("scene extent must be positive");
    if (s.materials.empty())
        throw DataError("scene document declares no materials");

    if (!ground_name.empty()) {
        s.ground_material = s.material_index(ground_name);
        if (s.ground_material < 0)
            throw DataError(strf("ground_material references unknown material '%s'",
                                 ground_name.c_str()));
    }
    for (auto &[b, mat_name] : pending) {
        int mi = s.material_index(mat_name);
        if (mi < 0)
            throw DataError(strf("building references unknown material '%s'", mat_name.c_str()));
        Building nb = b;
        nb.material = mi;
        if (nb.w <= 0 || nb.d <= 0 || nb.h <= 0)
            throw DataError(strf("building at (%g, %g) has non-positive dimensions", nb.x, nb.y));
        if (nb.x < 0 || nb.y < 0 || nb.x + nb.w > s.lx || nb.y + nb.d > s.ly)
            throw DataError(strf("building at (%g, %g) extends outside the scene extent", nb.x,
                                 nb.y));
        s.buildings.push_back(nb);
    }
    for (size_t i = 0; i < s.buildings.size(); ++i)
        for (size_t j = i + 1; j < s.buildings.size(); ++j)
            if (s.buildings[i].footprint().interior_overlaps(s.buildings[j].footprint()))
                throw DataError(strf("buildings %zu and %zu overlap", i, j));
    return s;
}

} // namespace xband
