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

#include <bit>
#include <cstdio>
#include <fstream>

#include <zlib.h>

#include "dataset.hpp"

namespace xband {

// Dataset container: little-endian, CRC-checked per sample.
//
//   header { magic "CIRX", format_version u32, kind u32, nx u32, ny u32,
//            L u32, c_in u32, c_out u32, res f64, sample_count u64,
//            config_digest u64 }
//   sample { scene_id u32, scene_seed u64, sample_seed u64,
//            bs f64[3], boresight f64, rx_height f64,
//            valid u8[ny*nx], m i8[ny*nx*L],
//            tau/aod_h/aod_v/aoa_h/aoa_v/phase_out f32[ny*nx*L],
//            inputs f32[ny*nx*c_in], targets f32[ny*nx*c_out],
//            crc32 u32 over everything above }

namespace container {

inline constexpr char kMagic[4] = {'C', 'I', 'R', 'X'};
inline constexpr uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

class Writer {
  public:
    explicit Writer(std::vector<uint8_t> &buf) : buf_(buf) {}

    template <class T> void put(const T &v)
    {
        const auto *p = reinterpret_cast<const uint8_t *>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }
    template <class T> void put_array(const std::vector<T> &v)
    {
        const auto *p = reinterpret_cast<const uint8_t *>(v.data());
        buf_.insert(buf_.end(), p, p + v.size() * sizeof(T));
    }

  private:
    std::vector<uint8_t> &buf_;
};

class Reader {
  public:
    Reader(const uint8_t *data, size_t n) : p_(data), end_(data + n) {}

    template <class T> T get()
    {
        if (p_ + sizeof(T) > end_)
            throw DataError("dataset container truncated");
        T v;
        std::memcpy(&v, p_, sizeof(T));
        p_ += sizeof(T);
        return v;
    }
    template <class T> void get_array(std::vector<T> &v, size_t count)
    {
        if (p_ + count * sizeof(T) > end_)
            throw DataError("dataset container truncated");
        v.resize(count);
        std::memcpy(v.data(), p_, count * sizeof(T));
        p_ += count * sizeof(T);
    }
    const uint8_t *pos() const { return p_; }
    size_t remaining() const { return size_t(end_ - p_); }

  private:
    const uint8_t *p_;
    const uint8_t *end_;
};

} // namespace container

inline void write_dataset(const std::string &path, const std::vector<Sample> &samples,
                          const FeatureConfig &cfg)
{
    if (samples.empty())
        throw DataError("write_dataset: no samples");
    const Sample &first = samples[0];
    for (const auto &s : samples)
        if (s.nx != first.nx || s.ny != first.ny || s.L != first.L || s.c_in != first.c_in ||
            s.c_out != first.c_out || s.kind != first.kind)
            throw DataError("write_dataset: inhomogeneous samples");

    std::vector<uint8_t> buf;
    container::Writer w(buf);
    buf.insert(buf.end(), container::kMagic, container::kMagic + 4);
    w.put<uint32_t>(container::kVersion);
    w.put<uint32_t>(uint32_t(first.kind));
    w.put<uint32_t>(uint32_t(first.nx));
    w.put<uint32_t>(uint32_t(first.ny));
    w.put<uint32_t>(uint32_t(first.L));
    w.put<uint32_t>(uint32_t(first.c_in));
    w.put<uint32_t>(uint32_t(first.c_out));
    w.put<double>(first.res);
    w.put<uint64_t>(uint64_t(samples.size()));
    w.put<uint64_t>(cfg.digest());

    for (const auto &s : samples) {
        size_t start = buf.size();
        w.put<uint32_t>(s.meta.scene_id);
        w.put<uint64_t>(s.meta.scene_seed);
        w.put<uint64_t>(s.meta.sample_seed);
        w.put<double>(s.meta.bs.x);
        w.put<double>(s.meta.bs.y);
        w.put<double>(s.meta.bs.z);
        w.put<double>(s.meta.boresight);
        w.put<double>(s.meta.rx_height);
        w.put_array(s.valid);
        w.put_array(s.meta.m);
        w.put_array(s.meta.tau);
        w.put_array(s.meta.aod_h);
        w.put_array(s.meta.aod_v);
        w.put_array(s.meta.aoa_h);
        w.put_array(s.meta.aoa_v);
        w.put_array(s.meta.phase_out);
        w.put_array(s.inputs);
        w.put_array(s.targets);
        uint32_t crc = uint32_t(::crc32(0, buf.data() + start, uInt(buf.size() - start)));
        w.put<uint32_t>(crc);
    }

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw DataError(strf("cannot open '%s' for writing", path.c_str()));
    os.write(reinterpret_cast<const char *>(buf.data()), std::streamsize(buf.size()));
    if (!os)
        throw DataError(strf("short write to '%s'", path.c_str()));
}

inline std::vector<Sample> read_dataset(const std::string &path, const FeatureConfig *cfg = nullptr)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw DataError(strf("cannot open dataset '%s'", path.c_str()));
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(is)),
                             std::istreambuf_iterator<char>());
    if (buf.size() < 4 || std::memcmp(buf.data(), container::kMagic, 4) != 0)
        throw DataError(strf("'%s' is not a dataset container (bad magic)", path.c_str()));
    container::Reader r(buf.data() + 4, buf.size() - 4);
    uint32_t version = r.get<uint32_t>();
    if (version != container::kVersion)
        throw DataError(strf("dataset '%s' has format_version %u, reader supports %u",
                             path.c_str(), version, container::kVersion));
    DatasetKind kind = DatasetKind(r.get<uint32_t>());
    uint32_t nx = r.get<uint32_t>(), ny = r.get<uint32_t>(), L = r.get<uint32_t>();
    uint32_t c_in = r.get<uint32_t>(), c_out = r.get<uint32_t>();
    double res = r.get<double>();
    uint64_t count = r.get<uint64_t>();
    uint64_t digest = r.get<uint64_t>();
    if (cfg && digest != cfg->digest())
        throw DataError(strf("dataset '%s' was built with a different feature config "
                             "(digest %016llx vs %016llx)",
                             path.c_str(), (unsigned long long)digest,
                             (unsigned long long)cfg->digest()));

    std::vector<Sample> out;
    out.reserve(count);
    const size_t cells = size_t(nx) * ny;
    for (uint64_t i = 0; i < count; ++i) {
        Sample s;
        s.kind = kind;
        s.nx = int(nx);
        s.ny = int(ny);
        s.L = int(L);
        s.c_in = int(c_in);
        s.c_out = int(c_out);
        s.res = res;
        const uint8_t *start = r.pos();
        s.meta.scene_id = r.get<uint32_t>();
        s.meta.scene_seed = r.get<uint64_t>();
        s.meta.sample_seed = r.get<uint64_t>();
        s.meta.bs.x = r.get<double>();
        s.meta.bs.y = r.get<double>();
        s.meta.bs.z = r.get<double>();
        s.meta.boresight = r.get<double>();
        s.meta.rx_height = r.get<double>();
        r.get_array(s.valid, cells);
        r.get_array(s.meta.m, cells * L);
        r.get_array(s.meta.tau, cells * L);
        r.get_array(s.meta.aod_h, cells * L);
        r.get_array(s.meta.aod_v, cells * L);
        r.get_array(s.meta.aoa_h, cells * L);
        r.get_array(s.meta.aoa_v, cells * L);
        r.get_array(s.meta.phase_out, cells * L);
        r.get_array(s.inputs, cells * c_in);
        r.get_array(s.targets, cells * c_out);
        uint32_t expect = uint32_t(::crc32(0, start, uInt(r.pos() - start)));
        uint32_t crc = r.get<uint32_t>();
        if (crc != expect)
            throw DataError(strf("dataset '%s': sample %llu failed its CRC check", path.c_str(),
                                 (unsigned long long)i));
        out.push_back(std::move(s));
    }
    return out;
}

// ----------------------------------------------------------------------
// Path dump: one record per traced path, little-endian, versioned.
//   header { magic "XPTH", version u32, path_count u64 }
//   path   { d f64, tau f64, aod_az/aod_el/aoa_az/aoa_el f64, tx f64[3],
//            rx f64[3], n_inter u32, inter { kind u8, point f64[3],
//            normal f64[3], theta0 f64, material i32, facet i32,
//            chi1 f64, chi2 f64 } }
//   crc32 u32 over everything after the magic
// ----------------------------------------------------------------------

namespace pathdump {
inline constexpr char kMagic[4] = {'X', 'P', 'T', 'H'};
inline constexpr uint32_t kVersion = 1;
} // namespace pathdump

inline void write_path_dump(const std::string &path, const std::vector<PathRecord> &paths)
{
    std::vector<uint8_t> buf;
    container::Writer w(buf);
    buf.insert(buf.end(), pathdump::kMagic, pathdump::kMagic + 4);
    w.put<uint32_t>(pathdump::kVersion);
    w.put<uint64_t>(paths.size());
    for (const auto &p : paths) {
        w.put<double>(p.d);
        w.put<double>(p.tau);
        w.put<double>(p.aod_az);
        w.put<double>(p.aod_el);
        w.put<double>(p.aoa_az);
        w.put<double>(p.aoa_el);
        for (double v : {p.tx.x, p.tx.y, p.tx.z, p.rx.x, p.rx.y, p.rx.z})
            w.put<double>(v);
        w.put<uint32_t>(uint32_t(p.interactions.size()));
        for (const auto &ia : p.interactions) {
            w.put<uint8_t>(uint8_t(ia.kind == InteractionKind::diffuse_scatter ? 1 : 0));
            for (double v : {ia.point.x, ia.point.y, ia.point.z, ia.normal.x, ia.normal.y,
                             ia.normal.z})
                w.put<double>(v);
            w.put<double>(ia.theta0);
            w.put<int32_t>(ia.material);
            w.put<int32_t>(ia.facet_id);
            w.put<double>(ia.chi1);
            w.put<double>(ia.chi2);
        }
    }
    uint32_t crc = uint32_t(::crc32(0, buf.data() + 4, uInt(buf.size() - 4)));
    w.put<uint32_t>(crc);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw DataError(strf("cannot open '%s' for writing", path.c_str()));
    os.write(reinterpret_cast<const char *>(buf.data()), std::streamsize(buf.size()));
}

inline std::vector<PathRecord> read_path_dump(const std::string &path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw DataError(strf("cannot open path dump '%s'", path.c_str()));
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(is)),
                             std::istreambuf_iterator<char>());
    if (buf.size() < 8 || std::memcmp(buf.data(), pathdump::kMagic, 4) != 0)
        throw DataError(strf("'%s' is not a path dump (bad magic)", path.c_str()));
    {
        uint32_t expect = uint32_t(::crc32(0, buf.data() + 4, uInt(buf.size() - 8)));
        uint32_t stored;
        std::memcpy(&stored, buf.data() + buf.size() - 4, 4);
        if (expect != stored)
            throw DataError(strf("path dump '%s' failed its CRC check", path.c_str()));
    }
    container::Reader r(buf.data() + 4, buf.size() - 8);
    uint32_t version = r.get<uint32_t>();
    if (version != pathdump::kVersion)
        throw DataError(strf("path dump '%s' has version %u, reader supports %u", path.c_str(),
                             version, pathdump::kVersion));
    uint64_t count = r.get<uint64_t>();
    std::vector<PathRecord> out;
    out.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        PathRecord p;
        p.d = r.get<double>();
        p.tau = r.get<double>();
        p.aod_az = r.get<double>();
        p.aod_el = r.get<double>();
        p.aoa_az = r.get<double>();
        p.aoa_el = r.get<double>();
        p.tx = {r.get<double>(), r.get<double>(), r.get<double>()};
        p.rx = {r.get<double>(), r.get<double>(), r.get<double>()};
        p.r_tx = angles_to_direction(p.aod_az, p.aod_el);
        p.r_rx = angles_to_direction(p.aoa_az, p.aoa_el);
        uint32_t ni = r.get<uint32_t>();
        for (uint32_t m = 0; m < ni; ++m) {
            Interaction ia;
            ia.kind = r.get<uint8_t>() ? InteractionKind::diffuse_scatter
                                       : InteractionKind::specular_reflection;
            ia.point = {r.get<double>(), r.get<double>(), r.get<double>()};
            ia.normal = {r.get<double>(), r.get<double>(), r.get<double>()};
            ia.theta0 = r.get<double>();
            ia.material = int(r.get<int32_t>());
            ia.facet_id = int(r.get<int32_t>());
            ia.chi1 = r.get<double>();
            ia.chi2 = r.get<double>();
            p.interactions.push_back(ia);
        }
        out.push_back(std::move(p));
    }
    return out;
}

// File fingerprint used in run manifests.
inline uint32_t file_crc32(const std::string &path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw DataError(strf("cannot open '%s'", path.c_str()));
    uint32_t crc = uint32_t(::crc32(0, nullptr, 0));
    char chunk[1 << 16];
    while (is.read(chunk, sizeof(chunk)) || is.gcount() > 0)
        crc = uint32_t(::crc32(crc, reinterpret_cast<const Bytef *>(chunk), uInt(is.gcount())));
    return crc;
}

} // namespace xband
