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

#include "train.hpp"

namespace xband {

// Shannon-capacity MIMO-OFDM link model: no coding, scheduling or HARQ.
struct MimoConfig {
    int nt = 4, nr = 4;
    double bandwidth_hz = 100e6;
    int n_sc = 64;          // evaluation tones across the bandwidth
    double carrier_hz = 7e9;
    double rho = 0.0;       // transmit SNR factor; 0 = derive from edge_distance_m
    double edge_distance_m = 200.0; // cell edge where free-space SISO SNR = 0 dB

    void validate() const
    {
        if (nt < 1 || nr < 1 || n_sc < 1 || bandwidth_hz <= 0 || carrier_hz <= 0)
            throw ConfigError("mimo config requires positive dimensions");
    }

    double effective_rho() const
    {
        if (rho > 0)
            return rho;
        double lambda = kSpeedOfLight / carrier_hz;
        double h_edge = lambda / (4.0 * kPi * edge_distance_m);
        return 1.0 / (h_edge * h_edge);
    }

    // Half-wavelength ULAs, horizontal, orthogonal orientations.
    ArrayGeometry tx_array() const
    {
        return ArrayGeometry::ula(nt, 0.5 * kSpeedOfLight / carrier_hz, {0, 1, 0});
    }
    ArrayGeometry rx_array() const
    {
        return ArrayGeometry::ula(nr, 0.5 * kSpeedOfLight / carrier_hz, {1, 0, 0});
    }

    std::vector<double> tone_offsets() const
    {
        std::vector<double> f(static_cast<size_t>(n_sc));
        for (int n = 0; n < n_sc; ++n)
            f[size_t(n)] = (n - (n_sc - 1) / 2.0) * bandwidth_hz / n_sc;
        return f;
    }
};

namespace commap_detail {

// log2 det(I + a H H^H) via in-place Cholesky of the Hermitian PD matrix.
inline double log2det_i_plus(const std::vector<cplx> &h, int nr, int nt, double a)
{
    std::vector<cplx> m(size_t(nr) * nr, cplx(0, 0));
    for (int i = 0; i < nr; ++i) {
        for (int j = 0; j < nr; ++j) {
            cplx s(0, 0);
            for (int k = 0; k < nt; ++k)
                s += h[size_t(i) * nt + k] * std::conj(h[size_t(j) * nt + k]);
            m[size_t(i) * nr + j] = a * s + (i == j ? cplx(1, 0) : cplx(0, 0));
        }
    }
    double log2det = 0;
    for (int i = 0; i < nr; ++i) {
        for (int j = 0; j <= i; ++j) {
            cplx s = m[size_t(i) * nr + j];
            for (int k = 0; k < j; ++k)
                s -= m[size_t(i) * nr + k] * std::conj(m[size_t(j) * nr + k]);
            if (i == j) {
                double d = s.real();
                if (d <= 0)
                    throw NumericError("log2det: matrix lost positive definiteness");
                double l = std::sqrt(d);
                m[size_t(i) * nr + j] = l;
                log2det += 2.0 * std::log2(l);
            } else {
                m[size_t(i) * nr + j] = s / m[size_t(j) * nr + j].real();
            }
        }
    }
    return log2det;
}

struct SlotChannel {
    cplx h0;      // center-element coefficient (patterns included)
    Vec3 r_tx, r_rx;
    double tau;
};

inline double capacity_mbps(const std::vector<SlotChannel> &slots, const MimoConfig &mimo)
{
    if (slots.empty())
        return 0.0;
    const auto tx = mimo.tx_array();
    const auto rx = mimo.rx_array();
    const double k = kTwoPi * mimo.carrier_hz / kSpeedOfLight;
    const int nt = mimo.nt, nr = mimo.nr;
    // Per-slot element coefficients.
    std::vector<cplx> elem(slots.size() * size_t(nr) * nt);
    for (size_t l = 0; l < slots.size(); ++l) {
        std::vector<cplx> st(static_cast<size_t>(nt)), sr(static_cast<size_t>(nr));
        for (int s = 0; s < nt; ++s)
            st[size_t(s)] = std::polar(1.0, k * dot(slots[l].r_tx, tx.element_offsets[size_t(s)]));
        for (int u = 0; u < nr; ++u)
            sr[size_t(u)] = std::polar(1.0, k * dot(slots[l].r_rx, rx.element_offsets[size_t(u)]));
        for (int u = 0; u < nr; ++u)
            for (int s = 0; s < nt; ++s)
                elem[(l * nr + u) * nt + s] = slots[l].h0 * sr[size_t(u)] * st[size_t(s)];
    }
    const double a = mimo.effective_rho() / nt;
    auto tones = mimo.tone_offsets();
    double bits_per_hz = 0;
    std::vector<cplx> h(size_t(nr) * nt);
    for (double fn : tones) {
        std::fill(h.begin(), h.end(), cplx(0, 0));
        for (size_t l = 0; l < slots.size(); ++l) {
            cplx rot = std::polar(1.0, wrap_pi(-kTwoPi * fn * slots[l].tau));
            const cplx *e = elem.data() + l * size_t(nr) * nt;
            for (size_t i = 0; i < size_t(nr) * nt; ++i)
                h[i] += e[i] * rot;
        }
        bits_per_hz += log2det_i_plus(h, nr, nt, a);
    }
    return mimo.bandwidth_hz / mimo.n_sc * bits_per_hz / 1e6;
}

} // namespace commap_detail

// Achievable rate for one receiver cell straight from traced paths.
inline double throughput_cell_mbps(const std::vector<PathRecord> &paths,
                                   const std::vector<Material> &materials,
                                   const AntennaPattern &tx_pattern, const MimoConfig &mimo,
                                   int max_slots)
{
    mimo.validate();
    std::vector<commap_detail::SlotChannel> slots;
    AntennaPattern rx_iso{};
    for (const auto &p : paths) {
        if (int(slots.size()) >= max_slots)
            break;
        commap_detail::SlotChannel sc;
        sc.h0 = path_coefficient(p, mimo.carrier_hz, tx_pattern, rx_iso, {0, 0, 0}, {0, 0, 0},
                                 materials);
        sc.r_tx = p.r_tx;
        sc.r_rx = p.r_rx;
        sc.tau = p.tau;
        slots.push_back(sc);
    }
    return commap_detail::capacity_mbps(slots, mimo);
}

// Same rate reconstructed from a stored gain sample's per-slot metadata
// (target-band gains, phases, angles, delays).
inline double throughput_cell_from_meta(const Sample &s, size_t cell, const MimoConfig &mimo)
{
    std::vector<commap_detail::SlotChannel> slots;
    for (int l = 0; l < s.L; ++l) {
        size_t mi = cell * size_t(s.L) + size_t(l);
        if (s.meta.m[mi] < 0)
            break;
        commap_detail::SlotChannel sc;
        double gain_db = double(s.targets[cell * size_t(s.c_out) + size_t(l)]);
        sc.h0 = std::polar(db_to_amp(gain_db), double(s.meta.phase_out[mi]));
        sc.r_tx = angles_to_direction(double(s.meta.aod_h[mi]), double(s.meta.aod_v[mi]));
        sc.r_rx = angles_to_direction(double(s.meta.aoa_h[mi]), double(s.meta.aoa_v[mi]));
        sc.tau = double(s.meta.tau[mi]);
        slots.push_back(sc);
    }
    return commap_detail::capacity_mbps(slots, mimo);
}

// Ground-truth throughput map from a gain sample; parallel over cells,
// occupied cells stay at 0 Mbps.
inline std::vector<double> throughput_map_mbps(const Sample &gain_sample, const MimoConfig &mimo)
{
    if (gain_sample.kind != DatasetKind::gain)
        throw DataError("throughput_map_mbps expects a gain sample");
    mimo.validate();
    std::vector<double> out(gain_sample.cell_count(), 0.0);
    parallel_for(int64_t(gain_sample.cell_count()), 64, [&](int64_t b, int64_t e) {
        for (int64_t i = b; i < e; ++i) {
            if (!gain_sample.valid[size_t(i)])
                continue;
            out[size_t(i)] = throughput_cell_from_meta(gain_sample, size_t(i), mimo);
        }
    });
    return out;
}

// The 120-channel input stack [P, tau, AoD_h, AoD_v, AoA_h, AoA_v] with the
// gain block taken either from ground truth or from a Gain-UNext prediction
// (pipeline mode). Targets carry the oracle throughput map in Mbps.
inline Sample assemble_commap_sample(const Sample &gain_sample,
                                     const std::vector<float> *predicted_gain_hwc,
                                     const MimoConfig &mimo, const FeatureConfig &cfg)
{
    if (gain_sample.kind != DatasetKind::gain)
        throw DataError("assemble_commap_sample expects a gain sample");
    const int L = gain_sample.L;
    if (predicted_gain_hwc &&
        predicted_gain_hwc->size() != gain_sample.cell_count() * size_t(L))
        throw DataError("assemble_commap_sample: prediction shape mismatch");

    Sample s;
    s.kind = DatasetKind::commap;
    s.nx = gain_sample.nx;
    s.ny = gain_sample.ny;
    s.res = gain_sample.res;
    s.L = L;
    s.c_in = FeatureConfig::commap_groups * L;
    s.c_out = 1;
    s.inputs.assign(s.cell_count() * size_t(s.c_in), 0.f);
    s.targets.assign(s.cell_count(), 0.f);
    s.valid = gain_sample.valid;
    s.meta = gain_sample.meta;

    auto tput = throughput_map_mbps(gain_sample, mimo);
    for (size_t cell = 0; cell < s.cell_count(); ++cell) {
        float *in = s.inputs.data() + cell * size_t(s.c_in);
        for (int l = 0; l < L; ++l) {
            size_t mi = cell * size_t(L) + size_t(l);
            bool filled = gain_sample.meta.m[mi] >= 0;
            double gain = predicted_gain_hwc
                              ? double((*predicted_gain_hwc)[cell * size_t(L) + size_t(l)])
                              : double(gain_sample.targets[cell * size_t(L) + size_t(l)]);
            in[0 * L + l] = filled ? float(gain) : float(cfg.gain_floor_db);
            in[1 * L + l] = gain_sample.meta.tau[mi];
            in[2 * L + l] = gain_sample.meta.aod_h[mi];
            in[3 * L + l] = gain_sample.meta.aod_v[mi];
            in[4 * L + l] = gain_sample.meta.aoa_h[mi];
            in[5 * L + l] = gain_sample.meta.aoa_v[mi];
        }
        s.targets[cell] = float(tput[cell]);
    }
    return s;
}

} // namespace xband
