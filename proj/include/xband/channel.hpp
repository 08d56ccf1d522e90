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

#include "antenna.hpp"
#include "raytrace.hpp"

namespace xband {

using cplx = std::complex<double>;

struct Mat2c {
    cplx m[2][2] = {{{0, 0}, {0, 0}}, {{0, 0}, {0, 0}}};

    static Mat2c identity()
    {
        Mat2c r;
        r.m[0][0] = r.m[1][1] = 1.0;
        return r;
    }

    static Mat2c diag(cplx a, cplx b)
    {
        Mat2c r;
        r.m[0][0] = a;
        r.m[1][1] = b;
        return r;
    }

    Mat2c operator*(const Mat2c &o) const
    {
        Mat2c r;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j];
        return r;
    }

    Mat2c operator*(cplx s) const
    {
        Mat2c r;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                r.m[i][j] = m[i][j] * s;
        return r;
    }

    // Spectral norm (largest singular value).
    double norm2() const
    {
        // Eigenvalues of the 2x2 Hermitian matrix A^H A.
        double a = std::norm(m[0][0]) + std::norm(m[1][0]);
        double d = std::norm(m[0][1]) + std::norm(m[1][1]);
        cplx b = std::conj(m[0][0]) * m[0][1] + std::conj(m[1][0]) * m[1][1];
        double tr = a + d;
        double det = a * d - std::norm(b);
        double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
        return std::sqrt(std::max(0.0, tr / 2.0 + disc));
    }
};

// Fresnel coefficients in the local incidence basis, e^{-jkd} convention
// (passive eta has non-positive imaginary part). theta0 measured from the
// surface normal.
inline cplx fresnel_te(cplx eta, double theta0)
{
    if (theta0 < 0 || theta0 >= kPi / 2)
        throw NumericError(strf("fresnel: incidence angle %g outside [0, pi/2)", theta0));
    double c = std::cos(theta0);
    double s = std::sin(theta0);
    cplx root = std::sqrt(eta - s * s);
    return (c - root) / (c + root);
}

inline cplx fresnel_tm(cplx eta, double theta0)
{
    if (theta0 < 0 || theta0 >= kPi / 2)
        throw NumericError(strf("fresnel: incidence angle %g outside [0, pi/2)", theta0));
    double c = std::cos(theta0);
    double s = std::sin(theta0);
    cplx root = std::sqrt(eta - s * s);
    return (eta * c - root) / (eta * c + root);
}

// Interaction matrix diag(R_TE, R_TM) in the local (perpendicular, parallel)
// basis of the bounce.
inline Mat2c fresnel_reflection(cplx eta, double theta0)
{
    return Mat2c::diag(fresnel_te(eta, theta0), fresnel_tm(eta, theta0));
}

namespace chan {

// Spherical transverse basis of a unit direction: (theta_hat, phi_hat) with
// theta_hat x phi_hat = dir.
inline void spherical_basis(const Vec3 &dir, Vec3 &theta_hat, Vec3 &phi_hat)
{
    double phi = std::atan2(dir.y, dir.x);
    double st = std::hypot(dir.x, dir.y); // sin(polar)
    double ct = dir.z;                    // cos(polar)
    double cp = std::cos(phi), sp = std::sin(phi);
    theta_hat = {ct * cp, ct * sp, -st};
    phi_hat = {-sp, cp, 0.0};
}

} // namespace chan

// Per-path transfer matrix: free-space amplitude and propagation phase times
// the ordered product of basis rotations and interaction matrices. Rows and
// columns are (vertical = theta, horizontal = phi) components at the rx
// arrival and tx departure directions.
inline Mat2c path_transfer_matrix(const PathRecord &path, double freq_hz,
                                  const std::vector<Material> &materials)
{
    if (path.d <= 0)
        throw NumericError("path_transfer_matrix: zero-length path");
    if (freq_hz <= 0)
        throw NumericError("path_transfer_matrix: carrier must be positive");

    const double lambda = kSpeedOfLight / freq_hz;
    const double k = kTwoPi / lambda;

    Vec3 e1, e2; // current transverse basis
    chan::spherical_basis(path.r_tx, e1, e2);
    Vec3 dir = path.r_tx;

    Mat2c jones = Mat2c::identity();
    for (const auto &ia : path.interactions) {
        Vec3 c = cross(dir, ia.normal);
        double cn = norm(c);
        Vec3 e_s, e_ip;
        if (cn < 1e-12) {
            // Normal incidence: the basis is degenerate, keep the current one.
            e_s = e1;
        } else {
            e_s = c * (1.0 / cn);
        }
        e_ip = normalized(cross(e_s, dir));
        Mat2c rot;
        rot.m[0][0] = dot(e_s, e1);
        rot.m[0][1] = dot(e_s, e2);
        rot.m[1][0] = dot(e_ip, e1);
        rot.m[1][1] = dot(e_ip, e2);

        cplx eta = materials[size_t(ia.material)].eta(freq_hz);
        Mat2c coef = fresnel_reflection(eta, ia.theta0);
        if (ia.kind == InteractionKind::diffuse_scatter) {
            coef.m[0][0] *= std::polar(1.0, ia.chi1);
            coef.m[1][1] *= std::polar(1.0, ia.chi2);
        }

        jones = coef * (rot * jones);

        Vec3 refl = normalized(dir - 2.0 * dot(dir, ia.normal) * ia.normal);
        e1 = e_s;
        e2 = normalized(cross(e_s, refl));
        dir = refl;
    }

    // Express the final field in the rx arrival basis (r_rx = -dir).
    Vec3 ta, pa;
    chan::spherical_basis(path.r_rx, ta, pa);
    Mat2c out;
    out.m[0][0] = dot(ta, e1);
    out.m[0][1] = dot(ta, e2);
    out.m[1][0] = dot(pa, e1);
    out.m[1][1] = dot(pa, e2);

    cplx fs = std::polar(lambda / (4.0 * kPi * path.d), wrap_pi(-k * path.d));
    return (out * jones) * fs;
}

// Complex path coefficient between one tx and one rx element. Field patterns
// are vertical-port amplitude patterns; element offsets are relative to the
// array phase centers.
inline cplx path_coefficient(const PathRecord &path, double freq_hz,
                             const AntennaPattern &tx_pattern, const AntennaPattern &rx_pattern,
                             const Vec3 &tx_offset, const Vec3 &rx_offset,
                             const std::vector<Material> &materials)
{
    Mat2c t = path_transfer_matrix(path, freq_hz, materials);
    double ftx = db_to_amp(antenna_gain_toward_db(path.aod_az, tx_pattern));
    double frx = db_to_amp(antenna_gain_toward_db(path.aoa_az, rx_pattern));
    cplx core = frx * t.m[0][0] * ftx; // vertical ports
    double k = kTwoPi * freq_hz / kSpeedOfLight;
    cplx steer = std::polar(1.0, k * dot(path.r_rx, rx_offset)) *
                 std::polar(1.0, k * dot(path.r_tx, tx_offset));
    return core * steer;
}

// Delay-domain channel between all element pairs at one carrier. Taps are
// sorted by delay; coincident delays (within 1e-15 s) merge by coefficient
// superposition so the tap delays are strictly increasing.
struct Cir {
    double carrier_hz = 0;
    int n_rx = 0, n_tx = 0;
    std::vector<double> tau;   // per tap
    std::vector<cplx> h;       // [tap][rx][tx]

    cplx at(int tap, int u, int s) const
    {
        return h[(size_t(tap) * n_rx + u) * n_tx + s];
    }
};

inline Cir assemble_cir(const std::vector<PathRecord> &paths, double freq_hz,
                        const ArrayGeometry &tx_array, const ArrayGeometry &rx_array,
                        const AntennaPattern &tx_pattern, const AntennaPattern &rx_pattern,
                        const std::vector<Material> &materials)
{
    Cir cir;
    cir.carrier_hz = freq_hz;
    cir.n_rx = rx_array.size();
    cir.n_tx = tx_array.size();
    const size_t pair_n = size_t(cir.n_rx) * cir.n_tx;
    for (const auto &p : paths) {
        bool merged = false;
        if (!cir.tau.empty() && std::fabs(p.tau - cir.tau.back()) <= 1e-15)
            merged = true;
        if (!merged) {
            cir.tau.push_back(p.tau);
            cir.h.resize(cir.h.size() + pair_n, cplx(0, 0));
        }
        size_t base = (cir.tau.size() - 1) * pair_n;
        for (int u = 0; u < cir.n_rx; ++u)
            for (int s = 0; s < cir.n_tx; ++s)
                cir.h[base + size_t(u) * cir.n_tx + s] +=
                    path_coefficient(p, freq_hz, tx_pattern, rx_pattern,
                                     tx_array.element_offsets[size_t(s)],
                                     rx_array.element_offsets[size_t(u)], materials);
    }
    return cir;
}

// Baseband frequency response H(f_n) = sum_l h_l e^{-j 2 pi f_n tau_l} per
// element pair; freqs are offsets from the carrier.
inline std::vector<cplx> frequency_response(const Cir &cir, const std::vector<double> &freqs)
{
    const size_t pair_n = size_t(cir.n_rx) * cir.n_tx;
    std::vector<cplx> out(freqs.size() * pair_n, cplx(0, 0));
    for (size_t n = 0; n < freqs.size(); ++n) {
        for (size_t t = 0; t < cir.tau.size(); ++t) {
            cplx rot = std::polar(1.0, wrap_pi(-kTwoPi * freqs[n] * cir.tau[t]));
            for (size_t p = 0; p < pair_n; ++p)
                out[n * pair_n + p] += cir.h[t * pair_n + p] * rot;
        }
    }
    return out;
}

// Wrapped propagation phase -2 pi f tau in (-pi, pi].
inline double delay_phase(double tau, double freq_hz)
{
    if (tau < 0)
        throw NumericError("delay_phase: negative delay");
    return wrap_pi(-kTwoPi * freq_hz * tau);
}

} // namespace xband
