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

#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace xband {

inline constexpr double kSpeedOfLight = 299792458.0; // m/s, exact
inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

// Error taxonomy shared by the library and the CLI (exit codes 2/3/4).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Wrap an angle into (-pi, pi]. The boundary maps -pi to +pi.
inline double wrap_pi(double a)
{
    double r = std::remainder(a, kTwoPi); // [-pi, pi]
    if (r <= -kPi)
        r += kTwoPi;
    return r;
}

// Circular absolute difference, in [0, pi].
inline double circ_abs_diff(double a, double b)
{
    double d = std::fabs(a - b);
    d = std::fmod(d, kTwoPi);
    return std::min(d, kTwoPi - d);
}

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double amp_to_db(double amp) { return 20.0 * std::log10(amp); }
inline double db_to_amp(double db) { return std::pow(10.0, db / 20.0); }

inline std::string strf(const char *fmt, ...)
{
    va_list ap;
    va_start(ap, fmt);
    char buf[1024];
    std::vsnprintf(buf, sizeof(buf), fmt, ap);
    va_end(ap);
    return std::string(buf);
}

// Shortest round-trip decimal form of a double (17 significant digits).
inline std::string fmt_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

// ----------------------------------------------------------------------
// Deterministic RNG. The engine state transition follows splitmix64 /
// xoshiro256** so that streams are identical across compilers and
// platforms (std:: distributions are implementation-defined and must not
// be used anywhere results are persisted).
// ----------------------------------------------------------------------

inline uint64_t splitmix64(uint64_t &state)
{
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
  public:
    explicit Rng(uint64_t seed = 0)
    {
        uint64_t sm = seed;
        for (auto &w : s_)
            w = splitmix64(sm);
    }

    // Independent child stream, keyed by an integer label.
    Rng derive(uint64_t key) const
    {
        uint64_t sm = s_[0] ^ (0x9e3779b97f4a7c15ULL * (key + 1));
        sm ^= s_[3];
        Rng child(0);
        for (auto &w : child.s_)
            w = splitmix64(sm);
        return child;
    }

    uint64_t next_u64()
    {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    uint64_t uniform_int(uint64_t n)
    {
        return uint64_t((__uint128_t(next_u64()) * n) >> 64);
    }

    // Standard normal (Box-Muller, deterministic draw order).
    double normal()
    {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        // Avoid log(0).
        if (u1 < 0x1.0p-60)
            u1 = 0x1.0p-60;
        double r = std::sqrt(-2.0 * std::log(u1));
        double th = kTwoPi * u2;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

    template <class T> void shuffle(std::vector<T> &v)
    {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = size_t(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4] = {};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// FNV-1a 64-bit digest, used for config/spec fingerprints.
inline uint64_t fnv1a64(const void *data, size_t n, uint64_t h = 0xcbf29ce484222325ULL)
{
    const auto *p = static_cast<const unsigned char *>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ULL)
{
    return fnv1a64(s.data(), s.size(), h);
}

} // namespace xband
