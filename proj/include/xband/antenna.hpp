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

#include "geometry.hpp"

namespace xband {

// Horizontal-cut parametric pattern: G(phi) = G0 - min(12 (phi/phi_3dB)^2, 30).
// phi_3db == 0 marks an isotropic element with gain G0.
struct AntennaPattern {
    double g0_dbi = 0.0;
    double phi_3db = 0.0;       // half-power beamwidth, radians
    double boresight_az = 0.0;  // radians

    bool isotropic() const { return phi_3db <= 0.0; }

    bool operator==(const AntennaPattern &o) const
    {
        return g0_dbi == o.g0_dbi && phi_3db == o.phi_3db && boresight_az == o.boresight_az;
    }
};

// Gain at an angular offset from boresight; attenuation clamps at 30 dB.
inline double antenna_gain_db(double phi_offset, const AntennaPattern &p)
{
    if (p.isotropic())
        return p.g0_dbi;
    double phi = wrap_pi(phi_offset);
    double att = 12.0 * (phi / p.phi_3db) * (phi / p.phi_3db);
    return p.g0_dbi - std::min(att, 30.0);
}

// Gain toward an absolute azimuth.
inline double antenna_gain_toward_db(double azimuth, const AntennaPattern &p)
{
    return antenna_gain_db(wrap_pi(azimuth - p.boresight_az), p);
}

// Element positions relative to the array phase center. Vertical
// polarization throughout.
struct ArrayGeometry {
    std::vector<Vec3> element_offsets;

    static ArrayGeometry single()
    {
        ArrayGeometry a;
        a.element_offsets.push_back({0, 0, 0});
        return a;
    }

    // Uniform linear array along `axis`, centered on the phase center.
    static ArrayGeometry ula(int n, double spacing, const Vec3 &axis = {0, 1, 0})
    {
        if (n < 1)
            throw ConfigError("array needs at least one element");
        ArrayGeometry a;
        Vec3 u = normalized(axis);
        for (int i = 0; i < n; ++i) {
            double off = (i - (n - 1) / 2.0) * spacing;
            a.element_offsets.push_back(u * off);
        }
        return a;
    }

    int size() const { return int(element_offsets.size()); }
};

} // namespace xband
