// SPDX-License-Identifier: Apache-2.0
//
// mmloc: mmWave channel sounding, sparse recovery and vehicle localization
// Copyright (C) 2026 mmloc contributors
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

#include "mmloc/array_geom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mmloc
{

Direction::Direction(double x_, double y_, double z_)
{
    const double n = std::sqrt(x_ * x_ + y_ * y_ + z_ * z_);
    if (n < 1e-12)
        throw std::invalid_argument("Direction: vector norm below 1e-12");
    x = x_ / n;
    y = y_ / n;
    z = z_ / n;
}

Direction Direction::from_azel(double az_rad, double el_rad)
{
    const double ce = std::cos(el_rad);
    return Direction(ce * std::cos(az_rad), ce * std::sin(az_rad), std::sin(el_rad));
}

double Direction::azimuth() const { return std::atan2(y, x); }

double Direction::elevation() const { return std::asin(std::clamp(z, -1.0, 1.0)); }

bool Direction::is_unit(double tol) const
{
    return std::abs(x * x + y * y + z * z - 1.0) <= tol;
}

Eigen::VectorXcd axis_steering(int n, double u)
{
    if (n < 1)
        throw std::invalid_argument("axis_steering: element count must be positive");
    if (std::abs(u) > 1.0)
        throw std::invalid_argument("axis_steering: spatial frequency outside [-1, 1]");
    Eigen::VectorXcd a(n);
    for (int k = 0; k < n; ++k)
    {
        const double phase = -std::numbers::pi * static_cast<double>(k) * u;
        a(k) = std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return a;
}

Eigen::VectorXcd ura_steering(const UraGeometry &geom, const Direction &dir)
{
    if (!dir.is_unit(1e-9))
        throw std::invalid_argument("ura_steering: direction is not unit norm");
    const Eigen::VectorXcd ax = axis_steering(geom.nx, dir.x);
    const Eigen::VectorXcd ay = axis_steering(geom.ny, dir.y);
    Eigen::VectorXcd a(geom.size());
    for (int kx = 0; kx < geom.nx; ++kx)
        for (int ky = 0; ky < geom.ny; ++ky)
            a(kx * geom.ny + ky) = ax(kx) * ay(ky);
    return a;
}

double PulseShape::operator()(double t_seconds) const
{
    const double t = t_seconds / ts; // symbol-normalized time
    if (t == 0.0)
        return 1.0;
    const double pi = std::numbers::pi;
    const double sinc = std::sin(pi * t) / (pi * t);
    const double den = 1.0 - (2.0 * rolloff * t) * (2.0 * rolloff * t);
    if (std::abs(den) < 1e-8)
    {
        // removable singularity at |t| = ts/(2*rolloff): limit (pi/4)*sinc(1/(2*rolloff))
        const double x = 1.0 / (2.0 * rolloff);
        return (pi / 4.0) * (std::sin(pi * x) / (pi * x));
    }
    return sinc * std::cos(pi * rolloff * t) / den;
}

Eigen::VectorXcd delay_response(int taps, double tau_eff_seconds, const PulseShape &pulse)
{
    if (taps < 1)
        throw std::invalid_argument("delay_response: tap count must be positive");
    Eigen::VectorXcd v(taps);
    for (int d = 0; d < taps; ++d)
        v(d) = pulse(pulse.ts * static_cast<double>(d) - tau_eff_seconds);
    return v;
}

} // namespace mmloc
