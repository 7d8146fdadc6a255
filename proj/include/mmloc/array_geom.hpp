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

#ifndef MMLOC_ARRAY_GEOM_HPP
#define MMLOC_ARRAY_GEOM_HPP

#include <Eigen/Dense>
#include <complex>

namespace mmloc
{

// Unit-norm 3D direction. Construction normalizes and rejects near-zero input.
struct Direction
{
    double x = 1.0, y = 0.0, z = 0.0;

    Direction() = default;
    Direction(double x_, double y_, double z_); // normalizes, throws on ~zero norm

    static Direction from_vector(const Eigen::Vector3d &v) { return Direction(v.x(), v.y(), v.z()); }
    static Direction from_azel(double az_rad, double el_rad);

    Eigen::Vector3d vec() const { return {x, y, z}; }
    double azimuth() const;   // atan2(y, x), radians
    double elevation() const; // asin(z), radians
    bool is_unit(double tol = 1e-12) const;
};

// Uniform rectangular array in the xy plane, half-wavelength spacing.
struct UraGeometry
{
    int nx = 1;
    int ny = 1;
    int size() const { return nx * ny; }
};

// Steering vector of an n-element uniform linear axis at spatial frequency u,
// entries exp(-i pi k u) for k = 0..n-1. Requires |u| <= 1.
Eigen::VectorXcd axis_steering(int n, double u);

// URA steering a(dir) = a_x(dir.x) kron a_y(dir.y); flat index kx*ny + ky.
Eigen::VectorXcd ura_steering(const UraGeometry &geom, const Direction &dir);

enum class PulseKind
{
    raised_cosine
};

// Bandlimited pulse evaluated in seconds; removable singularities handled.
struct PulseShape
{
    PulseKind kind = PulseKind::raised_cosine;
    double ts = 1.0;       // sample period, seconds
    double rolloff = 0.25; // raised-cosine rolloff in [0, 1]

    double operator()(double t_seconds) const;
};

// Sampled delay signature: entry d = p(ts*d - tau_eff) for d = 0..taps-1,
// where tau_eff is the delay relative to the sounding time origin.
Eigen::VectorXcd delay_response(int taps, double tau_eff_seconds, const PulseShape &pulse);

} // namespace mmloc

#endif
