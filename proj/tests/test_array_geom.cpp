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

#include <cmath>
#include <complex>
#include <stdexcept>

#include "doctest.h"
#include "mmloc/array_geom.hpp"

using namespace mmloc;

TEST_SUITE("array_geom")
{
    TEST_CASE("raised cosine matches independently derived samples")
    {
        // Values computed with an arbitrary-precision implementation of
        // sinc(t) cos(pi b t) / (1 - (2 b t)^2) at b = 0.25, ts = 1.
        const PulseShape p{PulseKind::raised_cosine, 1.0, 0.25};
        CHECK(p(0.0) == 1.0);
        CHECK(std::abs(p(0.35) - 0.80454750354839543736) < 5e-16);
        CHECK(std::abs(p(1.2) - -0.14319448038765889009) < 5e-16);
        CHECK(std::abs(p(2.5) - 0.086621809635949564843) < 5e-16);
        CHECK(std::abs(p(-0.6) - 0.4940201852739670163) < 5e-16);
        // |t| = 1/(2 b): removable singularity, limit (pi/4) sinc(1/(2 b)).
        CHECK(std::abs(p(2.0) - 0.0) < 1e-15);
        CHECK(std::abs(p(2.0) - p(-2.0)) == 0.0);
    }

    TEST_CASE("raised cosine is symmetric and zero at nonzero integers")
    {
        const PulseShape p{PulseKind::raised_cosine, 1.0, 0.25};
        for (double t : {0.15, 0.7, 1.3, 2.9})
            CHECK(p(t) == p(-t));
        for (int k = 1; k <= 5; ++k)
            CHECK(std::abs(p(static_cast<double>(k))) < 1e-15);
    }

    TEST_CASE("pulse time axis scales with the sample period")
    {
        const PulseShape unit{PulseKind::raised_cosine, 1.0, 0.25};
        const PulseShape fast{PulseKind::raised_cosine, 1.0 / 1.76e9, 0.25};
        for (double t : {0.0, 0.35, 1.2, 2.5})
            CHECK(std::abs(fast(t / 1.76e9) - unit(t)) < 5e-16);
    }

    TEST_CASE("axis steering at u = 0.5 gives quarter-turn phases")
    {
        const Eigen::VectorXcd a = axis_steering(3, 0.5);
        REQUIRE(a.size() == 3);
        CHECK(std::abs(a(0) - std::complex<double>(1.0, 0.0)) < 1e-15);
        CHECK(std::abs(a(1) - std::complex<double>(0.0, -1.0)) < 1e-15);
        CHECK(std::abs(a(2) - std::complex<double>(-1.0, 0.0)) < 1e-15);
    }

    TEST_CASE("axis steering rejects invalid input")
    {
        CHECK_THROWS_AS(axis_steering(0, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(axis_steering(4, 1.0001), std::invalid_argument);
        CHECK_THROWS_AS(axis_steering(4, -1.0001), std::invalid_argument);
        CHECK_NOTHROW(axis_steering(4, 1.0));
        CHECK_NOTHROW(axis_steering(4, -1.0));
    }

    TEST_CASE("ura steering is the kronecker product with x-major flat index")
    {
        const UraGeometry g{2, 3};
        const Direction dir(0.3, -0.5, std::sqrt(1.0 - 0.09 - 0.25));
        const Eigen::VectorXcd a = ura_steering(g, dir);
        const Eigen::VectorXcd ax = axis_steering(g.nx, dir.x);
        const Eigen::VectorXcd ay = axis_steering(g.ny, dir.y);
        REQUIRE(a.size() == 6);
        for (int kx = 0; kx < g.nx; ++kx)
            for (int ky = 0; ky < g.ny; ++ky)
                CHECK(std::abs(a(kx * g.ny + ky) - ax(kx) * ay(ky)) < 1e-15);
        CHECK(std::abs(a.squaredNorm() - 6.0) < 1e-12);
    }

    TEST_CASE("ura steering requires a unit direction")
    {
        Direction dir(1.0, 0.0, 0.0);
        dir.x = 1.5; // corrupt past the constructor
        CHECK_THROWS_AS(ura_steering(UraGeometry{2, 2}, dir), std::invalid_argument);
    }

    TEST_CASE("direction normalizes, rejects zero and round-trips azimuth/elevation")
    {
        const Direction d(3.0, 4.0, 0.0);
        CHECK(d.x == doctest::Approx(0.6).epsilon(1e-15));
        CHECK(d.y == doctest::Approx(0.8).epsilon(1e-15));
        CHECK(d.z == 0.0);
        CHECK(d.is_unit());
        CHECK_THROWS_AS(Direction(0.0, 0.0, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(Direction(1e-13, 0.0, 0.0), std::invalid_argument);

        const double az = 0.3, el = -0.25;
        const Direction e = Direction::from_azel(az, el);
        CHECK(e.is_unit());
        CHECK(std::abs(e.azimuth() - az) < 1e-12);
        CHECK(std::abs(e.elevation() - el) < 1e-12);
        const Direction f = Direction::from_vector(Eigen::Vector3d(0.2, -0.1, 0.4));
        CHECK(f.is_unit());
        CHECK(std::abs(f.vec().cross(Eigen::Vector3d(0.2, -0.1, 0.4)).norm()) < 1e-12);
    }

    TEST_CASE("delay response samples the pulse at shifted tap instants")
    {
        const PulseShape p{PulseKind::raised_cosine, 0.5, 0.25};
        const double tau = 1.3;
        const Eigen::VectorXcd v = delay_response(8, tau, p);
        REQUIRE(v.size() == 8);
        for (int d = 0; d < 8; ++d)
        {
            CHECK(v(d).imag() == 0.0);
            CHECK(v(d).real() == p(0.5 * d - tau));
        }
        CHECK_THROWS_AS(delay_response(0, 0.0, p), std::invalid_argument);
    }
}
