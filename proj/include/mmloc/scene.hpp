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

#ifndef MMLOC_SCENE_HPP
#define MMLOC_SCENE_HPP

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mmloc/array_geom.hpp"

namespace mmloc
{

// Finite planar reflector: points p with normal.dot(p) = offset, restricted to
// a rectangle around center spanned by the tangent frame (tan_u, tan_v).
struct Reflector
{
    Eigen::Vector3d normal{0, 1, 0}; // unit
    double offset = 0.0;
    Eigen::Vector3d center{0, 0, 0};
    Eigen::Vector3d tan_u{1, 0, 0};
    Eigen::Vector3d tan_v{0, 0, 1};
    double half_u = 1.0;
    double half_v = 1.0;

    Eigen::Vector3d mirror(const Eigen::Vector3d &p) const;
    bool contains(const Eigen::Vector3d &p, double slack = 0.0) const;
};

enum class PathOrder : int
{
    los = 0,
    first = 1,
    other = 2
};

// One propagation path between the transmitter (vehicle) and receiver (RSU).
// doa points from the receiver into the arriving ray, dod from the
// transmitter into the departing ray. gain is the complex amplitude.
struct PathParams
{
    std::complex<double> gain{0.0, 0.0};
    Direction doa;
    Direction dod;
    double delay_s = 0.0;
    PathOrder order = PathOrder::los;
};

struct GainModel
{
    double carrier_hz = 73e9;
    double reflection_loss = 0.3; // amplitude retained per bounce
};

struct SceneConfig
{
    // Vehicle lane box (transmitter), meters.
    double x_min = 10.0, x_max = 45.0;
    double y_min = 1.0, y_max = 9.0;
    double vehicle_height = 1.6;
    // RSU (receiver) mount point.
    Eigen::Vector3d rsu{0.0, -2.0, 6.0};
    // Building walls on both curbs.
    double wall_south_y = -4.0;
    double wall_north_y = 14.0;
    double wall_height = 12.0;
    double wall_half_length = 80.0;
    // Random vertical clutter reflectors near the vehicle.
    int clutter_min = 1;
    int clutter_max = 3;
    double clutter_dist_min = 2.0;
    double clutter_dist_max = 7.0;
    double clutter_half_u_min = 1.5;
    double clutter_half_u_max = 4.0;
    double clutter_half_v_min = 1.0;
    double clutter_half_v_max = 2.5;
    double blockage_prob = 0.35;
    // Longest usable excess propagation distance over the earliest path; paths
    // beyond it fall outside the sounding tap window and are omitted.
    double max_excess_m = 9.5;
    // Include double reflections (wall-wall, wall-clutter) as higher-order paths.
    bool double_bounce = true;
    int min_first_order_when_blocked = 3;
    int max_generate_retries = 64;

    GainModel gain;
};

struct Scene
{
    Eigen::Vector3d rsu{0, 0, 0};
    Eigen::Vector3d vehicle{0, 0, 0};
    std::vector<Reflector> reflectors;
    bool los_blocked = false;
    std::uint64_t seed = 0; // drives path phases; kept with the scene for reproducibility
};

// Draws vehicle position, clutter and blockage state. Deterministic per seed.
// Blocked scenes are redrawn (bounded) until enough first-order paths exist.
Scene generate_scene(const SceneConfig &cfg, std::uint64_t seed);

// Complex path amplitude: free-space decay at the carrier wavelength with a
// fixed per-bounce loss and a seeded uniform phase.
std::complex<double> path_gain_model(double length_m, PathOrder order, const GainModel &gm,
                                     std::uint64_t phase_seed);

// Mirror-image path tracing: LoS (when unblocked), single reflections off each
// reflector, and double reflections for ordered reflector pairs. Paths whose
// excess length exceeds cfg.max_excess_m, or whose reflection points leave the
// reflector extents, are omitted. Result is sorted by delay.
std::vector<PathParams> trace_paths(const Scene &scene, const SceneConfig &cfg);

// Line-oriented text fixtures.
void scene_to_text(const Scene &scene, std::ostream &os);
Scene scene_from_text(std::istream &is);
void paths_to_text(const std::vector<PathParams> &paths, std::ostream &os);
std::vector<PathParams> paths_from_text(std::istream &is);

} // namespace mmloc

#endif
