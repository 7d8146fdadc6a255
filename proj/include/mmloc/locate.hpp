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

#ifndef MMLOC_LOCATE_HPP
#define MMLOC_LOCATE_HPP

#include <optional>
#include <stdexcept>
#include <vector>

#include "mmloc/scene.hpp"

namespace mmloc
{

inline constexpr double kSpeedOfLight = 299792458.0; // meters per second

struct DegenerateGeometryError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct InconsistentInputError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct UnlocatableError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

// Path as consumed by the position estimators: directions plus the propagation
// length difference to the reference path (meters). Absolute delays never
// enter; only differences do.
struct ClassifiedPath
{
    Direction doa;
    Direction dod;
    double delta_d = 0.0;
    PathOrder order = PathOrder::first;
};

enum class LocateMode : int
{
    los_nlos = 0,
    nlos_only = 1
};

struct PositionEstimate
{
    Eigen::Vector3d x{0, 0, 0};
    double d_los = 0.0; // estimated propagation length of the reference path
    LocateMode mode = LocateMode::los_nlos;
};

// Angles a path makes with the line-of-sight path: at the receiver between the
// two arrival directions, at the transmitter between the two departures.
// Dot products are clamped to [-1, 1] before acos.
struct RelativeAngles
{
    double theta = 0.0; // receiver side
    double phi = 0.0;   // transmitter side
};
RelativeAngles relative_angles(const ClassifiedPath &los, const ClassifiedPath &path);

// Sine-theorem estimator: one LoS path and at least one first-order path.
// Per-path distances combine through the least-squares ratio
// d = <dd .* sin(theta+phi), s> / <s, s>,  s_l = sin th_l + sin ph_l - sin(th_l + ph_l).
// All per-path denominators below 1e-9 is degenerate; a negative distance is
// inconsistent input.
PositionEstimate locate_los_nlos(const ClassifiedPath &los,
                                 const std::vector<ClassifiedPath> &firsts,
                                 const Eigen::Vector3d &x_rsu);

// NLoS-only least squares over at least three first-order paths. With
// v_l = doa_l + dod_l and P_l = I - v v^T/|v|^2, solves
//   sum_l M_l^T P_l M_l [x; d] = sum_l M_l^T P_l (x_rsu - dod_l dd_l),
// M_l = [I, dod_l]. Paths with |v_l| ~ 0 (back-reflections) are dropped; a
// condition number above cond_limit is degenerate.
PositionEstimate locate_nlos(const std::vector<ClassifiedPath> &firsts,
                             const Eigen::Vector3d &x_rsu, double cond_limit = 1e12);

// Estimated paths after classification, before reference selection.
struct LabeledPathEstimate
{
    Direction doa;
    Direction dod;
    double delay_s = 0.0; // relative to the sounding time origin
    PathOrder label = PathOrder::other;
};

struct SelectedPaths
{
    std::optional<ClassifiedPath> los;
    std::vector<ClassifiedPath> firsts;
    LocateMode mode = LocateMode::los_nlos;
    double ref_delay_s = 0.0;
};

// Routing: drops "other" paths, keeps the earliest LoS-labeled path as the LoS
// reference (later LoS labels are discarded), and computes delta_d against the
// reference (the LoS path, else the earliest first-order path). Throws
// UnlocatableError when neither estimator's precondition can be met.
SelectedPaths select_paths(const std::vector<LabeledPathEstimate> &paths);

PositionEstimate locate_auto(const SelectedPaths &sel, const Eigen::Vector3d &x_rsu);

} // namespace mmloc

#endif
