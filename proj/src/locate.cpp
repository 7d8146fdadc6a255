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

#include "mmloc/locate.hpp"

#include <algorithm>
#include <cmath>

namespace mmloc
{

namespace
{

constexpr double kDenomEps = 1e-9;

double clamped_angle(const Eigen::Vector3d &a, const Eigen::Vector3d &b)
{
    return std::acos(std::clamp(a.dot(b), -1.0, 1.0));
}

} // namespace

RelativeAngles relative_angles(const ClassifiedPath &los, const ClassifiedPath &path)
{
    RelativeAngles ra;
    ra.theta = clamped_angle(los.doa.vec(), path.doa.vec());
    ra.phi = clamped_angle(los.dod.vec(), path.dod.vec());
    return ra;
}

PositionEstimate locate_los_nlos(const ClassifiedPath &los,
                                 const std::vector<ClassifiedPath> &firsts,
                                 const Eigen::Vector3d &x_rsu)
{
    if (firsts.empty())
        throw std::invalid_argument("locate_los_nlos: needs at least one first-order path");

    double num = 0.0;
    double den = 0.0;
    bool any_usable = false;
    for (const ClassifiedPath &p : firsts)
    {
        const RelativeAngles ra = relative_angles(los, p);
        const double s = std::sin(ra.theta) + std::sin(ra.phi) - std::sin(ra.theta + ra.phi);
        if (std::abs(s) >= kDenomEps)
            any_usable = true;
        num += p.delta_d * std::sin(ra.theta + ra.phi) * s;
        den += s * s;
    }
    if (!any_usable)
        throw DegenerateGeometryError("locate_los_nlos: all sine-theorem denominators vanish");

    const double d = num / den;
    if (d < 0.0)
        throw InconsistentInputError("locate_los_nlos: negative estimated distance");

    PositionEstimate est;
    est.mode = LocateMode::los_nlos;
    est.d_los = d;
    est.x = x_rsu + d * los.doa.vec();
    return est;
}

PositionEstimate locate_nlos(const std::vector<ClassifiedPath> &firsts,
                             const Eigen::Vector3d &x_rsu, double cond_limit)
{
    std::vector<const ClassifiedPath *> usable;
    for (const ClassifiedPath &p : firsts)
        if ((p.doa.vec() + p.dod.vec()).norm() > kDenomEps)
            usable.push_back(&p);
    if (usable.size() < 3)
        throw DegenerateGeometryError("locate_nlos: fewer than three usable first-order paths");

    Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
    Eigen::Vector4d b = Eigen::Vector4d::Zero();
    for (const ClassifiedPath *p : usable)
    {
        const Eigen::Vector3d phi = p->dod.vec();
        const Eigen::Vector3d v = p->doa.vec() + phi;
        const Eigen::Matrix3d proj =
            Eigen::Matrix3d::Identity() - (v * v.transpose()) / v.squaredNorm();
        Eigen::Matrix<double, 3, 4> m;
        m.leftCols<3>() = Eigen::Matrix3d::Identity();
        m.col(3) = phi;
        const Eigen::Vector3d rhs = x_rsu - phi * p->delta_d;
        a += m.transpose() * proj * m;
        b += m.transpose() * proj * rhs;
    }

    Eigen::JacobiSVD<Eigen::Matrix4d> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector4d sv = svd.singularValues();
    if (sv(3) <= 0.0 || sv(0) / sv(3) > cond_limit)
        throw DegenerateGeometryError("locate_nlos: normal matrix condition number too large");

    const Eigen::Vector4d z = svd.solve(b);
    PositionEstimate est;
    est.mode = LocateMode::nlos_only;
    est.x = z.head<3>();
    est.d_los = z(3);
    return est;
}

SelectedPaths select_paths(const std::vector<LabeledPathEstimate> &paths)
{
    const LabeledPathEstimate *los = nullptr;
    std::vector<const LabeledPathEstimate *> firsts;
    for (const LabeledPathEstimate &p : paths)
    {
        if (p.label == PathOrder::los)
        {
            if (los == nullptr || p.delay_s < los->delay_s)
                los = &p;
        }
        else if (p.label == PathOrder::first)
            firsts.push_back(&p);
    }

    SelectedPaths sel;
    if (los != nullptr && !firsts.empty())
    {
        sel.mode = LocateMode::los_nlos;
        sel.ref_delay_s = los->delay_s;
        sel.los = ClassifiedPath{los->doa, los->dod, 0.0, PathOrder::los};
    }
    else if (los == nullptr && firsts.size() >= 3)
    {
        sel.mode = LocateMode::nlos_only;
        double ref = firsts.front()->delay_s;
        for (const LabeledPathEstimate *p : firsts)
            ref = std::min(ref, p->delay_s);
        sel.ref_delay_s = ref;
    }
    else
        throw UnlocatableError("select_paths: not enough usable paths for either estimator");

    for (const LabeledPathEstimate *p : firsts)
        sel.firsts.push_back(ClassifiedPath{p->doa, p->dod,
                                            kSpeedOfLight * (p->delay_s - sel.ref_delay_s),
                                            PathOrder::first});
    return sel;
}

PositionEstimate locate_auto(const SelectedPaths &sel, const Eigen::Vector3d &x_rsu)
{
    if (sel.mode == LocateMode::los_nlos)
    {
        if (!sel.los.has_value())
            throw std::invalid_argument("locate_auto: LoS mode without a LoS path");
        return locate_los_nlos(*sel.los, sel.firsts, x_rsu);
    }
    return locate_nlos(sel.firsts, x_rsu);
}

} // namespace mmloc
