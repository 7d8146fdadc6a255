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

#include "mmloc/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "mmloc/rng.hpp"
#include "mmloc/textio.hpp"

namespace mmloc
{

namespace
{

constexpr double kSpeedOfLight = 299792458.0;

// Stable per-path tags so phases survive windowing and sorting.
constexpr std::uint64_t kTagLos = 1;
constexpr std::uint64_t kTagFirstBase = 10;
constexpr std::uint64_t kTagDoubleBase = 1000;

struct Candidate
{
    PathParams p;
    std::uint64_t tag = 0;
    double length = 0.0;
};

// Intersection parameter of segment a->b with the reflector plane; nullopt-ish
// (negative) when the segment runs parallel to it.
double intersect_param(const Reflector &r, const Eigen::Vector3d &a, const Eigen::Vector3d &b)
{
    const double denom = r.normal.dot(b - a);
    if (std::abs(denom) < 1e-12)
        return -1.0;
    return (r.offset - r.normal.dot(a)) / denom;
}

bool same_side(const Reflector &r, const Eigen::Vector3d &a, const Eigen::Vector3d &b)
{
    const double sa = r.normal.dot(a) - r.offset;
    const double sb = r.normal.dot(b) - r.offset;
    return sa * sb > 0.0;
}

} // namespace

Eigen::Vector3d Reflector::mirror(const Eigen::Vector3d &p) const
{
    return p - 2.0 * (normal.dot(p) - offset) * normal;
}

bool Reflector::contains(const Eigen::Vector3d &p, double slack) const
{
    const Eigen::Vector3d d = p - center;
    return std::abs(d.dot(tan_u)) <= half_u + slack && std::abs(d.dot(tan_v)) <= half_v + slack;
}

std::complex<double> path_gain_model(double length_m, PathOrder order, const GainModel &gm,
                                     std::uint64_t phase_seed)
{
    if (length_m <= 0.0)
        throw std::invalid_argument("path_gain_model: path length must be positive");
    const double lambda = kSpeedOfLight / gm.carrier_hz;
    const int bounces = static_cast<int>(order);
    const double amp =
        lambda / (4.0 * std::numbers::pi * length_m) * std::pow(gm.reflection_loss, bounces);
    std::mt19937_64 rng(phase_seed);
    std::uniform_real_distribution<double> uni(0.0, 2.0 * std::numbers::pi);
    const double phase = uni(rng);
    return std::polar(amp, phase);
}

std::vector<PathParams> trace_paths(const Scene &scene, const SceneConfig &cfg)
{
    std::vector<Candidate> cands;
    const Eigen::Vector3d &xr = scene.rsu;
    const Eigen::Vector3d &xt = scene.vehicle;
    const int nr = static_cast<int>(scene.reflectors.size());

    if (!scene.los_blocked)
    {
        Candidate c;
        c.length = (xt - xr).norm();
        c.tag = kTagLos;
        c.p.order = PathOrder::los;
        c.p.doa = Direction::from_vector(xt - xr);
        c.p.dod = Direction::from_vector(xr - xt);
        c.p.delay_s = c.length / kSpeedOfLight;
        cands.push_back(c);
    }

    for (int i = 0; i < nr; ++i)
    {
        const Reflector &r = scene.reflectors[i];
        if (!same_side(r, xr, xt))
            continue;
        const Eigen::Vector3d m = r.mirror(xt);
        const double t = intersect_param(r, xr, m);
        if (t <= 0.0 || t >= 1.0)
            continue;
        const Eigen::Vector3d p = xr + t * (m - xr);
        if (!r.contains(p))
            continue;
        Candidate c;
        c.length = (m - xr).norm();
        c.tag = kTagFirstBase + static_cast<std::uint64_t>(i);
        c.p.order = PathOrder::first;
        c.p.doa = Direction::from_vector(p - xr);
        c.p.dod = Direction::from_vector(p - xt);
        c.p.delay_s = c.length / kSpeedOfLight;
        cands.push_back(c);
    }

    if (cfg.double_bounce)
    {
        // Bounce off reflector i (near the transmitter) then j (near the receiver).
        for (int i = 0; i < nr; ++i)
        {
            for (int j = 0; j < nr; ++j)
            {
                if (i == j)
                    continue;
                const Reflector &ri = scene.reflectors[i];
                const Reflector &rj = scene.reflectors[j];
                const Eigen::Vector3d m1 = ri.mirror(xt);
                const Eigen::Vector3d m2 = rj.mirror(m1);
                const double t2 = intersect_param(rj, xr, m2);
                if (t2 <= 0.0 || t2 >= 1.0)
                    continue;
                const Eigen::Vector3d p2 = xr + t2 * (m2 - xr);
                if (!rj.contains(p2))
                    continue;
                const double t1 = intersect_param(ri, p2, m1);
                if (t1 <= 0.0 || t1 >= 1.0)
                    continue;
                const Eigen::Vector3d p1 = p2 + t1 * (m1 - p2);
                if (!ri.contains(p1))
                    continue;
                if (!same_side(ri, p2, xt) || !same_side(rj, xr, p1))
                    continue;
                Candidate c;
                c.length = (m2 - xr).norm();
                c.tag = kTagDoubleBase + static_cast<std::uint64_t>(i) * 64 +
                        static_cast<std::uint64_t>(j);
                c.p.order = PathOrder::other;
                c.p.doa = Direction::from_vector(p2 - xr);
                c.p.dod = Direction::from_vector(p1 - xt);
                c.p.delay_s = c.length / kSpeedOfLight;
                cands.push_back(c);
            }
        }
    }

    if (cands.empty())
        return {};

    double min_len = cands.front().length;
    for (const Candidate &c : cands)
        min_len = std::min(min_len, c.length);

    std::vector<PathParams> out;
    for (Candidate &c : cands)
    {
        if (c.length - min_len > cfg.max_excess_m)
            continue;
        c.p.gain = path_gain_model(c.length, c.p.order, cfg.gain, derive_seed(scene.seed, {c.tag}));
        out.push_back(c.p);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const PathParams &a, const PathParams &b) { return a.delay_s < b.delay_s; });
    return out;
}

namespace
{

Scene draw_scene(const SceneConfig &cfg, std::uint64_t seed, std::uint64_t attempt)
{
    Scene s;
    s.seed = seed;
    s.rsu = cfg.rsu;

    std::mt19937_64 rng(derive_seed(seed, {0xA77, attempt}));
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    s.vehicle = {cfg.x_min + (cfg.x_max - cfg.x_min) * uni(rng),
                 cfg.y_min + (cfg.y_max - cfg.y_min) * uni(rng), cfg.vehicle_height};

    const double street_mid_x = 0.5 * (cfg.x_min + cfg.x_max);
    Reflector south;
    south.normal = {0, 1, 0};
    south.offset = cfg.wall_south_y;
    south.center = {street_mid_x, cfg.wall_south_y, 0.5 * cfg.wall_height};
    south.tan_u = {1, 0, 0};
    south.tan_v = {0, 0, 1};
    south.half_u = cfg.wall_half_length;
    south.half_v = 0.5 * cfg.wall_height;
    s.reflectors.push_back(south);

    Reflector north = south;
    north.normal = {0, -1, 0};
    north.offset = -cfg.wall_north_y;
    north.center.y() = cfg.wall_north_y;
    s.reflectors.push_back(north);

    const int n_clutter =
        cfg.clutter_min + static_cast<int>(uni(rng) * (cfg.clutter_max - cfg.clutter_min + 1 - 1e-12));
    for (int i = 0; i < n_clutter; ++i)
    {
        const double bearing = 2.0 * std::numbers::pi * uni(rng);
        const double dist = cfg.clutter_dist_min + (cfg.clutter_dist_max - cfg.clutter_dist_min) * uni(rng);
        const double facing = 2.0 * std::numbers::pi * uni(rng);
        Reflector c;
        c.half_u = cfg.clutter_half_u_min + (cfg.clutter_half_u_max - cfg.clutter_half_u_min) * uni(rng);
        c.half_v = cfg.clutter_half_v_min + (cfg.clutter_half_v_max - cfg.clutter_half_v_min) * uni(rng);
        c.center = s.vehicle + dist * Eigen::Vector3d(std::cos(bearing), std::sin(bearing), 0.0);
        c.center.z() = c.half_v; // grounded
        c.normal = {std::cos(facing), std::sin(facing), 0.0};
        c.offset = c.normal.dot(c.center);
        c.tan_u = {-std::sin(facing), std::cos(facing), 0.0};
        c.tan_v = {0, 0, 1};
        s.reflectors.push_back(c);
    }

    s.los_blocked = uni(rng) < cfg.blockage_prob;
    return s;
}

int count_order(const std::vector<PathParams> &paths, PathOrder o)
{
    int n = 0;
    for (const PathParams &p : paths)
        if (p.order == o)
            ++n;
    return n;
}

} // namespace

Scene generate_scene(const SceneConfig &cfg, std::uint64_t seed)
{
    Scene best;
    for (int attempt = 0; attempt < cfg.max_generate_retries; ++attempt)
    {
        Scene s = draw_scene(cfg, seed, static_cast<std::uint64_t>(attempt));
        const std::vector<PathParams> paths = trace_paths(s, cfg);
        const int firsts = count_order(paths, PathOrder::first);
        const int need = s.los_blocked ? cfg.min_first_order_when_blocked : 1;
        if (firsts >= need)
            return s;
        if (attempt == 0)
            best = s;
    }
    return best;
}

void scene_to_text(const Scene &scene, std::ostream &os)
{
    os << "scene v1\n";
    os << "seed " << scene.seed << "\n";
    os << "rsu " << fmt_double(scene.rsu.x()) << ' ' << fmt_double(scene.rsu.y()) << ' '
       << fmt_double(scene.rsu.z()) << "\n";
    os << "vehicle " << fmt_double(scene.vehicle.x()) << ' ' << fmt_double(scene.vehicle.y()) << ' '
       << fmt_double(scene.vehicle.z()) << "\n";
    os << "los_blocked " << (scene.los_blocked ? 1 : 0) << "\n";
    os << "reflectors " << scene.reflectors.size() << "\n";
    for (const Reflector &r : scene.reflectors)
    {
        os << "reflector";
        for (double v : {r.normal.x(), r.normal.y(), r.normal.z(), r.offset, r.center.x(),
                         r.center.y(), r.center.z(), r.tan_u.x(), r.tan_u.y(), r.tan_u.z(),
                         r.tan_v.x(), r.tan_v.y(), r.tan_v.z(), r.half_u, r.half_v})
            os << ' ' << fmt_double(v);
        os << "\n";
    }
}

Scene scene_from_text(std::istream &is)
{
    expect_token(is, "scene");
    expect_token(is, "v1");
    Scene s;
    expect_token(is, "seed");
    s.seed = static_cast<std::uint64_t>(read_long(is));
    expect_token(is, "rsu");
    s.rsu = {read_double(is), read_double(is), read_double(is)};
    expect_token(is, "vehicle");
    s.vehicle = {read_double(is), read_double(is), read_double(is)};
    expect_token(is, "los_blocked");
    s.los_blocked = read_long(is) != 0;
    expect_token(is, "reflectors");
    const long n = read_long(is);
    for (long i = 0; i < n; ++i)
    {
        expect_token(is, "reflector");
        Reflector r;
        r.normal = {read_double(is), read_double(is), read_double(is)};
        r.offset = read_double(is);
        r.center = {read_double(is), read_double(is), read_double(is)};
        r.tan_u = {read_double(is), read_double(is), read_double(is)};
        r.tan_v = {read_double(is), read_double(is), read_double(is)};
        r.half_u = read_double(is);
        r.half_v = read_double(is);
        s.reflectors.push_back(r);
    }
    return s;
}

void paths_to_text(const std::vector<PathParams> &paths, std::ostream &os)
{
    os << "paths v1\n" << paths.size() << "\n";
    for (const PathParams &p : paths)
    {
        os << fmt_double(p.gain.real()) << ' ' << fmt_double(p.gain.imag());
        for (double v : {p.doa.x, p.doa.y, p.doa.z, p.dod.x, p.dod.y, p.dod.z, p.delay_s})
            os << ' ' << fmt_double(v);
        os << ' ' << static_cast<int>(p.order) << "\n";
    }
}

namespace
{

// Stored directions are already unit; renormalizing would perturb the low
// bits and break exact round trips.
Direction direction_from_text(std::istream &is)
{
    Direction d;
    d.x = read_double(is);
    d.y = read_double(is);
    d.z = read_double(is);
    if (!d.is_unit(1e-9))
        throw std::runtime_error("paths_from_text: direction is not unit length");
    return d;
}

} // namespace

std::vector<PathParams> paths_from_text(std::istream &is)
{
    expect_token(is, "paths");
    expect_token(is, "v1");
    const long n = read_long(is);
    std::vector<PathParams> out;
    for (long i = 0; i < n; ++i)
    {
        PathParams p;
        const double re = read_double(is);
        const double im = read_double(is);
        p.gain = {re, im};
        p.doa = direction_from_text(is);
        p.dod = direction_from_text(is);
        p.delay_s = read_double(is);
        p.order = static_cast<PathOrder>(read_long(is));
        out.push_back(p);
    }
    return out;
}

} // namespace mmloc
