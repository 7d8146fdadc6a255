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
//
// Shared helpers for the unit tests and the acceptance gate: an exhaustive
// matching-pursuit reference, synthetic on-grid instances, and exact
// reflected-path geometry builders.

#ifndef MMLOC_TESTS_SUPPORT_HPP
#define MMLOC_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <vector>

#include "mmloc/harness.hpp"
#include "mmloc/locate.hpp"
#include "mmloc/momp.hpp"
#include "mmloc/rng.hpp"
#include "mmloc/scene.hpp"
#include "mmloc/sounding.hpp"

namespace mmloc_tests
{

// Exhaustive orthogonal matching pursuit over every dictionary triple, using
// the same normalized selection metric and joint least-squares refit as the
// production solver. Candidates are scanned in (j1, j2, j3) lexicographic
// order with strict improvement, so ties resolve to the lowest triple.
struct OracleResult
{
    std::vector<mmloc::SparseEntry> entries;
    std::vector<double> residual_history;
    double residual_sq = 0.0;
};

inline OracleResult exhaustive_omp(const mmloc::ObservationSet &obs,
                                   const mmloc::MeasurementTensor &phi,
                                   const mmloc::DictionarySet &psi, int max_paths,
                                   double stop_fraction)
{
    OracleResult out;
    const Eigen::MatrixXcd &y = obs.y;
    const double y2 = y.squaredNorm();
    out.residual_sq = y2;
    if (y2 == 0.0 || max_paths <= 0)
        return out;
    Eigen::MatrixXcd r = y;
    Eigen::MatrixXcd atoms(y.rows(), 0);
    Eigen::MatrixXcd coef;

    auto picked = [&](int j1, int j2, int j3) {
        for (const mmloc::SparseEntry &e : out.entries)
            if (e.j1 == j1 && e.j2 == j2 && e.j3 == j3)
                return true;
        return false;
    };

    for (int iter = 0; iter < max_paths; ++iter)
    {
        int b1 = -1, b2 = -1, b3 = -1;
        double best = -1.0;
        for (int j1 = 0; j1 < psi.n1(); ++j1)
            for (int j2 = 0; j2 < psi.n2(); ++j2)
                for (int j3 = 0; j3 < psi.n3(); ++j3)
                {
                    if (picked(j1, j2, j3))
                        continue;
                    const Eigen::VectorXcd a = mmloc::composite_atom(phi, psi, j1, j2, j3);
                    const double n2 = a.squaredNorm();
                    if (n2 <= 1e-300)
                        continue;
                    const double score = (a.adjoint() * r).squaredNorm() / n2;
                    if (score > best)
                    {
                        best = score;
                        b1 = j1;
                        b2 = j2;
                        b3 = j3;
                    }
                }
        if (b1 < 0)
            break;

        atoms.conservativeResize(Eigen::NoChange, atoms.cols() + 1);
        atoms.col(atoms.cols() - 1) = mmloc::composite_atom(phi, psi, b1, b2, b3);
        coef = atoms.colPivHouseholderQr().solve(y);
        r = y - atoms * coef;

        mmloc::SparseEntry e;
        e.j1 = b1;
        e.j2 = b2;
        e.j3 = b3;
        out.entries.push_back(e);
        out.residual_sq = r.squaredNorm();
        out.residual_history.push_back(out.residual_sq);
        if (out.residual_sq <= stop_fraction * y2)
            break;
    }
    // Betas are the final joint refit, matching the solver's reporting.
    for (std::size_t k = 0; k < out.entries.size(); ++k)
        out.entries[k].beta = coef.row(static_cast<Eigen::Index>(k)).transpose();
    return out;
}

// A complete synthetic sounding instance whose paths sit exactly on the
// dictionary grids, with pairwise separation of at least two cells per
// spatial axis and eight delay cells.
struct SynthInstance
{
    mmloc::UraGeometry tx{2, 2}, rx{2, 2};
    mmloc::PulseShape pulse;
    mmloc::PilotSequence pilots;
    mmloc::Codebooks cb;
    mmloc::MeasurementTensor phi;
    mmloc::DictionarySet dict;
    std::vector<mmloc::PathParams> paths;
    std::vector<int> j1, j2, j3; // true grid indices per path
    mmloc::ObservationSet obs;
};

struct SynthSpec
{
    int tx_nx = 2, tx_ny = 2;
    int rx_nx = 2, rx_ny = 2;
    int n_tx_rf = 2, n_rx_rf = 2;
    int m_t = 8, m_r = 1;
    int taps = 32;
    int payload = 32, pad = 8;
    int dod_ov = 4, delay_ov = 4;
    int n_paths = 3;
    int min_sep_u = 2;   // cells, per spatial axis
    int min_sep_tau = 8; // cells
    double gain_decay = 0.6;
    double noise_power = 0.0;
};

inline SynthInstance make_synth_instance(const SynthSpec &spec, std::uint64_t seed)
{
    SynthInstance in;
    in.tx = mmloc::UraGeometry{spec.tx_nx, spec.tx_ny};
    in.rx = mmloc::UraGeometry{spec.rx_nx, spec.rx_ny};
    in.pulse = mmloc::PulseShape{mmloc::PulseKind::raised_cosine, 1.0, 0.25};
    in.pilots = mmloc::make_pilots(spec.payload + 2 * spec.pad, spec.n_tx_rf, spec.pad);

    mmloc::CodebookConfig ccfg;
    ccfg.n_tx = in.tx.size();
    ccfg.n_tx_rf = spec.n_tx_rf;
    ccfg.n_rx = in.rx.size();
    ccfg.n_rx_rf = spec.n_rx_rf;
    ccfg.m_t = spec.m_t;
    ccfg.m_r = spec.m_r;
    in.cb = mmloc::make_codebooks(ccfg, mmloc::derive_seed(seed, {0x1}));
    in.phi = mmloc::build_measurement(in.cb, in.pilots, spec.taps, in.tx);
    in.dict = mmloc::default_dictionaries(in.tx, spec.taps, in.pulse, spec.dod_ov, spec.delay_ov);

    std::mt19937_64 rng = mmloc::make_stream(seed, {0x2});
    std::uniform_real_distribution<double> uphase(0.0, 6.283185307179586);
    std::uniform_real_distribution<double> uz(-1.0, -0.2);
    const int n1 = in.dict.n1(), n2 = in.dict.n2();
    // Keep delay atoms away from the tap-window edges so pulse tails stay inside.
    const int tau_lo = 4 * spec.delay_ov;
    const int tau_hi = (spec.taps - 5) * spec.delay_ov;

    // The u axes are periodic with period 2 (index period n), so separation is
    // circular there; delays are separated linearly.
    auto separated = [](int a, const std::vector<int> &chosen, int min_sep, int period) {
        for (int c : chosen)
        {
            int d = std::abs(a - c);
            if (period > 0)
                d = std::min(d, period - d);
            if (d < min_sep)
                return false;
        }
        return true;
    };

    // Early draws can paint the later ones into a corner (a cell whose only
    // admissible partner is outside the unit disk), so on a dead end the whole
    // path set is redrawn rather than giving up.
    bool placed = false;
    for (int restart = 0; restart < 100 && !placed; ++restart)
    {
        in.j1.clear();
        in.j2.clear();
        in.j3.clear();
        placed = true;
        for (int p = 0; p < spec.n_paths && placed; ++p)
        {
            int a1 = 0, a2 = 0, a3 = 0;
            for (int attempt = 0;; ++attempt)
            {
                if (attempt > 10000)
                {
                    placed = false;
                    break;
                }
                a1 = static_cast<int>(rng() % n1);
                a2 = static_cast<int>(rng() % n2);
                a3 = tau_lo +
                     static_cast<int>(rng() % static_cast<std::uint64_t>(tau_hi - tau_lo));
                const double u1 = in.dict.grid_u1(a1), u2 = in.dict.grid_u2(a2);
                if (u1 * u1 + u2 * u2 > 0.95)
                    continue;
                if (!separated(a1, in.j1, spec.min_sep_u, n1) ||
                    !separated(a2, in.j2, spec.min_sep_u, n2) ||
                    !separated(a3, in.j3, spec.min_sep_tau, 0))
                    continue;
                break;
            }
            if (!placed)
                break;
            in.j1.push_back(a1);
            in.j2.push_back(a2);
            in.j3.push_back(a3);
        }
    }
    if (!placed)
        throw std::runtime_error("make_synth_instance: cannot separate paths");

    for (int p = 0; p < spec.n_paths; ++p)
    {
        mmloc::PathParams path;
        const double u1 = in.dict.grid_u1(in.j1[p]), u2 = in.dict.grid_u2(in.j2[p]);
        path.dod = mmloc::Direction(u1, u2, std::sqrt(std::max(0.0, 1.0 - u1 * u1 - u2 * u2)));
        // Arbitrary off-grid arrival; the support recovery does not depend on it.
        const double az = uphase(rng), z = uz(rng);
        const double rxy = std::sqrt(1.0 - z * z);
        path.doa = mmloc::Direction(rxy * std::cos(az), rxy * std::sin(az), z);
        path.delay_s = in.dict.grid_tau(in.j3[p]);
        path.gain = std::polar(std::pow(spec.gain_decay, p), uphase(rng));
        path.order = p == 0 ? mmloc::PathOrder::los : mmloc::PathOrder::first;
        in.paths.push_back(path);
    }

    const mmloc::ChannelTaps ch =
        mmloc::channel_from_paths(in.paths, in.tx, in.rx, spec.taps, in.pulse, 0.0);
    in.obs = mmloc::synthesize_observation(ch, in.cb, in.pilots, spec.noise_power,
                                           mmloc::derive_seed(seed, {0x3}), 0.0);
    return in;
}

// Exact single-bounce geometry off a reflector plane: arrival direction at the
// receiver, departure direction at the transmitter and total path length.
struct GeoPath
{
    mmloc::Direction doa;
    mmloc::Direction dod;
    double length = 0.0;
};

inline GeoPath reflect_exact(const Eigen::Vector3d &x_rx, const Eigen::Vector3d &x_tx,
                             const mmloc::Reflector &refl)
{
    const Eigen::Vector3d image = refl.mirror(x_tx);
    const Eigen::Vector3d seg = image - x_rx;
    const double denom = seg.dot(refl.normal);
    const double t = (refl.offset - x_rx.dot(refl.normal)) / denom;
    const Eigen::Vector3d p = x_rx + t * seg;
    GeoPath g;
    g.doa = mmloc::Direction::from_vector(p - x_rx);
    g.dod = mmloc::Direction::from_vector(p - x_tx);
    g.length = (p - x_rx).norm() + (x_tx - p).norm();
    return g;
}

inline GeoPath los_exact(const Eigen::Vector3d &x_rx, const Eigen::Vector3d &x_tx)
{
    GeoPath g;
    g.doa = mmloc::Direction::from_vector(x_tx - x_rx);
    g.dod = mmloc::Direction::from_vector(x_rx - x_tx);
    g.length = (x_tx - x_rx).norm();
    return g;
}

// Random non-degenerate single-bounce layout around a transmitter and
// receiver; normals are kept well away from parallel so the direction-only
// estimator stays conditioned.
struct GeoScene
{
    Eigen::Vector3d x_rx, x_tx;
    GeoPath los;
    std::vector<GeoPath> bounces;
};

inline GeoScene make_geo_scene(std::uint64_t seed, int n_bounces)
{
    std::mt19937_64 rng = mmloc::make_stream(seed, {0x9E0});
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GeoScene g;
    g.x_rx = Eigen::Vector3d(0.0, -2.0, 6.0);
    g.x_tx = Eigen::Vector3d(15.0 + 20.0 * std::abs(u(rng)), 1.0 + 4.0 * std::abs(u(rng)),
                             1.0 + 0.5 * std::abs(u(rng)));
    g.los = los_exact(g.x_rx, g.x_tx);
    const Eigen::Vector3d mid = 0.5 * (g.x_rx + g.x_tx);
    int made = 0;
    for (int attempt = 0; made < n_bounces && attempt < 1000; ++attempt)
    {
        Eigen::Vector3d n(u(rng), u(rng), 0.25 * u(rng));
        if (n.norm() < 0.3)
            continue;
        n.normalize();
        // Plane 6..14 meters away from the midpoint along its normal.
        const double offset = mid.dot(n) + 6.0 + 8.0 * std::abs(u(rng));
        mmloc::Reflector r;
        r.normal = n;
        r.offset = offset;
        // Reject layouts where either endpoint sits on the far side.
        if (g.x_rx.dot(n) - offset >= -1.0 || g.x_tx.dot(n) - offset >= -1.0)
            continue;
        bool distinct = true;
        const GeoPath path = reflect_exact(g.x_rx, g.x_tx, r);
        for (const GeoPath &prev : g.bounces)
            if (std::abs(prev.doa.vec().dot(path.doa.vec())) > 0.995)
                distinct = false;
        if (!distinct)
            continue;
        g.bounces.push_back(path);
        ++made;
    }
    if (made < n_bounces)
        throw std::runtime_error("make_geo_scene: layout rejection failed");
    return g;
}

} // namespace mmloc_tests

#endif
