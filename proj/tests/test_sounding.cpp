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
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mmloc/rng.hpp"
#include "mmloc/sounding.hpp"

using namespace mmloc;

namespace
{

CodebookConfig tiny_codebook_config()
{
    CodebookConfig cfg;
    cfg.n_tx = 4;
    cfg.n_tx_rf = 2;
    cfg.n_rx = 4;
    cfg.n_rx_rf = 2;
    cfg.m_t = 4;
    cfg.m_r = 2;
    return cfg;
}

std::vector<PathParams> tiny_paths()
{
    std::vector<PathParams> paths;
    PathParams a;
    a.gain = {0.8, -0.25};
    a.doa = Direction(0.3, -0.4, -0.5);
    a.dod = Direction(-0.2, 0.7, 0.4);
    a.delay_s = 2.25;
    a.order = PathOrder::los;
    paths.push_back(a);
    PathParams b;
    b.gain = {-0.1, 0.45};
    b.doa = Direction(-0.6, 0.1, -0.3);
    b.dod = Direction(0.5, 0.2, 0.6);
    b.delay_s = 5.75;
    b.order = PathOrder::first;
    paths.push_back(b);
    return paths;
}

} // namespace

TEST_SUITE("sounding")
{
    TEST_CASE("pilots are zero-padded, rank one and unit average energy")
    {
        const PilotSequence p = make_pilots(96, 2, 16);
        CHECK(p.q_total() == 96);
        CHECK(p.n_rf() == 2);
        CHECK(p.payload == 64);
        CHECK(p.pad == 16);
        for (int q = 0; q < 16; ++q)
        {
            CHECK(p.s.col(q).norm() == 0.0);
            CHECK(p.s.col(95 - q).norm() == 0.0);
        }
        // Constant modulus sqrt(q_total / (payload * n_rf)) over the payload,
        // identical on both RF chains.
        const double a = std::sqrt(96.0 / (64.0 * 2.0));
        for (int q = 16; q < 80; ++q)
        {
            CHECK(std::abs(std::abs(p.s(0, q)) - a) < 1e-15);
            CHECK(p.s(0, q) == p.s(1, q));
        }
        CHECK(std::abs(p.s.squaredNorm() - 96.0) < 1e-12);

        // The payload phases are a fixed sequence: calls are reproducible.
        const PilotSequence p2 = make_pilots(96, 2, 16);
        CHECK((p2.s - p.s).norm() == 0.0);

        // Single chain with q_total = 96: modulus sqrt(1.5).
        const PilotSequence p1 = make_pilots(96, 1, 16);
        CHECK(std::abs(std::abs(p1.s(0, 40)) - 1.2247448713915889407) < 5e-16);
    }

    TEST_CASE("pilot payload must be a positive power of two")
    {
        CHECK_THROWS_AS(make_pilots(88, 1, 16), std::invalid_argument); // payload 56
        CHECK_THROWS_AS(make_pilots(32, 1, 16), std::invalid_argument); // payload 0
        CHECK_THROWS_AS(make_pilots(10, 1, 16), std::invalid_argument); // negative
        CHECK_NOTHROW(make_pilots(80, 1, 8));                           // payload 64
    }

    TEST_CASE("codebook stages are constant modulus and reproducible")
    {
        const CodebookConfig cfg = tiny_codebook_config();
        const Codebooks cb = make_codebooks(cfg, 77);
        REQUIRE(cb.precoders.size() == 4);
        REQUIRE(cb.combiners.size() == 2);
        for (const Eigen::MatrixXcd &f : cb.precoders)
        {
            REQUIRE(f.rows() == 4);
            REQUIRE(f.cols() == 2);
            for (Eigen::Index i = 0; i < f.size(); ++i)
                CHECK(std::abs(std::abs(f(i)) - 0.5) < 1e-15);
            for (Eigen::Index c = 0; c < f.cols(); ++c)
                CHECK(std::abs(f.col(c).norm() - 1.0) < 1e-14);
        }
        for (const Eigen::MatrixXcd &w : cb.combiners)
        {
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(w);
            CHECK(svd.singularValues()(svd.singularValues().size() - 1) > 1e-6);
        }
        const Codebooks cb2 = make_codebooks(cfg, 77);
        CHECK((cb2.precoders[3] - cb.precoders[3]).norm() == 0.0);
        const Codebooks cb3 = make_codebooks(cfg, 78);
        CHECK((cb3.precoders[0] - cb.precoders[0]).norm() > 1e-3);
    }

    TEST_CASE("whitened combiners satisfy W^H W = I and stack side by side")
    {
        const Codebooks cb = make_codebooks(tiny_codebook_config(), 5);
        const std::vector<Eigen::MatrixXcd> wb = whitened_combiners(cb);
        REQUIRE(wb.size() == 2);
        for (const Eigen::MatrixXcd &w : wb)
        {
            const Eigen::MatrixXcd g = w.adjoint() * w;
            CHECK((g - Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-12);
        }
        const Eigen::MatrixXcd stack = stacked_whitened(cb);
        REQUIRE(stack.rows() == 4);
        REQUIRE(stack.cols() == 4);
        CHECK((stack.leftCols(2) - wb[0]).norm() == 0.0);
        CHECK((stack.rightCols(2) - wb[1]).norm() == 0.0);
    }

    TEST_CASE("tapped channel matches the per-entry scalar formula")
    {
        const UraGeometry tx{2, 2}, rx{2, 2};
        const PulseShape pulse{PulseKind::raised_cosine, 1.0, 0.25};
        const std::vector<PathParams> paths = tiny_paths();
        const double t0 = 0.5;
        const ChannelTaps ch = channel_from_paths(paths, tx, rx, 12, pulse, t0);
        REQUIRE(ch.taps() == 12);
        REQUIRE(ch.has_factors);

        for (int d = 0; d < 12; ++d)
            for (int r = 0; r < 4; ++r)
                for (int t = 0; t < 4; ++t)
                {
                    std::complex<double> want(0.0, 0.0);
                    for (const PathParams &p : paths)
                    {
                        const std::complex<double> ar = ura_steering(rx, p.doa)(r);
                        const std::complex<double> at = ura_steering(tx, p.dod)(t);
                        want += p.gain * ar * std::conj(at) * pulse(1.0 * d - (p.delay_s - t0));
                    }
                    CHECK(std::abs(ch.h[d](r, t) - want) < 1e-13);
                }

        // Factored form reproduces the taps.
        for (int d = 0; d < 12; ++d)
        {
            Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(4, 4);
            for (int l = 0; l < 2; ++l)
                sum += ch.gains(l) * ch.dr(d, l) * ch.ar.col(l) * ch.at.col(l).adjoint();
            CHECK((sum - ch.h[d]).norm() < 1e-13);
        }
    }

    TEST_CASE("time origin only shifts the effective delays")
    {
        const UraGeometry tx{2, 2}, rx{2, 2};
        const PulseShape pulse{PulseKind::raised_cosine, 1.0, 0.25};
        std::vector<PathParams> paths = tiny_paths();
        // Dyadic delays and shift: the subtraction is exact, taps must be identical.
        paths[0].delay_s = 2.25;
        paths[1].delay_s = 5.75;
        const ChannelTaps shifted = channel_from_paths(paths, tx, rx, 12, pulse, 1.25);
        std::vector<PathParams> rebased = paths;
        rebased[0].delay_s = 1.0;
        rebased[1].delay_s = 4.5;
        const ChannelTaps zero = channel_from_paths(rebased, tx, rx, 12, pulse, 0.0);
        for (int d = 0; d < 12; ++d)
            CHECK((shifted.h[d] - zero.h[d]).norm() == 0.0);
    }

    TEST_CASE("factored and dense synthesis agree")
    {
        const CodebookConfig ccfg = tiny_codebook_config();
        const Codebooks cb = make_codebooks(ccfg, 3);
        const PilotSequence pilots = make_pilots(48, ccfg.n_tx_rf, 8);
        const UraGeometry tx{2, 2}, rx{2, 2};
        const PulseShape pulse{PulseKind::raised_cosine, 1.0, 0.25};
        const ChannelTaps ch = channel_from_paths(tiny_paths(), tx, rx, 12, pulse, 0.0);

        ChannelTaps dense = ch;
        dense.has_factors = false;

        const ObservationSet a = synthesize_observation(ch, cb, pilots, 0.01, 99, 0.0);
        const ObservationSet b = synthesize_observation(dense, cb, pilots, 0.01, 99, 0.0);
        REQUIRE(a.y.rows() == b.y.rows());
        CHECK((a.y - b.y).norm() < 1e-12 * a.y.norm());

        CHECK(a.y.rows() == ccfg.m_t * pilots.q_total());
        CHECK(a.y.cols() == ccfg.m_r * ccfg.n_rx_rf);
    }

    TEST_CASE("observation rows match the combine-then-whiten formula")
    {
        const CodebookConfig ccfg = tiny_codebook_config();
        const Codebooks cb = make_codebooks(ccfg, 21);
        const PilotSequence pilots = make_pilots(48, ccfg.n_tx_rf, 8);
        const UraGeometry tx{2, 2}, rx{2, 2};
        const PulseShape pulse{PulseKind::raised_cosine, 1.0, 0.25};
        const ChannelTaps ch = channel_from_paths(tiny_paths(), tx, rx, 12, pulse, 0.0);
        const ObservationSet obs = synthesize_observation(ch, cb, pilots, 0.0, 1, 0.0);
        const std::vector<Eigen::MatrixXcd> wb = whitened_combiners(cb);

        const int q_total = pilots.q_total();
        std::mt19937_64 pick(123);
        for (int probe = 0; probe < 40; ++probe)
        {
            const int m = static_cast<int>(pick() % 4);
            const int c = static_cast<int>(pick() % 2);
            const int q = static_cast<int>(pick() % static_cast<std::uint64_t>(q_total));
            Eigen::VectorXcd z = Eigen::VectorXcd::Zero(4);
            for (int d = 0; d < 12; ++d)
                if (q - d >= 0)
                    z += ch.h[d] * (cb.precoders[m] * pilots.s.col(q - d));
            const Eigen::VectorXcd want = wb[c].adjoint() * z;
            const Eigen::VectorXcd got = obs.y.row(m * q_total + q).segment(c * 2, 2).transpose();
            CHECK((want - got).norm() < 1e-12);
        }
    }

    TEST_CASE("whitened noise keeps the per-sample variance")
    {
        const CodebookConfig ccfg = tiny_codebook_config();
        CodebookConfig big = ccfg;
        big.m_t = 16;
        const Codebooks cb = make_codebooks(big, 9);
        const PilotSequence pilots = make_pilots(160, big.n_tx_rf, 16);
        const UraGeometry tx{2, 2}, rx{2, 2};
        const PulseShape pulse{PulseKind::raised_cosine, 1.0, 0.25};
        const ChannelTaps silent =
            channel_from_paths(std::vector<PathParams>{}, tx, rx, 8, pulse, 0.0);
        const double noise_power = 2.0;
        const ObservationSet obs = synthesize_observation(silent, cb, pilots, noise_power, 4, 0.0);
        const double mean_power =
            obs.y.squaredNorm() / static_cast<double>(obs.y.rows() * obs.y.cols());
        CHECK(std::abs(mean_power / noise_power - 1.0) < 0.05);
    }

    TEST_CASE("observation text fixture round-trips exactly")
    {
        const CodebookConfig ccfg = tiny_codebook_config();
        const Codebooks cb = make_codebooks(ccfg, 31);
        const PilotSequence pilots = make_pilots(48, ccfg.n_tx_rf, 8);
        const UraGeometry tx{2, 2}, rx{2, 2};
        const PulseShape pulse{PulseKind::raised_cosine, 1.0, 0.25};
        const ChannelTaps ch = channel_from_paths(tiny_paths(), tx, rx, 12, pulse, 0.0);
        const ObservationSet obs = synthesize_observation(ch, cb, pilots, 0.05, 17, 0.25);

        std::stringstream ss;
        observation_to_text(obs, ss);
        const ObservationSet r = observation_from_text(ss);
        CHECK(r.q_total == obs.q_total);
        CHECK(r.m_t == obs.m_t);
        CHECK(r.m_r == obs.m_r);
        CHECK(r.n_rx_rf == obs.n_rx_rf);
        CHECK(r.noise_power == obs.noise_power);
        CHECK(r.t0 == obs.t0);
        REQUIRE(r.y.rows() == obs.y.rows());
        REQUIRE(r.y.cols() == obs.y.cols());
        CHECK((r.y - obs.y).norm() == 0.0);
    }
}
