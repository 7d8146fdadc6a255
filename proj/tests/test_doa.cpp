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
#include "mmloc/doa.hpp"
#include "mmloc/rng.hpp"

using namespace mmloc;

namespace
{

// Square stacked combiner: 2x2 receive array observed through two combiner
// blocks of two RF chains each, so the whitened stack is invertible.
Codebooks square_codebooks(std::uint64_t seed)
{
    CodebookConfig cfg;
    cfg.n_tx = 4;
    cfg.n_tx_rf = 2;
    cfg.n_rx = 4;
    cfg.n_rx_rf = 2;
    cfg.m_t = 2;
    cfg.m_r = 2;
    return make_codebooks(cfg, seed);
}

} // namespace

TEST_SUITE("doa")
{
    TEST_CASE("direction grid covers the window inclusively in row-major order")
    {
        const double az0 = -0.5, az1 = 0.75, el0 = -0.4, el1 = 0.0;
        const DoaGrid g = make_doa_grid(az0, az1, 6, el0, el1, 4);
        REQUIRE(g.dirs.size() == 24);
        CHECK(std::abs(g.dirs.front().azimuth() - az0) < 1e-12);
        CHECK(std::abs(g.dirs.front().elevation() - el0) < 1e-12);
        CHECK(std::abs(g.dirs.back().azimuth() - az1) < 1e-12);
        CHECK(std::abs(g.dirs.back().elevation() - el1) < 1e-12);
        // Azimuth-major layout: consecutive entries sweep elevation first.
        CHECK(std::abs(g.dirs[1].azimuth() - az0) < 1e-12);
        CHECK(g.dirs[1].elevation() > g.dirs[0].elevation());

        const DoaGrid single = make_doa_grid(az0, az1, 1, el0, el1, 1);
        REQUIRE(single.dirs.size() == 1);
        CHECK(std::abs(single.dirs[0].azimuth() - 0.5 * (az0 + az1)) < 1e-12);
        CHECK(std::abs(single.dirs[0].elevation() - 0.5 * (el0 + el1)) < 1e-12);

        CHECK_THROWS_AS(make_doa_grid(0, 1, 0, 0, 1, 4), std::invalid_argument);
    }

    TEST_CASE("stacked combiner pseudo-inverse is a left inverse")
    {
        const Codebooks cb = square_codebooks(4);
        const StackedCombiner sc = StackedCombiner::from_codebooks(cb);
        REQUIRE(sc.w.rows() == 4);
        REQUIRE(sc.w.cols() == 4);
        CHECK((sc.pinv * sc.w - Eigen::MatrixXcd::Identity(4, 4)).norm() < 1e-10);
        CHECK_THROWS_AS(StackedCombiner::from_matrix(Eigen::MatrixXcd()),
                        std::invalid_argument);
    }

    TEST_CASE("on-grid arrival through an invertible stack is recovered exactly")
    {
        const UraGeometry rx{2, 2};
        const Codebooks cb = square_codebooks(8);
        const StackedCombiner sc = StackedCombiner::from_codebooks(cb);
        const DoaGrid grid = make_doa_grid(-1.0, 1.2, 13, -0.6, 0.0, 7);
        const DoaGridTable table = tabulate_doa_grid(grid, rx);

        const int true_index = 5 * 7 + 3; // interior grid node
        const Direction truth = grid.dirs[static_cast<std::size_t>(true_index)];
        const std::complex<double> alpha(0.7, -1.1);
        const Eigen::VectorXcd beta = sc.w.adjoint() * (alpha * ura_steering(rx, truth));

        const DoaEstimate est = recover_doa(beta, sc, table);
        CHECK(est.grid_index == true_index);
        CHECK(std::abs(est.dir.x - truth.x) == 0.0);
        CHECK(std::abs(est.dir.z - truth.z) == 0.0);

        // Winner power is |alpha|^2 n_rx^2 because a^H a = n_rx at the truth.
        const double want = std::norm(alpha) * 16.0;
        CHECK(std::abs(est.power / want - 1.0) < 1e-9);

        // The two overloads agree, and path_power reproduces the winner score.
        const DoaEstimate direct = recover_doa(beta, sc, rx, grid);
        CHECK(direct.grid_index == est.grid_index);
        CHECK(std::abs(direct.power - est.power) <= 1e-12 * est.power);
        CHECK(std::abs(path_power(beta, sc, rx, est.dir) - est.power) <= 1e-12 * est.power);
    }

    TEST_CASE("arrival recovery rejects malformed coefficients")
    {
        const UraGeometry rx{2, 2};
        const Codebooks cb = square_codebooks(15);
        const StackedCombiner sc = StackedCombiner::from_codebooks(cb);
        const DoaGridTable table = tabulate_doa_grid(make_doa_grid(-1, 1, 5, -0.5, 0, 3), rx);
        CHECK_THROWS_AS(recover_doa(Eigen::VectorXcd::Zero(4), sc, table),
                        std::invalid_argument);
        CHECK_THROWS_AS(recover_doa(Eigen::VectorXcd::Ones(3), sc, table),
                        std::invalid_argument);
        CHECK_THROWS_AS(path_power(Eigen::VectorXcd::Ones(3), sc, rx, Direction(1, 0, 0)),
                        std::invalid_argument);
        CHECK_THROWS_AS(tabulate_doa_grid(DoaGrid{}, rx), std::invalid_argument);
    }

    TEST_CASE("grid argmax never loses to an explicit scan")
    {
        const UraGeometry rx{2, 2};
        const Codebooks cb = square_codebooks(23);
        const StackedCombiner sc = StackedCombiner::from_codebooks(cb);
        const DoaGrid grid = make_doa_grid(-1.0, 1.3, 11, -0.6, 0.0, 5);
        const DoaGridTable table = tabulate_doa_grid(grid, rx);

        std::mt19937_64 rng = make_stream(3, {0xD0A});
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int probe = 0; probe < 20; ++probe)
        {
            Eigen::VectorXcd beta(4);
            for (int i = 0; i < 4; ++i)
                beta(i) = std::complex<double>(gauss(rng), gauss(rng));
            const DoaEstimate est = recover_doa(beta, sc, table);
            double best = -1.0;
            int best_j = -1;
            for (std::size_t j = 0; j < grid.dirs.size(); ++j)
            {
                const double p = path_power(beta, sc, rx, grid.dirs[j]);
                if (p > best)
                {
                    best = p;
                    best_j = static_cast<int>(j);
                }
            }
            CHECK(est.grid_index == best_j);
            CHECK(std::abs(est.power - best) <= 1e-11 * (1.0 + best));
        }
    }
}
