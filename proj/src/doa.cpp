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

#include "mmloc/doa.hpp"

#include <stdexcept>

namespace mmloc
{

StackedCombiner StackedCombiner::from_codebooks(const Codebooks &cb)
{
    return from_matrix(stacked_whitened(cb));
}

StackedCombiner StackedCombiner::from_matrix(const Eigen::MatrixXcd &stacked)
{
    if (stacked.size() == 0)
        throw std::invalid_argument("StackedCombiner: empty combiner matrix");
    StackedCombiner sc;
    sc.w = stacked;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(stacked);
    sc.pinv = cod.pseudoInverse();
    return sc;
}

DoaGrid make_doa_grid(double az_min_rad, double az_max_rad, int n_az, double el_min_rad,
                      double el_max_rad, int n_el)
{
    if (n_az < 1 || n_el < 1)
        throw std::invalid_argument("make_doa_grid: grid sizes must be positive");
    DoaGrid g;
    g.dirs.reserve(static_cast<std::size_t>(n_az) * n_el);
    for (int a = 0; a < n_az; ++a)
    {
        const double az = n_az == 1 ? 0.5 * (az_min_rad + az_max_rad)
                                    : az_min_rad + (az_max_rad - az_min_rad) * a / (n_az - 1);
        for (int e = 0; e < n_el; ++e)
        {
            const double el = n_el == 1 ? 0.5 * (el_min_rad + el_max_rad)
                                        : el_min_rad + (el_max_rad - el_min_rad) * e / (n_el - 1);
            g.dirs.push_back(Direction::from_azel(az, el));
        }
    }
    return g;
}

double path_power(const Eigen::VectorXcd &beta, const StackedCombiner &sc, const UraGeometry &rx,
                  const Direction &dir)
{
    if (beta.size() != sc.w.cols())
        throw std::invalid_argument("path_power: beta length does not match combiner count");
    const Eigen::VectorXcd a = ura_steering(rx, dir);
    const std::complex<double> corr = (beta.adjoint() * (sc.pinv * a))(0);
    return std::norm(corr);
}

DoaGridTable tabulate_doa_grid(const DoaGrid &grid, const UraGeometry &rx)
{
    if (grid.dirs.empty())
        throw std::invalid_argument("tabulate_doa_grid: empty direction grid");
    DoaGridTable t;
    t.grid = grid;
    t.steering.resize(rx.size(), static_cast<int>(grid.dirs.size()));
    for (std::size_t j = 0; j < grid.dirs.size(); ++j)
        t.steering.col(static_cast<int>(j)) = ura_steering(rx, grid.dirs[j]);
    return t;
}

DoaEstimate recover_doa(const Eigen::VectorXcd &beta, const StackedCombiner &sc,
                        const DoaGridTable &table)
{
    if (beta.size() != sc.w.cols())
        throw std::invalid_argument("recover_doa: beta length does not match combiner count");
    if (beta.isZero(0.0))
        throw std::invalid_argument("recover_doa: beta is identically zero");

    // beta^H pinv(W) computed once, then correlated with every candidate.
    const Eigen::RowVectorXcd lhs = beta.adjoint() * sc.pinv; // 1 x n_rx
    const Eigen::RowVectorXcd corr = lhs * table.steering;
    DoaEstimate best;
    double best_p = -1.0;
    for (Eigen::Index j = 0; j < corr.size(); ++j)
    {
        const double p = std::norm(corr(j));
        if (p > best_p)
        {
            best_p = p;
            best.dir = table.grid.dirs[static_cast<std::size_t>(j)];
            best.grid_index = static_cast<int>(j);
            best.power = p;
        }
    }
    return best;
}

DoaEstimate recover_doa(const Eigen::VectorXcd &beta, const StackedCombiner &sc,
                        const UraGeometry &rx, const DoaGrid &grid)
{
    return recover_doa(beta, sc, tabulate_doa_grid(grid, rx));
}

} // namespace mmloc
