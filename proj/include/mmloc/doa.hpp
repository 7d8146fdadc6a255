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

#ifndef MMLOC_DOA_HPP
#define MMLOC_DOA_HPP

#include <vector>

#include "mmloc/sounding.hpp"

namespace mmloc
{

// All whitened combiners side by side with a precomputed pseudo-inverse, used
// to map per-path combined coefficients back to the antenna domain.
struct StackedCombiner
{
    Eigen::MatrixXcd w;    // n_rx x k
    Eigen::MatrixXcd pinv; // k x n_rx

    static StackedCombiner from_codebooks(const Codebooks &cb);
    static StackedCombiner from_matrix(const Eigen::MatrixXcd &stacked);
};

// Candidate arrival directions; product azimuth x elevation grid by default.
struct DoaGrid
{
    std::vector<Direction> dirs;
};

DoaGrid make_doa_grid(double az_min_rad, double az_max_rad, int n_az, double el_min_rad,
                      double el_max_rad, int n_el);

// Grid plus its steering vectors, tabulated once per campaign.
struct DoaGridTable
{
    DoaGrid grid;
    Eigen::MatrixXcd steering; // n_rx x n_dirs
};

DoaGridTable tabulate_doa_grid(const DoaGrid &grid, const UraGeometry &rx);

struct DoaEstimate
{
    Direction dir;
    int grid_index = 0;
    double power = 0.0; // |beta^H pinv(W) a_rx(dir)|^2 at the winner
};

// Grid argmax of |beta^H pinv(W) a_rx(dir)|. Ties break to the lowest grid
// index; an all-zero beta is rejected.
DoaEstimate recover_doa(const Eigen::VectorXcd &beta, const StackedCombiner &sc,
                        const UraGeometry &rx, const DoaGrid &grid);
DoaEstimate recover_doa(const Eigen::VectorXcd &beta, const StackedCombiner &sc,
                        const DoaGridTable &table);

// |beta^H pinv(W) a_rx(dir)|^2 for one candidate direction.
double path_power(const Eigen::VectorXcd &beta, const StackedCombiner &sc, const UraGeometry &rx,
                  const Direction &dir);

} // namespace mmloc

#endif
