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

#ifndef MMLOC_MOMP_HPP
#define MMLOC_MOMP_HPP

#include <iosfwd>
#include <vector>

#include "mmloc/sounding.hpp"

namespace mmloc
{

// Factored dictionaries for the three tensor dimensions: conjugated TX-x and
// TX-y axis steering and sampled delay signatures. Grids are kept alongside so
// selected indices map back to physical parameters.
struct DictionarySet
{
    Eigen::MatrixXcd psi1; // ax x n1, column j = conj(axis_steering(ax, u1[j]))
    Eigen::MatrixXcd psi2; // ay x n2
    Eigen::MatrixXcd psi3; // taps x n3, column j = delay_response(taps, tau[j])
    Eigen::VectorXd grid_u1;
    Eigen::VectorXd grid_u2;
    Eigen::VectorXd grid_tau; // seconds, relative to the sounding time origin

    int n1() const { return static_cast<int>(psi1.cols()); }
    int n2() const { return static_cast<int>(psi2.cols()); }
    int n3() const { return static_cast<int>(psi3.cols()); }
};

DictionarySet build_dictionaries(const UraGeometry &tx, int taps, const PulseShape &pulse,
                                 const Eigen::VectorXd &grid_u1, const Eigen::VectorXd &grid_u2,
                                 const Eigen::VectorXd &grid_tau);

// Cell-centered uniform grids: spatial frequencies on [-1, 1) with
// dod_oversample * n points per TX axis, delays j * ts / delay_oversample.
DictionarySet default_dictionaries(const UraGeometry &tx, int taps, const PulseShape &pulse,
                                   int dod_oversample = 2, int delay_oversample = 4);

// Appends one extra atom to a dictionary dimension (used to place known true
// parameters exactly on the grid).
void append_u1_atom(DictionarySet &dict, const UraGeometry &tx, double u1);
void append_u2_atom(DictionarySet &dict, const UraGeometry &tx, double u2);
void append_tau_atom(DictionarySet &dict, const PulseShape &pulse, double tau_seconds);

// Measurement operator in factored form. The dense entry is
// phi(row=(m*Q+q), i) = [F_m s[q-i3]]_(i1*ay+i2), zero for q-i3 outside the
// pilot block. The pilot matrix is also kept SVD-factored into rank-one
// (scalar sequence, per-frame projected precoder) pairs; the solver works on
// that form and it reproduces the dense entries to machine precision.
struct MeasurementTensor
{
    int ax = 0, ay = 0, taps = 0, q_total = 0, m_t = 0;
    std::vector<Eigen::MatrixXcd> x;                     // per frame: (ax*ay) x Q
    std::vector<Eigen::VectorXcd> pilot_w;               // rank sequences, each length Q
    std::vector<std::vector<Eigen::VectorXcd>> frame_x;  // [frame][rank], each ax*ay

    int rows() const { return m_t * q_total; }
    int rank() const { return static_cast<int>(pilot_w.size()); }
    std::complex<double> entry(int row, int i1, int i2, int i3) const;
};

MeasurementTensor build_measurement(const Codebooks &cb, const PilotSequence &pilots, int taps,
                                    const UraGeometry &tx);

struct SparseEntry
{
    int j1 = 0, j2 = 0, j3 = 0;
    Eigen::VectorXcd beta; // one coefficient per stacked combiner output
};

struct SparseChannelEstimate
{
    std::vector<SparseEntry> entries;        // in selection order
    double residual_sq = 0.0;                // final squared Frobenius residual
    std::vector<double> residual_history;    // after each accepted path
};

struct MompConfig
{
    int max_paths = 10;
    double stop_fraction = 1e-3; // stop when residual^2 <= fraction * |Y|^2
    int max_sweeps = 8;          // alternating-maximization sweeps per selection
};

// Greedy multidimensional matching pursuit: per path, a sequential marginalized
// initialization followed by per-dimension alternating maximization of the
// norm-normalized residual correlation, then a joint least-squares refit of all
// selected coefficients. Already-selected triples are excluded; ties break to
// the lowest index.
SparseChannelEstimate momp_solve(const ObservationSet &obs, const MeasurementTensor &phi,
                                 const DictionarySet &psi, const MompConfig &cfg);

// Dense reference evaluation of one composite atom column (length rows()).
Eigen::VectorXcd composite_atom(const MeasurementTensor &phi, const DictionarySet &psi, int j1,
                                int j2, int j3);

// Squared Frobenius misfit between the observation and the estimate's model.
double residual_model(const ObservationSet &obs, const MeasurementTensor &phi,
                      const DictionarySet &psi, const SparseChannelEstimate &est);

void estimate_to_text(const SparseChannelEstimate &est, std::ostream &os);
SparseChannelEstimate estimate_from_text(std::istream &is);

} // namespace mmloc

#endif
