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

#ifndef MMLOC_SOUNDING_HPP
#define MMLOC_SOUNDING_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mmloc/array_geom.hpp"
#include "mmloc/scene.hpp"

namespace mmloc
{

// Frame-synchronous pilot block: s (n_rf x q_total) is zero for pad symbols,
// then a fixed constant-modulus pseudo-random phase payload replicated across
// RF chains (rank one, sharp delay autocorrelation), then pad zeros again.
// Average symbol energy is one: (1/Q) sum_q |s[q]|^2 = 1.
struct PilotSequence
{
    Eigen::MatrixXcd s;
    int pad = 0;
    int payload = 0;

    int q_total() const { return static_cast<int>(s.cols()); }
    int n_rf() const { return static_cast<int>(s.rows()); }
};

// payload = q_total - 2*pad must be a positive power of two.
PilotSequence make_pilots(int q_total, int n_rf, int pad);

struct CodebookConfig
{
    int n_tx = 16;
    int n_tx_rf = 2;
    int n_rx = 64;
    int n_rx_rf = 4;
    int m_t = 16; // training precoders
    int m_r = 4;  // training combiners
};

// Random-phase analog stages with identity baseband: every entry has modulus
// 1/sqrt(n_antennas), so each column has unit norm.
struct Codebooks
{
    CodebookConfig cfg;
    std::vector<Eigen::MatrixXcd> precoders; // m_t of (n_tx x n_tx_rf)
    std::vector<Eigen::MatrixXcd> combiners; // m_r of (n_rx x n_rx_rf)
};

// Deterministic per seed. Combiners are redrawn until full column rank.
Codebooks make_codebooks(const CodebookConfig &cfg, std::uint64_t seed);

// Per-combiner whitening: with G = W^H W = L L^H, returns Wb = W L^{-H} so
// that Wb^H Wb = I and combined noise stays white.
std::vector<Eigen::MatrixXcd> whitened_combiners(const Codebooks &cb);

// All whitened combiners side by side: n_rx x (m_r * n_rx_rf).
Eigen::MatrixXcd stacked_whitened(const Codebooks &cb);

// Tapped channel H[d], d = 0..taps-1, each n_rx x n_tx. When built from a path
// list the rank-one factors are kept alongside so downstream synthesis can use
// the factored form; taps stay the authoritative definition.
struct ChannelTaps
{
    std::vector<Eigen::MatrixXcd> h;

    // Optional per-path factors: h[d] = ar * diag(col d of drT..) see .cpp.
    Eigen::MatrixXcd ar;    // n_rx x n_paths
    Eigen::MatrixXcd at;    // n_tx x n_paths
    Eigen::MatrixXd dr;     // taps x n_paths (real pulse samples)
    Eigen::VectorXcd gains; // n_paths
    bool has_factors = false;

    int taps() const { return static_cast<int>(h.size()); }
};

// H[d] = sum_l gain_l a_rx(doa_l) a_tx(dod_l)^H p(ts*d - (delay_l - t0)).
ChannelTaps channel_from_paths(const std::vector<PathParams> &paths, const UraGeometry &tx,
                               const UraGeometry &rx, int taps, const PulseShape &pulse,
                               double t0_seconds);

// Stacked whitened observation. Row index m*Q + q (frame, symbol), column
// index c*n_rx_rf + k (combiner, RF chain).
struct ObservationSet
{
    Eigen::MatrixXcd y;
    double noise_power = 0.0; // per-antenna complex noise variance
    double t0 = 0.0;
    int q_total = 0;
    int m_t = 0;
    int m_r = 0;
    int n_rx_rf = 0;
};

// y_{c,m}[q] = W_c^H sum_d H[d] F_m s[q-d] + W_c^H n, then whitened with the
// Cholesky factor of W_c^H W_c and stacked. noise_power <= 0 disables noise.
ObservationSet synthesize_observation(const ChannelTaps &channel, const Codebooks &cb,
                                      const PilotSequence &pilots, double noise_power,
                                      std::uint64_t noise_seed, double t0_seconds = 0.0);

void observation_to_text(const ObservationSet &obs, std::ostream &os);
ObservationSet observation_from_text(std::istream &is);

} // namespace mmloc

#endif
