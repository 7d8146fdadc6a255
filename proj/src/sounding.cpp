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

#include "mmloc/sounding.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "mmloc/rng.hpp"
#include "mmloc/textio.hpp"

namespace mmloc
{

namespace
{

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

Eigen::MatrixXcd random_phase_matrix(int rows, int cols, std::mt19937_64 &rng)
{
    std::uniform_real_distribution<double> uni(0.0, 2.0 * std::numbers::pi);
    const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
    Eigen::MatrixXcd m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i)
            m(i, j) = std::polar(scale, uni(rng));
    return m;
}

bool full_column_rank(const Eigen::MatrixXcd &m)
{
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(m);
    qr.setThreshold(1e-10);
    return qr.rank() == m.cols();
}

} // namespace

PilotSequence make_pilots(int q_total, int n_rf, int pad)
{
    if (n_rf < 1)
        throw std::invalid_argument("make_pilots: RF chain count must be positive");
    if (pad < 0)
        throw std::invalid_argument("make_pilots: pad must be non-negative");
    const int payload = q_total - 2 * pad;
    if (payload < 1 || !is_power_of_two(payload))
        throw std::invalid_argument("make_pilots: payload length must be a positive power of two");

    // One constant-modulus pseudo-random phase sequence replicated on every RF
    // chain, so the pilot matrix has rank one and a sharp delay autocorrelation.
    // The sequence is a fixed library constant; the modulus gives unit average
    // symbol energy over the padded frame.
    const double a = std::sqrt(static_cast<double>(q_total) / (payload * n_rf));
    PilotSequence p;
    p.pad = pad;
    p.payload = payload;
    p.s = Eigen::MatrixXcd::Zero(n_rf, q_total);
    std::mt19937_64 rng = make_stream(0x9D70C0DEULL, {0x417});
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (int q = 0; q < payload; ++q)
        p.s.col(pad + q).setConstant(std::polar(a, phase(rng)));
    return p;
}

Codebooks make_codebooks(const CodebookConfig &cfg, std::uint64_t seed)
{
    if (cfg.n_tx_rf < 1 || cfg.n_rx_rf < 1 || cfg.m_t < 1 || cfg.m_r < 1)
        throw std::invalid_argument("make_codebooks: counts must be positive");
    if (cfg.n_tx_rf > cfg.n_tx || cfg.n_rx_rf > cfg.n_rx)
        throw std::invalid_argument("make_codebooks: RF chains exceed antenna count");

    Codebooks cb;
    cb.cfg = cfg;
    std::mt19937_64 rng_t = make_stream(seed, {0x7C5});
    for (int m = 0; m < cfg.m_t; ++m)
        cb.precoders.push_back(random_phase_matrix(cfg.n_tx, cfg.n_tx_rf, rng_t));

    std::mt19937_64 rng_r = make_stream(seed, {0xC0B});
    for (int m = 0; m < cfg.m_r; ++m)
    {
        Eigen::MatrixXcd w = random_phase_matrix(cfg.n_rx, cfg.n_rx_rf, rng_r);
        while (!full_column_rank(w))
            w = random_phase_matrix(cfg.n_rx, cfg.n_rx_rf, rng_r);
        cb.combiners.push_back(w);
    }
    return cb;
}

std::vector<Eigen::MatrixXcd> whitened_combiners(const Codebooks &cb)
{
    std::vector<Eigen::MatrixXcd> out;
    out.reserve(cb.combiners.size());
    for (const Eigen::MatrixXcd &w : cb.combiners)
    {
        const Eigen::MatrixXcd gram = w.adjoint() * w;
        Eigen::LLT<Eigen::MatrixXcd> llt(gram);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("whitened_combiners: combiner Gram not positive definite");
        // Wb = W L^{-H}  <=>  Wb^H = L^{-1} W^H
        Eigen::MatrixXcd wbh = llt.matrixL().solve(w.adjoint());
        out.push_back(wbh.adjoint());
    }
    return out;
}

Eigen::MatrixXcd stacked_whitened(const Codebooks &cb)
{
    const std::vector<Eigen::MatrixXcd> wb = whitened_combiners(cb);
    const int n_rx = cb.cfg.n_rx;
    const int krf = cb.cfg.n_rx_rf;
    Eigen::MatrixXcd stack(n_rx, static_cast<int>(wb.size()) * krf);
    for (std::size_t c = 0; c < wb.size(); ++c)
        stack.middleCols(static_cast<int>(c) * krf, krf) = wb[c];
    return stack;
}

ChannelTaps channel_from_paths(const std::vector<PathParams> &paths, const UraGeometry &tx,
                               const UraGeometry &rx, int taps, const PulseShape &pulse,
                               double t0_seconds)
{
    if (taps < 1)
        throw std::invalid_argument("channel_from_paths: tap count must be positive");
    const int n_paths = static_cast<int>(paths.size());
    ChannelTaps ch;
    ch.ar.resize(rx.size(), n_paths);
    ch.at.resize(tx.size(), n_paths);
    ch.dr.resize(taps, n_paths);
    ch.gains.resize(n_paths);
    for (int l = 0; l < n_paths; ++l)
    {
        ch.ar.col(l) = ura_steering(rx, paths[l].doa);
        ch.at.col(l) = ura_steering(tx, paths[l].dod);
        ch.dr.col(l) = delay_response(taps, paths[l].delay_s - t0_seconds, pulse).real();
        ch.gains(l) = paths[l].gain;
    }
    ch.has_factors = true;

    ch.h.assign(taps, Eigen::MatrixXcd::Zero(rx.size(), tx.size()));
    for (int l = 0; l < n_paths; ++l)
    {
        const Eigen::MatrixXcd outer = ch.gains(l) * ch.ar.col(l) * ch.at.col(l).adjoint();
        for (int d = 0; d < taps; ++d)
            ch.h[d] += ch.dr(d, l) * outer;
    }
    return ch;
}

ObservationSet synthesize_observation(const ChannelTaps &channel, const Codebooks &cb,
                                      const PilotSequence &pilots, double noise_power,
                                      std::uint64_t noise_seed, double t0_seconds)
{
    const int q_total = pilots.q_total();
    const int taps = channel.taps();
    const int n_tx = cb.cfg.n_tx;
    const int n_rx = cb.cfg.n_rx;
    const int krf = cb.cfg.n_rx_rf;
    if (pilots.n_rf() != cb.cfg.n_tx_rf)
        throw std::invalid_argument("synthesize_observation: pilot RF count mismatch");
    if (taps > 0 && (channel.h[0].rows() != n_rx || channel.h[0].cols() != n_tx))
        throw std::invalid_argument("synthesize_observation: channel dimensions mismatch");

    const std::vector<Eigen::MatrixXcd> wb = whitened_combiners(cb);

    ObservationSet obs;
    obs.noise_power = noise_power > 0.0 ? noise_power : 0.0;
    obs.t0 = t0_seconds;
    obs.q_total = q_total;
    obs.m_t = cb.cfg.m_t;
    obs.m_r = cb.cfg.m_r;
    obs.n_rx_rf = krf;
    obs.y = Eigen::MatrixXcd::Zero(cb.cfg.m_t * q_total, cb.cfg.m_r * krf);

    std::mt19937_64 noise_rng = make_stream(noise_seed, {0x4E0});
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double sigma = noise_power > 0.0 ? std::sqrt(noise_power / 2.0) : 0.0;

    for (int m = 0; m < cb.cfg.m_t; ++m)
    {
        const Eigen::MatrixXcd x = cb.precoders[m] * pilots.s; // n_tx x Q

        // Antenna-domain frame before combining: z[:, q] = sum_d H[d] x[:, q-d].
        Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(n_rx, q_total);
        if (channel.has_factors)
        {
            const int n_paths = static_cast<int>(channel.gains.size());
            for (int l = 0; l < n_paths; ++l)
            {
                const Eigen::RowVectorXcd g = channel.at.col(l).adjoint() * x; // 1 x Q
                Eigen::RowVectorXcd conv = Eigen::RowVectorXcd::Zero(q_total);
                for (int d = 0; d < taps; ++d)
                {
                    const double w = channel.dr(d, l);
                    if (w == 0.0)
                        continue;
                    conv.tail(q_total - d) += w * g.head(q_total - d);
                }
                z.noalias() += (channel.gains(l) * channel.ar.col(l)) * conv;
            }
        }
        else
        {
            for (int d = 0; d < taps; ++d)
                z.rightCols(q_total - d).noalias() += channel.h[d] * x.leftCols(q_total - d);
        }

        for (int c = 0; c < cb.cfg.m_r; ++c)
        {
            Eigen::MatrixXcd frame = wb[c].adjoint() * z; // krf x Q, whitened signal part
            if (sigma > 0.0)
            {
                Eigen::MatrixXcd noise(n_rx, q_total);
                for (int q = 0; q < q_total; ++q)
                    for (int a = 0; a < n_rx; ++a)
                        noise(a, q) = std::complex<double>(sigma * gauss(noise_rng),
                                                           sigma * gauss(noise_rng));
                frame.noalias() += wb[c].adjoint() * noise;
            }
            for (int q = 0; q < q_total; ++q)
                obs.y.row(m * q_total + q).segment(c * krf, krf) = frame.col(q).transpose();
        }
    }
    return obs;
}

void observation_to_text(const ObservationSet &obs, std::ostream &os)
{
    os << "observation v1\n";
    os << obs.y.rows() << ' ' << obs.y.cols() << ' ' << obs.q_total << ' ' << obs.m_t << ' '
       << obs.m_r << ' ' << obs.n_rx_rf << "\n";
    os << fmt_double(obs.noise_power) << ' ' << fmt_double(obs.t0) << "\n";
    for (Eigen::Index r = 0; r < obs.y.rows(); ++r)
    {
        for (Eigen::Index c = 0; c < obs.y.cols(); ++c)
        {
            if (c)
                os << ' ';
            os << fmt_double(obs.y(r, c).real()) << ' ' << fmt_double(obs.y(r, c).imag());
        }
        os << "\n";
    }
}

ObservationSet observation_from_text(std::istream &is)
{
    expect_token(is, "observation");
    expect_token(is, "v1");
    const long rows = read_long(is);
    const long cols = read_long(is);
    ObservationSet obs;
    obs.q_total = static_cast<int>(read_long(is));
    obs.m_t = static_cast<int>(read_long(is));
    obs.m_r = static_cast<int>(read_long(is));
    obs.n_rx_rf = static_cast<int>(read_long(is));
    obs.noise_power = read_double(is);
    obs.t0 = read_double(is);
    obs.y.resize(rows, cols);
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c)
        {
            const double re = read_double(is);
            const double im = read_double(is);
            obs.y(r, c) = {re, im};
        }
    return obs;
}

} // namespace mmloc
