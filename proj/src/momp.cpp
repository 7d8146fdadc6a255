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

#include "mmloc/momp.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <stdexcept>

#include "mmloc/textio.hpp"

namespace mmloc
{

DictionarySet build_dictionaries(const UraGeometry &tx, int taps, const PulseShape &pulse,
                                 const Eigen::VectorXd &grid_u1, const Eigen::VectorXd &grid_u2,
                                 const Eigen::VectorXd &grid_tau)
{
    if (grid_u1.size() == 0 || grid_u2.size() == 0 || grid_tau.size() == 0)
        throw std::invalid_argument("build_dictionaries: empty grid");
    DictionarySet d;
    d.grid_u1 = grid_u1;
    d.grid_u2 = grid_u2;
    d.grid_tau = grid_tau;
    d.psi1.resize(tx.nx, grid_u1.size());
    for (int j = 0; j < grid_u1.size(); ++j)
        d.psi1.col(j) = axis_steering(tx.nx, grid_u1(j)).conjugate();
    d.psi2.resize(tx.ny, grid_u2.size());
    for (int j = 0; j < grid_u2.size(); ++j)
        d.psi2.col(j) = axis_steering(tx.ny, grid_u2(j)).conjugate();
    d.psi3.resize(taps, grid_tau.size());
    for (int j = 0; j < grid_tau.size(); ++j)
        d.psi3.col(j) = delay_response(taps, grid_tau(j), pulse);
    return d;
}

namespace
{

Eigen::VectorXd centered_grid(int n)
{
    Eigen::VectorXd g(n);
    for (int j = 0; j < n; ++j)
        g(j) = -1.0 + (j + 0.5) * 2.0 / n;
    return g;
}

} // namespace

DictionarySet default_dictionaries(const UraGeometry &tx, int taps, const PulseShape &pulse,
                                   int dod_oversample, int delay_oversample)
{
    if (dod_oversample < 1 || delay_oversample < 1)
        throw std::invalid_argument("default_dictionaries: oversampling must be positive");
    const int n3 = delay_oversample * taps;
    Eigen::VectorXd tau(n3);
    for (int j = 0; j < n3; ++j)
        tau(j) = j * pulse.ts / delay_oversample;
    return build_dictionaries(tx, taps, pulse, centered_grid(dod_oversample * tx.nx),
                              centered_grid(dod_oversample * tx.ny), tau);
}

void append_u1_atom(DictionarySet &dict, const UraGeometry &tx, double u1)
{
    dict.grid_u1.conservativeResize(dict.grid_u1.size() + 1);
    dict.grid_u1(dict.grid_u1.size() - 1) = u1;
    dict.psi1.conservativeResize(Eigen::NoChange, dict.psi1.cols() + 1);
    dict.psi1.col(dict.psi1.cols() - 1) = axis_steering(tx.nx, u1).conjugate();
}

void append_u2_atom(DictionarySet &dict, const UraGeometry &tx, double u2)
{
    dict.grid_u2.conservativeResize(dict.grid_u2.size() + 1);
    dict.grid_u2(dict.grid_u2.size() - 1) = u2;
    dict.psi2.conservativeResize(Eigen::NoChange, dict.psi2.cols() + 1);
    dict.psi2.col(dict.psi2.cols() - 1) = axis_steering(tx.ny, u2).conjugate();
}

void append_tau_atom(DictionarySet &dict, const PulseShape &pulse, double tau_seconds)
{
    const int taps = static_cast<int>(dict.psi3.rows());
    dict.grid_tau.conservativeResize(dict.grid_tau.size() + 1);
    dict.grid_tau(dict.grid_tau.size() - 1) = tau_seconds;
    dict.psi3.conservativeResize(Eigen::NoChange, dict.psi3.cols() + 1);
    dict.psi3.col(dict.psi3.cols() - 1) = delay_response(taps, tau_seconds, pulse);
}

std::complex<double> MeasurementTensor::entry(int row, int i1, int i2, int i3) const
{
    if (row < 0 || row >= rows() || i1 < 0 || i1 >= ax || i2 < 0 || i2 >= ay || i3 < 0 ||
        i3 >= taps)
        throw std::out_of_range("MeasurementTensor::entry: index out of range");
    const int m = row / q_total;
    const int q = row % q_total;
    const int u = q - i3;
    if (u < 0 || u >= q_total)
        return {0.0, 0.0};
    return x[m](i1 * ay + i2, u);
}

MeasurementTensor build_measurement(const Codebooks &cb, const PilotSequence &pilots, int taps,
                                    const UraGeometry &tx)
{
    if (tx.size() != cb.cfg.n_tx)
        throw std::invalid_argument("build_measurement: TX geometry does not match codebooks");
    if (pilots.n_rf() != cb.cfg.n_tx_rf)
        throw std::invalid_argument("build_measurement: pilot RF count mismatch");
    if (taps < 1)
        throw std::invalid_argument("build_measurement: tap count must be positive");

    MeasurementTensor mt;
    mt.ax = tx.nx;
    mt.ay = tx.ny;
    mt.taps = taps;
    mt.q_total = pilots.q_total();
    mt.m_t = cb.cfg.m_t;
    for (int m = 0; m < cb.cfg.m_t; ++m)
        mt.x.push_back(cb.precoders[m] * pilots.s);

    // Rank-one factorization of the pilot block: s[q] = sum_r (sv_r u_r) conj(v_r[q]).
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pilots.s, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();
    mt.frame_x.assign(cb.cfg.m_t, {});
    for (int r = 0; r < sv.size(); ++r)
    {
        if (sv(r) <= sv(0) * 1e-13)
            break;
        mt.pilot_w.push_back(svd.matrixV().col(r).conjugate());
        for (int m = 0; m < cb.cfg.m_t; ++m)
            mt.frame_x[m].push_back(sv(r) * (cb.precoders[m] * svd.matrixU().col(r)));
    }
    return mt;
}

namespace
{

using RowMajorMapC =
    Eigen::Map<const Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

struct SolverWork
{
    // Per-solve tables, see momp_solve.
    std::vector<Eigen::MatrixXcd> e;                 // [r]: Q x n3
    std::vector<std::vector<Eigen::MatrixXcd>> pv;   // [m][r]: n1 x n2, a(j)^H x
    std::vector<std::vector<Eigen::MatrixXcd>> pvc;  // conj(pv)
    std::vector<std::vector<Eigen::MatrixXcd>> p1xc; // [m][r]: conj(psi1^T x2d), n1 x ay
    std::vector<std::vector<Eigen::RowVectorXcd>> eg; // [r][r']: 1 x n3 column Grams
    std::vector<std::vector<Eigen::MatrixXcd>> pg;    // [r][r']: n1 x n2 frame Grams
    double norm_scale = 0.0; // typical largest atom norm^2, for skip threshold
};

SolverWork precompute(const MeasurementTensor &phi, const DictionarySet &psi)
{
    const int q = phi.q_total;
    const int rho = phi.rank();
    const int n3 = psi.n3();
    SolverWork w;

    w.e.resize(rho);
    for (int r = 0; r < rho; ++r)
    {
        Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(q, n3);
        for (int i3 = 0; i3 < phi.taps && i3 < q; ++i3)
            e.bottomRows(q - i3).noalias() += phi.pilot_w[r].head(q - i3) * psi.psi3.row(i3);
        w.e[r] = std::move(e);
    }

    w.pv.resize(phi.m_t);
    w.pvc.resize(phi.m_t);
    w.p1xc.resize(phi.m_t);
    for (int m = 0; m < phi.m_t; ++m)
    {
        for (int r = 0; r < rho; ++r)
        {
            RowMajorMapC x2d(phi.frame_x[m][r].data(), phi.ax, phi.ay);
            const Eigen::MatrixXcd p1x = psi.psi1.transpose() * x2d;
            w.p1xc[m].push_back(p1x.conjugate());
            Eigen::MatrixXcd pv = p1x * psi.psi2;
            w.pvc[m].push_back(pv.conjugate());
            w.pv[m].push_back(std::move(pv));
        }
    }

    w.eg.assign(rho, std::vector<Eigen::RowVectorXcd>(rho));
    w.pg.assign(rho, std::vector<Eigen::MatrixXcd>(rho));
    for (int r = 0; r < rho; ++r)
        for (int r2 = 0; r2 < rho; ++r2)
        {
            w.eg[r][r2] = (w.e[r].conjugate().cwiseProduct(w.e[r2])).colwise().sum();
            Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(psi.n1(), psi.n2());
            for (int m = 0; m < phi.m_t; ++m)
                g += w.pvc[m][r].cwiseProduct(w.pv[m][r2]);
            w.pg[r][r2] = std::move(g);
        }

    double max_pg = 0.0, max_eg = 0.0;
    for (int r = 0; r < rho; ++r)
    {
        max_pg = std::max(max_pg, w.pg[r][r].cwiseAbs().maxCoeff());
        max_eg = std::max(max_eg, w.eg[r][r].cwiseAbs().maxCoeff());
    }
    w.norm_scale = max_pg * max_eg;
    return w;
}

// Squared atom norms along one grid axis with the other two fixed.
Eigen::VectorXd norms_dim3(const SolverWork &w, int j1, int j2)
{
    const int rho = static_cast<int>(w.e.size());
    Eigen::RowVectorXcd acc = Eigen::RowVectorXcd::Zero(w.eg[0][0].cols());
    for (int r = 0; r < rho; ++r)
        for (int r2 = 0; r2 < rho; ++r2)
            acc += w.pg[r][r2](j1, j2) * w.eg[r][r2];
    return acc.real().transpose();
}

Eigen::VectorXd norms_dim1(const SolverWork &w, int j2, int j3)
{
    const int rho = static_cast<int>(w.e.size());
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(w.pg[0][0].rows());
    for (int r = 0; r < rho; ++r)
        for (int r2 = 0; r2 < rho; ++r2)
            acc += w.pg[r][r2].col(j2) * w.eg[r][r2](j3);
    return acc.real();
}

Eigen::VectorXd norms_dim2(const SolverWork &w, int j1, int j3)
{
    const int rho = static_cast<int>(w.e.size());
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(w.pg[0][0].cols());
    for (int r = 0; r < rho; ++r)
        for (int r2 = 0; r2 < rho; ++r2)
            acc += w.pg[r][r2].row(j1).transpose() * w.eg[r][r2](j3);
    return acc.real();
}

bool in_support(const std::vector<SparseEntry> &sup, int j1, int j2, int j3)
{
    for (const SparseEntry &e : sup)
        if (e.j1 == j1 && e.j2 == j2 && e.j3 == j3)
            return true;
    return false;
}

// argmax of corr_row_sqnorm / norm2 over allowed candidates; lowest index wins
// ties via strict greater-than. Returns -1 when every candidate is skipped.
int pick_best(const Eigen::VectorXd &corr2, const Eigen::VectorXd &norm2, double norm_eps,
              const std::function<bool(int)> &excluded)
{
    int best = -1;
    double best_score = -1.0;
    for (int j = 0; j < corr2.size(); ++j)
    {
        if (norm2(j) <= norm_eps || excluded(j))
            continue;
        const double score = corr2(j) / norm2(j);
        if (score > best_score)
        {
            best_score = score;
            best = j;
        }
    }
    return best;
}

} // namespace

SparseChannelEstimate momp_solve(const ObservationSet &obs, const MeasurementTensor &phi,
                                 const DictionarySet &psi, const MompConfig &cfg)
{
    const Eigen::MatrixXcd &y = obs.y;
    if (y.rows() != phi.rows())
        throw std::invalid_argument("momp_solve: observation rows do not match measurement");
    if (psi.psi1.rows() != phi.ax || psi.psi2.rows() != phi.ay || psi.psi3.rows() != phi.taps)
        throw std::invalid_argument("momp_solve: dictionary dimensions do not match measurement");
    if (cfg.max_paths < 0 || cfg.stop_fraction < 0.0 || cfg.max_sweeps < 1)
        throw std::invalid_argument("momp_solve: invalid configuration");

    SparseChannelEstimate est;
    const double y2 = y.squaredNorm();
    est.residual_sq = y2;
    if (y2 == 0.0 || cfg.max_paths == 0)
        return est;

    const int q = phi.q_total;
    const int m_t = phi.m_t;
    const int rho = phi.rank();
    const int taps = phi.taps;
    const int no = static_cast<int>(y.cols());
    const int n1 = psi.n1(), n2 = psi.n2(), n3 = psi.n3();

    const SolverWork w = precompute(phi, psi);
    const double norm_eps = std::max(w.norm_scale * 1e-28, 1e-300);

    Eigen::MatrixXcd r = y;
    Eigen::MatrixXcd atoms(y.rows(), 0);
    Eigen::MatrixXcd coef;

    std::vector<std::vector<Eigen::MatrixXcd>> cb(m_t, std::vector<Eigen::MatrixXcd>(rho));

    for (int iter = 0; iter < cfg.max_paths; ++iter)
    {
        // Tap-domain pilot correlations of the residual, per frame and rank:
        // cb[m][r](i3, col) = sum_q conj(w_r[q-i3]) R_m(q, col).
        for (int m = 0; m < m_t; ++m)
            for (int rr = 0; rr < rho; ++rr)
            {
                Eigen::MatrixXcd c(taps, no);
                for (int i3 = 0; i3 < taps; ++i3)
                    c.row(i3) = phi.pilot_w[rr].head(q - i3).adjoint() * r.middleRows(m * q + i3, q - i3);
                cb[m][rr] = std::move(c);
            }

        // Sequential initialization: project each dimension onto its dictionary
        // in turn, remaining dimensions marginalized by norm.
        Eigen::MatrixXcd v1 = Eigen::MatrixXcd::Zero(n1, phi.ay * taps * no);
        for (int m = 0; m < m_t; ++m)
            for (int rr = 0; rr < rho; ++rr)
            {
                const Eigen::Map<const Eigen::VectorXcd> cbv(cb[m][rr].data(), taps * no);
                for (int i2 = 0; i2 < phi.ay; ++i2)
                    v1.middleCols(i2 * taps * no, taps * no).noalias() +=
                        w.p1xc[m][rr].col(i2) * cbv.transpose();
            }
        int j1 = 0;
        v1.rowwise().squaredNorm().maxCoeff(&j1);

        Eigen::MatrixXcd v2 = Eigen::MatrixXcd::Zero(n2, taps * no);
        for (int m = 0; m < m_t; ++m)
            for (int rr = 0; rr < rho; ++rr)
            {
                const Eigen::Map<const Eigen::VectorXcd> cbv(cb[m][rr].data(), taps * no);
                v2.noalias() += w.pvc[m][rr].row(j1).transpose() * cbv.transpose();
            }
        int j2 = 0;
        v2.rowwise().squaredNorm().maxCoeff(&j2);

        Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(taps, no);
        for (int m = 0; m < m_t; ++m)
            for (int rr = 0; rr < rho; ++rr)
                u.noalias() += w.pvc[m][rr](j1, j2) * cb[m][rr];
        const Eigen::MatrixXcd v3 = psi.psi3.adjoint() * u;
        int j3 = 0;
        v3.rowwise().squaredNorm().maxCoeff(&j3);

        // Alternating per-dimension maximization of |atom^H R| / |atom|.
        bool stuck = false;
        int clean = 0;
        for (int sweep = 0; sweep < cfg.max_sweeps && clean < 3; ++sweep)
        {
            const int dim = sweep % 3;
            int picked = -1;
            if (dim == 0)
            {
                Eigen::MatrixXcd corr = Eigen::MatrixXcd::Zero(n1, no);
                for (int m = 0; m < m_t; ++m)
                    for (int rr = 0; rr < rho; ++rr)
                    {
                        const Eigen::RowVectorXcd c =
                            w.e[rr].col(j3).adjoint() * r.middleRows(m * q, q);
                        corr.noalias() += w.pvc[m][rr].col(j2) * c;
                    }
                picked = pick_best(corr.rowwise().squaredNorm(), norms_dim1(w, j2, j3), norm_eps,
                                   [&](int j) { return in_support(est.entries, j, j2, j3); });
                if (picked >= 0 && picked != j1)
                {
                    j1 = picked;
                    clean = 0;
                }
                else
                    ++clean;
            }
            else if (dim == 1)
            {
                Eigen::MatrixXcd corr = Eigen::MatrixXcd::Zero(n2, no);
                for (int m = 0; m < m_t; ++m)
                    for (int rr = 0; rr < rho; ++rr)
                    {
                        const Eigen::RowVectorXcd c =
                            w.e[rr].col(j3).adjoint() * r.middleRows(m * q, q);
                        corr.noalias() += w.pvc[m][rr].row(j1).transpose() * c;
                    }
                picked = pick_best(corr.rowwise().squaredNorm(), norms_dim2(w, j1, j3), norm_eps,
                                   [&](int j) { return in_support(est.entries, j1, j, j3); });
                if (picked >= 0 && picked != j2)
                {
                    j2 = picked;
                    clean = 0;
                }
                else
                    ++clean;
            }
            else
            {
                Eigen::MatrixXcd corr = Eigen::MatrixXcd::Zero(n3, no);
                for (int rr = 0; rr < rho; ++rr)
                {
                    Eigen::MatrixXcd rt = Eigen::MatrixXcd::Zero(q, no);
                    for (int m = 0; m < m_t; ++m)
                        rt.noalias() += w.pvc[m][rr](j1, j2) * r.middleRows(m * q, q);
                    corr.noalias() += w.e[rr].adjoint() * rt;
                }
                picked = pick_best(corr.rowwise().squaredNorm(), norms_dim3(w, j1, j2), norm_eps,
                                   [&](int j) { return in_support(est.entries, j1, j2, j); });
                if (picked >= 0 && picked != j3)
                {
                    j3 = picked;
                    clean = 0;
                }
                else
                    ++clean;
            }
            if (picked < 0 && in_support(est.entries, j1, j2, j3))
            {
                stuck = true; // every alternative skipped and current is a duplicate
                break;
            }
        }
        if (stuck || in_support(est.entries, j1, j2, j3))
            break;

        // Joint least-squares refit over the grown support.
        Eigen::VectorXcd atom = Eigen::VectorXcd::Zero(y.rows());
        for (int m = 0; m < m_t; ++m)
            for (int rr = 0; rr < rho; ++rr)
                atom.segment(m * q, q) += w.pv[m][rr](j1, j2) * w.e[rr].col(j3);

        atoms.conservativeResize(Eigen::NoChange, atoms.cols() + 1);
        atoms.col(atoms.cols() - 1) = atom;
        coef = atoms.colPivHouseholderQr().solve(y);
        r = y - atoms * coef;

        SparseEntry e;
        e.j1 = j1;
        e.j2 = j2;
        e.j3 = j3;
        est.entries.push_back(e);
        est.residual_sq = r.squaredNorm();
        est.residual_history.push_back(est.residual_sq);

        if (est.residual_sq <= cfg.stop_fraction * y2)
            break;
    }

    for (std::size_t k = 0; k < est.entries.size(); ++k)
        est.entries[k].beta = coef.row(static_cast<int>(k)).transpose();
    return est;
}

Eigen::VectorXcd composite_atom(const MeasurementTensor &phi, const DictionarySet &psi, int j1,
                                int j2, int j3)
{
    if (j1 < 0 || j1 >= psi.n1() || j2 < 0 || j2 >= psi.n2() || j3 < 0 || j3 >= psi.n3())
        throw std::out_of_range("composite_atom: grid index out of range");
    const int q = phi.q_total;
    Eigen::VectorXcd atom = Eigen::VectorXcd::Zero(phi.rows());
    Eigen::VectorXcd dir(phi.ax * phi.ay);
    for (int i1 = 0; i1 < phi.ax; ++i1)
        for (int i2 = 0; i2 < phi.ay; ++i2)
            dir(i1 * phi.ay + i2) = psi.psi1(i1, j1) * psi.psi2(i2, j2);
    for (int m = 0; m < phi.m_t; ++m)
    {
        const Eigen::RowVectorXcd proj = dir.transpose() * phi.x[m]; // 1 x Q
        for (int qq = 0; qq < q; ++qq)
        {
            std::complex<double> acc(0.0, 0.0);
            const int dmax = std::min(phi.taps - 1, qq);
            for (int i3 = 0; i3 <= dmax; ++i3)
                acc += psi.psi3(i3, j3) * proj(qq - i3);
            atom(m * q + qq) = acc;
        }
    }
    return atom;
}

double residual_model(const ObservationSet &obs, const MeasurementTensor &phi,
                      const DictionarySet &psi, const SparseChannelEstimate &est)
{
    Eigen::MatrixXcd model = Eigen::MatrixXcd::Zero(obs.y.rows(), obs.y.cols());
    for (const SparseEntry &e : est.entries)
    {
        if (e.beta.size() != obs.y.cols())
            throw std::invalid_argument("residual_model: beta length mismatch");
        model.noalias() += composite_atom(phi, psi, e.j1, e.j2, e.j3) * e.beta.transpose();
    }
    return (obs.y - model).squaredNorm();
}

void estimate_to_text(const SparseChannelEstimate &est, std::ostream &os)
{
    os << "estimate v1\n";
    os << "entries " << est.entries.size() << "\n";
    os << "residual_sq " << fmt_double(est.residual_sq) << "\n";
    os << "history";
    for (double h : est.residual_history)
        os << ' ' << fmt_double(h);
    os << "\n";
    for (const SparseEntry &e : est.entries)
    {
        os << "entry " << e.j1 << ' ' << e.j2 << ' ' << e.j3 << ' ' << e.beta.size();
        for (Eigen::Index i = 0; i < e.beta.size(); ++i)
            os << ' ' << fmt_double(e.beta(i).real()) << ' ' << fmt_double(e.beta(i).imag());
        os << "\n";
    }
}

SparseChannelEstimate estimate_from_text(std::istream &is)
{
    expect_token(is, "estimate");
    expect_token(is, "v1");
    SparseChannelEstimate est;
    expect_token(is, "entries");
    const long n = read_long(is);
    expect_token(is, "residual_sq");
    est.residual_sq = read_double(is);
    expect_token(is, "history");
    for (long i = 0; i < n; ++i)
        est.residual_history.push_back(read_double(is));
    for (long i = 0; i < n; ++i)
    {
        expect_token(is, "entry");
        SparseEntry e;
        e.j1 = static_cast<int>(read_long(is));
        e.j2 = static_cast<int>(read_long(is));
        e.j3 = static_cast<int>(read_long(is));
        const long nb = read_long(is);
        e.beta.resize(nb);
        for (long b = 0; b < nb; ++b)
        {
            const double re = read_double(is);
            const double im = read_double(is);
            e.beta(b) = {re, im};
        }
        est.entries.push_back(e);
    }
    return est;
}

} // namespace mmloc
