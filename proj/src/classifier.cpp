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

#include "mmloc/classifier.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "mmloc/rng.hpp"
#include "mmloc/textio.hpp"

namespace mmloc
{

namespace
{

constexpr double kLogFloor = 1e-12;
constexpr int kClasses = 3;

Eigen::VectorXd standardize(const MlpParams &p, const FeatureVector &z)
{
    return (z - p.feat_mean).cwiseQuotient(p.feat_std);
}

Eigen::VectorXd softmax(const Eigen::VectorXd &logits)
{
    const Eigen::VectorXd shifted = logits.array() - logits.maxCoeff();
    Eigen::VectorXd e = shifted.array().exp();
    return e / e.sum();
}

// Batched forward pass; columns are samples. acts[0] is the standardized
// input, acts[l+1] the activation after layer l (softmax on the last).
Eigen::MatrixXd forward_batch(const MlpParams &p, const Eigen::MatrixXd &z_std,
                              std::vector<Eigen::MatrixXd> *acts)
{
    Eigen::MatrixXd a = z_std;
    if (acts)
        acts->push_back(a);
    const std::size_t layers = p.w.size();
    for (std::size_t l = 0; l < layers; ++l)
    {
        Eigen::MatrixXd pre = (p.w[l] * a).colwise() + p.b[l];
        if (l + 1 < layers)
            a = pre.cwiseMax(0.0);
        else
        {
            a = pre;
            for (Eigen::Index col = 0; col < a.cols(); ++col)
            {
                Eigen::VectorXd s = softmax(a.col(col));
                a.col(col) = s;
            }
        }
        if (acts)
            acts->push_back(a);
    }
    return a;
}

int argmax_lowest(const Eigen::VectorXd &v)
{
    int best = 0;
    for (int i = 1; i < v.size(); ++i)
        if (v(i) > v(best))
            best = i;
    return best;
}

Eigen::MatrixXd standardize_batch(const MlpParams &p, const std::vector<FeatureVector> &z,
                                  const std::vector<int> &which)
{
    Eigen::MatrixXd m(6, static_cast<Eigen::Index>(which.size()));
    for (std::size_t k = 0; k < which.size(); ++k)
        m.col(static_cast<Eigen::Index>(k)) = standardize(p, z[which[k]]);
    return m;
}

} // namespace

std::vector<int> MlpParams::dims() const
{
    std::vector<int> d;
    if (w.empty())
        return d;
    d.push_back(static_cast<int>(w.front().cols()));
    for (const Eigen::MatrixXd &m : w)
        d.push_back(static_cast<int>(m.rows()));
    return d;
}

MlpParams init_mlp(const std::vector<int> &dims, std::uint64_t seed)
{
    if (dims.size() < 2)
        throw std::invalid_argument("init_mlp: need at least input and output dims");
    for (int d : dims)
        if (d < 1)
            throw std::invalid_argument("init_mlp: layer sizes must be positive");

    MlpParams p;
    std::mt19937_64 rng = make_stream(seed, {0x317});
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l)
    {
        const double scale = std::sqrt(2.0 / dims[l]);
        Eigen::MatrixXd w(dims[l + 1], dims[l]);
        for (int i = 0; i < w.rows(); ++i)
            for (int j = 0; j < w.cols(); ++j)
                w(i, j) = scale * gauss(rng);
        p.w.push_back(std::move(w));
        p.b.push_back(Eigen::VectorXd::Zero(dims[l + 1]));
    }
    p.feat_mean = Eigen::VectorXd::Zero(dims.front());
    p.feat_std = Eigen::VectorXd::Ones(dims.front());
    return p;
}

Eigen::VectorXd mlp_forward(const MlpParams &p, const FeatureVector &z)
{
    return forward_batch(p, standardize(p, z), nullptr).col(0);
}

int classify(const MlpParams &p, const FeatureVector &z)
{
    return argmax_lowest(mlp_forward(p, z)) + 1;
}

double weighted_ce_loss(const Eigen::VectorXd &g, const Eigen::VectorXd &ghat, int c, int chat,
                        double eta)
{
    if (g.size() != ghat.size())
        throw std::invalid_argument("weighted_ce_loss: size mismatch");
    if (c < 1 || c > g.size() || chat < 1 || chat > g.size())
        throw std::invalid_argument("weighted_ce_loss: class index out of range");
    const double dot = std::max(g.dot(ghat), kLogFloor);
    return -std::exp(-eta * static_cast<double>(c - chat)) * std::log(dot);
}

double batch_loss(const MlpParams &p, const std::vector<FeatureVector> &z,
                  const std::vector<int> &labels, const std::vector<int> &chat, double eta)
{
    if (z.empty() || z.size() != labels.size() || z.size() != chat.size())
        throw std::invalid_argument("batch_loss: size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
    {
        const Eigen::VectorXd ghat = mlp_forward(p, z[i]);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(kClasses);
        g(labels[i] - 1) = 1.0;
        total += weighted_ce_loss(g, ghat, labels[i], chat[i], eta);
    }
    return total / static_cast<double>(z.size());
}

double batch_gradients(const MlpParams &p, const std::vector<FeatureVector> &z,
                       const std::vector<int> &labels, const std::vector<int> &chat, double eta,
                       MlpGradients &out)
{
    if (z.empty() || z.size() != labels.size() || z.size() != chat.size())
        throw std::invalid_argument("batch_gradients: size mismatch");
    const std::size_t layers = p.w.size();
    const Eigen::Index n = static_cast<Eigen::Index>(z.size());

    Eigen::MatrixXd input(6, n);
    for (Eigen::Index i = 0; i < n; ++i)
        input.col(i) = standardize(p, z[static_cast<std::size_t>(i)]);

    std::vector<Eigen::MatrixXd> acts;
    const Eigen::MatrixXd probs = forward_batch(p, input, &acts);

    double total = 0.0;
    Eigen::MatrixXd delta = probs; // becomes weight * (ghat - g) per column
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const int c = labels[static_cast<std::size_t>(i)];
        const double weight = std::exp(-eta * static_cast<double>(c - chat[i]));
        total += -weight * std::log(std::max(probs(c - 1, i), kLogFloor));
        delta(c - 1, i) -= 1.0;
        delta.col(i) *= weight;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    delta *= inv_n;

    out.w.assign(layers, Eigen::MatrixXd());
    out.b.assign(layers, Eigen::VectorXd());
    for (std::size_t l = layers; l-- > 0;)
    {
        out.w[l].noalias() = delta * acts[l].transpose();
        out.b[l] = delta.rowwise().sum();
        if (l > 0)
        {
            Eigen::MatrixXd back = p.w[l].transpose() * delta;
            delta = ((acts[l].array() > 0.0).cast<double>() * back.array()).matrix();
        }
    }
    return total * inv_n;
}

TrainResult train_classifier(const std::vector<FeatureVector> &features,
                             const std::vector<int> &labels, const TrainConfig &cfg,
                             std::uint64_t seed)
{
    if (features.size() != labels.size() || features.empty())
        throw std::invalid_argument("train_classifier: empty or mismatched dataset");
    if (cfg.batch < 1 || cfg.max_epochs < 1 || cfg.val_fraction <= 0.0 || cfg.val_fraction >= 1.0)
        throw std::invalid_argument("train_classifier: invalid configuration");
    std::array<bool, kClasses> seen{};
    for (int c : labels)
    {
        if (c < 1 || c > kClasses)
            throw std::invalid_argument("train_classifier: label out of range");
        seen[c - 1] = true;
    }
    if (!(seen[0] && seen[1] && seen[2]))
        throw std::invalid_argument("train_classifier: all three classes must be present");

    const int n = static_cast<int>(features.size());
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng = make_stream(seed, {0x5B1});
    std::shuffle(idx.begin(), idx.end(), rng);

    const int n_val = std::max(1, static_cast<int>(std::lround(n * cfg.val_fraction)));
    const int n_train = n - n_val;
    if (n_train < 1)
        throw std::invalid_argument("train_classifier: dataset too small for the split");

    std::vector<int> train_idx(idx.begin(), idx.begin() + n_train);
    const std::vector<int> val_idx(idx.begin() + n_train, idx.end());

    std::vector<int> dims = {6};
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(kClasses);
    MlpParams p = init_mlp(dims, derive_seed(seed, {0x141}));

    // Standardization from the training split only.
    p.feat_mean = Eigen::VectorXd::Zero(6);
    for (int i : train_idx)
        p.feat_mean += features[i];
    p.feat_mean /= n_train;
    Eigen::VectorXd var = Eigen::VectorXd::Zero(6);
    for (int i : train_idx)
        var += (features[i] - p.feat_mean).cwiseAbs2();
    var /= n_train;
    p.feat_std = var.cwiseSqrt().cwiseMax(1e-12);

    const std::size_t layers = p.w.size();
    TrainResult result;
    MlpParams best = p;
    double best_val = std::numeric_limits<double>::infinity();
    int stall = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch)
    {
        const double lr = cfg.lr * std::pow(cfg.lr_decay, epoch / cfg.decay_every);
        std::shuffle(train_idx.begin(), train_idx.end(), rng);

        double epoch_loss = 0.0;
        int batches = 0;
        for (int start = 0; start < n_train; start += cfg.batch)
        {
            const int len = std::min(cfg.batch, n_train - start);
            const std::vector<int> which(train_idx.begin() + start,
                                         train_idx.begin() + start + len);
            const Eigen::MatrixXd input = standardize_batch(p, features, which);
            std::vector<Eigen::MatrixXd> acts;
            const Eigen::MatrixXd probs = forward_batch(p, input, &acts);

            // Per-sample weights frozen at the current prediction.
            Eigen::MatrixXd delta = probs;
            double loss = 0.0;
            for (int k = 0; k < len; ++k)
            {
                const int c = labels[which[k]];
                const int chat = argmax_lowest(probs.col(k)) + 1;
                const double weight = std::exp(-cfg.eta * static_cast<double>(c - chat));
                loss += -weight * std::log(std::max(probs(c - 1, k), kLogFloor));
                delta(c - 1, k) -= 1.0;
                delta.col(k) *= weight;
            }
            loss /= len;
            delta /= static_cast<double>(len);
            epoch_loss += loss;
            ++batches;

            for (std::size_t l = layers; l-- > 0;)
            {
                const Eigen::MatrixXd dw = delta * acts[l].transpose();
                const Eigen::VectorXd db = delta.rowwise().sum();
                if (l > 0)
                {
                    Eigen::MatrixXd back = p.w[l].transpose() * delta;
                    delta =
                        ((acts[l].array() > 0.0).cast<double>() * back.array()).matrix();
                }
                p.w[l] -= lr * dw;
                p.b[l] -= lr * db;
            }
        }
        epoch_loss /= std::max(1, batches);

        // Validation loss and per-class accuracy.
        const Eigen::MatrixXd vin = standardize_batch(p, features, val_idx);
        const Eigen::MatrixXd vprobs = forward_batch(p, vin, nullptr);
        double val_loss = 0.0;
        std::array<int, kClasses> correct{}, count{};
        for (std::size_t k = 0; k < val_idx.size(); ++k)
        {
            const int c = labels[val_idx[k]];
            const int chat = argmax_lowest(vprobs.col(static_cast<Eigen::Index>(k))) + 1;
            const double weight = std::exp(-cfg.eta * static_cast<double>(c - chat));
            val_loss += -weight * std::log(std::max(vprobs(c - 1, static_cast<Eigen::Index>(k)),
                                                    kLogFloor));
            ++count[c - 1];
            if (chat == c)
                ++correct[c - 1];
        }
        val_loss /= static_cast<double>(val_idx.size());

        TrainReportRow row;
        row.epoch = epoch;
        row.lr = lr;
        row.train_loss = epoch_loss;
        row.val_loss = val_loss;
        const int total_correct = correct[0] + correct[1] + correct[2];
        row.val_acc = static_cast<double>(total_correct) / static_cast<double>(val_idx.size());
        row.acc_los = count[0] ? static_cast<double>(correct[0]) / count[0] : 0.0;
        row.acc_first = count[1] ? static_cast<double>(correct[1]) / count[1] : 0.0;
        row.acc_other = count[2] ? static_cast<double>(correct[2]) / count[2] : 0.0;
        result.report.push_back(row);

        if (val_loss < best_val - cfg.min_delta)
        {
            best_val = val_loss;
            best = p;
            stall = 0;
        }
        else if (++stall >= cfg.patience)
            break;
    }

    result.params = std::move(best);
    return result;
}

void report_to_csv(const std::vector<TrainReportRow> &report, std::ostream &os)
{
    os << "epoch,lr,train_loss,val_loss,val_acc,acc_los,acc_first,acc_other\n";
    for (const TrainReportRow &r : report)
        os << r.epoch << ',' << fmt_double(r.lr) << ',' << fmt_double(r.train_loss) << ','
           << fmt_double(r.val_loss) << ',' << fmt_double(r.val_acc) << ',' << fmt_double(r.acc_los)
           << ',' << fmt_double(r.acc_first) << ',' << fmt_double(r.acc_other) << "\n";
}

void save_model(const MlpParams &p, std::ostream &os)
{
    os << "mmloc-mlp v1\n";
    const std::vector<int> d = p.dims();
    os << "dims " << d.size();
    for (int v : d)
        os << ' ' << v;
    os << "\n";
    os << "feature_mean";
    for (Eigen::Index i = 0; i < p.feat_mean.size(); ++i)
        os << ' ' << fmt_double(p.feat_mean(i));
    os << "\nfeature_std";
    for (Eigen::Index i = 0; i < p.feat_std.size(); ++i)
        os << ' ' << fmt_double(p.feat_std(i));
    os << "\n";
    for (std::size_t l = 0; l < p.w.size(); ++l)
    {
        os << "layer " << l << ' ' << p.w[l].rows() << ' ' << p.w[l].cols() << "\n";
        for (int i = 0; i < p.w[l].rows(); ++i)
        {
            for (int j = 0; j < p.w[l].cols(); ++j)
                os << (j ? " " : "") << fmt_double(p.w[l](i, j));
            os << "\n";
        }
        os << "bias " << l << ' ' << p.b[l].size();
        for (Eigen::Index i = 0; i < p.b[l].size(); ++i)
            os << ' ' << fmt_double(p.b[l](i));
        os << "\n";
    }
}

MlpParams load_model(std::istream &is)
{
    expect_token(is, "mmloc-mlp");
    expect_token(is, "v1");
    expect_token(is, "dims");
    const long nd = read_long(is);
    if (nd < 2 || nd > 64)
        throw std::runtime_error("load_model: bad layer count");
    std::vector<int> d;
    for (long i = 0; i < nd; ++i)
        d.push_back(static_cast<int>(read_long(is)));
    MlpParams p;
    expect_token(is, "feature_mean");
    p.feat_mean.resize(d.front());
    for (int i = 0; i < d.front(); ++i)
        p.feat_mean(i) = read_double(is);
    expect_token(is, "feature_std");
    p.feat_std.resize(d.front());
    for (int i = 0; i < d.front(); ++i)
        p.feat_std(i) = read_double(is);
    for (std::size_t l = 0; l + 1 < d.size(); ++l)
    {
        expect_token(is, "layer");
        if (read_long(is) != static_cast<long>(l))
            throw std::runtime_error("load_model: layer index mismatch");
        const long rows = read_long(is);
        const long cols = read_long(is);
        Eigen::MatrixXd w(rows, cols);
        for (long i = 0; i < rows; ++i)
            for (long j = 0; j < cols; ++j)
                w(i, j) = read_double(is);
        p.w.push_back(std::move(w));
        expect_token(is, "bias");
        if (read_long(is) != static_cast<long>(l))
            throw std::runtime_error("load_model: bias index mismatch");
        const long nb = read_long(is);
        Eigen::VectorXd b(nb);
        for (long i = 0; i < nb; ++i)
            b(i) = read_double(is);
        p.b.push_back(std::move(b));
    }
    return p;
}

} // namespace mmloc
