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

#ifndef MMLOC_CLASSIFIER_HPP
#define MMLOC_CLASSIFIER_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

namespace mmloc
{

// Feature order: normalized power gain, relative delay, arrival azimuth,
// arrival elevation, departure azimuth, departure elevation.
using FeatureVector = Eigen::Matrix<double, 6, 1>;

// Fully connected ReLU network with a softmax head. Standardization constants
// travel with the parameters so inference matches training exactly.
struct MlpParams
{
    std::vector<Eigen::MatrixXd> w; // w[l]: dims[l+1] x dims[l]
    std::vector<Eigen::VectorXd> b;
    Eigen::VectorXd feat_mean;
    Eigen::VectorXd feat_std;

    std::vector<int> dims() const;
};

// He-normal weights, zero biases. dims = {6, hidden..., 3}.
MlpParams init_mlp(const std::vector<int> &dims, std::uint64_t seed);

// Class probabilities (softmax output).
Eigen::VectorXd mlp_forward(const MlpParams &p, const FeatureVector &z);

// 1-based class label; ties break to the lowest class index.
int classify(const MlpParams &p, const FeatureVector &z);

// Distance-weighted cross entropy: -exp(-eta (c - chat)) log(g . ghat), with
// the dot floored at 1e-12. c and chat are 1-based class indices.
double weighted_ce_loss(const Eigen::VectorXd &g, const Eigen::VectorXd &ghat, int c, int chat,
                        double eta);

struct MlpGradients
{
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
};

// Mean weighted-CE loss over a batch with the per-sample weights frozen at the
// provided predicted classes; gradients treat those weights as constants.
double batch_loss(const MlpParams &p, const std::vector<FeatureVector> &z,
                  const std::vector<int> &labels, const std::vector<int> &chat, double eta);
double batch_gradients(const MlpParams &p, const std::vector<FeatureVector> &z,
                       const std::vector<int> &labels, const std::vector<int> &chat, double eta,
                       MlpGradients &out);

struct TrainConfig
{
    double lr = 1e-3;
    double lr_decay = 0.95;
    int decay_every = 200; // epochs per decay step
    int max_epochs = 1000;
    int batch = 64;
    double eta = 0.2;
    double val_fraction = 0.25; // 3:1 train/validation split
    int patience = 100;         // early stop on stalled validation loss
    double min_delta = 1e-7;
    std::vector<int> hidden = {64, 64};
};

struct TrainReportRow
{
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    double acc_los = 0.0;
    double acc_first = 0.0;
    double acc_other = 0.0;
};

struct TrainResult
{
    MlpParams params; // best validation-loss parameters
    std::vector<TrainReportRow> report;
};

// Deterministic mini-batch gradient descent. Labels are 1-based (1 = LoS,
// 2 = first order, 3 = other); all three classes must be present.
TrainResult train_classifier(const std::vector<FeatureVector> &features,
                             const std::vector<int> &labels, const TrainConfig &cfg,
                             std::uint64_t seed);

void report_to_csv(const std::vector<TrainReportRow> &report, std::ostream &os);

// Versioned structured-text model format; round-trips bit exactly.
void save_model(const MlpParams &p, std::ostream &os);
MlpParams load_model(std::istream &is);

} // namespace mmloc

#endif
