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

#ifndef MMLOC_HARNESS_HPP
#define MMLOC_HARNESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mmloc/classifier.hpp"
#include "mmloc/doa.hpp"
#include "mmloc/momp.hpp"
#include "mmloc/scene.hpp"
#include "mmloc/sounding.hpp"

namespace mmloc
{

struct AntennaSetting
{
    int tx_nx = 2, tx_ny = 2;
    int rx_nx = 2, rx_ny = 2;
    int n_tx_rf = 2, n_rx_rf = 4;
};

struct CampaignConfig
{
    // Waveform and sounding frame.
    double carrier_hz = 73e9;
    double sample_rate_hz = 1.76e9;
    int taps = 64;
    double rolloff = 0.25;
    int payload = 64; // pilot payload length, power of two
    int pad = 32;     // leading/trailing zero guard, q_total = payload + 2 * pad
    int m_t = 16;     // transmit beams per sounding
    int m_r = 1;      // receive combiner blocks per beam; m_r * n_rx_rf >= n_rx
                      // makes the stacked combiner full row rank
    AntennaSetting antenna;

    // Link budget. Noise is thermal in the sampled band plus the noise figure;
    // noiseless campaigns set the flag instead of an infinite power.
    double tx_power_dbm = 30.0;
    double noise_figure_db = 5.0;
    bool noiseless = false;

    // Dictionary grids. Departure and delay grids are dense uniform grids over
    // the dictionary domain; the arrival grid is an azimuth/elevation window
    // around the street. Zero point counts pick a size matched to the array.
    int dod_oversampling = 8;
    int delay_oversampling = 4;
    double doa_az_min_deg = -60.0, doa_az_max_deg = 75.0;
    double doa_el_min_deg = -35.0, doa_el_max_deg = 0.0;
    int doa_az_points = 0;
    int doa_el_points = 0;

    MompConfig momp;

    // Trial structure.
    double t0_max_samples = 4.0; // sounding origin jitter ahead of the first path
    bool on_grid = false;        // append true parameters as extra dictionary atoms
    bool use_classifier = false; // predicted labels from the model at model_path
    std::string model_path;
    int trials = 100;
    std::uint64_t seed = 1;
    std::string output_dir = "out";

    SceneConfig scene;
};

// JSON round trip; absent fields keep their defaults, unknown fields throw.
CampaignConfig config_from_json_text(const std::string &text);
std::string config_to_json_text(const CampaignConfig &cfg);
CampaignConfig load_config_file(const std::string &path);

// Per-campaign immutable state shared by every trial.
struct CampaignContext
{
    CampaignConfig cfg;
    UraGeometry tx, rx;
    PulseShape pulse;
    PilotSequence pilots;
    Codebooks cb;
    MeasurementTensor phi;
    DictionarySet dict;
    StackedCombiner sc;
    DoaGrid doa_grid;
    DoaGridTable doa_table;
    double pt_linear = 0.0;    // transmit power, watts
    double noise_power = 0.0;  // per-antenna complex noise variance, watts
    MlpParams model;
    bool has_model = false;
};

CampaignContext make_context(const CampaignConfig &cfg);

// One recovered path after arrival retrieval: dictionary indices, continuous
// parameters, received power and both label views.
struct EstimatedPath
{
    int j1 = 0, j2 = 0, j3 = 0;
    Direction doa;
    Direction dod;
    double tau_eff = 0.0; // seconds past the sounding origin
    double power = 0.0;   // combined received power before normalization
    int true_label = 0;   // 1 LoS, 2 single bounce, 3 other, 0 unmatched
    int pred_label = 0;   // classifier output, or the true view when disabled
    FeatureVector feat = FeatureVector::Zero();
};

// Localization status per label view.
enum class TrialStatus : int
{
    ok = 0,
    unlocatable = 1,
    degenerate = 2
};

struct TrialResult
{
    std::uint64_t trial = 0;
    bool los_blocked = false;
    int n_paths_true = 0;
    int n_paths_est = 0;
    int n_matched = 0;       // estimates matched to a traced path
    int n_label_correct = 0; // matched estimates whose predicted label agrees
    TrialStatus status_true = TrialStatus::ok;
    int mode_true = -1; // LocateMode, or -1 when localization failed
    double err2d_true = 0.0;
    double err3d_true = 0.0;
    TrialStatus status_pred = TrialStatus::ok;
    int mode_pred = -1;
    double err2d_pred = 0.0;
    double err3d_pred = 0.0;
    double residual_ratio = 0.0; // final squared residual over measurement energy
};

struct TrialArtifacts
{
    Scene scene;
    std::vector<PathParams> paths; // traced paths, unit transmit power
    std::vector<EstimatedPath> est;
    TrialResult result;
};

// Departure direction from its two dictionary cosines; the out-of-plane
// component is completed on the upper hemisphere (the receiver sits above
// the street).
Direction direction_from_cosines(double u1, double u2);

// Full single-vehicle pipeline: scene draw, path tracing, sounding synthesis,
// sparse recovery, arrival retrieval, label assignment and localization with
// the true-label and predicted-label views.
TrialArtifacts run_trial(const CampaignContext &ctx, std::uint64_t trial);

struct CampaignResult
{
    std::vector<TrialResult> trials;
};

// Runs cfg.trials trials (deterministic per trial index) and writes
// trials.csv, summary.csv, cdf.csv and config.json under cfg.output_dir.
// threads > 1 splits trial indices across worker threads; outputs are
// identical for any thread count.
CampaignResult run_campaign(const CampaignConfig &cfg, int threads = 1);

// Linear-interpolation percentile at rank p * (n - 1); v need not be sorted.
double percentile(std::vector<double> v, double p);

struct Dataset
{
    std::vector<FeatureVector> features;
    std::vector<int> labels; // 1 LoS, 2 single bounce, 3 other
};

// Harvests matched and spurious recovered paths from cfg.trials trials;
// unmatched estimates are kept with the catch-all label.
Dataset generate_dataset(const CampaignConfig &cfg, int threads = 1);

void save_dataset(const Dataset &ds, std::ostream &os);
Dataset load_dataset(std::istream &is);

} // namespace mmloc

#endif
