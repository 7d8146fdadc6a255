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

#include <array>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "mmloc/classifier.hpp"
#include "mmloc/harness.hpp"
#include "mmloc/textio.hpp"

namespace
{

void apply_setting(mmloc::CampaignConfig &cfg, const std::string &name)
{
    if (name == "small")
    {
        cfg.antenna = mmloc::AntennaSetting{2, 2, 2, 2, 2, 4};
        cfg.m_r = 1;
    }
    else if (name == "large")
    {
        cfg.antenna = mmloc::AntennaSetting{4, 4, 8, 8, 2, 4};
        cfg.m_r = 16;
    }
    else if (!name.empty())
        throw CLI::ValidationError("--setting", "expected 'small' or 'large'");
}

struct CommonOpts
{
    std::string config_path;
    std::string setting;
    int trials = -1;
    long long seed = -1;
    std::string output;
    int threads = 1;
    bool on_grid = false;
    bool noiseless = false;
};

void add_common(CLI::App *cmd, CommonOpts &o)
{
    cmd->add_option("-c,--config", o.config_path, "campaign config JSON");
    cmd->add_option("--setting", o.setting, "antenna preset: small or large");
    cmd->add_option("-n,--trials", o.trials, "number of trials");
    cmd->add_option("--seed", o.seed, "campaign seed");
    cmd->add_option("-o,--output", o.output, "output directory");
    cmd->add_option("--threads", o.threads, "worker threads");
    cmd->add_flag("--on-grid", o.on_grid, "place true parameters on the grids");
    cmd->add_flag("--noiseless", o.noiseless, "disable receiver noise");
}

mmloc::CampaignConfig resolve(const CommonOpts &o)
{
    mmloc::CampaignConfig cfg;
    if (!o.config_path.empty())
        cfg = mmloc::load_config_file(o.config_path);
    apply_setting(cfg, o.setting);
    if (o.trials >= 0)
        cfg.trials = o.trials;
    if (o.seed >= 0)
        cfg.seed = static_cast<std::uint64_t>(o.seed);
    if (!o.output.empty())
        cfg.output_dir = o.output;
    if (o.on_grid)
        cfg.on_grid = true;
    if (o.noiseless)
        cfg.noiseless = true;
    return cfg;
}

int cmd_simulate(const CommonOpts &o, const std::string &model, bool use_classifier)
{
    mmloc::CampaignConfig cfg = resolve(o);
    if (!model.empty())
    {
        cfg.model_path = model;
        cfg.use_classifier = true;
    }
    if (use_classifier)
        cfg.use_classifier = true;
    const mmloc::CampaignResult res = mmloc::run_campaign(cfg, o.threads);
    int ok_true = 0, ok_pred = 0;
    std::vector<double> et, ep;
    for (const mmloc::TrialResult &t : res.trials)
    {
        if (t.status_true == mmloc::TrialStatus::ok)
        {
            ++ok_true;
            et.push_back(t.err2d_true);
        }
        if (t.status_pred == mmloc::TrialStatus::ok)
        {
            ++ok_pred;
            ep.push_back(t.err2d_pred);
        }
    }
    std::cout << "trials " << res.trials.size() << "  located(true) " << ok_true
              << "  located(pred) " << ok_pred << "\n";
    std::cout << "median err2d  true " << mmloc::fmt_double(mmloc::percentile(et, 0.5))
              << " m  pred " << mmloc::fmt_double(mmloc::percentile(ep, 0.5)) << " m\n";
    std::cout << "outputs in " << cfg.output_dir << "\n";
    return 0;
}

int cmd_dataset(const CommonOpts &o, const std::string &out_path)
{
    const mmloc::CampaignConfig cfg = resolve(o);
    const mmloc::Dataset ds = mmloc::generate_dataset(cfg, o.threads);
    std::ofstream os(out_path);
    if (!os)
        throw std::runtime_error("cannot open " + out_path);
    mmloc::save_dataset(ds, os);
    std::array<int, 3> counts{};
    for (int c : ds.labels)
        ++counts[c - 1];
    std::cout << "wrote " << ds.labels.size() << " paths to " << out_path << "  (los "
              << counts[0] << ", single " << counts[1] << ", other " << counts[2] << ")\n";
    return 0;
}

int cmd_train(const std::string &data_path, const std::string &model_path,
              const std::string &report_path, mmloc::TrainConfig tc, long long seed)
{
    std::ifstream is(data_path);
    if (!is)
        throw std::runtime_error("cannot open " + data_path);
    const mmloc::Dataset ds = mmloc::load_dataset(is);
    const mmloc::TrainResult tr =
        mmloc::train_classifier(ds.features, ds.labels, tc, static_cast<std::uint64_t>(seed));
    std::ofstream os(model_path);
    if (!os)
        throw std::runtime_error("cannot open " + model_path);
    mmloc::save_model(tr.params, os);
    if (!report_path.empty())
    {
        std::ofstream rs(report_path);
        mmloc::report_to_csv(tr.report, rs);
    }
    const mmloc::TrainReportRow &last = tr.report.back();
    std::cout << "epochs " << tr.report.size() << "  val_acc " << mmloc::fmt_double(last.val_acc)
              << "  (los " << mmloc::fmt_double(last.acc_los) << ", single "
              << mmloc::fmt_double(last.acc_first) << ", other "
              << mmloc::fmt_double(last.acc_other) << ")\n";
    std::cout << "model written to " << model_path << "\n";
    return 0;
}

int cmd_evaluate(const std::string &data_path, const std::string &model_path)
{
    std::ifstream is(data_path);
    if (!is)
        throw std::runtime_error("cannot open " + data_path);
    const mmloc::Dataset ds = mmloc::load_dataset(is);
    std::ifstream ms(model_path);
    if (!ms)
        throw std::runtime_error("cannot open " + model_path);
    const mmloc::MlpParams model = mmloc::load_model(ms);

    std::array<std::array<int, 3>, 3> confusion{};
    for (std::size_t i = 0; i < ds.features.size(); ++i)
    {
        const int pred = mmloc::classify(model, ds.features[i]);
        ++confusion[ds.labels[i] - 1][pred - 1];
    }
    const char *names[3] = {"los", "single", "other"};
    std::cout << "true\\pred      los   single    other  accuracy\n";
    for (int c = 0; c < 3; ++c)
    {
        const int row = confusion[c][0] + confusion[c][1] + confusion[c][2];
        std::cout << names[c];
        for (std::size_t pad = std::string(names[c]).size(); pad < 10; ++pad)
            std::cout << ' ';
        for (int p = 0; p < 3; ++p)
        {
            std::string v = std::to_string(confusion[c][p]);
            for (std::size_t pad = v.size(); pad < 9; ++pad)
                std::cout << ' ';
            std::cout << v;
        }
        std::cout << "  "
                  << mmloc::fmt_double(row ? static_cast<double>(confusion[c][c]) / row : 0.0)
                  << "\n";
    }
    return 0;
}

int cmd_report(const std::string &dir)
{
    std::ifstream is(std::filesystem::path(dir) / "summary.csv");
    if (!is)
        throw std::runtime_error("no summary.csv in " + dir);
    std::string line;
    while (std::getline(is, line))
    {
        for (char &ch : line)
            if (ch == ',')
                ch = '\t';
        std::cout << line << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"mmWave sounding, sparse path recovery and vehicle localization"};
    app.require_subcommand(1);

    CommonOpts sim_opts;
    std::string sim_model;
    bool sim_use_classifier = false;
    CLI::App *sim = app.add_subcommand("simulate", "run a localization campaign");
    add_common(sim, sim_opts);
    sim->add_option("--model", sim_model, "classifier model for predicted labels");
    sim->add_flag("--use-classifier", sim_use_classifier,
                  "label paths with the model from the config");

    CommonOpts ds_opts;
    std::string ds_out = "dataset.txt";
    CLI::App *ds = app.add_subcommand("dataset", "generate a labeled path dataset");
    add_common(ds, ds_opts);
    ds->add_option("--out", ds_out, "dataset file to write");

    std::string tr_data, tr_model = "model.txt", tr_report;
    long long tr_seed = 1;
    mmloc::TrainConfig tc;
    CLI::App *tr = app.add_subcommand("train", "train the path order classifier");
    tr->add_option("--data", tr_data, "dataset file")->required();
    tr->add_option("--model", tr_model, "model file to write");
    tr->add_option("--report", tr_report, "training report CSV");
    tr->add_option("--epochs", tc.max_epochs, "maximum training epochs");
    tr->add_option("--lr", tc.lr, "initial learning rate");
    tr->add_option("--eta", tc.eta, "asymmetric loss weight exponent");
    tr->add_option("--seed", tr_seed, "training seed");

    std::string ev_data, ev_model;
    CLI::App *ev = app.add_subcommand("evaluate", "confusion matrix of a model on a dataset");
    ev->add_option("--data", ev_data, "dataset file")->required();
    ev->add_option("--model", ev_model, "model file")->required();

    std::string rp_dir;
    CLI::App *rp = app.add_subcommand("report", "print a campaign summary table");
    rp->add_option("--dir", rp_dir, "campaign output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (sim->parsed())
            return cmd_simulate(sim_opts, sim_model, sim_use_classifier);
        if (ds->parsed())
            return cmd_dataset(ds_opts, ds_out);
        if (tr->parsed())
            return cmd_train(tr_data, tr_model, tr_report, tc, tr_seed);
        if (ev->parsed())
            return cmd_evaluate(ev_data, ev_model);
        if (rp->parsed())
            return cmd_report(rp_dir);
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
