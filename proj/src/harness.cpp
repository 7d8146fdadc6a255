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

#include "mmloc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "mmloc/locate.hpp"
#include "mmloc/rng.hpp"
#include "mmloc/textio.hpp"

namespace mmloc
{

namespace
{

constexpr double kBoltzmann = 1.380649e-23;
constexpr double kNoiseTempK = 290.0;
constexpr double kPi = 3.14159265358979323846;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double deg2rad(double d)
{
    return d * kPi / 180.0;
}

void check_keys(const nlohmann::json &j, std::initializer_list<const char *> keys,
                const char *where)
{
    for (const auto &item : j.items())
    {
        bool known = false;
        for (const char *k : keys)
            if (item.key() == k)
            {
                known = true;
                break;
            }
        if (!known)
            throw std::runtime_error(std::string("config: unknown key '") + item.key() + "' in " +
                                     where);
    }
}

PathOrder order_from_class(int label)
{
    switch (label)
    {
    case 1:
        return PathOrder::los;
    case 2:
        return PathOrder::first;
    default:
        return PathOrder::other;
    }
}

struct LocateOutcome
{
    TrialStatus status = TrialStatus::ok;
    int mode = -1;
    double err2d = kNan;
    double err3d = kNan;
};

LocateOutcome run_locate(const std::vector<LabeledPathEstimate> &paths,
                         const Eigen::Vector3d &x_rsu, const Eigen::Vector3d &truth)
{
    LocateOutcome out;
    try
    {
        const SelectedPaths sel = select_paths(paths);
        const PositionEstimate pos = locate_auto(sel, x_rsu);
        out.status = TrialStatus::ok;
        out.mode = static_cast<int>(sel.mode);
        const Eigen::Vector3d d = pos.x - truth;
        out.err2d = std::hypot(d.x(), d.y());
        out.err3d = d.norm();
    }
    catch (const UnlocatableError &)
    {
        out.status = TrialStatus::unlocatable;
    }
    catch (const DegenerateGeometryError &)
    {
        out.status = TrialStatus::degenerate;
    }
    catch (const InconsistentInputError &)
    {
        out.status = TrialStatus::degenerate;
    }
    return out;
}

// Stripe-parallel loop over trial indices; results keyed by index so any
// thread count produces the same outputs.
void for_each_trial(int n, int threads, const std::function<void(int)> &body)
{
    const int workers = std::max(1, threads);
    if (workers == 1)
    {
        for (int i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w]() {
            for (int i = w; i < n; i += workers)
                body(i);
        });
    for (std::thread &t : pool)
        t.join();
}

struct SeriesStats
{
    int total = 0;
    int ok = 0;
    std::vector<double> errs; // err2d of successful trials
    int sub_meter = 0;
};

void accumulate(SeriesStats &s, TrialStatus status, double err2d)
{
    ++s.total;
    if (status == TrialStatus::ok && std::isfinite(err2d))
    {
        ++s.ok;
        s.errs.push_back(err2d);
        if (err2d <= 1.0)
            ++s.sub_meter;
    }
}

} // namespace

Direction direction_from_cosines(double u1, double u2)
{
    const double planar = u1 * u1 + u2 * u2;
    const double z = std::sqrt(std::max(0.0, 1.0 - planar));
    return Direction(u1, u2, z);
}

CampaignConfig config_from_json_text(const std::string &text)
{
    nlohmann::json j = nlohmann::json::parse(text);
    CampaignConfig c;
    check_keys(j,
               {"carrier_hz",    "sample_rate_hz", "taps",
                "rolloff",       "payload",        "pad",
                "m_t",           "m_r",            "antenna",
                "tx_power_dbm",  "noise_figure_db", "noiseless",
                "dod_oversampling", "delay_oversampling", "doa_az_min_deg",
                "doa_az_max_deg", "doa_el_min_deg", "doa_el_max_deg",
                "doa_az_points", "doa_el_points",  "momp",
                "t0_max_samples", "on_grid",       "use_classifier",
                "model_path",    "trials",         "seed",
                "output_dir",    "scene"},
               "top level");
    c.carrier_hz = j.value("carrier_hz", c.carrier_hz);
    c.sample_rate_hz = j.value("sample_rate_hz", c.sample_rate_hz);
    c.taps = j.value("taps", c.taps);
    c.rolloff = j.value("rolloff", c.rolloff);
    c.payload = j.value("payload", c.payload);
    c.pad = j.value("pad", c.pad);
    c.m_t = j.value("m_t", c.m_t);
    c.m_r = j.value("m_r", c.m_r);
    if (j.contains("antenna"))
    {
        const nlohmann::json &a = j["antenna"];
        check_keys(a, {"tx_nx", "tx_ny", "rx_nx", "rx_ny", "n_tx_rf", "n_rx_rf"}, "antenna");
        c.antenna.tx_nx = a.value("tx_nx", c.antenna.tx_nx);
        c.antenna.tx_ny = a.value("tx_ny", c.antenna.tx_ny);
        c.antenna.rx_nx = a.value("rx_nx", c.antenna.rx_nx);
        c.antenna.rx_ny = a.value("rx_ny", c.antenna.rx_ny);
        c.antenna.n_tx_rf = a.value("n_tx_rf", c.antenna.n_tx_rf);
        c.antenna.n_rx_rf = a.value("n_rx_rf", c.antenna.n_rx_rf);
    }
    c.tx_power_dbm = j.value("tx_power_dbm", c.tx_power_dbm);
    c.noise_figure_db = j.value("noise_figure_db", c.noise_figure_db);
    c.noiseless = j.value("noiseless", c.noiseless);
    c.dod_oversampling = j.value("dod_oversampling", c.dod_oversampling);
    c.delay_oversampling = j.value("delay_oversampling", c.delay_oversampling);
    c.doa_az_min_deg = j.value("doa_az_min_deg", c.doa_az_min_deg);
    c.doa_az_max_deg = j.value("doa_az_max_deg", c.doa_az_max_deg);
    c.doa_el_min_deg = j.value("doa_el_min_deg", c.doa_el_min_deg);
    c.doa_el_max_deg = j.value("doa_el_max_deg", c.doa_el_max_deg);
    c.doa_az_points = j.value("doa_az_points", c.doa_az_points);
    c.doa_el_points = j.value("doa_el_points", c.doa_el_points);
    if (j.contains("momp"))
    {
        const nlohmann::json &m = j["momp"];
        check_keys(m, {"max_paths", "stop_fraction", "max_sweeps"}, "momp");
        c.momp.max_paths = m.value("max_paths", c.momp.max_paths);
        c.momp.stop_fraction = m.value("stop_fraction", c.momp.stop_fraction);
        c.momp.max_sweeps = m.value("max_sweeps", c.momp.max_sweeps);
    }
    c.t0_max_samples = j.value("t0_max_samples", c.t0_max_samples);
    c.on_grid = j.value("on_grid", c.on_grid);
    c.use_classifier = j.value("use_classifier", c.use_classifier);
    c.model_path = j.value("model_path", c.model_path);
    c.trials = j.value("trials", c.trials);
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("scene"))
    {
        const nlohmann::json &s = j["scene"];
        check_keys(s,
                   {"x_min", "x_max", "y_min", "y_max", "blockage_prob", "max_excess_m",
                    "double_bounce", "clutter_min", "clutter_max", "reflection_loss"},
                   "scene");
        c.scene.x_min = s.value("x_min", c.scene.x_min);
        c.scene.x_max = s.value("x_max", c.scene.x_max);
        c.scene.y_min = s.value("y_min", c.scene.y_min);
        c.scene.y_max = s.value("y_max", c.scene.y_max);
        c.scene.blockage_prob = s.value("blockage_prob", c.scene.blockage_prob);
        c.scene.max_excess_m = s.value("max_excess_m", c.scene.max_excess_m);
        c.scene.double_bounce = s.value("double_bounce", c.scene.double_bounce);
        c.scene.clutter_min = s.value("clutter_min", c.scene.clutter_min);
        c.scene.clutter_max = s.value("clutter_max", c.scene.clutter_max);
        c.scene.gain.reflection_loss = s.value("reflection_loss", c.scene.gain.reflection_loss);
    }
    return c;
}

std::string config_to_json_text(const CampaignConfig &c)
{
    nlohmann::json j;
    j["carrier_hz"] = c.carrier_hz;
    j["sample_rate_hz"] = c.sample_rate_hz;
    j["taps"] = c.taps;
    j["rolloff"] = c.rolloff;
    j["payload"] = c.payload;
    j["pad"] = c.pad;
    j["m_t"] = c.m_t;
    j["m_r"] = c.m_r;
    j["antenna"] = {{"tx_nx", c.antenna.tx_nx},     {"tx_ny", c.antenna.tx_ny},
                    {"rx_nx", c.antenna.rx_nx},     {"rx_ny", c.antenna.rx_ny},
                    {"n_tx_rf", c.antenna.n_tx_rf}, {"n_rx_rf", c.antenna.n_rx_rf}};
    j["tx_power_dbm"] = c.tx_power_dbm;
    j["noise_figure_db"] = c.noise_figure_db;
    j["noiseless"] = c.noiseless;
    j["dod_oversampling"] = c.dod_oversampling;
    j["delay_oversampling"] = c.delay_oversampling;
    j["doa_az_min_deg"] = c.doa_az_min_deg;
    j["doa_az_max_deg"] = c.doa_az_max_deg;
    j["doa_el_min_deg"] = c.doa_el_min_deg;
    j["doa_el_max_deg"] = c.doa_el_max_deg;
    j["doa_az_points"] = c.doa_az_points;
    j["doa_el_points"] = c.doa_el_points;
    j["momp"] = {{"max_paths", c.momp.max_paths},
                 {"stop_fraction", c.momp.stop_fraction},
                 {"max_sweeps", c.momp.max_sweeps}};
    j["t0_max_samples"] = c.t0_max_samples;
    j["on_grid"] = c.on_grid;
    j["use_classifier"] = c.use_classifier;
    j["model_path"] = c.model_path;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["scene"] = {{"x_min", c.scene.x_min},
                  {"x_max", c.scene.x_max},
                  {"y_min", c.scene.y_min},
                  {"y_max", c.scene.y_max},
                  {"blockage_prob", c.scene.blockage_prob},
                  {"max_excess_m", c.scene.max_excess_m},
                  {"double_bounce", c.scene.double_bounce},
                  {"clutter_min", c.scene.clutter_min},
                  {"clutter_max", c.scene.clutter_max},
                  {"reflection_loss", c.scene.gain.reflection_loss}};
    return j.dump(2) + "\n";
}

CampaignConfig load_config_file(const std::string &path)
{
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return config_from_json_text(ss.str());
}

CampaignContext make_context(const CampaignConfig &cfg)
{
    if (cfg.taps < 1 || cfg.m_t < 1 || cfg.m_r < 1 || cfg.trials < 0)
        throw std::invalid_argument("make_context: invalid campaign configuration");
    if (cfg.sample_rate_hz <= 0.0 || cfg.carrier_hz <= 0.0)
        throw std::invalid_argument("make_context: rates must be positive");
    if (cfg.t0_max_samples < 0.0)
        throw std::invalid_argument("make_context: t0_max_samples must be non-negative");

    CampaignContext ctx;
    ctx.cfg = cfg;
    ctx.cfg.scene.gain.carrier_hz = cfg.carrier_hz;
    ctx.tx = UraGeometry{cfg.antenna.tx_nx, cfg.antenna.tx_ny};
    ctx.rx = UraGeometry{cfg.antenna.rx_nx, cfg.antenna.rx_ny};
    ctx.pulse = PulseShape{PulseKind::raised_cosine, 1.0 / cfg.sample_rate_hz, cfg.rolloff};
    ctx.pilots = make_pilots(cfg.payload + 2 * cfg.pad, cfg.antenna.n_tx_rf, cfg.pad);

    CodebookConfig ccfg;
    ccfg.n_tx = ctx.tx.size();
    ccfg.n_tx_rf = cfg.antenna.n_tx_rf;
    ccfg.n_rx = ctx.rx.size();
    ccfg.n_rx_rf = cfg.antenna.n_rx_rf;
    ccfg.m_t = cfg.m_t;
    ccfg.m_r = cfg.m_r;
    ctx.cb = make_codebooks(ccfg, derive_seed(cfg.seed, {0xCB}));
    ctx.phi = build_measurement(ctx.cb, ctx.pilots, cfg.taps, ctx.tx);
    ctx.dict = default_dictionaries(ctx.tx, cfg.taps, ctx.pulse, cfg.dod_oversampling,
                                    cfg.delay_oversampling);
    ctx.sc = StackedCombiner::from_codebooks(ctx.cb);

    ctx.cfg.doa_az_points = cfg.doa_az_points > 0 ? cfg.doa_az_points : 12 * ctx.rx.nx;
    ctx.cfg.doa_el_points = cfg.doa_el_points > 0 ? cfg.doa_el_points : 8 * ctx.rx.ny;
    ctx.doa_grid = make_doa_grid(deg2rad(cfg.doa_az_min_deg), deg2rad(cfg.doa_az_max_deg),
                                 ctx.cfg.doa_az_points, deg2rad(cfg.doa_el_min_deg),
                                 deg2rad(cfg.doa_el_max_deg), ctx.cfg.doa_el_points);
    ctx.doa_table = tabulate_doa_grid(ctx.doa_grid, ctx.rx);

    ctx.pt_linear = 1e-3 * std::pow(10.0, cfg.tx_power_dbm / 10.0);
    ctx.noise_power = cfg.noiseless ? 0.0
                                    : kBoltzmann * kNoiseTempK * cfg.sample_rate_hz *
                                          std::pow(10.0, cfg.noise_figure_db / 10.0);

    if (cfg.use_classifier)
    {
        if (cfg.model_path.empty())
            throw std::invalid_argument("make_context: use_classifier needs model_path");
        std::ifstream is(cfg.model_path);
        if (!is)
            throw std::runtime_error("make_context: cannot open model " + cfg.model_path);
        ctx.model = load_model(is);
        ctx.has_model = true;
    }
    return ctx;
}

TrialArtifacts run_trial(const CampaignContext &ctx, std::uint64_t trial)
{
    const CampaignConfig &cfg = ctx.cfg;
    TrialArtifacts art;
    art.result.trial = trial;

    art.scene = generate_scene(cfg.scene, derive_seed(cfg.seed, {0x5CE, trial}));
    art.paths = trace_paths(art.scene, cfg.scene);
    art.result.los_blocked = art.scene.los_blocked;
    art.result.n_paths_true = static_cast<int>(art.paths.size());
    if (art.paths.empty())
    {
        art.result.status_true = TrialStatus::unlocatable;
        art.result.status_pred = TrialStatus::unlocatable;
        art.result.err2d_true = art.result.err3d_true = kNan;
        art.result.err2d_pred = art.result.err3d_pred = kNan;
        return art;
    }

    // Sounding origin a little before the first arrival.
    const double ts = ctx.pulse.ts;
    std::mt19937_64 t0_rng = make_stream(cfg.seed, {0x70, trial});
    std::uniform_real_distribution<double> jitter(0.0, cfg.t0_max_samples * ts);
    const double t0 = art.paths.front().delay_s - jitter(t0_rng);

    // Transmit power folds into the path amplitudes.
    std::vector<PathParams> scaled = art.paths;
    const double amp = std::sqrt(ctx.pt_linear);
    for (PathParams &p : scaled)
        p.gain *= amp;

    const ChannelTaps channel =
        channel_from_paths(scaled, ctx.tx, ctx.rx, cfg.taps, ctx.pulse, t0);
    const ObservationSet obs = synthesize_observation(channel, ctx.cb, ctx.pilots,
                                                      ctx.noise_power,
                                                      derive_seed(cfg.seed, {0xA01, trial}), t0);

    // With on-grid recovery the true parameters join the search grids.
    const DictionarySet *dict = &ctx.dict;
    const DoaGridTable *table = &ctx.doa_table;
    DictionarySet aug_dict;
    DoaGridTable aug_table;
    if (cfg.on_grid)
    {
        aug_dict = ctx.dict;
        aug_table = ctx.doa_table;
        for (const PathParams &p : art.paths)
        {
            append_u1_atom(aug_dict, ctx.tx, p.dod.x);
            append_u2_atom(aug_dict, ctx.tx, p.dod.y);
            append_tau_atom(aug_dict, ctx.pulse, p.delay_s - t0);
            aug_table.grid.dirs.push_back(p.doa);
            aug_table.steering.conservativeResize(Eigen::NoChange, aug_table.steering.cols() + 1);
            aug_table.steering.col(aug_table.steering.cols() - 1) = ura_steering(ctx.rx, p.doa);
        }
        dict = &aug_dict;
        table = &aug_table;
    }

    const SparseChannelEstimate est = momp_solve(obs, ctx.phi, *dict, cfg.momp);
    const double y2 = obs.y.squaredNorm();
    art.result.residual_ratio = y2 > 0.0 ? est.residual_sq / y2 : 0.0;
    art.result.n_paths_est = static_cast<int>(est.entries.size());

    // Dictionary cell sizes of the base grids set the matching tolerance.
    const double du1 = 2.0 / ctx.dict.n1();
    const double du2 = 2.0 / ctx.dict.n2();
    const double dtau = ts / cfg.delay_oversampling;

    double tau_min = std::numeric_limits<double>::infinity();
    double p_max = 0.0;
    const double p_scale = static_cast<double>(ctx.rx.size()) * static_cast<double>(ctx.rx.size()) *
                           ctx.pt_linear;
    for (const SparseEntry &e : est.entries)
    {
        EstimatedPath ep;
        ep.j1 = e.j1;
        ep.j2 = e.j2;
        ep.j3 = e.j3;
        const DoaEstimate doa = recover_doa(e.beta, ctx.sc, *table);
        ep.doa = doa.dir;
        ep.dod = direction_from_cosines(dict->grid_u1(e.j1), dict->grid_u2(e.j2));
        ep.tau_eff = dict->grid_tau(e.j3);
        ep.power = doa.power / p_scale;

        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < art.paths.size(); ++t)
        {
            const PathParams &p = art.paths[t];
            const double d1 = std::abs(dict->grid_u1(e.j1) - p.dod.x) / du1;
            const double d2 = std::abs(dict->grid_u2(e.j2) - p.dod.y) / du2;
            const double d3 = std::abs(ep.tau_eff - (p.delay_s - t0)) / dtau;
            const double d = std::max(d1, std::max(d2, d3));
            if (d < best_d)
            {
                best_d = d;
                best = static_cast<int>(t);
            }
        }
        if (best >= 0 && best_d <= 1.0)
        {
            ep.true_label = static_cast<int>(art.paths[best].order) + 1;
            ++art.result.n_matched;
        }
        tau_min = std::min(tau_min, ep.tau_eff);
        p_max = std::max(p_max, ep.power);
        art.est.push_back(std::move(ep));
    }

    if (p_max <= 0.0)
        p_max = 1.0;
    for (EstimatedPath &ep : art.est)
    {
        ep.feat(0) = ep.power / p_max;
        ep.feat(1) = kSpeedOfLight * (ep.tau_eff - tau_min);
        ep.feat(2) = ep.doa.azimuth();
        ep.feat(3) = ep.doa.elevation();
        ep.feat(4) = ep.dod.azimuth();
        ep.feat(5) = ep.dod.elevation();
        const int fallback = ep.true_label == 0 ? 3 : ep.true_label;
        ep.pred_label = ctx.has_model ? classify(ctx.model, ep.feat) : fallback;
        if (ep.true_label != 0 && ep.pred_label == ep.true_label)
            ++art.result.n_label_correct;
    }

    std::vector<LabeledPathEstimate> with_true, with_pred;
    for (const EstimatedPath &ep : art.est)
    {
        LabeledPathEstimate base;
        base.doa = ep.doa;
        base.dod = ep.dod;
        base.delay_s = ep.tau_eff;
        base.label = order_from_class(ep.true_label == 0 ? 3 : ep.true_label);
        with_true.push_back(base);
        base.label = order_from_class(ep.pred_label);
        with_pred.push_back(base);
    }

    const LocateOutcome lt = run_locate(with_true, art.scene.rsu, art.scene.vehicle);
    art.result.status_true = lt.status;
    art.result.mode_true = lt.mode;
    art.result.err2d_true = lt.err2d;
    art.result.err3d_true = lt.err3d;
    const LocateOutcome lp = run_locate(with_pred, art.scene.rsu, art.scene.vehicle);
    art.result.status_pred = lp.status;
    art.result.mode_pred = lp.mode;
    art.result.err2d_pred = lp.err2d;
    art.result.err3d_pred = lp.err3d;
    return art;
}

double percentile(std::vector<double> v, double p)
{
    if (v.empty())
        return kNan;
    if (p < 0.0 || p > 1.0)
        throw std::invalid_argument("percentile: p outside [0, 1]");
    std::sort(v.begin(), v.end());
    const double rank = p * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    if (lo + 1 >= v.size())
        return v.back();
    const double frac = rank - static_cast<double>(lo);
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

CampaignResult run_campaign(const CampaignConfig &cfg, int threads)
{
    const CampaignContext ctx = make_context(cfg);
    CampaignResult res;
    res.trials.resize(cfg.trials);
    for_each_trial(cfg.trials, threads, [&](int i) {
        res.trials[i] = run_trial(ctx, static_cast<std::uint64_t>(i)).result;
    });

    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);

    {
        std::ofstream os(fs::path(cfg.output_dir) / "config.json");
        os << config_to_json_text(ctx.cfg);
    }

    {
        std::ofstream os(fs::path(cfg.output_dir) / "trials.csv");
        os << "trial,los_blocked,n_true,n_est,n_matched,n_label_correct,"
              "status_true,mode_true,err2d_true,err3d_true,"
              "status_pred,mode_pred,err2d_pred,err3d_pred,residual_ratio\n";
        for (const TrialResult &t : res.trials)
            os << t.trial << ',' << (t.los_blocked ? 1 : 0) << ',' << t.n_paths_true << ','
               << t.n_paths_est << ',' << t.n_matched << ',' << t.n_label_correct << ','
               << static_cast<int>(t.status_true) << ',' << t.mode_true << ','
               << fmt_double(t.err2d_true) << ',' << fmt_double(t.err3d_true) << ','
               << static_cast<int>(t.status_pred) << ',' << t.mode_pred << ','
               << fmt_double(t.err2d_pred) << ',' << fmt_double(t.err3d_pred) << ','
               << fmt_double(t.residual_ratio) << "\n";
    }

    const char *views[2] = {"true", "pred"};
    const char *conds[3] = {"all", "los", "nlos"};
    SeriesStats stats[2][3];
    for (const TrialResult &t : res.trials)
    {
        const int cond = t.los_blocked ? 2 : 1;
        accumulate(stats[0][0], t.status_true, t.err2d_true);
        accumulate(stats[0][cond], t.status_true, t.err2d_true);
        accumulate(stats[1][0], t.status_pred, t.err2d_pred);
        accumulate(stats[1][cond], t.status_pred, t.err2d_pred);
    }

    {
        std::ofstream os(fs::path(cfg.output_dir) / "summary.csv");
        os << "labels,condition,trials,ok,ok_fraction,p05,p50,p80,p95,sub_meter_fraction\n";
        for (int v = 0; v < 2; ++v)
            for (int c = 0; c < 3; ++c)
            {
                const SeriesStats &s = stats[v][c];
                const double okf = s.total ? static_cast<double>(s.ok) / s.total : 0.0;
                const double smf = s.total ? static_cast<double>(s.sub_meter) / s.total : 0.0;
                os << views[v] << ',' << conds[c] << ',' << s.total << ',' << s.ok << ','
                   << fmt_double(okf) << ',' << fmt_double(percentile(s.errs, 0.05)) << ','
                   << fmt_double(percentile(s.errs, 0.50)) << ','
                   << fmt_double(percentile(s.errs, 0.80)) << ','
                   << fmt_double(percentile(s.errs, 0.95)) << ',' << fmt_double(smf) << "\n";
            }
    }

    {
        std::ofstream os(fs::path(cfg.output_dir) / "cdf.csv");
        os << "labels,condition,err2d,fraction\n";
        for (int v = 0; v < 2; ++v)
            for (int c = 0; c < 3; ++c)
            {
                std::vector<double> e = stats[v][c].errs;
                std::sort(e.begin(), e.end());
                for (std::size_t i = 0; i < e.size(); ++i)
                    os << views[v] << ',' << conds[c] << ',' << fmt_double(e[i]) << ','
                       << fmt_double(static_cast<double>(i + 1) / stats[v][c].total) << "\n";
            }
    }

    return res;
}

Dataset generate_dataset(const CampaignConfig &cfg, int threads)
{
    const CampaignContext ctx = make_context(cfg);
    std::vector<std::vector<std::pair<FeatureVector, int>>> per_trial(cfg.trials);
    for_each_trial(cfg.trials, threads, [&](int i) {
        const TrialArtifacts art = run_trial(ctx, static_cast<std::uint64_t>(i));
        for (const EstimatedPath &ep : art.est)
            per_trial[i].emplace_back(ep.feat, ep.true_label == 0 ? 3 : ep.true_label);
    });

    Dataset ds;
    for (const auto &rows : per_trial)
        for (const auto &[feat, label] : rows)
        {
            ds.features.push_back(feat);
            ds.labels.push_back(label);
        }
    return ds;
}

void save_dataset(const Dataset &ds, std::ostream &os)
{
    if (ds.features.size() != ds.labels.size())
        throw std::invalid_argument("save_dataset: size mismatch");
    os << "mmloc-dataset v1\n" << ds.features.size() << "\n";
    for (std::size_t i = 0; i < ds.features.size(); ++i)
    {
        for (int k = 0; k < 6; ++k)
            os << fmt_double(ds.features[i](k)) << ' ';
        os << ds.labels[i] << "\n";
    }
}

Dataset load_dataset(std::istream &is)
{
    expect_token(is, "mmloc-dataset");
    expect_token(is, "v1");
    const long n = read_long(is);
    if (n < 0)
        throw std::runtime_error("load_dataset: negative row count");
    Dataset ds;
    ds.features.reserve(n);
    ds.labels.reserve(n);
    for (long i = 0; i < n; ++i)
    {
        FeatureVector f;
        for (int k = 0; k < 6; ++k)
            f(k) = read_double(is);
        const long label = read_long(is);
        if (label < 1 || label > 3)
            throw std::runtime_error("load_dataset: label out of range");
        ds.features.push_back(f);
        ds.labels.push_back(static_cast<int>(label));
    }
    return ds;
}

} // namespace mmloc
