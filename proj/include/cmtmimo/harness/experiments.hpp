// SPDX-License-Identifier: Apache-2.0
//
// cmtmimo - blind pilot decontamination for CMT massive-MIMO uplinks
// Copyright (C) 2026 The cmtmimo Authors
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

// The canonical experiments: SINR trajectory of the blind tracker against the
// MF / MMSE references, the eye pattern of its decisions, and the CMT
// intrinsic-interference study. Every trial draws from its own sub-stream of
// the master seed, so results do not depend on thread count or trial order.

#pragma once

#include "cmtmimo/airlink.hpp"
#include "cmtmimo/blind.hpp"
#include "cmtmimo/channel.hpp"
#include "cmtmimo/cmt.hpp"
#include "cmtmimo/combine.hpp"
#include "cmtmimo/harness/config.hpp"
#include "cmtmimo/harness/csv.hpp"
#include "cmtmimo/topology.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>
#include <vector>

namespace cmtmimo::harness {

enum StreamId : std::uint64_t {
    kTopologyStream = 1,
    kChannelStream = 2,
    kEstimateStream = 3,
    kPacketStream = 4,
    kEvalStream = 5,
    kCmtStream = 6,
    kCalibrationStream = 7,
};

/// Run f(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency); results are returned in index order.
template <typename F>
auto run_indexed(int count, int threads, F&& f)
{
    using Result = decltype(f(0));
    std::vector<Result> results(static_cast<std::size_t>(count));
    int workers = threads == 0 ? static_cast<int>(std::max(1u, std::thread::hardware_concurrency())) : threads;
    workers = std::clamp(workers, 1, std::max(count, 1));
    if (workers == 1) {
        for (int i = 0; i < count; ++i)
            results[i] = f(i);
        return results;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    results[i] = f(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                }
            }
        });
    pool.clear();
    if (failure)
        std::rethrow_exception(failure);
    return results;
}

// ---------- calibration ----------

/// Noise variance that puts the single-user, contamination-free, perfect-CSI
/// MF output at the target SINR: sigma_v^2 = 2 E||h||^2 E[s^2] / 10^(target/10).
inline double calibrate_noise(const ExperimentConfig& config)
{
    if (config.noise.sigma_v_sq)
        return *config.noise.sigma_v_sq;
    const double target = config.noise.target_sinr_db;
    require(!std::isnan(target) && target != -kInf, "calibrate_noise: target SINR must be finite or +inf");
    if (target == kInf)
        return 0.0;
    const double mean_channel_energy = static_cast<double>(config.channel.num_antennas); // unit-energy PDP
    return 2.0 * mean_channel_energy * config.signaling.alphabet().second_moment() / from_db(target);
}

/// Mean (linear, reported in dB) empirical SINR of the perfect-CSI MF for a lone
/// user over `draws` channel realizations at noise variance sigma_v_sq.
inline double measure_single_user_mf_sinr_db(const ExperimentConfig& config, double sigma_v_sq, int draws,
                                             int symbols_per_draw, std::uint64_t seed)
{
    require(draws >= 1, "calibration: need at least one draw");
    const CellTopology lone(1, 1, {1.0});
    const auto pdp = config.channel.pdp();
    const auto alphabet = config.signaling.alphabet();
    double total = 0.0;
    for (int d = 0; d < draws; ++d) {
        Rng rng = derive_stream(seed, {kCalibrationStream, static_cast<std::uint64_t>(d)});
        const auto channels = draw_channels(lone, pdp, config.channel.num_antennas, config.channel.grid(), rng);
        auto H = channels_at_bs(channels, 0, config.channel.subcarrier);
        const CVector w = mf_weights(H[0].col(0)).w;
        UplinkFrameSource source(lone, std::move(H), 0, sigma_v_sq, 0.0, alphabet.levels, alphabet.probabilities);
        const auto report = measure_sinr(w, source, 0, static_cast<std::size_t>(symbols_per_draw), rng);
        total += from_db(report.sinr_db);
    }
    return db(total / draws);
}

/// sigma_q^2 for the abstract model: fixed from config, or measured by CMT loopback.
inline double resolve_sigma_q_sq(const ExperimentConfig& config)
{
    if (config.signaling.sigma_q_mode == SigmaQMode::fixed)
        return config.signaling.sigma_q_sq;
    const auto cfg = config.cmt_config();
    const auto proto = cmt::design_prototype(cfg);
    Rng rng = derive_stream(config.run.master_seed, {kCmtStream});
    const auto samples = static_cast<std::size_t>(config.cmt.min_samples);
    return cmt::measure_intrinsic_stats(cfg, proto, rng, cmt::frames_for(samples, cfg), samples).sigma_q_sq;
}

// ---------- one trial ----------

struct TrialScenario {
    CellTopology topology;
    std::vector<CMatrix> H;   // H_mj at the chosen subcarrier, j = serving cell
    ChannelEstimate estimate;
    FrameBlock eval;          // held-out frames for SINR probes
    FrameBlock packet;        // frames the tracker adapts on
    int bs = 0;
    double sigma_v_sq = 0.0;
    double sigma_q_sq = 0.0;
    double symbol_second_moment = 1.0;

    Eigen::Index own_row(int user = 0) const
    {
        return static_cast<Eigen::Index>(bs) * topology.users_per_cell() + user;
    }
};

inline TrialScenario build_trial(const ExperimentConfig& config, int trial, int subcarrier, double sigma_v_sq,
                                 double sigma_q_sq, int packet_length)
{
    const auto seed = config.run.master_seed;
    const auto t = static_cast<std::uint64_t>(trial);
    const auto k = static_cast<std::uint64_t>(subcarrier);

    TrialScenario sc;
    sc.bs = config.topology.serving_cell;
    sc.sigma_v_sq = sigma_v_sq;
    sc.sigma_q_sq = sigma_q_sq;
    if (config.topology.gains) {
        sc.topology = CellTopology(config.topology.num_cells, config.topology.users_per_cell, *config.topology.gains);
    } else {
        Rng rng = derive_stream(seed, {t, kTopologyStream});
        sc.topology = build_topology(config.topology.num_cells, config.topology.users_per_cell,
                                     config.topology.gain_low, config.topology.gain_high, rng);
    }
    {
        Rng rng = derive_stream(seed, {t, kChannelStream});
        const auto channels =
            draw_channels(sc.topology, config.channel.pdp(), config.channel.num_antennas, config.channel.grid(), rng);
        sc.H = channels_at_bs(channels, sc.bs, subcarrier);
    }
    {
        Rng rng = derive_stream(seed, {t, kEstimateStream, k});
        if (config.pilots.correlate) {
            const auto pilots = PilotBook::dft(config.topology.users_per_cell, config.pilots.length);
            const CMatrix received = transmit_pilots(pilots, sc.topology, sc.H, sc.bs, sigma_v_sq, rng);
            sc.estimate = estimate_channels_correlate(pilots, received, sigma_v_sq);
        } else {
            sc.estimate = estimate_channels_direct(sc.topology, sc.H, sc.bs, sigma_v_sq, config.pilots.length, rng);
        }
    }
    const auto alphabet = config.signaling.alphabet();
    sc.symbol_second_moment = alphabet.second_moment() + sigma_q_sq;
    UplinkFrameSource source(sc.topology, sc.H, sc.bs, sigma_v_sq, sigma_q_sq, alphabet.levels,
                             alphabet.probabilities);
    {
        Rng rng = derive_stream(seed, {t, kEvalStream, k});
        sc.eval = source.generate(config.blind.eval_symbols, rng);
    }
    {
        Rng rng = derive_stream(seed, {t, kPacketStream, k});
        sc.packet = source.generate(packet_length, rng);
    }
    return sc;
}

struct ReferenceSinr {
    double mf_perfect_db = 0.0;
    double mmse_perfect_db = 0.0;
    double mf_contaminated_db = 0.0;
};

/// MMSE combiner with cross-cell CSI. With sigma_v^2 = 0 the covariance is
/// singular for N > MK, so a 1e-9 relative diagonal load stands in for the limit.
inline CVector mmse_reference(const TrialScenario& sc, int user = 0)
{
    double noise = sc.sigma_v_sq;
    if (noise == 0.0) {
        const CMatrix R = received_covariance(sc.topology, sc.H, sc.bs, 0.0, sc.symbol_second_moment);
        noise = 1e-9 * R.real().trace() / static_cast<double>(R.rows());
    }
    return mmse_weights(sc.topology, sc.H, sc.bs, noise, sc.symbol_second_moment)[user].w;
}

inline ReferenceSinr reference_sinr(const TrialScenario& sc, int user = 0)
{
    ReferenceSinr r;
    const auto row = sc.own_row(user);
    r.mf_perfect_db = measure_sinr(mf_weights(sc.H[sc.bs].col(user)).w, sc.eval, row).sinr_db;
    r.mmse_perfect_db = measure_sinr(mmse_reference(sc, user), sc.eval, row).sinr_db;
    r.mf_contaminated_db = measure_sinr(mf_weights(sc.estimate.H_hat.col(user)).w, sc.eval, row).sinr_db;
    return r;
}

inline blind::BlindParams blind_params(const ExperimentConfig& config)
{
    blind::BlindParams p;
    p.mu = config.blind.mu;
    p.epsilon = config.epsilon();
    p.p = config.blind.p;
    p.R = blind::dispersion_constant(config.signaling.alphabet(), config.blind.p);
    p.normalized = config.blind.normalized;
    return p;
}

// ---------- SINR trajectory ----------

struct TrialTrajectory {
    int trial_id = 0;
    int subcarrier = 0;
    ReferenceSinr reference;
    std::vector<blind::TrajectoryPoint> points;
    long long cross_mf_iteration = -1; // first probed iteration with blind >= MF perfect
};

struct TrackingResult {
    double sigma_v_sq = 0.0;
    double sigma_q_sq = 0.0;
    std::vector<TrialTrajectory> trials;

    CsvTable trajectory_csv() const
    {
        CsvTable t({"trial_id", "iteration", "sinr_blind_db", "sinr_mf_perfect_db", "sinr_mmse_perfect_db",
                    "sinr_mf_contaminated_db"});
        for (const auto& tr : trials)
            for (const auto& p : tr.points)
                t.row(tr.trial_id, p.iteration, p.sinr_db, tr.reference.mf_perfect_db, tr.reference.mmse_perfect_db,
                      tr.reference.mf_contaminated_db);
        return t;
    }

    CsvTable summary_csv() const
    {
        CsvTable t({"trial_id", "cross_mf_iteration", "final_iteration", "final_blind_db", "sinr_mf_perfect_db",
                    "sinr_mmse_perfect_db", "sinr_mf_contaminated_db", "final_gap_to_mmse_db"});
        for (const auto& tr : trials) {
            const auto& last = tr.points.back();
            t.row(tr.trial_id, tr.cross_mf_iteration, last.iteration, last.sinr_db, tr.reference.mf_perfect_db,
                  tr.reference.mmse_perfect_db, tr.reference.mf_contaminated_db,
                  tr.reference.mmse_perfect_db - last.sinr_db);
        }
        return t;
    }
};

inline TrialTrajectory run_trajectory_trial(const ExperimentConfig& config, int trial, int subcarrier,
                                            double sigma_v_sq, double sigma_q_sq)
{
    const auto sc = build_trial(config, trial, subcarrier, sigma_v_sq, sigma_q_sq, config.blind.packet_length);
    TrialTrajectory out;
    out.trial_id = trial;
    out.subcarrier = subcarrier;
    out.reference = reference_sinr(sc);

    blind::PacketRunOptions options;
    options.passes = static_cast<std::size_t>(config.blind.passes);
    options.normalized = config.blind.normalized;
    options.schedule.every = static_cast<std::size_t>(config.blind.probe_every);
    options.schedule.dense_until = static_cast<std::size_t>(config.blind.probe_dense_until);
    options.schedule.sparse_every = static_cast<std::size_t>(config.blind.probe_every_sparse);
    options.schedule.include_final = true;
    const auto row = sc.own_row();
    options.probe = [&](const CVector& w) { return measure_sinr(w, sc.eval, row).sinr_db; };

    auto state = blind::init_weights(sc.estimate.H_hat.col(0), blind_params(config));
    out.points = blind::run_packet(std::move(state), sc.packet.x, options).trajectory;
    for (const auto& p : out.points)
        if (p.sinr_db >= out.reference.mf_perfect_db) {
            out.cross_mf_iteration = static_cast<long long>(p.iteration);
            break;
        }
    return out;
}

/// Trajectories for every trial at one subcarrier.
inline TrackingResult run_tracking(const ExperimentConfig& config, int subcarrier)
{
    TrackingResult result;
    result.sigma_v_sq = calibrate_noise(config);
    result.sigma_q_sq = resolve_sigma_q_sq(config);
    result.trials = run_indexed(config.run.num_trials, config.run.threads, [&](int trial) {
        return run_trajectory_trial(config, trial, subcarrier, result.sigma_v_sq, result.sigma_q_sq);
    });
    return result;
}

inline TrackingResult run_tracking(const ExperimentConfig& config) { return run_tracking(config, config.channel.subcarrier); }

/// Writes trajectory<suffix>.csv and summary<suffix>.csv into `dir`.
inline std::vector<std::filesystem::path> write_tracking(const TrackingResult& result, const std::filesystem::path& dir,
                                                     const std::string& suffix = "")
{
    std::vector<std::filesystem::path> written{dir / ("trajectory" + suffix + ".csv"),
                                               dir / ("summary" + suffix + ".csv")};
    result.trajectory_csv().write(written[0]);
    result.summary_csv().write(written[1]);
    return written;
}

/// Runs and writes every configured subcarrier (suffix _sc<k> when sweeping).
inline std::vector<std::filesystem::path> write_tracking(const ExperimentConfig& config)
{
    const std::filesystem::path dir(config.run.out_dir);
    if (!config.channel.sweep_all_subcarriers)
        return write_tracking(run_tracking(config), dir);
    std::vector<std::filesystem::path> written;
    for (int k = 0; k < config.channel.num_subcarriers; ++k)
        for (auto& p : write_tracking(run_tracking(config, k), dir, "_sc" + std::to_string(k)))
            written.push_back(std::move(p));
    return written;
}

// ---------- eye pattern ----------

/// Blind eye opening of one bucket of decisions: the gap between the smallest
/// positive and the smallest-magnitude negative output. 0 if either side is empty.
inline double eye_opening(const std::vector<double>& decisions)
{
    double min_pos = kInf, min_neg = kInf;
    for (double y : decisions) {
        if (y >= 0.0)
            min_pos = std::min(min_pos, y);
        else
            min_neg = std::min(min_neg, -y);
    }
    if (min_pos == kInf || min_neg == kInf)
        return 0.0;
    return min_pos + min_neg;
}

struct EyeBucket {
    std::size_t first_iteration = 0;
    std::size_t last_iteration = 0;
    std::vector<double> samples;
    double opening = 0.0;
};

struct TrialEye {
    int trial_id = 0;
    std::vector<EyeBucket> buckets;
};

struct EyeResult {
    std::vector<TrialEye> trials;

    CsvTable samples_csv() const
    {
        CsvTable t({"trial_id", "iteration_bucket", "sample_value"});
        for (const auto& tr : trials)
            for (std::size_t b = 0; b < tr.buckets.size(); ++b)
                for (double v : tr.buckets[b].samples)
                    t.row(tr.trial_id, b, v);
        return t;
    }

    CsvTable opening_csv() const
    {
        CsvTable t({"trial_id", "iteration_bucket", "first_iteration", "last_iteration", "num_samples",
                    "eye_opening"});
        for (const auto& tr : trials)
            for (std::size_t b = 0; b < tr.buckets.size(); ++b) {
                const auto& bk = tr.buckets[b];
                t.row(tr.trial_id, b, bk.first_iteration, bk.last_iteration, bk.samples.size(), bk.opening);
            }
        return t;
    }
};

/// Split [0, total) into `buckets` contiguous ranges; bucket of iteration n.
inline std::size_t bucket_of(std::size_t n, std::size_t total, std::size_t buckets)
{
    return static_cast<std::size_t>((static_cast<unsigned long long>(n) * buckets) / total);
}

inline TrialEye run_eye_trial(const ExperimentConfig& config, int trial, double sigma_v_sq, double sigma_q_sq)
{
    const auto sc =
        build_trial(config, trial, config.channel.subcarrier, sigma_v_sq, sigma_q_sq, config.blind.packet_length);
    const std::size_t total = static_cast<std::size_t>(config.blind.packet_length) * config.eye.passes;
    const std::size_t nb = std::min<std::size_t>(static_cast<std::size_t>(config.eye.buckets), total);

    TrialEye out;
    out.trial_id = trial;
    out.buckets.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        out.buckets[b].first_iteration = total;
        out.buckets[b].samples.reserve(total / nb + 1);
    }
    blind::PacketRunOptions options;
    options.passes = static_cast<std::size_t>(config.eye.passes);
    options.normalized = config.blind.normalized;
    options.on_decision = [&](std::size_t n, double y) {
        auto& bk = out.buckets[bucket_of(n, total, nb)];
        bk.first_iteration = std::min(bk.first_iteration, n);
        bk.last_iteration = std::max(bk.last_iteration, n);
        bk.samples.push_back(y);
    };
    auto state = blind::init_weights(sc.estimate.H_hat.col(0), blind_params(config));
    (void)blind::run_packet(std::move(state), sc.packet.x, options);
    for (auto& bk : out.buckets)
        bk.opening = eye_opening(bk.samples);
    return out;
}

inline EyeResult run_eye(const ExperimentConfig& config)
{
    const double sigma_v_sq = calibrate_noise(config);
    const double sigma_q_sq = resolve_sigma_q_sq(config);
    EyeResult result;
    result.trials = run_indexed(config.run.num_trials, config.run.threads,
                                [&](int trial) { return run_eye_trial(config, trial, sigma_v_sq, sigma_q_sq); });
    return result;
}

inline std::vector<std::filesystem::path> write_eye(const ExperimentConfig& config)
{
    const auto r = run_eye(config);
    const std::filesystem::path dir(config.run.out_dir);
    std::vector<std::filesystem::path> written{dir / "eye_samples.csv", dir / "eye_opening.csv"};
    r.samples_csv().write(written[0]);
    r.opening_csv().write(written[1]);
    return written;
}

// ---------- intrinsic interference ----------

inline cmt::IntrinsicStats run_gaussianity(const ExperimentConfig& config)
{
    const auto cfg = config.cmt_config();
    const auto proto = cmt::design_prototype(cfg);
    Rng rng = derive_stream(config.run.master_seed, {kCmtStream});
    const auto samples = static_cast<std::size_t>(config.cmt.min_samples);
    return cmt::measure_intrinsic_stats(cfg, proto, rng, cmt::frames_for(samples, cfg), samples);
}

inline CsvTable gaussianity_csv(const cmt::IntrinsicStats& s)
{
    CsvTable t({"sigma_q_sq", "kurtosis_imag", "kurtosis_real_unequalized", "err_rate"});
    t.row(s.sigma_q_sq, s.kurtosis_imag, s.kurtosis_real_unequalized, s.real_part_alphabet_error_rate);
    return t;
}

} // namespace cmtmimo::harness
