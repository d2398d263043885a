// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The cmtmimo Authors
//
// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//   cmtmimo_acceptance [--cli path/to/cmtmimo] [--work dir] [--only n]

#include "cmtmimo/airlink.hpp"
#include "cmtmimo/blind.hpp"
#include "cmtmimo/combine.hpp"
#include "cmtmimo/harness/experiments.hpp"
#include "cmtmimo/stats.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace cmtmimo;
using namespace cmtmimo::harness;

namespace {

struct Verdict {
    bool passed = false;
    std::string detail;
};

std::string num(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::vector<CMatrix> random_channels(int M, int K, int N, Rng& rng)
{
    std::vector<CMatrix> H(M, CMatrix(N, K));
    for (auto& Hm : H)
        for (Eigen::Index l = 0; l < K; ++l)
            Hm.col(l) = complex_gaussian_vector(rng, N, 1.0);
    return H;
}

// 1. exact identities
Verdict exact_identities()
{
    const auto binary = blind::PamAlphabet::binary();
    const double r1 = blind::dispersion_constant(binary, 1), r2 = blind::dispersion_constant(binary, 2);

    Rng rng = derive_stream(101);
    double mf = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const CVector h = complex_gaussian_vector(rng, 1 + i % 128, std::pow(10.0, i % 5 - 2));
        mf = std::max(mf, std::abs(mf_weights(h).w.dot(h) - 1.0));
    }

    double decomposition = 0.0, modes = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int M = 2 + trial % 6, K = 1 + trial % 3, N = 8 + 8 * (trial % 5), tau = K + trial % 4;
        const auto topo = build_topology(M, K, 0.0, 1.0, rng);
        const auto H = random_channels(M, K, N, rng);
        const int j = trial % M;
        const auto direct = estimate_channels_direct(topo, H, j, 0.0, tau, rng);
        CMatrix expected = H[j];
        for (int m = 0; m < M; ++m)
            if (m != j)
                for (int l = 0; l < K; ++l)
                    expected.col(l) += topo.gain(m, j, l) * H[m].col(l);
        decomposition = std::max(decomposition, (direct.H_hat - expected).norm() / expected.norm());
        const auto pilots = PilotBook::dft(K, tau);
        const auto corr = estimate_channels_correlate(pilots, transmit_pilots(pilots, topo, H, j, 0.0, rng));
        modes = std::max(modes, (corr.H_hat - direct.H_hat).norm() / direct.H_hat.norm());
    }
    const bool ok = r1 == 1.0 && r2 == 1.0 && mf <= 1e-12 && decomposition <= 1e-12 && modes <= 1e-10;
    return {ok, "R(p=1)=" + num(r1) + " R(p=2)=" + num(r2) + ", max |w^H h - 1|=" + num(mf) +
                    ", contamination sum rel err=" + num(decomposition) + ", correlate vs direct=" + num(modes)};
}

// 2. blind update against finite differences of (|Re{w^H x}| - R)^2
Verdict gradient_check()
{
    Rng rng = derive_stream(102);
    const int N = 8;
    const double R = 1.0, h = 1e-6;
    double worst = 0.0;
    for (int used = 0; used < 100;) {
        blind::BlindTrackerState st;
        st.w = complex_gaussian_vector(rng, N, 0.1);
        st.mu = 0.05;
        st.R = R;
        const CVector x = complex_gaussian_vector(rng, N, 1.0);
        const double y = blind::decision(st.w, x);
        if (std::abs(y) < 1e-3 || std::abs(std::abs(y) - R) < 1e-3)
            continue; // cost is not differentiable there
        auto cost = [&](const CVector& w) {
            const double e = std::abs(blind::decision(w, x)) - R;
            return e * e;
        };
        RVector grad(2 * N);
        for (int c = 0; c < 2 * N; ++c) {
            CVector wp = st.w, wm = st.w;
            const Complex d = c < N ? Complex(h, 0.0) : Complex(0.0, h);
            wp(c % N) += d;
            wm(c % N) -= d;
            grad(c) = (cost(wp) - cost(wm)) / (2.0 * h);
        }
        const CVector w0 = st.w;
        blind::blind_step(st, x, false);
        const CVector dw = st.w - w0;
        RVector step(2 * N);
        step << dw.real(), dw.imag();
        // the update is -mu * gradient
        worst = std::max(worst, (step + st.mu * grad).norm() / step.norm());
        ++used;
    }
    return {worst <= 1e-4, "max relative deviation from -mu*grad over 100 pairs: " + num(worst)};
}

// 3. SINR oracles
Verdict sinr_oracle()
{
    Rng rng = derive_stream(103);
    const std::vector<double> levels{-1.0, 1.0}, probs{0.5, 0.5};
    const CellTopology lone(1, 1, {1.0});
    const auto H = random_channels(1, 1, 128, rng);
    const double sv = 0.5;
    UplinkFrameSource src(lone, H, 0, sv, 0.0, levels, probs);
    const double measured = measure_sinr(mf_weights(H[0].col(0)).w, src, 0, 100000, rng).sinr_db;
    const double closed = db(2.0 * H[0].col(0).squaredNorm() * 1.0 / sv);
    const double err = std::abs(measured - closed);

    const auto config = default_config();
    const double sigma_v_sq = calibrate_noise(config), sigma_q_sq = 0.087;
    double worst = kInf;
    for (int i = 0; i < 100; ++i) {
        Rng r = derive_stream(104, {static_cast<std::uint64_t>(i)});
        const auto topo = build_topology(7, 1, 0.0, 1.0, r);
        const auto Hi = random_channels(7, 1, 128, r);
        UplinkFrameSource s(topo, Hi, 0, sigma_v_sq, sigma_q_sq, levels, probs);
        const auto frames = s.generate(4000, r);
        const double mf = measure_sinr(mf_weights(Hi[0].col(0)).w, frames, 0).sinr_db;
        const double mmse = measure_sinr(mmse_weights(topo, Hi, 0, sigma_v_sq, 1.0 + sigma_q_sq)[0].w, frames, 0).sinr_db;
        worst = std::min(worst, mmse - mf);
    }
    return {err <= 0.3 && worst >= -0.1, "MF closed-form error " + num(err) + " dB (tol 0.3), min MMSE-MF over 100 "
                                         "7-cell draws " + num(worst) + " dB (slack -0.1)"};
}

// 4. noise calibration
Verdict noise_calibration()
{
    const auto config = default_config();
    const double sinr = measure_single_user_mf_sinr_db(config, calibrate_noise(config), 200, 2000, 105);
    return {sinr >= 31.7 && sinr <= 32.3, "measured contamination-free MF SINR " + num(sinr) + " dB, window [31.7, 32.3]"};
}

// 5. tracking trajectory at the default configuration
Verdict trajectory()
{
    auto config = default_config();
    config.run.num_trials = std::max(config.run.num_trials, 20);
    const auto r = run_tracking(config);
    const std::size_t T = r.trials.size();

    bool starts_at_contaminated = true;
    for (const auto& t : r.trials)
        starts_at_contaminated &= t.points.front().iteration == 0 && t.points.front().sinr_db == t.reference.mf_contaminated_db;

    // median over trials of (blind - MF perfect) at every probe
    long long crossing = -1;
    const std::size_t probes = r.trials.front().points.size();
    for (std::size_t p = 0; p < probes && crossing < 0; ++p) {
        std::vector<double> gap;
        for (const auto& t : r.trials)
            gap.push_back(t.points[p].sinr_db - t.reference.mf_perfect_db);
        if (stats::median(gap) >= 0.0)
            crossing = static_cast<long long>(r.trials.front().points[p].iteration);
    }

    std::vector<double> to_mmse, over_mf, mmse_mf;
    for (const auto& t : r.trials) {
        const double final_db = t.points.back().sinr_db;
        to_mmse.push_back(t.reference.mmse_perfect_db - final_db);
        over_mf.push_back(final_db - t.reference.mf_perfect_db);
        mmse_mf.push_back(t.reference.mmse_perfect_db - t.reference.mf_perfect_db);
    }
    const std::size_t updates = r.trials.front().points.back().iteration;
    const double gap_mmse = stats::median(to_mmse), gain_mf = stats::median(over_mf), spread = stats::median(mmse_mf);
    const bool c = updates >= 100000 && gap_mmse <= 3.0 && (spread <= 6.0 || gain_mf >= 3.0);
    const bool b = crossing >= 0 && crossing <= 500;
    return {T >= 20 && starts_at_contaminated && b && c,
            std::to_string(T) + " trials; start at contaminated MF: " + (starts_at_contaminated ? "yes" : "no") +
                "; median crosses MF-perfect at iteration " + std::to_string(crossing) + " (limit 500); after " +
                std::to_string(updates) + " updates median gap to MMSE " + num(gap_mmse) + " dB (limit 3), over MF " +
                num(gain_mf) + " dB, median MMSE-MF " + num(spread) + " dB"};
}

// 6. eye opening grows
Verdict eye()
{
    const auto config = default_config();
    const auto r = run_eye(config);
    int improved = 0;
    for (const auto& t : r.trials)
        improved += t.buckets.back().opening > t.buckets.front().opening;
    const double frac = static_cast<double>(improved) / static_cast<double>(r.trials.size());
    return {frac >= 0.8, std::to_string(improved) + "/" + std::to_string(r.trials.size()) +
                             " trials with a wider last-bucket eye (need 80%)"};
}

// 7. intrinsic interference statistics
Verdict gaussianity()
{
    const auto config = default_config();
    const auto s = run_gaussianity(config);
    const double excess = s.kurtosis_imag - 3.0;
    return {s.num_samples >= 100000 && std::abs(excess) <= 0.3 && s.real_part_alphabet_error_rate == 0.0,
            std::to_string(s.num_samples) + " samples, Im excess kurtosis " + num(excess) +
                " (tol 0.3), real-part decision errors " + num(s.real_part_alphabet_error_rate)};
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 8. identical config and seed give identical bytes
Verdict determinism(const std::string& cli, const std::filesystem::path& work)
{
    if (cli.empty())
        return {false, "no --cli given"};
    std::vector<std::filesystem::path> dirs{work / "run_a", work / "run_b"};
    for (const auto& d : dirs) {
        std::filesystem::remove_all(d);
        const std::string cmd = "\"" + cli + "\" simulate --seed 11 --out \"" + d.string() + "\" > \"" +
                                (work / (d.filename().string() + ".log")).string() + "\" 2>&1";
        if (std::system(cmd.c_str()) != 0)
            return {false, "simulate failed: " + cmd};
    }
    std::string detail;
    bool same = true;
    for (const char* name : {"trajectory.csv", "summary.csv"}) {
        const auto a = slurp(dirs[0] / name), b = slurp(dirs[1] / name);
        const bool eq = !a.empty() && a == b;
        same &= eq;
        detail += std::string(name) + " " + std::to_string(a.size()) + " bytes " + (eq ? "identical" : "DIFFER") + "; ";
    }
    return {same, detail};
}

} // namespace

int main(int argc, char** argv)
{
    std::string cli;
    std::filesystem::path work = std::filesystem::temp_directory_path() / "cmtmimo_acceptance";
    int only = 0;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        if (flag == "--cli")
            cli = argv[i + 1];
        else if (flag == "--work")
            work = argv[i + 1];
        else if (flag == "--only")
            only = std::atoi(argv[i + 1]);
        else {
            std::cerr << "unknown flag " << flag << "\n";
            return 2;
        }
    }
    std::filesystem::create_directories(work);

    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"exact identities", exact_identities},
        {"gradient check", gradient_check},
        {"SINR oracle", sinr_oracle},
        {"noise calibration", noise_calibration},
        {"tracking trajectory", trajectory},
        {"eye opening", eye},
        {"intrinsic interference", gaussianity},
        {"determinism", [&] { return determinism(cli, work); }},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (only && static_cast<int>(i + 1) != only)
            continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !v.passed;
        std::cout << (v.passed ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
                  << "): " << v.detail << " [" << num(secs) << " s]" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
