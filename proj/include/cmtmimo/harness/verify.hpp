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

// Cross-module property checks at desk scale, runnable from the CLI as a
// quick self-test. Each check is independent and seeded from the master seed.

#pragma once

#include "cmtmimo/harness/experiments.hpp"
#include "cmtmimo/stats.hpp"

#include <chrono>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace cmtmimo::harness {

struct CheckResult {
    std::string name;
    bool passed = false;
    bool expected_failure = false; // known gap: reported, never gates the exit code
    std::string detail;
    double seconds = 0.0;

    std::string status() const
    {
        if (expected_failure)
            return passed ? "XPASS" : "XFAIL";
        return passed ? "PASS" : "FAIL";
    }
};

struct VerifyOptions {
    std::uint64_t master_seed = 1;
    bool corrupt_mf_normalization = false; // self-test: the mf identity check must then fail
};

struct VerifyReport {
    std::vector<CheckResult> checks;

    bool ok() const
    {
        for (const auto& c : checks)
            if (!c.passed && !c.expected_failure)
                return false;
        return true;
    }

    std::vector<std::string> failed() const
    {
        std::vector<std::string> names;
        for (const auto& c : checks)
            if (!c.passed && !c.expected_failure)
                names.push_back(c.name);
        return names;
    }

    std::string table() const
    {
        std::size_t width = 5;
        for (const auto& c : checks)
            width = std::max(width, c.name.size());
        std::ostringstream out;
        out << std::left << std::setw(static_cast<int>(width)) << "check" << "  status  seconds  detail\n";
        for (const auto& c : checks) {
            out << std::left << std::setw(static_cast<int>(width)) << c.name << "  " << std::setw(6) << c.status()
                << "  " << std::right << std::setw(7) << std::fixed << std::setprecision(3) << c.seconds << "  "
                << c.detail << '\n';
        }
        return out.str();
    }
};

namespace detail {

    struct Outcome {
        bool passed;
        std::string detail;
    };

    inline std::string num(double v)
    {
        std::ostringstream s;
        s << std::setprecision(4) << v;
        return s.str();
    }

    inline std::vector<CMatrix> random_channels(int M, int K, int N, Rng& rng)
    {
        std::vector<CMatrix> H(M, CMatrix(N, K));
        for (auto& Hm : H)
            for (Eigen::Index l = 0; l < K; ++l)
                Hm.col(l) = complex_gaussian_vector(rng, N, 1.0);
        return H;
    }

    /// Combiner under test for the mf identity; the corrupted variant drops the
    /// 1/||h|| half of the normalization.
    inline CVector mf_under_test(const CVector& h, bool corrupt)
    {
        return corrupt ? CVector(h / h.norm()) : mf_weights(h).w;
    }

    // ---------- topology ----------

    inline Outcome topology_gain_range(std::uint64_t seed)
    {
        Rng rng = derive_stream(seed, {100});
        for (int i = 0; i < 50; ++i) {
            const auto topo = build_topology(7, 3, 0.0, 1.0, rng);
            for (int m = 0; m < 7; ++m)
                for (int j = 0; j < 7; ++j)
                    for (int l = 0; l < 3; ++l) {
                        const double a = topo.gain(m, j, l);
                        if (a < 0.0 || a > 1.0 || (m == j && a != 1.0))
                            return {false, "gain out of range at draw " + std::to_string(i)};
                    }
        }
        return {true, "50 topologies, M=7 K=3"};
    }

    inline Outcome topology_determinism(std::uint64_t seed)
    {
        Rng a = derive_stream(seed, {101}), b = derive_stream(seed, {101}), c = derive_stream(seed + 1, {101});
        const auto ta = build_topology(7, 2, 0.0, 1.0, a);
        const auto tb = build_topology(7, 2, 0.0, 1.0, b);
        const auto tc = build_topology(7, 2, 0.0, 1.0, c);
        if (!(ta == tb))
            return {false, "equal seeds gave different topologies"};
        if (ta == tc)
            return {false, "different seeds gave identical topologies"};
        return {true, "equal seeds equal, different seeds differ"};
    }

    // ---------- channel ----------

    inline Outcome channel_parseval(std::uint64_t seed)
    {
        // delays on the 1/bandwidth grid: 0, 1, 2, 8 samples at 5 MHz
        const auto pdp = PowerDelayProfile::from_db({0.0, 0.2, 0.4, 1.6}, {0.0, -1.0, -3.0, -7.0});
        const SubcarrierGrid grid{5e6, 64};
        const CellTopology topo(2, 2, {1.0, 1.0, 0.3, 0.6, 0.2, 0.5, 1.0, 1.0});
        Rng rng = derive_stream(seed, {110});
        double worst = 0.0;
        for (int draw = 0; draw < 5; ++draw) {
            const auto ch = draw_channels(topo, pdp, 4, grid, rng);
            for (int m = 0; m < 2; ++m)
                for (int j = 0; j < 2; ++j)
                    for (int l = 0; l < 2; ++l)
                        for (int a = 0; a < 4; ++a) {
                            const auto taps = ch.link_taps(m, j, l, a);
                            double energy = 0.0, mean = 0.0;
                            for (const auto& g : taps)
                                energy += std::norm(g);
                            for (int k = 0; k < grid.num_subcarriers; ++k)
                                mean += std::norm(freq_response(taps, pdp.delays(), k, grid.num_subcarriers,
                                                                grid.bandwidth_hz));
                            mean /= grid.num_subcarriers;
                            worst = std::max(worst, std::abs(mean - energy) / energy);
                        }
        }
        return {worst <= 1e-9, "max relative error " + num(worst)};
    }

    inline Outcome channel_antenna_independence(std::uint64_t seed)
    {
        const auto pdp = PowerDelayProfile::cost207_typical_urban();
        const SubcarrierGrid grid{5e6, 256};
        const CellTopology lone(1, 1, {1.0});
        Rng rng = derive_stream(seed, {111});
        const int draws = 10000, N = 4;
        CMatrix acc = CMatrix::Zero(N, N);
        for (int d = 0; d < draws; ++d) {
            const auto ch = draw_channels(lone, pdp, N, grid, rng);
            const CVector h = channel_vector(ch, 0, 0, 0, 37);
            acc.noalias() += h * h.adjoint();
        }
        double worst = 0.0;
        for (int a = 0; a < N; ++a)
            for (int b = a + 1; b < N; ++b)
                worst = std::max(worst, std::abs(acc(a, b)) / std::sqrt(acc(a, a).real() * acc(b, b).real()));
        return {worst < 0.02, "max |corr| " + num(worst) + " over 1e4 draws"};
    }

    inline Outcome channel_rayleigh_moment(std::uint64_t seed)
    {
        const auto pdp = PowerDelayProfile::cost207_typical_urban();
        const CellTopology lone(1, 1, {1.0});
        Rng rng = derive_stream(seed, {112});
        const int draws = 4000, N = 8;
        std::vector<double> m2(pdp.num_taps(), 0.0), m4(pdp.num_taps(), 0.0);
        for (int d = 0; d < draws; ++d) {
            const auto ch = draw_channels(lone, pdp, N, {}, rng);
            for (int a = 0; a < N; ++a) {
                const auto taps = ch.link_taps(0, 0, 0, a);
                for (std::size_t t = 0; t < taps.size(); ++t) {
                    const double p = std::norm(taps[t]);
                    m2[t] += p;
                    m4[t] += p * p;
                }
            }
        }
        double worst = 0.0;
        const double n = static_cast<double>(draws) * N;
        for (std::size_t t = 0; t < m2.size(); ++t) {
            const double ratio = (m4[t] / n) / ((m2[t] / n) * (m2[t] / n));
            worst = std::max(worst, std::abs(ratio - 2.0) / 2.0);
        }
        return {worst <= 0.05, "max |E|g|^4/E|g|^2^2 - 2|/2 = " + num(worst)};
    }

    // ---------- cmt ----------

    inline cmt::IntrinsicStats loopback(int L, bool toggle, std::size_t samples, std::uint64_t seed)
    {
        cmt::CmtConfig cfg;
        cfg.num_subcarriers = L;
        cfg.phase_toggle = toggle;
        const auto proto = cmt::design_prototype(cfg);
        Rng rng = derive_stream(seed, {kCmtStream});
        return cmt::measure_intrinsic_stats(cfg, proto, rng, cmt::frames_for(samples, cfg), samples);
    }

    inline Outcome cmt_perfect_reconstruction(std::uint64_t seed)
    {
        const auto s = loopback(64, true, 8192, seed);
        return {s.real_part_mse < 1e-4, "real-part MSE " + num(s.real_part_mse)};
    }

    inline Outcome cmt_phase_toggle_necessity(std::uint64_t seed)
    {
        const auto on = loopback(64, true, 8192, seed);
        const auto off = loopback(64, false, 8192, seed);
        const double ratio = off.real_part_mse / on.real_part_mse;
        return {ratio >= 10.0, "MSE ratio off/on " + num(ratio)};
    }

    inline Outcome cmt_jarque_bera(std::uint64_t seed)
    {
        cmt::CmtConfig cfg;
        const auto proto = cmt::design_prototype(cfg);
        Rng rng = derive_stream(seed, {kCmtStream});
        const std::size_t samples = 100000;
        // recompute the moments on Im{y} through the public statistics
        const int frames = cmt::frames_for(samples, cfg);
        std::bernoulli_distribution coin(0.5);
        RMatrix pam(cfg.num_subcarriers, frames);
        for (Eigen::Index n = 0; n < pam.cols(); ++n)
            for (Eigen::Index k = 0; k < pam.rows(); ++k)
                pam(k, n) = coin(rng) ? 1.0 : -1.0;
        const CMatrix y = cmt::cmt_demodulate_all(cmt::cmt_synthesize(pam, cfg, proto), cfg, proto);
        std::vector<double> imag;
        for (int n = cfg.overlap_factor; n < frames - cfg.overlap_factor; ++n)
            for (int k = 0; k < cfg.num_subcarriers; ++k)
                imag.push_back(y(k, n).imag());
        const auto m = stats::moments(imag);
        const double jb = m.jarque_bera();
        return {jb < stats::kJarqueBeraCritical1Percent,
                "JB " + num(jb) + " (critical " + num(stats::kJarqueBeraCritical1Percent) + "), excess kurtosis " +
                    num(m.excess_kurtosis()) + ", n=" + std::to_string(m.count)};
    }

    // ---------- airlink ----------

    inline Outcome airlink_mode_equivalence(std::uint64_t seed)
    {
        Rng rng = derive_stream(seed, {120});
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const int M = 2 + trial % 6, K = 1 + trial % 4, N = 8 + 4 * (trial % 7), tau = K + trial % 5;
            const auto topo = build_topology(M, K, 0.0, 1.0, rng);
            const auto H = random_channels(M, K, N, rng);
            const int bs = trial % M;
            const auto direct = estimate_channels_direct(topo, H, bs, 0.0, tau, rng);
            const auto pilots = PilotBook::dft(K, tau);
            const auto corr = estimate_channels_correlate(pilots, transmit_pilots(pilots, topo, H, bs, 0.0, rng));
            worst = std::max(worst, (direct.H_hat - corr.H_hat).norm() / direct.H_hat.norm());
        }
        return {worst <= 1e-10, "max relative difference " + num(worst)};
    }

    inline Outcome airlink_linearity(std::uint64_t seed)
    {
        Rng rng = derive_stream(seed, {121});
        const int M = 4, K = 2, N = 16;
        const auto topo = build_topology(M, K, 0.0, 1.0, rng);
        const auto H = random_channels(M, K, N, rng);
        std::vector<CVector> t1, t2, mix, zero;
        const Complex a(0.7, -1.3), b(-2.1, 0.4);
        for (int m = 0; m < M; ++m) {
            t1.push_back(complex_gaussian_vector(rng, K, 1.0));
            t2.push_back(complex_gaussian_vector(rng, K, 1.0));
            mix.push_back(a * t1.back() + b * t2.back());
            zero.push_back(CVector::Zero(K));
        }
        Rng quiet = derive_stream(seed, {122});
        const CVector x1 = receive_frame(topo, H, 0, t1, 0.0, quiet).x;
        const CVector x2 = receive_frame(topo, H, 0, t2, 0.0, quiet).x;
        const CVector xm = receive_frame(topo, H, 0, mix, 0.0, quiet).x;
        const double sym_err = (xm - (a * x1 + b * x2)).norm() / xm.norm();

        // same noise stream: x(t, v) = x(t, 0) + x(0, v)
        Rng n1 = derive_stream(seed, {123}), n2 = derive_stream(seed, {123});
        const CVector noisy = receive_frame(topo, H, 0, t1, 0.5, n1).x;
        const CVector only_noise = receive_frame(topo, H, 0, zero, 0.5, n2).x;
        const double noise_err = (noisy - (x1 + only_noise)).norm() / noisy.norm();
        const double worst = std::max(sym_err, noise_err);
        return {worst <= 1e-12, "symbol " + num(sym_err) + ", noise " + num(noise_err)};
    }

    /// The contamination norm ||H_hat - H_jj|| = ||sum_{m!=j} a_m h_m|| is
    /// nondecreasing in a_m whenever the interferer term does not partially
    /// cancel the rest: always for one interferer, under joint scaling of all
    /// off-cell gains, and per gain for mutually orthogonal interferers.
    inline Outcome airlink_contamination_monotonicity(std::uint64_t seed)
    {
        Rng rng = derive_stream(seed, {124});
        const int N = 32, K = 2;
        const std::vector<double> grid{0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0};
        auto norm_for = [&](const CellTopology& topo, const std::vector<CMatrix>& H) {
            return (estimate_channels_direct(topo, H, 0, 0.0, K, rng).H_hat - H[0]).norm();
        };
        auto gains_with = [](int M, std::vector<double> off) { // off[m*K+l] for m>=1, target j=0
            std::vector<double> g(static_cast<std::size_t>(M) * M * K, 0.0);
            for (int m = 0; m < M; ++m)
                for (int l = 0; l < K; ++l)
                    g[(static_cast<std::size_t>(m) * M + 0) * K + l] = m == 0 ? 1.0 : off[m * K + l];
            for (int m = 1; m < M; ++m)
                for (int l = 0; l < K; ++l)
                    g[(static_cast<std::size_t>(m) * M + m) * K + l] = 1.0;
            return g;
        };
        int steps = 0;
        for (int draw = 0; draw < 10; ++draw) {
            // single interferer
            {
                const auto H = random_channels(2, K, N, rng);
                double prev = -1.0;
                for (double a : grid) {
                    const double n = norm_for(CellTopology(2, K, gains_with(2, {0, 0, a, a})), H);
                    if (n < prev)
                        return {false, "single interferer: norm decreased"};
                    prev = n;
                    ++steps;
                }
            }
            // joint scaling of all off-cell gains, M = 7
            {
                const auto H = random_channels(7, K, N, rng);
                std::uniform_real_distribution<double> u(0.0, 1.0);
                std::vector<double> base(7 * K);
                for (auto& v : base)
                    v = u(rng);
                double prev = -1.0;
                for (double c : grid) {
                    std::vector<double> off(base);
                    for (auto& v : off)
                        v *= c;
                    const double n = norm_for(CellTopology(7, K, gains_with(7, off)), H);
                    if (n < prev * (1.0 - 1e-14))
                        return {false, "joint scaling: norm decreased"};
                    prev = n;
                    ++steps;
                }
            }
            // each gain separately, orthogonal interferers
            {
                auto H = random_channels(4, K, N, rng);
                CMatrix stack(N, 3 * K);
                for (int m = 1; m < 4; ++m)
                    stack.middleCols((m - 1) * K, K) = H[m];
                const CMatrix Q = Eigen::HouseholderQR<CMatrix>(stack).householderQ() * CMatrix::Identity(N, 3 * K);
                for (int m = 1; m < 4; ++m)
                    H[m] = Q.middleCols((m - 1) * K, K) * 3.0;
                std::vector<double> off(4 * K, 0.5);
                for (std::size_t idx = K; idx < off.size(); ++idx) {
                    double prev = -1.0;
                    for (double a : grid) {
                        auto cur = off;
                        cur[idx] = a;
                        const double n = norm_for(CellTopology(4, K, gains_with(4, cur)), H);
                        if (n < prev * (1.0 - 1e-14))
                            return {false, "orthogonal interferers: norm decreased"};
                        prev = n;
                        ++steps;
                    }
                }
            }
        }
        return {true, std::to_string(steps) + " steps, no decrease"};
    }

    // ---------- combine ----------

    inline Outcome combine_mf_identity(std::uint64_t seed, bool corrupt)
    {
        Rng rng = derive_stream(seed, {130});
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const CVector h = complex_gaussian_vector(rng, 1 + i % 32, 1.0 + i);
            worst = std::max(worst, std::abs(mf_under_test(h, corrupt).dot(h) - 1.0));
        }
        return {worst <= 1e-12, "max |w^H h - 1| = " + num(worst)};
    }

    inline Outcome combine_mf_q_immunity(std::uint64_t seed)
    {
        Rng rng = derive_stream(seed, {131});
        const int N = 32, K = 3;
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            CMatrix H(N, K);
            for (int l = 0; l < K; ++l)
                H.col(l) = complex_gaussian_vector(rng, N, 1.0);
            const int user = i % K;
            CVector t(K);
            for (int l = 0; l < K; ++l)
                t(l) = Complex(rng() % 2 ? 1.0 : -1.0, 0.0);
            const CVector x0 = H * t + complex_gaussian_vector(rng, N, 0.1);
            std::normal_distribution<double> g(0.0, 3.0);
            const CVector x1 = x0 + H.col(user) * Complex(0.0, g(rng));
            worst = std::max(worst, std::abs(mf_detect(x1, H)(user) - mf_detect(x0, H)(user)));
        }
        return {worst <= 1e-12, "max change from own q " + num(worst)};
    }

    inline Outcome combine_mmse_dominance(std::uint64_t seed)
    {
        const int M = 7, N = 32;
        double worst = kInf;
        for (int i = 0; i < 20; ++i) {
            Rng rng = derive_stream(seed, {132, static_cast<std::uint64_t>(i)});
            const auto topo = build_topology(M, 1, 0.0, 1.0, rng);
            const auto H = random_channels(M, 1, N, rng);
            const double sv = 2.0 * N / from_db(20.0), sq = 0.087;
            UplinkFrameSource src(topo, H, 0, sv, sq, {-1.0, 1.0}, {0.5, 0.5});
            const auto frames = src.generate(5000, rng);
            const double mf = measure_sinr(mf_weights(H[0].col(0)).w, frames, 0).sinr_db;
            const double mmse = measure_sinr(mmse_weights(topo, H, 0, sv, 1.0 + sq)[0].w, frames, 0).sinr_db;
            worst = std::min(worst, mmse - mf);
        }
        return {worst >= -0.1, "min SINR(MMSE) - SINR(MF) = " + num(worst) + " dB"};
    }

    inline Outcome combine_sinr_scale_invariance(std::uint64_t seed)
    {
        Rng rng = derive_stream(seed, {133});
        const auto topo = build_topology(3, 1, 0.0, 1.0, rng);
        const auto H = random_channels(3, 1, 16, rng);
        UplinkFrameSource src(topo, H, 0, 0.3, 0.1, {-1.0, 1.0}, {0.5, 0.5});
        const auto frames = src.generate(2000, rng);
        const CVector w = mf_weights(H[0].col(0)).w;
        const double base = measure_sinr(w, frames, 0).sinr_db;
        double worst = 0.0;
        for (double c : {1e-3, 0.7, 3.0, 1e3})
            worst = std::max(worst, std::abs(measure_sinr(CVector(c * w), frames, 0).sinr_db - base));
        return {worst <= 1e-9, "max change " + num(worst) + " dB"};
    }

    // ---------- blind ----------

    inline Outcome blind_gradient_consistency(std::uint64_t seed)
    {
        Rng rng = derive_stream(seed, {140});
        const int N = 8;
        const double R = 1.0, mu = 0.01, h = 1e-6;
        double worst = 0.0;
        int used = 0;
        while (used < 100) {
            const CVector w0 = complex_gaussian_vector(rng, N, 0.1);
            const CVector x = complex_gaussian_vector(rng, N, 1.0);
            const double y = blind::decision(w0, x);
            if (std::abs(y) < 1e-3 || std::abs(std::abs(y) - R) < 1e-3)
                continue;
            auto cost = [&](const CVector& w) {
                const double e = std::abs(blind::decision(w, x)) - R;
                return e * e;
            };
            RVector grad(2 * N);
            for (int c = 0; c < 2 * N; ++c) {
                CVector wp = w0, wm = w0;
                const Complex d = c < N ? Complex(h, 0.0) : Complex(0.0, h);
                wp(c % N) += d;
                wm(c % N) -= d;
                grad(c) = (cost(wp) - cost(wm)) / (2.0 * h);
            }
            blind::BlindTrackerState st;
            st.w = w0;
            st.mu = mu;
            st.R = R;
            blind::blind_step(st, x, false);
            const CVector dw = st.w - w0;
            RVector step(2 * N);
            step << dw.real(), dw.imag();
            // one positive scalar for all coordinates: least-squares fit of step = -c grad
            const double c = -step.dot(grad) / grad.squaredNorm();
            if (!(c > 0.0))
                return {false, "update is not a descent direction"};
            worst = std::max(worst, (step + c * grad).norm() / step.norm());
            ++used;
        }
        return {worst < 1e-4, "100 pairs, N=8, max relative error " + num(worst)};
    }

    inline Outcome blind_equilibrium(std::uint64_t seed)
    {
        Rng rng = derive_stream(seed, {141});
        const int N = 16, T = 200;
        const CVector w = complex_gaussian_vector(rng, N, 1.0);
        const double R = 1.0;
        CMatrix packet(N, T);
        for (int n = 0; n < T; ++n) {
            CVector x = complex_gaussian_vector(rng, N, 1.0);
            const double target = (n % 2 ? R : -R);
            x += (target - blind::decision(w, x)) / w.squaredNorm() * w;
            packet.col(n) = x;
        }
        blind::BlindTrackerState st;
        st.w = w;
        st.mu = 0.05;
        st.epsilon = 1e-12;
        st.R = R;
        blind::PacketRunOptions opts;
        opts.passes = 3;
        const auto out = blind::run_packet(st, packet, opts);
        const double change = (out.state.w - w).norm() / w.norm();
        return {change <= 1e-13, "relative weight change " + num(change)};
    }

    inline Outcome blind_normalization_bound(std::uint64_t seed)
    {
        Rng rng = derive_stream(seed, {142});
        const int N = 16;
        double worst = 0.0;
        for (int i = 0; i < 500; ++i) {
            blind::BlindTrackerState st;
            st.w = complex_gaussian_vector(rng, N, 1.0);
            st.mu = 0.5 * (i % 7 + 1) / 7.0;
            st.epsilon = 1e-12 * N;
            st.R = 1.0 + (i % 3);
            const double scale = std::pow(10.0, (i % 9) - 4.0);
            const CVector x = i % 50 == 0 ? CVector::Zero(N) : CVector(complex_gaussian_vector(rng, N, 1.0) * scale);
            const CVector before = st.w;
            const double y = blind::blind_step(st, x, true);
            const double dw = (st.w - before).norm();
            const double xn = x.norm();
            if (xn == 0.0) {
                if (dw != 0.0)
                    return {false, "x = 0 changed the weights"};
                continue;
            }
            const double bound = 2.0 * st.mu * (std::abs(y) + st.R) / xn;
            worst = std::max(worst, dw / bound);
        }
        return {worst <= 1.0 + 1e-12, "max |dw| / bound = " + num(worst)};
    }

    /// Median (over seeds) probe SINR, smoothed over a 50-iteration window, must
    /// not decrease by more than `tolerance_db` between consecutive windows.
    struct DescentSummary {
        double worst_drop_db = 0.0;
        std::size_t windows = 0;
    };

    inline DescentSummary median_descent(const ExperimentConfig& config, std::size_t iterations, std::size_t every)
    {
        ExperimentConfig c = config;
        c.blind.packet_length = static_cast<int>(iterations);
        c.blind.passes = 1;
        c.blind.probe_every = static_cast<int>(every);
        c.blind.probe_dense_until = static_cast<int>(iterations);
        c.blind.probe_every_sparse = 0;
        const auto res = run_tracking(c);
        const std::size_t probes = res.trials.front().points.size();
        std::vector<double> median_curve(probes);
        for (std::size_t p = 0; p < probes; ++p) {
            std::vector<double> v;
            for (const auto& t : res.trials)
                v.push_back(t.points[p].sinr_db);
            median_curve[p] = stats::median(v);
        }
        const std::size_t window = std::max<std::size_t>(1, 50 / every);
        DescentSummary s;
        double prev = -kInf;
        for (std::size_t start = 0; start + window <= probes; start += window) {
            double mean = 0.0;
            for (std::size_t p = start; p < start + window; ++p)
                mean += median_curve[p];
            mean /= static_cast<double>(window);
            if (prev != -kInf)
                s.worst_drop_db = std::max(s.worst_drop_db, prev - mean);
            prev = mean;
            ++s.windows;
        }
        return s;
    }

    inline Outcome blind_cost_descent(std::uint64_t seed)
    {
        ExperimentConfig c = default_config();
        c.run.master_seed = seed;
        c.run.num_trials = 20;
        c.channel.num_antennas = 32;
        c.signaling.sigma_q_mode = SigmaQMode::fixed;
        c.signaling.sigma_q_sq = 0.087;
        const auto s = median_descent(c, 2000, 10);
        return {s.worst_drop_db <= 0.25,
                std::to_string(s.windows) + " windows, largest drop " + num(s.worst_drop_db) + " dB (tolerance 0.25)"};
    }

    // ---------- harness ----------

    inline ExperimentConfig desk_config(std::uint64_t seed)
    {
        ExperimentConfig c = default_config();
        c.run.master_seed = seed;
        c.run.num_trials = 4;
        c.channel.num_antennas = 16;
        c.blind.packet_length = 200;
        c.blind.passes = 3;
        c.blind.probe_dense_until = 200;
        c.blind.probe_every_sparse = 100;
        c.blind.eval_symbols = 1000;
        c.signaling.sigma_q_mode = SigmaQMode::fixed;
        c.signaling.sigma_q_sq = 0.087;
        return c;
    }

    inline Outcome harness_reproducibility(std::uint64_t seed)
    {
        const auto c = desk_config(seed);
        const auto a = run_tracking(c), b = run_tracking(c);
        const bool same = a.trajectory_csv().str() == b.trajectory_csv().str() &&
                          a.summary_csv().str() == b.summary_csv().str();
        const auto e1 = run_eye(c), e2 = run_eye(c);
        const bool eye_same = e1.samples_csv().str() == e2.samples_csv().str();
        return {same && eye_same, same && eye_same ? "byte-identical reruns" : "reruns differ"};
    }

    inline Outcome harness_seed_derivation(std::uint64_t seed)
    {
        auto c = desk_config(seed);
        const std::string serial = run_tracking(c).trajectory_csv().str();
        c.run.threads = 3;
        const std::string parallel = run_tracking(c).trajectory_csv().str();
        if (serial != parallel)
            return {false, "thread count changed the output"};
        // trial i is a function of (seed, i) only
        auto one = desk_config(seed);
        const auto full = run_tracking(one);
        one.run.num_trials = 2;
        const auto partial = run_tracking(one);
        for (std::size_t p = 0; p < partial.trials[1].points.size(); ++p)
            if (partial.trials[1].points[p].sinr_db != full.trials[1].points[p].sinr_db)
                return {false, "trial depends on the number of trials"};
        return {true, "1 vs 3 threads identical; trial independent of trial count"};
    }

    inline Outcome harness_csv_schema(std::uint64_t seed)
    {
        const auto c = desk_config(seed);
        const auto r = run_tracking(c);
        const auto t = r.trajectory_csv();
        const std::vector<std::string> expected{"trial_id", "iteration", "sinr_blind_db", "sinr_mf_perfect_db",
                                                "sinr_mmse_perfect_db", "sinr_mf_contaminated_db"};
        if (t.header() != expected)
            return {false, "trajectory header mismatch"};
        cmt::IntrinsicStats s;
        if (gaussianity_csv(s).header() !=
            std::vector<std::string>{"sigma_q_sq", "kurtosis_imag", "kurtosis_real_unequalized", "err_rate"})
            return {false, "gaussianity header mismatch"};
        if (run_eye(c).samples_csv().header() !=
            std::vector<std::string>{"trial_id", "iteration_bucket", "sample_value"})
            return {false, "eye header mismatch"};
        // round trip at >= 9 significant digits, '.' as decimal point
        Rng rng = derive_stream(seed, {150});
        std::uniform_real_distribution<double> u(-1e6, 1e6);
        for (int i = 0; i < 1000; ++i) {
            const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
            const std::string text = format_number(v);
            if (text.find(',') != std::string::npos)
                return {false, "locale separator in " + text};
            const double back = std::stod(text);
            if (std::abs(back - v) > 1e-9 * std::abs(v))
                return {false, "lost precision: " + text};
        }
        return {true, "headers exact; 1000 numbers round-trip to 1e-9"};
    }

    inline Outcome harness_noise_calibration(std::uint64_t seed)
    {
        ExperimentConfig c = default_config();
        c.channel.num_antennas = 32;
        const double sv = calibrate_noise(c);
        const double measured = measure_single_user_mf_sinr_db(c, sv, 100, 1000, seed);
        return {std::abs(measured - c.noise.target_sinr_db) <= 0.2,
                "measured " + num(measured) + " dB vs target " + num(c.noise.target_sinr_db)};
    }

} // namespace detail

inline VerifyReport run_verify(const VerifyOptions& options = {})
{
    using Check = std::function<detail::Outcome(std::uint64_t)>;
    struct Entry {
        std::string name;
        Check run;
        bool expected_failure = false;
    };
    const bool corrupt = options.corrupt_mf_normalization;
    const std::vector<Entry> entries{
        {"topology.gain_range", detail::topology_gain_range},
        {"topology.determinism", detail::topology_determinism},
        {"channel.parseval", detail::channel_parseval},
        {"channel.antenna_independence", detail::channel_antenna_independence},
        {"channel.rayleigh_moment", detail::channel_rayleigh_moment},
        {"cmt.perfect_reconstruction", detail::cmt_perfect_reconstruction},
        {"cmt.phase_toggle_necessity", detail::cmt_phase_toggle_necessity},
        // the prototype's Im{y} is platykurtic; see README
        {"cmt.jarque_bera_imag", detail::cmt_jarque_bera, true},
        {"airlink.mode_equivalence", detail::airlink_mode_equivalence},
        {"airlink.linearity", detail::airlink_linearity},
        {"airlink.contamination_monotonicity", detail::airlink_contamination_monotonicity},
        {"combine.mf_identity", [corrupt](std::uint64_t s) { return detail::combine_mf_identity(s, corrupt); }},
        {"combine.mf_q_immunity", detail::combine_mf_q_immunity},
        {"combine.mmse_dominance", detail::combine_mmse_dominance},
        {"combine.sinr_scale_invariance", detail::combine_sinr_scale_invariance},
        {"blind.gradient_consistency", detail::blind_gradient_consistency},
        {"blind.equilibrium", detail::blind_equilibrium},
        {"blind.normalization_bound", detail::blind_normalization_bound},
        {"blind.cost_descent", detail::blind_cost_descent},
        {"harness.noise_calibration", detail::harness_noise_calibration},
        {"harness.reproducibility", detail::harness_reproducibility},
        {"harness.seed_derivation", detail::harness_seed_derivation},
        {"harness.csv_schema", detail::harness_csv_schema},
    };
    VerifyReport report;
    for (const auto& e : entries) {
        CheckResult r;
        r.name = e.name;
        r.expected_failure = e.expected_failure;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const auto o = e.run(options.master_seed);
            r.passed = o.passed;
            r.detail = o.detail;
        } catch (const std::exception& ex) {
            r.passed = false;
            r.detail = std::string("threw: ") + ex.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.checks.push_back(std::move(r));
    }
    return report;
}

} // namespace cmtmimo::harness
