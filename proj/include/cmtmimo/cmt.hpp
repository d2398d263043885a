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

// Single-antenna cosine modulated multitone (CMT) transmultiplexer.
//
// Each subcarrier k carries a real PAM stream a_k[n] shaped by a real, even
// square-root Nyquist prototype p and placed at f_k = k * fs / L with a
// carrier phase of i^k. With L samples per symbol the synthesized signal is
//
//     x[t] = sum_k sum_n a_k[n] i^k p[t - nL] exp(i 2 pi k t / L).
//
// After down-conversion, matched filtering and one-tap equalization, the
// real part of the subcarrier output is free of ISI and ICI; the toggled
// carrier phase pushes all crosstalk from adjacent subcarriers into the
// imaginary part.

#pragma once

#include "cmtmimo/core.hpp"
#include "cmtmimo/stats.hpp"

#include <vector>

namespace cmtmimo::cmt {

struct CmtConfig {
    int num_subcarriers = 256;
    double subcarrier_spacing_hz = 5e6 / 256;
    int overlap_factor = 12; // prototype length in symbol periods
    double rolloff = 0.35;
    bool phase_toggle = true;

    int samples_per_symbol() const { return num_subcarriers; }

    void validate() const
    {
        require(num_subcarriers >= 2, "cmt: num_subcarriers must be >= 2");
        require(overlap_factor >= 4, "cmt: overlap_factor must be >= 4");
        require(rolloff > 0.0 && rolloff <= 1.0, "cmt: rolloff must lie in (0, 1]");
        require(subcarrier_spacing_hz > 0.0, "cmt: subcarrier spacing must be positive");
    }
};

struct PrototypeFilter {
    std::vector<double> coefficients;

    std::size_t length() const { return coefficients.size(); }
};

/// Continuous square-root raised-cosine impulse response, t in symbol periods, unit symbol energy.
inline double srrc(double t, double rolloff)
{
    const double b = rolloff;
    if (t == 0.0)
        return 1.0 - b + 4.0 * b / kPi;
    const double x = 4.0 * b * t;
    if (std::abs(std::abs(x) - 1.0) < 1e-9) {
        return b / std::sqrt(2.0) *
               ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * b)) + (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * b)));
    }
    return (std::sin(kPi * t * (1.0 - b)) + x * std::cos(kPi * t * (1.0 + b))) / (kPi * t * (1.0 - x * x));
}

/// SRRC sampled at L samples per symbol over overlap_factor symbols (odd length,
/// centered), normalized to unit energy.
inline PrototypeFilter design_prototype(const CmtConfig& config)
{
    config.validate();
    const int L = config.samples_per_symbol();
    const int span = config.overlap_factor * L;
    const int center = span / 2;
    std::vector<double> c(static_cast<std::size_t>(span) + 1);
    for (int i = 0; i <= center; ++i) {
        const double t = static_cast<double>(i - center) / L;
        c[i] = srrc(t, config.rolloff);
        c[span - i] = c[i];
    }
    double energy = 0.0;
    for (double v : c)
        energy += v * v;
    const double scale = 1.0 / std::sqrt(energy);
    for (double& v : c)
        v *= scale;
    return {std::move(c)};
}

namespace detail {

    // exp(i 2 pi m / L) for m in [0, L).
    inline std::vector<Complex> twiddles(int L)
    {
        std::vector<Complex> tw(L);
        for (int m = 0; m < L; ++m)
            tw[m] = std::polar(1.0, 2.0 * kPi * m / L);
        return tw;
    }

    inline Complex carrier_phase(int k, bool toggle)
    {
        if (!toggle)
            return {1.0, 0.0};
        static constexpr Complex kQuarter[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        return kQuarter[k % 4];
    }

    inline void check_proto(const CmtConfig& config, const PrototypeFilter& proto)
    {
        config.validate();
        require(proto.length() == static_cast<std::size_t>(config.overlap_factor) * config.num_subcarriers + 1,
                "cmt: prototype does not match config");
    }

    /// Synthesis with an optional per-subcarrier flat gain (the narrowband channel model).
    inline std::vector<Complex> synthesize(const RMatrix& frames, const CmtConfig& config,
                                           const PrototypeFilter& proto, const std::vector<Complex>* gains)
    {
        check_proto(config, proto);
        const int L = config.num_subcarriers;
        require(frames.rows() == L, "cmt: frame rows must equal num_subcarriers");
        require(frames.allFinite(), "cmt: frames must be finite");
        const auto num_symbols = static_cast<std::size_t>(frames.cols());
        const auto tw = twiddles(L);
        std::vector<Complex> coef(L);
        for (int k = 0; k < L; ++k)
            coef[k] = carrier_phase(k, config.phase_toggle) * (gains ? (*gains)[k] : Complex{1.0, 0.0});

        std::vector<Complex> out((num_symbols + config.overlap_factor) * L, Complex{0.0, 0.0});
        std::vector<Complex> block(L);
        for (std::size_t n = 0; n < num_symbols; ++n) {
            std::fill(block.begin(), block.end(), Complex{0.0, 0.0});
            bool active = false;
            for (int k = 0; k < L; ++k) {
                const double a = frames(k, static_cast<Eigen::Index>(n));
                if (a == 0.0)
                    continue;
                active = true;
                const Complex ak = a * coef[k];
                for (int v = 0, idx = 0; v < L; ++v, idx = (idx + k) % L)
                    block[v] += ak * tw[idx];
            }
            if (!active)
                continue;
            Complex* dst = out.data() + n * L;
            for (std::size_t u = 0; u < proto.length(); ++u)
                dst[u] += proto.coefficients[u] * block[u % L];
        }
        return out;
    }

} // namespace detail

/// Synthesize L real PAM streams (rows = subcarriers, columns = symbol periods)
/// into a complex baseband stream of (Nsym + overlap_factor) * L samples.
inline std::vector<Complex> cmt_synthesize(const RMatrix& pam_frames, const CmtConfig& config,
                                           const PrototypeFilter& proto)
{
    return detail::synthesize(pam_frames, config, proto, nullptr);
}

inline int symbols_in_stream(std::size_t num_samples, const CmtConfig& config)
{
    const auto L = static_cast<std::size_t>(config.num_subcarriers);
    require(num_samples % L == 0, "cmt: stream length must be a multiple of num_subcarriers");
    require(num_samples / L > static_cast<std::size_t>(config.overlap_factor), "cmt: stream too short");
    return static_cast<int>(num_samples / L) - config.overlap_factor;
}

/// Down-convert at f_k, matched-filter, sample once per symbol and apply the
/// one-tap equalizer. Returns the complex pre-decision sequence y_k(n); the
/// caller takes the real part.
inline std::vector<Complex> cmt_demodulate(const std::vector<Complex>& samples, int subcarrier,
                                           const CmtConfig& config, const PrototypeFilter& proto,
                                           Complex one_tap_equalizer)
{
    detail::check_proto(config, proto);
    const int L = config.num_subcarriers;
    require(subcarrier >= 0 && subcarrier < L, "cmt: subcarrier index out of range");
    require(std::isfinite(one_tap_equalizer.real()) && std::isfinite(one_tap_equalizer.imag()) &&
                std::abs(one_tap_equalizer) > 0.0,
            "cmt: equalizer must be finite and nonzero");
    const int num_symbols = symbols_in_stream(samples.size(), config);

    // exp(-i 2 pi k u / L) depends only on u mod L.
    std::vector<Complex> mixer(L);
    for (int v = 0; v < L; ++v)
        mixer[v] = std::polar(1.0, -2.0 * kPi * static_cast<double>((static_cast<long long>(subcarrier) * v) % L) / L);
    const Complex derotate = std::conj(detail::carrier_phase(subcarrier, config.phase_toggle)) * one_tap_equalizer;

    std::vector<Complex> y(num_symbols);
    for (int n = 0; n < num_symbols; ++n) {
        const Complex* src = samples.data() + static_cast<std::size_t>(n) * L;
        Complex acc{0.0, 0.0};
        for (std::size_t u = 0; u < proto.length(); ++u)
            acc += src[u] * mixer[u % L] * proto.coefficients[u];
        y[n] = derotate * acc;
    }
    return y;
}

/// All subcarriers at once (rows = subcarriers), equalizer 1 on every subcarrier.
inline CMatrix cmt_demodulate_all(const std::vector<Complex>& samples, const CmtConfig& config,
                                  const PrototypeFilter& proto)
{
    detail::check_proto(config, proto);
    const int L = config.num_subcarriers;
    const int num_symbols = symbols_in_stream(samples.size(), config);
    std::vector<Complex> tw = detail::twiddles(L);
    for (auto& w : tw)
        w = std::conj(w);

    CMatrix y(L, num_symbols);
    std::vector<Complex> folded(L);
    for (int n = 0; n < num_symbols; ++n) {
        std::fill(folded.begin(), folded.end(), Complex{0.0, 0.0});
        const Complex* src = samples.data() + static_cast<std::size_t>(n) * L;
        for (std::size_t u = 0; u < proto.length(); ++u)
            folded[u % L] += src[u] * proto.coefficients[u];
        for (int k = 0; k < L; ++k) {
            Complex acc{0.0, 0.0};
            for (int v = 0, idx = 0; v < L; ++v, idx = (idx + k) % L)
                acc += folded[v] * tw[idx];
            y(k, n) = std::conj(detail::carrier_phase(k, config.phase_toggle)) * acc;
        }
    }
    return y;
}

struct IntrinsicStats {
    double sigma_q_sq = 0.0;                 // var(Im y), units of symbol energy
    double mean_imag = 0.0;
    double kurtosis_imag = 0.0;              // 3 for Gaussian
    double kurtosis_real_unequalized = 0.0;  // per-subcarrier random channel phase, no equalizer
    double kurtosis_imag_unequalized = 0.0;
    double real_part_alphabet_error_rate = 0.0;
    double real_part_mse = 0.0;
    std::size_t num_samples = 0;
};

/// Minimum number of symbol periods that yields `interior_symbols` statistics samples.
inline int frames_for(std::size_t interior_symbols, const CmtConfig& config)
{
    const auto L = static_cast<std::size_t>(config.num_subcarriers);
    return static_cast<int>((interior_symbols + L - 1) / L) + 2 * config.overlap_factor;
}

/// Noiseless loopback with i.i.d. binary PAM on every subcarrier. The first and
/// last overlap_factor symbol periods are excluded from all statistics.
inline IntrinsicStats measure_intrinsic_stats(const CmtConfig& config, const PrototypeFilter& proto, Rng& rng,
                                              int num_frames, std::size_t min_samples = 100000)
{
    detail::check_proto(config, proto);
    const int L = config.num_subcarriers;
    const int D = config.overlap_factor;
    require(num_frames > 2 * D, "cmt: num_frames must exceed twice the overlap factor");
    const std::size_t interior = static_cast<std::size_t>(num_frames - 2 * D) * L;
    require(interior >= min_samples, "cmt: too few interior symbols for intrinsic statistics");

    std::bernoulli_distribution coin(0.5);
    RMatrix frames(L, num_frames);
    for (Eigen::Index n = 0; n < frames.cols(); ++n)
        for (Eigen::Index k = 0; k < frames.rows(); ++k)
            frames(k, n) = coin(rng) ? 1.0 : -1.0;

    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    std::vector<Complex> gains(L);
    for (auto& g : gains)
        g = std::polar(1.0, phase(rng));

    const CMatrix y = cmt_demodulate_all(cmt_synthesize(frames, config, proto), config, proto);
    const CMatrix yu = cmt_demodulate_all(detail::synthesize(frames, config, proto, &gains), config, proto);

    std::vector<double> imag, real_u, imag_u;
    imag.reserve(interior);
    real_u.reserve(interior);
    imag_u.reserve(interior);
    std::size_t errors = 0;
    double sq = 0.0;
    for (int n = D; n < num_frames - D; ++n)
        for (int k = 0; k < L; ++k) {
            const double s = frames(k, n);
            const Complex v = y(k, n);
            imag.push_back(v.imag());
            real_u.push_back(yu(k, n).real());
            imag_u.push_back(yu(k, n).imag());
            if ((v.real() >= 0.0) != (s > 0.0))
                ++errors;
            sq += (v.real() - s) * (v.real() - s);
        }

    const auto mi = stats::moments(imag);
    IntrinsicStats out;
    out.sigma_q_sq = mi.variance;
    out.mean_imag = mi.mean;
    out.kurtosis_imag = mi.kurtosis;
    out.kurtosis_real_unequalized = stats::moments(real_u).kurtosis;
    out.kurtosis_imag_unequalized = stats::moments(imag_u).kurtosis;
    out.real_part_alphabet_error_rate = static_cast<double>(errors) / static_cast<double>(imag.size());
    out.real_part_mse = sq / static_cast<double>(imag.size());
    out.num_samples = imag.size();
    return out;
}

} // namespace cmtmimo::cmt
