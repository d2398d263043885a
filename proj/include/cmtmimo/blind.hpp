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

// Blind (Godard-style) tracking of per-user combiner weights.
//
// The combiner starts from the matched filter built on the contaminated
// channel estimate and follows a stochastic gradient of
//
//     xi = E[(|y|^p - R)^2],   R = E|s|^(2p) / E|s|^p,
//
// where y = Re{w^H x} is the real pre-decision output of the CMT subcarrier.
// The p = 1 update with the step normalized by the instantaneous input energy is
//
//     w <- w - 2 mu / (x^H x + eps) * sign(y) (|y| - R) x.
//
// Only the real part carries the PAM symbol, so the update drives both the
// intrinsic interference q of the desired user and every other user's
// contribution out of Re{w^H x}.

#pragma once

#include "cmtmimo/combine.hpp"
#include "cmtmimo/core.hpp"

#include <functional>
#include <numeric>
#include <span>
#include <vector>

namespace cmtmimo::blind {

struct PamAlphabet {
    std::vector<double> levels{-1.0, 1.0};
    std::vector<double> probabilities{0.5, 0.5};

    static PamAlphabet binary() { return {}; }

    static PamAlphabet uniform(std::vector<double> levels)
    {
        const std::size_t n = levels.size();
        return PamAlphabet{std::move(levels), std::vector<double>(n, 1.0 / static_cast<double>(n))}.validated();
    }

    PamAlphabet validated() const
    {
        require(!levels.empty(), "alphabet: no levels");
        require(levels.size() == probabilities.size(), "alphabet: levels and probabilities differ in length");
        double total = 0.0;
        for (std::size_t i = 0; i < levels.size(); ++i) {
            require(std::isfinite(levels[i]), "alphabet: levels must be finite");
            require(probabilities[i] >= 0.0, "alphabet: probabilities must be nonnegative");
            total += probabilities[i];
        }
        require(std::abs(total - 1.0) <= 1e-12, "alphabet: probabilities must sum to 1");
        return *this;
    }

    /// E[|s|^r].
    double absolute_moment(double r) const
    {
        double m = 0.0;
        for (std::size_t i = 0; i < levels.size(); ++i)
            m += probabilities[i] * std::pow(std::abs(levels[i]), r);
        return m;
    }

    double second_moment() const { return absolute_moment(2.0); }
};

/// R = E|s|^(2p) / E|s|^p, exact over the alphabet.
inline double dispersion_constant(const PamAlphabet& alphabet, int p)
{
    require(p >= 1, "dispersion_constant: p must be >= 1");
    alphabet.validated();
    const double denominator = alphabet.absolute_moment(p);
    require(denominator > 0.0, "dispersion_constant: alphabet is degenerate (all zero)");
    return alphabet.absolute_moment(2.0 * p) / denominator;
}

/// Sample mean of (|y|^p - R)^2.
inline double godard_cost(std::span<const double> y, int p, double R)
{
    require(!y.empty(), "godard_cost: no samples");
    require(p >= 1, "godard_cost: p must be >= 1");
    double sum = 0.0;
    for (double v : y) {
        const double e = std::pow(std::abs(v), p) - R;
        sum += e * e;
    }
    return sum / static_cast<double>(y.size());
}

struct BlindParams {
    double mu = 0.05;
    double epsilon = 1e-12 * 128; // scale with the antenna count
    int p = 1;
    double R = 1.0;
    bool normalized = true;
};

struct BlindTrackerState {
    CVector w;
    double mu = 0.05;
    double epsilon = 0.0;
    int p = 1;
    double R = 1.0;
    std::size_t iteration = 0;

    void validate() const
    {
        require(w.size() >= 1 && all_finite(w), "blind: weights must be finite");
        require(mu >= 0.0 && std::isfinite(mu), "blind: step-size must be finite and nonnegative");
        require(epsilon >= 0.0, "blind: epsilon must be nonnegative");
        require(R > 0.0, "blind: dispersion constant must be positive");
        require(p >= 1, "blind: p must be >= 1");
    }
};

/// w(0) = h_hat / (h_hat^H h_hat), the matched filter on the estimate.
inline BlindTrackerState init_weights(const CVector& h_hat, const BlindParams& params = {})
{
    BlindTrackerState state;
    state.w = mf_weights(h_hat).w;
    state.mu = params.mu;
    state.epsilon = params.epsilon;
    state.p = params.p;
    state.R = params.R;
    state.validate();
    return state;
}

/// Pre-decision output Re{w^H x}.
inline double decision(const CVector& w, const CVector& x) { return w.dot(x).real(); }

/// One tracking update; returns the decision made before the update.
inline double blind_step(BlindTrackerState& state, const CVector& x, bool normalized = true)
{
    require(x.size() == state.w.size(), "blind_step: input length must equal weight length");
    if (!all_finite(x))
        throw NumericalError("blind_step: received vector is not finite");
    const double y = decision(state.w, x);
    const double sign = (y > 0.0) - (y < 0.0);
    const double error = sign * (std::abs(y) - state.R);
    double step = 2.0 * state.mu;
    if (normalized) {
        const double denom = x.squaredNorm() + state.epsilon;
        step = denom > 0.0 ? step / denom : 0.0;
    }
    if (error != 0.0 && step != 0.0)
        state.w -= (step * error) * x;
    ++state.iteration;
    return y;
}

/// When to freeze the weights and probe the SINR: every `every` iterations up to
/// `dense_until`, then every `sparse_every` iterations.
struct ProbeSchedule {
    std::size_t every = 1;
    std::size_t dense_until = std::numeric_limits<std::size_t>::max();
    std::size_t sparse_every = 0;
    bool include_final = false;

    bool at(std::size_t n) const
    {
        if (n < dense_until)
            return every > 0 && n % every == 0;
        return sparse_every > 0 && n % sparse_every == 0;
    }
};

struct TrajectoryPoint {
    std::size_t iteration = 0;
    double sinr_db = 0.0;
};

struct PacketRunOptions {
    std::size_t passes = 1;
    bool normalized = true;
    ProbeSchedule schedule{};
    std::function<double(const CVector&)> probe;                      // optional SINR probe on frozen weights
    std::function<void(std::size_t iteration, double decision)> on_decision; // optional eye-pattern tap
};

struct PacketResult {
    std::vector<TrajectoryPoint> trajectory;
    BlindTrackerState state;
};

/// Cycle blind_step over the packet `passes` times. Probes run before the update
/// of every scheduled iteration (iteration = number of updates applied so far).
inline PacketResult run_packet(BlindTrackerState state, const CMatrix& packet, const PacketRunOptions& options)
{
    require(packet.cols() > 0, "run_packet: packet is empty");
    require(options.passes >= 1, "run_packet: passes must be >= 1");
    require(packet.rows() == state.w.size(), "run_packet: frame length must equal weight length");
    state.validate();

    PacketResult result;
    const auto length = static_cast<std::size_t>(packet.cols());
    const std::size_t total = length * options.passes;
    CVector x(packet.rows());
    for (std::size_t n = 0; n < total; ++n) {
        if (options.probe && options.schedule.at(n))
            result.trajectory.push_back({state.iteration, options.probe(state.w)});
        x = packet.col(static_cast<Eigen::Index>(n % length));
        const std::size_t iteration = state.iteration;
        const double y = blind_step(state, x, options.normalized);
        if (options.on_decision)
            options.on_decision(iteration, y);
    }
    if (options.probe && options.schedule.include_final)
        result.trajectory.push_back({state.iteration, options.probe(state.w)});
    result.state = std::move(state);
    return result;
}

} // namespace cmtmimo::blind
