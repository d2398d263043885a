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

#pragma once

#include "cmtmimo/core.hpp"
#include "cmtmimo/topology.hpp"

#include <numeric>
#include <span>
#include <vector>

namespace cmtmimo {

/// Multipath power-delay profile. Powers are linear and sum to one, so the
/// average channel energy per antenna is 1.
class PowerDelayProfile {
public:
    PowerDelayProfile(std::vector<double> delays_s, std::vector<double> powers)
        : delays_(std::move(delays_s)), powers_(std::move(powers))
    {
        require(!delays_.empty(), "pdp: profile is empty");
        require(delays_.size() == powers_.size(), "pdp: delays and powers differ in length");
        for (std::size_t t = 0; t < delays_.size(); ++t) {
            require(std::isfinite(delays_[t]) && delays_[t] >= 0.0, "pdp: delays must be nonnegative");
            require(t == 0 || delays_[t] > delays_[t - 1], "pdp: delays must be strictly increasing");
            require(std::isfinite(powers_[t]) && powers_[t] >= 0.0, "pdp: powers must be nonnegative");
        }
        const double total = std::accumulate(powers_.begin(), powers_.end(), 0.0);
        require(std::abs(total - 1.0) <= 1e-12, "pdp: powers must sum to 1");
    }

    /// Delays in microseconds and relative powers in dB; powers are normalized to unit sum.
    static PowerDelayProfile from_db(const std::vector<double>& delays_us, const std::vector<double>& powers_db)
    {
        require(!delays_us.empty(), "pdp: profile is empty");
        require(delays_us.size() == powers_db.size(), "pdp: delays and powers differ in length");
        std::vector<double> delays(delays_us.size()), powers(powers_db.size());
        double total = 0.0;
        for (std::size_t t = 0; t < delays_us.size(); ++t) {
            delays[t] = delays_us[t] * 1e-6;
            powers[t] = cmtmimo::from_db(powers_db[t]);
            total += powers[t];
        }
        for (auto& p : powers)
            p /= total;
        // Renormalize against the rounding of the first division.
        const double again = std::accumulate(powers.begin(), powers.end(), 0.0);
        for (auto& p : powers)
            p /= again;
        return {std::move(delays), std::move(powers)};
    }

    /// COST 207 typical urban, reduced 6-tap variant.
    static PowerDelayProfile cost207_typical_urban()
    {
        return from_db({0.0, 0.2, 0.5, 1.6, 2.3, 5.0}, {-3.0, 0.0, -2.0, -6.0, -8.0, -10.0});
    }

    static PowerDelayProfile flat() { return {{0.0}, {1.0}}; }

    std::size_t num_taps() const { return delays_.size(); }
    const std::vector<double>& delays() const { return delays_; }
    const std::vector<double>& powers() const { return powers_; }

private:
    std::vector<double> delays_;
    std::vector<double> powers_;
};

/// Subcarrier grid: L subcarriers spanning the total bandwidth, f_k = k * bandwidth / L.
struct SubcarrierGrid {
    double bandwidth_hz = 5e6;
    int num_subcarriers = 256;

    double spacing_hz() const { return bandwidth_hz / num_subcarriers; }
    double frequency(int k) const { return k * spacing_hz(); }
};

/// H(f_k) = sum_t g_t exp(-i 2 pi f_k tau_t).
inline Complex freq_response(std::span<const Complex> taps, std::span<const double> delays_s, int subcarrier,
                             int num_subcarriers, double bandwidth_hz)
{
    require(num_subcarriers >= 1, "freq_response: num_subcarriers must be >= 1");
    require(subcarrier >= 0 && subcarrier < num_subcarriers, "freq_response: subcarrier index out of range");
    require(bandwidth_hz > 0.0, "freq_response: bandwidth must be positive");
    require(taps.size() == delays_s.size(), "freq_response: taps and delays differ in length");
    const double f = subcarrier * (bandwidth_hz / num_subcarriers);
    Complex h{0.0, 0.0};
    for (std::size_t t = 0; t < taps.size(); ++t)
        h += taps[t] * std::polar(1.0, -2.0 * kPi * f * delays_s[t]);
    return h;
}

/// Quasi-static multipath taps for every (source cell m, BS j, user l, antenna a) link.
class ChannelRealization {
public:
    ChannelRealization(int num_cells, int users_per_cell, int num_antennas, PowerDelayProfile pdp,
                       SubcarrierGrid grid, std::vector<Complex> taps)
        : num_cells_(num_cells), users_per_cell_(users_per_cell), num_antennas_(num_antennas),
          pdp_(std::move(pdp)), grid_(grid), taps_(std::move(taps))
    {
        require(taps_.size() == static_cast<std::size_t>(num_cells_) * num_cells_ * users_per_cell_ *
                                    num_antennas_ * pdp_.num_taps(),
                "channel: tap table has the wrong size");
    }

    int num_cells() const { return num_cells_; }
    int users_per_cell() const { return users_per_cell_; }
    int num_antennas() const { return num_antennas_; }
    const PowerDelayProfile& pdp() const { return pdp_; }
    const SubcarrierGrid& grid() const { return grid_; }

    std::span<const Complex> link_taps(int m, int j, int l, int antenna) const
    {
        return {taps_.data() + offset(m, j, l, antenna), pdp_.num_taps()};
    }

    bool operator==(const ChannelRealization& other) const
    {
        return num_cells_ == other.num_cells_ && users_per_cell_ == other.users_per_cell_ &&
               num_antennas_ == other.num_antennas_ && taps_ == other.taps_;
    }

private:
    std::size_t offset(int m, int j, int l, int a) const
    {
        require(m >= 0 && m < num_cells_ && j >= 0 && j < num_cells_ && l >= 0 && l < users_per_cell_ && a >= 0 &&
                    a < num_antennas_,
                "channel: link index out of range");
        return (((static_cast<std::size_t>(m) * num_cells_ + j) * users_per_cell_ + l) * num_antennas_ + a) *
               pdp_.num_taps();
    }

    int num_cells_;
    int users_per_cell_;
    int num_antennas_;
    PowerDelayProfile pdp_;
    SubcarrierGrid grid_;
    std::vector<Complex> taps_;
};

/// Tap t of every link ~ CN(0, powers[t]), independent across all indices.
inline ChannelRealization draw_channels(const CellTopology& topology, const PowerDelayProfile& pdp, int num_antennas,
                                        const SubcarrierGrid& grid, Rng& rng)
{
    require(num_antennas >= 1, "channel: num_antennas must be >= 1");
    require(grid.num_subcarriers >= 1 && grid.bandwidth_hz > 0.0, "channel: invalid subcarrier grid");
    const int M = topology.num_cells();
    const int K = topology.users_per_cell();
    const std::size_t T = pdp.num_taps();
    std::vector<Complex> taps(static_cast<std::size_t>(M) * M * K * num_antennas * T);
    std::size_t i = 0;
    for (int link = 0; link < M * M * K * num_antennas; ++link)
        for (std::size_t t = 0; t < T; ++t)
            taps[i++] = complex_gaussian(rng, pdp.powers()[t]);
    return {M, K, num_antennas, pdp, grid, std::move(taps)};
}

/// h_{mjl} at subcarrier k: one entry per BS antenna.
inline CVector channel_vector(const ChannelRealization& channels, int m, int j, int l, int subcarrier)
{
    const auto& grid = channels.grid();
    CVector h(channels.num_antennas());
    for (int a = 0; a < channels.num_antennas(); ++a)
        h(a) = freq_response(channels.link_taps(m, j, l, a), channels.pdp().delays(), subcarrier,
                             grid.num_subcarriers, grid.bandwidth_hz);
    return h;
}

/// H_mj at subcarrier k (N x K), column l = h_{mjl}.
inline CMatrix channel_matrix(const ChannelRealization& channels, int m, int j, int subcarrier)
{
    CMatrix H(channels.num_antennas(), channels.users_per_cell());
    for (int l = 0; l < channels.users_per_cell(); ++l)
        H.col(l) = channel_vector(channels, m, j, l, subcarrier);
    return H;
}

/// All matrices seen by BS j at subcarrier k, indexed by source cell.
inline std::vector<CMatrix> channels_at_bs(const ChannelRealization& channels, int bs, int subcarrier)
{
    std::vector<CMatrix> out;
    out.reserve(channels.num_cells());
    for (int m = 0; m < channels.num_cells(); ++m)
        out.push_back(channel_matrix(channels, m, bs, subcarrier));
    return out;
}

} // namespace cmtmimo
