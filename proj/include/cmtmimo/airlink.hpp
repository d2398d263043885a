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

// Per-subcarrier uplink model seen by one base station j:
//
//     x_j = H_jj t_j + sum_{m != j} H_mj A_mj t_m + v,   t = s + i q,
//
// and the pilot-contaminated channel estimate obtained when every cell reuses
// the same pilot book.

#pragma once

#include "cmtmimo/core.hpp"
#include "cmtmimo/topology.hpp"

#include <vector>

namespace cmtmimo {

struct TransmitSymbol {
    double s = 0.0; // real PAM symbol
    double q = 0.0; // intrinsic (ISI + ICI) interference

    Complex t() const { return {s, q}; }
};

inline TransmitSymbol make_transmit_symbol(double s, double sigma_q, Rng& rng)
{
    require(sigma_q >= 0.0, "airlink: sigma_q must be nonnegative");
    if (sigma_q == 0.0)
        return {s, 0.0};
    std::normal_distribution<double> n(0.0, sigma_q);
    return {s, n(rng)};
}

struct ReceivedFrame {
    CVector x;
    double noise_var = 0.0; // total variance per complex entry
};

namespace detail {

    inline void check_scenario(const CellTopology& topology, const std::vector<CMatrix>& H, int bs)
    {
        require(static_cast<int>(H.size()) == topology.num_cells(), "airlink: need one channel matrix per cell");
        require(bs >= 0 && bs < topology.num_cells(), "airlink: BS index out of range");
        for (const auto& Hm : H) {
            require(Hm.cols() == topology.users_per_cell(), "airlink: channel matrix must have K columns");
            require(Hm.rows() == H.front().rows() && Hm.rows() >= 1, "airlink: channel matrices differ in rows");
        }
    }

} // namespace detail

/// One symbol time at BS `bs`. `H[m]` is H_mj (N x K) at the subcarrier, `symbols[m]` is t_m (length K).
inline ReceivedFrame receive_frame(const CellTopology& topology, const std::vector<CMatrix>& H, int bs,
                                   const std::vector<CVector>& symbols, double noise_var, Rng& rng)
{
    detail::check_scenario(topology, H, bs);
    require(symbols.size() == H.size(), "airlink: need one symbol vector per cell");
    require(noise_var >= 0.0, "airlink: noise variance must be nonnegative");
    const auto N = H.front().rows();
    CVector x = CVector::Zero(N);
    for (int m = 0; m < topology.num_cells(); ++m) {
        require(symbols[m].size() == topology.users_per_cell(), "airlink: symbol vector must have K entries");
        x.noalias() += H[m] * (topology.gain_vector(m, bs).cast<Complex>().asDiagonal() * symbols[m]);
    }
    if (noise_var > 0.0)
        x += complex_gaussian_vector(rng, N, noise_var);
    return {std::move(x), noise_var};
}

/// K orthogonal length-tau pilot sequences (rows), shared by every cell.
class PilotBook {
public:
    explicit PilotBook(CMatrix sequences) : sequences_(std::move(sequences))
    {
        require(sequences_.rows() >= 1 && sequences_.cols() >= sequences_.rows(),
                "pilots: need 1 <= K <= tau sequences");
        const double tau = static_cast<double>(sequences_.cols());
        const CMatrix gram = sequences_ * sequences_.adjoint();
        const CMatrix expected = tau * CMatrix::Identity(sequences_.rows(), sequences_.rows());
        require((gram - expected).cwiseAbs().maxCoeff() <= 1e-12 * tau, "pilots: sequences are not orthogonal");
    }

    /// Rows of the tau-point DFT: p_a(n) = exp(-i 2 pi a n / tau).
    static PilotBook dft(int num_sequences, int pilot_len)
    {
        require(pilot_len >= num_sequences, "pilots: pilot length must be >= number of users");
        require(num_sequences >= 1, "pilots: need at least one sequence");
        CMatrix P(num_sequences, pilot_len);
        for (int a = 0; a < num_sequences; ++a)
            for (int n = 0; n < pilot_len; ++n)
                P(a, n) = std::polar(1.0, -2.0 * kPi * static_cast<double>((static_cast<long long>(a) * n) % pilot_len) /
                                              pilot_len);
        return PilotBook(std::move(P));
    }

    int num_sequences() const { return static_cast<int>(sequences_.rows()); }
    int pilot_len() const { return static_cast<int>(sequences_.cols()); }
    const CMatrix& sequences() const { return sequences_; }

private:
    CMatrix sequences_;
};

enum class EstimateMode { direct, correlate };

struct ChannelEstimate {
    CMatrix H_hat;
    EstimateMode mode = EstimateMode::direct;
    double est_noise_var = 0.0;
};

/// Sum_m H_mj A_mj (with A_jj = I): the noiseless contaminated estimate.
inline CMatrix contaminated_sum(const CellTopology& topology, const std::vector<CMatrix>& H, int bs)
{
    detail::check_scenario(topology, H, bs);
    CMatrix sum = CMatrix::Zero(H.front().rows(), H.front().cols());
    for (int m = 0; m < topology.num_cells(); ++m)
        sum.noalias() += H[m] * topology.gain_vector(m, bs).cast<Complex>().asDiagonal();
    return sum;
}

/// H_hat = H_jj + sum_{m != j} H_mj A_mj + V, V entries ~ CN(0, noise_var / tau).
inline ChannelEstimate estimate_channels_direct(const CellTopology& topology, const std::vector<CMatrix>& H, int bs,
                                                double noise_var, int pilot_len, Rng& rng)
{
    require(pilot_len >= topology.users_per_cell(), "airlink: pilot length must be >= users per cell");
    require(noise_var >= 0.0, "airlink: noise variance must be nonnegative");
    ChannelEstimate est;
    est.H_hat = contaminated_sum(topology, H, bs);
    est.mode = EstimateMode::direct;
    est.est_noise_var = noise_var / pilot_len;
    if (est.est_noise_var > 0.0)
        for (Eigen::Index c = 0; c < est.H_hat.cols(); ++c)
            est.H_hat.col(c) += complex_gaussian_vector(rng, est.H_hat.rows(), est.est_noise_var);
    return est;
}

/// Received training block at BS `bs` (N x tau): user l of every cell sends pilot row l synchronously.
inline CMatrix transmit_pilots(const PilotBook& pilots, const CellTopology& topology, const std::vector<CMatrix>& H,
                               int bs, double noise_var, Rng& rng)
{
    require(pilots.num_sequences() == topology.users_per_cell(), "airlink: pilot book must hold K sequences");
    require(noise_var >= 0.0, "airlink: noise variance must be nonnegative");
    CMatrix X = contaminated_sum(topology, H, bs) * pilots.sequences();
    if (noise_var > 0.0)
        for (Eigen::Index n = 0; n < X.cols(); ++n)
            X.col(n) += complex_gaussian_vector(rng, X.rows(), noise_var);
    return X;
}

/// Column l = (1/tau) sum_n x(n) conj(pilot_l(n)).
inline ChannelEstimate estimate_channels_correlate(const PilotBook& pilots, const CMatrix& received_pilots,
                                                   double noise_var = 0.0)
{
    require(received_pilots.cols() == pilots.pilot_len(), "airlink: training block length must equal tau");
    ChannelEstimate est;
    const double tau = pilots.pilot_len();
    est.H_hat = received_pilots * pilots.sequences().adjoint() / tau;
    est.mode = EstimateMode::correlate;
    est.est_noise_var = noise_var / tau;
    return est;
}

/// Data frames of one packet: x (N x n) plus the hidden truth of every user of every cell.
struct FrameBlock {
    CMatrix x;          // received vectors, one column per symbol time
    RMatrix s;          // PAM symbols, row m*K + l
    RMatrix q;          // intrinsic interference, row m*K + l

    Eigen::Index size() const { return x.cols(); }
};

/// Generates i.i.d. data frames for a fixed BS, subcarrier and channel set.
class UplinkFrameSource {
public:
    UplinkFrameSource(CellTopology topology, std::vector<CMatrix> H, int bs, double noise_var, double sigma_q_sq,
                      std::vector<double> pam_levels, std::vector<double> pam_probabilities)
        : topology_(std::move(topology)), H_(std::move(H)), bs_(bs), noise_var_(noise_var),
          sigma_q_(std::sqrt(sigma_q_sq)), levels_(std::move(pam_levels)),
          pick_(pam_probabilities.begin(), pam_probabilities.end())
    {
        detail::check_scenario(topology_, H_, bs_);
        require(noise_var_ >= 0.0, "airlink: noise variance must be nonnegative");
        require(sigma_q_sq >= 0.0, "airlink: sigma_q^2 must be nonnegative");
        require(!levels_.empty() && levels_.size() == pam_probabilities.size(), "airlink: invalid PAM alphabet");
        mixing_ = CMatrix(H_.front().rows(), topology_.num_cells() * topology_.users_per_cell());
        for (int m = 0; m < topology_.num_cells(); ++m)
            for (int l = 0; l < topology_.users_per_cell(); ++l)
                mixing_.col(m * topology_.users_per_cell() + l) = topology_.gain(m, bs_, l) * H_[m].col(l);
    }

    FrameBlock generate(Eigen::Index count, Rng& rng)
    {
        const auto users = mixing_.cols();
        FrameBlock block{CMatrix(mixing_.rows(), count), RMatrix(users, count), RMatrix(users, count)};
        std::normal_distribution<double> gauss(0.0, 1.0);
        CMatrix t(users, count);
        for (Eigen::Index n = 0; n < count; ++n)
            for (Eigen::Index u = 0; u < users; ++u) {
                const double s = levels_[pick_(rng)];
                const double q = sigma_q_ > 0.0 ? sigma_q_ * gauss(rng) : 0.0;
                block.s(u, n) = s;
                block.q(u, n) = q;
                t(u, n) = Complex(s, q);
            }
        block.x.noalias() = mixing_ * t;
        if (noise_var_ > 0.0)
            for (Eigen::Index n = 0; n < count; ++n)
                block.x.col(n) += complex_gaussian_vector(rng, mixing_.rows(), noise_var_);
        return block;
    }

    const CellTopology& topology() const { return topology_; }
    const std::vector<CMatrix>& channels() const { return H_; }
    int bs() const { return bs_; }
    double noise_var() const { return noise_var_; }
    double sigma_q_sq() const { return sigma_q_ * sigma_q_; }
    /// Row of FrameBlock::s holding user l of the serving cell.
    Eigen::Index own_row(int user) const { return static_cast<Eigen::Index>(bs_) * topology_.users_per_cell() + user; }

private:
    CellTopology topology_;
    std::vector<CMatrix> H_;
    int bs_;
    double noise_var_;
    double sigma_q_;
    std::vector<double> levels_;
    std::discrete_distribution<std::size_t> pick_;
    CMatrix mixing_; // columns alpha_{mjl} h_{mjl}
};

} // namespace cmtmimo
