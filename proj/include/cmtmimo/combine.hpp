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

#include "cmtmimo/airlink.hpp"
#include "cmtmimo/core.hpp"
#include "cmtmimo/topology.hpp"

#include <sstream>
#include <vector>

namespace cmtmimo {

enum class CombinerKind { mf, mmse, blind };

struct CombinerWeights {
    CVector w;
    CombinerKind kind = CombinerKind::mf;
};

/// w = h / (h^H h), so that w^H h = 1.
inline CombinerWeights mf_weights(const CVector& h)
{
    const double energy = h.squaredNorm();
    if (!(energy > 0.0))
        throw DegenerateInputError("mf_weights: channel vector has zero norm");
    if (!std::isfinite(energy))
        throw NumericalError("mf_weights: channel vector is not finite");
    return {h / energy, CombinerKind::mf};
}

/// d_l = ||h_jjl||^2.
struct GainNormalizer {
    RVector d;

    static GainNormalizer from(const CMatrix& H)
    {
        GainNormalizer g{H.colwise().squaredNorm().transpose()};
        for (Eigen::Index l = 0; l < g.d.size(); ++l)
            if (!(g.d(l) > 0.0))
                throw DegenerateInputError("mf_detect: zero-norm channel column");
        return g;
    }
};

/// s_hat = Re{D^-1 H^H x}.
inline RVector mf_detect(const CVector& x, const CMatrix& H, const GainNormalizer& normalizer)
{
    require(x.size() == H.rows(), "mf_detect: received vector length must equal antenna count");
    require(normalizer.d.size() == H.cols(), "mf_detect: normalizer must have K entries");
    const CVector z = H.adjoint() * x;
    return (z.real().array() / normalizer.d.array()).matrix();
}

inline RVector mf_detect(const CVector& x, const CMatrix& H) { return mf_detect(x, H, GainNormalizer::from(H)); }

/// R_x = E|t|^2 sum_m H_mj A_mj^2 H_mj^H + sigma_v^2 I.
inline CMatrix received_covariance(const CellTopology& topology, const std::vector<CMatrix>& H, int bs,
                                   double sigma_v_sq, double symbol_second_moment)
{
    require(static_cast<int>(H.size()) == topology.num_cells(), "mmse: need one channel matrix per cell");
    const auto N = H.front().rows();
    CMatrix R = sigma_v_sq * CMatrix::Identity(N, N);
    for (int m = 0; m < topology.num_cells(); ++m) {
        const CMatrix G = H[m] * topology.gain_vector(m, bs).cast<Complex>().asDiagonal();
        R.noalias() += symbol_second_moment * G * G.adjoint();
    }
    return R;
}

/// Covariance-inverse combiner per in-cell user, scaled so that Re{w^H h_jjl} = 1.
inline std::vector<CombinerWeights> mmse_weights(const CellTopology& topology, const std::vector<CMatrix>& H, int bs,
                                                 double sigma_v_sq, double symbol_second_moment)
{
    require(sigma_v_sq >= 0.0 && symbol_second_moment > 0.0, "mmse: invalid noise or symbol power");
    require(bs >= 0 && bs < topology.num_cells(), "mmse: BS index out of range");
    const CMatrix R = received_covariance(topology, H, bs, sigma_v_sq, symbol_second_moment);
    Eigen::LDLT<CMatrix> ldlt(R);
    const RVector pivots = ldlt.vectorD().cwiseAbs();
    const double ratio = pivots.minCoeff() / pivots.maxCoeff();
    if (ldlt.info() != Eigen::Success || !(ratio > 1e-13)) {
        std::ostringstream msg;
        msg << "mmse: received covariance is singular (pivot ratio " << ratio << ", sigma_v^2 = " << sigma_v_sq
            << ")";
        throw NumericalError(msg.str());
    }
    std::vector<CombinerWeights> out;
    for (int l = 0; l < topology.users_per_cell(); ++l) {
        const CVector h = H[bs].col(l);
        CVector w = ldlt.solve(h);
        const double gain = w.dot(h).real(); // dot() conjugates the left operand
        if (!(gain > 0.0))
            throw NumericalError("mmse: combiner has no gain on the desired user");
        out.push_back({w / gain, CombinerKind::mmse});
    }
    return out;
}

struct SinrReport {
    double sinr_db = 0.0;
    double signal_gain = 0.0;
    double residual_power = 0.0;
    std::size_t num_symbols = 0;
};

/// Least-squares split of y into g*s + residual; sinr = g^2 E[s^2] / residual.
/// Zero residual reports +inf, zero gain -inf.
inline SinrReport sinr_from_outputs(const RVector& y, const RVector& s)
{
    require(y.size() == s.size() && y.size() > 0, "measure_sinr: outputs and symbols differ in length");
    const double ss = s.squaredNorm();
    require(ss > 0.0, "measure_sinr: transmitted symbols are all zero");
    SinrReport r;
    r.num_symbols = static_cast<std::size_t>(y.size());
    r.signal_gain = y.dot(s) / ss;
    r.residual_power = (y - r.signal_gain * s).squaredNorm() / static_cast<double>(y.size());
    const double signal = r.signal_gain * r.signal_gain * ss / static_cast<double>(y.size());
    if (signal == 0.0)
        r.sinr_db = -kInf;
    else if (r.residual_power == 0.0)
        r.sinr_db = kInf;
    else
        r.sinr_db = db(signal / r.residual_power);
    return r;
}

/// Empirical SINR of combiner w on pre-generated frames, for the user in row `user_row` of the truth.
inline SinrReport measure_sinr(const CVector& w, const FrameBlock& frames, Eigen::Index user_row)
{
    require(w.size() == frames.x.rows(), "measure_sinr: weight length must equal antenna count");
    require(user_row >= 0 && user_row < frames.s.rows(), "measure_sinr: user row out of range");
    const RVector y = (w.adjoint() * frames.x).real().transpose();
    return sinr_from_outputs(y, frames.s.row(user_row).transpose());
}

/// Empirical SINR over `num_symbols` freshly generated frames.
inline SinrReport measure_sinr(const CVector& w, UplinkFrameSource& source, int user, std::size_t num_symbols, Rng& rng)
{
    require(num_symbols >= 1000, "measure_sinr: need at least 1000 symbols");
    const FrameBlock frames = source.generate(static_cast<Eigen::Index>(num_symbols), rng);
    return measure_sinr(w, frames, source.own_row(user));
}

/// Closed-form SINR of Re{w^H x} for user `user` of cell `bs` under the same model,
/// with s of second moment `pam_power` and q ~ N(0, sigma_q_sq).
inline double analytic_sinr_db(const CVector& w, const CellTopology& topology, const std::vector<CMatrix>& H, int bs,
                               int user, double sigma_v_sq, double sigma_q_sq, double pam_power)
{
    double signal = 0.0, disturbance = 0.5 * sigma_v_sq * w.squaredNorm();
    for (int m = 0; m < topology.num_cells(); ++m)
        for (int l = 0; l < topology.users_per_cell(); ++l) {
            const Complex c = topology.gain(m, bs, l) * w.dot(H[m].col(l));
            if (m == bs && l == user) {
                signal = c.real() * c.real() * pam_power;
                disturbance += c.imag() * c.imag() * sigma_q_sq;
            } else {
                disturbance += c.real() * c.real() * pam_power + c.imag() * c.imag() * sigma_q_sq;
            }
        }
    if (signal == 0.0)
        return -kInf;
    if (disturbance == 0.0)
        return kInf;
    return db(signal / disturbance);
}

} // namespace cmtmimo
