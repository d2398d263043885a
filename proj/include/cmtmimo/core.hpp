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

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace cmtmimo {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Invalid argument, dimension or configuration value.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An input that makes the requested quantity undefined (e.g. a zero channel vector).
class DegenerateInputError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Non-finite data or an ill-conditioned linear system.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message)
{
    if (!condition)
        throw ParameterError(message);
}

// ---------- random streams ----------

using Rng = std::mt19937_64;

/// Derive an independent generator from a master seed and a path of stream ids,
/// e.g. derive_stream(seed, {trial, kChannelStream}). Same inputs give the same stream.
inline Rng derive_stream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> path = {})
{
    // splitmix64 finalizer over the path; the mixed words seed the Mersenne twister.
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(master_seed);
    for (auto id : path)
        h = mix(h ^ mix(id + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                      static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(path.size())};
    return Rng(seq);
}

/// Circularly-symmetric complex Gaussian with total variance `variance`.
inline Complex complex_gaussian(Rng& rng, double variance)
{
    std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

inline CVector complex_gaussian_vector(Rng& rng, Eigen::Index size, double variance)
{
    CVector v(size);
    for (Eigen::Index i = 0; i < size; ++i)
        v(i) = complex_gaussian(rng, variance);
    return v;
}

inline bool all_finite(const CVector& v)
{
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!std::isfinite(v(i).real()) || !std::isfinite(v(i).imag()))
            return false;
    return true;
}

inline double db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double decibels) { return std::pow(10.0, decibels / 10.0); }

} // namespace cmtmimo
