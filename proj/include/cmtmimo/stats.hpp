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

#include <algorithm>
#include <ranges>
#include <vector>

namespace cmtmimo::stats {

/// Central sample moments up to order four (population normalization).
struct Moments {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0; // 3 for a Gaussian

    double excess_kurtosis() const { return kurtosis - 3.0; }

    /// Jarque-Bera statistic; chi-square with 2 dof under normality (1% critical value 9.21).
    double jarque_bera() const
    {
        const double ek = excess_kurtosis();
        return static_cast<double>(count) / 6.0 * (skewness * skewness + ek * ek / 4.0);
    }
};

inline constexpr double kJarqueBeraCritical1Percent = 9.210340371976184;

template <std::ranges::input_range R>
Moments moments(const R& samples)
{
    Moments m;
    double sum = 0.0;
    for (double x : samples) {
        sum += x;
        ++m.count;
    }
    require(m.count > 0, "moments: no samples");
    m.mean = sum / static_cast<double>(m.count);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : samples) {
        const double d = x - m.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    const double n = static_cast<double>(m.count);
    m2 /= n;
    m3 /= n;
    m4 /= n;
    m.variance = m2;
    if (m2 > 0.0) {
        m.skewness = m3 / std::pow(m2, 1.5);
        m.kurtosis = m4 / (m2 * m2);
    }
    return m;
}

template <std::ranges::input_range R>
double median(const R& values)
{
    std::vector<double> v(std::ranges::begin(values), std::ranges::end(values));
    require(!v.empty(), "median: no values");
    std::ranges::sort(v);
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace cmtmimo::stats
