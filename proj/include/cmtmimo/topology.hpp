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

#include <vector>

namespace cmtmimo {

/// Multi-cell layout: M cells with K single-antenna users each, and the scalar
/// cross-gain alpha(m, j, l) between user l of cell m and the array of BS j.
/// In-cell gains are exactly 1 (perfect power control).
class CellTopology {
public:
    CellTopology() = default;

    /// Explicit gains, indexed gains[m][j][l]. Diagonal entries must be 1.
    CellTopology(int num_cells, int users_per_cell, std::vector<double> gains)
        : num_cells_(num_cells), users_per_cell_(users_per_cell), gains_(std::move(gains))
    {
        require(num_cells_ >= 1, "topology: num_cells must be >= 1");
        require(users_per_cell_ >= 1, "topology: users_per_cell must be >= 1");
        require(gains_.size() == static_cast<std::size_t>(num_cells_) * num_cells_ * users_per_cell_,
                "topology: gain table must have M*M*K entries");
        for (int m = 0; m < num_cells_; ++m)
            for (int j = 0; j < num_cells_; ++j)
                for (int l = 0; l < users_per_cell_; ++l) {
                    const double a = gain(m, j, l);
                    require(a >= 0.0 && a <= 1.0, "topology: cross-gain outside [0,1]");
                    require(m != j || a == 1.0, "topology: in-cell gain must be exactly 1");
                }
    }

    int num_cells() const { return num_cells_; }
    int users_per_cell() const { return users_per_cell_; }

    double gain(int source_cell, int bs, int user) const
    {
        return gains_[index(source_cell, bs, user)];
    }

    /// Diagonal of A_mj as a vector of length K.
    RVector gain_vector(int source_cell, int bs) const
    {
        RVector a(users_per_cell_);
        for (int l = 0; l < users_per_cell_; ++l)
            a(l) = gain(source_cell, bs, l);
        return a;
    }

    const std::vector<double>& gains() const { return gains_; }

    bool operator==(const CellTopology&) const = default;

private:
    std::size_t index(int m, int j, int l) const
    {
        require(m >= 0 && m < num_cells_ && j >= 0 && j < num_cells_ && l >= 0 && l < users_per_cell_,
                "topology: index out of range");
        return (static_cast<std::size_t>(m) * num_cells_ + j) * users_per_cell_ + l;
    }

    int num_cells_ = 1;
    int users_per_cell_ = 1;
    std::vector<double> gains_{1.0};
};

/// Cross-cell gains i.i.d. uniform on [gain_low, gain_high]; in-cell gains 1.
inline CellTopology build_topology(int num_cells, int users_per_cell, double gain_low, double gain_high, Rng& rng)
{
    require(num_cells >= 1, "topology: num_cells must be >= 1");
    require(users_per_cell >= 1, "topology: users_per_cell must be >= 1");
    require(gain_low >= 0.0 && gain_high <= 1.0 && gain_low <= gain_high,
            "topology: gain range must satisfy 0 <= low <= high <= 1");

    std::uniform_real_distribution<double> uniform(gain_low, gain_high);
    std::vector<double> gains(static_cast<std::size_t>(num_cells) * num_cells * users_per_cell);
    std::size_t i = 0;
    for (int m = 0; m < num_cells; ++m)
        for (int j = 0; j < num_cells; ++j)
            for (int l = 0; l < users_per_cell; ++l, ++i) {
                // uniform_real_distribution is half-open; a degenerate range returns low.
                gains[i] = (m == j) ? 1.0 : (gain_low == gain_high ? gain_low : uniform(rng));
            }
    return CellTopology(num_cells, users_per_cell, std::move(gains));
}

} // namespace cmtmimo
