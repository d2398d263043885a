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

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace cmtmimo::harness {

/// Locale-independent number text with 12 significant digits; infinities print as inf / -inf.
inline std::string format_number(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 12);
    return std::string(buf, res.ptr);
}

inline std::string format_number(long long v) { return std::to_string(v); }
inline std::string format_number(std::size_t v) { return std::to_string(v); }
inline std::string format_number(int v) { return std::to_string(v); }

/// In-memory CSV table with a fixed header.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    template <typename... Ts>
    void row(const Ts&... values)
    {
        static_assert(sizeof...(Ts) > 0);
        if (sizeof...(Ts) != header_.size())
            throw ParameterError("csv: row width does not match header");
        bool first = true;
        ((body_ += (first ? "" : ","), body_ += format_number(values), first = false), ...);
        body_ += '\n';
        ++rows_;
    }

    std::string str() const
    {
        std::string out;
        for (std::size_t i = 0; i < header_.size(); ++i) {
            out += header_[i];
            out += (i + 1 < header_.size()) ? ',' : '\n';
        }
        return out + body_;
    }

    void append(const CsvTable& other)
    {
        if (other.header_ != header_)
            throw ParameterError("csv: cannot append tables with different headers");
        body_ += other.body_;
        rows_ += other.rows_;
    }

    void write(const std::filesystem::path& path) const
    {
        if (path.has_parent_path())
            std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw std::runtime_error("csv: cannot write " + path.string());
        out << str();
        if (!out)
            throw std::runtime_error("csv: write failed for " + path.string());
    }

    const std::vector<std::string>& header() const { return header_; }
    std::size_t rows() const { return rows_; }

private:
    std::vector<std::string> header_;
    std::string body_;
    std::size_t rows_ = 0;
};

} // namespace cmtmimo::harness
