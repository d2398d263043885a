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

// Experiment configuration. The file format is JSON; an empty file (or "{}")
// yields the default seven-cell scenario. Every key is optional, unknown keys
// are rejected with their full path.

#pragma once

#include "cmtmimo/blind.hpp"
#include "cmtmimo/channel.hpp"
#include "cmtmimo/cmt.hpp"
#include "cmtmimo/core.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace cmtmimo::harness {

class ConfigError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

enum class SigmaQMode { fixed, calibrated };

struct ExperimentConfig {
    struct Topology {
        int num_cells = 7;
        int users_per_cell = 1;
        double gain_low = 0.0;
        double gain_high = 1.0;
        std::optional<std::vector<double>> gains; // explicit [m][j][l], flattened
        int serving_cell = 0;
    } topology;

    struct Channel {
        double bandwidth_hz = 5e6;
        int num_subcarriers = 256;
        int num_antennas = 128;
        int subcarrier = 0;
        bool sweep_all_subcarriers = false;
        std::vector<double> pdp_delays_us{0.0, 0.2, 0.5, 1.6, 2.3, 5.0};
        std::vector<double> pdp_powers_db{-3.0, 0.0, -2.0, -6.0, -8.0, -10.0};

        PowerDelayProfile pdp() const { return PowerDelayProfile::from_db(pdp_delays_us, pdp_powers_db); }
        SubcarrierGrid grid() const { return {bandwidth_hz, num_subcarriers}; }
    } channel;

    struct Signaling {
        std::vector<double> pam_levels{-1.0, 1.0};
        std::vector<double> pam_probabilities{0.5, 0.5};
        SigmaQMode sigma_q_mode = SigmaQMode::calibrated;
        double sigma_q_sq = 1.0; // used in fixed mode

        blind::PamAlphabet alphabet() const { return blind::PamAlphabet{pam_levels, pam_probabilities}.validated(); }
    } signaling;

    struct Noise {
        double target_sinr_db = 32.0; // +inf means noiseless
        std::optional<double> sigma_v_sq; // explicit value bypasses calibration
    } noise;

    struct Pilots {
        int length = 16;
        bool correlate = false; // false: direct contaminated-estimate model
    } pilots;

    struct Blind {
        double mu = 0.05;
        std::optional<double> epsilon; // default 1e-12 * N
        int p = 1;
        bool normalized = true;
        int packet_length = 1000;
        int passes = 100;
        int probe_every = 10;
        int probe_dense_until = 1000;
        int probe_every_sparse = 1000;
        int eval_symbols = 2000;
    } blind;

    struct Eye {
        int passes = 5;
        int buckets = 10;
    } eye;

    struct Cmt {
        int overlap_factor = 12;
        double rolloff = 0.35;
        bool phase_toggle = true;
        int min_samples = 100000;
    } cmt;

    struct Run {
        std::uint64_t master_seed = 1;
        int num_trials = 20;
        int threads = 1;
        std::string out_dir = "out";
    } run;

    cmt::CmtConfig cmt_config() const
    {
        cmt::CmtConfig c;
        c.num_subcarriers = channel.num_subcarriers;
        c.subcarrier_spacing_hz = channel.bandwidth_hz / channel.num_subcarriers;
        c.overlap_factor = cmt.overlap_factor;
        c.rolloff = cmt.rolloff;
        c.phase_toggle = cmt.phase_toggle;
        return c;
    }

    double epsilon() const { return blind.epsilon.value_or(1e-12 * channel.num_antennas); }

    /// Throws ConfigError naming the offending key.
    void validate() const
    {
        auto check = [](bool ok, const std::string& key, const std::string& what) {
            if (!ok)
                throw ConfigError("config: " + key + " " + what);
        };
        check(topology.num_cells >= 1, "topology.num_cells", "must be >= 1");
        check(topology.users_per_cell >= 1, "topology.users_per_cell", "must be >= 1");
        check(topology.gain_low >= 0.0 && topology.gain_low <= 1.0, "topology.gain_low", "must lie in [0, 1]");
        check(topology.gain_high >= topology.gain_low && topology.gain_high <= 1.0, "topology.gain_high",
              "must lie in [gain_low, 1]");
        check(topology.serving_cell >= 0 && topology.serving_cell < topology.num_cells, "topology.serving_cell",
              "must index a cell");
        if (topology.gains)
            check(topology.gains->size() ==
                      static_cast<std::size_t>(topology.num_cells) * topology.num_cells * topology.users_per_cell,
                  "topology.gains", "must be an M x M x K array");
        check(std::isfinite(channel.bandwidth_hz) && channel.bandwidth_hz > 0.0, "channel.bandwidth_hz",
              "must be positive");
        check(channel.num_subcarriers >= 2 && (channel.num_subcarriers & (channel.num_subcarriers - 1)) == 0,
              "channel.num_subcarriers", "must be a power of two >= 2");
        check(channel.num_antennas >= 1, "channel.num_antennas", "must be >= 1");
        check(channel.subcarrier >= 0 && channel.subcarrier < channel.num_subcarriers, "channel.subcarrier",
              "must index a subcarrier");
        check(!channel.pdp_delays_us.empty() && channel.pdp_delays_us.size() == channel.pdp_powers_db.size(),
              "channel.pdp", "needs matching, nonempty delays_us and powers_db");
        try {
            (void)channel.pdp();
        } catch (const ParameterError& e) {
            throw ConfigError(std::string("config: channel.pdp invalid: ") + e.what());
        }
        try {
            (void)signaling.alphabet();
        } catch (const ParameterError& e) {
            throw ConfigError(std::string("config: signaling.pam invalid: ") + e.what());
        }
        check(signaling.sigma_q_sq >= 0.0 && std::isfinite(signaling.sigma_q_sq), "signaling.sigma_q_sq",
              "must be finite and nonnegative");
        check(!std::isnan(noise.target_sinr_db) && noise.target_sinr_db != -kInf, "noise.target_sinr_db",
              "must be a number or \"inf\"");
        if (noise.sigma_v_sq)
            check(*noise.sigma_v_sq >= 0.0 && std::isfinite(*noise.sigma_v_sq), "noise.sigma_v_sq",
                  "must be finite and nonnegative");
        check(pilots.length >= topology.users_per_cell, "pilots.length", "must be >= users_per_cell");
        check(blind.mu >= 0.0 && std::isfinite(blind.mu), "blind.mu", "must be finite and nonnegative");
        if (blind.epsilon)
            check(*blind.epsilon >= 0.0, "blind.epsilon", "must be nonnegative");
        check(blind.p >= 1, "blind.p", "must be >= 1");
        check(blind.packet_length >= 1, "blind.packet_length", "must be >= 1");
        check(blind.passes >= 1, "blind.passes", "must be >= 1");
        check(blind.probe_every >= 1, "blind.probe_every", "must be >= 1");
        check(blind.probe_dense_until >= 0, "blind.probe_dense_until", "must be >= 0");
        check(blind.probe_every_sparse >= 0, "blind.probe_every_sparse", "must be >= 0");
        check(blind.eval_symbols >= 1000, "blind.eval_symbols", "must be >= 1000");
        check(eye.passes >= 1, "eye.passes", "must be >= 1");
        check(eye.buckets >= 1, "eye.buckets", "must be >= 1");
        check(cmt.overlap_factor >= 4, "cmt.overlap_factor", "must be >= 4");
        check(cmt.rolloff > 0.0 && cmt.rolloff <= 1.0, "cmt.rolloff", "must lie in (0, 1]");
        check(cmt.min_samples >= 1, "cmt.min_samples", "must be >= 1");
        check(run.num_trials >= 1, "run.num_trials", "must be >= 1");
        check(run.threads >= 0, "run.threads", "must be >= 0");
    }
};

namespace detail {

    using nlohmann::json;

    // Reads keys of one JSON object and rejects any key nobody asked for.
    class Section {
    public:
        Section(const json& node, std::string path) : node_(node), path_(std::move(path))
        {
            if (!node_.is_object())
                throw ConfigError("config: " + (path_.empty() ? std::string("<root>") : path_) + " must be an object");
        }

        void finish() const
        {
            for (const auto& [key, value] : node_.items())
                if (!seen_.contains(key))
                    throw ConfigError("config: unknown key " + full(key));
        }

        Section(const Section&) = delete;
        Section& operator=(const Section&) = delete;

        template <typename T>
        void read(const std::string& key, T& target)
        {
            seen_.insert(key);
            if (!node_.contains(key))
                return;
            try {
                target = convert<T>(node_.at(key));
            } catch (const json::exception&) {
                throw ConfigError("config: invalid value for " + full(key));
            }
        }

        template <typename T>
        void read_optional(const std::string& key, std::optional<T>& target)
        {
            seen_.insert(key);
            if (!node_.contains(key) || node_.at(key).is_null())
                return;
            try {
                target = convert<T>(node_.at(key));
            } catch (const json::exception&) {
                throw ConfigError("config: invalid value for " + full(key));
            }
        }

        std::optional<Section> child(const std::string& key)
        {
            seen_.insert(key);
            if (!node_.contains(key))
                return std::nullopt;
            return std::optional<Section>(std::in_place, node_.at(key), full(key));
        }

        bool has(const std::string& key) const { return node_.contains(key); }
        const json& at(const std::string& key) { return seen_.insert(key), node_.at(key); }
        std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    private:
        template <typename T>
        static T convert(const json& v)
        {
            if constexpr (std::is_same_v<T, double>) {
                if (v.is_string()) {
                    const auto s = v.get<std::string>();
                    if (s == "inf" || s == "+inf")
                        return kInf;
                    if (s == "-inf")
                        return -kInf;
                    throw json::type_error::create(302, "expected number", &v);
                }
                if (!v.is_number())
                    throw json::type_error::create(302, "expected number", &v);
                return v.get<double>();
            } else if constexpr (std::is_same_v<T, int>) {
                if (!v.is_number_integer())
                    throw json::type_error::create(302, "expected integer", &v);
                return v.get<int>();
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean())
                    throw json::type_error::create(302, "expected boolean", &v);
                return v.get<bool>();
            } else {
                return v.get<T>();
            }
        }

        const json& node_;
        std::string path_;
        std::set<std::string> seen_;
    };

    inline std::vector<double> flatten_gains(const json& g, int M, int K, const std::string& key)
    {
        std::vector<double> out;
        auto fail = [&] { throw ConfigError("config: " + key + " must be an M x M x K array of numbers"); };
        if (!g.is_array() || static_cast<int>(g.size()) != M)
            fail();
        for (const auto& row : g) {
            if (!row.is_array() || static_cast<int>(row.size()) != M)
                fail();
            for (const auto& users : row) {
                if (!users.is_array() || static_cast<int>(users.size()) != K)
                    fail();
                for (const auto& a : users) {
                    if (!a.is_number())
                        fail();
                    out.push_back(a.get<double>());
                }
            }
        }
        return out;
    }

} // namespace detail

/// Parse a configuration document; missing keys keep their defaults.
inline ExperimentConfig parse_config(const nlohmann::json& doc)
{
    ExperimentConfig c;
    {
        detail::Section root(doc, "");
        if (auto s = root.child("topology")) {
            s->read("num_cells", c.topology.num_cells);
            s->read("users_per_cell", c.topology.users_per_cell);
            s->read("gain_low", c.topology.gain_low);
            s->read("gain_high", c.topology.gain_high);
            s->read("serving_cell", c.topology.serving_cell);
            if (s->has("gains") && !s->at("gains").is_null())
                c.topology.gains = detail::flatten_gains(s->at("gains"), c.topology.num_cells,
                                                         c.topology.users_per_cell, s->full("gains"));
            else if (s->has("gains"))
                (void)s->at("gains");
            s->finish();
        }
        if (auto s = root.child("channel")) {
            s->read("bandwidth_hz", c.channel.bandwidth_hz);
            s->read("num_subcarriers", c.channel.num_subcarriers);
            s->read("num_antennas", c.channel.num_antennas);
            s->read("subcarrier", c.channel.subcarrier);
            s->read("sweep_all_subcarriers", c.channel.sweep_all_subcarriers);
            if (auto p = s->child("pdp")) {
                p->read("delays_us", c.channel.pdp_delays_us);
                p->read("powers_db", c.channel.pdp_powers_db);
                p->finish();
            }
            s->finish();
        }
        if (auto s = root.child("signaling")) {
            s->read("pam_levels", c.signaling.pam_levels);
            if (s->has("pam_levels") && !s->has("pam_probabilities"))
                c.signaling.pam_probabilities.assign(c.signaling.pam_levels.size(),
                                                     1.0 / static_cast<double>(c.signaling.pam_levels.size()));
            s->read("pam_probabilities", c.signaling.pam_probabilities);
            std::string mode = c.signaling.sigma_q_mode == SigmaQMode::fixed ? "fixed" : "calibrated";
            s->read("sigma_q_mode", mode);
            if (mode == "fixed")
                c.signaling.sigma_q_mode = SigmaQMode::fixed;
            else if (mode == "calibrated")
                c.signaling.sigma_q_mode = SigmaQMode::calibrated;
            else
                throw ConfigError("config: signaling.sigma_q_mode must be \"fixed\" or \"calibrated\"");
            s->read("sigma_q_sq", c.signaling.sigma_q_sq);
            s->finish();
        }
        if (auto s = root.child("noise")) {
            s->read("target_sinr_db", c.noise.target_sinr_db);
            s->read_optional("sigma_v_sq", c.noise.sigma_v_sq);
            s->finish();
        }
        if (auto s = root.child("pilots")) {
            s->read("length", c.pilots.length);
            std::string estimator = c.pilots.correlate ? "correlate" : "direct";
            s->read("estimator", estimator);
            if (estimator != "direct" && estimator != "correlate")
                throw ConfigError("config: pilots.estimator must be \"direct\" or \"correlate\"");
            c.pilots.correlate = estimator == "correlate";
            s->finish();
        }
        if (auto s = root.child("blind")) {
            s->read("mu", c.blind.mu);
            s->read_optional("epsilon", c.blind.epsilon);
            s->read("p", c.blind.p);
            s->read("normalized", c.blind.normalized);
            s->read("packet_length", c.blind.packet_length);
            s->read("passes", c.blind.passes);
            s->read("probe_every", c.blind.probe_every);
            s->read("probe_dense_until", c.blind.probe_dense_until);
            s->read("probe_every_sparse", c.blind.probe_every_sparse);
            s->read("eval_symbols", c.blind.eval_symbols);
            s->finish();
        }
        if (auto s = root.child("eye")) {
            s->read("passes", c.eye.passes);
            s->read("buckets", c.eye.buckets);
            s->finish();
        }
        if (auto s = root.child("cmt")) {
            s->read("overlap_factor", c.cmt.overlap_factor);
            s->read("rolloff", c.cmt.rolloff);
            s->read("phase_toggle", c.cmt.phase_toggle);
            s->read("min_samples", c.cmt.min_samples);
            s->finish();
        }
        if (auto s = root.child("run")) {
            s->read("master_seed", c.run.master_seed);
            s->read("num_trials", c.run.num_trials);
            s->read("threads", c.run.threads);
            s->read("out_dir", c.run.out_dir);
            s->finish();
        }
        root.finish();
    }
    c.validate();
    return c;
}

/// Parse text; blank text means all defaults.
inline nlohmann::json parse_config_text(const std::string& text)
{
    if (text.find_first_not_of(" \t\r\n") == std::string::npos)
        return nlohmann::json::object();
    try {
        return nlohmann::json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: parse error: ") + e.what());
    }
}

/// Apply "a.b.c=value" overrides; value is read as JSON, falling back to a plain string.
inline void apply_override(nlohmann::json& doc, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("config: override must look like key.path=value: " + assignment);
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
        value = text;
    }
    nlohmann::json* node = &doc;
    std::stringstream ss(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.'))
        parts.push_back(part);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i].empty())
            throw ConfigError("config: empty key in override " + path);
        if (!node->is_object())
            *node = nlohmann::json::object();
        if (i + 1 == parts.size())
            (*node)[parts[i]] = value;
        else
            node = &(*node)[parts[i]];
    }
}

inline ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {})
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot read " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    auto doc = parse_config_text(buffer.str());
    for (const auto& o : overrides)
        apply_override(doc, o);
    return parse_config(doc);
}

inline ExperimentConfig default_config() { return parse_config(nlohmann::json::object()); }

} // namespace cmtmimo::harness
