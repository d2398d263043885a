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

// cmtmimo command line:
//
//   cmtmimo simulate    [--config f] [--seed s] [--trials n] [--out dir] [--override k=v]...
//   cmtmimo eye         (same flags)
//   cmtmimo gaussianity (same flags)
//   cmtmimo verify      [--seed s] [--corrupt-mf-normalization]
//
// Exit status: 0 success, 1 verify failure, 2 bad configuration or input.

#include "cmtmimo/harness/experiments.hpp"
#include "cmtmimo/harness/verify.hpp"
#include "cmtmimo/stats.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace cmtmimo;
using namespace cmtmimo::harness;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<int> threads;
    std::string out;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& f)
{
    cmd->add_option("--config", f.config_path, "JSON config file (comments allowed)")->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--trials", f.trials, "number of Monte-Carlo trials");
    cmd->add_option("--threads", f.threads, "worker threads (0 = all cores)");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--override", f.overrides, "set a config key, e.g. --override channel.num_antennas=16")
        ->take_all();
}

ExperimentConfig resolve(const CommonFlags& f)
{
    std::vector<std::string> overrides = f.overrides;
    if (f.seed)
        overrides.push_back("run.master_seed=" + std::to_string(*f.seed));
    if (f.trials)
        overrides.push_back("run.num_trials=" + std::to_string(*f.trials));
    if (f.threads)
        overrides.push_back("run.threads=" + std::to_string(*f.threads));
    if (!f.out.empty())
        overrides.push_back("run.out_dir=" + nlohmann::json(f.out).dump());
    if (!f.config_path.empty())
        return load_config(f.config_path, overrides);
    auto doc = parse_config_text("");
    for (const auto& o : overrides)
        apply_override(doc, o);
    return parse_config(doc);
}

void print_written(const std::vector<std::filesystem::path>& paths)
{
    for (const auto& p : paths)
        std::cout << "wrote " << p.string() << '\n';
}

int cmd_simulate(const CommonFlags& f)
{
    const auto config = resolve(f);
    if (config.channel.sweep_all_subcarriers) {
        print_written(write_tracking(config));
        return 0;
    }
    const auto r = run_tracking(config);
    print_written(write_tracking(r, config.run.out_dir));
    std::vector<double> gaps;
    std::size_t crossed = 0;
    for (const auto& t : r.trials) {
        gaps.push_back(t.reference.mmse_perfect_db - t.points.back().sinr_db);
        crossed += t.cross_mf_iteration >= 0;
    }
    std::cout << "sigma_v^2 " << format_number(r.sigma_v_sq) << ", sigma_q^2 " << format_number(r.sigma_q_sq) << '\n'
              << "trials crossing MF-perfect: " << crossed << "/" << r.trials.size() << '\n'
              << "median final gap to MMSE: " << format_number(stats::median(gaps)) << " dB\n";
    return 0;
}

int cmd_eye(const CommonFlags& f)
{
    print_written(write_eye(resolve(f)));
    return 0;
}

int cmd_gaussianity(const CommonFlags& f)
{
    const auto config = resolve(f);
    const auto s = run_gaussianity(config);
    const auto path = std::filesystem::path(config.run.out_dir) / "gaussianity.csv";
    gaussianity_csv(s).write(path);
    print_written({path});
    std::cout << "samples " << s.num_samples << ", excess kurtosis Im{y} " << format_number(s.kurtosis_imag - 3.0)
              << ", real-part MSE " << format_number(s.real_part_mse) << '\n';
    return 0;
}

int cmd_verify(std::uint64_t seed, bool corrupt)
{
    VerifyOptions options;
    options.master_seed = seed;
    options.corrupt_mf_normalization = corrupt;
    const auto report = run_verify(options);
    std::cout << report.table();
    if (report.ok()) {
        std::cout << "verify: all checks passed\n";
        return 0;
    }
    std::cout << "verify: FAILED:";
    for (const auto& name : report.failed())
        std::cout << ' ' << name;
    std::cout << '\n';
    return 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"cmtmimo: blind pilot decontamination for CMT massive-MIMO uplinks"};
    app.require_subcommand(1);

    CommonFlags sim_flags, eye_flags, gauss_flags;
    auto* simulate = app.add_subcommand("simulate", "SINR trajectory of the blind tracker vs MF/MMSE references");
    add_common(simulate, sim_flags);
    auto* eye = app.add_subcommand("eye", "eye pattern of the blind tracker's decisions");
    add_common(eye, eye_flags);
    auto* gauss = app.add_subcommand("gaussianity", "CMT intrinsic-interference statistics");
    add_common(gauss, gauss_flags);

    std::uint64_t verify_seed = 1;
    bool corrupt = false;
    auto* verify = app.add_subcommand("verify", "run the property checks at desk scale");
    verify->add_option("--seed", verify_seed, "master seed");
    verify->add_flag("--corrupt-mf-normalization", corrupt, "self-test: break the MF normalization");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate)
            return cmd_simulate(sim_flags);
        if (*eye)
            return cmd_eye(eye_flags);
        if (*gauss)
            return cmd_gaussianity(gauss_flags);
        if (*verify)
            return cmd_verify(verify_seed, corrupt);
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
