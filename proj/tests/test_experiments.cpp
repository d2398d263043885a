// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The cmtmimo Authors

#include "cmtmimo/harness/experiments.hpp"

#include <catch_amalgamated.hpp>

using namespace cmtmimo;
using namespace cmtmimo::harness;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ExperimentConfig small(int trials = 3)
{
    auto c = default_config();
    c.channel.num_antennas = 16;
    c.run.num_trials = trials;
    c.blind.packet_length = 150;
    c.blind.passes = 2;
    c.blind.probe_dense_until = 150;
    c.blind.probe_every_sparse = 50;
    c.blind.eval_symbols = 1000;
    c.eye.passes = 2;
    c.eye.buckets = 4;
    c.signaling.sigma_q_mode = SigmaQMode::fixed;
    c.signaling.sigma_q_sq = 0.087;
    return c;
}

// only the serving cell, no interference of any kind
ExperimentConfig isolated()
{
    auto c = small(2);
    c.topology.num_cells = 2;
    c.topology.gains = std::vector<double>{1.0, 0.0, 0.0, 1.0};
    c.noise.target_sinr_db = kInf;
    c.signaling.sigma_q_sq = 0.0;
    c.blind.mu = 0.0;
    return c;
}

} // namespace

TEST_CASE("noise is calibrated to the target single-user SINR", "[experiments]")
{
    const auto c = default_config();
    const double sv = calibrate_noise(c);
    CHECK_THAT(sv, WithinRel(2.0 * 128 / from_db(32.0), 1e-12));
    CHECK_THAT(sv, WithinAbs(0.1615, 1e-4));

    auto wide = c;
    wide.channel.num_antennas = 256;
    CHECK_THAT(calibrate_noise(wide), WithinRel(2.0 * sv, 1e-12));

    auto clean = c;
    clean.noise.target_sinr_db = kInf;
    CHECK(calibrate_noise(clean) == 0.0);

    auto pinned = c;
    pinned.noise.sigma_v_sq = 0.25;
    CHECK(calibrate_noise(pinned) == 0.25);
}

TEST_CASE("measured single-user MF SINR meets the target", "[experiments][montecarlo]")
{
    auto c = default_config();
    c.channel.num_antennas = 32;
    const double measured = measure_single_user_mf_sinr_db(c, calibrate_noise(c), 200, 2000, 5);
    CHECK_THAT(measured, WithinAbs(32.0, 0.2));
}

TEST_CASE("frozen weights track the contaminated MF", "[experiments]")
{
    auto c = small();
    c.blind.mu = 0.0;
    const auto r = run_tracking(c);
    REQUIRE(r.trials.size() == 3);
    for (const auto& t : r.trials) {
        REQUIRE_FALSE(t.points.empty());
        for (const auto& p : t.points)
            CHECK(p.sinr_db == t.reference.mf_contaminated_db);
    }
}

TEST_CASE("no interference and no noise gives an exact output", "[experiments]")
{
    const auto r = run_tracking(isolated());
    CHECK(r.sigma_v_sq == 0.0);
    for (const auto& t : r.trials) {
        CHECK(t.points.front().sinr_db == kInf);
        CHECK(t.cross_mf_iteration == 0);
    }
}

TEST_CASE("eye samples sit on the alphabet when nothing interferes", "[experiments]")
{
    const auto c = isolated();
    const auto r = run_eye(c);
    const std::size_t total = static_cast<std::size_t>(c.blind.packet_length * c.eye.passes);
    for (const auto& t : r.trials) {
        REQUIRE(t.buckets.size() == 4);
        std::size_t seen = 0, next = 0;
        for (const auto& b : t.buckets) {
            CHECK(b.first_iteration == next);
            CHECK(b.last_iteration + 1 - b.first_iteration == b.samples.size());
            next = b.last_iteration + 1;
            seen += b.samples.size();
            for (double y : b.samples)
                REQUIRE_THAT(std::abs(y), WithinAbs(1.0, 1e-9));
            CHECK_THAT(b.opening, WithinAbs(2.0, 1e-9));
        }
        CHECK(seen == total);
    }
}

TEST_CASE("eye opening helper", "[experiments]")
{
    CHECK(eye_opening({0.8, -0.5, 1.2, -1.1}) == 1.3);
    CHECK(eye_opening({0.8, 0.5}) == 0.0);
    CHECK(eye_opening({}) == 0.0);
    CHECK(bucket_of(0, 10, 3) == 0);
    CHECK(bucket_of(9, 10, 3) == 2);
}

TEST_CASE("trajectory and summary files follow the schema", "[experiments]")
{
    const auto r = run_tracking(small(2));
    const auto traj = r.trajectory_csv().str();
    CHECK(traj.rfind("trial_id,iteration,sinr_blind_db,sinr_mf_perfect_db,sinr_mmse_perfect_db,"
                     "sinr_mf_contaminated_db\n",
                     0) == 0);
    const auto sum = r.summary_csv().str();
    CHECK(sum.rfind("trial_id,cross_mf_iteration,final_iteration,final_blind_db,sinr_mf_perfect_db,"
                    "sinr_mmse_perfect_db,sinr_mf_contaminated_db,final_gap_to_mmse_db\n",
                    0) == 0);
    CHECK(std::count(sum.begin(), sum.end(), '\n') == 3);
    for (const auto& t : r.trials) {
        for (std::size_t i = 1; i < t.points.size(); ++i)
            CHECK(t.points[i].iteration > t.points[i - 1].iteration);
        CHECK(t.points.back().iteration == 300);
    }
}

TEST_CASE("runs are reproducible and thread-count invariant", "[experiments]")
{
    auto c = small(4);
    const auto a = run_tracking(c).trajectory_csv().str();
    const auto b = run_tracking(c).trajectory_csv().str();
    c.run.threads = 3;
    const auto threaded = run_tracking(c).trajectory_csv().str();
    CHECK(a == b);
    CHECK(a == threaded);
    c.run.master_seed = 2;
    CHECK(run_tracking(c).trajectory_csv().str() != a);

    auto e = small(3);
    const auto e1 = run_eye(e).opening_csv().str();
    e.run.threads = 2;
    CHECK(run_eye(e).opening_csv().str() == e1);
}

TEST_CASE("gaussianity table", "[experiments][montecarlo]")
{
    auto c = default_config();
    c.channel.num_subcarriers = 64;
    c.cmt.min_samples = 8192;
    const auto s = run_gaussianity(c);
    CHECK(s.num_samples >= 8192);
    const auto csv = gaussianity_csv(s).str();
    CHECK(csv.rfind("sigma_q_sq,kurtosis_imag,kurtosis_real_unequalized,err_rate\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    CHECK(resolve_sigma_q_sq([&] {
              auto k = c;
              k.signaling.sigma_q_mode = SigmaQMode::calibrated;
              return k;
          }()) == s.sigma_q_sq);
}

TEST_CASE("worker failures propagate", "[experiments][errors]")
{
    CHECK_THROWS_AS(run_indexed(5, 2, [](int i) -> int {
                        if (i == 3)
                            throw NumericalError("boom");
                        return i;
                    }),
                    NumericalError);
    const auto v = run_indexed(6, 4, [](int i) { return i * i; });
    CHECK(v == std::vector<int>{0, 1, 4, 9, 16, 25});
}
