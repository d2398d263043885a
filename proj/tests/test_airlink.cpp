// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The cmtmimo Authors

#include "cmtmimo/airlink.hpp"

#include <catch_amalgamated.hpp>

using namespace cmtmimo;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<CMatrix> random_channels(int M, int K, int N, Rng& rng)
{
    std::vector<CMatrix> H(M, CMatrix(N, K));
    for (auto& Hm : H)
        for (Eigen::Index l = 0; l < K; ++l)
            Hm.col(l) = complex_gaussian_vector(rng, N, 1.0);
    return H;
}

std::vector<CVector> random_symbols(int M, int K, Rng& rng)
{
    std::vector<CVector> t;
    for (int m = 0; m < M; ++m)
        t.push_back(complex_gaussian_vector(rng, K, 1.0));
    return t;
}

} // namespace

TEST_CASE("transmit symbol without intrinsic interference is real", "[airlink]")
{
    Rng rng = derive_stream(1);
    const auto t = make_transmit_symbol(-1.0, 0.0, rng);
    CHECK(t.t() == Complex(-1.0, 0.0));
    CHECK_THROWS_AS(make_transmit_symbol(1.0, -0.1, rng), ParameterError);
}

TEST_CASE("transmit symbol moments", "[airlink][montecarlo]")
{
    Rng rng = derive_stream(2);
    std::bernoulli_distribution coin(0.5);
    const int n = 100000;
    double power = 0.0, imag2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto t = make_transmit_symbol(coin(rng) ? 1.0 : -1.0, 1.0, rng);
        CHECK(t.t().imag() == t.q);
        power += std::norm(t.t());
        imag2 += t.q * t.q;
    }
    CHECK_THAT(power / n, WithinRel(2.0, 0.02));
    CHECK_THAT(imag2 / n, WithinRel(1.0, 0.02));
}

TEST_CASE("single user, noiseless frame is the channel vector", "[airlink]")
{
    Rng rng = derive_stream(3);
    const CellTopology lone(1, 1, {1.0});
    const auto H = random_channels(1, 1, 8, rng);
    const auto f = receive_frame(lone, H, 0, {CVector::Ones(1)}, 0.0, rng);
    CHECK(f.x == H[0].col(0));
    CHECK(f.x.size() == 8);
}

TEST_CASE("zero cross-gain cell does not change the frame", "[airlink]")
{
    Rng rng = derive_stream(4);
    const CellTopology two(2, 1, {1.0, 0.0, 0.0, 1.0});
    const CellTopology one(1, 1, {1.0});
    const auto H = random_channels(2, 1, 8, rng);
    const auto t = random_symbols(2, 1, rng);
    const auto x2 = receive_frame(two, H, 0, t, 0.0, rng).x;
    const auto x1 = receive_frame(one, {H[0]}, 0, {t[0]}, 0.0, rng).x;
    CHECK((x2 - x1).norm() == 0.0);
}

TEST_CASE("matrix-form frame equals the per-user double sum", "[airlink]")
{
    Rng rng = derive_stream(5);
    const int M = 4, K = 3, N = 10;
    const auto topo = build_topology(M, K, 0.0, 1.0, rng);
    const auto H = random_channels(M, K, N, rng);
    const auto t = random_symbols(M, K, rng);
    for (int bs = 0; bs < M; ++bs) {
        const CVector x = receive_frame(topo, H, bs, t, 0.0, rng).x;
        CVector brute = CVector::Zero(N);
        for (int m = 0; m < M; ++m)
            for (int l = 0; l < K; ++l)
                for (int a = 0; a < N; ++a)
                    brute(a) += topo.gain(m, bs, l) * H[m](a, l) * t[m](l);
        CHECK((x - brute).norm() <= 1e-12 * brute.norm());
    }
}

TEST_CASE("receive_frame rejects inconsistent dimensions", "[airlink][errors]")
{
    Rng rng = derive_stream(6);
    const auto topo = build_topology(2, 2, 0.0, 1.0, rng);
    const auto H = random_channels(2, 2, 4, rng);
    CHECK_THROWS_AS(receive_frame(topo, H, 0, random_symbols(1, 2, rng), 0.0, rng), ParameterError);
    CHECK_THROWS_AS(receive_frame(topo, H, 0, random_symbols(2, 3, rng), 0.0, rng), ParameterError);
    CHECK_THROWS_AS(receive_frame(topo, {H[0]}, 0, random_symbols(2, 2, rng), 0.0, rng), ParameterError);
    CHECK_THROWS_AS(receive_frame(topo, H, 2, random_symbols(2, 2, rng), 0.0, rng), ParameterError);
    auto bad = H;
    bad[1] = CMatrix::Ones(5, 2);
    CHECK_THROWS_AS(receive_frame(topo, bad, 0, random_symbols(2, 2, rng), 0.0, rng), ParameterError);
}

TEST_CASE("noise has the requested total variance per entry", "[airlink][montecarlo]")
{
    Rng rng = derive_stream(7);
    const CellTopology lone(1, 1, {1.0});
    const std::vector<CMatrix> H{CMatrix::Zero(64, 1)};
    double acc = 0.0;
    const int frames = 2000;
    for (int i = 0; i < frames; ++i)
        acc += receive_frame(lone, H, 0, {CVector::Ones(1)}, 0.5, rng).x.squaredNorm();
    CHECK_THAT(acc / (frames * 64.0), WithinRel(0.5, 0.02));
}

TEST_CASE("no contamination and no noise gives the true channel", "[airlink]")
{
    Rng rng = derive_stream(8);
    const CellTopology one(1, 3, {1.0, 1.0, 1.0});
    const auto H = random_channels(1, 3, 6, rng);
    const auto est = estimate_channels_direct(one, H, 0, 0.0, 4, rng);
    CHECK(est.H_hat == H[0]);
    CHECK(est.mode == EstimateMode::direct);
}

TEST_CASE("one half-gain interferer adds half its channel", "[airlink]")
{
    Rng rng = derive_stream(9);
    const CellTopology two(2, 1, {1.0, 0.5, 0.5, 1.0});
    const auto H = random_channels(2, 1, 6, rng);
    const auto est = estimate_channels_direct(two, H, 0, 0.0, 1, rng);
    CHECK((est.H_hat - (H[0] + 0.5 * H[1])).norm() <= 1e-15 * est.H_hat.norm());
}

TEST_CASE("estimation noise variance scales as 1/tau", "[airlink]")
{
    Rng rng = derive_stream(10);
    const CellTopology one(1, 1, {1.0});
    const auto H = random_channels(1, 1, 6, rng);
    const auto e8 = estimate_channels_direct(one, H, 0, 0.4, 8, rng);
    const auto e16 = estimate_channels_direct(one, H, 0, 0.4, 16, rng);
    CHECK(e8.est_noise_var == 0.05);
    CHECK(e16.est_noise_var == 0.025);
    CHECK_THROWS_AS(estimate_channels_direct(CellTopology(1, 2, {1.0, 1.0}), random_channels(1, 2, 6, rng), 0, 0.1,
                                             1, rng),
                    ParameterError);
}

TEST_CASE("pilot book orthogonality", "[airlink]")
{
    const auto book = PilotBook::dft(3, 5);
    const CMatrix G = book.sequences() * book.sequences().adjoint();
    CHECK((G - 5.0 * CMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12 * 5);
    CHECK_THROWS_AS(PilotBook::dft(4, 3), ParameterError);
    CMatrix dup(2, 4);
    dup.row(0) = book.sequences().row(0).head(4);
    dup.row(1) = dup.row(0);
    CHECK_THROWS_AS(PilotBook(dup), ParameterError);
}

TEST_CASE("noiseless correlation estimate equals the contaminated sum", "[airlink]")
{
    Rng rng = derive_stream(11);
    for (int trial = 0; trial < 30; ++trial) {
        const int M = 1 + trial % 7, K = 1 + trial % 4, N = 4 + trial % 9, tau = K + trial % 3;
        const auto topo = build_topology(M, K, 0.0, 1.0, rng);
        const auto H = random_channels(M, K, N, rng);
        const int bs = trial % M;
        const auto book = PilotBook::dft(K, tau);
        const auto corr = estimate_channels_correlate(book, transmit_pilots(book, topo, H, bs, 0.0, rng));
        const auto direct = estimate_channels_direct(topo, H, bs, 0.0, tau, rng);
        REQUIRE((corr.H_hat - direct.H_hat).norm() <= 1e-10 * direct.H_hat.norm());
        REQUIRE(corr.mode == EstimateMode::correlate);
    }
}

TEST_CASE("orthogonal pilots separate in-cell users", "[airlink]")
{
    Rng rng = derive_stream(12);
    const CellTopology one(1, 2, {1.0, 1.0});
    auto H = random_channels(1, 2, 8, rng);
    // make h1 orthogonal to h0 so any leakage of h1 shows up as a projection
    H[0].col(1) -= H[0].col(0) * (H[0].col(0).dot(H[0].col(1)) / H[0].col(0).squaredNorm());
    const auto book = PilotBook::dft(2, 4);
    const auto est = estimate_channels_correlate(book, transmit_pilots(book, one, H, 0, 0.0, rng));
    const CVector u1 = H[0].col(1).normalized();
    CHECK(std::abs(u1.dot(est.H_hat.col(0))) < 1e-10);
}

TEST_CASE("correlation estimate error variance is sigma^2/tau", "[airlink][montecarlo]")
{
    Rng rng = derive_stream(13);
    const CellTopology one(1, 2, {1.0, 1.0});
    const auto H = random_channels(1, 2, 16, rng);
    const auto book = PilotBook::dft(2, 8);
    const double noise = 0.8;
    double acc = 0.0;
    const int reps = 2000;
    for (int r = 0; r < reps; ++r) {
        const auto est = estimate_channels_correlate(book, transmit_pilots(book, one, H, 0, noise, rng), noise);
        acc += (est.H_hat - H[0]).squaredNorm();
        REQUIRE(est.est_noise_var == noise / 8);
    }
    CHECK_THAT(acc / (reps * 32.0), WithinRel(noise / 8, 0.05));
}

TEST_CASE("received frames are linear in the symbols and the noise", "[airlink][invariant]")
{
    Rng rng = derive_stream(14);
    const int M = 3, K = 2, N = 12;
    const auto topo = build_topology(M, K, 0.0, 1.0, rng);
    const auto H = random_channels(M, K, N, rng);
    const auto t1 = random_symbols(M, K, rng), t2 = random_symbols(M, K, rng);
    const Complex a(1.5, -0.5), b(-0.25, 2.0);
    std::vector<CVector> mix, zero;
    for (int m = 0; m < M; ++m) {
        mix.push_back(a * t1[m] + b * t2[m]);
        zero.push_back(CVector::Zero(K));
    }
    const CVector x1 = receive_frame(topo, H, 1, t1, 0.0, rng).x;
    const CVector x2 = receive_frame(topo, H, 1, t2, 0.0, rng).x;
    const CVector xm = receive_frame(topo, H, 1, mix, 0.0, rng).x;
    CHECK((xm - a * x1 - b * x2).norm() <= 1e-12 * xm.norm());

    Rng n1 = derive_stream(99), n2 = derive_stream(99);
    const CVector noisy = receive_frame(topo, H, 1, t1, 0.3, n1).x;
    const CVector v = receive_frame(topo, H, 1, zero, 0.3, n2).x;
    CHECK((noisy - x1 - v).norm() <= 1e-12 * noisy.norm());
}

// The norm of the contamination term sum_{m!=j} a_m h_m grows with a_m only
// when that term does not partially cancel the others, so monotonicity is
// checked where it holds exactly.
TEST_CASE("contamination grows with the cross gains", "[airlink][invariant]")
{
    Rng rng = derive_stream(15);
    const int N = 16;
    const std::vector<double> grid{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    SECTION("single interferer")
    {
        const auto H = random_channels(2, 1, N, rng);
        double prev = -1.0;
        for (double a : grid) {
            const CellTopology topo(2, 1, {1.0, 0.0, a, 1.0});
            const double n = (estimate_channels_direct(topo, H, 0, 0.0, 1, rng).H_hat - H[0]).norm();
            CHECK(n >= prev);
            prev = n;
        }
    }
    SECTION("joint scaling of every cross gain")
    {
        const auto H = random_channels(7, 1, N, rng);
        Rng g = derive_stream(16);
        const auto base = build_topology(7, 1, 0.0, 1.0, g);
        double prev = -1.0;
        for (double c : grid) {
            auto gains = base.gains();
            for (int m = 0; m < 7; ++m)
                for (int j = 0; j < 7; ++j)
                    if (m != j)
                        gains[m * 7 + j] *= c;
            const double n = (estimate_channels_direct(CellTopology(7, 1, gains), H, 0, 0.0, 1, rng).H_hat - H[0])
                                 .norm();
            CHECK(n >= prev * (1.0 - 1e-14));
            prev = n;
        }
    }
    SECTION("each gain separately with orthogonal interferers")
    {
        auto H = random_channels(4, 1, N, rng);
        for (int m = 1; m < 4; ++m) {
            H[m] = CMatrix::Zero(N, 1);
            H[m](m, 0) = Complex(0.0, 2.0 + m);
        }
        for (int moved = 1; moved < 4; ++moved) {
            double prev = -1.0;
            for (double a : grid) {
                std::vector<double> gains(16, 0.5);
                for (int m = 0; m < 4; ++m)
                    gains[m * 4 + m] = 1.0;
                gains[moved * 4 + 0] = a;
                const double n =
                    (estimate_channels_direct(CellTopology(4, 1, gains), H, 0, 0.0, 1, rng).H_hat - H[0]).norm();
                CHECK(n >= prev);
                prev = n;
            }
        }
    }
}

TEST_CASE("frame source matches receive_frame column by column", "[airlink]")
{
    Rng rng = derive_stream(17);
    const int M = 3, K = 2, N = 6;
    const auto topo = build_topology(M, K, 0.0, 1.0, rng);
    const auto H = random_channels(M, K, N, rng);
    UplinkFrameSource src(topo, H, 1, 0.0, 0.2, {-3, -1, 1, 3}, {0.25, 0.25, 0.25, 0.25});
    const auto block = src.generate(50, rng);
    REQUIRE(block.size() == 50);
    CHECK(src.own_row(1) == 3);
    for (Eigen::Index n = 0; n < 50; ++n) {
        std::vector<CVector> t(M, CVector(K));
        for (int m = 0; m < M; ++m)
            for (int l = 0; l < K; ++l)
                t[m](l) = Complex(block.s(m * K + l, n), block.q(m * K + l, n));
        const CVector x = receive_frame(topo, H, 1, t, 0.0, rng).x;
        REQUIRE((x - block.x.col(n)).norm() <= 1e-12 * x.norm());
    }
}
