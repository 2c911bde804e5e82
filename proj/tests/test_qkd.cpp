#include "ghznet/qkd.hpp"
#include "oracles/qkd_table.hpp"
#include "oracles/statevector.hpp"

#include <doctest.h>

#include <sstream>

using namespace ghznet;

TEST_CASE("sifting example replays exactly")
{
    for (const auto& row : oracle::sifting_example()) {
        CAPTURE(row.alice);
        CAPTURE(row.bob);
        const auto s = sift_round(oracle::to_round(row));
        REQUIRE(s.has_value() == row.key.has_value());
        if (s) {
            CHECK(s->alice == *row.key);
            CHECK(s->bob == *row.key);
        }
    }
}

TEST_CASE("malformed rounds are rejected")
{
    QkdRound r = oracle::to_round({Basis::computational, "0101", Basis::computational, "0", std::nullopt});
    CHECK_THROWS_AS(sift_round(r), QkdError);
    r = oracle::to_round({Basis::hadamard, "01", Basis::hadamard, "0", std::nullopt});
    r.share.m = 3;
    CHECK_THROWS_AS(sift_round(r), QkdError);
    Rng rng(1);
    CHECK_THROWS_AS(measure_share({0, 2}, Basis::hadamard, Basis::hadamard, rng), std::invalid_argument);
}

TEST_CASE("computational rounds replicate one fair bit")
{
    Rng rng(2);
    int ones = 0;
    for (int i = 0; i < 20000; ++i) {
        const auto r = measure_share({1, 1}, Basis::computational, Basis::computational, rng);
        CHECK(r.alice[0] == r.bob[0]);
        ones += r.alice[0];
    }
    CHECK(std::abs(ones - 10000) < 400);
    const auto r = measure_share({3, 4}, Basis::computational, Basis::computational, rng);
    for (auto b : r.bob)
        CHECK(b == r.alice[0]);
}

TEST_CASE("Hadamard rounds follow the exact GHZ X distribution")
{
    Rng rng(3);
    const int m = 2, l = 3;
    const int N = 100000;
    const auto exact = oracle::ghz_x_distribution(m + l);
    std::vector<double> counts(static_cast<std::size_t>(exact.size()), 0.0);
    std::array<int, 2> alice_first{};
    for (int i = 0; i < N; ++i) {
        const auto r = measure_share({m, l}, Basis::hadamard, Basis::hadamard, rng);
        std::size_t idx = 0, bit = 0;
        int parity = 0;
        for (auto b : r.alice)
            idx |= std::size_t(b) << bit++, parity ^= b;
        for (auto b : r.bob)
            idx |= std::size_t(b) << bit++, parity ^= b;
        REQUIRE(parity == 0);
        counts[idx] += 1.0;
        ++alice_first[r.alice[0]];
    }
    double tv = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i)
        tv += std::abs(counts[i] / N - exact[static_cast<Eigen::Index>(i)]);
    CHECK(0.5 * tv < 0.01);
    CHECK(std::abs(alice_first[0] - N / 2) < 1000);
}

TEST_CASE("run_qkd")
{
    CHECK(run_qkd({}, 1).alice_key.empty());

    std::vector<GhzShare> shares;
    for (int i = 0; i < 100000; ++i)
        shares.push_back({1 + i % 4, 1 + (i / 4) % 3});
    const auto res = run_qkd(shares, 7);
    CHECK(std::abs(res.sift_rate() - 0.5) < 0.01);
    CHECK(res.alice_key == res.bob_key);
    CHECK(res.mismatches == 0);

    const auto threaded = run_qkd(shares, 7, 3);
    CHECK(threaded.alice_key == res.alice_key);
    CHECK(run_qkd(shares, 8).alice_key != res.alice_key);
}

TEST_CASE("key and round writers")
{
    std::ostringstream hex;
    write_key_hex(hex, std::vector<std::uint8_t>{1, 0, 1, 1, 0, 0, 0, 1, 1});
    CHECK(hex.str() == "# bits 9\nb18\n");

    std::ostringstream full;
    write_key_hex(full, std::vector<std::uint8_t>(256, 1));
    CHECK(full.str() == "# bits 256\n" + std::string(64, 'f') + "\n");

    QkdResult r;
    r.rounds.push_back(oracle::to_round({Basis::hadamard, "100", Basis::hadamard, "010", 1}));
    r.sifted.push_back(sift_round(r.rounds[0]));
    r.rounds.push_back(oracle::to_round({Basis::computational, "00", Basis::hadamard, "110", std::nullopt}));
    r.sifted.push_back(sift_round(r.rounds[1]));
    std::ostringstream csv;
    write_rounds_csv(csv, r);
    CHECK(csv.str() == "m,l,basis_a,basis_b,sifted,key_bit\n3,3,had,had,1,1\n2,3,comp,had,0,-\n");
}
