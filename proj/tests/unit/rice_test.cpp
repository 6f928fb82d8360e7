// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cicsim/rice.hpp>
#include <gtest/gtest.h>
#include <cmath>
#include <random>
#include <set>

using namespace cicsim;

namespace
{
const std::vector<uint8_t> no_data;
const auto entropy = sha256(as_bytes("entropy"));

CicState blank()
{
    return CicState{sha256(as_bytes("cid")), Hash256{}};
}

CicState with_code(const Program& p)
{
    return CicState{sha256(as_bytes("cid")), p.code_hash()};
}
}  // namespace

TEST(rice, seed_chain)
{
    EXPECT_EQ(init_seed(1, entropy).value, entropy);
    EXPECT_EQ(init_seed(2, entropy).value, sha256(as_bytes(entropy)));
    EXPECT_EQ(init_seed(4, entropy).value.hex(),
        "9db53454b67aaf6b971322d39d9a5ae8d318edbcf65e956daccfef3156982fab");
    EXPECT_THROW(init_seed(0, entropy), std::invalid_argument);
}

TEST(rice, seed_update_concatenates_fixed_width)
{
    const auto s = update_seed(init_seed(1, entropy), Hash256{});
    EXPECT_EQ(s.value.hex(), "da2d0f074dbf0255908e616d8b453ef5718007b2c9a204c66645d5636868e2b8");
    EXPECT_EQ(s.update_count, 1u);
}

TEST(rice, k_sequence_prefix)
{
    const uint64_t expected[] = {1, 2, 2, 3, 3, 3, 4, 4, 4, 4, 5};
    for (uint64_t i = 1; i <= 11; ++i)
        EXPECT_EQ(k_of_segment(i), expected[i - 1]) << i;
    for (uint64_t k = 1; k < 200; ++k)
    {
        uint64_t count = 0;
        for (auto i = first_segment_with_k(k); k_of_segment(i) == k; ++i)
            ++count;
        EXPECT_EQ(count, k);
    }
}

TEST(rice, segment_starts)
{
    const InstrIndex expected[] = {1, 3, 7, 11, 19, 27, 35, 51};
    for (uint64_t i = 1; i <= 8; ++i)
        EXPECT_EQ(segment_start(i), expected[i - 1]);
    InstrIndex start = 1;
    for (uint64_t i = 1; i < 1485; ++i)
    {
        ASSERT_EQ(segment_start(i), start) << i;
        EXPECT_EQ(segment_of(start), i);
        EXPECT_EQ(segment_of(start + (uint64_t{1} << k_of_segment(i)) - 1), i);
        start += uint64_t{1} << k_of_segment(i);
    }
}

TEST(rice, leading_bits_offset)
{
    auto h = Hash256{};
    h.bytes[0] = 0b1011'0000;
    EXPECT_EQ(leading_bits(h, 2), 2u);
    EXPECT_EQ(leading_bits(h, 4), 11u);
    EXPECT_EQ(leading_bits(h, 0), 0u);

    // Segment 2 has k = 2 and starts at 3; a seed beginning "10" lands on 5.
    SegmentCursor first = next_indices({}, Seed{Hash256{}, 1, 0});
    EXPECT_EQ(first.t_f, 1u);
    const auto second = next_indices(first, Seed{h, 1, 1});
    EXPECT_EQ(second.segment_index, 2u);
    EXPECT_EQ(second.k, 2u);
    EXPECT_EQ(second.segment_start, 3u);
    EXPECT_EQ(second.t_i, 2u);
    EXPECT_EQ(second.t_f, 5u);
}

TEST(rice, update_index_stays_inside_segment)
{
    std::mt19937_64 rng{5};
    SegmentCursor c;
    for (int i = 0; i < 500; ++i)
    {
        Hash256 s;
        for (auto& b : s.bytes)
            b = static_cast<uint8_t>(rng());
        c = next_indices(c, Seed{s, 1, 0});
        EXPECT_GE(c.t_f, c.segment_start);
        EXPECT_LE(c.t_f, c.segment_start + (uint64_t{1} << c.k) - 1);
    }
}

TEST(rice, reference_trace_round_one)
{
    // From tests/oracles/oracle.py (independent interpreter + schedule).
    const auto p = compute_program(50);
    const auto run = rice_run(p, with_code(p), no_data, 1, entropy);
    EXPECT_EQ(run.total, 208u);
    EXPECT_EQ(run.update_indices,
        (std::vector<InstrIndex>{1, 3, 7, 15, 22, 27, 37, 60, 76, 95, 125, 148, 185}));
    EXPECT_EQ(run.digest.seed.hex(),
        "c28b88625e8bfeca738c5495f814bd30ad81ce5debf8d56efa9a1bd542d3aa13");
    EXPECT_EQ(run.digest.root.hex(),
        "7464857e05d2b6b9b372892373728d76b06911eaa692bb9325924144f66e7ab4");
}

TEST(rice, reference_trace_round_two)
{
    const auto p = compute_program(50);
    const auto run = rice_run(p, with_code(p), no_data, 2, entropy);
    EXPECT_EQ(run.update_indices,
        (std::vector<InstrIndex>{2, 5, 7, 16, 21, 33, 42, 64, 80, 84, 130, 152, 166, 200}));
    EXPECT_EQ(run.digest.seed.hex(),
        "d77d350b9453458e45481d664f42e7906cc3f01bf6c05ceb96e531e909be6595");
    EXPECT_EQ(run.digest.root.hex(),
        "7464857e05d2b6b9b372892373728d76b06911eaa692bb9325924144f66e7ab4");
}

TEST(rice, reference_trace_longer_run)
{
    const auto p = compute_program(5000);
    const auto run = rice_run(p, with_code(p), no_data, 3, entropy);
    EXPECT_EQ(run.total, 20008u);
    EXPECT_EQ(run.phi(), 56u);
    EXPECT_EQ(run.update_indices.back(), 18451u);
    EXPECT_EQ(run.digest.seed.hex(),
        "76a59d5a7eca523aecc269ee588590e7a73a98124fcf0d4d33009631d5df4fdb");
    EXPECT_EQ(run.digest.root.hex(),
        "fbb027c01db3caeb1447a12739b7f2e41f6e3376367da5775d1ccdfda50290cf");
}

TEST(rice, single_instruction_program)
{
    const auto p = assemble("halt");
    const auto run = rice_run(p, blank(), no_data, 1, entropy);
    // Segment 1 ends at index 1 or 2; the halt at 1 comes first either way.
    EXPECT_EQ(run.phi(), 0u);
    EXPECT_EQ(run.digest.seed, entropy);
    EXPECT_EQ(run.digest.root, blank().root());
}

TEST(rice, roots_match_full_run_and_seeds_differ)
{
    std::mt19937_64 rng{9};
    for (int trial = 0; trial < 50; ++trial)
    {
        const auto p = random_program(100 + rng() % 5000, rng());
        const auto full = run_full(p, blank(), no_data);
        std::set<Hash256> seeds;
        for (uint64_t j = 1; j <= 5; ++j)
        {
            const auto d = rice_execute(p, blank(), no_data, j, entropy);
            EXPECT_EQ(d.root, full.state.root());
            seeds.insert(d.seed);
        }
        EXPECT_EQ(seeds.size(), 5u);
    }
}

TEST(rice, deterministic)
{
    const auto p = random_program(3000, 1);
    EXPECT_EQ(rice_execute(p, blank(), no_data, 2, entropy),
        rice_execute(p, blank(), no_data, 2, entropy));
}

TEST(rice, t60_lands_in_k4_block)
{
    // 34 < 60 <= 98, so (k−1)k/2 < phi <= k(k+1)/2 with k = 4.
    const auto p = random_program(60, 2);
    for (uint64_t j = 1; j <= 20; ++j)
    {
        const auto run = rice_run(p, blank(), no_data, j, entropy);
        const auto report = analyze_schedule(run.total, {run.update_indices});
        EXPECT_EQ(report.rounds[0].k_terminal, 4u);
        EXPECT_GT(run.phi(), 6u);
        EXPECT_LE(run.phi(), 10u);
    }
}

TEST(rice, phi_and_total_bounds_hold_on_random_programs)
{
    std::mt19937_64 rng{21};
    for (int trial = 0; trial < 300; ++trial)
    {
        const auto total = static_cast<uint64_t>(std::exp(std::log(10.0) + rng() % 1000 * 0.009));
        const auto p = random_program(total, rng());
        const auto run = rice_run(p, blank(), no_data, 1 + rng() % 3, entropy);
        const auto r = analyze_schedule(run.total, {run.update_indices}).rounds[0];
        EXPECT_TRUE(phi_within_bounds(r.phi, r.k_last_update)) << total;
        EXPECT_TRUE(total_within_bounds(run.total, r.k_terminal)) << total;
        EXPECT_LE(r.phi, r.k_terminal * (r.k_terminal + 1) / 2);
    }
}

TEST(rice, analyze_schedule_counts_unmatched)
{
    const auto r = analyze_schedule(100, {{1, 5, 9, 20}, {2, 5, 9, 30}, {1, 2, 30, 40}});
    EXPECT_EQ(r.rounds[0].strong_unmatched, 4u);
    EXPECT_EQ(r.rounds[1].strong_unmatched, 2u);
    EXPECT_EQ(r.rounds[2].strong_unmatched, 1u);
    EXPECT_DOUBLE_EQ(r.rounds[0].last_update_fraction, 0.8);
    EXPECT_EQ(r.rounds[0].k_last_update, 3u);
    EXPECT_EQ(r.rounds[0].k_terminal, 5u);
    EXPECT_THROW(analyze_schedule(100, {}), std::invalid_argument);
    EXPECT_DOUBLE_EQ(analyze_schedule(8, {{}}).rounds[0].last_update_fraction, 1.0);
}

TEST(rice, bound_helpers)
{
    EXPECT_TRUE(phi_within_bounds(7, 4));
    EXPECT_FALSE(phi_within_bounds(6, 4));
    EXPECT_TRUE(phi_within_bounds(10, 4));
    EXPECT_FALSE(phi_within_bounds(11, 4));
    EXPECT_TRUE(total_within_bounds(35, 4));
    EXPECT_FALSE(total_within_bounds(34, 4));
    EXPECT_TRUE(total_within_bounds(98, 4));
    EXPECT_FALSE(total_within_bounds(99, 4));
    EXPECT_TRUE(total_within_bounds(1, 1));
    EXPECT_NEAR(last_update_fraction_bound(256), 3.0 / 32.0, 1e-15);
}
