// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cicsim/harness.hpp>
#include <cicsim/miracle.hpp>
#include <gtest/gtest.h>
#include <cmath>

using namespace cicsim;

namespace
{
const auto A = Hash256::from_u64(0xa);
const auto B = Hash256::from_u64(0xb);

RoundTally tally(uint64_t round, std::initializer_list<std::pair<Hash256, int64_t>> counts)
{
    RoundTally t{round, {}};
    for (const auto& [r, c] : counts)
        t.add(r, c);
    return t;
}

MiracleErrc error_code(auto&& fn)
{
    try
    {
        fn();
    }
    catch (const MiracleError& e)
    {
        return e.code();
    }
    ADD_FAILURE() << "no MiracleError thrown";
    return MiracleErrc::no_solution;
}
}  // namespace

TEST(miracle, threshold_reference)
{
    ConsensusParams p{1600, 0.4, 0.125, 1e-10};
    EXPECT_NEAR(threshold(p), 9670.857390532994, 1e-8);
    p.beta = 0.5;
    EXPECT_EQ(threshold(p), 0.0);
}

TEST(miracle, threshold_grows_without_bound_near_half)
{
    ConsensusParams p{1600, 0.4, 0.125, 1e-10};
    double prev = threshold(p);
    for (const auto f : {0.45, 0.49, 0.499, 0.4999})
    {
        p.f_max = f;
        EXPECT_GT(threshold(p), prev);
        prev = threshold(p);
    }
    EXPECT_GT(prev, 1e7);
    p.f_max = 0.5;
    EXPECT_EQ(error_code([&] { threshold(p); }), MiracleErrc::degenerate_params);
    p.f_max = 0.4;
    p.beta = 0;
    EXPECT_EQ(error_code([&] { threshold(p); }), MiracleErrc::degenerate_params);
}

TEST(miracle, likelihood_single_round)
{
    LikelihoodTable t;
    t.apply(tally(1, {{A, 30}, {B, 10}}));
    EXPECT_EQ(t.likelihood(A), 800);
    EXPECT_EQ(t.likelihood(B), -800);
}

TEST(miracle, likelihood_symmetric_split)
{
    const auto t = update_likelihoods({}, tally(1, {{A, 20}, {B, 20}}));
    EXPECT_EQ(t.likelihood(A), 0);
    EXPECT_EQ(t.likelihood(B), 0);
}

TEST(miracle, likelihood_two_rounds)
{
    LikelihoodTable t;
    t.apply(tally(1, {{A, 30}, {B, 10}}));
    t.apply(tally(2, {{A, 25}, {B, 15}}));
    EXPECT_EQ(t.likelihood(A), 1200);
    EXPECT_EQ(t.likelihood(B), -1200);
}

TEST(miracle, late_root_is_back_charged)
{
    LikelihoodTable t;
    t.apply(tally(1, {{A, 30}}));
    t.apply(tally(2, {{A, 5}, {B, 5}}));
    // B: (0 − 30)·30 + (10 − 10)·10.
    EXPECT_EQ(t.likelihood(B), -900);
    EXPECT_EQ(t.likelihood(A), 900);
    EXPECT_EQ(t.likelihood(Hash256::from_u64(99)), -1000);
}

TEST(miracle, empty_round_leaves_likelihoods)
{
    LikelihoodTable t;
    t.apply(tally(1, {{A, 3}}));
    t.apply(RoundTally{2, {}});
    EXPECT_EQ(t.likelihood(A), 9);
    EXPECT_EQ(t.rounds_elapsed(), 2u);
}

TEST(miracle, round_order_enforced)
{
    LikelihoodTable t;
    EXPECT_EQ(error_code([&] { t.apply(tally(2, {{A, 1}})); }), MiracleErrc::round_mismatch);
}

TEST(miracle, step_decisions)
{
    LikelihoodTable t;
    t.apply(tally(1, {{A, 30}, {B, 10}}));
    EXPECT_EQ(step(t, 800.0, 100).kind, Decision::Kind::continue_);  // tie continues
    const auto d = step(t, 799.5, 100);
    EXPECT_TRUE(d.accepted());
    EXPECT_EQ(d.root, A);
    EXPECT_EQ(step(t, 1e9, 1).kind, Decision::Kind::no_convergence);
}

TEST(miracle, never_two_roots_above_positive_threshold)
{
    std::mt19937_64 rng{17};
    for (int seq = 0; seq < 20'000; ++seq)
    {
        LikelihoodTable t;
        const auto roots = 2 + rng() % 4;
        for (uint64_t j = 1; j <= 1 + rng() % 6; ++j)
        {
            RoundTally rt{j, {}};
            for (uint64_t r = 0; r < roots; ++r)
                rt.add(Hash256::from_u64(r), static_cast<int64_t>(rng() % 50));
            t.apply(rt);
            int above = 0;
            for (const auto& [_, L] : t.likelihoods())
                above += L > 0 ? 1 : 0;
            ASSERT_LE(above, 1);
        }
    }
}

TEST(miracle, merging_wrong_roots_never_lowers_their_best_likelihood)
{
    std::mt19937_64 rng{23};
    for (int trial = 0; trial < 2000; ++trial)
    {
        const auto m = 2 + rng() % 4;
        LikelihoodTable split, merged;
        for (uint64_t j = 1; j <= 1 + rng() % 5; ++j)
        {
            RoundTally s{j, {}}, g{j, {}};
            const auto honest = static_cast<int64_t>(rng() % 300);
            s.add(A, honest);
            g.add(A, honest);
            for (uint64_t r = 0; r < m; ++r)
            {
                const auto c = static_cast<int64_t>(rng() % 100);
                s.add(Hash256::from_u64(100 + r), c);
                g.add(B, c);
            }
            split.apply(s);
            merged.apply(g);
        }
        int64_t best_split = std::numeric_limits<int64_t>::min();
        for (uint64_t r = 0; r < m; ++r)
            best_split = std::max(best_split, split.likelihood(Hash256::from_u64(100 + r)));
        ASSERT_GE(merged.likelihood(B), best_split);
    }
}

TEST(miracle, expected_rounds_reference)
{
    const ConsensusParams p{1600, 0.45, 0.125, 1e-10};
    EXPECT_NEAR(expected_rounds(p, 0.45), 9.028122866226024, 1e-9);
    EXPECT_NEAR(expected_rounds(p, 0.40), 2.006463420845451, 1e-9);
    EXPECT_EQ(error_code([&] { expected_rounds(p, 0.0); }), MiracleErrc::degenerate_params);
}

TEST(miracle, one_round_es_sizes)
{
    EXPECT_NEAR(one_round_q(1600, 0.35, 1e-20) * 1600, 66.92365124638042, 1e-6);
    EXPECT_NEAR(one_round_q(1600, 0.45, 1e-20) * 1600, 199.5285957940155, 1e-6);
    EXPECT_NEAR(one_round_q(1600, 0.05, 1e-20) * 1600, 4.846289302114907, 1e-6);
    const auto q = one_round_q(1600, 0.35, 1e-20);
    ConsensusParams p{1600, 0.35, q, 1e-20};
    EXPECT_GT(q * 1600 * q * 1600, threshold(p));
}

TEST(miracle, ns1_sizes)
{
    // Smallest n with P(Bin(n, f) > n/2) < β, from scipy.
    EXPECT_EQ(ns1_size(0.05, 1600, 1e-20).size, 50u);
    EXPECT_EQ(ns1_size(0.20, 1600, 1e-20).size, 190u);
    EXPECT_EQ(ns1_size(0.35, 1600, 1e-20).size, 904u);
    const auto sat = ns1_size(0.40, 1600, 1e-20);
    EXPECT_EQ(sat.size, 1600u);
    EXPECT_TRUE(sat.saturated);
    EXPECT_FALSE(ns1_size(0.35, 1600, 1e-20).saturated);
}

TEST(miracle, log_binomial_sf)
{
    EXPECT_NEAR(std::exp(log_binomial_sf(1, 3, 0.5)), 0.5, 1e-12);
    EXPECT_NEAR(std::exp(log_binomial_sf(0, 10, 0.1)), 1 - std::pow(0.9, 10), 1e-12);
    EXPECT_EQ(log_binomial_sf(5, 5, 0.3), -std::numeric_limits<double>::infinity());
}

TEST(miracle, all_honest_accepts_in_one_round_when_sized)
{
    ConsensusTrialConfig c;
    c.params = {1600, 0.35, 0.0, 1e-20};
    c.params.q = one_round_q(1600, 0.35, 1e-20) * 3;
    c.f = 0;
    for (uint64_t i = 0; i < 100; ++i)
    {
        auto rng = trial_rng(Hash256{}, i);
        const auto r = simulate_consensus(c, rng);
        EXPECT_EQ(r.rounds, 1u);
        EXPECT_FALSE(r.wrong);
    }
}

TEST(miracle, rounds_do_not_grow_as_f_falls)
{
    ConsensusTrialConfig c;
    c.params = {1600, 0.45, 0.125, 1e-10};
    double prev = 1e9;
    for (const auto f : {0.45, 0.35, 0.2, 0.0})
    {
        c.f = f;
        std::vector<double> rounds;
        for (uint64_t i = 0; i < 1000; ++i)
        {
            auto rng = trial_rng(Hash256::from_u64(1), i);
            rounds.push_back(simulate_consensus(c, rng).rounds);
        }
        const auto s = summarize(rounds);
        EXPECT_LE(s.mean, prev + 0.05);
        prev = s.mean;
    }
}

TEST(miracle, silent_adversary_never_wins)
{
    ConsensusTrialConfig c;
    c.params = {1600, 0.4, 0.125, 1e-2};
    c.f = 0.4;
    c.adversary = AdversaryModel::silent;
    for (uint64_t i = 0; i < 500; ++i)
    {
        auto rng = trial_rng(Hash256::from_u64(2), i);
        EXPECT_FALSE(simulate_consensus(c, rng).wrong);
    }
}
