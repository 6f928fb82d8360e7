// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cicsim/protocol.hpp>
#include <gtest/gtest.h>

using namespace cicsim;

namespace
{
const Hash256 seed_a = Hash256::from_u64(0xa);
const Hash256 seed_b = Hash256::from_u64(0xb);

class MasterContractTest : public ::testing::Test
{
protected:
    static constexpr uint64_t pool = 40;
    static constexpr Block deploy_block = 10;

    MasterContractTest()
      : mc{{pool, 0.3, 0.9, 1e-2, 10}, SettlementPolicy{}, WindowConfig{}, log},
        randomness{Hash256::from_u64(99)}
    {
        for (NodeId i = 0; i < pool; ++i)
            mc.add_node(derive_keys(Hash256::from_u64(7), i), 200, 0, Strategy{});
        mc.add_creator("alice", 1'000'000);
        auto program = compute_program(3);
        CicState state{Hash256::from_u64(1), program.code_hash()};
        state.put(Hash256::from_u64(5), Hash256::from_u64(6));
        pre = state;
        cid = mc.add_contract("counter", program, state);
        post = put(pre, Hash256::from_u64(0), Hash256::from_u64(3));
        wrong = put(pre, Hash256::from_u64(0), Hash256::from_u64(4));
    }

    ItId deploy(uint64_t gas_limit = 1'000'000, Amount price = 0)
    {
        mc.enqueue(cid, {Hash256::from_u64(42), 0, {}, gas_limit, price, std::nullopt}, "alice",
            deploy_block);
        return mc.deploy_it(cid, deploy_block, randomness);
    }

    /// Nodes selected in the current round of the IT, lowest ids first.
    std::vector<NodeId> selected(ItId id)
    {
        std::vector<NodeId> out;
        for (const auto& [node, rec] : mc.nodes())
            if (rec.in_sp && check_sort(rec.keys, mc.it(id).current().nonce, mc.params().q).selected)
                out.push_back(node);
        return out;
    }

    SortResult sort_of(ItId id, NodeId node)
    {
        return check_sort(mc.nodes().at(node).keys, mc.it(id).current().nonce, mc.params().q);
    }

    /// Commits at the round start and reveals at the first reveal block.
    void play(ItId id, const std::vector<std::pair<NodeId, Digest>>& moves)
    {
        const auto& r = mc.it(id).current();
        for (const auto& [node, d] : moves)
            mc.submit_commit(id, node, commitment(d, sort_of(id, node)), r.start);
        for (const auto& [node, d] : moves)
            mc.submit_reveal(id, node, d, sort_of(id, node), r.buffer_end + 1);
    }

    Decision close(ItId id) { return mc.close_round(id, mc.it(id).current().reveal_end); }

    Amount deposit(NodeId n) const { return mc.nodes().at(n).deposit; }
    Amount balance(NodeId n) const { return mc.nodes().at(n).balance; }

    EventLog log;
    MasterContract mc;
    RandomSource randomness;
    Hash256 cid;
    CicState pre;
    CicState post;
    CicState wrong;
};

TEST_F(MasterContractTest, windows_are_inclusive)
{
    const auto id = deploy();
    const auto& r = mc.it(id).current();
    EXPECT_EQ(r.start, deploy_block);
    EXPECT_EQ(r.commit_end, deploy_block + 2);  // ceil(1e6 / 1e6) + 2 − 1
    EXPECT_EQ(r.buffer_end, r.commit_end + 2);
    EXPECT_EQ(r.reveal_end, r.buffer_end + 4);

    const auto nodes = selected(id);
    ASSERT_GE(nodes.size(), 3u);
    const Digest d{seed_a, post.root()};
    mc.submit_commit(id, nodes[0], commitment(d, sort_of(id, nodes[0])), r.commit_end);
    try
    {
        mc.submit_commit(id, nodes[1], commitment(d, sort_of(id, nodes[1])), r.commit_end + 1);
        FAIL() << "commit during the buffer accepted";
    }
    catch (const ProtocolError& e)
    {
        EXPECT_EQ(e.code(), ProtocolErrc::outside_window);
    }
    try
    {
        mc.submit_reveal(id, nodes[0], d, sort_of(id, nodes[0]), r.buffer_end);
        FAIL() << "reveal during the buffer accepted";
    }
    catch (const ProtocolError& e)
    {
        EXPECT_EQ(e.code(), ProtocolErrc::outside_window);
    }
    mc.submit_reveal(id, nodes[0], d, sort_of(id, nodes[0]), r.reveal_end);
}

TEST_F(MasterContractTest, commit_and_reveal_errors)
{
    const auto id = deploy();
    const auto& r = mc.it(id).current();
    const auto nodes = selected(id);
    const Digest d{seed_a, post.root()};
    const auto se = commitment(d, sort_of(id, nodes[0]));
    mc.submit_commit(id, nodes[0], se, r.start);

    auto code_of = [](auto&& fn) {
        try
        {
            fn();
        }
        catch (const ProtocolError& e)
        {
            return e.code();
        }
        return ProtocolErrc::config_error;
    };
    EXPECT_EQ(code_of([&] { mc.submit_commit(id, nodes[0], se, r.start); }),
        ProtocolErrc::duplicate_commit);
    EXPECT_EQ(code_of([&] { mc.submit_commit(id, 999, se, r.start); }), ProtocolErrc::not_in_sp);
    EXPECT_EQ(code_of([&] { mc.submit_commit(77, nodes[1], se, r.start); }), ProtocolErrc::unknown_it);

    const auto reveal_at = r.buffer_end + 1;
    EXPECT_EQ(code_of([&] { mc.submit_reveal(id, nodes[1], d, sort_of(id, nodes[1]), reveal_at); }),
        ProtocolErrc::no_commitment);
    const Digest tampered{seed_a, wrong.root()};
    EXPECT_EQ(code_of([&] { mc.submit_reveal(id, nodes[0], tampered, sort_of(id, nodes[0]), reveal_at); }),
        ProtocolErrc::commit_mismatch);
    mc.submit_reveal(id, nodes[0], d, sort_of(id, nodes[0]), reveal_at);
    EXPECT_EQ(code_of([&] { mc.submit_reveal(id, nodes[0], d, sort_of(id, nodes[0]), reveal_at); }),
        ProtocolErrc::duplicate_reveal);
}

TEST_F(MasterContractTest, forged_sortition_rejected)
{
    const auto id = deploy();
    const auto& r = mc.it(id).current();
    NodeId outsider = pool;
    for (const auto& [node, rec] : mc.nodes())
        if (!sort_of(id, node).selected)
        {
            outsider = node;
            break;
        }
    ASSERT_LT(outsider, pool);
    const SortResult forged{true, Hash256::from_u64(1), Hash256::from_u64(2)};
    const Digest d{seed_a, post.root()};
    mc.submit_commit(id, outsider, commitment(d, forged), r.start);
    try
    {
        mc.submit_reveal(id, outsider, d, forged, r.buffer_end + 1);
        FAIL();
    }
    catch (const ProtocolError& e)
    {
        EXPECT_EQ(e.code(), ProtocolErrc::invalid_sortition);
    }
}

TEST_F(MasterContractTest, silent_committer_forfeits_and_leaves)
{
    const auto id = deploy();
    const auto nodes = selected(id);
    const auto& r = mc.it(id).current();
    const Digest d{seed_a, post.root()};
    mc.submit_commit(id, nodes[0], commitment(d, sort_of(id, nodes[0])), r.start);
    const auto before = mc.total_value();
    close(id);
    EXPECT_EQ(deposit(nodes[0]), 200 - mc.policy().deposit);
    EXPECT_FALSE(mc.nodes().at(nodes[0]).in_sp);
    EXPECT_EQ(mc.burned(), mc.policy().deposit);
    EXPECT_EQ(mc.total_value(), before);
}

TEST_F(MasterContractTest, empty_round_continues_with_fresh_nonce)
{
    const auto id = deploy();
    const auto first = mc.it(id).current();
    const auto d = close(id);
    EXPECT_EQ(d.kind, Decision::Kind::continue_);
    const auto& second = mc.it(id).current();
    EXPECT_EQ(second.round, 2u);
    EXPECT_EQ(second.start, first.reveal_end + 1);
    EXPECT_NE(second.nonce, first.nonce);
    EXPECT_EQ(second.nonce, round_nonce(mc.it(id).nonce, 2));
}

TEST_F(MasterContractTest, queue_head_only)
{
    const auto id = deploy();
    mc.enqueue(cid, {Hash256::from_u64(43), 0, {}, 1000, 0, std::nullopt}, "alice", deploy_block);
    try
    {
        mc.deploy_it(cid, deploy_block, randomness);
        FAIL() << "second IT deployed while the first is active";
    }
    catch (const ProtocolError& e)
    {
        EXPECT_EQ(e.code(), ProtocolErrc::queue_order_violation);
    }
    EXPECT_EQ(mc.contracts().at(cid).queue.size(), 2u);
    EXPECT_EQ(mc.contracts().at(cid).active, id);
}

TEST_F(MasterContractTest, escrow_boundary_inclusive)
{
    const Amount need = mc.policy().d_min + 3 * 1000;
    mc.add_creator("bob", need - 1);
    mc.enqueue(cid, {Hash256::from_u64(1), 0, {}, 1000, 3, std::nullopt}, "bob", 1);
    EXPECT_THROW(mc.deploy_it(cid, 1, randomness), ProtocolError);
    EXPECT_TRUE(mc.contracts().at(cid).queue.empty());

    mc.add_creator("bob", 1);
    mc.enqueue(cid, {Hash256::from_u64(2), 0, {}, 1000, 3, std::nullopt}, "bob", 2);
    const auto counter = randomness.counter();
    const auto id = mc.deploy_it(cid, 2, randomness);
    EXPECT_EQ(mc.creators().at("bob"), 0);
    EXPECT_EQ(mc.it(id).escrow, need);
    EXPECT_EQ(mc.it(id).nonce, random_gen(Hash256::from_u64(99), counter));
}

TEST_F(MasterContractTest, settlement_majority_and_minority_seed)
{
    const auto id = deploy();
    const auto nodes = selected(id);
    ASSERT_GE(nodes.size(), 10u);
    std::vector<std::pair<NodeId, Digest>> moves;
    for (size_t i = 0; i < 10; ++i)
        moves.emplace_back(nodes[i], Digest{i < 8 ? seed_a : seed_b, post.root()});
    play(id, moves);
    ASSERT_TRUE(close(id).accepted());

    const auto before = mc.total_value();
    const auto report = mc.settle(id, {make_witness(nodes[0], pre, post)}, 30);
    EXPECT_EQ(report.rewarded.size(), 8u);
    EXPECT_EQ(report.forfeited.size(), 2u);
    for (size_t i = 0; i < 10; ++i)
    {
        EXPECT_EQ(balance(nodes[i]), i < 8 ? mc.policy().reward : 0) << i;
        EXPECT_EQ(deposit(nodes[i]), i < 8 ? 200 : 200 - mc.policy().deposit) << i;
    }
    EXPECT_EQ(mc.contracts().at(cid).state, post);
    EXPECT_FALSE(mc.contracts().at(cid).active);
    EXPECT_EQ(mc.it(id).phase, Phase::settled);
    EXPECT_EQ(mc.total_value(), before);
}

TEST_F(MasterContractTest, settlement_even_split_neither)
{
    const auto id = deploy();
    const auto nodes = selected(id);
    std::vector<std::pair<NodeId, Digest>> moves;
    for (size_t i = 0; i < 10; ++i)
        moves.emplace_back(nodes[i], Digest{i < 5 ? seed_a : seed_b, post.root()});
    play(id, moves);
    ASSERT_TRUE(close(id).accepted());
    const auto report = mc.settle(id, {make_witness(nodes[0], pre, post)}, 30);
    EXPECT_TRUE(report.rewarded.empty());
    EXPECT_TRUE(report.forfeited.empty());
    for (size_t i = 0; i < 10; ++i)
    {
        EXPECT_EQ(balance(nodes[i]), 0);
        EXPECT_EQ(deposit(nodes[i]), 200);
    }
}

TEST_F(MasterContractTest, wrong_root_in_early_round_forfeits)
{
    const auto id = deploy();
    auto nodes = selected(id);
    std::vector<std::pair<NodeId, Digest>> moves;
    for (size_t i = 0; i < 6; ++i)
        moves.emplace_back(nodes[i], Digest{seed_a, (i < 3 ? post : wrong).root()});
    play(id, moves);
    ASSERT_EQ(close(id).kind, Decision::Kind::continue_);
    const std::vector<NodeId> wrong_nodes{nodes[3], nodes[4], nodes[5]};

    nodes = selected(id);
    moves.clear();
    for (size_t i = 0; i < 10; ++i)
        moves.emplace_back(nodes[i], Digest{seed_b, post.root()});
    play(id, moves);
    const auto d = close(id);
    ASSERT_TRUE(d.accepted());
    EXPECT_EQ(d.root, post.root());

    const auto report = mc.settle(id, {make_witness(nodes[0], pre, post)}, 60);
    for (const auto n : wrong_nodes)
        EXPECT_NE(std::find(report.forfeited.begin(), report.forfeited.end(), std::make_pair(n, uint64_t{1})),
            report.forfeited.end())
            << n;
    EXPECT_EQ(report.final_round, 2u);
}

TEST_F(MasterContractTest, missing_witness_settles_money_then_throws)
{
    const auto id = deploy();
    const auto nodes = selected(id);
    std::vector<std::pair<NodeId, Digest>> moves;
    for (size_t i = 0; i < 10; ++i)
        moves.emplace_back(nodes[i], Digest{seed_a, post.root()});
    play(id, moves);
    ASSERT_TRUE(close(id).accepted());
    const auto before = mc.total_value();
    // A witness for a different post-state does not reconstruct the winner.
    try
    {
        mc.settle(id, {make_witness(nodes[0], pre, wrong)}, 30);
        FAIL();
    }
    catch (const ProtocolError& e)
    {
        EXPECT_EQ(e.code(), ProtocolErrc::missing_state_witness);
    }
    EXPECT_EQ(mc.contracts().at(cid).state, pre);
    EXPECT_EQ(mc.it(id).phase, Phase::settled);
    EXPECT_EQ(balance(nodes[0]), mc.policy().reward);
    EXPECT_EQ(mc.total_value(), before);
}

TEST(Policy, validation)
{
    EXPECT_NO_THROW(SettlementPolicy{}.validate());
    EXPECT_THROW((SettlementPolicy{0.5, 0.25}).validate(), ProtocolError);
    EXPECT_THROW((SettlementPolicy{0.6, 0.6}).validate(), ProtocolError);
    EXPECT_THROW((SettlementPolicy{0.6, 0.0}).validate(), ProtocolError);
}

Scenario small_scenario(const std::string& mix = "")
{
    std::string text = R"({
        "name": "unit", "seed": 17, "sp_size": 40,
        "consensus": {"f_max": 0.3, "q": 0.5, "beta": 0.01, "max_rounds": 30},
        "creators": {"alice": 100000000},
        "contracts": [{"name": "a", "program": "compute:20"}, {"name": "b", "program": "compute:7"}],
        "transactions": [
            {"contract": "a", "creator": "alice", "gas_limit": 1000000, "block": 0},
            {"contract": "a", "creator": "alice", "gas_limit": 1000000, "block": 1},
            {"contract": "b", "creator": "alice", "gas_limit": 1000000, "data": "00ff", "block": 3}
        ])";
    if (!mix.empty())
        text += R"(, "strategies": {"default": "honest", "mix": )" + mix + "}";
    text += "}";
    return parse_scenario(text);
}

TEST(Scenario, honest_run_settles_every_it_correctly)
{
    const auto result = run_scenario(small_scenario());
    ASSERT_EQ(result.outcomes.size(), 3u);
    for (const auto& o : result.outcomes)
    {
        EXPECT_TRUE(o.accepted) << o.id;
        EXPECT_TRUE(o.correct) << o.id;
    }
    EXPECT_EQ(result.initial_value, result.final_value);
    EXPECT_EQ(result.rejected_messages, 0u);
}

TEST(Scenario, round_trips_through_json)
{
    const auto s = small_scenario(R"([{"strategy": "byzantine", "fraction": 0.2}])");
    const auto again = parse_scenario(scenario_to_json(s).dump());
    EXPECT_EQ(scenario_to_json(again), scenario_to_json(s));
}

TEST(Scenario, field_level_errors)
{
    try
    {
        parse_scenario(R"({"policy": {"th1": 0.4}})");
        FAIL();
    }
    catch (const ProtocolError& e)
    {
        EXPECT_EQ(e.code(), ProtocolErrc::config_error);
        EXPECT_NE(std::string{e.what()}.find("policy"), std::string::npos);
    }
    try
    {
        parse_scenario(R"({"sp_size": "many"})");
        FAIL();
    }
    catch (const ProtocolError& e)
    {
        EXPECT_NE(std::string{e.what()}.find("sp_size"), std::string::npos);
    }
    try
    {
        parse_scenario(R"({"contracts": [{"name": "a", "program": "compute:1"}],
            "transactions": [{"contract": "zz", "creator": "x", "gas_limit": 5}]})");
        FAIL();
    }
    catch (const ProtocolError& e)
    {
        EXPECT_NE(std::string{e.what()}.find("transactions[].contract"), std::string::npos);
    }
}

TEST(Scenario, chaos_messages_all_rejected_and_value_conserved)
{
    const auto result = run_scenario(small_scenario(R"([{"strategy": "chaos", "fraction": 0.2}])"));
    EXPECT_GT(result.rejected_messages, 0u);
    EXPECT_EQ(result.initial_value, result.final_value);
    for (const auto& o : result.outcomes)
        EXPECT_TRUE(o.correct) << o.id;
}

TEST(Scenario, failed_freeload_guesses_are_punished)
{
    uint64_t attempts = 0;
    uint64_t unpunished = 0;
    for (uint64_t seed = 1; seed <= 20; ++seed)
    {
        auto s = small_scenario(
            R"([{"strategy": "freeloader:0.3", "fraction": 0.2}, {"strategy": "byzantine", "fraction": 0.35}])");
        s.seed = Hash256::from_u64(seed);
        // A strong minority forces extra rounds; q = 0.5 keeps winning-root groups
        // large enough that a lone wrong seed falls below th2.
        s.consensus.f_max = 0.45;
        s.consensus.q = 0.5;
        const auto result = run_scenario(s);
        attempts += result.freeload_attempts;
        unpunished += result.freeload_failed_unpunished;
    }
    EXPECT_GT(attempts, 10u);
    EXPECT_EQ(unpunished, 0u);
}

TEST(Replay, identical_log_replays)
{
    const auto result = run_scenario(small_scenario(R"([{"strategy": "multi:3", "fraction": 0.2}])"));
    const auto report = replay(result.log.text());
    EXPECT_TRUE(report.identical);
    EXPECT_TRUE(report.version_compatible);
    EXPECT_EQ(report.lines_compared, result.log.lines().size());
}

TEST(Replay, flipped_commitment_byte_is_located)
{
    const auto result = run_scenario(small_scenario());
    auto lines = result.log.lines();
    size_t target = 0;
    for (size_t i = 0; i < lines.size(); ++i)
        if (lines[i].find("\"event\":\"commit\"") != std::string::npos)
        {
            target = i;
            break;
        }
    ASSERT_GT(target, 0u);
    auto& line = lines[target];
    const auto pos = line.find("\"se\":\"") + 6;
    line[pos] = line[pos] == '0' ? '1' : '0';
    std::string text;
    for (const auto& l : lines)
        text += l + "\n";
    const auto report = replay(text);
    EXPECT_FALSE(report.identical);
    ASSERT_TRUE(report.first_divergence);
    EXPECT_EQ(*report.first_divergence, target);
}

TEST(Replay, reports_version_compatibility)
{
    const auto result = run_scenario(small_scenario());
    auto lines = result.log.lines();
    auto header = nlohmann::json::parse(lines[0]);
    header["version"] = "2.0.0";
    lines[0] = header.dump();
    std::string text;
    for (const auto& l : lines)
        text += l + "\n";
    const auto report = replay(text);
    EXPECT_FALSE(report.version_compatible);
    EXPECT_EQ(report.logged_version, "2.0.0");
    EXPECT_FALSE(report.identical);
    EXPECT_EQ(report.first_divergence, 0u);
}
}  // namespace
