// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cicsim/adversary.hpp>
#include <cicsim/miracle.hpp>
#include <cicsim/randomness.hpp>
#include <cicsim/rice.hpp>
#include <nlohmann/json.hpp>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cicsim
{
inline constexpr std::string_view log_format_version = "1.0.0";

using Amount = int64_t;
using Block = uint64_t;
using NodeId = uint64_t;
using ItId = uint64_t;

enum class ProtocolErrc
{
    insufficient_escrow,
    queue_order_violation,
    outside_window,
    not_in_sp,
    duplicate_commit,
    commit_mismatch,
    invalid_sortition,
    no_commitment,
    duplicate_reveal,
    unknown_it,
    missing_state_witness,
    conservation_violated,
    config_error,
    divergence_detected,
};

std::string_view to_string(ProtocolErrc code) noexcept;

class ProtocolError : public std::runtime_error
{
public:
    ProtocolError(ProtocolErrc code, const std::string& what)
      : std::runtime_error{what}, m_code{code}
    {}
    [[nodiscard]] ProtocolErrc code() const noexcept { return m_code; }

private:
    ProtocolErrc m_code;
};

/// Block-count windows. Each window is inclusive at both ends.
struct WindowConfig
{
    uint64_t gas_per_block = 1'000'000;
    uint64_t src_slack = 2;
    uint64_t w_buf = 2;
    uint64_t w_sr = 4;

    /// ceil(gas_limit / gas_per_block) + src_slack.
    [[nodiscard]] uint64_t w_src(uint64_t gas_limit) const noexcept
    {
        return (gas_limit + gas_per_block - 1) / gas_per_block + src_slack;
    }
};

struct ChainConfig
{
    /// Messages included per block; 0 means unlimited. Overflow moves to the
    /// next block, lower node ids first.
    uint32_t block_capacity = 0;
    /// Each message is delayed by a uniform 0..max extra blocks.
    uint32_t max_inclusion_delay = 0;
};

struct SettlementPolicy
{
    double th1 = 0.60;
    double th2 = 0.25;
    Amount reward = 10;    ///< R per rewarded digest
    Amount deposit = 50;   ///< D forfeited per offence
    Amount d_min = 100;    ///< fixed-cost part of the creator escrow

    /// Throws ProtocolError(config_error) unless 0 < th2 < th1 <= 1 and th1 > 0.5.
    void validate() const;
};

/// An intensive transaction. The nonce is assigned at deployment.
struct Transaction
{
    Hash256 tid;
    uint32_t fun_id = 0;
    bytes data;
    uint64_t gas_limit = 0;
    Amount gas_price = 1;
    std::optional<Hash256> nonce;
};

struct NodeRecord
{
    NodeKeys keys;
    Amount deposit = 0;
    Amount balance = 0;
    Strategy role;
    bool in_sp = true;
};

/// The value revealed in S3 and its commitment H(seed ‖ root ‖ o ‖ proof).
struct Reveal
{
    Digest digest;
    SortResult sort;
};

Hash256 commitment(const Digest& digest, const SortResult& sort);

enum class Phase
{
    committing,
    buffering,
    revealing,
    deciding,
    settled,
};

std::string_view to_string(Phase p) noexcept;

struct RoundRecord
{
    uint64_t round = 1;
    Hash256 nonce;
    Block start = 0;
    Block commit_end = 0;
    Block buffer_end = 0;
    Block reveal_end = 0;
    std::map<NodeId, Hash256> commitments;
    std::map<NodeId, Reveal> reveals;
};

struct ItRecord
{
    ItId id = 0;
    Hash256 cid;
    Transaction tx;
    std::string creator;
    Amount escrow = 0;
    Hash256 nonce;
    uint64_t nonce_counter = 0;
    CicState pre_state;
    std::vector<RoundRecord> rounds;  ///< rounds[j − 1] is round j
    LikelihoodTable likelihoods;
    Phase phase = Phase::committing;
    std::optional<Hash256> winning_root;

    [[nodiscard]] RoundRecord& current() { return rounds.back(); }
    [[nodiscard]] const RoundRecord& current() const { return rounds.back(); }
    [[nodiscard]] Phase phase_at(Block b) const noexcept;
};

/// hash(it_nonce ‖ be64(round)).
Hash256 round_nonce(const Hash256& it_nonce, uint64_t round);

/// Merkle paths of every key the execution modified. The contract checks
/// each path and that applying them to the pre-state yields the winning root.
struct StateWitness
{
    NodeId node = 0;
    std::vector<InclusionProof> proofs;
};

StateWitness make_witness(NodeId node, const CicState& pre, const CicState& post);

struct SettlementReport
{
    Hash256 winning_root;
    uint64_t final_round = 0;
    std::vector<std::pair<NodeId, uint64_t>> rewarded;   ///< (node, round)
    std::vector<std::pair<NodeId, uint64_t>> forfeited;  ///< (node, round)
    std::optional<NodeId> witness_node;
    Amount refund = 0;
};

/// Append-only JSON-lines audit trail. Keys inside each line are sorted.
class EventLog
{
public:
    void emit(Block block, std::string_view type, nlohmann::json payload);
    void header(nlohmann::json header);

    [[nodiscard]] const std::vector<std::string>& lines() const noexcept { return m_lines; }
    [[nodiscard]] std::string text() const;

private:
    std::vector<std::string> m_lines;
};

struct CicRecord
{
    std::string name;
    Program program;
    CicState state;
    std::deque<std::pair<Transaction, std::string>> queue;  ///< (tx, creator)
    std::optional<ItId> active;
};

/// The on-chain state machine. All value lives in node balances and
/// deposits, creator balances, IT escrows, the treasury and the burn sink.
class MasterContract
{
public:
    MasterContract(ConsensusParams params, SettlementPolicy policy, WindowConfig windows,
        EventLog& log);

    NodeId add_node(const NodeKeys& keys, Amount deposit, Amount balance, Strategy role);
    void add_creator(const std::string& name, Amount balance);
    void add_treasury(Amount amount) { m_treasury += amount; }
    Hash256 add_contract(const std::string& name, Program program, CicState state);

    /// On-chain inclusion of an IT into its contract queue.
    void enqueue(const Hash256& cid, Transaction tx, const std::string& creator, Block block);

    /// S1: moves the escrow, draws the nonce and opens round 1.
    ItId deploy_it(const Hash256& cid, Block block, RandomSource& randomness);

    /// S3 commit. Throws outside_window, not_in_sp, duplicate_commit, unknown_it.
    void submit_commit(ItId it, NodeId node, const Hash256& se, Block block);

    /// S3 reveal. Throws outside_window, no_commitment, commit_mismatch,
    /// invalid_sortition, duplicate_reveal, unknown_it.
    void submit_reveal(ItId it, NodeId node, const Digest& digest, const SortResult& sort, Block block);

    /// S4 at the end of the reveal window: forfeits non-revealers, runs one
    /// consensus round and either opens the next round at block + 1 or moves
    /// the IT to deciding.
    Decision close_round(ItId it, Block block);

    /// S5. Applies the first valid witness in the given order; throws
    /// missing_state_witness (after the monetary settlement) if none is valid.
    SettlementReport settle(ItId it, const std::vector<StateWitness>& witnesses, Block block);

    /// Gives up on an IT that did not converge: refunds the escrow less d_min.
    void abandon(ItId it, Block block);

    [[nodiscard]] Amount total_value() const;
    [[nodiscard]] Amount burned() const noexcept { return m_burned; }
    [[nodiscard]] Amount treasury() const noexcept { return m_treasury; }

    [[nodiscard]] const std::map<NodeId, NodeRecord>& nodes() const noexcept { return m_nodes; }
    [[nodiscard]] const std::map<std::string, Amount>& creators() const noexcept { return m_creators; }
    [[nodiscard]] const std::map<Hash256, CicRecord>& contracts() const noexcept { return m_contracts; }
    [[nodiscard]] const ItRecord& it(ItId id) const;
    [[nodiscard]] const std::vector<ItRecord>& its() const noexcept { return m_its; }
    [[nodiscard]] const ConsensusParams& params() const noexcept { return m_params; }
    [[nodiscard]] const SettlementPolicy& policy() const noexcept { return m_policy; }
    [[nodiscard]] const WindowConfig& windows() const noexcept { return m_windows; }
    [[nodiscard]] const KeyRegistry& registry() const noexcept { return m_registry; }

private:
    ItRecord& mutable_it(ItId id);
    void open_round(ItRecord& it, uint64_t round, Block start);
    void forfeit(NodeId node, ItId it, uint64_t round, std::string_view reason, Block block);
    Amount pay_reward(ItRecord& it, NodeId node, uint64_t round, Block block);
    void finish(ItRecord& it, Block block);

    ConsensusParams m_params;
    double m_threshold;
    SettlementPolicy m_policy;
    WindowConfig m_windows;
    EventLog& m_log;

    std::map<NodeId, NodeRecord> m_nodes;
    std::map<std::string, Amount> m_creators;
    std::map<Hash256, CicRecord> m_contracts;
    std::vector<ItRecord> m_its;
    KeyRegistry m_registry;
    Amount m_treasury = 0;
    Amount m_burned = 0;
};

struct ContractSpec
{
    std::string name;
    std::string program;  ///< "compute:<eta>" or an assembly file path
    std::optional<CicState> storage;
};

struct TxSpec
{
    std::string contract;
    std::string creator;
    bytes data;
    uint64_t gas_limit = 0;
    Amount gas_price = 1;
    Block block = 0;
};

/// A complete, self-describing protocol run.
struct Scenario
{
    std::string name = "scenario";
    Hash256 seed;
    uint64_t sp_size = 40;
    Amount node_deposit = 1000;
    Amount node_balance = 0;
    Amount treasury = 0;
    std::string default_strategy = "honest";
    std::vector<std::pair<std::string, double>> strategy_mix;  ///< (strategy, fraction)
    std::map<NodeId, std::string> node_strategies;
    ConsensusParams consensus{40, 0.3, 0.5, 1e-2, 30};
    SettlementPolicy policy;
    WindowConfig windows;
    ChainConfig chain;
    std::map<std::string, Amount> creators;
    std::vector<ContractSpec> contracts;
    std::vector<TxSpec> transactions;
    Block max_blocks = 100'000;
};

/// Throws ProtocolError(config_error) naming the offending field.
Scenario parse_scenario(std::string_view json_text);
nlohmann::json scenario_to_json(const Scenario& s);

/// Per-IT outcome of a run.
struct ItOutcome
{
    ItId id = 0;
    std::string contract;
    bool deployed = false;
    bool accepted = false;
    bool correct = false;  ///< accepted root equals the honest execution root
    uint64_t rounds = 0;
    Block deployed_at = 0;
    Block finished_at = 0;
};

struct RunResult
{
    EventLog log;
    std::vector<ItOutcome> outcomes;
    Amount initial_value = 0;
    Amount final_value = 0;
    Amount burned = 0;
    uint64_t accepted_messages = 0;
    uint64_t rejected_messages = 0;
    uint64_t freeload_attempts = 0;
    uint64_t freeload_correct_guesses = 0;
    uint64_t freeload_failed_unpunished = 0;
    Block blocks = 0;
};

/// Runs the scenario to completion on the block clock. Value conservation
/// is checked after every block; a violation throws conservation_violated.
RunResult run_scenario(const Scenario& scenario);

struct ReplayReport
{
    bool identical = false;
    bool version_compatible = true;
    std::string logged_version;
    size_t lines_compared = 0;
    std::optional<size_t> first_divergence;  ///< 0-based line index
    std::string expected_line;
    std::string actual_line;
};

/// Re-runs the scenario embedded in the log header and compares the whole
/// event stream byte for byte.
ReplayReport replay(std::string_view log_text);
}  // namespace cicsim
