// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cicsim/protocol.hpp>
#include <algorithm>

namespace cicsim
{
std::string_view to_string(ProtocolErrc code) noexcept
{
    switch (code)
    {
    case ProtocolErrc::insufficient_escrow:
        return "insufficient_escrow";
    case ProtocolErrc::queue_order_violation:
        return "queue_order_violation";
    case ProtocolErrc::outside_window:
        return "outside_window";
    case ProtocolErrc::not_in_sp:
        return "not_in_sp";
    case ProtocolErrc::duplicate_commit:
        return "duplicate_commit";
    case ProtocolErrc::commit_mismatch:
        return "commit_mismatch";
    case ProtocolErrc::invalid_sortition:
        return "invalid_sortition";
    case ProtocolErrc::no_commitment:
        return "no_commitment";
    case ProtocolErrc::duplicate_reveal:
        return "duplicate_reveal";
    case ProtocolErrc::unknown_it:
        return "unknown_it";
    case ProtocolErrc::missing_state_witness:
        return "missing_state_witness";
    case ProtocolErrc::conservation_violated:
        return "conservation_violated";
    case ProtocolErrc::config_error:
        return "config_error";
    case ProtocolErrc::divergence_detected:
        return "divergence_detected";
    }
    return "unknown";
}

std::string_view to_string(Phase p) noexcept
{
    switch (p)
    {
    case Phase::committing:
        return "committing";
    case Phase::buffering:
        return "buffering";
    case Phase::revealing:
        return "revealing";
    case Phase::deciding:
        return "deciding";
    case Phase::settled:
        return "settled";
    }
    return "unknown";
}

void SettlementPolicy::validate() const
{
    if (!(th2 > 0 && th2 < th1 && th1 <= 1 && th1 > 0.5))
        throw ProtocolError{ProtocolErrc::config_error,
            "policy: need 0 < th2 < th1 <= 1 and th1 > 0.5"};
    if (reward < 0 || deposit < 0 || d_min < 0)
        throw ProtocolError{ProtocolErrc::config_error, "policy: amounts must be non-negative"};
}

Hash256 commitment(const Digest& digest, const SortResult& sort)
{
    return sha256(
        {as_bytes(digest.seed), as_bytes(digest.root), as_bytes(sort.o), as_bytes(sort.proof)});
}

Hash256 round_nonce(const Hash256& it_nonce, uint64_t round)
{
    const auto r = be64(round);
    return sha256({as_bytes(it_nonce), r});
}

Phase ItRecord::phase_at(Block b) const noexcept
{
    if (phase == Phase::deciding || phase == Phase::settled)
        return phase;
    const auto& r = rounds.back();
    if (b < r.start)
        return Phase::settled;
    if (b <= r.commit_end)
        return Phase::committing;
    if (b <= r.buffer_end)
        return Phase::buffering;
    if (b <= r.reveal_end)
        return Phase::revealing;
    return Phase::deciding;
}

StateWitness make_witness(NodeId node, const CicState& pre, const CicState& post)
{
    StateWitness w{node, {}};
    for (const auto& [k, v] : post.storage())
        if (pre.get(k) != v)
            w.proofs.push_back(prove_inclusion(post, k));
    return w;
}

void EventLog::emit(Block block, std::string_view type, nlohmann::json payload)
{
    payload["block"] = block;
    payload["event"] = type;
    m_lines.push_back(payload.dump());
}

void EventLog::header(nlohmann::json header)
{
    header["event"] = "header";
    m_lines.insert(m_lines.begin(), header.dump());
}

std::string EventLog::text() const
{
    std::string out;
    for (const auto& l : m_lines)
    {
        out += l;
        out += '\n';
    }
    return out;
}

MasterContract::MasterContract(
    ConsensusParams params, SettlementPolicy policy, WindowConfig windows, EventLog& log)
  : m_params{params},
    m_threshold{threshold(params)},
    m_policy{policy},
    m_windows{windows},
    m_log{log}
{
    m_policy.validate();
    if (m_windows.gas_per_block == 0 || m_windows.w_sr == 0)
        throw ProtocolError{ProtocolErrc::config_error, "windows: gas_per_block and sr must be > 0"};
}

NodeId MasterContract::add_node(const NodeKeys& keys, Amount deposit, Amount balance, Strategy role)
{
    m_registry.add(keys);
    m_nodes[keys.node_id] = NodeRecord{keys, deposit, balance, role, true};
    return keys.node_id;
}

void MasterContract::add_creator(const std::string& name, Amount balance)
{
    m_creators[name] += balance;
}

Hash256 MasterContract::add_contract(const std::string& name, Program program, CicState state)
{
    const auto cid = state.cid();
    if (m_contracts.count(cid))
        throw ProtocolError{ProtocolErrc::config_error, "duplicate contract '" + name + "'"};
    m_contracts[cid] = CicRecord{name, std::move(program), std::move(state), {}, std::nullopt};
    return cid;
}

const ItRecord& MasterContract::it(ItId id) const
{
    if (id >= m_its.size())
        throw ProtocolError{ProtocolErrc::unknown_it, "unknown IT " + std::to_string(id)};
    return m_its[id];
}

ItRecord& MasterContract::mutable_it(ItId id)
{
    if (id >= m_its.size())
        throw ProtocolError{ProtocolErrc::unknown_it, "unknown IT " + std::to_string(id)};
    return m_its[id];
}

void MasterContract::enqueue(const Hash256& cid, Transaction tx, const std::string& creator, Block block)
{
    auto c = m_contracts.find(cid);
    if (c == m_contracts.end())
        throw ProtocolError{ProtocolErrc::config_error, "unknown contract " + cid.hex()};
    m_log.emit(block, "queued",
        {{"contract", c->second.name}, {"tid", tx.tid.hex()}, {"creator", creator},
            {"gas_limit", tx.gas_limit}, {"gas_price", tx.gas_price}});
    c->second.queue.emplace_back(std::move(tx), creator);
}

ItId MasterContract::deploy_it(const Hash256& cid, Block block, RandomSource& randomness)
{
    auto c = m_contracts.find(cid);
    if (c == m_contracts.end())
        throw ProtocolError{ProtocolErrc::config_error, "unknown contract " + cid.hex()};
    auto& contract = c->second;
    if (contract.active || contract.queue.empty())
        throw ProtocolError{ProtocolErrc::queue_order_violation,
            "contract '" + contract.name + "' has no deployable queue head"};

    auto [tx, creator] = contract.queue.front();
    const auto need = m_policy.d_min + tx.gas_price * static_cast<Amount>(tx.gas_limit);
    auto& funds = m_creators[creator];
    if (funds < need)
    {
        contract.queue.pop_front();
        m_log.emit(block, "it_rejected",
            {{"contract", contract.name}, {"tid", tx.tid.hex()},
                {"error", to_string(ProtocolErrc::insufficient_escrow)}, {"need", need},
                {"available", funds}});
        throw ProtocolError{ProtocolErrc::insufficient_escrow,
            "creator '" + creator + "' cannot cover escrow " + std::to_string(need)};
    }
    funds -= need;

    // The nonce is drawn at inclusion, never earlier.
    const auto counter = randomness.counter();
    const auto nonce = randomness.next();
    tx.nonce = nonce;

    ItRecord it;
    it.id = m_its.size();
    it.cid = cid;
    it.tx = tx;
    it.creator = creator;
    it.escrow = need;
    it.nonce = nonce;
    it.nonce_counter = counter;
    it.pre_state = contract.state;
    contract.active = it.id;
    m_log.emit(block, "deploy",
        {{"it", it.id}, {"contract", contract.name}, {"tid", tx.tid.hex()}, {"nonce", nonce.hex()},
            {"counter", counter}, {"escrow", need}, {"w_src", m_windows.w_src(tx.gas_limit)}});
    m_its.push_back(std::move(it));
    open_round(m_its.back(), 1, block);
    return m_its.back().id;
}

void MasterContract::open_round(ItRecord& it, uint64_t round, Block start)
{
    RoundRecord r;
    r.round = round;
    r.nonce = round_nonce(it.nonce, round);
    r.start = start;
    r.commit_end = start + m_windows.w_src(it.tx.gas_limit) - 1;
    r.buffer_end = r.commit_end + m_windows.w_buf;
    r.reveal_end = r.buffer_end + m_windows.w_sr;
    it.phase = Phase::committing;
    m_log.emit(start, "round_open",
        {{"it", it.id}, {"round", round}, {"nonce", r.nonce.hex()}, {"commit_end", r.commit_end},
            {"buffer_end", r.buffer_end}, {"reveal_end", r.reveal_end}});
    it.rounds.push_back(std::move(r));
}

void MasterContract::submit_commit(ItId id, NodeId node, const Hash256& se, Block block)
{
    auto& it = mutable_it(id);
    const auto n = m_nodes.find(node);
    if (n == m_nodes.end() || !n->second.in_sp)
        throw ProtocolError{ProtocolErrc::not_in_sp, "node " + std::to_string(node) + " not in SP"};
    if (it.phase_at(block) != Phase::committing)
        throw ProtocolError{ProtocolErrc::outside_window,
            "commit at block " + std::to_string(block) + " outside the commitment window"};
    auto& r = it.current();
    if (!r.commitments.emplace(node, se).second)
        throw ProtocolError{ProtocolErrc::duplicate_commit,
            "node " + std::to_string(node) + " already committed"};
    m_log.emit(block, "commit", {{"it", id}, {"round", r.round}, {"node", node}, {"se", se.hex()}});
}

void MasterContract::submit_reveal(
    ItId id, NodeId node, const Digest& digest, const SortResult& sort, Block block)
{
    auto& it = mutable_it(id);
    if (it.phase_at(block) != Phase::revealing)
        throw ProtocolError{ProtocolErrc::outside_window,
            "reveal at block " + std::to_string(block) + " outside the release window"};
    auto& r = it.current();
    const auto c = r.commitments.find(node);
    if (c == r.commitments.end())
        throw ProtocolError{ProtocolErrc::no_commitment,
            "node " + std::to_string(node) + " has no commitment"};
    if (r.reveals.count(node))
        throw ProtocolError{ProtocolErrc::duplicate_reveal,
            "node " + std::to_string(node) + " already revealed"};
    if (commitment(digest, sort) != c->second)
        throw ProtocolError{ProtocolErrc::commit_mismatch,
            "reveal of node " + std::to_string(node) + " does not open its commitment"};
    if (!m_registry.verify(m_nodes.at(node).keys.pk, r.nonce, m_params.q, sort))
        throw ProtocolError{ProtocolErrc::invalid_sortition,
            "node " + std::to_string(node) + " sortition proof rejected"};
    r.reveals.emplace(node, Reveal{digest, sort});
    m_log.emit(block, "reveal",
        {{"it", id}, {"round", r.round}, {"node", node}, {"seed", digest.seed.hex()},
            {"root", digest.root.hex()}, {"o", sort.o.hex()}, {"proof", sort.proof.hex()}});
}

void MasterContract::forfeit(
    NodeId node, ItId it, uint64_t round, std::string_view reason, Block block)
{
    auto& n = m_nodes.at(node);
    const auto amount = std::min(m_policy.deposit, n.deposit);
    n.deposit -= amount;
    m_burned += amount;
    m_log.emit(block, "forfeit",
        {{"it", it}, {"round", round}, {"node", node}, {"amount", amount}, {"reason", reason}});
    if (n.deposit == 0 && n.in_sp)
    {
        n.in_sp = false;
        m_log.emit(block, "node_removed", {{"node", node}, {"reason", "deposit_exhausted"}});
    }
}

Decision MasterContract::close_round(ItId id, Block block)
{
    auto& it = mutable_it(id);
    auto& r = it.current();
    if (it.phase == Phase::deciding || it.phase == Phase::settled || block < r.reveal_end)
        throw ProtocolError{ProtocolErrc::outside_window,
            "round " + std::to_string(r.round) + " cannot close at block " + std::to_string(block)};

    for (const auto& [node, _] : r.commitments)
    {
        if (r.reveals.count(node))
            continue;
        forfeit(node, id, r.round, "no_reveal", block);
        auto& n = m_nodes.at(node);
        if (n.in_sp)
        {
            n.in_sp = false;
            m_log.emit(block, "node_removed", {{"node", node}, {"reason", "no_reveal"}});
        }
    }

    RoundTally tally{r.round, {}};
    for (const auto& [_, rv] : r.reveals)
        tally.add(rv.digest.root);
    it.likelihoods.apply(tally);
    const auto decision = step(it.likelihoods, m_threshold, m_params.max_rounds);

    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [root, c] : tally.counts)
        counts[root.hex()] = c;
    nlohmann::json likelihoods = nlohmann::json::object();
    for (const auto& [root, L] : it.likelihoods.likelihoods())
        likelihoods[root.hex()] = L;
    std::string_view kind = decision.kind == Decision::Kind::accept   ? "accept"
                            : decision.kind == Decision::Kind::continue_ ? "continue"
                                                                          : "no_convergence";
    m_log.emit(block, "round_closed",
        {{"it", id}, {"round", r.round}, {"counts", counts}, {"total", tally.total()},
            {"likelihoods", likelihoods}, {"decision", kind}});

    switch (decision.kind)
    {
    case Decision::Kind::continue_:
        open_round(it, r.round + 1, block + 1);
        break;
    case Decision::Kind::accept:
        it.phase = Phase::deciding;
        it.winning_root = decision.root;
        break;
    case Decision::Kind::no_convergence:
        it.phase = Phase::deciding;
        break;
    }
    return decision;
}

Amount MasterContract::pay_reward(ItRecord& it, NodeId node, uint64_t round, Block block)
{
    auto want = m_policy.reward;
    const auto from_escrow = std::min(want, it.escrow);
    it.escrow -= from_escrow;
    want -= from_escrow;
    const auto from_treasury = std::min(want, m_treasury);
    m_treasury -= from_treasury;
    const auto paid = from_escrow + from_treasury;
    m_nodes.at(node).balance += paid;
    m_log.emit(block, "reward",
        {{"it", it.id}, {"round", round}, {"node", node}, {"amount", paid},
            {"from_escrow", from_escrow}, {"from_treasury", from_treasury},
            {"shortfall", m_policy.reward - paid}});
    return paid;
}

void MasterContract::finish(ItRecord& it, Block block)
{
    const auto fee = std::min(m_policy.d_min, it.escrow);
    it.escrow -= fee;
    m_treasury += fee;
    const auto refund = it.escrow;
    m_creators[it.creator] += refund;
    it.escrow = 0;
    m_log.emit(block, "refund", {{"it", it.id}, {"creator", it.creator}, {"amount", refund},
                                    {"fee", fee}});

    auto& contract = m_contracts.at(it.cid);
    contract.queue.pop_front();
    contract.active.reset();
    for (auto& r : it.rounds)
    {
        r.commitments.clear();
        r.reveals.clear();
    }
    it.phase = Phase::settled;
    m_log.emit(block, "cleanup", {{"it", it.id}});
}

SettlementReport MasterContract::settle(
    ItId id, const std::vector<StateWitness>& witnesses, Block block)
{
    auto& it = mutable_it(id);
    if (it.phase != Phase::deciding || !it.winning_root)
        throw ProtocolError{ProtocolErrc::outside_window, "IT " + std::to_string(id) + " not decided"};
    const auto winner = *it.winning_root;

    SettlementReport report;
    report.winning_root = winner;
    report.final_round = it.rounds.size();
    for (const auto& r : it.rounds)
    {
        std::map<Hash256, uint64_t> seed_counts;
        uint64_t winning_total = 0;
        for (const auto& [_, rv] : r.reveals)
            if (rv.digest.root == winner)
            {
                ++seed_counts[rv.digest.seed];
                ++winning_total;
            }
        for (const auto& [node, rv] : r.reveals)
        {
            if (rv.digest.root != winner)
            {
                forfeit(node, id, r.round, "wrong_root", block);
                report.forfeited.emplace_back(node, r.round);
                continue;
            }
            const auto frac = static_cast<double>(seed_counts[rv.digest.seed]) /
                              static_cast<double>(winning_total);
            if (frac > m_policy.th1)
            {
                pay_reward(it, node, r.round, block);
                report.rewarded.emplace_back(node, r.round);
            }
            else if (frac < m_policy.th2)
            {
                forfeit(node, id, r.round, "minority_seed", block);
                report.forfeited.emplace_back(node, r.round);
            }
        }
    }

    auto& contract = m_contracts.at(it.cid);
    for (const auto& w : witnesses)
    {
        auto candidate = it.pre_state;
        bool valid = true;
        for (const auto& p : w.proofs)
        {
            if (!verify_inclusion(p, winner) || p.cid != candidate.cid() ||
                p.code != candidate.code())
            {
                valid = false;
                break;
            }
            candidate.put(p.key, p.value);
        }
        if (!valid || candidate.root() != winner)
            continue;
        contract.state = std::move(candidate);
        report.witness_node = w.node;
        m_log.emit(block, "state_update",
            {{"it", id}, {"contract", contract.name}, {"root", winner.hex()}, {"node", w.node},
                {"keys", w.proofs.size()}});
        break;
    }

    report.refund = std::max<Amount>(0, it.escrow - std::min(m_policy.d_min, it.escrow));
    m_log.emit(block, "settled",
        {{"it", id}, {"root", winner.hex()}, {"rounds", report.final_round},
            {"rewarded", report.rewarded.size()}, {"forfeited", report.forfeited.size()}});
    finish(it, block);
    if (!report.witness_node)
    {
        m_log.emit(block, "missing_state_witness", {{"it", id}});
        throw ProtocolError{ProtocolErrc::missing_state_witness,
            "no valid state witness for IT " + std::to_string(id)};
    }
    return report;
}

void MasterContract::abandon(ItId id, Block block)
{
    auto& it = mutable_it(id);
    if (it.phase != Phase::deciding || it.winning_root)
        throw ProtocolError{ProtocolErrc::outside_window,
            "IT " + std::to_string(id) + " is not an undecided IT"};
    m_log.emit(block, "abandoned", {{"it", id}, {"rounds", it.rounds.size()}});
    finish(it, block);
}

Amount MasterContract::total_value() const
{
    Amount total = m_treasury + m_burned;
    for (const auto& [_, n] : m_nodes)
        total += n.deposit + n.balance;
    for (const auto& [_, c] : m_creators)
        total += c;
    for (const auto& it : m_its)
        total += it.escrow;
    return total;
}
}  // namespace cicsim
