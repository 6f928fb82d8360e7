// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cicsim/protocol.hpp>
#include <algorithm>
#include <random>
#include <set>
#include <sstream>

namespace cicsim
{
namespace
{
using nlohmann::json;

constexpr ItId bogus_it = 1'000'000'000;

// Portable draws: the distributions in <random> are implementation-defined.
uint64_t uniform(std::mt19937_64& rng, uint64_t n)
{
    return n == 0 ? 0 : rng() % n;
}

double unit(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Hash256 tagged(std::string_view tag, const Hash256& a, uint64_t b)
{
    const auto n = be64(b);
    return sha256({bytes_view{reinterpret_cast<const uint8_t*>(tag.data()), tag.size()},
        as_bytes(a), n});
}

struct Message
{
    enum class Kind
    {
        commit,
        reveal,
    };
    Block at = 0;
    NodeId node = 0;
    uint64_t seq = 0;
    Kind kind = Kind::commit;
    ItId it = 0;
    Hash256 se;
    Reveal reveal;
};

struct FreeloadAttempt
{
    NodeId node;
    uint64_t round;
    bool correct;
};

struct ItView
{
    ItOutcome outcome;
    std::map<uint64_t, RiceRun> honest;  ///< by round
    bool execution_failed = false;
    std::optional<Hash256> honest_root;
    std::map<Hash256, CicState> states;           ///< root -> post-state some node holds
    std::map<NodeId, std::set<Hash256>> holders;  ///< node -> roots it can witness
    std::map<NodeId, Reveal> planned;             ///< current round
    std::set<std::pair<uint64_t, NodeId>> revealed;
    std::vector<FreeloadAttempt> freeloads;
};

class Simulation
{
public:
    explicit Simulation(const Scenario& s)
      : m_s{s},
        m_mc{s.consensus, s.policy, s.windows, m_result.log},
        m_nonces{s.seed},
        m_rng{make_rng(s.seed)}
    {
        m_result.log.header({{"version", log_format_version}, {"name", s.name},
            {"seed", s.seed.hex()}, {"scenario", scenario_to_json(s)}});
        setup();
    }

    RunResult run()
    {
        size_t next_tx = 0;
        Block b = 0;
        for (; b < m_s.max_blocks; ++b)
        {
            while (next_tx < m_txs.size() && m_txs[next_tx].block <= b)
            {
                const auto& t = m_txs[next_tx];
                Transaction tx{tagged("tx", m_s.seed, next_tx), 0, t.data, t.gas_limit, t.gas_price,
                    std::nullopt};
                m_mc.enqueue(m_cids.at(t.contract), std::move(tx), t.creator, b);
                ++next_tx;
            }
            deploy(b);
            generate(b);
            deliver(b);
            close(b);
            if (m_mc.total_value() != m_result.initial_value)
                throw ProtocolError{ProtocolErrc::conservation_violated,
                    "value changed at block " + std::to_string(b)};
            if (next_tx == m_txs.size() && idle())
                break;
        }
        if (b == m_s.max_blocks)
            m_result.log.emit(b, "halted", {{"reason", "max_blocks"}});
        m_result.blocks = std::min(b + 1, m_s.max_blocks);
        m_result.final_value = m_mc.total_value();
        m_result.burned = m_mc.burned();
        for (auto& [_, v] : m_its)
            m_result.outcomes.push_back(v.outcome);
        return std::move(m_result);
    }

private:
    static std::mt19937_64 make_rng(const Hash256& seed)
    {
        const auto h = tagged("simulator", seed, 0);
        std::seed_seq seq(h.bytes.begin(), h.bytes.end());
        return std::mt19937_64{seq};
    }

    void setup()
    {
        m_roles.assign(m_s.sp_size, Strategy::parse(m_s.default_strategy));
        std::vector<NodeId> order(m_s.sp_size);
        for (NodeId i = 0; i < m_s.sp_size; ++i)
            order[i] = i;
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[uniform(m_rng, i)]);
        size_t pos = 0;
        for (const auto& [tag, fraction] : m_s.strategy_mix)
        {
            const auto count = static_cast<size_t>(
                std::llround(fraction * static_cast<double>(m_s.sp_size)));
            for (size_t j = 0; j < count && pos < order.size(); ++j)
                m_roles[order[pos++]] = Strategy::parse(tag);
        }
        for (const auto& [id, tag] : m_s.node_strategies)
            m_roles[id] = Strategy::parse(tag);

        for (NodeId i = 0; i < m_s.sp_size; ++i)
            m_mc.add_node(derive_keys(m_s.seed, i), m_s.node_deposit, m_s.node_balance, m_roles[i]);
        for (const auto& [name, bal] : m_s.creators)
            m_mc.add_creator(name, bal);
        m_mc.add_treasury(m_s.treasury);
        for (const auto& c : m_s.contracts)
        {
            auto program = load_program(c.program);
            const auto name_bytes =
                bytes_view{reinterpret_cast<const uint8_t*>(c.name.data()), c.name.size()};
            CicState state{sha256(name_bytes), program.code_hash()};
            if (c.storage)
                for (const auto& [k, v] : c.storage->storage())
                    state.put(k, v);
            m_cids[c.name] = m_mc.add_contract(c.name, std::move(program), std::move(state));
        }
        m_txs = m_s.transactions;
        std::stable_sort(m_txs.begin(), m_txs.end(),
            [](const TxSpec& a, const TxSpec& b) { return a.block < b.block; });

        nlohmann::json roles = nlohmann::json::object();
        for (NodeId i = 0; i < m_s.sp_size; ++i)
            roles[std::to_string(i)] = m_roles[i].to_string();
        m_result.log.emit(0, "setup", {{"roles", roles}, {"nodes", m_s.sp_size}});
        m_result.initial_value = m_mc.total_value();
    }

    bool idle() const
    {
        for (const auto& [_, c] : m_mc.contracts())
            if (c.active || !c.queue.empty())
                return false;
        return true;
    }

    void deploy(Block b)
    {
        for (const auto& [cid, c] : m_mc.contracts())
        {
            while (!c.active && !c.queue.empty())
            {
                try
                {
                    const auto id = m_mc.deploy_it(cid, b, m_nonces);
                    auto& view = m_its[id];
                    view.outcome.id = id;
                    view.outcome.contract = c.name;
                    view.outcome.deployed = true;
                    view.outcome.deployed_at = b;
                }
                catch (const ProtocolError& e)
                {
                    if (e.code() != ProtocolErrc::insufficient_escrow)
                        throw;
                }
            }
        }
    }

    const RiceRun* honest_run(ItId id, uint64_t round)
    {
        auto& view = m_its.at(id);
        if (view.execution_failed)
            return nullptr;
        if (const auto it = view.honest.find(round); it != view.honest.end())
            return &it->second;
        const auto& rec = m_mc.it(id);
        const auto& contract = m_mc.contracts().at(rec.cid);
        try
        {
            auto run = rice_run(
                contract.program, rec.pre_state, rec.tx.data, round, rec.nonce, rec.tx.gas_limit);
            const auto root = run.digest.root;
            view.honest_root = root;
            view.states.emplace(root, run.final_state);
            return &view.honest.emplace(round, std::move(run)).first->second;
        }
        catch (const VmError& e)
        {
            view.execution_failed = true;
            m_result.log.emit(m_block, "execution_failed", {{"it", id}, {"error", e.what()}});
            return nullptr;
        }
    }

    std::optional<Hash256> leading_root(ItId id) const
    {
        const auto& table = m_mc.it(id).likelihoods.likelihoods();
        std::optional<Hash256> best;
        int64_t best_l = 0;
        for (const auto& [root, l] : table)
            if (!best || l > best_l)
            {
                best = root;
                best_l = l;
            }
        return best;
    }

    std::optional<Digest> honest_digest(ItId id, uint64_t round, NodeId node)
    {
        const auto* run = honest_run(id, round);
        if (!run)
            return std::nullopt;
        m_its.at(id).holders[node].insert(run->digest.root);
        return run->digest;
    }

    Digest byzantine_digest(ItId id, const RoundRecord& r, uint64_t variant, NodeId node)
    {
        auto& view = m_its.at(id);
        auto state = m_mc.it(id).pre_state;
        state.put(Hash256::from_u64(0xbad), Hash256::from_u64(variant + 1));
        const auto root = state.root();
        view.states.emplace(root, std::move(state));
        view.holders[node].insert(root);
        return {tagged("byzantine", r.nonce, variant), root};
    }

    std::optional<Digest> plan_digest(ItId id, const RoundRecord& r, NodeId node)
    {
        const auto& role = m_roles[node];
        switch (role.kind)
        {
        case Strategy::Kind::honest:
        case Strategy::Kind::chaos:
            return honest_digest(id, r.round, node);
        case Strategy::Kind::byzantine_single_root:
        case Strategy::Kind::silent:
            return byzantine_digest(id, r, 0, node);
        case Strategy::Kind::byzantine_multi_root:
            return byzantine_digest(id, r, node % std::max<uint32_t>(role.roots, 1), node);
        case Strategy::Kind::free_loader:
        {
            const auto leader = r.round > 1 ? leading_root(id) : std::nullopt;
            if (!leader)
                return honest_digest(id, r.round, node);
            bool guessed = unit(m_rng) < role.gamma;
            Hash256 seed = tagged("guess", r.nonce, node);
            if (guessed)
            {
                const auto* run = honest_run(id, r.round);
                guessed = run != nullptr;
                if (run)
                    seed = run->digest.seed;
            }
            ++m_result.freeload_attempts;
            m_result.freeload_correct_guesses += guessed ? 1 : 0;
            m_its.at(id).freeloads.push_back({node, r.round, guessed});
            return Digest{seed, *leader};
        }
        case Strategy::Kind::colluder:
        {
            const auto leader = r.round > 1 ? leading_root(id) : std::nullopt;
            if (!leader)
                return honest_digest(id, r.round, node);
            return Digest{tagged("collude", r.nonce, role.group), *leader};
        }
        }
        return std::nullopt;
    }

    void send(Block b, NodeId node, Message::Kind kind, ItId it, const Hash256& se,
        const Reveal& reveal)
    {
        Message m;
        m.at = b + uniform(m_rng, uint64_t{m_s.chain.max_inclusion_delay} + 1);
        m.node = node;
        m.seq = m_seq++;
        m.kind = kind;
        m.it = it;
        m.se = se;
        m.reveal = reveal;
        m_pending.push_back(std::move(m));
    }

    void generate(Block b)
    {
        m_block = b;
        for (auto& [id, view] : m_its)
        {
            const auto& rec = m_mc.it(id);
            if (rec.phase == Phase::deciding || rec.phase == Phase::settled)
                continue;
            const auto& r = rec.current();
            if (b == r.start)
                commit_phase(id, view, r, b);
            if (b == r.buffer_end + 1)
                reveal_phase(id, view, r, b);
        }
    }

    void commit_phase(ItId id, ItView& view, const RoundRecord& r, Block b)
    {
        view.planned.clear();
        const double q = m_mc.params().q;
        for (const auto& [node, rec] : m_mc.nodes())
        {
            const auto& role = m_roles[node];
            const bool chaos = role.kind == Strategy::Kind::chaos;
            if (!rec.in_sp)
            {
                if (chaos)
                    send(b, node, Message::Kind::commit, id, Hash256::from_u64(node), {});
                continue;
            }
            auto sort = check_sort(rec.keys, r.nonce, q);
            if (!sort.selected)
            {
                if (chaos && unit(m_rng) < 0.25)
                {
                    // Forged sortition: passes the commit, fails verification at reveal.
                    sort = {true, tagged("forged-o", r.nonce, node), tagged("forged-p", r.nonce, node)};
                }
                else
                    continue;
            }
            const auto digest = plan_digest(id, r, node);
            if (!digest)
                continue;
            const Reveal reveal{*digest, sort};
            const auto se = commitment(*digest, sort);
            view.planned[node] = reveal;
            send(b, node, Message::Kind::commit, id, se, reveal);
            if (chaos)
            {
                send(b, node, Message::Kind::commit, id, se, reveal);
                send(b, node, Message::Kind::commit, bogus_it, se, reveal);
                send(b, node, Message::Kind::reveal, id, se, reveal);
            }
        }
    }

    void reveal_phase(ItId id, ItView& view, const RoundRecord& r, Block b)
    {
        for (const auto& [node, reveal] : view.planned)
        {
            if (!r.commitments.count(node))
                continue;
            const auto& role = m_roles[node];
            if (role.kind == Strategy::Kind::silent)
                continue;
            const bool chaos = role.kind == Strategy::Kind::chaos;
            if (chaos)
            {
                auto tampered = reveal;
                tampered.digest.root.bytes[0] ^= 1;
                send(b, node, Message::Kind::reveal, id, {}, tampered);
            }
            send(b, node, Message::Kind::reveal, id, {}, reveal);
            if (chaos)
                send(b, node, Message::Kind::reveal, id, {}, reveal);
        }
    }

    void deliver(Block b)
    {
        std::vector<Message> ready;
        std::vector<Message> later;
        for (auto& m : m_pending)
            (m.at <= b ? ready : later).push_back(std::move(m));
        std::sort(ready.begin(), ready.end(), [](const Message& x, const Message& y) {
            return std::tie(x.at, x.node, x.seq) < std::tie(y.at, y.node, y.seq);
        });
        const size_t cap = m_s.chain.block_capacity == 0 ? ready.size()
                                                         : std::min<size_t>(ready.size(), m_s.chain.block_capacity);
        for (size_t i = cap; i < ready.size(); ++i)
            later.push_back(std::move(ready[i]));
        ready.resize(cap);
        m_pending = std::move(later);

        for (const auto& m : ready)
        {
            try
            {
                if (m.kind == Message::Kind::commit)
                    m_mc.submit_commit(m.it, m.node, m.se, b);
                else
                {
                    m_mc.submit_reveal(m.it, m.node, m.reveal.digest, m.reveal.sort, b);
                    m_its.at(m.it).revealed.emplace(m_mc.it(m.it).current().round, m.node);
                }
                ++m_result.accepted_messages;
            }
            catch (const ProtocolError& e)
            {
                ++m_result.rejected_messages;
                m_result.log.emit(b, "rejected",
                    {{"node", m.node}, {"it", m.it},
                        {"kind", m.kind == Message::Kind::commit ? "commit" : "reveal"},
                        {"error", to_string(e.code())}});
            }
        }
    }

    void close(Block b)
    {
        for (auto& [id, view] : m_its)
        {
            const auto& rec = m_mc.it(id);
            if (rec.phase == Phase::deciding || rec.phase == Phase::settled ||
                rec.current().reveal_end != b)
                continue;
            const auto decision = m_mc.close_round(id, b);
            if (decision.kind == Decision::Kind::continue_)
                continue;
            view.outcome.rounds = rec.rounds.size();
            view.outcome.finished_at = b;
            if (decision.kind == Decision::Kind::no_convergence)
            {
                m_mc.abandon(id, b);
                continue;
            }
            settle(id, view, decision.root, b);
        }
    }

    void settle(ItId id, ItView& view, const Hash256& winner, Block b)
    {
        view.outcome.accepted = true;
        const auto* run = honest_run(id, 1);
        view.outcome.correct = run && run->digest.root == winner;

        std::set<NodeId> candidates;
        for (const auto& r : m_mc.it(id).rounds)
            for (const auto& [node, rv] : r.reveals)
                if (rv.digest.root == winner && view.holders[node].count(winner))
                    candidates.insert(node);
        std::vector<StateWitness> witnesses;
        const auto& pre = m_mc.it(id).pre_state;
        for (const auto node : candidates)
        {
            witnesses.push_back(make_witness(node, pre, view.states.at(winner)));
            if (witnesses.size() == 3)
                break;
        }

        std::set<std::pair<NodeId, uint64_t>> punished;
        try
        {
            const auto report = m_mc.settle(id, witnesses, b);
            punished.insert(report.forfeited.begin(), report.forfeited.end());
        }
        catch (const ProtocolError& e)
        {
            if (e.code() != ProtocolErrc::missing_state_witness)
                throw;
            // The monetary settlement already happened; recover the punished set from the log.
            for (auto it = m_result.log.lines().rbegin(); it != m_result.log.lines().rend(); ++it)
            {
                const auto ev = json::parse(*it);
                if (ev["event"] == "deploy" && ev["it"] == id)
                    break;
                if (ev["event"] == "forfeit" && ev["it"] == id)
                    punished.emplace(ev["node"].get<NodeId>(), ev["round"].get<uint64_t>());
            }
        }
        for (const auto& a : view.freeloads)
        {
            if (a.correct || !view.revealed.count({a.round, a.node}))
                continue;
            if (!punished.count({a.node, a.round}))
                ++m_result.freeload_failed_unpunished;
        }
    }

    const Scenario& m_s;
    RunResult m_result;
    MasterContract m_mc;
    RandomSource m_nonces;
    std::mt19937_64 m_rng;
    std::vector<Strategy> m_roles;
    std::map<std::string, Hash256> m_cids;
    std::vector<TxSpec> m_txs;
    std::map<ItId, ItView> m_its;
    std::vector<Message> m_pending;
    uint64_t m_seq = 0;
    Block m_block = 0;
};

std::string_view major_of(std::string_view version)
{
    return version.substr(0, version.find('.'));
}
}  // namespace

RunResult run_scenario(const Scenario& scenario)
{
    Simulation sim{scenario};
    return sim.run();
}

ReplayReport replay(std::string_view log_text)
{
    std::vector<std::string> lines;
    {
        std::istringstream in{std::string{log_text}};
        std::string line;
        while (std::getline(in, line))
            if (!line.empty())
                lines.push_back(line);
    }
    if (lines.empty())
        throw ProtocolError{ProtocolErrc::divergence_detected, "empty event log"};

    json header;
    try
    {
        header = json::parse(lines.front());
    }
    catch (const json::exception& e)
    {
        throw ProtocolError{ProtocolErrc::divergence_detected,
            std::string{"unreadable log header: "} + e.what()};
    }
    if (!header.is_object() || header.value("event", "") != "header" || !header.contains("scenario"))
        throw ProtocolError{ProtocolErrc::divergence_detected, "first line is not a log header"};

    ReplayReport report;
    report.logged_version = header.value("version", "");
    report.version_compatible = major_of(report.logged_version) == major_of(log_format_version);

    const auto scenario = parse_scenario(header["scenario"].dump());
    const auto result = run_scenario(scenario);
    const auto& actual = result.log.lines();

    const auto n = std::max(lines.size(), actual.size());
    for (size_t i = 0; i < n; ++i)
    {
        const auto* want = i < lines.size() ? &lines[i] : nullptr;
        const auto* got = i < actual.size() ? &actual[i] : nullptr;
        if (want && got && *want == *got)
        {
            ++report.lines_compared;
            continue;
        }
        report.first_divergence = i;
        report.expected_line = want ? *want : "";
        report.actual_line = got ? *got : "";
        return report;
    }
    report.identical = true;
    return report;
}
}  // namespace cicsim
