// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cicsim/protocol.hpp>

namespace cicsim
{
namespace
{
using nlohmann::json;

[[noreturn]] void bad(const std::string& field, const std::string& why)
{
    throw ProtocolError{ProtocolErrc::config_error, field + ": " + why};
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& path)
{
    const auto it = obj.find(key);
    if (it == obj.end())
        return;
    try
    {
        out = it->get<T>();
    }
    catch (const json::exception& e)
    {
        bad(path + key, e.what());
    }
}

Hash256 word(const json& v, const std::string& field)
{
    if (v.is_number_unsigned())
        return Hash256::from_u64(v.get<uint64_t>());
    if (v.is_string())
    {
        try
        {
            return Hash256::from_hex(v.get<std::string>());
        }
        catch (const std::exception& e)
        {
            bad(field, e.what());
        }
    }
    bad(field, "expected an unsigned integer or 64 hex digits");
}

void expect_object(const json& v, const std::string& field)
{
    if (!v.is_object())
        bad(field, "expected an object");
}
}  // namespace

Scenario parse_scenario(std::string_view json_text)
{
    json doc;
    try
    {
        doc = json::parse(json_text);
    }
    catch (const json::parse_error& e)
    {
        bad("scenario", e.what());
    }
    expect_object(doc, "scenario");

    Scenario s;
    read(doc, "name", s.name, "");
    if (doc.contains("seed"))
        s.seed = word(doc["seed"], "seed");
    read(doc, "sp_size", s.sp_size, "");
    read(doc, "node_deposit", s.node_deposit, "");
    read(doc, "node_balance", s.node_balance, "");
    read(doc, "treasury", s.treasury, "");
    read(doc, "max_blocks", s.max_blocks, "");
    if (s.sp_size == 0)
        bad("sp_size", "must be >= 1");

    if (doc.contains("strategies"))
    {
        const auto& st = doc["strategies"];
        expect_object(st, "strategies");
        read(st, "default", s.default_strategy, "strategies.");
        try
        {
            (void)Strategy::parse(s.default_strategy);
        }
        catch (const std::exception& e)
        {
            bad("strategies.default", e.what());
        }
        if (st.contains("mix"))
        {
            double total = 0;
            for (const auto& m : st["mix"])
            {
                std::string tag;
                double fraction = 0;
                read(m, "strategy", tag, "strategies.mix[].");
                read(m, "fraction", fraction, "strategies.mix[].");
                try
                {
                    (void)Strategy::parse(tag);
                }
                catch (const std::exception& e)
                {
                    bad("strategies.mix[].strategy", e.what());
                }
                if (fraction < 0 || fraction > 1)
                    bad("strategies.mix[].fraction", "must lie in [0, 1]");
                total += fraction;
                s.strategy_mix.emplace_back(tag, fraction);
            }
            if (total > 1 + 1e-9)
                bad("strategies.mix", "fractions sum above 1");
        }
        if (st.contains("nodes"))
        {
            expect_object(st["nodes"], "strategies.nodes");
            for (const auto& [id, tag] : st["nodes"].items())
            {
                NodeId node = 0;
                try
                {
                    node = std::stoull(id);
                    (void)Strategy::parse(tag.get<std::string>());
                }
                catch (const std::exception& e)
                {
                    bad("strategies.nodes." + id, e.what());
                }
                if (node >= s.sp_size)
                    bad("strategies.nodes." + id, "node id outside the stake pool");
                s.node_strategies[node] = tag.get<std::string>();
            }
        }
    }

    s.consensus.M = s.sp_size;
    if (doc.contains("consensus"))
    {
        const auto& c = doc["consensus"];
        expect_object(c, "consensus");
        read(c, "f_max", s.consensus.f_max, "consensus.");
        read(c, "q", s.consensus.q, "consensus.");
        read(c, "beta", s.consensus.beta, "consensus.");
        read(c, "max_rounds", s.consensus.max_rounds, "consensus.");
    }
    try
    {
        (void)threshold(s.consensus);
    }
    catch (const std::exception& e)
    {
        bad("consensus", e.what());
    }

    if (doc.contains("policy"))
    {
        const auto& p = doc["policy"];
        expect_object(p, "policy");
        read(p, "th1", s.policy.th1, "policy.");
        read(p, "th2", s.policy.th2, "policy.");
        read(p, "reward", s.policy.reward, "policy.");
        read(p, "deposit", s.policy.deposit, "policy.");
        read(p, "d_min", s.policy.d_min, "policy.");
    }
    s.policy.validate();

    if (doc.contains("windows"))
    {
        const auto& w = doc["windows"];
        expect_object(w, "windows");
        read(w, "gas_per_block", s.windows.gas_per_block, "windows.");
        read(w, "src_slack", s.windows.src_slack, "windows.");
        read(w, "buf", s.windows.w_buf, "windows.");
        read(w, "sr", s.windows.w_sr, "windows.");
        if (s.windows.gas_per_block == 0)
            bad("windows.gas_per_block", "must be >= 1");
        if (s.windows.w_sr == 0)
            bad("windows.sr", "must be >= 1");
    }

    if (doc.contains("chain"))
    {
        const auto& c = doc["chain"];
        expect_object(c, "chain");
        read(c, "block_capacity", s.chain.block_capacity, "chain.");
        read(c, "max_inclusion_delay", s.chain.max_inclusion_delay, "chain.");
    }

    if (doc.contains("creators"))
    {
        expect_object(doc["creators"], "creators");
        for (const auto& [name, bal] : doc["creators"].items())
        {
            if (!bal.is_number_integer() || bal.get<Amount>() < 0)
                bad("creators." + name, "expected a non-negative integer balance");
            s.creators[name] = bal.get<Amount>();
        }
    }

    if (doc.contains("contracts"))
    {
        for (const auto& c : doc["contracts"])
        {
            ContractSpec spec;
            read(c, "name", spec.name, "contracts[].");
            read(c, "program", spec.program, "contracts[].");
            if (spec.name.empty())
                bad("contracts[].name", "required");
            if (spec.program.empty())
                bad("contracts." + spec.name + ".program", "required");
            for (const auto& other : s.contracts)
                if (other.name == spec.name)
                    bad("contracts." + spec.name, "duplicate name");
            if (c.contains("storage"))
            {
                expect_object(c["storage"], "contracts." + spec.name + ".storage");
                CicState st;
                for (const auto& [k, v] : c["storage"].items())
                {
                    const auto field = "contracts." + spec.name + ".storage." + k;
                    const auto key = k.size() == 64 || k.rfind("0x", 0) == 0
                                         ? word(json(k), field)
                                         : word(json(std::stoull(k)), field);
                    st.put(key, word(v, field));
                }
                spec.storage = std::move(st);
            }
            s.contracts.push_back(std::move(spec));
        }
    }

    if (doc.contains("transactions"))
    {
        for (const auto& t : doc["transactions"])
        {
            TxSpec tx;
            std::string data_hex;
            read(t, "contract", tx.contract, "transactions[].");
            read(t, "creator", tx.creator, "transactions[].");
            read(t, "data", data_hex, "transactions[].");
            read(t, "gas_limit", tx.gas_limit, "transactions[].");
            read(t, "gas_price", tx.gas_price, "transactions[].");
            read(t, "block", tx.block, "transactions[].");
            try
            {
                tx.data = from_hex(data_hex);
            }
            catch (const std::exception& e)
            {
                bad("transactions[].data", e.what());
            }
            bool known = false;
            for (const auto& c : s.contracts)
                known = known || c.name == tx.contract;
            if (!known)
                bad("transactions[].contract", "unknown contract '" + tx.contract + "'");
            if (!s.creators.count(tx.creator))
                bad("transactions[].creator", "unknown creator '" + tx.creator + "'");
            if (tx.gas_limit == 0)
                bad("transactions[].gas_limit", "must be >= 1");
            if (tx.gas_price < 0)
                bad("transactions[].gas_price", "must be non-negative");
            s.transactions.push_back(std::move(tx));
        }
    }
    return s;
}

nlohmann::json scenario_to_json(const Scenario& s)
{
    json mix = json::array();
    for (const auto& [tag, fraction] : s.strategy_mix)
        mix.push_back({{"strategy", tag}, {"fraction", fraction}});
    json nodes = json::object();
    for (const auto& [id, tag] : s.node_strategies)
        nodes[std::to_string(id)] = tag;

    json contracts = json::array();
    for (const auto& c : s.contracts)
    {
        json spec{{"name", c.name}, {"program", c.program}};
        if (c.storage)
        {
            json st = json::object();
            for (const auto& [k, v] : c.storage->storage())
                st[k.hex()] = v.hex();
            spec["storage"] = st;
        }
        contracts.push_back(spec);
    }
    json txs = json::array();
    for (const auto& t : s.transactions)
        txs.push_back({{"contract", t.contract}, {"creator", t.creator}, {"data", to_hex(t.data)},
            {"gas_limit", t.gas_limit}, {"gas_price", t.gas_price}, {"block", t.block}});

    return {
        {"name", s.name},
        {"seed", s.seed.hex()},
        {"sp_size", s.sp_size},
        {"node_deposit", s.node_deposit},
        {"node_balance", s.node_balance},
        {"treasury", s.treasury},
        {"max_blocks", s.max_blocks},
        {"strategies", {{"default", s.default_strategy}, {"mix", mix}, {"nodes", nodes}}},
        {"consensus",
            {{"f_max", s.consensus.f_max}, {"q", s.consensus.q}, {"beta", s.consensus.beta},
                {"max_rounds", s.consensus.max_rounds}}},
        {"policy",
            {{"th1", s.policy.th1}, {"th2", s.policy.th2}, {"reward", s.policy.reward},
                {"deposit", s.policy.deposit}, {"d_min", s.policy.d_min}}},
        {"windows",
            {{"gas_per_block", s.windows.gas_per_block}, {"src_slack", s.windows.src_slack},
                {"buf", s.windows.w_buf}, {"sr", s.windows.w_sr}}},
        {"chain",
            {{"block_capacity", s.chain.block_capacity},
                {"max_inclusion_delay", s.chain.max_inclusion_delay}}},
        {"creators", s.creators},
        {"contracts", contracts},
        {"transactions", txs},
    };
}
}  // namespace cicsim
