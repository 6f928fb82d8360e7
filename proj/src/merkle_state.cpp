// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cicsim/merkle_state.hpp>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace cicsim
{
namespace
{
Hash256 leaf_hash(const Hash256& key, const Hash256& value)
{
    return hash_pair(key, value);
}

std::vector<Hash256> leaves_of(const CicState::Storage& storage)
{
    std::vector<Hash256> level;
    level.reserve(storage.size());
    for (const auto& [k, v] : storage)
        level.push_back(leaf_hash(k, v));
    return level;
}

std::vector<Hash256> next_level(const std::vector<Hash256>& level)
{
    std::vector<Hash256> up;
    up.reserve((level.size() + 1) / 2);
    for (size_t i = 0; i + 1 < level.size(); i += 2)
        up.push_back(hash_pair(level[i], level[i + 1]));
    if (level.size() % 2 == 1)
        up.push_back(level.back());
    return up;
}
}  // namespace

MerkleRoot empty_storage_root()
{
    static const auto empty = sha256(bytes_view{});
    return empty;
}

MerkleRoot CicState::storage_root() const
{
    if (m_storage.empty())
        return empty_storage_root();
    auto level = leaves_of(m_storage);
    while (level.size() > 1)
        level = next_level(level);
    return level.front();
}

MerkleRoot CicState::root() const
{
    return state_root(m_cid, m_code, storage_root());
}

InclusionProof prove_inclusion(const CicState& state, const Hash256& key)
{
    const auto& storage = state.storage();
    const auto it = storage.find(key);
    if (it == storage.end())
        throw std::out_of_range("key not present in storage");

    InclusionProof proof{key, it->second, {}, state.cid(), state.code()};
    auto index = static_cast<size_t>(std::distance(storage.begin(), it));
    auto level = leaves_of(storage);
    while (level.size() > 1)
    {
        const auto sibling = index ^ 1;
        if (sibling < level.size())
            proof.path.push_back({level[sibling], (index & 1) != 0});
        // Otherwise the node is promoted and contributes no step.
        level = next_level(level);
        index /= 2;
    }
    return proof;
}

bool verify_inclusion(const InclusionProof& proof, const MerkleRoot& root)
{
    auto node = leaf_hash(proof.key, proof.value);
    for (const auto& step : proof.path)
        node = step.sibling_is_left ? hash_pair(step.sibling, node) : hash_pair(node, step.sibling);
    return state_root(proof.cid, proof.code, node) == root;
}

std::string dump_state_json(const CicState& state)
{
    nlohmann::json storage = nlohmann::json::object();
    for (const auto& [k, v] : state.storage())
        storage[k.hex()] = v.hex();
    const nlohmann::json j = {
        {"cid", state.cid().hex()}, {"code", state.code().hex()}, {"storage", storage}};
    return j.dump();
}

CicState load_state_json(std::string_view text)
{
    const auto j = nlohmann::json::parse(text);
    CicState state{Hash256::from_hex(j.at("cid").get<std::string>()),
        Hash256::from_hex(j.at("code").get<std::string>())};
    for (const auto& [k, v] : j.at("storage").items())
        state.put(Hash256::from_hex(k), Hash256::from_hex(v.get<std::string>()));
    return state;
}
}  // namespace cicsim
