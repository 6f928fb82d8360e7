// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cicsim/hash.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cicsim
{
using MerkleRoot = Hash256;

/// Contract state: an immutable identity, an immutable code reference and
/// a key-value storage of 256-bit words.
///
/// The root commits to all three. The storage part is a binary Merkle tree
/// over the sorted keys: leaf = H(key ‖ value), node = H(left ‖ right), an
/// unpaired node is promoted to the next level unchanged. The full root is
/// H(cid ‖ code ‖ storage_root).
class CicState
{
public:
    using Storage = std::map<Hash256, Hash256>;

    CicState() = default;
    CicState(const Hash256& cid, const Hash256& code) : m_cid{cid}, m_code{code} {}

    [[nodiscard]] const Hash256& cid() const noexcept { return m_cid; }
    [[nodiscard]] const Hash256& code() const noexcept { return m_code; }
    [[nodiscard]] const Storage& storage() const noexcept { return m_storage; }

    void put(const Hash256& key, const Hash256& value) { m_storage[key] = value; }
    bool erase(const Hash256& key) { return m_storage.erase(key) != 0; }

    [[nodiscard]] std::optional<Hash256> get(const Hash256& key) const
    {
        const auto it = m_storage.find(key);
        if (it == m_storage.end())
            return std::nullopt;
        return it->second;
    }

    /// The value stored under key, or zero if absent.
    [[nodiscard]] Hash256 load(const Hash256& key) const
    {
        return get(key).value_or(Hash256{});
    }

    [[nodiscard]] MerkleRoot storage_root() const;
    [[nodiscard]] MerkleRoot root() const;

    friend bool operator==(const CicState&, const CicState&) = default;

private:
    Hash256 m_cid;
    Hash256 m_code;
    Storage m_storage;
};

/// The root of an empty storage tree: SHA-256 of the empty string.
MerkleRoot empty_storage_root();

inline MerkleRoot state_root(const Hash256& cid, const Hash256& code, const MerkleRoot& storage)
{
    return sha256({as_bytes(cid), as_bytes(code), as_bytes(storage)});
}

/// Returns a copy of state with key set to value.
inline CicState put(CicState state, const Hash256& key, const Hash256& value)
{
    state.put(key, value);
    return state;
}

inline MerkleRoot root(const CicState& state)
{
    return state.root();
}

struct ProofStep
{
    Hash256 sibling;
    bool sibling_is_left = false;
};

/// Inclusion proof of one storage entry against the full state root.
struct InclusionProof
{
    Hash256 key;
    Hash256 value;
    std::vector<ProofStep> path;
    Hash256 cid;
    Hash256 code;
};

/// Throws std::out_of_range if key is not in storage.
InclusionProof prove_inclusion(const CicState& state, const Hash256& key);

bool verify_inclusion(const InclusionProof& proof, const MerkleRoot& root);

/// Canonical JSON: {"cid": hex, "code": hex, "storage": {key hex: value hex}}
/// with keys in ascending order and 64-digit lowercase big-endian hex.
std::string dump_state_json(const CicState& state);
CicState load_state_json(std::string_view json);
}  // namespace cicsim
