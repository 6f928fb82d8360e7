// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cicsim/hash.hpp>
#include <optional>
#include <unordered_map>

namespace cicsim
{
/// H(experiment_seed ‖ be64(counter)).
Hash256 random_gen(const Hash256& experiment_seed, uint64_t counter);

/// Sequential random_gen with an owned counter.
class RandomSource
{
public:
    explicit RandomSource(const Hash256& seed, uint64_t counter = 0) noexcept
      : m_seed{seed}, m_counter{counter}
    {}

    Hash256 next() { return random_gen(m_seed, m_counter++); }
    [[nodiscard]] uint64_t counter() const noexcept { return m_counter; }
    [[nodiscard]] const Hash256& seed() const noexcept { return m_seed; }

private:
    Hash256 m_seed;
    uint64_t m_counter;
};

struct NodeKeys
{
    uint64_t node_id = 0;
    Hash256 pk;
    Hash256 sk;
};

/// sk = H("sk" ‖ experiment_seed ‖ be64(node_id)), pk = H(sk).
NodeKeys derive_keys(const Hash256& experiment_seed, uint64_t node_id);

/// Simulated sortition output. The proof is H(pk ‖ nonce ‖ o); it is not a
/// cryptographic VRF proof and is only checkable through a KeyRegistry.
struct SortResult
{
    bool selected = false;
    Hash256 o;      ///< zero when not selected
    Hash256 proof;  ///< zero when not selected

    friend bool operator==(const SortResult&, const SortResult&) = default;
};

/// H(sk ‖ nonce), the keyed PRF.
Hash256 sortition_prf(const Hash256& sk, const Hash256& nonce);

/// True iff the leading 64 bits of o, read as a fraction of 2^64, are below q.
/// q >= 1 always selects and q <= 0 never does.
bool below_threshold(const Hash256& o, double q) noexcept;

SortResult check_sort(const NodeKeys& keys, const Hash256& nonce, double q);

/// pk → sk map held by the simulator, standing in for VRF verification.
class KeyRegistry
{
public:
    void add(const NodeKeys& keys) { m_sk_by_pk[keys.pk] = keys.sk; }
    [[nodiscard]] bool contains(const Hash256& pk) const { return m_sk_by_pk.count(pk) != 0; }

    /// Re-derives o and the proof; true only for a selected, matching result.
    [[nodiscard]] bool verify(
        const Hash256& pk, const Hash256& nonce, double q, const SortResult& result) const;

private:
    std::unordered_map<Hash256, Hash256> m_sk_by_pk;
};
}  // namespace cicsim
