// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cicsim/randomness.hpp>
#include <cmath>

namespace cicsim
{
Hash256 random_gen(const Hash256& experiment_seed, uint64_t counter)
{
    const auto c = be64(counter);
    return sha256({as_bytes(experiment_seed), c});
}

NodeKeys derive_keys(const Hash256& experiment_seed, uint64_t node_id)
{
    const auto id = be64(node_id);
    NodeKeys keys;
    keys.node_id = node_id;
    keys.sk = sha256({as_bytes("sk"), as_bytes(experiment_seed), id});
    keys.pk = sha256(as_bytes(keys.sk));
    return keys;
}

Hash256 sortition_prf(const Hash256& sk, const Hash256& nonce)
{
    return hash_pair(sk, nonce);
}

bool below_threshold(const Hash256& o, double q) noexcept
{
    if (q >= 1.0)
        return true;
    if (!(q > 0.0))
        return false;
    // o_64 < q·2^64 exactly; q < 1 keeps the ceiling below 2^64.
    return o.high_u64() < static_cast<uint64_t>(std::ceil(std::ldexp(q, 64)));
}

namespace
{
Hash256 sortition_proof(const Hash256& pk, const Hash256& nonce, const Hash256& o)
{
    return sha256({as_bytes(pk), as_bytes(nonce), as_bytes(o)});
}
}  // namespace

SortResult check_sort(const NodeKeys& keys, const Hash256& nonce, double q)
{
    const auto o = sortition_prf(keys.sk, nonce);
    if (!below_threshold(o, q))
        return {};
    return {true, o, sortition_proof(keys.pk, nonce, o)};
}

bool KeyRegistry::verify(
    const Hash256& pk, const Hash256& nonce, double q, const SortResult& result) const
{
    if (!result.selected)
        return false;
    const auto it = m_sk_by_pk.find(pk);
    if (it == m_sk_by_pk.end())
        return false;
    const auto o = sortition_prf(it->second, nonce);
    return o == result.o && below_threshold(o, q) &&
           result.proof == sortition_proof(pk, nonce, o);
}
}  // namespace cicsim
