// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cicsim/toy_vm.hpp>
#include <vector>

namespace cicsim
{
/// A round seed and how many updates produced it.
struct Seed
{
    Hash256 value;
    uint64_t round = 1;
    uint64_t update_count = 0;
};

/// seed(j, 0): the round-1 entropy hashed j−1 times. Requires round >= 1.
Seed init_seed(uint64_t round, const Hash256& round1_entropy);

/// seed' = H(seed ‖ root).
inline Seed update_seed(const Seed& seed, const Hash256& root)
{
    return {hash_pair(seed.value, root), seed.round, seed.update_count + 1};
}

/// The submitted (seed, root) pair. Consensus groups digests by root only.
struct Digest
{
    Hash256 seed;
    Hash256 root;

    [[nodiscard]] bool same_solution(const Digest& other) const noexcept
    {
        return root == other.root;
    }

    friend bool operator==(const Digest&, const Digest&) = default;
};

/// K[i] for 1-based i: 1, 2, 2, 3, 3, 3, 4, ... (k repeated k times).
uint64_t k_of_segment(uint64_t i);

/// First segment index whose exponent is k: k(k−1)/2 + 1.
inline constexpr uint64_t first_segment_with_k(uint64_t k) noexcept
{
    return k * (k - 1) / 2 + 1;
}

/// 1-based dynamic index of the first instruction of segment i:
/// 1 + Σ_{m<i} 2^K[m].
InstrIndex segment_start(uint64_t i);

/// Segment containing dynamic index t (>= 1).
uint64_t segment_of(InstrIndex t);

/// Big-endian integer of the leading k bits (0 <= k <= 64).
uint64_t leading_bits(const Hash256& h, unsigned k);

/// Position in the interruption schedule.
///
/// A default cursor is "before segment 1"; next_indices() moves it to the
/// following segment and fixes the next subarray [t_i, t_f], where t_f is the
/// update index segment_start + offset.
struct SegmentCursor
{
    uint64_t segment_index = 0;
    uint64_t k = 0;
    InstrIndex segment_start = 0;
    uint64_t offset = 0;
    InstrIndex t_i = 0;
    InstrIndex t_f = 0;
};

SegmentCursor next_indices(const SegmentCursor& cursor, const Seed& seed);

/// Full record of one RICE run.
struct RiceRun
{
    Digest digest;
    InstrIndex total = 0;                      ///< T
    std::vector<InstrIndex> update_indices;   ///< ascending, each <= T
    CicState final_state;

    [[nodiscard]] uint64_t phi() const noexcept { return update_indices.size(); }
};

/// Executes the program while updating the seed at each scheduled index.
/// A VM halt at T <= t_f ends the run without a further update.
RiceRun rice_run(const Program& program, const CicState& state, std::span<const uint8_t> data,
    uint64_t round, const Hash256& round1_entropy, uint64_t gas_limit = unlimited_gas);

inline Digest rice_execute(const Program& program, const CicState& state,
    std::span<const uint8_t> data, uint64_t round, const Hash256& round1_entropy,
    uint64_t gas_limit = unlimited_gas)
{
    return rice_run(program, state, data, round, round1_entropy, gas_limit).digest;
}

struct RoundSchedule
{
    std::vector<InstrIndex> updates;  ///< M_i
    uint64_t phi = 0;
    /// Exponent of the segment containing T.
    uint64_t k_terminal = 0;
    /// Exponent of the segment containing the last update (0 if phi == 0).
    uint64_t k_last_update = 0;
    /// Update indices not used by any earlier round. Equals phi for round 1.
    uint64_t strong_unmatched = 0;
    /// (T − t_l) / T, with t_l = 0 when there were no updates.
    double last_update_fraction = 0;
};

struct ScheduleReport
{
    InstrIndex total = 0;
    std::vector<RoundSchedule> rounds;
};

/// Analyses the update-index sets of consecutive rounds over the same
/// execution of length total. Requires at least one round.
ScheduleReport analyze_schedule(InstrIndex total, const std::vector<std::vector<InstrIndex>>& rounds);

/// (k−1)k/2 < phi <= k(k+1)/2.
inline constexpr bool phi_within_bounds(uint64_t phi, uint64_t k) noexcept
{
    return (k - 1) * k / 2 < phi && phi <= k * (k + 1) / 2;
}

/// 2^k(k−2) + 2 < T <= 2^{k+1}(k−1) + 2.
bool total_within_bounds(InstrIndex total, uint64_t k);

/// 3 / (4·log2 T).
double last_update_fraction_bound(InstrIndex total);
}  // namespace cicsim
