// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cicsim/rice.hpp>
#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace cicsim
{
Seed init_seed(uint64_t round, const Hash256& round1_entropy)
{
    if (round == 0)
        throw std::invalid_argument("init_seed: rounds are 1-based");
    auto v = round1_entropy;
    for (uint64_t j = 1; j < round; ++j)
        v = sha256(as_bytes(v));
    return {v, round, 0};
}

uint64_t k_of_segment(uint64_t i)
{
    if (i == 0)
        throw std::invalid_argument("segment indices are 1-based");
    // Smallest k with k(k+1)/2 >= i.
    auto k = static_cast<uint64_t>(std::ceil((std::sqrt(8.0 * static_cast<double>(i) + 1) - 1) / 2));
    while (k * (k + 1) / 2 < i)
        ++k;
    while (k > 1 && (k - 1) * k / 2 >= i)
        --k;
    return k;
}

InstrIndex segment_start(uint64_t i)
{
    const auto k = k_of_segment(i);
    if (k > 56)
        throw std::out_of_range("segment_start: index overflow");
    const auto block_start = ((k - 2) << k) + 2;  // Σ_{m<k} m·2^m, wraps harmlessly for k = 1
    return 1 + block_start + (i - first_segment_with_k(k)) * (uint64_t{1} << k);
}

uint64_t segment_of(InstrIndex t)
{
    if (t == 0)
        throw std::invalid_argument("dynamic indices are 1-based");
    // Locate the block k, then the segment inside it.
    uint64_t k = 1;
    while (((k - 1) << (k + 1)) + 2 < t)
        ++k;
    const auto block_first = 1 + ((k - 2) << k) + 2;
    return first_segment_with_k(k) + (t - block_first) / (uint64_t{1} << k);
}

uint64_t leading_bits(const Hash256& h, unsigned k)
{
    if (k > 64)
        throw std::invalid_argument("leading_bits: k must be <= 64");
    if (k == 0)
        return 0;
    return h.high_u64() >> (64 - k);
}

SegmentCursor next_indices(const SegmentCursor& cursor, const Seed& seed)
{
    SegmentCursor next;
    next.segment_index = cursor.segment_index + 1;
    next.k = k_of_segment(next.segment_index);
    next.segment_start = segment_start(next.segment_index);
    next.offset = leading_bits(seed.value, static_cast<unsigned>(next.k));
    next.t_i = cursor.t_f + 1;
    next.t_f = next.segment_start + next.offset;
    return next;
}

RiceRun rice_run(const Program& program, const CicState& state, std::span<const uint8_t> data,
    uint64_t round, const Hash256& round1_entropy, uint64_t gas_limit)
{
    RiceRun run;
    auto seed = init_seed(round, round1_entropy);
    auto exec = make_cursor(program, state);
    SegmentCursor seg;
    while (true)
    {
        seg = next_indices(seg, seed);
        const auto last = resume(program, exec, seg.t_i, seg.t_f, data, gas_limit);
        if (exec.halted)
        {
            run.total = last;
            break;
        }
        seed = update_seed(seed, exec.state.root());
        run.update_indices.push_back(seg.t_f);
    }
    run.final_state = std::move(exec.state);
    run.digest = {seed.value, run.final_state.root()};
    return run;
}

ScheduleReport analyze_schedule(
    InstrIndex total, const std::vector<std::vector<InstrIndex>>& rounds)
{
    if (rounds.empty())
        throw std::invalid_argument("analyze_schedule: at least one round required");
    if (total == 0)
        throw std::invalid_argument("analyze_schedule: total must be >= 1");

    ScheduleReport report{total, {}};
    std::unordered_set<InstrIndex> seen;
    const auto k_terminal = k_of_segment(segment_of(total));
    for (const auto& updates : rounds)
    {
        RoundSchedule r;
        r.updates = updates;
        r.phi = updates.size();
        r.k_terminal = k_terminal;
        const auto t_l = updates.empty() ? InstrIndex{0} : updates.back();
        r.k_last_update = t_l == 0 ? 0 : k_of_segment(segment_of(t_l));
        r.last_update_fraction =
            static_cast<double>(total - std::min(t_l, total)) / static_cast<double>(total);
        for (const auto t : updates)
            r.strong_unmatched += seen.count(t) == 0 ? 1 : 0;
        report.rounds.push_back(std::move(r));
        seen.insert(updates.begin(), updates.end());
    }
    return report;
}

bool total_within_bounds(InstrIndex total, uint64_t k)
{
    if (k == 0 || k > 56)
        return false;
    const auto p = uint64_t{1} << k;
    const auto lower = k >= 2 ? p * (k - 2) + 2 : 0;
    const auto upper = 2 * p * (k - 1) + 2;
    return lower < total && total <= upper;
}

double last_update_fraction_bound(InstrIndex total)
{
    return 3.0 / (4.0 * std::log2(static_cast<double>(total)));
}
}  // namespace cicsim
