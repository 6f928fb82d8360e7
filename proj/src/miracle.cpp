// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cicsim/miracle.hpp>
#include <cmath>
#include <limits>
#include <vector>

namespace cicsim
{
namespace
{
void check_beta(double beta)
{
    if (!(beta > 0.0 && beta < 1.0))
        throw MiracleError{MiracleErrc::degenerate_params, "beta must lie in (0, 1)"};
}

void check_fraction(double f)
{
    if (!(f >= 0.0 && f < 0.5))
        throw MiracleError{MiracleErrc::degenerate_params, "f_max must lie in [0, 1/2)"};
}

double threshold_at(double M, double f, double q, double beta)
{
    return std::log((1.0 - beta) / beta) * 2.0 * q * (1.0 - q) * M * (1.0 - f) * f /
           ((1.0 - f) - f);
}
}  // namespace

double threshold(const ConsensusParams& params)
{
    check_beta(params.beta);
    check_fraction(params.f_max);
    return threshold_at(static_cast<double>(params.M), params.f_max, params.q, params.beta);
}

Moments moments(const ConsensusParams& params, double f) noexcept
{
    const auto M = static_cast<double>(params.M);
    const auto q = params.q;
    return {q * (1 - f) * M, q * (1 - f) * M * (1 - q), q * f * M, q * f * M * (1 - q)};
}

void LikelihoodTable::apply(const RoundTally& tally)
{
    if (tally.round != m_rounds + 1)
        throw MiracleError{MiracleErrc::round_mismatch,
            "tally for round " + std::to_string(tally.round) + " applied after round " +
                std::to_string(m_rounds)};
    const auto C = tally.total();
    const auto C2 = C * C;
    for (auto& [_, L] : m_L)
        L -= C2;
    for (const auto& [root, c] : tally.counts)
    {
        // A root first seen now is back-charged with every earlier round's −C².
        const auto [it, _] = m_L.try_emplace(root, -m_sum_sq - C2);
        it->second += 2 * c * C;
    }
    m_sum_sq += C2;
    ++m_rounds;
}

Decision step(const LikelihoodTable& table, double threshold_value, uint32_t max_rounds)
{
    const std::pair<const Hash256, int64_t>* best = nullptr;
    for (const auto& entry : table.likelihoods())
        if (static_cast<double>(entry.second) > threshold_value &&
            (best == nullptr || entry.second > best->second))
            best = &entry;
    if (best != nullptr)
        return {Decision::Kind::accept, best->first};
    if (table.rounds_elapsed() >= max_rounds)
        return {Decision::Kind::no_convergence, {}};
    return {};
}

double expected_rounds(const ConsensusParams& params, double f)
{
    check_beta(params.beta);
    if (!(f > 0.0 && f < 0.5))
        throw MiracleError{MiracleErrc::degenerate_params, "expected_rounds needs 0 < f < 1/2"};
    const auto b = params.beta;
    const auto num = (1 - b) * std::log((1 - b) / b) + b * std::log(b / (1 - b));
    const auto m = moments(params, f);
    const auto d = m.mu_h - m.mu_b;
    const auto den = (d * d + m.nu_h2 - m.nu_b2) / (2 * m.nu_b2) + 0.5 * std::log(m.nu_b2 / m.nu_h2);
    return num / den;
}

double one_round_q(uint64_t M, double f_max, double beta)
{
    check_beta(beta);
    check_fraction(f_max);
    const auto m = static_cast<double>(M);
    const auto gap = [&](double q) {
        return q * m * q * m - threshold_at(m, f_max, q, beta);
    };
    if (!(gap(1.0) > 0.0))
        throw MiracleError{MiracleErrc::no_solution, "no q in (0, 1) crosses the threshold"};
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i)
    {
        const auto mid = 0.5 * (lo + hi);
        (gap(mid) > 0.0 ? hi : lo) = mid;
    }
    return hi;
}

double log_binomial_sf(uint64_t k, uint64_t n, double p)
{
    constexpr auto neg_inf = -std::numeric_limits<double>::infinity();
    if (k >= n || p <= 0.0)
        return neg_inf;
    if (p >= 1.0)
        return 0.0;
    const auto nd = static_cast<double>(n);
    const auto lp = std::log(p);
    const auto lq = std::log1p(-p);
    std::vector<double> terms;
    terms.reserve(n - k);
    double top = neg_inf;
    for (auto i = k + 1; i <= n; ++i)
    {
        const auto id = static_cast<double>(i);
        const auto t = std::lgamma(nd + 1) - std::lgamma(id + 1) - std::lgamma(nd - id + 1) +
                       id * lp + (nd - id) * lq;
        terms.push_back(t);
        top = std::max(top, t);
    }
    double sum = 0;
    for (const auto t : terms)
        sum += std::exp(t - top);
    return top + std::log(sum);
}

Ns1Size ns1_size(double f_max, uint64_t M, double beta)
{
    check_beta(beta);
    check_fraction(f_max);
    const auto log_beta = std::log(beta);
    for (uint64_t n = 1; n <= M; ++n)
        if (log_binomial_sf(n / 2, n, f_max) < log_beta)
            return {n, false};
    return {M, true};
}

ConsensusTrial simulate_consensus(const ConsensusTrialConfig& config, std::mt19937_64& rng)
{
    const auto& p = config.params;
    const auto T = threshold(p);
    const auto nb = static_cast<uint64_t>(std::llround(config.f * static_cast<double>(p.M)));
    const auto nh = p.M - nb;
    const auto draw = [&](uint64_t n) {
        return static_cast<int64_t>(std::binomial_distribution<uint64_t>{n, p.q}(rng));
    };

    ConsensusTrial out;
    LikelihoodTable table;
    while (true)
    {
        RoundTally tally{table.rounds_elapsed() + 1, {}};
        if (const auto h = draw(nh); h > 0)
            tally.add(simulated_correct_root(), h);
        switch (config.adversary)
        {
        case AdversaryModel::single_root:
            if (const auto b = draw(nb); b > 0)
                tally.add(Hash256::from_u64(2), b);
            break;
        case AdversaryModel::multi_root:
        {
            const uint64_t m = std::max<uint32_t>(config.roots, 1);
            for (uint64_t r = 0; r < m; ++r)
                if (const auto b = draw(nb / m + (r < nb % m ? 1 : 0)); b > 0)
                    tally.add(Hash256::from_u64(2 + r), b);
            break;
        }
        case AdversaryModel::silent:
            break;
        }
        out.nodes_used += static_cast<uint64_t>(tally.total());
        table.apply(tally);
        const auto d = step(table, T, p.max_rounds);
        if (d.kind == Decision::Kind::continue_)
            continue;
        out.rounds = static_cast<uint32_t>(table.rounds_elapsed());
        out.accepted = d.accepted();
        out.wrong = d.accepted() && d.root != simulated_correct_root();
        return out;
    }
}
}  // namespace cicsim
