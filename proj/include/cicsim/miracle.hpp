// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cicsim/hash.hpp>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>

namespace cicsim
{
enum class MiracleErrc
{
    degenerate_params,
    no_solution,
    round_mismatch,
};

class MiracleError : public std::runtime_error
{
public:
    MiracleError(MiracleErrc code, const std::string& what) : std::runtime_error{what}, m_code{code}
    {}
    [[nodiscard]] MiracleErrc code() const noexcept { return m_code; }

private:
    MiracleErrc m_code;
};

struct ConsensusParams
{
    uint64_t M = 1600;     ///< stake pool size
    double f_max = 0.4;    ///< design Byzantine fraction, < 1/2
    double q = 0.125;      ///< per-node execution-set probability
    double beta = 1e-10;   ///< error bound
    uint32_t max_rounds = 100;
};

/// ln((1−β)/β) · 2q(1−q)M(1−f)f / ((1−f) − f), f = f_max.
/// Throws MiracleError(degenerate_params) for f_max outside [0, 1/2) or
/// β outside (0, 1).
double threshold(const ConsensusParams& params);

/// Gaussian moments of the honest and Byzantine per-round counts at fraction f.
struct Moments
{
    double mu_h;
    double nu_h2;
    double mu_b;
    double nu_b2;
};

Moments moments(const ConsensusParams& params, double f) noexcept;

/// Counts of one round, grouped by root.
struct RoundTally
{
    uint64_t round = 1;
    std::map<Hash256, int64_t> counts;

    void add(const Hash256& root, int64_t n = 1) { counts[root] += n; }

    [[nodiscard]] int64_t total() const noexcept
    {
        int64_t c = 0;
        for (const auto& [_, n] : counts)
            c += n;
        return c;
    }
};

/// Running likelihoods L_k = Σ_j (2c_{k,j} − C_j)·C_j in exact integers.
class LikelihoodTable
{
public:
    [[nodiscard]] uint64_t rounds_elapsed() const noexcept { return m_rounds; }
    [[nodiscard]] const std::map<Hash256, int64_t>& likelihoods() const noexcept { return m_L; }

    /// L of a root; roots never seen still carry −Σ C_j².
    [[nodiscard]] int64_t likelihood(const Hash256& root) const
    {
        const auto it = m_L.find(root);
        return it == m_L.end() ? -m_sum_sq : it->second;
    }

    /// Requires tally.round == rounds_elapsed() + 1.
    void apply(const RoundTally& tally);

private:
    std::map<Hash256, int64_t> m_L;
    int64_t m_sum_sq = 0;  ///< Σ C_j² so far
    uint64_t m_rounds = 0;
};

inline LikelihoodTable update_likelihoods(LikelihoodTable table, const RoundTally& tally)
{
    table.apply(tally);
    return table;
}

struct Decision
{
    enum class Kind
    {
        continue_,
        accept,
        no_convergence,
    };
    Kind kind = Kind::continue_;
    Hash256 root;

    [[nodiscard]] bool accepted() const noexcept { return kind == Kind::accept; }
};

/// Accept the root whose likelihood strictly exceeds the threshold. Returns
/// no_convergence once max_rounds have elapsed without acceptance.
Decision step(const LikelihoodTable& table, double threshold_value, uint32_t max_rounds);

inline Decision step(const LikelihoodTable& table, const ConsensusParams& params)
{
    return step(table, threshold(params), params.max_rounds);
}

/// Predicted rounds at Byzantine fraction f (> 0), from the Gaussian moments.
double expected_rounds(const ConsensusParams& params, double f);

/// Smallest q for which an all-honest round of expected size qM gives
/// (qM)² > threshold(q). q·M is the expected execution-set size.
double one_round_q(uint64_t M, double f_max, double beta);

struct Ns1Size
{
    uint64_t size;
    bool saturated;  ///< true when no size <= M suffices; size is then M
};

/// Smallest single-round set size n with P(Bin(n, f_max) > n/2) < β.
Ns1Size ns1_size(double f_max, uint64_t M, double beta);

/// log P(Bin(n, p) > k).
double log_binomial_sf(uint64_t k, uint64_t n, double p);

enum class AdversaryModel
{
    single_root,  ///< every Byzantine member submits one shared wrong root
    multi_root,   ///< Byzantine node i submits wrong root (i mod m)
    silent,       ///< Byzantine members submit nothing
};

struct ConsensusTrialConfig
{
    ConsensusParams params;
    double f = 0.4;  ///< actual Byzantine fraction
    AdversaryModel adversary = AdversaryModel::single_root;
    uint32_t roots = 2;  ///< wrong roots for multi_root
};

struct ConsensusTrial
{
    uint32_t rounds = 0;
    bool accepted = false;
    bool wrong = false;  ///< accepted an incorrect root
    uint64_t nodes_used = 0;
};

/// One consensus run where each round's counts are binomial draws:
/// honest members Bin((1−f)M, q), Byzantine members Bin(fM, q).
ConsensusTrial simulate_consensus(const ConsensusTrialConfig& config, std::mt19937_64& rng);

/// The root that honest members compute in simulate_consensus().
inline Hash256 simulated_correct_root() noexcept
{
    return Hash256::from_u64(1);
}
}  // namespace cicsim
