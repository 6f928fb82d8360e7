// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cicsim/hash.hpp>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace cicsim
{
/// Node behaviour in protocol runs.
struct Strategy
{
    enum class Kind
    {
        honest,
        byzantine_single_root,  ///< all such nodes share one wrong root and seed
        byzantine_multi_root,   ///< node i uses wrong root variant (i mod roots)
        free_loader,            ///< reuses the previous leading root, guesses the seed w.p. gamma
        colluder,               ///< reuses the leading root with one invented seed per group
        silent,                 ///< commits but never reveals
        chaos,                  ///< honest digest plus malformed and mistimed messages
    };

    Kind kind = Kind::honest;
    uint32_t roots = 2;
    double gamma = 0.0;
    uint32_t group = 0;

    /// "honest", "byzantine", "multi:<m>", "freeloader:<gamma>",
    /// "colluder:<group>", "silent", "chaos".
    static Strategy parse(std::string_view text);
    [[nodiscard]] std::string to_string() const;

    [[nodiscard]] bool is_byzantine() const noexcept
    {
        return kind == Kind::byzantine_single_root || kind == Kind::byzantine_multi_root ||
               kind == Kind::silent || kind == Kind::chaos;
    }

    friend bool operator==(const Strategy&, const Strategy&) = default;
};

struct UtilityParams
{
    double R = 100;
    double D = 50;
    double beta = 0;
    double gamma = 0;
    double gamma1 = 0;
    double gamma2 = 0;
    double c1 = 10;
    double c2 = 1;
    double c3 = 10;
};

/// (1−β)R − βD − c1.
double utility_honest(const UtilityParams& p) noexcept;

/// γ((1−β)R − βD) − (1−γ)D − c2.
double utility_freeload(const UtilityParams& p) noexcept;

/// Honest strictly beats free-loading:
/// (1−β)(1−γ)(R + D) > c1 − c2.
bool nash_condition(const UtilityParams& p) noexcept;

struct CollusionUtility
{
    double utility;
    /// c3 − c1 when gamma1 == 1, else empty.
    std::optional<double> epsilon;
};

/// γ1((1−β)R − βD) − γ2·D − c3.
CollusionUtility utility_collude(const UtilityParams& p) noexcept;

struct Gammas
{
    double gamma1;  ///< P(|C| > th1·|ES|)
    double gamma2;  ///< P(|C| < th2·|ES|)
};

/// Coalition members are all in the execution set; the rest of the M−c
/// pool members join independently with probability q.
Gammas exact_gammas(uint64_t M, double q, double th1, double th2, uint64_t coalition);

Gammas estimate_gammas(uint64_t M, double q, double th1, double th2, uint64_t coalition,
    uint64_t trials, const Hash256& seed);
}  // namespace cicsim
