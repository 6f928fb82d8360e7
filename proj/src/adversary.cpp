// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cicsim/adversary.hpp>
#include <cicsim/harness.hpp>
#include <cmath>
#include <random>
#include <stdexcept>

namespace cicsim
{
namespace
{
std::pair<std::string_view, std::string_view> split_tag(std::string_view text)
{
    const auto pos = text.find(':');
    if (pos == std::string_view::npos)
        return {text, {}};
    return {text.substr(0, pos), text.substr(pos + 1)};
}

double parse_double(std::string_view s, std::string_view what)
{
    try
    {
        size_t used = 0;
        const auto v = std::stod(std::string{s}, &used);
        if (used == s.size())
            return v;
    }
    catch (const std::exception&)
    {}
    throw std::invalid_argument("bad " + std::string{what} + " '" + std::string{s} + "'");
}
}  // namespace

Strategy Strategy::parse(std::string_view text)
{
    const auto [tag, arg] = split_tag(text);
    Strategy s;
    if (tag == "honest" && arg.empty())
        s.kind = Kind::honest;
    else if (tag == "byzantine" && arg.empty())
        s.kind = Kind::byzantine_single_root;
    else if (tag == "multi")
    {
        s.kind = Kind::byzantine_multi_root;
        s.roots = static_cast<uint32_t>(parse_double(arg, "root count"));
        if (s.roots < 1)
            throw std::invalid_argument("multi: root count must be >= 1");
    }
    else if (tag == "freeloader")
    {
        s.kind = Kind::free_loader;
        s.gamma = parse_double(arg, "gamma");
        if (s.gamma < 0 || s.gamma > 1)
            throw std::invalid_argument("freeloader: gamma must lie in [0, 1]");
    }
    else if (tag == "colluder")
    {
        s.kind = Kind::colluder;
        s.group = static_cast<uint32_t>(parse_double(arg, "group"));
    }
    else if (tag == "silent" && arg.empty())
        s.kind = Kind::silent;
    else if (tag == "chaos" && arg.empty())
        s.kind = Kind::chaos;
    else
        throw std::invalid_argument("unknown strategy '" + std::string{text} + "'");
    return s;
}

std::string Strategy::to_string() const
{
    switch (kind)
    {
    case Kind::honest:
        return "honest";
    case Kind::byzantine_single_root:
        return "byzantine";
    case Kind::byzantine_multi_root:
        return "multi:" + std::to_string(roots);
    case Kind::free_loader:
        return "freeloader:" + format_double(gamma);
    case Kind::colluder:
        return "colluder:" + std::to_string(group);
    case Kind::silent:
        return "silent";
    case Kind::chaos:
        return "chaos";
    }
    return "honest";
}

double utility_honest(const UtilityParams& p) noexcept
{
    return (1 - p.beta) * p.R - p.beta * p.D - p.c1;
}

double utility_freeload(const UtilityParams& p) noexcept
{
    return p.gamma * ((1 - p.beta) * p.R - p.beta * p.D) - (1 - p.gamma) * p.D - p.c2;
}

bool nash_condition(const UtilityParams& p) noexcept
{
    return (1 - p.beta) * (1 - p.gamma) * (p.R + p.D) > p.c1 - p.c2;
}

CollusionUtility utility_collude(const UtilityParams& p) noexcept
{
    CollusionUtility out{p.gamma1 * ((1 - p.beta) * p.R - p.beta * p.D) - p.gamma2 * p.D - p.c3, {}};
    if (p.gamma1 == 1.0)
        out.epsilon = p.c3 - p.c1;
    return out;
}

Gammas exact_gammas(uint64_t M, double q, double th1, double th2, uint64_t coalition)
{
    if (coalition > M)
        throw std::invalid_argument("coalition larger than the stake pool");
    const auto n = M - coalition;
    const auto c = static_cast<double>(coalition);
    const auto nd = static_cast<double>(n);
    Gammas g{0, 0};
    for (uint64_t x = 0; x <= n; ++x)
    {
        const auto xd = static_cast<double>(x);
        double pmf;
        if (q <= 0.0)
            pmf = x == 0 ? 1.0 : 0.0;
        else if (q >= 1.0)
            pmf = x == n ? 1.0 : 0.0;
        else
            pmf = std::exp(std::lgamma(nd + 1) - std::lgamma(xd + 1) - std::lgamma(nd - xd + 1) +
                           xd * std::log(q) + (nd - xd) * std::log1p(-q));
        const auto es = c + xd;
        if (c > th1 * es)
            g.gamma1 += pmf;
        if (c < th2 * es)
            g.gamma2 += pmf;
    }
    return g;
}

Gammas estimate_gammas(uint64_t M, double q, double th1, double th2, uint64_t coalition,
    uint64_t trials, const Hash256& seed)
{
    if (coalition > M)
        throw std::invalid_argument("coalition larger than the stake pool");
    if (trials == 0)
        throw std::invalid_argument("estimate_gammas: trials must be positive");
    const auto c = static_cast<double>(coalition);
    uint64_t hits1 = 0;
    uint64_t hits2 = 0;
    for (uint64_t t = 0; t < trials; ++t)
    {
        auto rng = trial_rng(seed, t);
        const auto x = std::binomial_distribution<uint64_t>{M - coalition, q}(rng);
        const auto es = c + static_cast<double>(x);
        hits1 += c > th1 * es ? 1 : 0;
        hits2 += c < th2 * es ? 1 : 0;
    }
    const auto n = static_cast<double>(trials);
    return {static_cast<double>(hits1) / n, static_cast<double>(hits2) / n};
}
}  // namespace cicsim
