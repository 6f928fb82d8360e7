// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cicsim/hash.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace cicsim
{
/// H(experiment_seed ‖ be64(trial_index)).
inline Hash256 trial_seed(const Hash256& experiment_seed, uint64_t trial_index)
{
    const auto idx = be64(trial_index);
    return sha256({as_bytes(experiment_seed), idx});
}

/// A generator seeded from the full 256-bit trial seed.
inline std::mt19937_64 trial_rng(const Hash256& experiment_seed, uint64_t trial_index)
{
    const auto s = trial_seed(experiment_seed, trial_index);
    std::seed_seq seq(s.bytes.begin(), s.bytes.end());
    return std::mt19937_64{seq};
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers and returns the
/// results in index order, so output does not depend on the worker count.
template <typename Fn>
auto run_trials(uint64_t n, unsigned threads, Fn&& fn)
{
    using Result = decltype(fn(uint64_t{}));
    std::vector<Result> out(n);
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<uint64_t>(n, 1))));
    if (threads == 1)
    {
        for (uint64_t i = 0; i < n; ++i)
            out[i] = fn(i);
        return out;
    }
    std::atomic<uint64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (auto i = next++; i < n; i = next++)
            {
                try
                {
                    out[i] = fn(i);
                }
                catch (...)
                {
                    const std::lock_guard lock{error_mutex};
                    if (!error)
                        error = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
    return out;
}

/// Mean and 95% normal-approximation half-width.
struct Summary
{
    uint64_t n = 0;
    double mean = 0;
    double stddev = 0;
    double half_width = 0;
};

template <typename Range>
Summary summarize(const Range& values)
{
    Summary s;
    for (const auto v : values)
    {
        ++s.n;
        s.mean += static_cast<double>(v);
    }
    if (s.n == 0)
        return s;
    s.mean /= static_cast<double>(s.n);
    double ss = 0;
    for (const auto v : values)
        ss += (static_cast<double>(v) - s.mean) * (static_cast<double>(v) - s.mean);
    s.stddev = s.n > 1 ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;
    s.half_width = 1.959963984540054 * s.stddev / std::sqrt(static_cast<double>(s.n));
    return s;
}

/// Least squares y = slope·x + intercept.
struct LinearFit
{
    double slope = 0;
    double intercept = 0;
    double r_squared = 0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Shortest decimal that round-trips, e.g. "0.1", "1e-20".
std::string format_double(double v);
}  // namespace cicsim
