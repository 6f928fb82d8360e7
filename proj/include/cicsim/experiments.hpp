// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cicsim/adversary.hpp>
#include <cicsim/harness.hpp>
#include <cicsim/miracle.hpp>
#include <cicsim/protocol.hpp>
#include <cicsim/rice.hpp>
#include <string>
#include <vector>

namespace cicsim
{
struct RunOptions
{
    Hash256 seed;
    uint64_t trials = 1000;
    unsigned threads = 1;
};

/// RFC-4180 style table. The first output line is a '#' comment.
class CsvTable
{
public:
    explicit CsvTable(std::vector<std::string> header) : m_header{std::move(header)} {}

    /// Throws std::invalid_argument on a width mismatch.
    void add_row(std::vector<std::string> row);

    [[nodiscard]] const std::vector<std::string>& header() const noexcept { return m_header; }
    [[nodiscard]] const std::vector<std::vector<std::string>>& rows() const noexcept { return m_rows; }
    [[nodiscard]] std::string text(std::string_view comment) const;

private:
    std::vector<std::string> m_header;
    std::vector<std::vector<std::string>> m_rows;
};

std::string csv_field(std::string_view v);

/// "spec_hash=<hex>,seed=<hex>", where spec_hash = H(canonical experiment text).
std::string provenance_comment(std::string_view canonical_spec, const Hash256& seed);

struct MiracleStats
{
    Summary rounds;
    uint64_t trials = 0;
    uint64_t accepted = 0;
    uint64_t wrong = 0;
    uint64_t exhausted = 0;  ///< hit max_rounds
    Summary nodes_used;

    [[nodiscard]] double wrong_rate() const noexcept
    {
        return trials == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(trials);
    }
};

/// Trial i draws from trial_rng(options.seed, i); the result does not depend
/// on options.threads.
MiracleStats miracle_stats(const ConsensusTrialConfig& config, const RunOptions& options);

/// The q at which expected_rounds at f = f_max equals target_rounds.
double design_q(uint64_t M, double f_max, double beta, double target_rounds);

struct RiceBoundsRow
{
    uint64_t trial = 0;
    InstrIndex total = 0;
    uint64_t phi = 0;
    uint64_t k_terminal = 0;
    uint64_t k_last_update = 0;
    bool phi_ok = false;    ///< against k_last_update
    bool total_ok = false;  ///< against k_terminal
    double last_update_fraction = 0;
    double fraction_bound = 0;
    bool fraction_ok = false;
};

RiceBoundsRow rice_bounds_trial(const Program& program, const Hash256& entropy, uint64_t trial);

/// Random programs with T log-uniform in [t_min, t_max].
std::vector<RiceBoundsRow> rice_bounds(InstrIndex t_min, InstrIndex t_max, const RunOptions& options);

struct RiceDivergenceRow
{
    uint64_t trial = 0;
    InstrIndex total = 0;
    uint64_t k_terminal = 0;
    bool roots_identical = false;
    bool seeds_distinct = false;
    std::vector<uint64_t> strong_unmatched;  ///< per round, round 1 first
};

/// One random program and entropy per trial, executed for rounds 1..rounds.
std::vector<RiceDivergenceRow> rice_divergence(
    InstrIndex t_min, InstrIndex t_max, uint64_t rounds, const RunOptions& options);

struct OverheadPoint
{
    uint64_t eta = 0;
    InstrIndex total = 0;
    uint64_t phi = 0;
};

struct OverheadResult
{
    std::vector<OverheadPoint> points;
    LinearFit fit;  ///< phi against (log2 T)^2
};

/// Compute(eta) programs with T spread log-uniformly over [t_min, t_max].
OverheadResult rice_overhead(InstrIndex t_min, InstrIndex t_max, uint64_t points, const Hash256& entropy);

/// A randomized scenario: up to 16 contracts run ITs in parallel, with a
/// strategy mix, inclusion delays and block capacity limits.
Scenario random_scenario(const Hash256& seed, uint64_t index);

struct ProtocolAudit
{
    uint64_t commits = 0;
    uint64_t reveals = 0;
    uint64_t window_violations = 0;
    uint64_t unmatched_reveals = 0;
    bool conserved = false;
    bool replay_identical = false;

    [[nodiscard]] bool ok() const noexcept
    {
        return window_violations == 0 && unmatched_reveals == 0 && conserved && replay_identical;
    }
};

/// Re-checks a run from its event log alone: window discipline, reveal and
/// commitment matching, value conservation, and byte-identical replay.
ProtocolAudit audit_run(const RunResult& result);

struct UtilityGrid
{
    uint64_t points = 0;
    uint64_t disagreements = 0;
    uint64_t nash_true = 0;
};

/// nash_condition against the sign of utility_honest − utility_freeload over
/// a 10×10×10×10 grid of (R, D, gamma, c1).
UtilityGrid utility_grid();
}  // namespace cicsim
