// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cicsim/experiments.hpp>
#include <cmath>
#include <set>
#include <stdexcept>

namespace cicsim
{
namespace
{
uint64_t pick(std::mt19937_64& rng, uint64_t lo, uint64_t hi)
{
    return lo + rng() % (hi - lo + 1);
}

double unit(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

InstrIndex log_uniform(std::mt19937_64& rng, InstrIndex lo, InstrIndex hi)
{
    const auto a = std::log(static_cast<double>(lo));
    const auto b = std::log(static_cast<double>(hi));
    const auto t = static_cast<InstrIndex>(std::llround(std::exp(a + (b - a) * unit(rng))));
    return std::clamp(t, lo, hi);
}

Hash256 entropy_for(const Hash256& seed, uint64_t trial)
{
    static constexpr uint8_t tag[] = {'e', 'n', 't', 'r', 'o', 'p', 'y'};
    const auto i = be64(trial);
    return sha256({bytes_view{tag}, as_bytes(seed), i});
}

CicState fresh_state(const Program& program)
{
    return {program.code_hash(), program.code_hash()};
}
}  // namespace

void CsvTable::add_row(std::vector<std::string> row)
{
    if (row.size() != m_header.size())
        throw std::invalid_argument("csv row has " + std::to_string(row.size()) + " fields, header has " +
                                    std::to_string(m_header.size()));
    m_rows.push_back(std::move(row));
}

std::string csv_field(std::string_view v)
{
    if (v.find_first_of(",\"\r\n") == std::string_view::npos)
        return std::string{v};
    std::string out = "\"";
    for (const auto c : v)
    {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string CsvTable::text(std::string_view comment) const
{
    std::string out = "# ";
    out += comment;
    out += "\r\n";
    const auto line = [&](const std::vector<std::string>& fields) {
        for (size_t i = 0; i < fields.size(); ++i)
        {
            if (i)
                out += ',';
            out += csv_field(fields[i]);
        }
        out += "\r\n";
    };
    line(m_header);
    for (const auto& r : m_rows)
        line(r);
    return out;
}

std::string provenance_comment(std::string_view canonical_spec, const Hash256& seed)
{
    const auto h = sha256(bytes_view{reinterpret_cast<const uint8_t*>(canonical_spec.data()),
        canonical_spec.size()});
    return "spec_hash=" + h.hex() + ",seed=" + seed.hex();
}

MiracleStats miracle_stats(const ConsensusTrialConfig& config, const RunOptions& options)
{
    (void)threshold(config.params);  // reject degenerate parameters before spawning work
    const auto trials = run_trials(options.trials, options.threads, [&](uint64_t i) {
        auto rng = trial_rng(options.seed, i);
        return simulate_consensus(config, rng);
    });
    MiracleStats s;
    s.trials = trials.size();
    std::vector<double> rounds;
    std::vector<double> nodes;
    rounds.reserve(trials.size());
    nodes.reserve(trials.size());
    for (const auto& t : trials)
    {
        rounds.push_back(t.rounds);
        nodes.push_back(static_cast<double>(t.nodes_used));
        s.accepted += t.accepted ? 1 : 0;
        s.wrong += t.wrong ? 1 : 0;
        s.exhausted += t.accepted ? 0 : 1;
    }
    s.rounds = summarize(rounds);
    s.nodes_used = summarize(nodes);
    return s;
}

double design_q(uint64_t M, double f_max, double beta, double target_rounds)
{
    if (!(target_rounds > 0))
        throw MiracleError{MiracleErrc::degenerate_params, "design_q: target rounds must be > 0"};
    const auto rounds_at = [&](double q) {
        return expected_rounds({M, f_max, q, beta, 1}, f_max);
    };
    double lo = 1e-12;
    double hi = 1 - 1e-12;
    if (!(rounds_at(lo) > target_rounds && rounds_at(hi) < target_rounds))
        throw MiracleError{MiracleErrc::no_solution, "design_q: target outside the reachable range"};
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i)
    {
        const auto mid = 0.5 * (lo + hi);
        (rounds_at(mid) > target_rounds ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

RiceBoundsRow rice_bounds_trial(const Program& program, const Hash256& entropy, uint64_t trial)
{
    const auto run = rice_run(program, fresh_state(program), {}, 1, entropy);
    const auto report = analyze_schedule(run.total, {run.update_indices});
    const auto& r = report.rounds.front();
    RiceBoundsRow row;
    row.trial = trial;
    row.total = run.total;
    row.phi = r.phi;
    row.k_terminal = r.k_terminal;
    row.k_last_update = r.k_last_update;
    row.phi_ok = phi_within_bounds(r.phi, r.k_last_update);
    row.total_ok = total_within_bounds(run.total, r.k_terminal);
    row.last_update_fraction = r.last_update_fraction;
    row.fraction_bound = last_update_fraction_bound(run.total);
    row.fraction_ok = r.last_update_fraction < row.fraction_bound;
    return row;
}

std::vector<RiceBoundsRow> rice_bounds(InstrIndex t_min, InstrIndex t_max, const RunOptions& options)
{
    if (t_min == 0 || t_min > t_max)
        throw std::invalid_argument("rice_bounds: need 1 <= t_min <= t_max");
    return run_trials(options.trials, options.threads, [&](uint64_t i) {
        auto rng = trial_rng(options.seed, i);
        const auto total = log_uniform(rng, t_min, t_max);
        const auto program = random_program(total, rng());
        return rice_bounds_trial(program, entropy_for(options.seed, i), i);
    });
}

std::vector<RiceDivergenceRow> rice_divergence(
    InstrIndex t_min, InstrIndex t_max, uint64_t rounds, const RunOptions& options)
{
    if (rounds < 2)
        throw std::invalid_argument("rice_divergence: need two or more rounds");
    if (t_min == 0 || t_min > t_max)
        throw std::invalid_argument("rice_divergence: need 1 <= t_min <= t_max");
    return run_trials(options.trials, options.threads, [&](uint64_t i) {
        auto rng = trial_rng(options.seed, i);
        const auto total = log_uniform(rng, t_min, t_max);
        const auto program = random_program(total, rng());
        const auto entropy = entropy_for(options.seed, i);
        const auto state = fresh_state(program);

        RiceDivergenceRow row;
        row.trial = i;
        std::vector<std::vector<InstrIndex>> updates;
        std::set<Hash256> seeds;
        std::set<Hash256> roots;
        for (uint64_t j = 1; j <= rounds; ++j)
        {
            auto run = rice_run(program, state, {}, j, entropy);
            row.total = run.total;
            seeds.insert(run.digest.seed);
            roots.insert(run.digest.root);
            updates.push_back(std::move(run.update_indices));
        }
        const auto report = analyze_schedule(row.total, updates);
        row.k_terminal = report.rounds.front().k_terminal;
        row.roots_identical = roots.size() == 1;
        row.seeds_distinct = seeds.size() == rounds;
        for (const auto& r : report.rounds)
            row.strong_unmatched.push_back(r.strong_unmatched);
        return row;
    });
}

OverheadResult rice_overhead(
    InstrIndex t_min, InstrIndex t_max, uint64_t points, const Hash256& entropy)
{
    if (points < 2 || t_min < 8 || t_min >= t_max)
        throw std::invalid_argument("rice_overhead: need points >= 2 and 8 <= t_min < t_max");
    OverheadResult out;
    std::vector<double> x;
    std::vector<double> y;
    const auto a = std::log(static_cast<double>(t_min));
    const auto b = std::log(static_cast<double>(t_max));
    for (uint64_t i = 0; i < points; ++i)
    {
        const auto t = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
        const auto eta = static_cast<uint64_t>(std::max(0.0, std::round((t - 8) / 4)));
        const auto program = compute_program(eta);
        const auto run = rice_run(program, fresh_state(program), {}, 1, entropy);
        out.points.push_back({eta, run.total, run.update_indices.size()});
        const auto l = std::log2(static_cast<double>(run.total));
        x.push_back(l * l);
        y.push_back(static_cast<double>(run.update_indices.size()));
    }
    out.fit = linear_fit(x, y);
    return out;
}

Scenario random_scenario(const Hash256& seed, uint64_t index)
{
    auto rng = trial_rng(seed, index);
    Scenario s;
    s.name = "random-" + std::to_string(index);
    s.seed = trial_seed(seed, index);
    s.sp_size = pick(rng, 20, 80);
    s.node_deposit = static_cast<Amount>(pick(rng, 50, 1000));
    s.node_balance = static_cast<Amount>(pick(rng, 0, 100));
    s.treasury = static_cast<Amount>(pick(rng, 0, 1000));
    s.consensus = {s.sp_size, 0.3, 0.2 + 0.4 * unit(rng), 1e-2, static_cast<uint32_t>(pick(rng, 3, 12))};
    s.policy.reward = static_cast<Amount>(pick(rng, 1, 50));
    s.policy.deposit = static_cast<Amount>(pick(rng, 10, 200));
    s.policy.d_min = static_cast<Amount>(pick(rng, 0, 200));
    s.chain.block_capacity = rng() % 2 ? 0 : static_cast<uint32_t>(pick(rng, 5, 40));
    s.chain.max_inclusion_delay = static_cast<uint32_t>(pick(rng, 0, 2));
    // Windows cover the worst inclusion delay; capacity overflow can still push messages out.
    s.windows.gas_per_block = pick(rng, 100, 2000);
    s.windows.src_slack = s.chain.max_inclusion_delay + pick(rng, 0, 3);
    s.windows.w_buf = pick(rng, 0, 3);
    s.windows.w_sr = s.chain.max_inclusion_delay + pick(rng, 1, 4);
    s.max_blocks = 20'000;

    const char* byzantine[] = {"byzantine", "multi:3", "silent", "chaos"};
    double left = 0.35;
    for (const auto* tag : byzantine)
    {
        const auto f = std::min(left, 0.12 * unit(rng));
        left -= f;
        s.strategy_mix.emplace_back(tag, f);
    }
    s.strategy_mix.emplace_back("freeloader:" + format_double(unit(rng)), 0.15 * unit(rng));
    s.strategy_mix.emplace_back("colluder:" + std::to_string(pick(rng, 0, 2)), 0.1 * unit(rng));

    s.creators["alice"] = static_cast<Amount>(pick(rng, 1'000'000, 10'000'000));
    s.creators["bob"] = static_cast<Amount>(pick(rng, 0, 5'000));

    const auto contracts = pick(rng, 1, 16);
    for (uint64_t c = 0; c < contracts; ++c)
    {
        ContractSpec spec;
        spec.name = "c" + std::to_string(c);
        const auto eta = pick(rng, 0, 300);
        spec.program = "compute:" + std::to_string(eta);
        if (rng() % 3 == 0)
        {
            CicState st;
            st.put(Hash256::from_u64(pick(rng, 1, 9)), Hash256::from_u64(rng()));
            spec.storage = st;
        }
        const auto txs = pick(rng, 1, 3);
        for (uint64_t t = 0; t < txs; ++t)
        {
            TxSpec tx;
            tx.contract = spec.name;
            tx.creator = rng() % 5 == 0 ? "bob" : "alice";
            tx.data = {static_cast<uint8_t>(rng()), static_cast<uint8_t>(rng())};
            const auto need = compute_total(eta);
            // One in twenty transactions is under-provisioned and cannot execute.
            tx.gas_limit = rng() % 20 == 0 ? std::max<uint64_t>(1, need / 2) : need + pick(rng, 0, 5000);
            tx.gas_price = static_cast<Amount>(pick(rng, 0, 3));
            tx.block = pick(rng, 0, 30);
            s.transactions.push_back(std::move(tx));
        }
        s.contracts.push_back(std::move(spec));
    }
    return s;
}

ProtocolAudit audit_run(const RunResult& result)
{
    struct Window
    {
        Block start;
        Block commit_end;
        Block buffer_end;
        Block reveal_end;
    };
    using Key = std::tuple<uint64_t, uint64_t>;
    std::map<Key, Window> windows;
    std::map<std::tuple<uint64_t, uint64_t, uint64_t>, Hash256> commits;

    ProtocolAudit audit;
    for (const auto& line : result.log.lines())
    {
        const auto ev = nlohmann::json::parse(line);
        const auto type = ev.value("event", "");
        if (type == "round_open")
        {
            windows[{ev["it"], ev["round"]}] = {
                ev["block"], ev["commit_end"], ev["buffer_end"], ev["reveal_end"]};
        }
        else if (type == "commit")
        {
            ++audit.commits;
            const Block b = ev["block"];
            const auto w = windows.find({ev["it"], ev["round"]});
            if (w == windows.end() || b < w->second.start || b > w->second.commit_end)
                ++audit.window_violations;
            commits[{ev["it"], ev["round"], ev["node"]}] = Hash256::from_hex(ev["se"].get<std::string>());
        }
        else if (type == "reveal")
        {
            ++audit.reveals;
            const Block b = ev["block"];
            const auto w = windows.find({ev["it"], ev["round"]});
            if (w == windows.end() || b <= w->second.buffer_end || b > w->second.reveal_end)
                ++audit.window_violations;
            const Digest d{Hash256::from_hex(ev["seed"].get<std::string>()),
                Hash256::from_hex(ev["root"].get<std::string>())};
            const SortResult sort{true, Hash256::from_hex(ev["o"].get<std::string>()),
                Hash256::from_hex(ev["proof"].get<std::string>())};
            const auto c = commits.find({ev["it"], ev["round"], ev["node"]});
            if (c == commits.end() || c->second != commitment(d, sort))
                ++audit.unmatched_reveals;
        }
    }
    audit.conserved = result.initial_value == result.final_value;
    audit.replay_identical = replay(result.log.text()).identical;
    return audit;
}

UtilityGrid utility_grid()
{
    const double Rs[] = {1, 2, 5, 10, 20, 50, 100, 200, 500, 1000};
    const double Ds[] = {0, 1, 5, 10, 25, 50, 100, 250, 500, 1000};
    const double gammas[] = {0, 1e-3, 1e-2, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999};
    const double c1s[] = {0, 1, 2, 5, 10, 20, 50, 100, 200, 1000};
    UtilityGrid g;
    for (const auto R : Rs)
        for (const auto D : Ds)
            for (const auto gamma : gammas)
                for (const auto c1 : c1s)
                {
                    UtilityParams p;
                    p.R = R;
                    p.D = D;
                    p.beta = 1e-6;
                    p.gamma = gamma;
                    p.c1 = c1;
                    p.c2 = 1;
                    const bool nash = nash_condition(p);
                    const bool direct = utility_honest(p) - utility_freeload(p) > 0;
                    ++g.points;
                    g.nash_true += nash ? 1 : 0;
                    g.disagreements += nash != direct ? 1 : 0;
                }
    return g;
}
}  // namespace cicsim
