// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cicsim/experiments.hpp>
#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace cicsim;

namespace
{
constexpr int exit_invariant = 1;
constexpr int exit_config = 2;

struct Globals
{
    std::string seed = "1";
    uint64_t trials = 2000;
    std::string out = "-";
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
};

Hash256 parse_seed(const std::string& text)
{
    if (!text.empty() && text.size() <= 19 &&
        text.find_first_not_of("0123456789") == std::string::npos)
        return Hash256::from_u64(std::stoull(text));
    return Hash256::from_hex(text);
}

std::string read_file(const std::string& path)
{
    std::ifstream in{path, std::ios::binary};
    if (!in)
        throw ProtocolError{ProtocolErrc::config_error, "cannot open '" + path + "'"};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text)
{
    if (path == "-")
    {
        std::cout << text;
        return;
    }
    std::ofstream out{path, std::ios::binary};
    if (!out)
        throw ProtocolError{ProtocolErrc::config_error, "cannot write '" + path + "'"};
    out << text;
}

AdversaryModel parse_adversary(const std::string& text, uint32_t& roots)
{
    if (text == "single")
        return AdversaryModel::single_root;
    if (text == "silent")
        return AdversaryModel::silent;
    if (text.rfind("multi:", 0) == 0)
    {
        roots = static_cast<uint32_t>(std::stoul(text.substr(6)));
        if (roots < 2)
            throw ProtocolError{ProtocolErrc::config_error, "adversary: multi:<m> needs m >= 2"};
        return AdversaryModel::multi_root;
    }
    throw ProtocolError{ProtocolErrc::config_error, "adversary: expected single, multi:<m> or silent"};
}

std::string str(double v)
{
    return format_double(v);
}

std::string str(uint64_t v)
{
    return std::to_string(v);
}

CsvTable miracle_table()
{
    return CsvTable{{"M", "q", "beta", "f_max", "f", "adversary", "trials", "mean_rounds",
        "rounds_half_width", "accept_rate", "wrong_rate", "wrong", "mean_nodes", "nodes_half_width"}};
}

void miracle_row(CsvTable& t, const ConsensusTrialConfig& c, const std::string& adversary,
    const MiracleStats& s)
{
    t.add_row({str(c.params.M), str(c.params.q), str(c.params.beta), str(c.params.f_max), str(c.f),
        adversary, str(s.trials), str(s.rounds.mean), str(s.rounds.half_width),
        str(static_cast<double>(s.accepted) / static_cast<double>(s.trials)), str(s.wrong_rate()),
        str(s.wrong), str(s.nodes_used.mean), str(s.nodes_used.half_width)});
}
}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"cicsim: off-chain contract execution simulator", "cicsim"};
    app.set_version_flag("--version", std::string{CICSIM_VERSION});
    app.set_config("--config", "", "TOML file with option values");
    app.require_subcommand(1);

    Globals g;
    app.add_option("--seed", g.seed, "experiment seed: integer or 64 hex digits")->capture_default_str();
    app.add_option("--trials", g.trials, "Monte Carlo trials")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "output path, - for stdout")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);

    ConsensusParams params;
    std::vector<double> fs{0.4};
    std::string adversary = "single";

    auto* mc = app.add_subcommand("miracle-mc", "rounds to decision under a fixed q");
    mc->add_option("--M", params.M)->capture_default_str();
    mc->add_option("--q", params.q)->capture_default_str();
    mc->add_option("--beta", params.beta)->capture_default_str();
    mc->add_option("--f-max", params.f_max)->capture_default_str();
    mc->add_option("--max-rounds", params.max_rounds)->capture_default_str();
    mc->add_option("--f", fs, "actual Byzantine fractions")->capture_default_str();
    mc->add_option("--adversary", adversary, "single, multi:<m> or silent")->capture_default_str();

    double target_rounds = 5;
    auto* adaptive = app.add_subcommand("adaptive", "q chosen so that expected rounds at f_max hit a target");
    adaptive->add_option("--M", params.M)->capture_default_str();
    adaptive->add_option("--beta", params.beta)->capture_default_str();
    adaptive->add_option("--f-max", params.f_max)->capture_default_str();
    adaptive->add_option("--max-rounds", params.max_rounds)->capture_default_str();
    adaptive->add_option("--target-rounds", target_rounds)->capture_default_str();
    adaptive->add_option("--f", fs)->capture_default_str();
    adaptive->add_option("--adversary", adversary)->capture_default_str();

    std::vector<double> f_maxes{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45};
    auto* es = app.add_subcommand("es-sizing", "one-round q and the smallest honest-majority set");
    es->add_option("--M", params.M)->capture_default_str();
    es->add_option("--beta", params.beta)->capture_default_str();
    es->add_option("--f-max", f_maxes)->capture_default_str();

    std::string program_spec = "compute:1000";
    std::string entropy = "0";
    uint64_t rounds = 5;
    auto* trace = app.add_subcommand("rice-trace", "per-round RICE schedule of one program");
    trace->add_option("--program", program_spec, "compute:<eta> or an assembly file")->capture_default_str();
    trace->add_option("--entropy", entropy, "round-1 entropy: integer or hex")->capture_default_str();
    trace->add_option("--rounds", rounds)->capture_default_str()->check(CLI::PositiveNumber);

    InstrIndex t_min = 1'000'000;
    InstrIndex t_max = 100'000'000;
    uint64_t points = 12;
    auto* overhead = app.add_subcommand("rice-overhead", "update count against (log2 T)^2 for Compute(eta)");
    overhead->add_option("--t-min", t_min)->capture_default_str();
    overhead->add_option("--t-max", t_max)->capture_default_str();
    overhead->add_option("--points", points)->capture_default_str();

    std::string scenario_path;
    std::string log_path;
    std::optional<uint64_t> random_index;
    auto* run = app.add_subcommand("protocol-run", "full protocol run on the block clock");
    run->add_option("--scenario", scenario_path, "scenario JSON file");
    run->add_option("--random", random_index, "generate random scenario <index> from --seed instead");
    run->add_option("--log", log_path, "event log output path");

    UtilityParams up;
    bool grid = false;
    auto* utility = app.add_subcommand("utility", "honest, free-load and collusion utilities");
    utility->add_option("--R", up.R)->capture_default_str();
    utility->add_option("--D", up.D)->capture_default_str();
    utility->add_option("--beta", up.beta)->capture_default_str();
    utility->add_option("--gamma", up.gamma)->capture_default_str();
    utility->add_option("--gamma1", up.gamma1)->capture_default_str();
    utility->add_option("--gamma2", up.gamma2)->capture_default_str();
    utility->add_option("--c1", up.c1)->capture_default_str();
    utility->add_option("--c2", up.c2)->capture_default_str();
    utility->add_option("--c3", up.c3)->capture_default_str();
    utility->add_flag("--grid", grid, "check nash_condition over the built-in grid");

    std::string replay_path;
    auto* rep = app.add_subcommand("replay", "re-run the scenario in an event log and compare");
    rep->add_option("log", replay_path, "event log")->required();

    CLI11_PARSE(app, argc, argv);

    try
    {
        const auto seed = parse_seed(g.seed);
        const RunOptions opts{seed, g.trials, g.threads};
        const auto comment = provenance_comment(app.config_to_str(true), seed);

        if (*mc || *adaptive)
        {
            ConsensusTrialConfig cfg;
            cfg.params = params;
            cfg.adversary = parse_adversary(adversary, cfg.roots);
            if (*adaptive)
                cfg.params.q = design_q(params.M, params.f_max, params.beta, target_rounds);
            auto t = miracle_table();
            for (const auto f : fs)
            {
                cfg.f = f;
                miracle_row(t, cfg, adversary, miracle_stats(cfg, opts));
            }
            write_output(g.out, t.text(comment));
            return 0;
        }
        if (*es)
        {
            CsvTable t{{"M", "beta", "f_max", "one_round_q", "expected_es", "ns1", "ns1_saturated"}};
            for (const auto f : f_maxes)
            {
                const auto q = one_round_q(params.M, f, params.beta);
                const auto ns1 = ns1_size(f, params.M, params.beta);
                t.add_row({str(params.M), str(params.beta), str(f), str(q),
                    str(q * static_cast<double>(params.M)), str(ns1.size), ns1.saturated ? "1" : "0"});
            }
            write_output(g.out, t.text(comment));
            return 0;
        }
        if (*trace)
        {
            const auto program = load_program(program_spec);
            const CicState state{program.code_hash(), program.code_hash()};
            const auto e = parse_seed(entropy);
            std::vector<RiceRun> runs;
            std::vector<std::vector<InstrIndex>> updates;
            for (uint64_t j = 1; j <= rounds; ++j)
            {
                runs.push_back(rice_run(program, state, {}, j, e));
                updates.push_back(runs.back().update_indices);
            }
            const auto report = analyze_schedule(runs.front().total, updates);
            CsvTable t{{"round", "T", "phi", "strong_unmatched", "k_terminal", "k_last_update",
                "last_update_fraction", "seed", "root"}};
            bool same_root = true;
            for (size_t j = 0; j < runs.size(); ++j)
            {
                const auto& r = report.rounds[j];
                same_root = same_root && runs[j].digest.root == runs.front().digest.root;
                t.add_row({str(j + 1), str(runs[j].total), str(r.phi), str(r.strong_unmatched),
                    str(r.k_terminal), str(r.k_last_update), str(r.last_update_fraction),
                    runs[j].digest.seed.hex(), runs[j].digest.root.hex()});
            }
            write_output(g.out, t.text(comment));
            if (!same_root)
            {
                std::cerr << "invariant violated: roots differ across rounds\n";
                return exit_invariant;
            }
            return 0;
        }
        if (*overhead)
        {
            const auto res = rice_overhead(t_min, t_max, points, seed);
            CsvTable t{{"eta", "T", "log2_T_squared", "phi", "fit_slope", "fit_intercept", "fit_r_squared"}};
            for (const auto& p : res.points)
            {
                const auto l = std::log2(static_cast<double>(p.total));
                t.add_row({str(p.eta), str(p.total), str(l * l), str(p.phi), "", "", ""});
            }
            t.add_row({"", "", "", "", str(res.fit.slope), str(res.fit.intercept), str(res.fit.r_squared)});
            write_output(g.out, t.text(comment));
            return 0;
        }
        if (*run)
        {
            if (scenario_path.empty() == !random_index)
                throw ProtocolError{ProtocolErrc::config_error, "protocol-run: give exactly one of --scenario or --random"};
            const auto scenario = random_index ? random_scenario(seed, *random_index)
                                               : parse_scenario(read_file(scenario_path));
            const auto result = run_scenario(scenario);
            if (!log_path.empty())
                write_output(log_path, result.log.text());
            const auto audit = audit_run(result);
            CsvTable t{{"it", "contract", "deployed_at", "finished_at", "rounds", "accepted", "correct"}};
            for (const auto& o : result.outcomes)
                t.add_row({str(o.id), o.contract, str(o.deployed_at), str(o.finished_at), str(o.rounds),
                    o.accepted ? "1" : "0", o.correct ? "1" : "0"});
            write_output(g.out, t.text(comment));
            std::cerr << "blocks " << result.blocks << ", messages accepted " << result.accepted_messages
                      << " rejected " << result.rejected_messages << ", burned " << result.burned
                      << ", value " << result.initial_value << " -> " << result.final_value << "\n";
            if (!audit.ok())
            {
                std::cerr << "invariant violated: window " << audit.window_violations << ", unmatched "
                          << audit.unmatched_reveals << ", conserved " << audit.conserved
                          << ", replay " << audit.replay_identical << "\n";
                return exit_invariant;
            }
            return 0;
        }
        if (*utility)
        {
            if (grid)
            {
                const auto res = utility_grid();
                CsvTable t{{"points", "nash_true", "disagreements"}};
                t.add_row({str(res.points), str(res.nash_true), str(res.disagreements)});
                write_output(g.out, t.text(comment));
                return res.disagreements == 0 ? 0 : exit_invariant;
            }
            const auto col = utility_collude(up);
            CsvTable t{{"utility_honest", "utility_freeload", "utility_collude", "epsilon", "nash_condition"}};
            t.add_row({str(utility_honest(up)), str(utility_freeload(up)), str(col.utility),
                col.epsilon ? str(*col.epsilon) : "", nash_condition(up) ? "1" : "0"});
            write_output(g.out, t.text(comment));
            return 0;
        }
        if (*rep)
        {
            const auto report = replay(read_file(replay_path));
            std::cout << "logged version " << report.logged_version << " ("
                      << (report.version_compatible ? "compatible" : "incompatible") << " with "
                      << log_format_version << ")\n";
            if (report.identical)
            {
                std::cout << "identical: " << report.lines_compared << " lines\n";
                return 0;
            }
            std::cout << "divergence at line " << (*report.first_divergence + 1) << "\n  logged: "
                      << report.expected_line << "\n  replay: " << report.actual_line << "\n";
            return exit_invariant;
        }
    }
    catch (const ProtocolError& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == ProtocolErrc::config_error ? exit_config : exit_invariant;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    }
    return 0;
}
