// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cicsim/toy_vm.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace cicsim
{
namespace
{
struct OpInfo
{
    Opcode op;
    std::string_view name;
    std::string_view operands;  ///< d: dest reg, a/b: source regs, i: immediate, l: label
};

constexpr OpInfo op_table[] = {
    {Opcode::const_, "const", "di"},
    {Opcode::mov, "mov", "da"},
    {Opcode::add, "add", "dab"},
    {Opcode::sub, "sub", "dab"},
    {Opcode::mul, "mul", "dab"},
    {Opcode::mod, "mod", "dab"},
    {Opcode::xor_, "xor", "dab"},
    {Opcode::lt, "lt", "dab"},
    {Opcode::eq, "eq", "dab"},
    {Opcode::jmp, "jmp", "l"},
    {Opcode::jnz, "jnz", "al"},
    {Opcode::load, "load", "da"},
    {Opcode::store, "store", "ab"},
    {Opcode::hash, "hash", "dab"},
    {Opcode::input, "input", "da"},
    {Opcode::halt, "halt", ""},
};

const OpInfo& info(Opcode op)
{
    return op_table[static_cast<size_t>(op)];
}

[[noreturn]] void parse_fail(size_t line, const std::string& msg)
{
    throw VmError{VmErrc::parse_error, "line " + std::to_string(line) + ": " + msg};
}

std::vector<std::string_view> split_tokens(std::string_view s)
{
    std::vector<std::string_view> out;
    size_t i = 0;
    while (i < s.size())
    {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == ',' || s[i] == '\r'))
            ++i;
        const auto start = i;
        while (i < s.size() && !(s[i] == ' ' || s[i] == '\t' || s[i] == ',' || s[i] == '\r'))
            ++i;
        if (i > start)
            out.push_back(s.substr(start, i - start));
    }
    return out;
}

std::string_view strip_comment(std::string_view s)
{
    const auto pos = s.find_first_of(";#");
    return pos == std::string_view::npos ? s : s.substr(0, pos);
}

uint8_t parse_reg(std::string_view tok, size_t line)
{
    if (tok.size() < 2 || (tok[0] != 'r' && tok[0] != 'R'))
        parse_fail(line, "expected register, got '" + std::string{tok} + "'");
    unsigned v = 0;
    const auto [p, ec] = std::from_chars(tok.data() + 1, tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size() || v >= num_registers)
        parse_fail(line, "bad register '" + std::string{tok} + "'");
    return static_cast<uint8_t>(v);
}

uint64_t parse_imm(std::string_view tok, size_t line)
{
    int base = 10;
    if (tok.size() > 2 && tok[0] == '0' && (tok[1] == 'x' || tok[1] == 'X'))
    {
        tok.remove_prefix(2);
        base = 16;
    }
    uint64_t v = 0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v, base);
    if (ec != std::errc{} || p != tok.data() + tok.size())
        parse_fail(line, "bad immediate '" + std::string{tok} + "'");
    return v;
}

inline uint64_t data_word(std::span<const uint8_t> data, uint64_t index) noexcept
{
    if (index >= data.size() / 8 + 1)
        return 0;
    uint64_t v = 0;
    const auto base = index * 8;
    for (size_t i = 0; i < 8; ++i)
    {
        const auto pos = base + i;
        v = (v << 8) | (pos < data.size() ? data[pos] : 0);
    }
    return v;
}
}  // namespace

std::string Program::text() const
{
    std::set<size_t> targets;
    for (const auto& ins : code)
        if (ins.op == Opcode::jmp || ins.op == Opcode::jnz)
            targets.insert(ins.imm);
    if (entry != 0)
        targets.insert(entry);

    std::ostringstream out;
    if (entry != 0)
        out << ".entry L" << entry << '\n';
    for (size_t pc = 0; pc < code.size(); ++pc)
    {
        if (targets.count(pc))
            out << 'L' << pc << ":\n";
        const auto& ins = code[pc];
        const auto& oi = info(ins.op);
        out << "    " << oi.name;
        for (const auto c : oi.operands)
        {
            out << ' ';
            switch (c)
            {
            case 'd':
                out << 'r' << unsigned{ins.d};
                break;
            case 'a':
                out << 'r' << unsigned{ins.a};
                break;
            case 'b':
                out << 'r' << unsigned{ins.b};
                break;
            case 'i':
                out << ins.imm;
                break;
            case 'l':
                out << 'L' << ins.imm;
                break;
            }
        }
        out << '\n';
    }
    return out.str();
}

Hash256 Program::code_hash() const
{
    return sha256(as_bytes(text()));
}

Program assemble(std::string_view source)
{
    struct Pending
    {
        size_t line;
        std::vector<std::string_view> toks;
    };
    std::vector<Pending> lines;
    std::map<std::string, size_t, std::less<>> labels;
    std::string_view entry_label;
    size_t entry_line = 0;

    size_t lineno = 0;
    while (!source.empty())
    {
        ++lineno;
        const auto nl = source.find('\n');
        auto line = source.substr(0, nl);
        source = nl == std::string_view::npos ? std::string_view{} : source.substr(nl + 1);

        auto toks = split_tokens(strip_comment(line));
        while (!toks.empty() && toks.front().back() == ':')
        {
            const auto name = toks.front().substr(0, toks.front().size() - 1);
            if (name.empty())
                parse_fail(lineno, "empty label");
            if (!labels.emplace(std::string{name}, lines.size()).second)
                parse_fail(lineno, "duplicate label '" + std::string{name} + "'");
            toks.erase(toks.begin());
        }
        if (toks.empty())
            continue;
        if (toks.front() == ".entry")
        {
            if (toks.size() != 2)
                parse_fail(lineno, ".entry takes one label");
            entry_label = toks[1];
            entry_line = lineno;
            continue;
        }
        lines.push_back({lineno, std::move(toks)});
    }

    auto resolve = [&](std::string_view name, size_t line) -> size_t {
        const auto it = labels.find(name);
        if (it == labels.end())
            parse_fail(line, "unknown label '" + std::string{name} + "'");
        return it->second;
    };

    Program prog;
    prog.code.reserve(lines.size());
    for (const auto& [line, toks] : lines)
    {
        const OpInfo* oi = nullptr;
        for (const auto& candidate : op_table)
            if (candidate.name == toks[0])
                oi = &candidate;
        if (oi == nullptr)
            parse_fail(line, "unknown mnemonic '" + std::string{toks[0]} + "'");
        if (toks.size() != oi->operands.size() + 1)
            parse_fail(line, std::string{oi->name} + " expects " +
                                 std::to_string(oi->operands.size()) + " operands");

        Instruction ins{oi->op};
        for (size_t k = 0; k < oi->operands.size(); ++k)
        {
            const auto tok = toks[k + 1];
            switch (oi->operands[k])
            {
            case 'd':
                ins.d = parse_reg(tok, line);
                break;
            case 'a':
                ins.a = parse_reg(tok, line);
                break;
            case 'b':
                ins.b = parse_reg(tok, line);
                break;
            case 'i':
                ins.imm = parse_imm(tok, line);
                break;
            case 'l':
                ins.imm = resolve(tok, line);
                break;
            }
        }
        prog.code.push_back(ins);
    }
    if (!entry_label.empty())
        prog.entry = resolve(entry_label, entry_line);
    if (prog.code.empty())
        parse_fail(lineno, "program has no instructions");
    return prog;
}

ExecCursor make_cursor(const Program& program, CicState state)
{
    ExecCursor c;
    c.state = std::move(state);
    c.pc = program.entry;
    return c;
}

InstrIndex resume(const Program& program, ExecCursor& cursor, InstrIndex t_i, InstrIndex t_f,
    std::span<const uint8_t> data, uint64_t gas_limit)
{
    if (cursor.halted)
        throw VmError{VmErrc::already_halted, "cursor already halted"};
    if (t_i != cursor.dynamic_index + 1 || t_i > t_f)
        throw VmError{VmErrc::invalid_resume,
            "resume at " + std::to_string(t_i) + " but cursor is at " +
                std::to_string(cursor.dynamic_index)};

    const auto* code = program.code.data();
    const auto code_size = program.code.size();
    auto& r = cursor.regs;
    auto pc = cursor.pc;
    auto t = cursor.dynamic_index;
    const auto stop = std::min(t_f, gas_limit);

    while (t < t_f)
    {
        if (t >= stop)
        {
            cursor.pc = pc;
            cursor.dynamic_index = t;
            throw VmError{VmErrc::gas_exhausted,
                "gas limit " + std::to_string(gas_limit) + " exhausted"};
        }
        if (pc >= code_size)
        {
            cursor.pc = pc;
            cursor.dynamic_index = t;
            throw VmError{VmErrc::pc_out_of_range, "pc " + std::to_string(pc) + " out of range"};
        }
        const auto& ins = code[pc];
        ++t;
        ++pc;
        switch (ins.op)
        {
        case Opcode::const_:
            r[ins.d] = ins.imm;
            break;
        case Opcode::mov:
            r[ins.d] = r[ins.a];
            break;
        case Opcode::add:
            r[ins.d] = r[ins.a] + r[ins.b];
            break;
        case Opcode::sub:
            r[ins.d] = r[ins.a] - r[ins.b];
            break;
        case Opcode::mul:
            r[ins.d] = r[ins.a] * r[ins.b];
            break;
        case Opcode::mod:
            r[ins.d] = r[ins.b] == 0 ? 0 : r[ins.a] % r[ins.b];
            break;
        case Opcode::xor_:
            r[ins.d] = r[ins.a] ^ r[ins.b];
            break;
        case Opcode::lt:
            r[ins.d] = r[ins.a] < r[ins.b] ? 1 : 0;
            break;
        case Opcode::eq:
            r[ins.d] = r[ins.a] == r[ins.b] ? 1 : 0;
            break;
        case Opcode::jmp:
            pc = ins.imm;
            break;
        case Opcode::jnz:
            if (r[ins.a] != 0)
                pc = ins.imm;
            break;
        case Opcode::load:
            r[ins.d] = cursor.state.load(Hash256::from_u64(r[ins.a])).low_u64();
            break;
        case Opcode::store:
            cursor.state.put(Hash256::from_u64(r[ins.a]), Hash256::from_u64(r[ins.b]));
            break;
        case Opcode::hash:
            r[ins.d] = hash_pair(Hash256::from_u64(r[ins.a]), Hash256::from_u64(r[ins.b])).high_u64();
            break;
        case Opcode::input:
            r[ins.d] = data_word(data, r[ins.a]);
            break;
        case Opcode::halt:
            cursor.pc = pc - 1;
            cursor.dynamic_index = t;
            cursor.halted = true;
            return t;
        }
    }
    cursor.pc = pc;
    cursor.dynamic_index = t;
    return t_f;
}

FullResult run_full(
    const Program& program, CicState state, std::span<const uint8_t> data, uint64_t gas_limit)
{
    auto cursor = make_cursor(program, std::move(state));
    const auto total = resume(program, cursor, 1, unlimited_gas, data, gas_limit);
    return {std::move(cursor.state), total};
}

Program compute_program(uint64_t eta)
{
    std::ostringstream src;
    src << "    const r0 0\n"
        << "    const r1 " << eta << "\n"
        << "    const r2 1\n"
        << "    const r3 0\n"
        << "    jmp check\n"
        << "body:\n"
        << "    add r0 r0 r2\n"
        << "    store r3 r0\n"
        << "check:\n"
        << "    lt r4 r0 r1\n"
        << "    jnz r4 body\n"
        << "    halt\n";
    return assemble(src.str());
}

Program random_program(uint64_t total, uint64_t seed)
{
    if (total == 0)
        throw std::invalid_argument("random_program: total must be >= 1");

    // r0..r2 and r4 drive the loop, r3 is the store key (kept below 16),
    // r5..r15 are scratch.
    std::mt19937_64 rng{seed};
    auto pick = [&](uint64_t lo, uint64_t hi) {
        return std::uniform_int_distribution<uint64_t>{lo, hi}(rng);
    };
    auto scratch = [&] { return static_cast<uint8_t>(pick(5, 15)); };
    auto random_op = [&]() -> Instruction {
        switch (pick(0, 12))
        {
        case 0:
            return {Opcode::const_, scratch(), 0, 0, rng()};
        case 1:
            return {Opcode::mov, scratch(), scratch()};
        case 2:
            return {Opcode::add, scratch(), scratch(), scratch()};
        case 3:
            return {Opcode::sub, scratch(), scratch(), scratch()};
        case 4:
            return {Opcode::mul, scratch(), scratch(), scratch()};
        case 5:
            return {Opcode::mod, scratch(), scratch(), scratch()};
        case 6:
            return {Opcode::xor_, scratch(), scratch(), scratch()};
        case 7:
            return {Opcode::hash, scratch(), scratch(), scratch()};
        case 8:
            return {Opcode::load, scratch(), 3};
        case 9:
        case 10:
            return {Opcode::store, 0, 3, scratch()};
        case 11:
            return {Opcode::const_, 3, 0, 0, pick(0, 15)};
        default:
            return {Opcode::input, scratch(), scratch()};
        }
    };

    Program prog;
    auto& code = prog.code;
    if (total < 8)
    {
        for (uint64_t i = 0; i + 1 < total; ++i)
            code.push_back(random_op());
        code.push_back({Opcode::halt});
        return prog;
    }

    // Layout: 4 setup, loop body (b ops + increment), 2 check, r tail, halt.
    // T = 7 + n·(b + 3) + r.
    const auto b = pick(1, 8);
    const auto n = (total - 7) / (b + 3);
    const auto rem = (total - 7) - n * (b + 3);

    code.push_back({Opcode::const_, 0, 0, 0, 0});
    code.push_back({Opcode::const_, 1, 0, 0, n});
    code.push_back({Opcode::const_, 2, 0, 0, 1});
    code.push_back({Opcode::jmp, 0, 0, 0, 0});  // patched below
    const auto body = code.size();
    for (uint64_t i = 0; i < b; ++i)
        code.push_back(random_op());
    code.push_back({Opcode::add, 0, 0, 2});
    const auto check = code.size();
    code[3].imm = check;
    code.push_back({Opcode::lt, 4, 0, 1});
    code.push_back({Opcode::jnz, 0, 4, 0, body});
    for (uint64_t i = 0; i < rem; ++i)
        code.push_back(random_op());
    code.push_back({Opcode::halt});
    return prog;
}

Program load_program(const std::string& spec)
{
    constexpr std::string_view compute_prefix = "compute:";
    if (spec.rfind(compute_prefix, 0) == 0)
        return compute_program(parse_imm(std::string_view{spec}.substr(compute_prefix.size()), 0));
    std::ifstream in{spec};
    if (!in)
        throw std::runtime_error("cannot open program file '" + spec + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return assemble(ss.str());
}
}  // namespace cicsim
