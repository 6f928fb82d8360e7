// cicsim: off-chain contract execution simulator
// Copyright 2026 The cicsim Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cicsim/merkle_state.hpp>
#include <array>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cicsim
{
/// Dynamic instruction index. 1-based; 0 means "nothing executed yet".
using InstrIndex = uint64_t;

enum class Opcode : uint8_t
{
    const_,  ///< rd = imm
    mov,     ///< rd = ra
    add,     ///< rd = ra + rb (mod 2^64)
    sub,     ///< rd = ra - rb (mod 2^64)
    mul,     ///< rd = ra * rb (mod 2^64)
    mod,     ///< rd = ra % rb, 0 if rb == 0
    xor_,    ///< rd = ra ^ rb
    lt,      ///< rd = ra < rb
    eq,      ///< rd = ra == rb
    jmp,     ///< goto imm
    jnz,     ///< if ra != 0 goto imm
    load,    ///< rd = storage[ra]
    store,   ///< storage[ra] = rb
    hash,    ///< rd = leading 64 bits of H(word(ra) ‖ word(rb))
    input,   ///< rd = ra-th big-endian 8-byte word of the call data, zero padded
    halt,
};

inline constexpr size_t num_registers = 16;

struct Instruction
{
    Opcode op = Opcode::halt;
    uint8_t d = 0;
    uint8_t a = 0;
    uint8_t b = 0;
    uint64_t imm = 0;

    friend bool operator==(const Instruction&, const Instruction&) = default;
};

/// A loaded program. Storage words are the 64-bit register values
/// zero-extended to 256 bits.
struct Program
{
    std::vector<Instruction> code;
    size_t entry = 0;

    /// Canonical assembly text (labels are rendered as L<pc>).
    [[nodiscard]] std::string text() const;

    /// H(canonical text); used as the immutable code reference in CicState.
    [[nodiscard]] Hash256 code_hash() const;
};

enum class VmErrc
{
    gas_exhausted,
    invalid_resume,
    already_halted,
    pc_out_of_range,
    parse_error,
};

class VmError : public std::runtime_error
{
public:
    VmError(VmErrc code, const std::string& what) : std::runtime_error{what}, m_code{code} {}
    [[nodiscard]] VmErrc code() const noexcept { return m_code; }

private:
    VmErrc m_code;
};

/// Parses the textual assembly format.
///
/// One instruction per line; ';' or '#' starts a comment; "name:" defines a
/// label; ".entry name" sets the entry point. Operands are registers r0..r15,
/// decimal or 0x-hex immediates, or label names for jmp/jnz.
///
///     const r0 10
///   loop:
///     sub r0 r0 r1
///     jnz r0 loop
///     halt
///
/// Throws VmError(parse_error) with the line number on malformed input.
Program assemble(std::string_view source);

/// Resumable execution position.
struct ExecCursor
{
    InstrIndex dynamic_index = 0;
    CicState state;
    bool halted = false;
    size_t pc = 0;
    std::array<uint64_t, num_registers> regs{};
};

ExecCursor make_cursor(const Program& program, CicState state);

struct FullResult
{
    CicState state;
    InstrIndex total = 0;  ///< T, including the halt.
};

inline constexpr uint64_t unlimited_gas = std::numeric_limits<uint64_t>::max();

/// Runs to completion. Throws VmError(gas_exhausted) if T would exceed gas_limit.
FullResult run_full(const Program& program, CicState state, std::span<const uint8_t> data,
    uint64_t gas_limit = unlimited_gas);

/// Executes instructions t_i..t_f inclusive, in place.
///
/// Requires t_i == cursor.dynamic_index + 1 and t_i <= t_f. Returns t_f if the
/// program is still running, otherwise T (<= t_f) with cursor.halted set.
InstrIndex resume(const Program& program, ExecCursor& cursor, InstrIndex t_i, InstrIndex t_f,
    std::span<const uint8_t> data, uint64_t gas_limit = unlimited_gas);

struct SubResult
{
    ExecCursor cursor;
    InstrIndex last_index = 0;
};

/// Value-semantics form of resume().
inline SubResult run_sub(const Program& program, ExecCursor cursor, InstrIndex t_i, InstrIndex t_f,
    std::span<const uint8_t> data, uint64_t gas_limit = unlimited_gas)
{
    const auto last = resume(program, cursor, t_i, t_f, data, gas_limit);
    return {std::move(cursor), last};
}

/// A loop running eta iterations, each storing the incremented counter
/// under key 0. T = 4·eta + 8.
Program compute_program(uint64_t eta);

inline constexpr uint64_t compute_total(uint64_t eta) noexcept
{
    return 4 * eta + 8;
}

/// A random straight-line-plus-loop program whose dynamic length is exactly
/// total (>= 1). Stores touch at most 16 distinct keys.
Program random_program(uint64_t total, uint64_t seed);

/// Parses a compute program spec of the form "compute:<eta>" or a file path.
Program load_program(const std::string& spec);
}  // namespace cicsim
