#pragma once

// Abstract instruction model: one Op per (mnemonic, operand form) pair, plus
// the operand values carried by a concrete instruction.

#include <array>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pdkkit {

/// How an operand position is encoded in an opcode template.
enum class Slot : std::uint8_t {
    Acc,    // implicit accumulator, no bits
    Mem,    // direct data address, data_addr_bits wide ('m')
    BitMem, // bit index + lower-half data address ('b' + 'm')
    Io,     // I/O address ('i')
    BitIo,  // bit index + I/O address ('b' + 'i')
    Imm8,   // 8-bit immediate ('k')
    Pair,   // 16-bit aligned data address, stored >> 1 ('p')
    Prog,   // program address ('n')
    SpOff,  // signed stack-pointer offset, data_addr_bits - 2 wide ('o')
    SpImm,  // signed even stack adjustment, stored / 2 ('s')
};

enum class CycleClass : std::uint8_t { One, Two, Skip };

enum class Op : std::uint8_t {
    // implicit
    Nop, Ret, Reti, Engint, Disgint, Stopsys, Stopexe, Reset, Wdreset, Pushaf, Popaf,
    NotA, NegA, SlA, SrA, SlcA, SrcA, SwapA, AddcA, SubcA, IzsnA, DzsnA, PcaddA,
    LdsptlA, LdspthA, Mul,
    // immediate
    MovAK, AddAK, SubAK, AndAK, OrAK, XorAK, CeqsnAK, CneqsnAK, RetK,
    // direct data memory
    MovAM, MovMA, AddAM, AddMA, AddcAM, AddcMA, SubAM, SubMA, SubcAM, SubcMA,
    AndAM, AndMA, OrAM, OrMA, XorAM, XorMA, XchM, IncM, DecM, ClearM,
    SlM, SrM, SlcM, SrcM, CeqsnAM, IzsnM, DzsnM, NotM,
    CneqsnAM, NegM, CompAM, CompMA, AddcM, SubcM, CeqsnMA, CneqsnMA, SwapM,
    NaddAM, NaddMA,
    // indirect through a 16-bit pair
    IdxmAM, IdxmMA, LdtablAM, LdtabhAM, PushwM, IgotoM, IcallM,
    // I/O
    MovAIo, MovIoA, XorIoA, XorAIo,
    // bit operations
    Set0M, Set1M, T0snM, T1snM, Set0Io, Set1Io, T0snIo, T1snIo, SwapcIo,
    // control transfer
    Goto, Call,
    // extensions
    Spadd, MovASp, MovSpA, IdxxchMA, CmpxchgM, IdxcmpxchgM,
    IdxaddMA, IdxandMA, IdxorMA, IdxxorMA, CoreidA, DaA,
    Count_
};

inline constexpr std::size_t op_count = static_cast<std::size_t>(Op::Count_);

struct OpInfo {
    Op op;
    std::string_view mnemonic;
    std::array<Slot, 2> slots;
    std::uint8_t nslots;
    CycleClass cycles;
    /// Canonical form name, used as the key in serialized maps.
    std::string_view form;

    std::span<const Slot> operands() const { return {slots.data(), nslots}; }
};

namespace detail {

using enum Slot;
using CC = CycleClass;

inline constexpr OpInfo op_table[] = {
    {Op::Nop, "nop", {}, 0, CC::One, "nop"},
    {Op::Ret, "ret", {}, 0, CC::Two, "ret"},
    {Op::Reti, "reti", {}, 0, CC::Two, "reti"},
    {Op::Engint, "engint", {}, 0, CC::One, "engint"},
    {Op::Disgint, "disgint", {}, 0, CC::One, "disgint"},
    {Op::Stopsys, "stopsys", {}, 0, CC::One, "stopsys"},
    {Op::Stopexe, "stopexe", {}, 0, CC::One, "stopexe"},
    {Op::Reset, "reset", {}, 0, CC::One, "reset"},
    {Op::Wdreset, "wdreset", {}, 0, CC::One, "wdreset"},
    {Op::Pushaf, "pushaf", {}, 0, CC::One, "pushaf"},
    {Op::Popaf, "popaf", {}, 0, CC::One, "popaf"},
    {Op::NotA, "not", {Acc}, 1, CC::One, "not a"},
    {Op::NegA, "neg", {Acc}, 1, CC::One, "neg a"},
    {Op::SlA, "sl", {Acc}, 1, CC::One, "sl a"},
    {Op::SrA, "sr", {Acc}, 1, CC::One, "sr a"},
    {Op::SlcA, "slc", {Acc}, 1, CC::One, "slc a"},
    {Op::SrcA, "src", {Acc}, 1, CC::One, "src a"},
    {Op::SwapA, "swap", {Acc}, 1, CC::One, "swap a"},
    {Op::AddcA, "addc", {Acc}, 1, CC::One, "addc a"},
    {Op::SubcA, "subc", {Acc}, 1, CC::One, "subc a"},
    {Op::IzsnA, "izsn", {Acc}, 1, CC::Skip, "izsn a"},
    {Op::DzsnA, "dzsn", {Acc}, 1, CC::Skip, "dzsn a"},
    {Op::PcaddA, "pcadd", {Acc}, 1, CC::Two, "pcadd a"},
    {Op::LdsptlA, "ldsptl", {Acc}, 1, CC::Two, "ldsptl a"},
    {Op::LdspthA, "ldspth", {Acc}, 1, CC::Two, "ldspth a"},
    {Op::Mul, "mul", {}, 0, CC::One, "mul"},

    {Op::MovAK, "mov", {Acc, Imm8}, 2, CC::One, "mov a,#k"},
    {Op::AddAK, "add", {Acc, Imm8}, 2, CC::One, "add a,#k"},
    {Op::SubAK, "sub", {Acc, Imm8}, 2, CC::One, "sub a,#k"},
    {Op::AndAK, "and", {Acc, Imm8}, 2, CC::One, "and a,#k"},
    {Op::OrAK, "or", {Acc, Imm8}, 2, CC::One, "or a,#k"},
    {Op::XorAK, "xor", {Acc, Imm8}, 2, CC::One, "xor a,#k"},
    {Op::CeqsnAK, "ceqsn", {Acc, Imm8}, 2, CC::Skip, "ceqsn a,#k"},
    {Op::CneqsnAK, "cneqsn", {Acc, Imm8}, 2, CC::Skip, "cneqsn a,#k"},
    {Op::RetK, "ret", {Imm8}, 1, CC::Two, "ret #k"},

    {Op::MovAM, "mov", {Acc, Mem}, 2, CC::One, "mov a,m"},
    {Op::MovMA, "mov", {Mem, Acc}, 2, CC::One, "mov m,a"},
    {Op::AddAM, "add", {Acc, Mem}, 2, CC::One, "add a,m"},
    {Op::AddMA, "add", {Mem, Acc}, 2, CC::One, "add m,a"},
    {Op::AddcAM, "addc", {Acc, Mem}, 2, CC::One, "addc a,m"},
    {Op::AddcMA, "addc", {Mem, Acc}, 2, CC::One, "addc m,a"},
    {Op::SubAM, "sub", {Acc, Mem}, 2, CC::One, "sub a,m"},
    {Op::SubMA, "sub", {Mem, Acc}, 2, CC::One, "sub m,a"},
    {Op::SubcAM, "subc", {Acc, Mem}, 2, CC::One, "subc a,m"},
    {Op::SubcMA, "subc", {Mem, Acc}, 2, CC::One, "subc m,a"},
    {Op::AndAM, "and", {Acc, Mem}, 2, CC::One, "and a,m"},
    {Op::AndMA, "and", {Mem, Acc}, 2, CC::One, "and m,a"},
    {Op::OrAM, "or", {Acc, Mem}, 2, CC::One, "or a,m"},
    {Op::OrMA, "or", {Mem, Acc}, 2, CC::One, "or m,a"},
    {Op::XorAM, "xor", {Acc, Mem}, 2, CC::One, "xor a,m"},
    {Op::XorMA, "xor", {Mem, Acc}, 2, CC::One, "xor m,a"},
    {Op::XchM, "xch", {Mem}, 1, CC::One, "xch m"},
    {Op::IncM, "inc", {Mem}, 1, CC::One, "inc m"},
    {Op::DecM, "dec", {Mem}, 1, CC::One, "dec m"},
    {Op::ClearM, "clear", {Mem}, 1, CC::One, "clear m"},
    {Op::SlM, "sl", {Mem}, 1, CC::One, "sl m"},
    {Op::SrM, "sr", {Mem}, 1, CC::One, "sr m"},
    {Op::SlcM, "slc", {Mem}, 1, CC::One, "slc m"},
    {Op::SrcM, "src", {Mem}, 1, CC::One, "src m"},
    {Op::CeqsnAM, "ceqsn", {Acc, Mem}, 2, CC::Skip, "ceqsn a,m"},
    {Op::IzsnM, "izsn", {Mem}, 1, CC::Skip, "izsn m"},
    {Op::DzsnM, "dzsn", {Mem}, 1, CC::Skip, "dzsn m"},
    {Op::NotM, "not", {Mem}, 1, CC::One, "not m"},
    {Op::CneqsnAM, "cneqsn", {Acc, Mem}, 2, CC::Skip, "cneqsn a,m"},
    {Op::NegM, "neg", {Mem}, 1, CC::One, "neg m"},
    {Op::CompAM, "comp", {Acc, Mem}, 2, CC::One, "comp a,m"},
    {Op::CompMA, "comp", {Mem, Acc}, 2, CC::One, "comp m,a"},
    {Op::AddcM, "addc", {Mem}, 1, CC::One, "addc m"},
    {Op::SubcM, "subc", {Mem}, 1, CC::One, "subc m"},
    {Op::CeqsnMA, "ceqsn", {Mem, Acc}, 2, CC::Skip, "ceqsn m,a"},
    {Op::CneqsnMA, "cneqsn", {Mem, Acc}, 2, CC::Skip, "cneqsn m,a"},
    {Op::SwapM, "swap", {Mem}, 1, CC::One, "swap m"},
    {Op::NaddAM, "nadd", {Acc, Mem}, 2, CC::One, "nadd a,m"},
    {Op::NaddMA, "nadd", {Mem, Acc}, 2, CC::One, "nadd m,a"},

    {Op::IdxmAM, "idxm", {Acc, Pair}, 2, CC::Two, "idxm a,m"},
    {Op::IdxmMA, "idxm", {Pair, Acc}, 2, CC::Two, "idxm m,a"},
    {Op::LdtablAM, "ldtabl", {Acc, Pair}, 2, CC::Two, "ldtabl a,m"},
    {Op::LdtabhAM, "ldtabh", {Acc, Pair}, 2, CC::Two, "ldtabh a,m"},
    {Op::PushwM, "pushw", {Pair}, 1, CC::Two, "pushw m"},
    {Op::IgotoM, "igoto", {Pair}, 1, CC::Two, "igoto m"},
    {Op::IcallM, "icall", {Pair}, 1, CC::Two, "icall m"},

    {Op::MovAIo, "mov", {Acc, Io}, 2, CC::One, "mov a,io"},
    {Op::MovIoA, "mov", {Io, Acc}, 2, CC::One, "mov io,a"},
    {Op::XorIoA, "xor", {Io, Acc}, 2, CC::One, "xor io,a"},
    {Op::XorAIo, "xor", {Acc, Io}, 2, CC::One, "xor a,io"},

    {Op::Set0M, "set0", {BitMem}, 1, CC::One, "set0 m.b"},
    {Op::Set1M, "set1", {BitMem}, 1, CC::One, "set1 m.b"},
    {Op::T0snM, "t0sn", {BitMem}, 1, CC::Skip, "t0sn m.b"},
    {Op::T1snM, "t1sn", {BitMem}, 1, CC::Skip, "t1sn m.b"},
    {Op::Set0Io, "set0", {BitIo}, 1, CC::One, "set0 io.b"},
    {Op::Set1Io, "set1", {BitIo}, 1, CC::One, "set1 io.b"},
    {Op::T0snIo, "t0sn", {BitIo}, 1, CC::Skip, "t0sn io.b"},
    {Op::T1snIo, "t1sn", {BitIo}, 1, CC::Skip, "t1sn io.b"},
    {Op::SwapcIo, "swapc", {BitIo}, 1, CC::One, "swapc io.b"},

    {Op::Goto, "goto", {Prog}, 1, CC::Two, "goto n"},
    {Op::Call, "call", {Prog}, 1, CC::Two, "call n"},

    {Op::Spadd, "spadd", {SpImm}, 1, CC::One, "spadd #k"},
    {Op::MovASp, "mov", {Acc, SpOff}, 2, CC::One, "mov a,[sp+k]"},
    {Op::MovSpA, "mov", {SpOff, Acc}, 2, CC::One, "mov [sp+k],a"},
    {Op::IdxxchMA, "idxxch", {Pair, Acc}, 2, CC::Two, "idxxch m,a"},
    {Op::CmpxchgM, "cmpxchg", {Mem}, 1, CC::One, "cmpxchg m"},
    {Op::IdxcmpxchgM, "idxcmpxchg", {Pair}, 1, CC::Two, "idxcmpxchg m"},
    {Op::IdxaddMA, "idxadd", {Pair, Acc}, 2, CC::Two, "idxadd m,a"},
    {Op::IdxandMA, "idxand", {Pair, Acc}, 2, CC::Two, "idxand m,a"},
    {Op::IdxorMA, "idxor", {Pair, Acc}, 2, CC::Two, "idxor m,a"},
    {Op::IdxxorMA, "idxxor", {Pair, Acc}, 2, CC::Two, "idxxor m,a"},
    {Op::CoreidA, "coreid", {Acc}, 1, CC::One, "coreid a"},
    {Op::DaA, "da", {Acc}, 1, CC::One, "da a"},
};

static_assert(std::size(op_table) == op_count, "op_table must list every Op");

consteval bool op_table_ordered() {
    for (std::size_t i = 0; i < std::size(op_table); ++i)
        if (static_cast<std::size_t>(op_table[i].op) != i) return false;
    return true;
}
static_assert(op_table_ordered(), "op_table must be in Op order");

} // namespace detail

inline const OpInfo& info(Op op) { return detail::op_table[static_cast<std::size_t>(op)]; }

inline std::optional<Op> op_from_form(std::string_view form) {
    for (const auto& i : detail::op_table)
        if (i.form == form) return i.op;
    return std::nullopt;
}

/// Concrete operand kinds as they appear in a decoded instruction.
enum class OperandKind : std::uint8_t {
    Acc,
    DataMem,
    IoMem,
    BitRef,
    IoBitRef,
    Imm,
    SpRel,
    DataMemPair,
    ProgAddr,
};

struct Operand {
    OperandKind kind = OperandKind::Acc;
    std::int32_t value = 0;
    std::uint8_t bit = 0;

    bool operator==(const Operand&) const = default;

    static Operand acc() { return {OperandKind::Acc, 0, 0}; }
    static Operand mem(std::int32_t a) { return {OperandKind::DataMem, a, 0}; }
    static Operand io(std::int32_t a) { return {OperandKind::IoMem, a, 0}; }
    static Operand bit_ref(std::int32_t a, unsigned b) {
        return {OperandKind::BitRef, a, static_cast<std::uint8_t>(b)};
    }
    static Operand io_bit(std::int32_t a, unsigned b) {
        return {OperandKind::IoBitRef, a, static_cast<std::uint8_t>(b)};
    }
    static Operand imm(std::int32_t k) { return {OperandKind::Imm, k, 0}; }
    static Operand sp_rel(std::int32_t off) { return {OperandKind::SpRel, off, 0}; }
    static Operand pair(std::int32_t a) { return {OperandKind::DataMemPair, a, 0}; }
    static Operand prog(std::int32_t a) { return {OperandKind::ProgAddr, a, 0}; }
};

struct Instruction {
    Op op = Op::Nop;
    std::array<Operand, 2> operands{};

    bool operator==(const Instruction&) const = default;

    std::span<const Operand> ops() const { return {operands.data(), info(op).nslots}; }
    const Operand& operator[](std::size_t i) const { return operands[i]; }
};

namespace detail {

inline std::string hex(std::int64_t v) {
    char buf[24];
    if (v < 0)
        std::snprintf(buf, sizeof buf, "-0x%02llx", static_cast<unsigned long long>(-v));
    else
        std::snprintf(buf, sizeof buf, "0x%02llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace detail

inline std::string to_string(const Operand& o) {
    switch (o.kind) {
    case OperandKind::Acc: return "a";
    case OperandKind::DataMem:
    case OperandKind::DataMemPair:
    case OperandKind::ProgAddr: return detail::hex(o.value);
    case OperandKind::IoMem: return "io:" + detail::hex(o.value);
    case OperandKind::BitRef: return detail::hex(o.value) + "." + std::to_string(o.bit);
    case OperandKind::IoBitRef: return "io:" + detail::hex(o.value) + "." + std::to_string(o.bit);
    case OperandKind::Imm: return "#" + detail::hex(o.value);
    case OperandKind::SpRel:
        return o.value < 0 ? "[sp-" + std::to_string(-o.value) + "]"
                           : "[sp+" + std::to_string(o.value) + "]";
    }
    return "?";
}

inline std::string to_string(const Instruction& in) {
    const auto& i = info(in.op);
    std::string s(i.mnemonic);
    for (std::size_t n = 0; n < i.nslots; ++n) {
        s += n == 0 ? " " : ", ";
        if (in.op == Op::Spadd)
            s += "#" + std::to_string(in.operands[n].value);
        else
            s += to_string(in.operands[n]);
    }
    return s;
}

inline Instruction make(Op op, Operand a = {}, Operand b = {}) { return Instruction{op, {a, b}}; }

} // namespace pdkkit
