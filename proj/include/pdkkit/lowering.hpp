#pragma once

// Code sequences for locals access, generic pointers and core lookup, plus
// simulator-backed size and cycle measurement.
//
// Data memory convention shared by all generated code:
//   0x00      pseudo-register p
//   0x02/03   pointer pair for idxm (high byte kept 0)
//   0x04/05   generic pointer argument
//   0x06/07   scratch pair
//   0x08..    static data

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pdkkit/simulator.hpp"

namespace pdkkit {

namespace layout {
inline constexpr std::uint32_t p = 0x00;
inline constexpr std::uint32_t ptr = 0x02;
inline constexpr std::uint32_t gptr = 0x04;
inline constexpr std::uint32_t scratch = 0x06;
inline constexpr std::uint32_t statics = 0x08;
} // namespace layout

enum class LocalsMode { static_locals, stack_baseline, stack_extended };

inline const char* to_string(LocalsMode m) {
    switch (m) {
    case LocalsMode::static_locals: return "static_locals";
    case LocalsMode::stack_baseline: return "stack_baseline";
    case LocalsMode::stack_extended: return "stack_extended";
    }
    return "?";
}

struct LoweredSequence {
    Variant variant = Variant::pdk14;
    ExtensionSet extensions;
    std::vector<std::string> lines; // assembly, may contain labels
    std::vector<Instruction> instructions;
    std::size_t size_words = 0;
    std::optional<std::uint64_t> measured_cycles;
    std::set<std::uint32_t> clobbers;

    std::string text() const {
        std::string s;
        for (const auto& l : lines) s += l + "\n";
        return s;
    }
};

namespace detail {

inline std::string header(Variant v, const ExtensionSet& x) {
    std::string h = ".arch " + std::string(to_string(v)) + "\n";
    if (!x.none()) h += ".ext " + x.str() + "\n";
    return h;
}

/// Assembles the lines at address 0 and fills in the decoded instructions.
inline void finish(LoweredSequence& s) {
    auto img = assemble(header(s.variant, s.extensions) + s.text());
    const auto& m = shared_map(variant_spec(s.variant), s.extensions);
    s.instructions.clear();
    for (const auto& [a, w] : img.words) s.instructions.push_back(decode(w, m));
    s.size_words = img.words.size();
}

inline std::string imm(int v) { return "#" + std::to_string(v); }
inline std::string addr(std::uint32_t a) { return hex(a); }

} // namespace detail

/// Runs a straight-line sequence once and returns the cycles spent until
/// control reaches the end of the sequence.
inline std::uint64_t measure_cycles(const LoweredSequence& s, const std::function<void(Machine&)>& setup = {}) {
    auto img = assemble(detail::header(s.variant, s.extensions) + s.text() + "__end:\n    stopsys\n");
    auto m = load(img);
    if (setup) setup(m);
    auto r = m.run(100000, {static_cast<std::uint32_t>(img.at("__end"))});
    if (r.reason != HaltReason::Breakpoint)
        throw Error(ErrorKind::UnsupportedCombination, std::string("sequence did not reach its end: ") + r.detail);
    return r.cycle;
}

// ---------------------------------------------------------------- add16

namespace add16 {
// static_locals operands
inline constexpr std::uint32_t a = layout::statics, b = layout::statics + 2, c = layout::statics + 4;
// stack frame offsets below sp
inline constexpr int a_off = -6, b_off = -4, c_off = -2;
inline constexpr std::uint8_t frame_sp = 0x20;
} // namespace add16

namespace detail {

/// ptr := sp + off, through the accumulator.
inline void sp_to_ptr(std::vector<std::string>& out, int off) {
    out.push_back("mov a, sp");
    out.push_back("add a, " + imm(off));
    out.push_back("mov " + addr(layout::ptr) + ", a");
}

inline std::vector<std::string> add16_stack_baseline() {
    const std::string p = addr(layout::p), ptr = addr(layout::ptr);
    std::vector<std::string> o;
    sp_to_ptr(o, add16::b_off);
    o.push_back("idxm a, " + ptr);
    o.push_back("mov " + p + ", a");
    sp_to_ptr(o, add16::a_off);
    o.push_back("idxm a, " + ptr);
    o.push_back("add a, " + p);
    o.push_back("mov " + p + ", a");
    o.push_back("pushaf"); // keep the carry across the address arithmetic; sp += 2
    sp_to_ptr(o, add16::c_off - 2);
    o.push_back("mov a, " + p);
    o.push_back("idxm " + ptr + ", a");
    sp_to_ptr(o, add16::b_off + 1 - 2);
    o.push_back("idxm a, " + ptr);
    o.push_back("mov " + p + ", a");
    sp_to_ptr(o, add16::a_off + 1 - 2);
    o.push_back("popaf");
    o.push_back("idxm a, " + ptr);
    o.push_back("addc a, " + p);
    o.push_back("mov " + p + ", a");
    sp_to_ptr(o, add16::c_off + 1);
    o.push_back("mov a, " + p);
    o.push_back("idxm " + ptr + ", a");
    return o;
}

inline std::string sprel(int off) { return off < 0 ? "[sp-" + std::to_string(-off) + "]" : "[sp+" + std::to_string(off) + "]"; }

} // namespace detail

inline LoweredSequence gen_add16_locals(LocalsMode mode, const ExtensionSet& x, Variant v = Variant::pdk14) {
    x.validate();
    LoweredSequence s;
    s.variant = v;
    s.extensions = x;
    using detail::sprel;
    const std::string p = detail::addr(layout::p);
    switch (mode) {
    case LocalsMode::static_locals: {
        auto A = detail::addr(add16::a), B = detail::addr(add16::b), C = detail::addr(add16::c);
        auto A1 = detail::addr(add16::a + 1), B1 = detail::addr(add16::b + 1), C1 = detail::addr(add16::c + 1);
        s.lines = {"mov a, " + A, "add a, " + B, "mov " + C + ", a", "mov a, " + A1, "addc a, " + B1, "mov " + C1 + ", a"};
        s.clobbers = {add16::c, add16::c + 1};
        break;
    }
    case LocalsMode::stack_baseline:
        s.lines = detail::add16_stack_baseline();
        s.clobbers = {layout::p, layout::ptr};
        break;
    case LocalsMode::stack_extended:
        if (!x.any_stack())
            throw Error(ErrorKind::UnsupportedCombination, "stack_extended needs spadd, idxsp or sprel");
        if (x.sprel) {
            s.lines = {"mov a, " + sprel(add16::a_off),     "add a, " + sprel(add16::b_off),
                       "mov " + sprel(add16::c_off) + ", a", "mov a, " + sprel(add16::a_off + 1),
                       "addc a, " + sprel(add16::b_off + 1), "mov " + sprel(add16::c_off + 1) + ", a"};
            s.clobbers = {};
        } else if (x.idxsp) {
            s.lines = {"mov a, " + sprel(add16::b_off),
                       "mov " + p + ", a",
                       "mov a, " + sprel(add16::a_off),
                       "add a, " + p,
                       "mov " + sprel(add16::c_off) + ", a",
                       "mov a, " + sprel(add16::b_off + 1),
                       "mov " + p + ", a",
                       "mov a, " + sprel(add16::a_off + 1),
                       "addc a, " + p,
                       "mov " + sprel(add16::c_off + 1) + ", a"};
            s.clobbers = {layout::p};
        } else {
            // spadd alone does not shorten a pure access sequence
            s.lines = detail::add16_stack_baseline();
            s.clobbers = {layout::p, layout::ptr};
        }
        break;
    }
    detail::finish(s);
    return s;
}

/// Places operands for an add16 sequence, runs it, and returns the sum.
inline std::uint16_t run_add16(const LoweredSequence& s, LocalsMode mode, std::uint16_t a, std::uint16_t b,
                               std::uint64_t* cycles = nullptr) {
    auto img = assemble(detail::header(s.variant, s.extensions) + s.text() + "__end:\n    stopsys\n");
    auto m = load(img);
    std::uint32_t base_a = add16::a, base_b = add16::b, base_c = add16::c;
    if (mode != LocalsMode::static_locals) {
        m.core_mut(0).sp = add16::frame_sp;
        base_a = add16::frame_sp + add16::a_off;
        base_b = add16::frame_sp + add16::b_off;
        base_c = add16::frame_sp + add16::c_off;
    }
    m.set_data(base_a, a & 0xff);
    m.set_data(base_a + 1, a >> 8);
    m.set_data(base_b, b & 0xff);
    m.set_data(base_b + 1, b >> 8);
    auto r = m.run(100000, {static_cast<std::uint32_t>(img.at("__end"))});
    if (r.reason != HaltReason::Breakpoint) throw Error(ErrorKind::UnsupportedCombination, "add16 did not finish: " + r.detail);
    if (cycles) *cycles = r.cycle;
    if (mode != LocalsMode::static_locals && m.core(0).sp != add16::frame_sp)
        throw Error(ErrorKind::UnsupportedCombination, "add16 left sp unbalanced");
    return static_cast<std::uint16_t>(m.data(base_c) | (m.data(base_c + 1) << 8));
}

// ---------------------------------------------------------------- generic pointers

/// Reads the byte a 16-bit generic pointer (at 0x04/05) points to into a.
/// Bit 15 set selects code memory, where constants are `ret k` words.
inline LoweredSequence gen_genptr_read(const ExtensionSet& x, Variant v = Variant::pdk14) {
    LoweredSequence s;
    s.variant = v;
    s.extensions = x;
    const std::string lo = detail::addr(layout::gptr), hi = detail::addr(layout::gptr + 1);
    const std::string ptr = detail::addr(layout::ptr), scr = detail::addr(layout::scratch);
    s.lines = {
        "genptr_read:",
        "    t0sn " + hi + ".7",
        "    goto genptr_read_code",
        "    idxm a, " + lo,
        "    ret",
        "genptr_read_code:",
    };
    if (x.igoto_icall) {
        // the ret k at the target returns straight to our caller
        s.lines.insert(s.lines.end(), {
            "    mov a, " + lo,
            "    mov " + scr + ", a",
            "    mov a, " + hi,
            "    and a, #0x7f",
            "    mov " + detail::addr(layout::scratch + 1) + ", a",
            "    igoto " + scr,
        });
        s.clobbers = {layout::scratch, layout::scratch + 1};
    } else {
        // push the target and `ret` into it; its ret k comes back here
        s.lines.insert(s.lines.end(), {
            "    call genptr_read_jump",
            "    ret",
            "genptr_read_jump:",
            "    mov a, sp",
            "    mov " + ptr + ", a",
            "    mov a, " + lo,
            "    idxm " + ptr + ", a",
            "    inc " + ptr,
            "    mov a, " + hi,
            "    and a, #0x7f",
            "    idxm " + ptr + ", a",
            "    mov a, sp",
            "    add a, #2",
            "    mov sp, a",
            "    ret",
        });
        s.clobbers = {layout::ptr};
    }
    detail::finish(s);
    return s;
}

/// Stores a through a generic pointer (at 0x04/05). Writes always target
/// data memory, so there is no dispatch on bit 15.
inline LoweredSequence gen_genptr_write(const ExtensionSet& x, Variant v = Variant::pdk14) {
    LoweredSequence s;
    s.variant = v;
    s.extensions = x;
    s.lines = {"genptr_write:", "    idxm " + detail::addr(layout::gptr) + ", a", "    ret"};
    detail::finish(s);
    return s;
}

// ---------------------------------------------------------------- core lookup

struct StackRange {
    std::uint32_t lo; // inclusive
    std::uint32_t hi; // exclusive
};

/// Leaves the index of the executing core in a, found by searching the
/// stack pointer in the per-core stack ranges.
inline LoweredSequence core_lookup_by_sp(std::vector<StackRange> ranges, const ExtensionSet& x,
                                         Variant v = Variant::pdk14) {
    LoweredSequence s;
    s.variant = v;
    s.extensions = x;
    if (ranges.empty()) throw Error(ErrorKind::OverlappingRanges, "no stack ranges");
    std::vector<std::size_t> order(ranges.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto l, auto r) { return ranges[l].lo < ranges[r].lo; });
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& r = ranges[order[i]];
        if (r.hi <= r.lo) throw Error(ErrorKind::OverlappingRanges, "empty stack range");
        if (i && ranges[order[i - 1]].hi > r.lo)
            throw Error(ErrorKind::OverlappingRanges, "stack ranges " + std::to_string(order[i - 1]) + " and " +
                                                          std::to_string(order[i]) + " overlap");
    }
    if (x.coreid) {
        s.lines = {"coreid a"};
    } else if (ranges.size() == 1) {
        s.lines = {"mov a, #0"};
    } else {
        int label = 0;
        std::function<void(std::size_t, std::size_t)> node = [&](std::size_t l, std::size_t h) {
            if (l == h) {
                s.lines.push_back("mov a, #" + std::to_string(order[l]));
                s.lines.push_back("goto core_lookup_done");
                return;
            }
            std::size_t mid = (l + h + 1) / 2;
            std::string right = "core_lookup_" + std::to_string(label++);
            s.lines.push_back("mov a, sp");
            s.lines.push_back("sub a, #" + std::to_string(ranges[order[mid]].lo));
            s.lines.push_back("t1sn flags.1");
            s.lines.push_back("goto " + right);
            node(l, mid - 1);
            s.lines.push_back(right + ":");
            node(mid, h);
        };
        node(0, order.size() - 1);
        s.lines.pop_back(); // last leaf falls through
        s.lines.push_back("core_lookup_done:");
    }
    detail::finish(s);
    return s;
}

} // namespace pdkkit
