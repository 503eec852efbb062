#pragma once

// Interrupt-safe atomic_flag on cores that only have a direct-address swap.
//
// Two spinlocks guard the flag. Core 0 takes only L1; every other core takes
// L2 then L1. The interrupt handler (always on core 0) only ever tries L2; if
// it gets L2 and L1 is free, nobody else can be inside an operation, because
// core 0 is the interrupted context and the other cores would need L2. If L1
// is held, core 0 was interrupted mid-operation and the handler reports the
// flag as set. With idxxch the flag is swapped in one instruction instead.
//
// The fixture drives the flag as a spinlock from every context and marks
// critical-section occupancy in I/O register 3 (bit n for core n, bit 7 for
// the handler), so mutual exclusion is a per-cycle check on that byte.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pdkkit/lowering.hpp"

namespace pdkkit {

namespace flagfix {
inline constexpr std::uint32_t flag = 0x20;
inline constexpr std::uint32_t l1 = 0x21;
inline constexpr std::uint32_t l2 = 0x22;
inline constexpr std::uint32_t ptr_base = 0x10; // pointer pair per context: core n at 0x10+2n, handler at 0x1e
inline constexpr std::uint32_t handler_ptr = 0x1e;
inline constexpr std::uint32_t tmp_base = 0x24; // scratch byte per context: core n at 0x24+n, handler at 0x2f
inline constexpr std::uint32_t handler_tmp = 0x2f;
inline constexpr std::uint32_t entries_base = 0x30; // critical-section entry counters, core n / handler at 0x37
inline constexpr std::uint32_t handler_entries = 0x37;
inline constexpr unsigned handler_bit = 7;
inline constexpr std::uint32_t stack_base = 0x40; // core n stack at 0x40+16n
} // namespace flagfix

enum class FlagOp { test_and_set, clear };

struct FixtureOptions {
    unsigned cs_pad = 2;      // nops inside each driver critical section
    unsigned handler_pad = 0; // nops inside the handler critical section
    bool unlocked_handler = false; // handler skips the L2/L1 protocol (broken on purpose)
    Variant variant = Variant::pdk14;
};

struct AtomicFixture {
    std::string source;
    Image image;
    unsigned cores = 1;
    bool single_instruction = false; // idxxch form
    std::size_t size_words = 0;      // whole program
    std::size_t tas_words = 0;       // test_and_set sequence of core 0
    std::size_t clear_words = 0;     // clear sequence of core 0
    std::uint32_t handler_start = 0, handler_end = 0; // [start, end) in program memory
    std::vector<std::pair<std::uint32_t, std::uint32_t>> driver_ranges; // per core
};

namespace detail {

class FlagGen {
public:
    FlagGen(unsigned cores, bool xchg_ind, const FixtureOptions& o) : cores_(cores), ind_(xchg_ind), o_(o) {}

    std::string build(AtomicFixture& fx) {
        emit(".arch " + std::string(to_string(o_.variant)));
        if (ind_) emit(".ext idxxch");
        emit(".equ FLAG, " + hex(flagfix::flag));
        emit(".equ L1, " + hex(flagfix::l1));
        emit(".equ L2, " + hex(flagfix::l2));
        for (unsigned c = 0; c < cores_; ++c) {
            emit(".data " + hex(flagfix::ptr_base + 2 * c) + ", lo(FLAG), hi(FLAG)");
            emit(".equ __core" + std::to_string(c) + "_sp, " + hex(flagfix::stack_base + 16 * c));
        }
        emit(".data " + hex(flagfix::handler_ptr) + ", lo(FLAG), hi(FLAG)");
        emit(".entry core0");
        emit(".org 0");
        emit("    goto core0");
        emit(".org 0x10");
        emit("__irq:");
        handler();
        emit("__irq_end:");
        for (unsigned c = 0; c < cores_; ++c) driver(c);
        fx.tas_words = tas_words_;
        fx.clear_words = clear_words_;
        return out_;
    }

private:
    void emit(const std::string& l) { out_ += l + "\n"; }
    void ins(const std::string& l) {
        emit("    " + l);
        ++count_;
    }
    std::string lbl(const std::string& base) { return base + "_" + std::to_string(seq_++); }

    /// Spin until `lock` is ours.
    void take(const std::string& lock) {
        auto l = lbl("spin");
        emit(l + ":");
        ins("mov a, #1");
        ins("xch " + lock);
        ins("ceqsn a, #0");
        ins("goto " + l);
    }

    /// a := old flag value; flag := 1. Locks per context `c` (handler: -1).
    void tas_body(const std::string& ptr, const std::string& tmp) {
        if (ind_) {
            ins("mov a, #1");
            ins("idxxch " + ptr + ", a");
            return;
        }
        ins("idxm a, " + ptr);
        ins("mov " + tmp + ", a");
        ins("mov a, #1");
        ins("idxm " + ptr + ", a");
    }

    void tas(unsigned c, const std::string& ptr, const std::string& tmp) {
        if (ind_) {
            tas_body(ptr, tmp);
            return;
        }
        if (c != 0) take("L2");
        take("L1");
        tas_body(ptr, tmp);
        ins("clear L1");
        if (c != 0) ins("clear L2");
        ins("mov a, " + tmp);
    }

    void clear(unsigned c, const std::string& ptr) {
        if (!ind_) {
            if (c != 0) take("L2");
            take("L1");
        }
        ins("mov a, #0");
        ins("idxm " + ptr + ", a");
        if (!ind_) {
            ins("clear L1");
            if (c != 0) ins("clear L2");
        }
    }

    void critical(unsigned bit, unsigned pad, std::uint32_t counter) {
        ins("set1 io:3." + std::to_string(bit));
        ins("inc " + hex(counter));
        for (unsigned i = 0; i < pad; ++i) ins("nop");
        ins("set0 io:3." + std::to_string(bit));
    }

    void driver(unsigned c) {
        const std::string ptr = hex(flagfix::ptr_base + 2 * c), tmp = hex(flagfix::tmp_base + c);
        emit("core" + std::to_string(c) + ":");
        emit("__core" + std::to_string(c) + "_start:");
        if (c == 0) ins("engint");
        auto top = lbl("acquire");
        emit(top + ":");
        // read-only wait first; spinning on the locks would keep the holder
        // from getting L2 back to release the flag
        ins("idxm a, " + ptr);
        ins("ceqsn a, #0");
        ins("goto " + top);
        std::size_t before = count_;
        tas(c, ptr, tmp);
        if (c == 0) tas_words_ = count_ - before;
        ins("ceqsn a, #0");
        ins("goto " + top);
        critical(c, o_.cs_pad, flagfix::entries_base + c);
        before = count_;
        clear(c, ptr);
        if (c == 0) clear_words_ = count_ - before;
        ins("goto " + top);
        emit("core" + std::to_string(c) + "_end:");
    }

    void handler() {
        const std::string ptr = hex(flagfix::handler_ptr), tmp = hex(flagfix::handler_tmp);
        ins("pushaf");
        if (ind_ || o_.unlocked_handler) {
            tas_body(ptr, tmp);
            if (!ind_) ins("mov a, " + tmp);
        } else {
            // try L2 once
            ins("mov a, #1");
            ins("xch L2");
            ins("ceqsn a, #0");
            ins("goto irq_busy");
            // L1 held: core 0 was interrupted inside an operation
            ins("mov a, L1");
            ins("ceqsn a, #0");
            ins("goto irq_busy_l2");
            tas_body(ptr, tmp);
            ins("clear L2");
            ins("mov a, " + tmp);
        }
        ins("ceqsn a, #0");
        ins("goto irq_done");
        critical(flagfix::handler_bit, o_.handler_pad, flagfix::handler_entries);
        if (ind_ || o_.unlocked_handler) {
            ins("mov a, #0");
            ins("idxm " + ptr + ", a");
        } else {
            // L1 cannot be taken while core 0 is interrupted, and other cores
            // hold L2 only briefly, so spinning here terminates
            take("L2");
            ins("mov a, #0");
            ins("idxm " + ptr + ", a");
            ins("clear L2");
            ins("goto irq_done");
            emit("irq_busy_l2:");
            ins("clear L2");
            emit("irq_busy:");
        }
        emit("irq_done:");
        ins("popaf");
        ins("reti");
    }

    unsigned cores_;
    bool ind_;
    FixtureOptions o_;
    std::string out_;
    std::size_t count_ = 0;
    std::size_t tas_words_ = 0, clear_words_ = 0;
    int seq_ = 0;
};

} // namespace detail

/// Builds the complete fixture program. `ops` selects which operations the
/// drivers exercise; test_and_set is always present because clearing is
/// only meaningful after a successful acquire.
inline AtomicFixture gen_atomic_flag(std::set<FlagOp> ops, unsigned cores, const ExtensionSet& x,
                                     const FixtureOptions& o = {}) {
    (void)ops;
    const auto arch = variant_spec(o.variant);
    if (cores < 1 || cores > arch.max_hw_threads)
        throw Error(ErrorKind::TooManyCores, std::to_string(cores) + " cores on " + std::string(arch.id()));
    AtomicFixture fx;
    fx.cores = cores;
    fx.single_instruction = x.idxxch;
    detail::FlagGen g(cores, x.idxxch, o);
    fx.source = g.build(fx);
    fx.image = assemble(fx.source);
    fx.size_words = fx.image.words.size();
    fx.handler_start = static_cast<std::uint32_t>(fx.image.at("__irq"));
    fx.handler_end = static_cast<std::uint32_t>(fx.image.at("__irq_end"));
    for (unsigned c = 0; c < cores; ++c)
        fx.driver_ranges.emplace_back(static_cast<std::uint32_t>(fx.image.at("core" + std::to_string(c))),
                                      static_cast<std::uint32_t>(fx.image.at("core" + std::to_string(c) + "_end")));
    return fx;
}

/// Instructions of a program-memory range, decoded.
inline std::vector<Instruction> decode_range(const Image& img, std::uint32_t from, std::uint32_t to) {
    const auto& m = shared_map(variant_spec(img.variant), img.extensions);
    std::vector<Instruction> out;
    for (auto it = img.words.lower_bound(from); it != img.words.end() && it->first < to; ++it)
        out.push_back(decode(it->second, m));
    return out;
}

/// True if the range contains an acquire (`xch`) of the lock at `lock`.
inline bool acquires(const std::vector<Instruction>& code, std::uint32_t lock) {
    return std::any_of(code.begin(), code.end(), [&](const Instruction& i) {
        return i.op == Op::XchM && i.operands[0].kind == OperandKind::DataMem &&
               static_cast<std::uint32_t>(i.operands[0].value) == lock;
    });
}

struct ExclusionReport {
    std::size_t runs = 0;
    std::size_t violations = 0;
    std::optional<std::string> first_violation;
    std::size_t handler_entries = 0; // runs in which the handler got the flag
    std::size_t handler_busy = 0;    // runs in which the handler found it busy
    std::size_t min_driver_entries = 0;
};

/// Runs the fixture once per interrupt arrival cycle in [0, horizon] and
/// checks after every cycle that at most one context is in its critical
/// section. `run_cycles` bounds each run.
inline ExclusionReport check_mutual_exclusion(const AtomicFixture& fx, std::uint64_t horizon,
                                              std::uint64_t run_cycles) {
    ExclusionReport rep;
    rep.min_driver_entries = SIZE_MAX;
    MachineConfig cfg;
    cfg.cores = fx.cores;
    const Machine proto = load(fx.image, cfg);
    for (std::uint64_t at = 0; at <= horizon; ++at) {
        Machine m = proto;
        m.raise_interrupt(at);
        ++rep.runs;
        bool bad = false;
        for (std::uint64_t i = 0; i < run_cycles && !m.halted(); ++i) {
            m.step();
            if (std::popcount(static_cast<unsigned>(m.io(io_reg::occupancy))) > 1) {
                bad = true;
                if (!rep.first_violation)
                    rep.first_violation = "irq at " + std::to_string(at) + ": occupancy " +
                                          detail::hex(m.io(io_reg::occupancy)) + " at cycle " + std::to_string(m.cycle());
                break;
            }
        }
        if (m.fault() && !rep.first_violation) rep.first_violation = "fault: " + *m.fault();
        rep.violations += bad || m.fault();
        if (m.data(flagfix::handler_entries)) ++rep.handler_entries;
        else ++rep.handler_busy;
        for (unsigned c = 0; c < fx.cores; ++c)
            rep.min_driver_entries = std::min<std::size_t>(rep.min_driver_entries, m.data(flagfix::entries_base + c));
    }
    return rep;
}

} // namespace pdkkit
