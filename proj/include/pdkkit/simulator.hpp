#pragma once

// Cycle-stepped barrel-processor simulator.
//
// One hardware thread issues per cycle, round-robin over running threads.
// A 2-cycle instruction stalls on its first turn and commits all of its
// effects on its core's next turn, so memory never shows a partial update.
// A taken skip costs the core one extra (empty) turn.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pdkkit/assembler.hpp"

namespace pdkkit {

namespace flag {
inline constexpr std::uint8_t Z = 1, C = 2, AC = 4, OV = 8;
}

namespace io_reg {
inline constexpr std::uint32_t sp = 0, flags = 1, gintctl = 2, occupancy = 3, mul_op = 4, mul_hi = 5;
}

struct CoreState {
    std::uint8_t acc = 0;
    std::uint8_t sp = 0;
    std::uint8_t flags = 0;
    std::uint32_t pc = 0;
    bool running = true;

    // barrel bookkeeping
    bool stalled = false; // first half of a 2-cycle instruction done
    bool bubble = false;  // taken skip still owes a turn

    bool operator==(const CoreState&) const = default;
};

struct MachineConfig {
    unsigned cores = 1;
    std::optional<std::uint32_t> data_size; // default: full data address space
    std::optional<std::uint32_t> irq_vector; // default: symbol __irq, else 0x10
    std::vector<std::uint32_t> start_pcs;    // per core; default: __core<i>_start, else entry
    std::vector<std::uint8_t> sps;           // per core; default: __core<i>_sp, else 0
    std::optional<Variant> variant;          // expected image variant
    bool wrap_data = false;                  // wrap instead of faulting on bad data addresses
    bool trace = false;
    const OpcodeMap* map = nullptr;          // alternate map for decoding
};

struct TraceEntry {
    std::uint64_t cycle;
    unsigned core;
    std::uint32_t pc;
    std::uint32_t word;
    std::string what; // mnemonic text, or a marker such as "(stall)"
    std::vector<std::string> effects;

    bool operator==(const TraceEntry&) const = default;
};

struct StepResult {
    std::optional<Instruction> executed; // set when an instruction committed this cycle
    unsigned core = 0;
    unsigned cycles_consumed = 0;        // of the committed instruction
    std::vector<std::string> events;
};

enum class HaltReason { Halted, Fault, Breakpoint, Budget };

inline const char* to_string(HaltReason r) {
    switch (r) {
    case HaltReason::Halted: return "halted";
    case HaltReason::Fault: return "fault";
    case HaltReason::Breakpoint: return "breakpoint";
    case HaltReason::Budget: return "cycle budget exhausted";
    }
    return "?";
}

struct RunResult {
    HaltReason reason;
    std::uint64_t cycle;
    std::string detail;
};

class Machine {
public:
    Machine(const Image& img, const MachineConfig& cfg)
        : arch_(variant_spec(img.variant)), exts_(img.extensions), cfg_(cfg),
          map_(cfg.map ? cfg.map : &shared_map(arch_, exts_)) {
        if (cfg.variant && *cfg.variant != img.variant)
            throw Error(ErrorKind::ImageVariantMismatch,
                        "image is " + std::string(to_string(img.variant)) + ", configuration expects " +
                            std::string(to_string(*cfg.variant)));
        if (cfg.cores < 1 || cfg.cores > arch_.max_hw_threads)
            throw Error(ErrorKind::TooManyCores, std::to_string(cfg.cores) + " cores requested, " +
                                                     std::string(arch_.id()) + " has at most " +
                                                     std::to_string(arch_.max_hw_threads));
        std::uint32_t ds = cfg.data_size.value_or(arch_.data_space());
        if (ds == 0 || ds > arch_.data_space())
            throw Error(ErrorKind::DataAddressOutOfRange,
                        "data size " + std::to_string(ds) + " exceeds " + std::to_string(arch_.data_space()));
        code_.assign(arch_.prog_size(), -1);
        for (const auto& [a, w] : img.words) code_.at(a) = static_cast<std::int32_t>(w);
        data_.assign(ds, 0);
        for (const auto& [a, b] : img.data_init) {
            if (a >= ds) throw Error(ErrorKind::DataAddressOutOfRange, "initial data at " + detail::hex(a));
            data_[a] = b;
        }
        io_.assign(arch_.io_space(), 0);
        entry_ = img.entry;
        if (auto s = img.symbol("__core0_start")) entry_ = static_cast<std::uint32_t>(*s);
        irq_vector_ = cfg.irq_vector.value_or(static_cast<std::uint32_t>(img.symbol("__irq").value_or(0x10)));
        cores_.resize(cfg.cores);
        for (unsigned i = 0; i < cfg.cores; ++i) {
            auto& c = cores_[i];
            std::string n = "__core" + std::to_string(i);
            c.pc = i < cfg.start_pcs.size() ? cfg.start_pcs[i]
                                            : static_cast<std::uint32_t>(img.symbol(n + "_start").value_or(entry_));
            c.sp = i < cfg.sps.size() ? cfg.sps[i] : static_cast<std::uint8_t>(img.symbol(n + "_sp").value_or(0));
        }
        reset_cores_ = cores_;
    }

    // --- observers ---
    const ArchVariant& arch() const { return arch_; }
    const OpcodeMap& map() const { return *map_; }
    const std::vector<CoreState>& cores() const { return cores_; }
    const CoreState& core(unsigned i) const { return cores_.at(i); }
    std::uint8_t data(std::uint32_t a) const { return data_.at(a); }
    const std::vector<std::uint8_t>& data_memory() const { return data_; }
    std::uint8_t io(std::uint32_t a) const { return io_read_raw(a); }
    std::optional<std::uint32_t> code(std::uint32_t a) const {
        if (a >= code_.size() || code_[a] < 0) return std::nullopt;
        return static_cast<std::uint32_t>(code_[a]);
    }
    const std::vector<std::int32_t>& code_memory() const { return code_; }
    std::uint64_t cycle() const { return cycle_; }
    bool gint() const { return gint_; }
    unsigned active_core() const { return next_; }
    bool halted() const { return fault_ || std::none_of(cores_.begin(), cores_.end(), [](auto& c) { return c.running; }); }
    const std::optional<std::string>& fault() const { return fault_; }
    const std::vector<TraceEntry>& trace() const { return trace_; }
    std::uint32_t irq_vector() const { return irq_vector_; }

    // --- harness access ---
    void set_data(std::uint32_t a, std::uint8_t v) { data_.at(a) = v; }
    void set_io(std::uint32_t a, std::uint8_t v) { io_write_raw(a, v, 0); }
    CoreState& core_mut(unsigned i) { return cores_.at(i); }
    void set_gint(bool g) { gint_ = g; }

    /// Requests an interrupt for core 0 at the first instruction boundary at
    /// or after `at_cycle`. Dropped if interrupts are disabled at that point.
    void raise_interrupt(std::uint64_t at_cycle) {
        pending_irq_.insert(std::upper_bound(pending_irq_.begin(), pending_irq_.end(), at_cycle), at_cycle);
    }

    StepResult step() {
        StepResult r;
        if (halted()) return r;
        unsigned ci = pick_core();
        r.core = ci;
        auto& c = cores_[ci];
        cur_ = ci;
        effects_.clear();
        const std::uint32_t pc0 = c.pc;
        std::uint32_t word0 = code(pc0).value_or(0);
        std::string what;
        try {
            if (c.bubble) {
                c.bubble = false;
                what = "(skip)";
            } else if (c.stalled) {
                c.stalled = false;
                auto in = decode(word0, *map_);
                if (cfg_.trace) what = to_string(in);
                execute(c, in);
                r.executed = in;
                r.cycles_consumed = 2;
                if (ci == 0) holdoff_ = false;
            } else if (ci == 0 && irq_due()) {
                take_interrupt(c);
                what = "(interrupt)";
            } else {
                auto w = code(pc0);
                if (!w) throw Fault("no code at " + detail::hex(pc0));
                auto in = try_decode(*w, *map_);
                if (!in) throw Fault("unallocated opcode " + detail::hex(*w) + " at " + detail::hex(pc0));
                if (cfg_.trace) what = to_string(*in);
                if (map_->cycles(in->op) == CycleClass::Two) {
                    c.stalled = true;
                    what += " (1/2)";
                } else {
                    bool skip = execute(c, *in);
                    if (skip) {
                        c.bubble = true;
                        note("skip");
                    }
                    r.executed = in;
                    r.cycles_consumed = skip ? 2 : 1;
                    if (ci == 0) holdoff_ = false;
                }
            }
        } catch (const Fault& f) {
            fault_ = f.msg;
            c.running = false;
            effects_.push_back("fault: " + f.msg);
        }
        if (cfg_.trace) trace_.push_back({cycle_, ci, pc0, word0, what, effects_});
        r.events = effects_;
        ++cycle_;
        return r;
    }

    RunResult run(std::uint64_t max_cycles, const std::set<std::uint32_t>& breakpoints = {}) {
        std::uint64_t budget_end = cycle_ + max_cycles;
        for (;;) {
            if (fault_) return {HaltReason::Fault, cycle_, *fault_};
            if (halted()) return {HaltReason::Halted, cycle_, "all cores stopped"};
            if (!breakpoints.empty()) {
                unsigned ci = peek_core();
                const auto& c = cores_[ci];
                if (!c.stalled && !c.bubble && breakpoints.count(c.pc))
                    return {HaltReason::Breakpoint, cycle_, "core " + std::to_string(ci) + " at " + detail::hex(c.pc)};
            }
            if (cycle_ >= budget_end) return {HaltReason::Budget, cycle_, ""};
            step();
        }
    }

    /// Text trace: `cycle core pc word mnemonic effects...`.
    std::string trace_text() const {
        std::ostringstream os;
        char buf[64];
        for (const auto& t : trace_) {
            std::snprintf(buf, sizeof buf, "%llu %u %04x %04x ", static_cast<unsigned long long>(t.cycle), t.core,
                          t.pc, t.word);
            os << buf << t.what;
            for (const auto& e : t.effects) os << " " << e;
            os << "\n";
        }
        return os.str();
    }

    std::string trace_jsonl() const;

private:
    struct Fault {
        std::string msg;
    };

    void note(const char* s) {
        if (cfg_.trace) effects_.push_back(s);
    }
    void note(std::string s) {
        if (cfg_.trace) effects_.push_back(std::move(s));
    }

    unsigned peek_core() const {
        for (unsigned k = 0; k < cores_.size(); ++k) {
            unsigned i = (next_ + k) % cores_.size();
            if (cores_[i].running) return i;
        }
        return 0;
    }
    unsigned pick_core() {
        unsigned i = peek_core();
        next_ = (i + 1) % static_cast<unsigned>(cores_.size());
        return i;
    }

    bool irq_due() {
        if (holdoff_ || pending_irq_.empty() || pending_irq_.front() > cycle_) return false;
        // requests that arrive while interrupts are disabled are lost
        while (!pending_irq_.empty() && pending_irq_.front() <= cycle_) {
            pending_irq_.erase(pending_irq_.begin());
            if (gint_) return true;
            note("irq dropped");
        }
        return false;
    }

    void take_interrupt(CoreState& c) {
        push_pc(c, c.pc);
        c.pc = irq_vector_;
        gint_ = false;
        holdoff_ = true;
        note("irq");
        note("pc=" + detail::hex(c.pc));
    }

    // --- memory ---
    std::uint32_t daddr(std::int64_t a) {
        auto n = static_cast<std::int64_t>(data_.size());
        if (a >= 0 && a < n) return static_cast<std::uint32_t>(a);
        if (cfg_.wrap_data) return static_cast<std::uint32_t>(((a % n) + n) % n);
        throw Fault("data address " + detail::hex(a) + " outside " + std::to_string(n) + "-byte data memory");
    }
    std::uint8_t rd(std::int64_t a) { return data_[daddr(a)]; }
    void wr(std::int64_t a, std::uint8_t v) {
        auto x = daddr(a);
        data_[x] = v;
        note_f([&] { return "[" + detail::hex(x) + "]=" + detail::hex(v); });
    }
    std::uint32_t pair(std::int64_t m) { return rd(m) | (static_cast<std::uint32_t>(rd(m + 1)) << 8); }

    std::uint8_t io_read_raw(std::uint32_t a) const {
        const auto& c = cores_[cur_];
        if (a == io_reg::sp) return c.sp;
        if (a == io_reg::flags) return c.flags;
        if (a == io_reg::gintctl && exts_.gint_io) return static_cast<std::uint8_t>((io_.at(a) & 0xfe) | (gint_ ? 1 : 0));
        return io_.at(a);
    }
    void io_write_raw(std::uint32_t a, std::uint8_t v, unsigned core) {
        auto& c = cores_[core];
        if (a == io_reg::sp) c.sp = v;
        else if (a == io_reg::flags) c.flags = v & 0xf;
        else {
            io_.at(a) = v;
            if (a == io_reg::gintctl && exts_.gint_io) gint_ = v & 1;
        }
    }
    std::uint8_t io_rd(std::uint32_t a) { return io_read_raw(a); }
    void io_wr(std::uint32_t a, std::uint8_t v) {
        io_write_raw(a, v, cur_);
        note_f([&] { return "io[" + detail::hex(a) + "]=" + detail::hex(v); });
    }

    void push_pc(CoreState& c, std::uint32_t pc) {
        wr(c.sp, static_cast<std::uint8_t>(pc & 0xff));
        wr(c.sp + 1, static_cast<std::uint8_t>(pc >> 8));
        set_sp(c, static_cast<std::uint8_t>(c.sp + 2));
    }
    std::uint32_t pop_pc(CoreState& c) {
        set_sp(c, static_cast<std::uint8_t>(c.sp - 2));
        return (rd(c.sp) | (static_cast<std::uint32_t>(rd(c.sp + 1)) << 8)) & (arch_.prog_size() - 1);
    }
    void set_sp(CoreState& c, std::uint8_t v) {
        c.sp = v;
        note_f([&] { return "sp=" + detail::hex(v); });
    }
    void set_acc(CoreState& c, std::uint8_t v) {
        c.acc = v;
        note_f([&] { return "a=" + detail::hex(v); });
    }
    void set_flags(CoreState& c, std::uint8_t f) {
        c.flags = f & 0xf;
        note_f([&] { return "f=" + std::to_string(c.flags); });
    }
    void set_flag(CoreState& c, std::uint8_t bit, bool on) { set_flags(c, on ? (c.flags | bit) : (c.flags & ~bit)); }
    void set_z(CoreState& c, std::uint8_t v) { set_flag(c, flag::Z, v == 0); }

    std::uint8_t alu_add(CoreState& c, std::uint8_t a, std::uint8_t b, unsigned cin) {
        unsigned r = a + b + cin;
        std::uint8_t res = static_cast<std::uint8_t>(r);
        std::uint8_t f = 0;
        if (res == 0) f |= flag::Z;
        if (r > 0xff) f |= flag::C;
        if ((a & 0xf) + (b & 0xf) + cin > 0xf) f |= flag::AC;
        if ((a ^ res) & (b ^ res) & 0x80) f |= flag::OV;
        set_flags(c, f);
        return res;
    }
    std::uint8_t alu_sub(CoreState& c, std::uint8_t a, std::uint8_t b, unsigned bin) {
        int r = a - b - static_cast<int>(bin);
        std::uint8_t res = static_cast<std::uint8_t>(r);
        std::uint8_t f = 0;
        if (res == 0) f |= flag::Z;
        if (r < 0) f |= flag::C;
        if ((a & 0xf) - (b & 0xf) - static_cast<int>(bin) < 0) f |= flag::AC;
        if ((a ^ b) & (a ^ res) & 0x80) f |= flag::OV;
        set_flags(c, f);
        return res;
    }
    unsigned carry(const CoreState& c) const { return (c.flags & flag::C) ? 1 : 0; }

    std::int64_t mem_addr(const CoreState& c, const Operand& o) const {
        if (o.kind != OperandKind::SpRel) return o.value;
        auto n = static_cast<std::int64_t>(data_.size());
        return ((c.sp + o.value) % n + n) % n;
    }

    std::uint16_t code_word(std::uint32_t addr) {
        auto w = code(addr & (arch_.prog_size() - 1));
        return static_cast<std::uint16_t>(w.value_or(arch_.word_count() - 1));
    }

    bool execute(CoreState& c, const Instruction& in);

    template <class F>
    void note_f(F&& f) {
        if (cfg_.trace) effects_.push_back(f());
    }

    ArchVariant arch_;
    ExtensionSet exts_;
    MachineConfig cfg_;
    const OpcodeMap* map_;
    std::vector<std::int32_t> code_;
    std::vector<std::uint8_t> data_;
    std::vector<std::uint8_t> io_;
    std::vector<CoreState> cores_;
    std::vector<CoreState> reset_cores_;
    std::uint32_t entry_ = 0;
    std::uint32_t irq_vector_ = 0x10;
    std::uint64_t cycle_ = 0;
    unsigned next_ = 0;
    unsigned cur_ = 0;
    bool gint_ = false;
    bool holdoff_ = false;
    std::vector<std::uint64_t> pending_irq_;
    std::optional<std::string> fault_;
    std::vector<std::string> effects_;
    std::vector<TraceEntry> trace_;
};

inline Machine load(const Image& img, const MachineConfig& cfg = {}) { return Machine(img, cfg); }

} // namespace pdkkit

#include "pdkkit/detail/execute.hpp"
