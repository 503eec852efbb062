#pragma once

// Data-driven opcode maps: per-variant template tables, extension placement
// into unallocated runs, bidirectional encoding and gap analysis.
//
// The baseline layouts are synthetic. pdk13 leaves free runs of 35, 8 and 5
// words; pdk14's two widest are 88 and 67; pdk15 and pdk16 keep large free
// runs.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pdkkit/arch.hpp"
#include "pdkkit/error.hpp"
#include "pdkkit/instruction.hpp"

namespace pdkkit {

enum class Provenance { paper_informed_baseline, extended };

inline const char* to_string(Provenance p) {
    return p == Provenance::paper_informed_baseline ? "paper_informed_baseline" : "extended";
}

/// One opcode template: fixed bits plus an operand field.
struct MapEntry {
    Op op;
    std::uint32_t match = 0; // fixed bit values
    std::uint32_t mask = 0;  // 1 where the bit is fixed
    std::uint32_t field = 0; // 1 where the bit belongs to the operand field
    CycleClass cycles = CycleClass::One;
    std::string origin = "baseline";

    std::uint32_t size() const { return std::uint32_t{1} << std::popcount(field); }
    bool matches(std::uint32_t w) const { return (w & mask) == match; }
};

struct MapOptions {
    /// Let idxxch take over a redundant baseline opcode block (`addc m,a`,
    /// `nadd` where present, then `not a`) when no gap is wide enough.
    bool allow_reclaim = true;
};

struct Gap {
    std::uint32_t start;
    std::uint32_t length;
    bool operator==(const Gap&) const = default;
};

struct CapacityNote {
    std::string extension;
    std::uint32_t needed_width;
    bool fits;
};

struct GapReport {
    Variant variant;
    std::string extensions;
    std::uint32_t word_count;
    std::uint32_t allocated;
    std::vector<Gap> gaps; // longest first, ties by start address
    std::uint32_t widest = 0;
    std::vector<CapacityNote> capacity;

    std::vector<std::uint32_t> lengths() const {
        std::vector<std::uint32_t> out;
        for (const auto& g : gaps) out.push_back(g.length);
        return out;
    }
};

class OpcodeMap;
OpcodeMap build_map(const ArchVariant& arch, const ExtensionSet& exts, const MapOptions& opts = {});

class OpcodeMap {
public:
    OpcodeMap(ArchVariant arch, ExtensionSet exts, std::vector<MapEntry> entries,
              Provenance prov, std::vector<std::string> notes)
        : arch_(std::move(arch)), exts_(exts), entries_(std::move(entries)), provenance_(prov),
          notes_(std::move(notes)) {
        index();
    }

    const ArchVariant& arch() const { return arch_; }
    const ExtensionSet& extensions() const { return exts_; }
    const std::vector<MapEntry>& entries() const { return entries_; }
    Provenance provenance() const { return provenance_; }
    const std::vector<std::string>& notes() const { return notes_; }

    bool has(Op op) const { return by_op_[static_cast<std::size_t>(op)] >= 0; }
    const MapEntry* entry_for(Op op) const {
        int i = by_op_[static_cast<std::size_t>(op)];
        return i < 0 ? nullptr : &entries_[static_cast<std::size_t>(i)];
    }
    /// Entry matching a word, or nullptr for unallocated words.
    const MapEntry* entry_at(std::uint32_t word) const {
        if (word >= lookup_.size()) return nullptr;
        int i = lookup_[word];
        return i < 0 ? nullptr : &entries_[static_cast<std::size_t>(i)];
    }
    bool allocated(std::uint32_t word) const { return entry_at(word) != nullptr; }

    CycleClass cycles(Op op) const {
        const auto* e = entry_for(op);
        return e ? e->cycles : info(op).cycles;
    }

    /// Whether `addr` may be used as a direct data-memory operand. With the
    /// sprel extension the top quarter of the address space selects
    /// stack-relative mode and is no longer directly addressable.
    bool direct_address_ok(std::int64_t addr) const {
        if (addr < 0 || addr >= static_cast<std::int64_t>(arch_.data_space())) return false;
        if (exts_.sprel && addr >= 3 * (static_cast<std::int64_t>(arch_.data_space()) / 4))
            return false;
        return true;
    }

    /// Signed offset range of a stack-relative operand.
    std::pair<int, int> sp_offset_range() const {
        int half = 1 << (arch_.data_addr_bits - 3);
        return {-half, half - 1};
    }

    /// Exhaustively checks that every word matches at most one template and
    /// that every template fits the word width. Returns the first problem.
    std::optional<std::string> self_check() const {
        const std::uint32_t n = arch_.word_count();
        for (const auto& e : entries_)
            if ((e.mask | e.field) != n - 1 || (e.mask & e.field) != 0)
                return "template for " + std::string(info(e.op).form) + " does not span the word";
        for (std::uint32_t w = 0; w < n; ++w) {
            int hits = 0;
            for (const auto& e : entries_) hits += e.matches(w);
            if (hits > 1) return "word " + detail::hex(w) + " matches " + std::to_string(hits) + " templates";
        }
        return std::nullopt;
    }

    std::uint32_t allocated_count() const {
        std::uint32_t c = 0;
        for (const auto& e : entries_) c += e.size();
        return c;
    }

private:
    void index() {
        by_op_.fill(-1);
        lookup_.assign(arch_.word_count(), -1);
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto& e = entries_[i];
            if (e.match & ~e.mask || (e.mask | e.field) >= arch_.word_count() * 2)
                throw Error(ErrorKind::MapFormat, "malformed template");
            if (by_op_[static_cast<std::size_t>(e.op)] >= 0)
                throw Error(ErrorKind::MapFormat,
                            "duplicate template for " + std::string(info(e.op).form));
            by_op_[static_cast<std::size_t>(e.op)] = static_cast<int>(i);
            // enumerate field values to fill the lookup table
            std::uint32_t sub = 0;
            do {
                std::uint32_t w = e.match | sub;
                if (w < lookup_.size()) {
                    if (lookup_[w] >= 0)
                        throw Error(ErrorKind::MapFormat,
                                    "overlapping templates at word " + detail::hex(w));
                    lookup_[w] = static_cast<std::int16_t>(i);
                }
                sub = (sub - e.field) & e.field;
            } while (sub != 0);
        }
    }

    ArchVariant arch_;
    ExtensionSet exts_;
    std::vector<MapEntry> entries_;
    Provenance provenance_;
    std::vector<std::string> notes_;
    std::array<int, op_count> by_op_{};
    std::vector<std::int16_t> lookup_;
};

namespace detail {

/// Number of operand-field bits for a slot on a variant.
inline unsigned slot_bits(Slot s, const ArchVariant& a) {
    switch (s) {
    case Slot::Acc: return 0;
    case Slot::Mem: return a.data_addr_bits;
    case Slot::BitMem: return 3 + a.bit_addr_bits();
    case Slot::Io: return a.io_addr_bits;
    case Slot::BitIo: return 3 + a.io_addr_bits;
    case Slot::Imm8: return 8;
    case Slot::Pair: return a.data_addr_bits - 1;
    case Slot::Prog: return a.prog_addr_bits;
    case Slot::SpOff: return a.data_addr_bits - 2;
    case Slot::SpImm: return a.data_addr_bits - 3;
    }
    return 0;
}

inline unsigned field_bits(Op op, const ArchVariant& a) {
    unsigned b = 0;
    for (auto s : info(op).operands()) b += slot_bits(s, a);
    return b;
}

/// The encoded (non-accumulator) slot of a form, if any.
inline std::optional<Slot> encoded_slot(Op op) {
    for (auto s : info(op).operands())
        if (s != Slot::Acc) return s;
    return std::nullopt;
}

inline MapEntry make_entry(Op op, std::uint32_t base, unsigned fbits, std::string origin) {
    MapEntry e;
    e.op = op;
    e.field = (std::uint32_t{1} << fbits) - 1;
    e.match = base;
    e.cycles = info(op).cycles;
    e.origin = std::move(origin);
    return e;
}

inline std::vector<Op> page_singles(Variant v) {
    switch (v) {
    case Variant::pdk13:
        return {Op::Nop,  Op::Ret,  Op::Reti, Op::Engint, Op::Disgint, Op::Stopsys,
                Op::Pushaf, Op::Popaf, Op::NotA, Op::NegA, Op::SlA, Op::SrA,
                Op::SlcA, Op::SrcA, Op::LdsptlA, Op::LdspthA};
    case Variant::pdk14:
        return {Op::Nop,  Op::Ret,  Op::Reti,  Op::Engint, Op::Disgint, Op::Stopsys, Op::Stopexe,
                Op::Reset, Op::Pushaf, Op::Popaf, Op::NotA, Op::NegA, Op::SlA, Op::SrA,
                Op::SlcA, Op::SrcA, Op::SwapA, Op::LdsptlA, Op::LdspthA, Op::Mul};
    case Variant::pdk15:
    case Variant::pdk16:
        return {Op::Nop,  Op::Ret,   Op::Reti,  Op::Engint, Op::Disgint, Op::Stopsys,
                Op::Stopexe, Op::Reset, Op::Wdreset, Op::Pushaf, Op::Popaf, Op::NotA,
                Op::NegA, Op::SlA, Op::SrA, Op::SlcA, Op::SrcA, Op::SwapA,
                Op::AddcA, Op::SubcA, Op::IzsnA, Op::DzsnA, Op::PcaddA, Op::Mul};
    }
    return {};
}

/// Word offsets of the implicit-instruction page that carry an instruction.
/// Everything else in the page is unallocated.
struct PageLayout {
    std::uint32_t size;
    std::vector<std::uint32_t> slots;
};

inline PageLayout page_layout(Variant v, std::size_t nsingles) {
    auto runs = [](std::initializer_list<std::pair<std::uint32_t, std::uint32_t>> rs) {
        std::vector<std::uint32_t> out;
        for (auto [first, last] : rs)
            for (auto i = first; i <= last; ++i) out.push_back(i);
        return out;
    };
    switch (v) {
    case Variant::pdk13:
        // free runs: 1..35 (35), 42..49 (8), 53..57 (5)
        return {64, runs({{0, 0}, {36, 41}, {50, 52}, {58, 63}})};
    case Variant::pdk14:
        // free runs: 4..91 (88), 97..163 (67), 169..209 (41), 215..254 (40)
        return {256, runs({{0, 3}, {92, 96}, {164, 168}, {210, 214}, {255, 255}})};
    default: {
        PageLayout p{256, {}};
        for (std::uint32_t i = 0; i < nsingles; ++i) p.slots.push_back(i);
        return p;
    }
    }
}

inline std::vector<Op> block_ops(Variant v) {
    const bool ge14 = v != Variant::pdk13;
    const bool ge15 = v == Variant::pdk15 || v == Variant::pdk16;
    std::vector<Op> ops{Op::Goto, Op::Call};
    for (Op o : {Op::Set0M, Op::Set1M, Op::T0snM, Op::T1snM, Op::Set0Io, Op::Set1Io, Op::T0snIo,
                 Op::T1snIo})
        ops.push_back(o);
    if (ge14) ops.push_back(Op::SwapcIo);
    for (Op o : {Op::MovAK, Op::AddAK, Op::SubAK, Op::AndAK, Op::OrAK, Op::XorAK, Op::CeqsnAK})
        ops.push_back(o);
    if (ge14) ops.push_back(Op::CneqsnAK);
    ops.push_back(Op::RetK);
    for (Op o : {Op::MovAM, Op::MovMA, Op::AddAM, Op::AddMA, Op::AddcAM, Op::AddcMA, Op::SubAM,
                 Op::SubMA, Op::SubcAM, Op::SubcMA, Op::AndAM, Op::AndMA, Op::OrAM, Op::OrMA,
                 Op::XorAM, Op::XorMA, Op::XchM, Op::IncM, Op::DecM, Op::ClearM, Op::SlM, Op::SrM,
                 Op::SlcM, Op::SrcM, Op::CeqsnAM, Op::IzsnM, Op::DzsnM, Op::NotM})
        ops.push_back(o);
    if (ge14)
        for (Op o : {Op::CneqsnAM, Op::NegM, Op::CompAM, Op::CompMA, Op::AddcM, Op::SubcM,
                     Op::CeqsnMA, Op::CneqsnMA, Op::SwapM})
            ops.push_back(o);
    if (ge15) {
        ops.push_back(Op::NaddAM);
        ops.push_back(Op::NaddMA);
    }
    ops.push_back(Op::IdxmAM);
    ops.push_back(Op::IdxmMA);
    if (ge15) {
        ops.push_back(Op::LdtablAM);
        ops.push_back(Op::LdtabhAM);
    }
    if (v == Variant::pdk16)
        for (Op o : {Op::PushwM, Op::IgotoM, Op::IcallM}) ops.push_back(o);
    for (Op o : {Op::MovAIo, Op::MovIoA, Op::XorIoA, Op::XorAIo}) ops.push_back(o);
    return ops;
}

inline std::vector<MapEntry> baseline_entries(const ArchVariant& a) {
    struct Block {
        std::uint32_t size;
        std::optional<Op> op; // nullopt = implicit page
    };
    const auto singles = page_singles(a.name);
    const auto page = page_layout(a.name, singles.size());
    std::vector<Block> blocks;
    for (Op o : block_ops(a.name)) blocks.push_back({std::uint32_t{1} << field_bits(o, a), o});
    blocks.push_back({page.size, std::nullopt});
    // Descending sizes keep every block naturally aligned when packed.
    std::stable_sort(blocks.begin(), blocks.end(),
                     [](const Block& x, const Block& y) { return x.size > y.size; });

    std::vector<MapEntry> out;
    std::uint32_t at = 0;
    for (const auto& b : blocks) {
        if (b.op) {
            out.push_back(make_entry(*b.op, at, field_bits(*b.op, a), "baseline"));
        } else {
            for (std::size_t i = 0; i < singles.size(); ++i)
                out.push_back(make_entry(singles[i], at + page.slots.at(i), 0, "baseline"));
        }
        at += b.size;
    }
    if (at > a.word_count()) throw Error(ErrorKind::MapFormat, "baseline layout overflows opcode space");
    for (auto& e : out) e.mask = (a.word_count() - 1) & ~e.field;
    return out;
}

inline std::vector<Gap> free_runs(const std::vector<bool>& used) {
    std::vector<Gap> gaps;
    std::uint32_t n = static_cast<std::uint32_t>(used.size());
    for (std::uint32_t i = 0; i < n;) {
        if (used[i]) {
            ++i;
            continue;
        }
        std::uint32_t j = i;
        while (j < n && !used[j]) ++j;
        gaps.push_back({i, j - i});
        i = j;
    }
    std::stable_sort(gaps.begin(), gaps.end(),
                     [](const Gap& x, const Gap& y) { return x.length > y.length; });
    return gaps;
}

/// Lowest naturally aligned start of a `size`-long run inside `g`.
inline std::optional<std::uint32_t> aligned_slot(const Gap& g, std::uint32_t size) {
    std::uint32_t start = (g.start + size - 1) / size * size;
    if (start + size <= g.start + g.length) return start;
    return std::nullopt;
}

/// A group of extension templates that must share one aligned slot.
struct ExtGroup {
    std::string ext;
    std::vector<Op> ops;
    std::uint32_t needed;
};

inline std::vector<ExtGroup> extension_groups(const ArchVariant& a, const ExtensionSet& x,
                                              const std::vector<MapEntry>& base) {
    const std::uint32_t mem_slot = a.data_space();
    auto present = [&](Op op) {
        return std::any_of(base.begin(), base.end(), [&](const MapEntry& e) { return e.op == op; });
    };
    std::vector<ExtGroup> g;
    if (x.spadd) g.push_back({"spadd", {Op::Spadd}, std::uint32_t{1} << (a.data_addr_bits - 3)});
    if (x.idxsp) g.push_back({"idxsp", {Op::MovASp, Op::MovSpA}, mem_slot});
    if (x.idxxch) g.push_back({"idxxch", {Op::IdxxchMA}, mem_slot});
    if (x.cmpxchg_dir) g.push_back({"cmpxchg_dir", {Op::CmpxchgM}, mem_slot});
    if (x.cmpxchg_ind) g.push_back({"cmpxchg_ind", {Op::IdxcmpxchgM}, mem_slot});
    if (x.atomic_rmw_ind)
        for (Op o : {Op::IdxaddMA, Op::IdxandMA, Op::IdxorMA, Op::IdxxorMA})
            g.push_back({"atomic_rmw_ind", {o}, mem_slot});
    if (x.pushw && !present(Op::PushwM)) g.push_back({"pushw", {Op::PushwM}, mem_slot});
    if (x.igoto_icall) {
        if (!present(Op::IgotoM)) g.push_back({"igoto_icall", {Op::IgotoM}, mem_slot});
        if (!present(Op::IcallM)) g.push_back({"igoto_icall", {Op::IcallM}, mem_slot});
    }
    if (x.coreid) g.push_back({"coreid", {Op::CoreidA}, 1});
    if (x.da) g.push_back({"da", {Op::DaA}, 1});
    std::stable_sort(g.begin(), g.end(),
                     [](const ExtGroup& l, const ExtGroup& r) { return l.needed > r.needed; });
    return g;
}

inline std::vector<Op> reclaimable(Variant v) {
    std::vector<Op> r{Op::AddcMA};
    if (v == Variant::pdk15 || v == Variant::pdk16) {
        r.push_back(Op::NaddMA);
        r.push_back(Op::NaddAM);
    }
    r.push_back(Op::NotA);
    return r;
}

} // namespace detail

inline OpcodeMap build_map(const ArchVariant& a, const ExtensionSet& x, const MapOptions& opts) {
    x.validate();
    auto entries = detail::baseline_entries(a);
    std::vector<std::string> notes;
    const std::uint32_t n = a.word_count();

    auto occupancy = [&] {
        std::vector<bool> used(n, false);
        for (const auto& e : entries) {
            std::uint32_t sub = 0;
            do {
                used[e.match | sub] = true;
                sub = (sub - e.field) & e.field;
            } while (sub != 0);
        }
        return used;
    };
    auto remove_op = [&](Op op) {
        entries.erase(std::remove_if(entries.begin(), entries.end(),
                                     [&](const MapEntry& e) { return e.op == op; }),
                      entries.end());
    };

    if (x.gint_io) {
        remove_op(Op::Engint);
        remove_op(Op::Disgint);
        notes.push_back("gint_io: engint and disgint removed; global interrupt enable is I/O bit 2.0");
    }

    for (const auto& grp : detail::extension_groups(a, x, entries)) {
        auto used = occupancy();
        auto gaps = detail::free_runs(used);
        std::optional<std::uint32_t> slot;
        for (const auto& g : gaps)
            if ((slot = detail::aligned_slot(g, grp.needed))) break;

        if (!slot && opts.allow_reclaim && grp.ext == "idxxch") {
            for (Op victim : detail::reclaimable(a.name)) {
                auto it = std::find_if(entries.begin(), entries.end(),
                                       [&](const MapEntry& e) { return e.op == victim; });
                if (it == entries.end() || it->size() < grp.needed) continue;
                std::uint32_t base = it->match;
                notes.push_back("reclaimed " + std::string(info(victim).form) + " at " +
                                detail::hex(base) + " for " + grp.ext);
                entries.erase(it);
                slot = base;
                break;
            }
        }
        if (!slot)
            throw UnplaceableExtension(grp.ext, grp.needed, gaps.empty() ? 0 : gaps.front().length);

        std::uint32_t at = *slot;
        for (Op op : grp.ops) {
            unsigned fb = detail::field_bits(op, a);
            std::uint32_t sz = std::uint32_t{1} << fb;
            at = (at + sz - 1) / sz * sz;
            auto e = detail::make_entry(op, at, fb, "extension:" + grp.ext);
            e.mask = (n - 1) & ~e.field;
            entries.push_back(e);
            at += sz;
        }
        notes.push_back(grp.ext + ": " + std::string(info(grp.ops.front()).form) + " placed at " +
                        detail::hex(*slot));
    }
    auto prov = x.none() ? Provenance::paper_informed_baseline : Provenance::extended;
    return OpcodeMap(a, x, std::move(entries), prov, std::move(notes));
}

/// Even stack adjustments encodable by `spadd #k` on a variant.
inline std::vector<int> spadd_domain(const ArchVariant& a) {
    const int half = 1 << (a.data_addr_bits - 4); // field is data_addr_bits - 3 wide, stores k/2
    std::vector<int> out;
    for (int v = -half; v < half; ++v) out.push_back(2 * v);
    return out;
}

inline GapReport gap_analysis(const OpcodeMap& m) {
    const auto& a = m.arch();
    std::vector<bool> used(a.word_count());
    for (std::uint32_t w = 0; w < a.word_count(); ++w) used[w] = m.allocated(w);
    GapReport r;
    r.variant = a.name;
    r.extensions = m.extensions().str();
    r.word_count = a.word_count();
    r.gaps = detail::free_runs(used);
    r.allocated = r.word_count;
    for (const auto& g : r.gaps) r.allocated -= g.length;
    r.widest = r.gaps.empty() ? 0 : r.gaps.front().length;

    struct Candidate {
        const char* name;
        std::uint32_t needed;
    };
    const Candidate cands[] = {
        {"spadd", std::uint32_t{1} << (a.data_addr_bits - 3)},
        {"memory-operand instruction (idxsp, idxxch, cmpxchg, ...)", a.data_space()},
        {"coreid", 1},
        {"da", 1},
    };
    for (const auto& c : cands) {
        bool fits = false;
        for (const auto& g : r.gaps)
            if (detail::aligned_slot(g, c.needed)) {
                fits = true;
                break;
            }
        r.capacity.push_back({c.name, c.needed, fits});
    }
    return r;
}

namespace detail {

inline std::uint32_t deposit(std::uint32_t value, std::uint32_t mask) {
    std::uint32_t out = 0;
    for (std::uint32_t bit = 1; mask; bit <<= 1) {
        std::uint32_t low = mask & (~mask + 1);
        if (value & bit) out |= low;
        mask &= mask - 1;
    }
    return out;
}

inline std::uint32_t extract(std::uint32_t word, std::uint32_t mask) {
    std::uint32_t out = 0;
    for (std::uint32_t bit = 1; mask; bit <<= 1) {
        std::uint32_t low = mask & (~mask + 1);
        if (word & low) out |= bit;
        mask &= mask - 1;
    }
    return out;
}

inline std::int32_t sign_extend(std::uint32_t v, unsigned bits) {
    std::uint32_t sign = std::uint32_t{1} << (bits - 1);
    return static_cast<std::int32_t>((v ^ sign)) - static_cast<std::int32_t>(sign);
}

[[noreturn]] inline void out_of_range(const std::string& what) {
    throw Error(ErrorKind::OperandOutOfRange, what);
}

inline std::uint32_t encode_field(const OpcodeMap& m, Op op, const Instruction& in) {
    const auto& a = m.arch();
    const auto& inf = info(op);
    std::uint32_t f = 0;
    for (std::size_t i = 0; i < inf.nslots; ++i) {
        const Slot s = inf.slots[i];
        const Operand& o = in.operands[i];
        auto need = [&](OperandKind k) {
            if (o.kind != k)
                out_of_range(std::string(inf.form) + ": operand " + std::to_string(i + 1) +
                             " has the wrong kind");
        };
        auto bounded = [&](std::int64_t v, std::int64_t lo, std::int64_t hi, const char* what) {
            if (v < lo || v > hi)
                out_of_range(std::string(inf.form) + ": " + what + " " + hex(v) + " outside " +
                             hex(lo) + ".." + hex(hi));
        };
        switch (s) {
        case Slot::Acc: need(OperandKind::Acc); break;
        case Slot::Mem: {
            const unsigned d = a.data_addr_bits;
            if (o.kind == OperandKind::SpRel) {
                if (!m.extensions().sprel)
                    out_of_range("stack-relative operand requires the sprel extension");
                auto [lo, hi] = m.sp_offset_range();
                bounded(o.value, lo, hi, "stack offset");
                f = (3u << (d - 2)) | (static_cast<std::uint32_t>(o.value) & ((1u << (d - 2)) - 1));
            } else {
                need(OperandKind::DataMem);
                bounded(o.value, 0, a.data_space() - 1, "data address");
                if (!m.direct_address_ok(o.value))
                    out_of_range("data address " + hex(o.value) +
                                 " lies in the stack-relative quarter of the address space");
                f = static_cast<std::uint32_t>(o.value);
            }
            break;
        }
        case Slot::BitMem:
            need(OperandKind::BitRef);
            if (o.value >= (1 << a.bit_addr_bits()) && o.value < static_cast<int>(a.data_space()))
                out_of_range("bit instructions can only access the lower half of data memory (" +
                             hex(o.value) + " >= " + hex(1 << a.bit_addr_bits()) + ")");
            bounded(o.value, 0, (1 << a.bit_addr_bits()) - 1, "bit address");
            bounded(o.bit, 0, 7, "bit index");
            f = (static_cast<std::uint32_t>(o.bit) << a.bit_addr_bits()) | static_cast<std::uint32_t>(o.value);
            break;
        case Slot::Io:
            need(OperandKind::IoMem);
            bounded(o.value, 0, a.io_space() - 1, "I/O address");
            f = static_cast<std::uint32_t>(o.value);
            break;
        case Slot::BitIo:
            need(OperandKind::IoBitRef);
            bounded(o.value, 0, a.io_space() - 1, "I/O address");
            bounded(o.bit, 0, 7, "bit index");
            f = (static_cast<std::uint32_t>(o.bit) << a.io_addr_bits) | static_cast<std::uint32_t>(o.value);
            break;
        case Slot::Imm8:
            need(OperandKind::Imm);
            bounded(o.value, -128, 255, "immediate");
            f = static_cast<std::uint32_t>(o.value) & 0xff;
            break;
        case Slot::Pair:
            need(OperandKind::DataMemPair);
            bounded(o.value, 0, a.data_space() - 2, "pair address");
            if (o.value & 1) out_of_range("pair address " + hex(o.value) + " is not 16-bit aligned");
            f = static_cast<std::uint32_t>(o.value) >> 1;
            break;
        case Slot::Prog:
            need(OperandKind::ProgAddr);
            bounded(o.value, 0, a.prog_size() - 1, "program address");
            f = static_cast<std::uint32_t>(o.value);
            break;
        case Slot::SpOff: {
            need(OperandKind::SpRel);
            auto [lo, hi] = m.sp_offset_range();
            bounded(o.value, lo, hi, "stack offset");
            f = static_cast<std::uint32_t>(o.value) & ((1u << (a.data_addr_bits - 2)) - 1);
            break;
        }
        case Slot::SpImm: {
            need(OperandKind::Imm);
            auto dom = spadd_domain(a);
            bounded(o.value, dom.front(), dom.back(), "stack adjustment");
            if (o.value & 1) out_of_range("stack adjustment must be even");
            f = static_cast<std::uint32_t>(o.value / 2) & ((1u << (a.data_addr_bits - 3)) - 1);
            break;
        }
        }
    }
    return f;
}

} // namespace detail

inline std::uint32_t encode(const Instruction& in, const OpcodeMap& m) {
    const auto* e = m.entry_for(in.op);
    if (!e)
        throw Error(ErrorKind::UnknownMnemonic, "`" + std::string(info(in.op).form) + "` is not in the " +
                                                    std::string(m.arch().id()) + " opcode map");
    return e->match | detail::deposit(detail::encode_field(m, in.op, in), e->field);
}

inline Instruction decode(std::uint32_t word, const OpcodeMap& m) {
    const auto* e = m.entry_at(word);
    if (!e) throw Error(ErrorKind::UnallocatedOpcode, "unallocated opcode " + detail::hex(word));
    const auto& a = m.arch();
    const auto& inf = info(e->op);
    const std::uint32_t f = detail::extract(word, e->field);
    Instruction in;
    in.op = e->op;
    for (std::size_t i = 0; i < inf.nslots; ++i) {
        Operand& o = in.operands[i];
        switch (inf.slots[i]) {
        case Slot::Acc: o = Operand::acc(); break;
        case Slot::Mem: {
            const unsigned d = a.data_addr_bits;
            if (m.extensions().sprel && (f >> (d - 2)) == 3)
                o = Operand::sp_rel(detail::sign_extend(f & ((1u << (d - 2)) - 1), d - 2));
            else
                o = Operand::mem(static_cast<std::int32_t>(f));
            break;
        }
        case Slot::BitMem:
            o = Operand::bit_ref(static_cast<std::int32_t>(f & ((1u << a.bit_addr_bits()) - 1)),
                                 f >> a.bit_addr_bits());
            break;
        case Slot::Io: o = Operand::io(static_cast<std::int32_t>(f)); break;
        case Slot::BitIo:
            o = Operand::io_bit(static_cast<std::int32_t>(f & ((1u << a.io_addr_bits) - 1)),
                                f >> a.io_addr_bits);
            break;
        case Slot::Imm8: o = Operand::imm(static_cast<std::int32_t>(f)); break;
        case Slot::Pair: o = Operand::pair(static_cast<std::int32_t>(f << 1)); break;
        case Slot::Prog: o = Operand::prog(static_cast<std::int32_t>(f)); break;
        case Slot::SpOff: o = Operand::sp_rel(detail::sign_extend(f, a.data_addr_bits - 2)); break;
        case Slot::SpImm: o = Operand::imm(2 * detail::sign_extend(f, a.data_addr_bits - 3)); break;
        }
    }
    return in;
}

inline std::optional<Instruction> try_decode(std::uint32_t word, const OpcodeMap& m) {
    if (!m.allocated(word)) return std::nullopt;
    return decode(word, m);
}

/// Template text: one character per bit, MSB first, separated by spaces.
/// Fixed bits are '0'/'1'; field bits use the slot letter.
inline std::string pattern_string(const MapEntry& e, const ArchVariant& a) {
    char letter = 'x';
    std::string letters;
    if (auto s = detail::encoded_slot(e.op)) {
        switch (*s) {
        case Slot::Mem: letters = std::string(a.data_addr_bits, 'm'); break;
        case Slot::BitMem:
            letters = std::string(3, 'b') + std::string(a.bit_addr_bits(), 'm');
            break;
        case Slot::Io: letters = std::string(a.io_addr_bits, 'i'); break;
        case Slot::BitIo: letters = std::string(3, 'b') + std::string(a.io_addr_bits, 'i'); break;
        case Slot::Imm8: letters = std::string(8, 'k'); break;
        case Slot::Pair: letters = std::string(a.data_addr_bits - 1, 'p'); break;
        case Slot::Prog: letters = std::string(a.prog_addr_bits, 'n'); break;
        case Slot::SpOff: letters = std::string(a.data_addr_bits - 2, 'o'); break;
        case Slot::SpImm: letters = std::string(a.data_addr_bits - 3, 's'); break;
        case Slot::Acc: break;
        }
    }
    std::string out;
    std::size_t li = 0;
    for (int b = static_cast<int>(a.prog_word_width) - 1; b >= 0; --b) {
        if (!out.empty()) out += ' ';
        std::uint32_t bit = std::uint32_t{1} << b;
        if (e.field & bit)
            out += li < letters.size() ? letters[li++] : letter;
        else
            out += (e.match & bit) ? '1' : '0';
    }
    return out;
}

/// Parses a template string into (match, mask, field). The field letters
/// must form one contiguous run at the low end and agree with the form.
inline MapEntry parse_pattern(Op op, const std::string& text, const ArchVariant& a) {
    std::string bits;
    for (char c : text)
        if (c != ' ') bits += c;
    if (bits.size() != a.prog_word_width)
        throw Error(ErrorKind::MapFormat, "template `" + text + "` is not " +
                                              std::to_string(a.prog_word_width) + " bits wide");
    MapEntry e;
    e.op = op;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        std::uint32_t bit = std::uint32_t{1} << (bits.size() - 1 - i);
        char c = bits[i];
        if (c == '0' || c == '1') {
            e.mask |= bit;
            if (c == '1') e.match |= bit;
        } else {
            e.field |= bit;
        }
    }
    if (static_cast<unsigned>(std::popcount(e.field)) != detail::field_bits(op, a))
        throw Error(ErrorKind::MapFormat, "template `" + text + "` has the wrong field width for " +
                                              std::string(info(op).form));
    e.cycles = info(op).cycles;
    return e;
}

/// Process-wide cache of built maps. Maps are immutable, so sharing is safe.
inline const OpcodeMap& shared_map(const ArchVariant& a, const ExtensionSet& x,
                                   const MapOptions& opts = {}) {
    static std::mutex mu;
    static std::map<std::string, std::unique_ptr<OpcodeMap>> cache;
    std::string key = std::string(a.id()) + "/" + x.str() + (opts.allow_reclaim ? "/r" : "");
    std::lock_guard lock(mu);
    auto& slot = cache[key];
    if (!slot) slot = std::make_unique<OpcodeMap>(build_map(a, x, opts));
    return *slot;
}

} // namespace pdkkit
