#pragma once

// Architecture variants of the Padauk tiny-microcontroller family and the
// set of proposed instruction-set extensions a map can be built with.

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pdkkit/error.hpp"

namespace pdkkit {

enum class Variant : std::uint8_t { pdk13, pdk14, pdk15, pdk16 };

inline constexpr std::array<Variant, 4> all_variants{Variant::pdk13, Variant::pdk14,
                                                     Variant::pdk15, Variant::pdk16};

inline std::string_view to_string(Variant v) {
    switch (v) {
    case Variant::pdk13: return "pdk13";
    case Variant::pdk14: return "pdk14";
    case Variant::pdk15: return "pdk15";
    case Variant::pdk16: return "pdk16";
    }
    return "?";
}

inline std::optional<Variant> parse_variant(std::string_view name) {
    for (auto v : all_variants)
        if (to_string(v) == name) return v;
    return std::nullopt;
}

/// Static description of one architecture variant.
///
/// `max_hw_threads` is the largest thread count any device of the variant
/// offers; `thread_options` lists the counts that exist in silicon.
struct ArchVariant {
    Variant name;
    unsigned prog_word_width;
    unsigned prog_addr_bits;
    unsigned data_addr_bits;
    unsigned io_addr_bits;
    unsigned max_hw_threads;
    std::vector<unsigned> thread_options;
    std::set<std::string> optional_instrs;
    std::string_view internal_name; // manufacturer IDE name

    std::uint32_t word_count() const { return 1u << prog_word_width; }
    std::uint32_t prog_size() const { return 1u << prog_addr_bits; }
    std::uint32_t data_space() const { return 1u << data_addr_bits; }
    std::uint32_t io_space() const { return 1u << io_addr_bits; }

    /// Address bits usable by the direct bit set/reset/test instructions.
    /// Everything but pdk16 is limited to the lower half of data memory.
    unsigned bit_addr_bits() const {
        return name == Variant::pdk16 ? data_addr_bits : data_addr_bits - 1;
    }

    /// Largest data memory actually fitted to devices of the variant.
    std::uint32_t max_data_size() const { return data_space(); }

    std::string_view id() const { return to_string(name); }
};

inline ArchVariant variant_spec(Variant v) {
    switch (v) {
    case Variant::pdk13: return {v, 13, 10, 6, 5, 1, {1}, {}, "SYM_84B"};
    case Variant::pdk14: return {v, 14, 11, 7, 6, 2, {1, 2}, {"mul"}, "SYM_85A"};
    case Variant::pdk15: return {v, 15, 12, 8, 7, 1, {1}, {"mul"}, "SYM_86B"};
    // I/O address bits are 6 on pdk16 even though pdk15 has 7.
    case Variant::pdk16: return {v, 16, 13, 9, 6, 8, {2, 4, 8}, {"mul", "pushw", "igoto", "icall"}, "SYM_83A"};
    }
    throw Error(ErrorKind::NotAVariant, "unknown variant");
}

inline ArchVariant variant_spec(std::string_view name) {
    auto v = parse_variant(name);
    if (!v) throw Error(ErrorKind::NotAVariant, "not an architecture variant: " + std::string(name));
    return variant_spec(*v);
}

/// Toggles for the proposed instruction-set extensions.
struct ExtensionSet {
    bool spadd = false;
    bool idxsp = false;
    bool sprel = false;
    bool idxxch = false;
    bool cmpxchg_dir = false;
    bool cmpxchg_ind = false;
    bool coreid = false;
    bool atomic_rmw_ind = false;
    bool pushw = false;
    bool igoto_icall = false;
    bool da = false;
    bool gint_io = false;

    bool operator==(const ExtensionSet&) const = default;

    bool any_stack() const { return spadd || idxsp || sprel; }
    bool none() const { return *this == ExtensionSet{}; }

    static const std::vector<std::string>& names() {
        static const std::vector<std::string> n{"spadd",  "idxsp",          "sprel", "idxxch",
                                                "cmpxchg_dir", "cmpxchg_ind", "coreid",
                                                "atomic_rmw_ind", "pushw", "igoto_icall", "da",
                                                "gint_io"};
        return n;
    }

    bool* flag(std::string_view n) {
        if (n == "spadd") return &spadd;
        if (n == "idxsp") return &idxsp;
        if (n == "sprel") return &sprel;
        if (n == "idxxch") return &idxxch;
        if (n == "cmpxchg_dir") return &cmpxchg_dir;
        if (n == "cmpxchg_ind") return &cmpxchg_ind;
        if (n == "coreid") return &coreid;
        if (n == "atomic_rmw_ind") return &atomic_rmw_ind;
        if (n == "pushw") return &pushw;
        if (n == "igoto_icall") return &igoto_icall;
        if (n == "da") return &da;
        if (n == "gint_io") return &gint_io;
        return nullptr;
    }

    bool get(std::string_view n) const { return *const_cast<ExtensionSet*>(this)->flag(n); }

    std::vector<std::string> enabled() const {
        std::vector<std::string> out;
        for (const auto& n : names())
            if (get(n)) out.push_back(n);
        return out;
    }

    /// Canonical textual form: enabled names joined by '+', or "none".
    std::string str() const {
        auto e = enabled();
        if (e.empty()) return "none";
        std::string s;
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (i) s += '+';
            s += e[i];
        }
        return s;
    }

    /// Accepts names separated by ',', '+' or whitespace; "none" and "" are empty.
    static ExtensionSet parse(std::string_view text) {
        ExtensionSet set;
        std::string cur;
        auto flush = [&] {
            if (cur.empty() || cur == "none" || cur == "-") {
                cur.clear();
                return;
            }
            bool* f = set.flag(cur);
            if (!f) throw Error(ErrorKind::UnknownExtension, "unknown extension: " + cur);
            *f = true;
            cur.clear();
        };
        for (char c : text) {
            if (c == ',' || c == '+' || c == ' ' || c == '\t')
                flush();
            else
                cur += c;
        }
        flush();
        return set;
    }

    void validate() const {
        if (sprel && idxsp)
            throw Error(ErrorKind::InvalidExtensionSet,
                        "sprel and idxsp are mutually exclusive in one opcode map");
    }
};

} // namespace pdkkit
