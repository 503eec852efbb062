#pragma once

// Test-side reference values, computed without the library's own logic.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pdkkit/pdkkit.hpp"

namespace oracle {

struct Fig1Row {
    const char* name;
    const char* internal;
    unsigned word, prog, data, io;
    std::vector<unsigned> threads;
};

// Device family table: internal name, word width, program/data/io address
// bits, hardware thread counts.
inline const std::vector<Fig1Row>& fig1() {
    static const std::vector<Fig1Row> rows{
        {"pdk13", "SYM_84B", 13, 10, 6, 5, {1}},
        {"pdk14", "SYM_85A", 14, 11, 7, 6, {1, 2}},
        {"pdk15", "SYM_86B", 15, 12, 8, 7, {1}},
        {"pdk16", "SYM_83A", 16, 13, 9, 6, {2, 4, 8}},
    };
    return rows;
}

/// Runs of unallocated words, found by asking the decoder about every word.
inline std::vector<std::uint32_t> decoder_gaps(const pdkkit::OpcodeMap& m) {
    std::vector<std::uint32_t> runs;
    std::uint32_t cur = 0;
    const std::uint32_t n = m.arch().word_count();
    for (std::uint32_t w = 0; w < n; ++w) {
        if (!pdkkit::try_decode(w, m)) {
            ++cur;
        } else if (cur) {
            runs.push_back(cur);
            cur = 0;
        }
    }
    if (cur) runs.push_back(cur);
    std::sort(runs.rbegin(), runs.rend());
    return runs;
}

inline std::string decimal5(unsigned v) {
    char b[8];
    std::snprintf(b, sizeof b, "%05u", v);
    return b;
}

inline std::uint8_t to_bcd(unsigned v) { return static_cast<std::uint8_t>((v / 10) * 16 + v % 10); }

/// 1000 seeded random operand pairs plus the usual edges.
inline std::vector<std::pair<std::uint16_t, std::uint16_t>> add16_vectors() {
    std::vector<std::pair<std::uint16_t, std::uint16_t>> v;
    const std::uint16_t edges[] = {0, 1, 0x7f, 0x80, 0xff, 0x100, 0x7fff, 0x8000, 0xfffe, 0xffff};
    for (auto a : edges)
        for (auto b : edges) v.emplace_back(a, b);
    std::mt19937 rng(20240601);
    std::uniform_int_distribution<unsigned> d(0, 0xffff);
    for (int i = 0; i < 1000; ++i) v.emplace_back(d(rng), d(rng));
    return v;
}

/// Extension sets whose maps the toolkit builds for a variant: the baseline,
/// each extension alone, and the combinations the corpus uses. Sets that
/// cannot be placed are left out.
inline std::vector<pdkkit::ExtensionSet> shipped_sets(pdkkit::Variant v) {
    std::vector<std::string> names{"none"};
    for (const auto& n : pdkkit::ExtensionSet::names()) names.push_back(n);
    for (const char* c : {"spadd+sprel", "spadd+idxsp", "idxxch+cmpxchg_ind+coreid", "da+gint_io"}) names.push_back(c);
    std::vector<pdkkit::ExtensionSet> out;
    for (const auto& n : names) {
        auto x = pdkkit::ExtensionSet::parse(n);
        try {
            pdkkit::shared_map(pdkkit::variant_spec(v), x);
            out.push_back(x);
        } catch (const pdkkit::Error&) {
        }
    }
    return out;
}

inline const std::vector<pdkkit::Variant>& variants() {
    static const std::vector<pdkkit::Variant> v{pdkkit::Variant::pdk13, pdkkit::Variant::pdk14,
                                               pdkkit::Variant::pdk15, pdkkit::Variant::pdk16};
    return v;
}

} // namespace oracle
