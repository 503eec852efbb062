#pragma once

// JSON documents for opcode maps and gap reports.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "pdkkit/opcode_map.hpp"

namespace pdkkit {

inline constexpr int map_format_version = 1;

inline nlohmann::json cycles_json(CycleClass c) {
    switch (c) {
    case CycleClass::One: return 1;
    case CycleClass::Two: return 2;
    case CycleClass::Skip: return "skip";
    }
    return 1;
}

inline CycleClass cycles_from_json(const nlohmann::json& j) {
    if (j == 1) return CycleClass::One;
    if (j == 2) return CycleClass::Two;
    if (j == "skip") return CycleClass::Skip;
    throw Error(ErrorKind::MapFormat, "bad cycles value " + j.dump());
}

inline nlohmann::json to_json(const OpcodeMap& m) {
    nlohmann::json j;
    j["format"] = "pdkkit-opcode-map";
    j["version"] = map_format_version;
    j["variant"] = std::string(m.arch().id());
    j["extensions"] = m.extensions().enabled();
    j["provenance"] = to_string(m.provenance());
    j["notes"] = m.notes();
    auto& entries = j["entries"] = nlohmann::json::array();
    for (const auto& e : m.entries()) {
        entries.push_back({{"form", std::string(info(e.op).form)},
                           {"mnemonic", std::string(info(e.op).mnemonic)},
                           {"pattern", pattern_string(e, m.arch())},
                           {"cycles", cycles_json(e.cycles)},
                           {"origin", e.origin}});
    }
    return j;
}

inline OpcodeMap map_from_json(const nlohmann::json& j) {
    try {
        if (j.value("format", "") != "pdkkit-opcode-map")
            throw Error(ErrorKind::MapFormat, "not an opcode map document");
        if (j.at("version").get<int>() != map_format_version)
            throw Error(ErrorKind::MapFormat, "unsupported map version");
        auto arch = variant_spec(j.at("variant").get<std::string>());
        ExtensionSet x;
        for (const auto& n : j.at("extensions")) {
            bool* f = x.flag(n.get<std::string>());
            if (!f) throw Error(ErrorKind::UnknownExtension, "unknown extension: " + n.get<std::string>());
            *f = true;
        }
        x.validate();
        std::vector<MapEntry> entries;
        for (const auto& je : j.at("entries")) {
            auto form = je.at("form").get<std::string>();
            auto op = op_from_form(form);
            if (!op) throw Error(ErrorKind::MapFormat, "unknown form `" + form + "`");
            auto e = parse_pattern(*op, je.at("pattern").get<std::string>(), arch);
            if (je.contains("cycles")) e.cycles = cycles_from_json(je["cycles"]);
            e.origin = je.value("origin", "baseline");
            entries.push_back(e);
        }
        auto prov = j.value("provenance", "") == "paper_informed_baseline"
                        ? Provenance::paper_informed_baseline
                        : Provenance::extended;
        return OpcodeMap(arch, x, std::move(entries), prov,
                         j.value("notes", std::vector<std::string>{}));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::MapFormat, std::string("malformed map document: ") + e.what());
    }
}

inline OpcodeMap load_map_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw Error(ErrorKind::MapFormat, "cannot read " + p.string());
    try {
        return map_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::MapFormat, p.string() + ": " + e.what());
    }
}

/// Looks for `<variant>.json` (baseline) or `<variant>+<ext+...>.json` in `dir`.
inline std::optional<OpcodeMap> find_map_override(const std::filesystem::path& dir, Variant v,
                                                  const ExtensionSet& x) {
    std::string stem(to_string(v));
    if (!x.none()) stem += "+" + x.str();
    auto p = dir / (stem + ".json");
    if (!std::filesystem::exists(p)) return std::nullopt;
    return load_map_file(p);
}

inline nlohmann::json to_json(const GapReport& r) {
    nlohmann::json j;
    j["variant"] = std::string(to_string(r.variant));
    j["extensions"] = r.extensions;
    j["granularity"] = "opcode word";
    j["word_count"] = r.word_count;
    j["allocated"] = r.allocated;
    j["widest"] = r.widest;
    auto& gaps = j["gaps"] = nlohmann::json::array();
    for (const auto& g : r.gaps) gaps.push_back({{"start", g.start}, {"length", g.length}});
    auto& cap = j["capacity"] = nlohmann::json::array();
    for (const auto& c : r.capacity)
        cap.push_back({{"extension", c.extension}, {"needed_width", c.needed_width}, {"fits", c.fits}});
    return j;
}

inline std::string to_text(const GapReport& r) {
    std::ostringstream os;
    os << "gap report for " << to_string(r.variant) << " (extensions: " << r.extensions << ")\n";
    os << "granularity: single opcode words; allocated " << r.allocated << " + unallocated "
       << (r.word_count - r.allocated) << " = " << r.word_count << "\n";
    os << "gaps (" << r.gaps.size() << "):";
    for (const auto& g : r.gaps) os << " " << g.length;
    os << "\n";
    for (const auto& g : r.gaps)
        os << "  " << detail::hex(g.start) << " .. " << detail::hex(g.start + g.length - 1) << "  length "
           << g.length << "\n";
    os << "widest: " << r.widest << "\n";
    for (const auto& c : r.capacity)
        os << "  " << c.extension << ": needs " << c.needed_width << ", "
           << (c.fits ? "fits" : "does not fit") << "\n";
    return os.str();
}

} // namespace pdkkit
