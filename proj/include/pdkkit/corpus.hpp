#pragma once

// Code-size corpus: .pdkasm templates expanded under a locals convention and
// an extension set, then assembled and measured.
//
// Template lines starting with '@' are expanded; everything else is copied.
//
//   @func NAME NARGS NLOCALS   function entry (label + prologue)
//   @ret                       epilogue + return; value stays in a
//   @ld SLOT / @st SLOT        a := slot / slot := a      (SLOT: lN or aN)
//   @op MNEM SLOT              a := a MNEM slot  (add addc sub subc and or xor)
//   @args NAME                 open an outgoing argument block for NAME (clobbers a)
//   @starg I                   outgoing argument I := a
//   @call NAME                 call and drop the argument block; a survives
//   @expect ADDR VALUE         result check, ignored by expansion
//
// Reentrant frames sit on the upward-growing stack. Seen from inside a
// callee, with Lp and Ap the even-padded local and argument sizes:
//   local j at sp - Lp + j,  return address at sp - Lp - 2,  arg i at sp - Lp - 2 - Ap + i.
// Static frames are fixed blocks from 0x10 upward, arguments first.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pdkkit/lowering.hpp"

namespace pdkkit {

enum class Reentrancy { static_locals, all_reentrant };

inline const char* to_string(Reentrancy r) { return r == Reentrancy::static_locals ? "static_locals" : "all_reentrant"; }

inline Reentrancy parse_reentrancy(std::string_view s) {
    if (s == "static_locals") return Reentrancy::static_locals;
    if (s == "all_reentrant") return Reentrancy::all_reentrant;
    throw Error(ErrorKind::UnsupportedCombination, "unknown reentrancy mode: " + std::string(s));
}

struct CorpusConfig {
    Variant variant = Variant::pdk14;
    ExtensionSet extensions;
    Reentrancy mode = Reentrancy::static_locals;
};

struct CorpusProgram {
    std::string name;
    std::string text;
    std::vector<std::pair<std::uint32_t, std::uint8_t>> expect;
};

namespace corpus_layout {
inline constexpr std::uint32_t static_base = 0x10;
inline constexpr std::uint32_t stack_base = 0x10; // reentrant mode
} // namespace corpus_layout

namespace detail {

struct FuncInfo {
    int nargs = 0, nlocals = 0;
    int ap = 0, lp = 0;
    std::uint32_t base = 0; // static block
};

inline int even_up(int n) { return (n + 1) & ~1; }

inline std::vector<std::string> words_of(const std::string& line) {
    std::istringstream in(line.substr(0, line.find(';')));
    std::vector<std::string> w;
    for (std::string t; in >> t;) w.push_back(t);
    return w;
}

class Expander {
public:
    Expander(const CorpusConfig& c, const std::string& prog) : c_(c), prog_(prog) {
        arch_ = variant_spec(c.variant);
        map_ = &shared_map(arch_, c.extensions);
        range_ = map_->sp_offset_range();
        if (c.extensions.spadd) spadd_ = spadd_domain(arch_);
    }

    std::string run(const std::string& text) {
        std::istringstream in(text);
        std::vector<std::string> lines;
        for (std::string l; std::getline(in, l);) lines.push_back(l);
        collect(lines);

        out_ = detail::header(c_.variant, c_.extensions);
        std::uint32_t sp0 = c_.mode == Reentrancy::all_reentrant ? corpus_layout::stack_base
                                                                 : arch_.data_space() - 16;
        out_ += ".equ __core0_sp, " + hex(sp0) + "\n.entry main\n";
        for (std::size_t i = 0; i < lines.size(); ++i) {
            line_ = static_cast<int>(i + 1);
            auto w = words_of(lines[i]);
            if (w.empty() || w[0][0] != '@') {
                out_ += lines[i] + "\n";
                continue;
            }
            expand(w);
        }
        return out_;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw SourceError(ErrorKind::SyntaxError, line_, prog_ + ": " + msg);
    }

    void collect(const std::vector<std::string>& lines) {
        std::uint32_t next = corpus_layout::static_base;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            line_ = static_cast<int>(i + 1);
            auto w = words_of(lines[i]);
            if (w.empty() || w[0] != "@func") continue;
            if (w.size() != 4) fail("@func NAME NARGS NLOCALS");
            FuncInfo f;
            f.nargs = std::stoi(w[2]);
            f.nlocals = std::stoi(w[3]);
            f.ap = even_up(f.nargs);
            f.lp = even_up(f.nlocals);
            f.base = next;
            next += static_cast<std::uint32_t>(f.nargs + f.nlocals);
            funcs_[w[1]] = f;
        }
        // direct addressing must stay out of the sp-relative quarter
        std::uint32_t limit = arch_.data_space() - 16;
        if (c_.extensions.sprel) limit = std::min(limit, 3 * arch_.data_space() / 4);
        if (c_.mode == Reentrancy::static_locals && next > limit)
            fail("static frames end at " + hex(next) + ", past " + hex(limit));
    }

    const FuncInfo& func(const std::string& n) const {
        auto it = funcs_.find(n);
        if (it == funcs_.end()) fail("unknown function " + n);
        return it->second;
    }

    void ins(const std::string& s) { out_ += "    " + s + "\n"; }

    bool reentrant() const { return c_.mode == Reentrancy::all_reentrant; }

    /// Offset of a slot relative to the current sp, or its static address.
    int slot(const std::string& s) const {
        if (!cur_) fail("slot outside a function");
        if (s.size() < 2 || (s[0] != 'l' && s[0] != 'a')) fail("bad slot " + s);
        int n = std::stoi(s.substr(1));
        bool local = s[0] == 'l';
        if (n < 0 || n >= (local ? cur_->nlocals : cur_->nargs)) fail("slot " + s + " out of range");
        if (!reentrant()) return static_cast<int>(cur_->base) + (local ? cur_->nargs : 0) + n;
        int off = local ? -cur_->lp + n : -cur_->lp - 2 - cur_->ap + n;
        return off - delta_;
    }

    bool in_range(int off) const { return off >= range_.first && off <= range_.second; }

    std::string sp_ref(int off) const { return sprel(off); }

    void ptr_to(int off) {
        ins("mov a, sp");
        ins("add a, #" + std::to_string(off & 0xff));
        ins("mov " + hex(layout::ptr) + ", a");
    }

    static bool commutes(const std::string& m) { return m == "add" || m == "and" || m == "or" || m == "xor"; }

    /// kind: "ld", "st" or an ALU mnemonic.
    void access(const std::string& kind, int where) {
        const std::string P = hex(layout::p), PTR = hex(layout::ptr), S = hex(layout::scratch);
        if (!reentrant()) {
            if (kind == "ld") ins("mov a, " + hex(where));
            else if (kind == "st") ins("mov " + hex(where) + ", a");
            else ins(kind + " a, " + hex(where));
            return;
        }
        const auto& x = c_.extensions;
        if (x.sprel && in_range(where)) {
            if (kind == "ld") ins("mov a, " + sp_ref(where));
            else if (kind == "st") ins("mov " + sp_ref(where) + ", a");
            else ins(kind + " a, " + sp_ref(where));
            return;
        }
        if (x.idxsp && in_range(where)) {
            if (kind == "ld") ins("mov a, " + sp_ref(where));
            else if (kind == "st") ins("mov " + sp_ref(where) + ", a");
            else if (commutes(kind) || kind == "addc") {
                ins("mov " + P + ", a");
                ins("mov a, " + sp_ref(where));
                ins(kind + " a, " + P);
            } else {
                ins("mov " + P + ", a");
                ins("mov a, " + sp_ref(where));
                ins(kind + " " + P + ", a");
                ins("mov a, " + P);
            }
            return;
        }
        if (kind == "ld") {
            ptr_to(where);
            ins("idxm a, " + PTR);
        } else if (kind == "st") {
            ins("mov " + P + ", a");
            ptr_to(where);
            ins("mov a, " + P);
            ins("idxm " + PTR + ", a");
        } else if (commutes(kind)) {
            ins("mov " + P + ", a");
            ptr_to(where);
            ins("idxm a, " + PTR);
            ins(kind + " a, " + P);
        } else {
            // carry and operand order both matter: park a and flags on the stack
            ins("pushaf");
            ptr_to(where - 2);
            ins("idxm a, " + PTR);
            ins("mov " + S + ", a");
            ins("popaf");
            ins(kind + " a, " + S);
        }
    }

    void adjust(int k, bool keep_a) {
        if (k == 0) return;
        if (c_.extensions.spadd) {
            int step = k > 0 ? spadd_.back() : spadd_.front();
            int n = (std::abs(k) + std::abs(step) - 1) / std::abs(step);
            if (n <= 2) {
                for (int left = k; left != 0;) {
                    int s = k > 0 ? std::min(left, step) : std::max(left, step);
                    ins("spadd #" + std::to_string(s));
                    left -= s;
                }
                return;
            }
        }
        if (keep_a) ins("mov " + hex(layout::p) + ", a");
        ins("mov a, sp");
        ins("add a, #" + std::to_string(k & 0xff));
        ins("mov sp, a");
        if (keep_a) ins("mov a, " + hex(layout::p));
    }

    void expand(const std::vector<std::string>& w) {
        const auto& cmd = w[0];
        auto want = [&](std::size_t n) {
            if (w.size() != n) fail(cmd + " takes " + std::to_string(n - 1) + " operand(s)");
        };
        if (cmd == "@func") {
            cur_ = &func(w[1]);
            delta_ = 0;
            out_ += w[1] + ":\n";
            if (reentrant()) adjust(cur_->lp, false);
        } else if (cmd == "@ret") {
            want(1);
            if (reentrant()) adjust(-cur_->lp, true);
            ins("ret");
        } else if (cmd == "@ld" || cmd == "@st") {
            want(2);
            access(cmd.substr(1), slot(w[1]));
        } else if (cmd == "@op") {
            want(3);
            static const std::set<std::string> ok{"add", "addc", "sub", "subc", "and", "or", "xor"};
            if (!ok.count(w[1])) fail("@op does not take " + w[1]);
            access(w[1], slot(w[2]));
        } else if (cmd == "@args") {
            want(2);
            callee_ = &func(w[1]);
            if (reentrant()) {
                adjust(callee_->ap, false);
                delta_ += callee_->ap;
            }
        } else if (cmd == "@starg") {
            want(2);
            if (!callee_) fail("@starg without @args");
            int i = std::stoi(w[1]);
            if (i < 0 || i >= callee_->nargs) fail("argument index out of range");
            access("st", reentrant() ? -callee_->ap + i : static_cast<int>(callee_->base) + i);
        } else if (cmd == "@call") {
            want(2);
            const auto& f = func(w[1]);
            if (callee_ != &f && f.nargs) fail("@call " + w[1] + " without matching @args");
            ins("call " + w[1]);
            if (reentrant() && callee_) {
                adjust(-f.ap, true);
                delta_ -= f.ap;
            }
            callee_ = nullptr;
        } else if (cmd == "@expect") {
            // checked by the runner
        } else {
            fail("unknown template command " + cmd);
        }
    }

    CorpusConfig c_;
    std::string prog_;
    ArchVariant arch_;
    const OpcodeMap* map_ = nullptr;
    std::pair<int, int> range_;
    std::vector<int> spadd_;
    std::map<std::string, FuncInfo> funcs_;
    const FuncInfo* cur_ = nullptr;
    const FuncInfo* callee_ = nullptr;
    int delta_ = 0;
    int line_ = 0;
    std::string out_;
};

} // namespace detail

/// Expands a template into plain assembly for one configuration.
inline std::string expand_template(const CorpusProgram& p, const CorpusConfig& c) {
    return detail::Expander(c, p.name).run(p.text);
}

inline CorpusProgram make_program(std::string name, std::string text) {
    CorpusProgram p{std::move(name), std::move(text), {}};
    std::istringstream in(p.text);
    for (std::string l; std::getline(in, l);) {
        auto w = detail::words_of(l);
        if (w.size() == 3 && w[0] == "@expect")
            p.expect.emplace_back(static_cast<std::uint32_t>(std::stoul(w[1], nullptr, 0)),
                                  static_cast<std::uint8_t>(std::stoul(w[2], nullptr, 0)));
    }
    return p;
}

/// All *.pdkasm files of a directory, sorted by name.
inline std::vector<CorpusProgram> load_corpus(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw Error(ErrorKind::ImageFormat, "corpus directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".pdkasm") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<CorpusProgram> out;
    for (const auto& f : files) {
        std::ifstream in(f);
        std::stringstream ss;
        ss << in.rdbuf();
        out.push_back(make_program(f.stem().string(), ss.str()));
    }
    return out;
}

inline Image assemble_program(const CorpusProgram& p, const CorpusConfig& c) {
    return assemble(expand_template(p, c));
}

/// Runs an expanded program to completion and returns mismatching @expect
/// entries as text (empty when all hold).
inline std::vector<std::string> check_program(const CorpusProgram& p, const CorpusConfig& c) {
    auto img = assemble_program(p, c);
    auto m = load(img);
    auto r = m.run(1000000);
    std::vector<std::string> bad;
    if (r.reason != HaltReason::Halted || m.fault())
        bad.push_back(p.name + ": did not halt (" + r.detail + ")");
    for (auto [a, v] : p.expect)
        if (m.data(a) != v)
            bad.push_back(p.name + ": data[" + detail::hex(a) + "] = " + detail::hex(m.data(a)) + ", expected " +
                          detail::hex(v));
    return bad;
}

// ---------------------------------------------------------------- size comparison

struct SizeRow {
    std::string program;
    CorpusConfig config;
    std::size_t size_words = 0;
    double ratio = 1.0;
};

struct SizeComparison {
    std::vector<SizeRow> rows;

    /// Total size of all programs under (variant, exts, mode).
    std::size_t total(Variant v, const ExtensionSet& x, Reentrancy m) const {
        std::size_t t = 0;
        for (const auto& r : rows)
            if (r.config.variant == v && r.config.extensions == x && r.config.mode == m) t += r.size_words;
        return t;
    }

    /// Corpus total with no extensions, per (variant, mode); filled even
    /// when the baseline config itself was not requested.
    std::map<std::pair<Variant, Reentrancy>, std::size_t> baseline_totals;

    /// 1 - total/baseline total, baseline = same variant and mode, no extensions.
    double reduction(Variant v, const ExtensionSet& x, Reentrancy m) const {
        auto it = baseline_totals.find({v, m});
        auto base = it == baseline_totals.end() ? total(v, ExtensionSet{}, m) : it->second;
        if (base == 0) throw Error(ErrorKind::UnsupportedCombination, "no baseline rows for this variant and mode");
        return 1.0 - static_cast<double>(total(v, x, m)) / static_cast<double>(base);
    }

    std::string csv() const {
        std::ostringstream o;
        o << "program,variant,extensions,mode,size_words,ratio\n";
        char buf[32];
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof buf, "%.4f", r.ratio);
            o << r.program << ',' << to_string(r.config.variant) << ',' << r.config.extensions.str() << ','
              << to_string(r.config.mode) << ',' << r.size_words << ',' << buf << '\n';
        }
        return o.str();
    }

    nlohmann::json json() const {
        auto rows_j = nlohmann::json::array();
        for (const auto& r : rows)
            rows_j.push_back({{"program", r.program},
                              {"variant", std::string(to_string(r.config.variant))},
                              {"extensions", r.config.extensions.str()},
                              {"mode", to_string(r.config.mode)},
                              {"size_words", r.size_words},
                              {"ratio", r.ratio}});
        return {{"rows", rows_j}};
    }
};

/// Every program under every config. A config's baseline (same variant and
/// mode, no extensions) is measured even if not listed.
inline SizeComparison size_compare(const std::vector<CorpusProgram>& corpus, const std::vector<CorpusConfig>& configs) {
    SizeComparison sc;
    std::map<std::tuple<std::string, Variant, Reentrancy>, std::size_t> base;
    auto measure = [&](const CorpusProgram& p, const CorpusConfig& c) -> std::size_t {
        try {
            return assemble_program(p, c).words.size();
        } catch (const Error& e) {
            throw Error(e.kind(), p.name + " [" + std::string(to_string(c.variant)) + " " + c.extensions.str() + " " +
                                      to_string(c.mode) + "]: " + e.what());
        }
    };
    for (const auto& c : configs)
        for (const auto& p : corpus) {
            auto key = std::make_tuple(p.name, c.variant, c.mode);
            if (!base.count(key)) {
                base[key] = measure(p, {c.variant, {}, c.mode});
                sc.baseline_totals[{c.variant, c.mode}] += base[key];
            }
            SizeRow r{p.name, c, measure(p, c), 1.0};
            r.ratio = static_cast<double>(r.size_words) / static_cast<double>(base[key]);
            sc.rows.push_back(r);
        }
    return sc;
}

/// Every variant under both modes with none, spadd, sprel and spadd+sprel;
/// idxsp only where it can be placed.
inline std::vector<CorpusConfig> default_configs() {
    std::vector<CorpusConfig> out;
    std::vector<std::string> sets{"none", "spadd", "sprel", "spadd+sprel", "idxsp", "spadd+idxsp"};
    for (auto v : {Variant::pdk13, Variant::pdk14, Variant::pdk15, Variant::pdk16})
        for (auto m : {Reentrancy::static_locals, Reentrancy::all_reentrant})
            for (const auto& s : sets) {
                auto x = ExtensionSet::parse(s);
                if (x.idxsp && (v == Variant::pdk13 || v == Variant::pdk14)) continue;
                out.push_back({v, x, m});
            }
    return out;
}

/// {"configs": [{"variant": "pdk14", "extensions": "spadd+sprel", "mode": "all_reentrant"}, ...]}
inline std::vector<CorpusConfig> configs_from_json(const nlohmann::json& j) {
    std::vector<CorpusConfig> out;
    try {
        for (const auto& e : j.at("configs")) {
            CorpusConfig c;
            c.variant = variant_spec(e.at("variant").get<std::string>()).name;
            const auto& x = e.at("extensions");
            if (x.is_array()) {
                std::string s;
                for (const auto& n : x) s += n.get<std::string>() + "+";
                c.extensions = ExtensionSet::parse(s);
            } else {
                c.extensions = ExtensionSet::parse(x.get<std::string>());
            }
            c.mode = parse_reentrancy(e.at("mode").get<std::string>());
            out.push_back(c);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::MapFormat, std::string("bad configs file: ") + e.what());
    }
    return out;
}

inline nlohmann::json configs_to_json(const std::vector<CorpusConfig>& cs) {
    auto a = nlohmann::json::array();
    for (const auto& c : cs)
        a.push_back({{"variant", std::string(to_string(c.variant))},
                     {"extensions", c.extensions.str()},
                     {"mode", to_string(c.mode)}});
    return {{"configs", a}};
}

} // namespace pdkkit
