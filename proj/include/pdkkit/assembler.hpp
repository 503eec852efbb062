#pragma once

// Two-pass assembler, disassembler and the .pdkimg text image format.

#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pdkkit/asm_parse.hpp"
#include "pdkkit/opcode_map.hpp"

namespace pdkkit {

/// Linked program image.
struct Image {
    Variant variant = Variant::pdk14;
    ExtensionSet extensions;
    std::map<std::uint32_t, std::uint32_t> words; // program address -> word
    std::map<std::string, std::int64_t> symbols;
    std::uint32_t entry = 0;
    std::map<std::uint32_t, std::uint8_t> data_init; // data address -> byte

    bool operator==(const Image&) const = default;

    std::optional<std::int64_t> symbol(const std::string& name) const {
        auto it = symbols.find(name);
        if (it == symbols.end()) return std::nullopt;
        return it->second;
    }
    std::int64_t at(const std::string& name) const {
        auto v = symbol(name);
        if (!v) throw Error(ErrorKind::UndefinedSymbol, "image has no symbol `" + name + "`");
        return *v;
    }
};

struct AssembleOptions {
    /// Used when the source has no .arch (default pdk14); an explicit .arch must agree.
    std::optional<Variant> arch;
    /// Used when the source has no .ext; an explicit .ext must agree.
    std::optional<ExtensionSet> extensions;
    MapOptions map_options;
    /// Alternate opcode map; overrides the built-in one when its variant and
    /// extension set match the unit's.
    const OpcodeMap* map = nullptr;
};

/// I/O register names known to every unit.
inline const std::map<std::string, std::int64_t>& builtin_io_names() {
    static const std::map<std::string, std::int64_t> m{
        {"sp", 0}, {"flags", 1}, {"gintctl", 2}, {"occ", 3}, {"mulop", 4}, {"mulrh", 5}};
    return m;
}

/// One `ret k` word per byte.
inline std::vector<std::uint32_t> emit_rodata(const std::vector<std::uint8_t>& bytes, const OpcodeMap& m) {
    std::vector<std::uint32_t> out;
    out.reserve(bytes.size());
    for (auto b : bytes) out.push_back(encode(make(Op::RetK, Operand::imm(b)), m));
    return out;
}

namespace detail {

inline std::vector<std::uint8_t> unescape_string(const std::string& s, int line) {
    std::vector<std::uint8_t> out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        char c = s[i];
        if (c != '\\') {
            out.push_back(static_cast<std::uint8_t>(c));
            continue;
        }
        if (++i + 1 > s.size() - 1) throw SourceError(ErrorKind::SyntaxError, line, "bad escape");
        switch (s[i]) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case '0': out.push_back(0); break;
        case '\\': out.push_back('\\'); break;
        case '"': out.push_back('"'); break;
        case 'x': {
            if (i + 2 >= s.size()) throw SourceError(ErrorKind::SyntaxError, line, "bad \\x escape");
            out.push_back(static_cast<std::uint8_t>(std::stoi(s.substr(i + 1, 2), nullptr, 16)));
            i += 2;
            break;
        }
        default: throw SourceError(ErrorKind::SyntaxError, line, std::string("unknown escape \\") + s[i]);
        }
    }
    return out;
}

class Assembler {
public:
    Assembler(const AssembleOptions& o) : opts_(o) {
        for (const auto& [k, v] : builtin_io_names()) io_names_[k] = v;
    }

    Image run(const AssemblyUnit& u) {
        pass(u, false);
        pass(u, true);
        img_.variant = variant_.value_or(opts_.arch.value_or(Variant::pdk14));
        img_.extensions = exts_;
        img_.symbols = symbols_;
        if (auto e = symbols_.find("__entry"); e != symbols_.end())
            img_.entry = static_cast<std::uint32_t>(e->second);
        return std::move(img_);
    }

private:
    [[noreturn]] static void fail(ErrorKind k, int line, const std::string& r) { throw SourceError(k, line, r); }

    std::int64_t eval(const std::string& e, int line, bool final) {
        SymbolLookup lookup = [&](std::string_view n) -> std::optional<std::int64_t> {
            if (auto it = symbols_.find(std::string(n)); it != symbols_.end()) return it->second;
            if (auto it = io_names_.find(std::string(n)); it != io_names_.end()) return it->second;
            if (!final) return 0;
            return std::nullopt;
        };
        try {
            return eval_expr(e, lookup);
        } catch (const ExprError& x) {
            fail(x.undefined.empty() ? ErrorKind::SyntaxError : ErrorKind::UndefinedSymbol, line, x.reason);
        }
    }

    void define(const std::string& name, std::int64_t v, int line, bool second) {
        if (second) return;
        if (symbols_.count(name)) fail(ErrorKind::DuplicateSymbol, line, "duplicate symbol `" + name + "`");
        symbols_[name] = v;
    }

    const OpcodeMap& map(int line) {
        if (!variant_) variant_ = opts_.arch.value_or(Variant::pdk14);
        if (opts_.map && opts_.map->arch().name == *variant_ && opts_.map->extensions() == exts_)
            return *opts_.map;
        try {
            return shared_map(variant_spec(*variant_), exts_, opts_.map_options);
        } catch (const Error& e) {
            fail(e.kind(), line, e.what());
        }
    }

    ArchVariant arch(int) {
        if (!variant_) variant_ = opts_.arch.value_or(Variant::pdk14);
        return variant_spec(*variant_);
    }

    void put_word(std::uint32_t w, int line, bool second) {
        const auto a = arch(line);
        if (pc_ >= a.prog_size())
            fail(ErrorKind::ProgramMemoryOverflow, line,
                 "program memory overflow at " + hex(pc_) + " (" + std::to_string(a.prog_size()) +
                     " words on " + std::string(a.id()) + ")");
        if (second) {
            if (img_.words.count(pc_)) fail(ErrorKind::SyntaxError, line, "code overlaps at " + hex(pc_));
            img_.words[pc_] = w;
        }
        ++pc_;
    }

    std::vector<std::uint8_t> bytes_of(const std::vector<std::string>& args, std::size_t from, int line,
                                       bool final) {
        std::vector<std::uint8_t> out;
        for (std::size_t i = from; i < args.size(); ++i) {
            const auto& a = args[i];
            if (a.front() == '"') {
                if (a.size() < 2 || a.back() != '"') fail(ErrorKind::SyntaxError, line, "bad string");
                auto s = unescape_string(a, line);
                out.insert(out.end(), s.begin(), s.end());
                continue;
            }
            auto v = eval(a, line, final);
            if (final && (v < -128 || v > 255))
                fail(ErrorKind::OperandOutOfRange, line, "byte value " + std::to_string(v) + " out of range");
            out.push_back(static_cast<std::uint8_t>(v));
        }
        return out;
    }

    void directive(const AsmItem& it, bool second) {
        const auto& a = it.args;
        auto need = [&](std::size_t n) {
            if (a.size() < n) fail(ErrorKind::SyntaxError, it.line, it.name + " needs " + std::to_string(n) + " argument(s)");
        };
        if (it.name == ".arch") {
            need(1);
            auto v = parse_variant(lower(a[0]));
            if (!v) fail(ErrorKind::NotAVariant, it.line, "not an architecture variant: " + a[0]);
            if (opts_.arch && *opts_.arch != *v)
                fail(ErrorKind::ImageVariantMismatch, it.line, ".arch " + a[0] + " conflicts with requested " + std::string(to_string(*opts_.arch)));
            if (emitted_ && variant_ != v) fail(ErrorKind::SyntaxError, it.line, ".arch after instructions");
            variant_ = v;
        } else if (it.name == ".ext") {
            std::string joined;
            for (const auto& s : a) joined += s + ",";
            ExtensionSet x;
            try {
                x = ExtensionSet::parse(joined);
                x.validate();
            } catch (const Error& e) {
                fail(e.kind(), it.line, e.what());
            }
            if (opts_.extensions && !(*opts_.extensions == x))
                fail(ErrorKind::InvalidExtensionSet, it.line, ".ext conflicts with requested extensions");
            if (emitted_ && !(exts_ == x)) fail(ErrorKind::SyntaxError, it.line, ".ext after instructions");
            exts_ = x;
        } else if (it.name == ".org") {
            need(1);
            auto v = eval(a[0], it.line, true);
            if (v < 0) fail(ErrorKind::OperandOutOfRange, it.line, "negative .org");
            pc_ = static_cast<std::uint32_t>(v);
        } else if (it.name == ".equ" || it.name == ".ioequ") {
            need(2);
            if (!ident_start(a[0][0])) fail(ErrorKind::SyntaxError, it.line, "bad symbol name");
            if (second) return;
            auto v = eval(a[1], it.line, true);
            if (it.name == ".equ") define(a[0], v, it.line, false);
            else io_names_[a[0]] = v;
        } else if (it.name == ".data") {
            need(2);
            auto base = eval(a[0], it.line, true);
            auto bytes = bytes_of(a, 1, it.line, second);
            if (second)
                for (std::size_t i = 0; i < bytes.size(); ++i)
                    img_.data_init[static_cast<std::uint32_t>(base + static_cast<std::int64_t>(i))] = bytes[i];
        } else if (it.name == ".byte" || it.name == ".word") {
            need(1);
            const auto ar = arch(it.line);
            for (const auto& s : a) {
                auto v = eval(s, it.line, second);
                auto lim = it.name == ".byte" ? 0xffu : ar.word_count() - 1;
                if (second && (v < 0 || v > static_cast<std::int64_t>(lim)))
                    fail(ErrorKind::OperandOutOfRange, it.line, it.name + " value " + hex(v) + " out of range");
                put_word(static_cast<std::uint32_t>(v), it.line, second);
            }
            emitted_ = true;
        } else if (it.name == ".rodata") {
            need(1);
            auto bytes = bytes_of(a, 0, it.line, second);
            std::vector<std::uint32_t> words(bytes.size(), 0);
            if (second) words = emit_rodata(bytes, map(it.line));
            for (auto w : words) put_word(w, it.line, second);
            emitted_ = true;
        } else if (it.name == ".entry") {
            need(1);
            if (!second) return;
            define("__entry", eval(a[0], it.line, true), it.line, false);
        }
    }

    std::optional<std::int64_t> io_name(const OperandSyntax& o) {
        auto it = io_names_.find(trim(o.expr));
        if (it == io_names_.end()) return std::nullopt;
        return it->second;
    }

    bool shape_fits(Slot s, const OperandSyntax& o, const OpcodeMap& m) {
        switch (s) {
        case Slot::Acc: return o.shape == OperandShape::Acc;
        case Slot::Mem:
            return (o.shape == OperandShape::Plain && !io_name(o)) ||
                   (o.shape == OperandShape::SpRel && m.extensions().sprel);
        case Slot::BitMem: return o.shape == OperandShape::Bit && !io_name(o);
        case Slot::Io: return o.shape == OperandShape::Io || (o.shape == OperandShape::Plain && io_name(o));
        case Slot::BitIo: return o.shape == OperandShape::IoBit || (o.shape == OperandShape::Bit && io_name(o));
        case Slot::Imm8:
        case Slot::SpImm: return o.shape == OperandShape::Imm;
        case Slot::Pair:
        case Slot::Prog: return o.shape == OperandShape::Plain && !io_name(o);
        case Slot::SpOff: return o.shape == OperandShape::SpRel;
        }
        return false;
    }

    Operand build_operand(Slot s, const OperandSyntax& o, int line) {
        auto v = [&] { return static_cast<std::int32_t>(eval(o.expr, line, true)); };
        auto b = [&] {
            auto x = eval(o.bit, line, true);
            if (x < 0 || x > 7) fail(ErrorKind::OperandOutOfRange, line, "bit index " + std::to_string(x) + " outside 0..7");
            return static_cast<unsigned>(x);
        };
        switch (s) {
        case Slot::Acc: return Operand::acc();
        case Slot::Mem: return o.shape == OperandShape::SpRel ? Operand::sp_rel(v()) : Operand::mem(v());
        case Slot::BitMem: return Operand::bit_ref(v(), b());
        case Slot::Io: return Operand::io(v());
        case Slot::BitIo: return Operand::io_bit(v(), b());
        case Slot::Imm8:
        case Slot::SpImm: return Operand::imm(v());
        case Slot::Pair: return Operand::pair(v());
        case Slot::Prog: return Operand::prog(v());
        case Slot::SpOff: return Operand::sp_rel(v());
        }
        return {};
    }

    void instruction(const AsmItem& it, bool second) {
        emitted_ = true;
        if (!second) {
            put_word(0, it.line, false);
            return;
        }
        const auto& m = map(it.line);
        std::optional<Op> chosen;
        bool mnemonic_known = false, missing_in_map = false;
        for (std::size_t i = 0; i < op_count && !chosen; ++i) {
            auto op = static_cast<Op>(i);
            const auto& inf = info(op);
            if (inf.mnemonic != it.name) continue;
            mnemonic_known = true;
            if (inf.nslots != it.operands.size()) continue;
            bool ok = true;
            for (std::size_t k = 0; k < inf.nslots && ok; ++k) ok = shape_fits(inf.slots[k], it.operands[k], m);
            if (!ok) continue;
            if (!m.has(op)) {
                missing_in_map = true;
                continue;
            }
            chosen = op;
        }
        if (!chosen) {
            if (!mnemonic_known) fail(ErrorKind::UnknownMnemonic, it.line, "unknown mnemonic `" + it.name + "`");
            if (missing_in_map)
                fail(ErrorKind::UnknownMnemonic, it.line,
                     "`" + it.name + "` with these operands is not available on " + std::string(m.arch().id()) +
                         " (extensions: " + m.extensions().str() + ")");
            fail(ErrorKind::SyntaxError, it.line, "invalid operands for `" + it.name + "`");
        }
        Instruction in;
        in.op = *chosen;
        for (std::size_t k = 0; k < info(*chosen).nslots; ++k)
            in.operands[k] = build_operand(info(*chosen).slots[k], it.operands[k], it.line);
        std::uint32_t w = 0;
        try {
            w = encode(in, m);
        } catch (const Error& e) {
            fail(e.kind(), it.line, e.what());
        }
        put_word(w, it.line, true);
    }

    void pass(const AssemblyUnit& u, bool second) {
        pc_ = 0;
        emitted_ = false;
        if (second) {
            // .arch/.ext state is rebuilt in order on each pass
            variant_.reset();
            exts_ = opts_.extensions.value_or(ExtensionSet{});
        } else {
            exts_ = opts_.extensions.value_or(ExtensionSet{});
        }
        for (const auto& it : u.items) {
            switch (it.kind) {
            case AsmItem::Kind::Label: define(it.name, pc_, it.line, second); break;
            case AsmItem::Kind::Directive: directive(it, second); break;
            case AsmItem::Kind::Instruction: instruction(it, second); break;
            }
        }
    }

    AssembleOptions opts_;
    std::optional<Variant> variant_;
    ExtensionSet exts_;
    std::uint32_t pc_ = 0;
    bool emitted_ = false;
    std::map<std::string, std::int64_t> symbols_;
    std::map<std::string, std::int64_t> io_names_;
    Image img_;
};

} // namespace detail

inline Image assemble(const AssemblyUnit& u, const AssembleOptions& opts = {}) {
    return detail::Assembler(opts).run(u);
}

inline Image assemble(std::string_view text, const AssembleOptions& opts = {}) {
    return assemble(parse(text), opts);
}

/// Disassembly that reassembles to the same word map. Unallocated words
/// become `.word` literals.
inline std::string disassemble(const Image& img, const OpcodeMap* override_map = nullptr) {
    const OpcodeMap& m = override_map ? *override_map : shared_map(variant_spec(img.variant), img.extensions);
    std::ostringstream os;
    os << ".arch " << to_string(img.variant) << "\n";
    if (!img.extensions.none()) os << ".ext " << img.extensions.str() << "\n";
    // symbols come back as .equ so that reassembly keeps them; code
    // addresses that match one get a comment
    std::map<std::uint32_t, std::string> labels;
    for (const auto& [name, v] : img.symbols) {
        if (name == "__entry") continue;
        os << ".equ " << name << ", " << detail::hex(v) << "\n";
        if (v >= 0 && img.words.count(static_cast<std::uint32_t>(v)))
            labels.emplace(static_cast<std::uint32_t>(v), name);
    }
    std::optional<std::uint32_t> next;
    for (const auto& [addr, w] : img.words) {
        if (!next || *next != addr) os << ".org " << detail::hex(addr) << "\n";
        if (auto l = labels.find(addr); l != labels.end()) os << "; " << l->second << "\n";
        char loc[16];
        std::snprintf(loc, sizeof loc, "%04x", addr);
        std::string text = "    ";
        if (auto in = try_decode(w, m))
            text += to_string(*in);
        else
            text += ".word " + detail::hex(w);
        if (text.size() < 28) text.resize(28, ' ');
        os << text << " ; " << loc << "\n";
        next = addr + 1;
    }
    for (const auto& [addr, b] : img.data_init) os << ".data " << detail::hex(addr) << ", " << detail::hex(b) << "\n";
    if (img.symbols.count("__entry")) os << ".entry " << detail::hex(img.entry) << "\n";
    return os.str();
}

inline std::string write_image(const Image& img) {
    std::ostringstream os;
    os << "PDKIMG 1 " << to_string(img.variant) << " " << (img.extensions.none() ? "-" : img.extensions.str()) << "\n";
    char buf[64];
    for (const auto& [a, w] : img.words) {
        std::snprintf(buf, sizeof buf, "%04x: %04x\n", a, w);
        os << buf;
    }
    for (const auto& [a, b] : img.data_init) {
        std::snprintf(buf, sizeof buf, "DATA %04x: %02x\n", a, b);
        os << buf;
    }
    for (const auto& [n, v] : img.symbols) {
        if (v < 0) std::snprintf(buf, sizeof buf, "-%04llx", static_cast<unsigned long long>(-v));
        else std::snprintf(buf, sizeof buf, "%04llx", static_cast<unsigned long long>(v));
        os << "SYM " << n << " " << buf << "\n";
    }
    return os.str();
}

inline Image read_image(std::string_view text) {
    Image img;
    std::istringstream is{std::string(text)};
    std::string line;
    int n = 0;
    auto bad = [&](const std::string& why) -> Error {
        return Error(ErrorKind::ImageFormat, "image line " + std::to_string(n) + ": " + why);
    };
    auto hexval = [&](const std::string& s) -> std::int64_t {
        std::size_t used = 0;
        std::int64_t v = 0;
        try {
            v = std::stoll(s, &used, 16);
        } catch (...) {
            throw bad("bad hex `" + s + "`");
        }
        if (used != s.size()) throw bad("bad hex `" + s + "`");
        return v;
    };
    bool header = false;
    while (std::getline(is, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string a, b, c, d;
        ls >> a >> b >> c >> d;
        if (!header) {
            if (a != "PDKIMG" || b != "1" || c.empty()) throw bad("missing `PDKIMG 1 <variant> <exts>` header");
            auto v = parse_variant(c);
            if (!v) throw bad("unknown variant " + c);
            img.variant = *v;
            try {
                img.extensions = ExtensionSet::parse(d);
            } catch (const Error& e) {
                throw bad(e.what());
            }
            header = true;
            continue;
        }
        if (a == "SYM") {
            if (b.empty() || c.empty()) throw bad("malformed SYM");
            img.symbols[b] = hexval(c);
        } else if (a == "DATA") {
            if (b.size() < 2 || b.back() != ':' || c.empty()) throw bad("malformed DATA");
            auto v = hexval(c);
            if (v < 0 || v > 255) throw bad("DATA byte out of range");
            img.data_init[static_cast<std::uint32_t>(hexval(b.substr(0, b.size() - 1)))] = static_cast<std::uint8_t>(v);
        } else {
            if (a.size() < 2 || a.back() != ':' || b.empty()) throw bad("expected `addr: word`");
            auto arch = variant_spec(img.variant);
            auto addr = hexval(a.substr(0, a.size() - 1));
            auto w = hexval(b);
            if (addr < 0 || addr >= arch.prog_size()) throw bad("address out of range");
            if (w < 0 || w >= arch.word_count()) throw bad("word out of range");
            img.words[static_cast<std::uint32_t>(addr)] = static_cast<std::uint32_t>(w);
        }
    }
    if (!header) throw Error(ErrorKind::ImageFormat, "empty image file");
    if (auto e = img.symbols.find("__entry"); e != img.symbols.end()) img.entry = static_cast<std::uint32_t>(e->second);
    return img;
}

} // namespace pdkkit
