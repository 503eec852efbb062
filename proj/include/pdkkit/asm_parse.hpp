#pragma once

// Line-oriented parser producing an AssemblyUnit. Only syntax is checked
// here; symbols, mnemonics and operand ranges are resolved by assemble().

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "pdkkit/error.hpp"
#include "pdkkit/expr.hpp"

namespace pdkkit {

enum class OperandShape { Acc, Imm, SpRel, Io, IoBit, Bit, Plain };

struct OperandSyntax {
    OperandShape shape = OperandShape::Plain;
    std::string expr; // address, immediate or offset expression
    std::string bit;  // bit index expression for Bit/IoBit
    std::string text; // as written
};

struct AsmItem {
    enum class Kind { Label, Instruction, Directive };
    Kind kind;
    int line;
    std::string name; // label, mnemonic or directive (with leading '.')
    std::vector<OperandSyntax> operands; // instructions
    std::vector<std::string> args;       // directives, raw comma-separated
};

struct AssemblyUnit {
    std::vector<AsmItem> items;

    std::size_t instruction_count() const {
        std::size_t n = 0;
        for (const auto& i : items) n += i.kind == AsmItem::Kind::Instruction;
        return n;
    }
};

inline const std::vector<std::string_view>& known_directives() {
    static const std::vector<std::string_view> d{".arch", ".ext",  ".org",  ".equ",    ".ioequ",
                                                 ".data", ".byte", ".word", ".rodata", ".entry"};
    return d;
}

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

/// Strips a `;` comment, ignoring semicolons inside quotes.
inline std::string_view strip_comment(std::string_view line) {
    bool sq = false, dq = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '\\' && (sq || dq)) {
            ++i;
            continue;
        }
        if (c == '"' && !sq) dq = !dq;
        else if (c == '\'' && !dq) sq = !sq;
        else if (c == ';' && !sq && !dq) return line.substr(0, i);
    }
    return line;
}

/// Splits on commas outside parentheses, brackets and quotes.
inline std::vector<std::string> split_args(std::string_view s, int line) {
    std::vector<std::string> out;
    int depth = 0;
    bool dq = false, sq = false;
    std::string cur;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if ((dq || sq) && c == '\\' && i + 1 < s.size()) {
            cur += c;
            cur += s[++i];
            continue;
        }
        if (c == '"' && !sq) dq = !dq;
        else if (c == '\'' && !dq) sq = !sq;
        else if (!dq && !sq && (c == '(' || c == '[')) ++depth;
        else if (!dq && !sq && (c == ')' || c == ']')) --depth;
        if (c == ',' && depth == 0 && !dq && !sq) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (dq || sq) throw SourceError(ErrorKind::SyntaxError, line, "unterminated quote");
    if (depth != 0) throw SourceError(ErrorKind::SyntaxError, line, "unbalanced brackets");
    out.push_back(trim(cur));
    if (out.size() == 1 && out[0].empty()) out.clear();
    for (const auto& a : out)
        if (a.empty()) throw SourceError(ErrorKind::SyntaxError, line, "missing operand");
    return out;
}

inline void require_expr(const std::string& e, int line) {
    if (auto err = check_expr(e)) throw SourceError(ErrorKind::SyntaxError, line, *err);
}

/// Splits `base.bit` at the last top-level dot.
inline bool split_bit(const std::string& s, std::string& base, std::string& bit) {
    auto dot = s.rfind('.');
    if (dot == std::string::npos || dot == 0 || s.find_first_of("()", dot) != std::string::npos)
        return false;
    base = trim(std::string_view(s).substr(0, dot));
    bit = trim(std::string_view(s).substr(dot + 1));
    return !bit.empty();
}

inline OperandSyntax parse_operand(const std::string& text, int line) {
    OperandSyntax o;
    o.text = text;
    std::string t = lower(text);
    if (t == "a") {
        o.shape = OperandShape::Acc;
        return o;
    }
    if (text[0] == '#') {
        o.shape = OperandShape::Imm;
        o.expr = trim(std::string_view(text).substr(1));
        require_expr(o.expr, line);
        return o;
    }
    if (text[0] == '[') {
        if (text.back() != ']') throw SourceError(ErrorKind::SyntaxError, line, "missing `]`");
        std::string inner = trim(std::string_view(text).substr(1, text.size() - 2));
        std::string li = lower(inner);
        if (li.rfind("sp", 0) != 0 || (li.size() > 2 && ident_char(li[2])))
            throw SourceError(ErrorKind::SyntaxError, line, "expected `[sp+k]`");
        std::string rest = trim(std::string_view(inner).substr(2));
        o.shape = OperandShape::SpRel;
        if (rest.empty()) {
            o.expr = "0";
        } else if (rest[0] == '+' || rest[0] == '-') {
            std::string e = trim(std::string_view(rest).substr(1));
            require_expr(e, line);
            o.expr = rest[0] == '+' ? "(" + e + ")" : "-(" + e + ")";
        } else {
            throw SourceError(ErrorKind::SyntaxError, line, "expected `+` or `-` after sp");
        }
        return o;
    }
    if (t.rfind("io:", 0) == 0) {
        std::string rest = trim(std::string_view(text).substr(3));
        std::string base, bit;
        if (split_bit(rest, base, bit)) {
            o.shape = OperandShape::IoBit;
            o.expr = base;
            o.bit = bit;
            require_expr(o.bit, line);
        } else {
            o.shape = OperandShape::Io;
            o.expr = rest;
        }
        require_expr(o.expr, line);
        return o;
    }
    std::string base, bit;
    if (split_bit(text, base, bit)) {
        o.shape = OperandShape::Bit;
        o.expr = base;
        o.bit = bit;
        require_expr(o.expr, line);
        require_expr(o.bit, line);
        return o;
    }
    o.shape = OperandShape::Plain;
    o.expr = text;
    require_expr(o.expr, line);
    return o;
}

} // namespace detail

inline AssemblyUnit parse(std::string_view text) {
    AssemblyUnit u;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        std::string line = detail::trim(detail::strip_comment(raw));

        // leading labels
        for (;;) {
            std::size_t i = 0;
            if (line.empty() || !detail::ident_start(line[0])) break;
            while (i < line.size() && detail::ident_char(line[i])) ++i;
            std::size_t j = i;
            while (j < line.size() && (line[j] == ' ' || line[j] == '\t')) ++j;
            if (j >= line.size() || line[j] != ':' || detail::lower(line.substr(0, i)) == "io") break;
            u.items.push_back({AsmItem::Kind::Label, line_no, line.substr(0, i), {}, {}});
            line = detail::trim(std::string_view(line).substr(j + 1));
        }
        if (line.empty()) continue;

        std::size_t i = line[0] == '.' ? 1 : 0;
        while (i < line.size() && detail::ident_char(line[i])) ++i;
        std::string head = detail::lower(line.substr(0, i));
        std::string rest = detail::trim(std::string_view(line).substr(i));
        if (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])))
            throw SourceError(ErrorKind::SyntaxError, line_no, "malformed statement `" + line + "`");

        if (head[0] == '.') {
            if (std::find(known_directives().begin(), known_directives().end(), head) ==
                known_directives().end())
                throw SourceError(ErrorKind::SyntaxError, line_no, "unknown directive " + head);
            AsmItem it{AsmItem::Kind::Directive, line_no, head, {}, {}};
            it.args = detail::split_args(rest, line_no);
            u.items.push_back(std::move(it));
            continue;
        }
        if (head.empty() || !detail::ident_start(head[0]))
            throw SourceError(ErrorKind::SyntaxError, line_no, "expected a mnemonic");
        AsmItem it{AsmItem::Kind::Instruction, line_no, head, {}, {}};
        for (const auto& a : detail::split_args(rest, line_no))
            it.operands.push_back(detail::parse_operand(a, line_no));
        u.items.push_back(std::move(it));
    }
    return u;
}

} // namespace pdkkit
