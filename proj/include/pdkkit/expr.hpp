#pragma once

// Integer expressions for assembler operands and directives.

#include <cctype>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace pdkkit::detail {

struct ExprError {
    std::string reason;
    std::string undefined; // set when the failure is an unknown symbol
};

using SymbolLookup = std::function<std::optional<std::int64_t>(std::string_view)>;

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class ExprParser {
public:
    ExprParser(std::string_view text, const SymbolLookup& lookup) : s_(text), lookup_(lookup) {}

    std::int64_t parse() {
        ws();
        if (i_ >= s_.size()) fail("empty expression");
        auto v = bor();
        ws();
        if (i_ < s_.size()) fail("unexpected `" + std::string(s_.substr(i_)) + "`");
        return v;
    }

private:
    [[noreturn]] void fail(std::string r) { throw ExprError{std::move(r), {}}; }

    void ws() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }
    bool eat(std::string_view t) {
        ws();
        if (s_.substr(i_, t.size()) == t) {
            i_ += t.size();
            return true;
        }
        return false;
    }
    char peek() {
        ws();
        return i_ < s_.size() ? s_[i_] : '\0';
    }

    std::int64_t bor() {
        auto v = bxor();
        while (peek() == '|') {
            ++i_;
            v |= bxor();
        }
        return v;
    }
    std::int64_t bxor() {
        auto v = band();
        while (peek() == '^') {
            ++i_;
            v ^= band();
        }
        return v;
    }
    std::int64_t band() {
        auto v = shift();
        while (peek() == '&') {
            ++i_;
            v &= shift();
        }
        return v;
    }
    std::int64_t shift() {
        auto v = add();
        for (;;) {
            if (eat("<<")) v <<= add();
            else if (eat(">>")) v >>= add();
            else return v;
        }
    }
    std::int64_t add() {
        auto v = mul();
        for (;;) {
            char c = peek();
            if (c == '+') { ++i_; v += mul(); }
            else if (c == '-') { ++i_; v -= mul(); }
            else return v;
        }
    }
    std::int64_t mul() {
        auto v = unary();
        for (;;) {
            char c = peek();
            if (c == '*') {
                ++i_;
                v *= unary();
            } else if (c == '/' || c == '%') {
                ++i_;
                auto d = unary();
                if (d == 0) fail("division by zero");
                v = c == '/' ? v / d : v % d;
            } else {
                return v;
            }
        }
    }
    std::int64_t unary() {
        char c = peek();
        if (c == '-') { ++i_; return -unary(); }
        if (c == '+') { ++i_; return unary(); }
        if (c == '~') { ++i_; return ~unary(); }
        return primary();
    }
    std::int64_t primary() {
        char c = peek();
        if (c == '(') {
            ++i_;
            auto v = bor();
            if (!eat(")")) fail("missing `)`");
            return v;
        }
        if (c == '\'') {
            if (i_ + 2 < s_.size() && s_[i_ + 2] == '\'') {
                auto v = static_cast<unsigned char>(s_[i_ + 1]);
                i_ += 3;
                return v;
            }
            fail("bad character literal");
        }
        if (std::isdigit(static_cast<unsigned char>(c))) return number();
        if (ident_start(c)) {
            std::size_t b = i_;
            while (i_ < s_.size() && ident_char(s_[i_])) ++i_;
            auto name = s_.substr(b, i_ - b);
            if ((name == "lo" || name == "hi") && peek() == '(') {
                ++i_;
                auto v = bor();
                if (!eat(")")) fail("missing `)`");
                return name == "lo" ? (v & 0xff) : ((v >> 8) & 0xff);
            }
            auto v = lookup_(name);
            if (!v) throw ExprError{"undefined symbol `" + std::string(name) + "`", std::string(name)};
            return *v;
        }
        if (c == '\0') fail("expression ends early");
        fail(std::string("unexpected `") + c + "`");
    }
    std::int64_t number() {
        std::size_t b = i_;
        while (i_ < s_.size() && ident_char(s_[i_])) ++i_;
        std::string tok(s_.substr(b, i_ - b));
        int base = 10;
        std::string digits = tok;
        if (tok.size() > 2 && tok[0] == '0' && (tok[1] == 'x' || tok[1] == 'X')) {
            base = 16;
            digits = tok.substr(2);
        } else if (tok.size() > 2 && tok[0] == '0' && (tok[1] == 'b' || tok[1] == 'B')) {
            base = 2;
            digits = tok.substr(2);
        }
        std::size_t used = 0;
        std::int64_t v = 0;
        try {
            v = std::stoll(digits, &used, base);
        } catch (...) {
            fail("bad number `" + tok + "`");
        }
        if (used != digits.size()) fail("bad number `" + tok + "`");
        return v;
    }

    std::string_view s_;
    std::size_t i_ = 0;
    const SymbolLookup& lookup_;
};

inline std::int64_t eval_expr(std::string_view text, const SymbolLookup& lookup) {
    return ExprParser(text, lookup).parse();
}

/// Syntax check only: every identifier evaluates to zero.
inline std::optional<std::string> check_expr(std::string_view text) {
    SymbolLookup any = [](std::string_view) -> std::optional<std::int64_t> { return 0; };
    try {
        ExprParser(text, any).parse();
    } catch (const ExprError& e) {
        if (e.reason == "division by zero") return std::nullopt;
        return e.reason;
    }
    return std::nullopt;
}

} // namespace pdkkit::detail
