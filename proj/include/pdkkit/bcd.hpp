#pragma once

// uint16 -> five ASCII decimal digits, with and without `da a`.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdkkit/lowering.hpp"

namespace pdkkit {

namespace bcdio {
inline constexpr std::uint32_t lo = 0x08, hi = 0x09; // input, little endian
inline constexpr std::uint32_t r0 = 0x0a, r1 = 0x0b, r2 = 0x0c, cnt = 0x0d;
inline constexpr std::uint32_t out = 0x10;           // five digits, most significant first
} // namespace bcdio

namespace detail {

inline void bcd_digit(std::vector<std::string>& o, std::uint32_t reg, bool high, std::uint32_t dst, bool swap) {
    o.push_back("mov a, " + hex(reg));
    if (high && swap) o.push_back("swap a");
    if (high && !swap)
        for (int i = 0; i < 4; ++i) o.push_back("sr a");
    o.push_back("and a, #0x0f");
    o.push_back("add a, #'0'");
    o.push_back("mov " + hex(dst) + ", a");
}

/// Shift-and-double: each pass shifts one input bit into a packed BCD
/// accumulator by doubling it with `addc` and decimal-adjusting.
inline std::vector<std::string> bcd_with_da(bool swap) {
    using namespace bcdio;
    std::vector<std::string> o{"clear " + hex(r0), "clear " + hex(r1), "clear " + hex(r2), "mov a, #16",
                               "mov " + hex(cnt) + ", a", "bcd_loop:", "sl " + hex(lo), "slc " + hex(hi)};
    for (auto r : {r0, r1, r2}) {
        o.push_back("mov a, " + hex(r));
        o.push_back("addc a, " + hex(r));
        o.push_back("da a");
        o.push_back("mov " + hex(r) + ", a");
    }
    o.push_back("dzsn " + hex(cnt));
    o.push_back("goto bcd_loop");
    // r2 never exceeds 6, so its digit needs no masking
    o.push_back("mov a, " + hex(r2));
    o.push_back("add a, #'0'");
    o.push_back("mov " + hex(out) + ", a");
    bcd_digit(o, r1, true, out + 1, swap);
    bcd_digit(o, r1, false, out + 2, swap);
    bcd_digit(o, r0, true, out + 3, swap);
    bcd_digit(o, r0, false, out + 4, swap);
    return o;
}

/// Repeated subtraction of each power of ten, counting in ASCII.
inline std::vector<std::string> bcd_without_da() {
    using namespace bcdio;
    std::vector<std::string> o;
    const std::array<unsigned, 4> pow10{10000, 1000, 100, 10};
    for (std::size_t i = 0; i < pow10.size(); ++i) {
        const auto d = pow10[i];
        const auto dig = hex(out + i);
        const auto l = "bcd_sub" + std::to_string(i);
        o.push_back("mov a, #'0'-1");
        o.push_back("mov " + dig + ", a");
        o.push_back(l + ":");
        o.push_back("inc " + dig);
        o.push_back("mov a, #" + std::to_string(d & 0xff));
        o.push_back("sub " + hex(lo) + ", a");
        o.push_back("mov a, #" + std::to_string(d >> 8));
        o.push_back("subc " + hex(hi) + ", a");
        o.push_back("t1sn flags.1");
        o.push_back("goto " + l);
        o.push_back("mov a, #" + std::to_string(d & 0xff));
        o.push_back("add " + hex(lo) + ", a");
        o.push_back("mov a, #" + std::to_string(d >> 8));
        o.push_back("addc " + hex(hi) + ", a");
    }
    o.push_back("mov a, " + hex(lo));
    o.push_back("add a, #'0'");
    o.push_back("mov " + hex(out + 4) + ", a");
    return o;
}

} // namespace detail

/// Converts the word at bcdio::lo/hi to ASCII at bcdio::out. The input
/// bytes are consumed. Uses `da a` when the extension set has it.
inline LoweredSequence gen_bcd_u16_to_dec(const ExtensionSet& x, Variant v = Variant::pdk14) {
    LoweredSequence s;
    s.variant = v;
    s.extensions = x;
    const bool swap = shared_map(variant_spec(v), x).has(Op::SwapA);
    s.lines = x.da ? detail::bcd_with_da(swap) : detail::bcd_without_da();
    s.clobbers = x.da ? std::set<std::uint32_t>{bcdio::lo, bcdio::hi, bcdio::r0, bcdio::r1, bcdio::r2, bcdio::cnt}
                      : std::set<std::uint32_t>{bcdio::lo, bcdio::hi};
    detail::finish(s);
    return s;
}

/// Runs a sequence over many inputs from one loaded machine.
class BcdRunner {
public:
    explicit BcdRunner(const LoweredSequence& s) : proto_(prepare(s)) {}

    /// Returns the five output bytes; throws if the program faults or never halts.
    std::string convert(std::uint16_t value, std::uint64_t* cycles = nullptr) const {
        Machine m = proto_;
        m.set_data(bcdio::lo, static_cast<std::uint8_t>(value & 0xff));
        m.set_data(bcdio::hi, static_cast<std::uint8_t>(value >> 8));
        auto r = m.run(100000);
        if (r.reason != HaltReason::Halted || m.fault())
            throw std::runtime_error("bcd conversion of " + std::to_string(value) + " did not halt: " + r.detail);
        if (cycles) *cycles = r.cycle;
        std::string o;
        for (std::uint32_t i = 0; i < 5; ++i) o.push_back(static_cast<char>(m.data(bcdio::out + i)));
        return o;
    }

private:
    static Machine prepare(const LoweredSequence& s) {
        auto img = assemble(detail::header(s.variant, s.extensions) + s.text() + "    stopsys\n");
        return load(img, MachineConfig{});
    }
    Machine proto_;
};

/// r2 := r0 + r1 on packed BCD bytes, carry out in C.
inline LoweredSequence gen_bcd_add(Variant v = Variant::pdk14) {
    LoweredSequence s;
    s.variant = v;
    s.extensions.da = true;
    s.lines = {"mov a, " + detail::hex(bcdio::r0), "add a, " + detail::hex(bcdio::r1), "da a",
               "mov " + detail::hex(bcdio::r2) + ", a"};
    s.clobbers = {bcdio::r2};
    detail::finish(s);
    return s;
}

} // namespace pdkkit
