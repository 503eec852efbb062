#pragma once

// Instruction semantics for Machine. Included at the end of simulator.hpp.

namespace pdkkit {

/// Executes one instruction; returns true when a skip is taken.
inline bool Machine::execute(CoreState& c, const Instruction& in) {
    const Operand& o0 = in.operands[0];
    const Operand& o1 = in.operands[1];
    const std::uint32_t pmask = arch_.prog_size() - 1;
    std::uint32_t next = (c.pc + 1) & pmask;
    bool skip = false;
    auto m_of = [&](const Operand& o) { return mem_addr(c, o); };

    switch (in.op) {
    case Op::Nop:
    case Op::Wdreset: break;
    case Op::Ret: next = pop_pc(c); break;
    case Op::RetK:
        set_acc(c, static_cast<std::uint8_t>(o0.value));
        next = pop_pc(c);
        break;
    case Op::Reti:
        next = pop_pc(c);
        gint_ = true;
        note("gint=1");
        break;
    case Op::Engint: gint_ = true; note("gint=1"); break;
    case Op::Disgint: gint_ = false; note("gint=0"); break;
    case Op::Stopsys:
    case Op::Stopexe:
        c.running = false;
        note("halt");
        return false;
    case Op::Reset: {
        unsigned idx = static_cast<unsigned>(&c - cores_.data());
        c = reset_cores_[idx];
        note("reset");
        return false;
    }
    case Op::Pushaf:
        wr(c.sp, c.acc);
        wr(c.sp + 1, c.flags);
        set_sp(c, static_cast<std::uint8_t>(c.sp + 2));
        break;
    case Op::Popaf:
        set_sp(c, static_cast<std::uint8_t>(c.sp - 2));
        set_acc(c, rd(c.sp));
        set_flags(c, rd(c.sp + 1));
        break;
    case Op::NotA: set_acc(c, static_cast<std::uint8_t>(~c.acc)); set_z(c, c.acc); break;
    case Op::NegA: set_acc(c, static_cast<std::uint8_t>(-c.acc)); set_z(c, c.acc); break;
    case Op::SlA: set_flag(c, flag::C, c.acc & 0x80); set_acc(c, static_cast<std::uint8_t>(c.acc << 1)); break;
    case Op::SrA: set_flag(c, flag::C, c.acc & 1); set_acc(c, c.acc >> 1); break;
    case Op::SlcA: {
        unsigned ci = carry(c);
        set_flag(c, flag::C, c.acc & 0x80);
        set_acc(c, static_cast<std::uint8_t>((c.acc << 1) | ci));
        break;
    }
    case Op::SrcA: {
        unsigned ci = carry(c);
        set_flag(c, flag::C, c.acc & 1);
        set_acc(c, static_cast<std::uint8_t>((c.acc >> 1) | (ci << 7)));
        break;
    }
    case Op::SwapA: set_acc(c, static_cast<std::uint8_t>((c.acc << 4) | (c.acc >> 4))); break;
    case Op::AddcA: set_acc(c, alu_add(c, c.acc, 0, carry(c))); break;
    case Op::SubcA: set_acc(c, alu_sub(c, c.acc, 0, carry(c))); break;
    case Op::IzsnA: set_acc(c, alu_add(c, c.acc, 1, 0)); skip = c.acc == 0; break;
    case Op::DzsnA: set_acc(c, alu_sub(c, c.acc, 1, 0)); skip = c.acc == 0; break;
    case Op::PcaddA: next = (c.pc + c.acc) & pmask; break;
    case Op::LdsptlA:
    case Op::LdspthA: {
        std::uint16_t w = code_word(pair(c.sp));
        set_acc(c, in.op == Op::LdsptlA ? static_cast<std::uint8_t>(w) : static_cast<std::uint8_t>(w >> 8));
        break;
    }
    case Op::Mul: {
        unsigned r = static_cast<unsigned>(c.acc) * io_rd(io_reg::mul_op);
        set_acc(c, static_cast<std::uint8_t>(r));
        io_wr(io_reg::mul_hi, static_cast<std::uint8_t>(r >> 8));
        break;
    }

    case Op::MovAK: set_acc(c, static_cast<std::uint8_t>(o1.value)); break;
    case Op::AddAK: set_acc(c, alu_add(c, c.acc, static_cast<std::uint8_t>(o1.value), 0)); break;
    case Op::SubAK: set_acc(c, alu_sub(c, c.acc, static_cast<std::uint8_t>(o1.value), 0)); break;
    case Op::AndAK: set_acc(c, c.acc & o1.value); set_z(c, c.acc); break;
    case Op::OrAK: set_acc(c, static_cast<std::uint8_t>(c.acc | o1.value)); set_z(c, c.acc); break;
    case Op::XorAK: set_acc(c, static_cast<std::uint8_t>(c.acc ^ o1.value)); set_z(c, c.acc); break;
    case Op::CeqsnAK:
    case Op::CneqsnAK: {
        auto r = alu_sub(c, c.acc, static_cast<std::uint8_t>(o1.value), 0);
        skip = (r == 0) == (in.op == Op::CeqsnAK);
        break;
    }

    case Op::MovAM: set_acc(c, rd(m_of(o1))); set_z(c, c.acc); break;
    case Op::MovMA: wr(m_of(o0), c.acc); break;
    case Op::AddAM: set_acc(c, alu_add(c, c.acc, rd(m_of(o1)), 0)); break;
    case Op::AddMA: { auto a = m_of(o0); wr(a, alu_add(c, rd(a), c.acc, 0)); break; }
    case Op::AddcAM: set_acc(c, alu_add(c, c.acc, rd(m_of(o1)), carry(c))); break;
    case Op::AddcMA: { auto a = m_of(o0); wr(a, alu_add(c, rd(a), c.acc, carry(c))); break; }
    case Op::SubAM: set_acc(c, alu_sub(c, c.acc, rd(m_of(o1)), 0)); break;
    case Op::SubMA: { auto a = m_of(o0); wr(a, alu_sub(c, rd(a), c.acc, 0)); break; }
    case Op::SubcAM: set_acc(c, alu_sub(c, c.acc, rd(m_of(o1)), carry(c))); break;
    case Op::SubcMA: { auto a = m_of(o0); wr(a, alu_sub(c, rd(a), c.acc, carry(c))); break; }
    case Op::AndAM: set_acc(c, c.acc & rd(m_of(o1))); set_z(c, c.acc); break;
    case Op::AndMA: { auto a = m_of(o0); auto v = static_cast<std::uint8_t>(rd(a) & c.acc); wr(a, v); set_z(c, v); break; }
    case Op::OrAM: set_acc(c, c.acc | rd(m_of(o1))); set_z(c, c.acc); break;
    case Op::OrMA: { auto a = m_of(o0); auto v = static_cast<std::uint8_t>(rd(a) | c.acc); wr(a, v); set_z(c, v); break; }
    case Op::XorAM: set_acc(c, c.acc ^ rd(m_of(o1))); set_z(c, c.acc); break;
    case Op::XorMA: { auto a = m_of(o0); auto v = static_cast<std::uint8_t>(rd(a) ^ c.acc); wr(a, v); set_z(c, v); break; }
    case Op::XchM: {
        auto a = m_of(o0);
        auto v = rd(a);
        wr(a, c.acc);
        set_acc(c, v);
        break;
    }
    case Op::IncM: { auto a = m_of(o0); wr(a, alu_add(c, rd(a), 1, 0)); break; }
    case Op::DecM: { auto a = m_of(o0); wr(a, alu_sub(c, rd(a), 1, 0)); break; }
    case Op::ClearM: wr(m_of(o0), 0); break;
    case Op::SlM: { auto a = m_of(o0); auto v = rd(a); set_flag(c, flag::C, v & 0x80); wr(a, static_cast<std::uint8_t>(v << 1)); break; }
    case Op::SrM: { auto a = m_of(o0); auto v = rd(a); set_flag(c, flag::C, v & 1); wr(a, v >> 1); break; }
    case Op::SlcM: {
        auto a = m_of(o0);
        auto v = rd(a);
        unsigned ci = carry(c);
        set_flag(c, flag::C, v & 0x80);
        wr(a, static_cast<std::uint8_t>((v << 1) | ci));
        break;
    }
    case Op::SrcM: {
        auto a = m_of(o0);
        auto v = rd(a);
        unsigned ci = carry(c);
        set_flag(c, flag::C, v & 1);
        wr(a, static_cast<std::uint8_t>((v >> 1) | (ci << 7)));
        break;
    }
    case Op::CeqsnAM:
    case Op::CneqsnAM: {
        auto r = alu_sub(c, c.acc, rd(m_of(o1)), 0);
        skip = (r == 0) == (in.op == Op::CeqsnAM);
        break;
    }
    case Op::CeqsnMA:
    case Op::CneqsnMA: {
        auto r = alu_sub(c, rd(m_of(o0)), c.acc, 0);
        skip = (r == 0) == (in.op == Op::CeqsnMA);
        break;
    }
    case Op::IzsnM: { auto a = m_of(o0); auto v = alu_add(c, rd(a), 1, 0); wr(a, v); skip = v == 0; break; }
    case Op::DzsnM: { auto a = m_of(o0); auto v = alu_sub(c, rd(a), 1, 0); wr(a, v); skip = v == 0; break; }
    case Op::NotM: { auto a = m_of(o0); auto v = static_cast<std::uint8_t>(~rd(a)); wr(a, v); set_z(c, v); break; }
    case Op::NegM: { auto a = m_of(o0); auto v = static_cast<std::uint8_t>(-rd(a)); wr(a, v); set_z(c, v); break; }
    case Op::CompAM: alu_sub(c, c.acc, rd(m_of(o1)), 0); break;
    case Op::CompMA: alu_sub(c, rd(m_of(o0)), c.acc, 0); break;
    case Op::AddcM: { auto a = m_of(o0); wr(a, alu_add(c, rd(a), 0, carry(c))); break; }
    case Op::SubcM: { auto a = m_of(o0); wr(a, alu_sub(c, rd(a), 0, carry(c))); break; }
    case Op::SwapM: { auto a = m_of(o0); auto v = rd(a); wr(a, static_cast<std::uint8_t>((v << 4) | (v >> 4))); break; }
    case Op::NaddAM: set_acc(c, alu_sub(c, rd(m_of(o1)), c.acc, 0)); break;
    case Op::NaddMA: { auto a = m_of(o0); wr(a, alu_sub(c, c.acc, rd(a), 0)); break; }

    case Op::IdxmAM: set_acc(c, rd(pair(o1.value))); break;
    case Op::IdxmMA: wr(pair(o0.value), c.acc); break;
    case Op::LdtablAM: set_acc(c, static_cast<std::uint8_t>(code_word(pair(o1.value)))); break;
    case Op::LdtabhAM: set_acc(c, static_cast<std::uint8_t>(code_word(pair(o1.value)) >> 8)); break;
    case Op::PushwM: {
        auto lo = rd(o0.value), hi = rd(o0.value + 1);
        wr(c.sp, lo);
        wr(c.sp + 1, hi);
        set_sp(c, static_cast<std::uint8_t>(c.sp + 2));
        break;
    }
    case Op::IgotoM: next = pair(o0.value) & pmask; break;
    case Op::IcallM: {
        auto target = pair(o0.value) & pmask;
        push_pc(c, next);
        next = target;
        break;
    }

    case Op::MovAIo: set_acc(c, io_rd(o1.value)); set_z(c, c.acc); break;
    case Op::MovIoA: io_wr(o0.value, c.acc); break;
    case Op::XorIoA: io_wr(o0.value, static_cast<std::uint8_t>(io_rd(o0.value) ^ c.acc)); break;
    case Op::XorAIo: set_acc(c, c.acc ^ io_rd(o1.value)); set_z(c, c.acc); break;

    case Op::Set0M: { auto a = o0.value; wr(a, static_cast<std::uint8_t>(rd(a) & ~(1u << o0.bit))); break; }
    case Op::Set1M: { auto a = o0.value; wr(a, static_cast<std::uint8_t>(rd(a) | (1u << o0.bit))); break; }
    case Op::T0snM: skip = !(rd(o0.value) & (1u << o0.bit)); break;
    case Op::T1snM: skip = rd(o0.value) & (1u << o0.bit); break;
    case Op::Set0Io: io_wr(o0.value, static_cast<std::uint8_t>(io_rd(o0.value) & ~(1u << o0.bit))); break;
    case Op::Set1Io: io_wr(o0.value, static_cast<std::uint8_t>(io_rd(o0.value) | (1u << o0.bit))); break;
    case Op::T0snIo: skip = !(io_rd(o0.value) & (1u << o0.bit)); break;
    case Op::T1snIo: skip = io_rd(o0.value) & (1u << o0.bit); break;
    case Op::SwapcIo: {
        auto v = io_rd(o0.value);
        bool b = v & (1u << o0.bit);
        io_wr(o0.value, static_cast<std::uint8_t>(carry(c) ? (v | (1u << o0.bit)) : (v & ~(1u << o0.bit))));
        set_flag(c, flag::C, b);
        break;
    }

    case Op::Goto: next = static_cast<std::uint32_t>(o0.value); break;
    case Op::Call: push_pc(c, next); next = static_cast<std::uint32_t>(o0.value); break;

    case Op::Spadd: set_sp(c, static_cast<std::uint8_t>(c.sp + o0.value)); break;
    case Op::MovASp: set_acc(c, rd(m_of(o1))); set_z(c, c.acc); break;
    case Op::MovSpA: wr(m_of(o0), c.acc); break;
    case Op::IdxxchMA: {
        auto p = pair(o0.value);
        auto v = rd(p);
        wr(p, c.acc);
        set_acc(c, v);
        break;
    }
    case Op::CmpxchgM:
    case Op::IdxcmpxchgM: {
        const bool ind = in.op == Op::IdxcmpxchgM;
        std::int64_t target = ind ? pair(o0.value) : o0.value;
        std::uint8_t desired = rd(o0.value + (ind ? 2 : 1));
        std::uint8_t cur = rd(target);
        if (cur == c.acc) {
            wr(target, desired);
            set_flag(c, flag::Z, true);
        } else {
            set_acc(c, cur);
            set_flag(c, flag::Z, false);
        }
        break;
    }
    case Op::IdxaddMA: { auto p = pair(o0.value); wr(p, alu_add(c, rd(p), c.acc, 0)); break; }
    case Op::IdxandMA: { auto p = pair(o0.value); auto v = static_cast<std::uint8_t>(rd(p) & c.acc); wr(p, v); set_z(c, v); break; }
    case Op::IdxorMA: { auto p = pair(o0.value); auto v = static_cast<std::uint8_t>(rd(p) | c.acc); wr(p, v); set_z(c, v); break; }
    case Op::IdxxorMA: { auto p = pair(o0.value); auto v = static_cast<std::uint8_t>(rd(p) ^ c.acc); wr(p, v); set_z(c, v); break; }
    case Op::CoreidA: set_acc(c, static_cast<std::uint8_t>(&c - cores_.data())); break;
    case Op::DaA: {
        unsigned v = c.acc;
        bool cy = c.flags & flag::C;
        if ((c.flags & flag::AC) || (v & 0xf) > 9) v += 0x06;
        if (cy || ((v >> 4) & 0x1f) > 9 || v > 0xff) {
            v += 0x60;
            cy = true;
        }
        set_acc(c, static_cast<std::uint8_t>(v));
        set_flag(c, flag::C, cy);
        set_z(c, c.acc);
        break;
    }
    case Op::Count_: break;
    }
    if (skip) next = (next + 1) & pmask;
    c.pc = next;
    return skip;
}

inline std::string Machine::trace_jsonl() const {
    std::ostringstream os;
    for (const auto& t : trace_) {
        nlohmann::json j{{"cycle", t.cycle}, {"core", t.core}, {"pc", t.pc}, {"word", t.word},
                         {"op", t.what}, {"effects", t.effects}};
        os << j.dump() << "\n";
    }
    return os.str();
}

} // namespace pdkkit
