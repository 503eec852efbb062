#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "oracles.hpp"

using namespace pdkkit;

namespace {

Machine boot(const std::string& src, MachineConfig cfg = {}) { return load(assemble(src), cfg); }

RunResult finish(Machine& m, std::uint64_t budget = 100000) { return m.run(budget); }

} // namespace

TEST(Simulator, NopStopsysHaltsAtCycleTwo) {
    auto m = boot("nop\nstopsys\n");
    auto r = finish(m);
    EXPECT_EQ(r.reason, HaltReason::Halted);
    EXPECT_EQ(r.cycle, 2u);
}

TEST(Simulator, CycleClasses) {
    struct Case {
        const char* body;
        std::uint64_t cycles;
    };
    // each body runs before a final stopsys (1 cycle)
    const Case cases[] = {
        {"mov a, #1\n", 1},
        {"idxm a, 0x04\n", 2},
        {"idxm 0x04, a\n", 2},
        {"goto l\nl:\n", 2},
        {"call f\n goto e\nf: ret\ne:\n", 2 + 2 + 2},
        {"mov a, #0\n ceqsn a, #1\n nop\n", 1 + 1 + 1},
        {"mov a, #1\n ceqsn a, #1\n nop\n", 1 + 2},
        {"t0sn 0x10.0\n nop\n", 2},
        {"t1sn 0x10.0\n nop\n", 1 + 1},
    };
    for (const auto& c : cases) {
        auto m = boot(std::string(".equ __core0_sp, 0x40\n") + c.body + "stopsys\n");
        auto r = finish(m);
        EXPECT_EQ(r.reason, HaltReason::Halted) << c.body;
        EXPECT_EQ(r.cycle, c.cycles + 1) << c.body;
    }
}

TEST(Simulator, ArithmeticAndFlags) {
    auto m = boot("mov a, #0xf0\n add a, #0x20\n mov 0x10, a\n mov a, io:1\n mov 0x11, a\n"
                  "mov a, #0x0f\n add a, #1\n mov a, io:1\n mov 0x12, a\n"
                  "mov a, #5\n sub a, #6\n mov 0x13, a\n mov a, io:1\n mov 0x14, a\n stopsys\n");
    finish(m);
    EXPECT_EQ(m.data(0x10), 0x10);
    EXPECT_TRUE(m.data(0x11) & flag::C);
    EXPECT_TRUE(m.data(0x12) & flag::AC);
    EXPECT_FALSE(m.data(0x12) & flag::C);
    EXPECT_EQ(m.data(0x13), 0xff);
    EXPECT_TRUE(m.data(0x14) & flag::C); // borrow
}

TEST(Simulator, IndirectAccessLittleEndianPair) {
    auto m = boot(".data 0x04, 0x30, 0x00\n.data 0x30, 0x5a\n idxm a, 0x04\n inc 0x04\n idxm 0x04, a\n stopsys\n");
    finish(m);
    EXPECT_EQ(m.data(0x31), 0x5a);
}

TEST(Simulator, StackGrowsUpAndCallPushesPc) {
    auto m = boot(".equ __core0_sp, 0x40\n call f\n stopsys\nf:\n mov a, sp\n mov 0x10, a\n ret\n");
    finish(m);
    EXPECT_EQ(m.data(0x10), 0x42);
    EXPECT_EQ(m.data(0x40), 0x01); // return address low byte
    EXPECT_EQ(m.data(0x41), 0x00);
    EXPECT_EQ(m.core(0).sp, 0x40);
}

TEST(Simulator, PushafPopaf) {
    auto m = boot(".equ __core0_sp, 0x40\n mov a, #0xff\n add a, #1\n pushaf\n mov a, #3\n add a, #3\n popaf\n"
                  " mov 0x10, a\n stopsys\n");
    finish(m);
    EXPECT_EQ(m.data(0x10), 0);
    EXPECT_TRUE(m.core(0).flags & flag::Z);
    EXPECT_TRUE(m.core(0).flags & flag::C);
}

TEST(Simulator, RetKLoadsAccumulator) {
    auto m = boot(".equ __core0_sp, 0x40\n call t\n mov 0x10, a\n stopsys\nt: .rodata 'Q'\n");
    finish(m);
    EXPECT_EQ(m.data(0x10), 'Q');
}

TEST(Simulator, BarrelRoundRobin) {
    auto img = assemble(".arch pdk14\n__core0_start:\n inc 0x10\n inc 0x10\n stopsys\n"
                        "__core1_start:\n inc 0x11\n idxm a, 0x04\n inc 0x11\n stopsys\n");
    MachineConfig cfg;
    cfg.cores = 2;
    cfg.trace = true;
    auto m = load(img, cfg);
    std::vector<unsigned> who;
    while (!m.halted()) who.push_back(m.step().core);
    // cores alternate; a stalled core still uses its turn; stopped cores give theirs up
    EXPECT_EQ(who, (std::vector<unsigned>{0, 1, 0, 1, 0, 1, 1, 1}));
    EXPECT_EQ(m.data(0x10), 2);
    EXPECT_EQ(m.data(0x11), 2);
}

TEST(Simulator, CoresShareDataMemoryButNotRegisters) {
    auto img = assemble(".arch pdk14\n.ext coreid\n__core0_start:\n coreid a\n mov 0x10, a\n stopsys\n"
                        "__core1_start:\n coreid a\n mov 0x11, a\n stopsys\n");
    MachineConfig cfg;
    cfg.cores = 2;
    auto m = load(img, cfg);
    finish(m);
    EXPECT_EQ(m.data(0x10), 0);
    EXPECT_EQ(m.data(0x11), 1);
}

TEST(Simulator, TooManyCores) {
    auto img = assemble(".arch pdk13\nnop\n");
    MachineConfig cfg;
    cfg.cores = 2;
    try {
        load(img, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TooManyCores);
    }
    cfg.cores = 8;
    EXPECT_NO_THROW(load(assemble(".arch pdk16\nnop\n"), cfg));
}

TEST(Simulator, InterruptFrameAndReturn) {
    auto img = assemble(".equ __core0_sp, 0x40\n.org 0\n engint\nspin:\n inc 0x10\n goto spin\n"
                        ".org 0x10\n__irq:\n mov a, #0x77\n mov 0x11, a\n reti\n");
    auto m = load(img, {});
    m.raise_interrupt(5);
    m.run(5);
    EXPECT_TRUE(m.gint());
    m.step(); // interrupt entry
    EXPECT_EQ(m.core(0).pc, 0x10u);
    EXPECT_FALSE(m.gint());
    EXPECT_EQ(m.core(0).sp, 0x42);
    std::uint32_t ret = m.data(0x40) | (m.data(0x41) << 8);
    EXPECT_TRUE(ret == 1 || ret == 2) << ret;
    m.run(20);
    EXPECT_EQ(m.data(0x11), 0x77);
    EXPECT_TRUE(m.gint());
    EXPECT_EQ(m.core(0).sp, 0x40);
}

TEST(Simulator, InterruptDroppedWhileDisabled) {
    auto img = assemble(".equ __core0_sp, 0x40\n.org 0\nspin:\n inc 0x10\n goto spin\n"
                        ".org 0x10\n__irq:\n inc 0x11\n reti\n");
    auto m = load(img, {});
    m.raise_interrupt(3);
    m.run(100);
    EXPECT_EQ(m.data(0x11), 0);
    m.set_gint(true);
    m.run(100);
    EXPECT_EQ(m.data(0x11), 0); // the request was consumed, not deferred
}

TEST(Simulator, InterruptWaitsForInstructionBoundary) {
    auto img = assemble(".equ __core0_sp, 0x40\n.org 0\n engint\n idxm a, 0x04\n stopsys\n"
                        ".org 0x10\n__irq:\n reti\n");
    MachineConfig cfg;
    cfg.trace = true;
    auto m = load(img, cfg);
    m.raise_interrupt(2); // arrives while idxm is half done
    m.run(100);
    const auto& t = m.trace();
    ASSERT_GE(t.size(), 4u);
    EXPECT_TRUE(t[1].what.ends_with("(1/2)")) << t[1].what;
    EXPECT_EQ(t[2].what + " (1/2)", t[1].what);
    EXPECT_EQ(t[3].what, "(interrupt)");
}

TEST(Simulator, GintIoBit) {
    auto img = assemble(".arch pdk14\n.ext gint_io\n.equ __core0_sp, 0x40\n.org 0\n set1 gintctl.0\nspin:\n goto spin\n"
                        ".org 0x10\n__irq:\n inc 0x11\n reti\n");
    auto m = load(img, {});
    m.raise_interrupt(4);
    m.run(50);
    EXPECT_EQ(m.data(0x11), 1);
}

TEST(Simulator, DataFaultAndWrap) {
    MachineConfig cfg;
    cfg.data_size = 0x20;
    auto m = boot("mov a, 0x30\n stopsys\n", cfg);
    auto r = finish(m);
    EXPECT_EQ(r.reason, HaltReason::Fault);
    cfg.wrap_data = true;
    auto w = boot(".data 0x10, 9\n mov a, 0x30\n mov 0x00, a\n stopsys\n", cfg);
    EXPECT_EQ(finish(w).reason, HaltReason::Halted);
    EXPECT_EQ(w.data(0), 9);
}

TEST(Simulator, UnallocatedOpcodeFaults) {
    Image img;
    img.variant = Variant::pdk13;
    img.words[0] = 0x1f01;
    auto m = load(img, {});
    EXPECT_EQ(m.run(10).reason, HaltReason::Fault);
}

TEST(Simulator, SpaddAndSprel) {
    auto m = boot(".ext spadd, sprel\n.equ __core0_sp, 0x40\n spadd #6\n mov a, #9\n mov [sp-6], a\n"
                  " mov a, #4\n add a, [sp-6]\n mov [sp-1], a\n spadd #-6\n stopsys\n");
    finish(m);
    EXPECT_EQ(m.data(0x40), 9);
    EXPECT_EQ(m.data(0x45), 13);
    EXPECT_EQ(m.core(0).sp, 0x40);
}

TEST(Simulator, IdxxchSwapsThroughPointer) {
    auto m = boot(".arch pdk15\n.ext idxxch\n.data 0x10, 0x30, 0\n.data 0x30, 0xaa\n mov a, #0x55\n idxxch 0x10, a\n"
                  " mov 0x20, a\n stopsys\n");
    finish(m);
    EXPECT_EQ(m.data(0x30), 0x55);
    EXPECT_EQ(m.data(0x20), 0xaa);
}

TEST(Simulator, CmpxchgIndirect) {
    // pair at 0x10 -> 0x30, desired value at 0x12
    const std::string prog = ".arch pdk15\n.ext cmpxchg_ind\n.data 0x10, 0x30, 0, 0x99\n.data 0x30, 7\n"
                             " mov a, #EXP\n idxcmpxchg 0x10\n mov 0x20, a\n mov a, io:1\n mov 0x21, a\n stopsys\n";
    auto hit = boot(".equ EXP, 7\n" + prog);
    finish(hit);
    EXPECT_EQ(hit.data(0x30), 0x99);
    EXPECT_TRUE(hit.data(0x21) & flag::Z);
    auto miss = boot(".equ EXP, 8\n" + prog);
    finish(miss);
    EXPECT_EQ(miss.data(0x30), 7);
    EXPECT_EQ(miss.data(0x20), 7);
    EXPECT_FALSE(miss.data(0x21) & flag::Z);
}

TEST(Simulator, DaAfterBcdAddition) {
    auto img = assemble(".ext da\n mov a, 0x10\n add a, 0x11\n da a\n mov 0x12, a\n mov a, io:1\n mov 0x13, a\n stopsys\n");
    const Machine proto = load(img, {});
    for (unsigned x = 0; x < 100; ++x)
        for (unsigned y = 0; y < 100; ++y) {
            Machine m = proto;
            m.set_data(0x10, oracle::to_bcd(x));
            m.set_data(0x11, oracle::to_bcd(y));
            m.run(100);
            ASSERT_EQ(m.data(0x12), oracle::to_bcd((x + y) % 100)) << x << "+" << y;
            ASSERT_EQ(bool(m.data(0x13) & flag::C), x + y >= 100) << x << "+" << y;
        }
}

TEST(Simulator, SwapExchangesAtomicallyUnderInterrupts) {
    // the handler observes memory; a swap must never be seen half done
    const std::string src = ".arch pdk15\n.ext idxxch\n.equ __core0_sp, 0x40\n.data 0x10, 0x30, 0\n.data 0x30, 1\n"
                            ".org 0\n engint\n mov a, #2\n idxxch 0x10, a\n mov 0x31, a\n stopsys\n"
                            ".org 0x10\n__irq:\n pushaf\n mov a, 0x30\n mov 0x20, a\n popaf\n reti\n";
    auto img = assemble(src);
    for (std::uint64_t at = 0; at < 12; ++at) {
        auto m = load(img, {});
        m.raise_interrupt(at);
        m.run(200);
        EXPECT_EQ(m.data(0x30), 2);
        EXPECT_EQ(m.data(0x31), 1);
        auto seen = m.data(0x20);
        EXPECT_TRUE(seen == 0 || seen == 1 || seen == 2) << at;
    }
}

TEST(Simulator, CodeMemoryIsReadOnly) {
    auto img = assemble(".equ __core0_sp, 0x40\n mov a, #0xff\n mov 0x00, a\n idxm 0x02, a\n pushaf\n stopsys\n");
    auto m = load(img, {});
    auto before = m.code_memory();
    m.run(100);
    EXPECT_EQ(m.code_memory(), before);
}

TEST(Simulator, TracesAreDeterministic) {
    auto img = assemble(".arch pdk14\n.equ __core0_sp, 0x40\n.equ __core1_sp, 0x50\n.org 0\n engint\nl0:\n inc 0x10\n"
                        " goto l0\n.org 0x10\n__irq:\n inc 0x12\n reti\n__core1_start:\n inc 0x11\n goto __core1_start\n");
    MachineConfig cfg;
    cfg.cores = 2;
    cfg.trace = true;
    auto once = [&] {
        auto m = load(img, cfg);
        m.raise_interrupt(9);
        m.raise_interrupt(40);
        m.run(200);
        return m.trace_jsonl();
    };
    auto a = once(), b = once();
    EXPECT_EQ(a, b);
    std::istringstream in(a);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line); ++n) {
        auto j = nlohmann::json::parse(line);
        EXPECT_TRUE(j.contains("cycle") && j.contains("core") && j.contains("op"));
    }
    EXPECT_EQ(n, 200u);
}

TEST(Simulator, BreakpointStopsBeforeExecuting) {
    auto img = assemble("nop\nhere:\n nop\n stopsys\n");
    auto m = load(img, {});
    auto r = m.run(100, {static_cast<std::uint32_t>(img.at("here"))});
    EXPECT_EQ(r.reason, HaltReason::Breakpoint);
    EXPECT_EQ(r.cycle, 1u);
}
