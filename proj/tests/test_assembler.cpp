#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace pdkkit;

namespace {

Image asm14(const std::string& body) { return assemble(".arch pdk14\n" + body); }

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::MapFormat;
}

int line_of(const std::string& src) {
    try {
        assemble(src);
    } catch (const SourceError& e) {
        return e.line;
    }
    return -1;
}

} // namespace

TEST(Expr, Arithmetic) {
    auto none = [](std::string_view) -> std::optional<std::int64_t> { return std::nullopt; };
    EXPECT_EQ(detail::eval_expr("1 + 2 * 3", none), 7);
    EXPECT_EQ(detail::eval_expr("(1 + 2) * 3", none), 9);
    EXPECT_EQ(detail::eval_expr("0x10 | 1 << 2", none), 0x14);
    EXPECT_EQ(detail::eval_expr("~0 & 0xff", none), 0xff);
    EXPECT_EQ(detail::eval_expr("lo(0x1234) + hi(0x1234)", none), 0x34 + 0x12);
    EXPECT_EQ(detail::eval_expr("'0' + 1", none), '1');
    EXPECT_EQ(detail::eval_expr("-3 % 2", none), -1);
}

TEST(Expr, Symbols) {
    auto look = [](std::string_view n) -> std::optional<std::int64_t> {
        if (n == "X") return 40;
        return std::nullopt;
    };
    EXPECT_EQ(detail::eval_expr("X / 4 ^ 1", look), 11);
    EXPECT_ANY_THROW(detail::eval_expr("Y + 1", look));
}

TEST(Parse, OperandShapes) {
    auto u = parse("lbl: mov a, #5 ; comment\n  mov [sp-2], a\n  set1 0x10.3\n  set0 io:3.7\n  mov a, io:1\n");
    ASSERT_EQ(u.instruction_count(), 5u);
    std::vector<OperandShape> shapes;
    for (const auto& it : u.items)
        if (it.kind == AsmItem::Kind::Instruction)
            for (const auto& o : it.operands) shapes.push_back(o.shape);
    EXPECT_EQ(shapes, (std::vector<OperandShape>{OperandShape::Acc, OperandShape::Imm, OperandShape::SpRel,
                                                 OperandShape::Acc, OperandShape::Bit, OperandShape::IoBit,
                                                 OperandShape::Acc, OperandShape::Io}));
}

TEST(Parse, MissingOperandIsSyntaxError) {
    EXPECT_EQ(kind_of([] { parse("mov a,\n"); }), ErrorKind::SyntaxError);
}

TEST(Assembler, SimpleProgram) {
    auto img = asm14("start:\n nop\n mov a, #0x2a\n goto start\n");
    EXPECT_EQ(img.variant, Variant::pdk14);
    ASSERT_EQ(img.words.size(), 3u);
    const auto& m = shared_map(variant_spec(Variant::pdk14), {});
    EXPECT_EQ(decode(img.words.at(1), m), (Instruction{Op::MovAK, {Operand::acc(), Operand::imm(0x2a)}}));
    EXPECT_EQ(decode(img.words.at(2), m), (Instruction{Op::Goto, {Operand::prog(0)}}));
    EXPECT_EQ(img.at("start"), 0);
}

TEST(Assembler, DefaultsToPdk14) {
    EXPECT_EQ(assemble("nop\n").variant, Variant::pdk14);
    AssembleOptions o;
    o.arch = Variant::pdk15;
    EXPECT_EQ(assemble("nop\n", o).variant, Variant::pdk15);
}

TEST(Assembler, ForwardReferences) {
    auto img = asm14(" goto later\n nop\nlater:\n call sub\n stopsys\nsub:\n ret\n");
    const auto& m = shared_map(variant_spec(Variant::pdk14), {});
    EXPECT_EQ(decode(img.words.at(0), m).operands[0].value, 2);
    EXPECT_EQ(decode(img.words.at(2), m).operands[0].value, 4);
}

TEST(Assembler, EquAndIoNames) {
    auto img = asm14(".equ CNT, 0x20\n.ioequ PORT, 0x10\n inc CNT\n mov a, PORT\n mov a, sp\n set1 flags.1\n");
    const auto& m = shared_map(variant_spec(Variant::pdk14), {});
    EXPECT_EQ(decode(img.words.at(0), m), (Instruction{Op::IncM, {Operand::mem(0x20)}}));
    EXPECT_EQ(decode(img.words.at(1), m), (Instruction{Op::MovAIo, {Operand::acc(), Operand::io(0x10)}}));
    EXPECT_EQ(decode(img.words.at(2), m).operands[1], Operand::io(0));
    EXPECT_EQ(decode(img.words.at(3), m).operands[0], Operand::io_bit(1, 1));
}

TEST(Assembler, Errors) {
    EXPECT_EQ(kind_of([] { asm14(" frob a\n"); }), ErrorKind::UnknownMnemonic);
    EXPECT_EQ(kind_of([] { asm14(" goto nowhere\n"); }), ErrorKind::UndefinedSymbol);
    EXPECT_EQ(kind_of([] { asm14("x:\nx:\n nop\n"); }), ErrorKind::DuplicateSymbol);
    EXPECT_EQ(kind_of([] { asm14(" mov a, #300\n"); }), ErrorKind::OperandOutOfRange);
    EXPECT_EQ(kind_of([] { asm14(" spadd #2\n"); }), ErrorKind::UnknownMnemonic);
    EXPECT_EQ(kind_of([] { asm14(".org 0x7ff\n nop\n nop\n"); }), ErrorKind::ProgramMemoryOverflow);
    EXPECT_EQ(kind_of([] { assemble(".arch pdk13\n set1 0x20.0\n"); }), ErrorKind::OperandOutOfRange);
    EXPECT_EQ(kind_of([] { assemble(".arch pdk99\n"); }), ErrorKind::NotAVariant);
    EXPECT_EQ(kind_of([] { assemble(".ext spadd, wobble\n"); }), ErrorKind::UnknownExtension);
}

TEST(Assembler, ErrorsCarryLineNumbers) {
    EXPECT_EQ(line_of(".arch pdk14\nnop\n\n frob\n"), 4);
    EXPECT_EQ(line_of("nop\n goto missing\n"), 2);
}

TEST(Assembler, ExtensionSyntax) {
    auto img = assemble(".arch pdk14\n.ext spadd, sprel\n spadd #-4\n mov a, [sp-3]\n add [sp+2], a\n");
    const auto& m = shared_map(variant_spec(Variant::pdk14), ExtensionSet::parse("spadd+sprel"));
    EXPECT_EQ(decode(img.words.at(0), m), (Instruction{Op::Spadd, {Operand::imm(-4)}}));
    EXPECT_EQ(decode(img.words.at(1), m), (Instruction{Op::MovAM, {Operand::acc(), Operand::sp_rel(-3)}}));
    EXPECT_EQ(decode(img.words.at(2), m), (Instruction{Op::AddMA, {Operand::sp_rel(2), Operand::acc()}}));
}

TEST(Assembler, SprelOutOfRangeOffset) {
    EXPECT_EQ(kind_of([] { assemble(".arch pdk13\n.ext sprel\n mov a, [sp-9]\n"); }), ErrorKind::OperandOutOfRange);
    EXPECT_NO_THROW(assemble(".arch pdk13\n.ext sprel\n mov a, [sp-8]\n"));
}

TEST(Assembler, RodataIsRetK) {
    auto img = asm14("tab: .rodata \"Hi\", 7\n");
    const auto& m = shared_map(variant_spec(Variant::pdk14), {});
    ASSERT_EQ(img.words.size(), 3u);
    EXPECT_EQ(decode(img.words.at(0), m), (Instruction{Op::RetK, {Operand::imm('H')}}));
    EXPECT_EQ(decode(img.words.at(2), m), (Instruction{Op::RetK, {Operand::imm(7)}}));
    EXPECT_EQ(emit_rodata({'H', 'i', 7}, m), (std::vector<std::uint32_t>{img.words.at(0), img.words.at(1), img.words.at(2)}));
}

TEST(Assembler, DataInitAndSymbols) {
    auto img = asm14(".data 0x10, 1, 2, lo(0x1234)\n.equ __core0_sp, 0x40\n.entry go\n nop\ngo:\n stopsys\n");
    EXPECT_EQ(img.data_init.at(0x10), 1);
    EXPECT_EQ(img.data_init.at(0x12), 0x34);
    EXPECT_EQ(img.at("__core0_sp"), 0x40);
    EXPECT_EQ(img.entry, 1u);
}

TEST(Image, WriteReadRoundTrip) {
    auto img = assemble(".arch pdk15\n.ext coreid, da\n.data 0x20, 5\nmain: coreid a\n da a\n stopsys\n");
    auto text = write_image(img);
    EXPECT_EQ(text.rfind("PDKIMG 1 pdk15 coreid+da", 0), 0u);
    EXPECT_EQ(read_image(text), img);
}

TEST(Image, BadImagesRejected) {
    EXPECT_EQ(kind_of([] { read_image("garbage\n"); }), ErrorKind::ImageFormat);
    EXPECT_EQ(kind_of([] { read_image("PDKIMG 1 pdk14 -\n0000: zz\n"); }), ErrorKind::ImageFormat);
}

TEST(Disassembler, FixedPointOnHandWrittenProgram) {
    const std::string src = ".arch pdk14\n.ext spadd, sprel, idxxch\n.org 0\n goto main\n.org 0x10\n reti\n"
                            "main:\n mov a, #1\n idxxch 0x10, a\n spadd #-2\n mov [sp-1], a\n"
                            " t0sn 0x12.3\n set1 io:3.0\n ceqsn a, #0\n idxm a, 0x04\n ret #0x41\n"
                            " .word 0x3fff\n stopsys\n";
    auto a = assemble(src);
    auto text = disassemble(a);
    auto b = assemble(text);
    EXPECT_EQ(a.words, b.words);
    EXPECT_EQ(disassemble(b), text);
}

TEST(Disassembler, UnallocatedWordsBecomeDotWord) {
    Image img;
    img.variant = Variant::pdk13;
    img.words[0] = 0x1f01;
    auto text = disassemble(img);
    EXPECT_NE(text.find(".word"), std::string::npos);
    EXPECT_EQ(assemble(text).words, img.words);
}
