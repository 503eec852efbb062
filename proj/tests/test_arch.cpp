#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace pdkkit;

TEST(Arch, VariantTableCells) {
    for (const auto& row : oracle::fig1()) {
        auto a = variant_spec(row.name);
        EXPECT_EQ(a.id(), row.name);
        EXPECT_EQ(a.internal_name, row.internal);
        EXPECT_EQ(a.prog_word_width, row.word);
        EXPECT_EQ(a.prog_addr_bits, row.prog);
        EXPECT_EQ(a.data_addr_bits, row.data);
        EXPECT_EQ(a.io_addr_bits, row.io);
        EXPECT_EQ(a.thread_options, row.threads);
        EXPECT_EQ(a.max_hw_threads, row.threads.back());
    }
}

TEST(Arch, UnknownVariantRejected) {
    EXPECT_THROW(variant_spec("pdk17"), Error);
    try {
        variant_spec("pdk12");
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotAVariant);
    }
}

TEST(Arch, BitAddressingReachesLowerHalfExceptPdk16) {
    EXPECT_EQ(variant_spec(Variant::pdk13).bit_addr_bits(), 5u);
    EXPECT_EQ(variant_spec(Variant::pdk14).bit_addr_bits(), 6u);
    EXPECT_EQ(variant_spec(Variant::pdk15).bit_addr_bits(), 7u);
    EXPECT_EQ(variant_spec(Variant::pdk16).bit_addr_bits(), 9u);
}

TEST(Arch, OptionalInstructions) {
    EXPECT_TRUE(variant_spec(Variant::pdk13).optional_instrs.empty());
    EXPECT_TRUE(variant_spec(Variant::pdk16).optional_instrs.count("pushw"));
    EXPECT_TRUE(variant_spec(Variant::pdk14).optional_instrs.count("mul"));
}

TEST(ExtensionSet, ParseAndPrint) {
    auto x = ExtensionSet::parse("sprel,spadd");
    EXPECT_TRUE(x.spadd);
    EXPECT_TRUE(x.sprel);
    EXPECT_EQ(x.str(), "spadd+sprel");
    EXPECT_EQ(ExtensionSet::parse(x.str()), x);
    EXPECT_TRUE(ExtensionSet::parse("none").none());
    EXPECT_TRUE(ExtensionSet::parse("").none());
}

TEST(ExtensionSet, UnknownNameRejected) {
    try {
        ExtensionSet::parse("spadd,frobnicate");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnknownExtension);
    }
}

TEST(ExtensionSet, EveryNameRoundTrips) {
    for (const auto& n : ExtensionSet::names()) {
        auto x = ExtensionSet::parse(n);
        EXPECT_EQ(x.enabled(), std::vector<std::string>{n});
        EXPECT_EQ(x.str(), n);
    }
}

TEST(ExtensionSet, SprelAndIdxspExclusive) {
    EXPECT_THROW(ExtensionSet::parse("sprel+idxsp").validate(), Error);
}
