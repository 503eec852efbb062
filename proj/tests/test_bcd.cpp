#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace pdkkit;

TEST(Bcd, EdgeValues) {
    for (const auto& x : {ExtensionSet{}, ExtensionSet::parse("da")}) {
        BcdRunner r(gen_bcd_u16_to_dec(x));
        for (std::uint32_t v : {0u, 1u, 9u, 10u, 99u, 100u, 9999u, 10000u, 59999u, 65535u})
            EXPECT_EQ(r.convert(static_cast<std::uint16_t>(v)), oracle::decimal5(v)) << x.str() << " " << v;
    }
}

TEST(Bcd, ExhaustiveBothVariants) {
    for (const auto& x : {ExtensionSet{}, ExtensionSet::parse("da")}) {
        BcdRunner r(gen_bcd_u16_to_dec(x));
        std::size_t wrong = 0;
        for (std::uint32_t v = 0; v < 65536; ++v) wrong += r.convert(static_cast<std::uint16_t>(v)) != oracle::decimal5(v);
        EXPECT_EQ(wrong, 0u) << x.str();
    }
}

TEST(Bcd, DaVersionIsSmaller) {
    EXPECT_LT(gen_bcd_u16_to_dec(ExtensionSet::parse("da")).size_words, gen_bcd_u16_to_dec({}).size_words);
}

TEST(Bcd, OtherVariants) {
    for (auto v : {Variant::pdk13, Variant::pdk15, Variant::pdk16})
        for (const auto& x : {ExtensionSet{}, ExtensionSet::parse("da")}) {
            BcdRunner r(gen_bcd_u16_to_dec(x, v));
            for (std::uint32_t n : {0u, 9u, 4096u, 12345u, 65535u})
                EXPECT_EQ(r.convert(static_cast<std::uint16_t>(n)), oracle::decimal5(n)) << to_string(v) << " " << x.str();
        }
}

TEST(Bcd, PackedAddition) {
    auto s = gen_bcd_add();
    auto img = assemble(detail::header(s.variant, s.extensions) + s.text() + " mov a, io:1\n mov 0x0e, a\n stopsys\n");
    const Machine proto = load(img);
    for (unsigned x = 0; x < 100; ++x)
        for (unsigned y = 0; y < 100; ++y) {
            Machine m = proto;
            m.set_data(bcdio::r0, oracle::to_bcd(x));
            m.set_data(bcdio::r1, oracle::to_bcd(y));
            m.run(100);
            ASSERT_EQ(m.data(bcdio::r2), oracle::to_bcd((x + y) % 100)) << x << "+" << y;
            ASSERT_EQ(bool(m.data(0x0e) & flag::C), x + y >= 100) << x << "+" << y;
        }
}
