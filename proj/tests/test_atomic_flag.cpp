#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace pdkkit;

namespace {

const std::set<FlagOp> kBoth{FlagOp::test_and_set, FlagOp::clear};

std::vector<Instruction> driver(const AtomicFixture& fx, unsigned c) {
    return decode_range(fx.image, fx.driver_ranges[c].first, fx.driver_ranges[c].second);
}

std::vector<Instruction> handler(const AtomicFixture& fx) {
    return decode_range(fx.image, fx.handler_start, fx.handler_end);
}

} // namespace

TEST(AtomicFlag, LockRolesPerContext) {
    auto fx = gen_atomic_flag(kBoth, 2, {});
    EXPECT_TRUE(acquires(driver(fx, 0), flagfix::l1));
    EXPECT_FALSE(acquires(driver(fx, 0), flagfix::l2));
    EXPECT_TRUE(acquires(driver(fx, 1), flagfix::l2));
    EXPECT_TRUE(acquires(driver(fx, 1), flagfix::l1));
    EXPECT_TRUE(acquires(handler(fx), flagfix::l2));
    EXPECT_FALSE(acquires(handler(fx), flagfix::l1));
}

TEST(AtomicFlag, SingleCoreNeedsNoSecondLock) {
    auto fx = gen_atomic_flag(kBoth, 1, {});
    EXPECT_FALSE(acquires(driver(fx, 0), flagfix::l2));
    auto rep = check_mutual_exclusion(fx, 120, 1500);
    EXPECT_EQ(rep.violations, 0u) << rep.first_violation.value_or("");
}

TEST(AtomicFlag, CoreCountLimitedByVariant) {
    try {
        gen_atomic_flag(kBoth, 3, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TooManyCores);
    }
    FixtureOptions o;
    o.variant = Variant::pdk16;
    EXPECT_NO_THROW(gen_atomic_flag(kBoth, 4, {}, o));
}

TEST(AtomicFlag, TwoCoresNoViolationsAcrossPads) {
    for (unsigned pad : {0u, 2u, 5u}) {
        FixtureOptions o;
        o.cs_pad = pad;
        o.handler_pad = pad;
        auto fx = gen_atomic_flag(kBoth, 2, {}, o);
        auto rep = check_mutual_exclusion(fx, 160, 2000);
        EXPECT_EQ(rep.violations, 0u) << "pad " << pad << ": " << rep.first_violation.value_or("");
        EXPECT_GT(rep.handler_entries, 0u) << pad;
        EXPECT_GT(rep.handler_busy, 0u) << pad;
        EXPECT_GT(rep.min_driver_entries, 0u) << pad;
    }
}

TEST(AtomicFlag, FourCoresOnPdk16) {
    FixtureOptions o;
    o.variant = Variant::pdk16;
    auto fx = gen_atomic_flag(kBoth, 4, {}, o);
    auto rep = check_mutual_exclusion(fx, 60, 3000);
    EXPECT_EQ(rep.violations, 0u) << rep.first_violation.value_or("");
    EXPECT_GT(rep.min_driver_entries, 0u);
}

TEST(AtomicFlag, CheckerCatchesUnlockedHandler) {
    FixtureOptions o;
    o.unlocked_handler = true;
    o.handler_pad = 4;
    auto fx = gen_atomic_flag(kBoth, 2, {}, o);
    auto rep = check_mutual_exclusion(fx, 160, 2000);
    EXPECT_GT(rep.violations, 0u);
    EXPECT_TRUE(rep.first_violation.has_value());
}

TEST(AtomicFlag, IdxxchVariantIsSmallerAndCorrect) {
    auto plain = gen_atomic_flag(kBoth, 2, {});
    auto fast = gen_atomic_flag(kBoth, 2, ExtensionSet::parse("idxxch"));
    EXPECT_TRUE(fast.single_instruction);
    EXPECT_FALSE(plain.single_instruction);
    EXPECT_LT(fast.size_words, plain.size_words);
    EXPECT_LT(fast.tas_words + fast.clear_words, plain.tas_words + plain.clear_words);
    auto rep = check_mutual_exclusion(fast, 160, 2000);
    EXPECT_EQ(rep.violations, 0u) << rep.first_violation.value_or("");
    EXPECT_GT(rep.min_driver_entries, 0u);
}

TEST(AtomicFlag, FixtureIsDeterministic) {
    auto a = gen_atomic_flag(kBoth, 2, {});
    auto b = gen_atomic_flag(kBoth, 2, {});
    EXPECT_EQ(a.source, b.source);
    EXPECT_EQ(a.image, b.image);
}
