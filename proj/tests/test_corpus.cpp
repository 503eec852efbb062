#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace pdkkit;

namespace {

const std::vector<CorpusProgram>& corpus() {
    static const auto c = load_corpus(std::filesystem::path(PDKKIT_SOURCE_DIR) / "corpus");
    return c;
}

const SizeComparison& sizes() {
    static const auto sc = size_compare(corpus(), default_configs());
    return sc;
}

const ExtensionSet kSpSp = ExtensionSet::parse("spadd+sprel");

} // namespace

TEST(Corpus, LoadsSortedWithExpectations) {
    ASSERT_GE(corpus().size(), 4u);
    for (std::size_t i = 1; i < corpus().size(); ++i) EXPECT_LT(corpus()[i - 1].name, corpus()[i].name);
    for (const auto& p : corpus()) EXPECT_FALSE(p.expect.empty()) << p.name;
}

TEST(Corpus, MissingDirectoryRaises) {
    EXPECT_THROW(load_corpus("/nonexistent/pdkkit-corpus"), Error);
}

TEST(Corpus, EveryProgramRunsCorrectlyUnderEveryConfig) {
    for (const auto& c : default_configs())
        for (const auto& p : corpus()) {
            auto bad = check_program(p, c);
            EXPECT_TRUE(bad.empty()) << to_string(c.variant) << " " << c.extensions.str() << " " << to_string(c.mode)
                                     << ": " << (bad.empty() ? "" : bad.front());
        }
}

TEST(Corpus, BaselineRowsHaveUnitRatio) {
    for (const auto& r : sizes().rows) {
        if (r.config.extensions.none()) {
            EXPECT_DOUBLE_EQ(r.ratio, 1.0) << r.program;
        }
    }
}

TEST(Corpus, ReentrantCodeIsLargerThanStaticOnBaseline) {
    for (auto v : oracle::variants())
        EXPECT_GT(sizes().total(v, {}, Reentrancy::all_reentrant), sizes().total(v, {}, Reentrancy::static_locals))
            << to_string(v);
}

TEST(Corpus, StackExtensionsHelpReentrantCodeMore) {
    for (auto v : oracle::variants()) {
        double re = sizes().reduction(v, kSpSp, Reentrancy::all_reentrant);
        double st = sizes().reduction(v, kSpSp, Reentrancy::static_locals);
        EXPECT_GT(re, st) << to_string(v);
        EXPECT_GT(re, 0.0) << to_string(v);
    }
}

TEST(Corpus, ReentrantReductionGrowsWithVariant) {
    double r13 = sizes().reduction(Variant::pdk13, kSpSp, Reentrancy::all_reentrant);
    double r14 = sizes().reduction(Variant::pdk14, kSpSp, Reentrancy::all_reentrant);
    double r15 = sizes().reduction(Variant::pdk15, kSpSp, Reentrancy::all_reentrant);
    EXPECT_LE(r13, r14);
    EXPECT_LE(r14, r15);
}

TEST(Corpus, DisassemblyFixedPoint) {
    for (const auto& c : default_configs())
        for (const auto& p : corpus()) {
            auto img = assemble_program(p, c);
            auto text = disassemble(img);
            auto again = assemble(text);
            ASSERT_EQ(again.words, img.words) << p.name << " " << c.extensions.str();
            ASSERT_EQ(disassemble(again), text) << p.name;
        }
}

TEST(Corpus, ShippedConfigsMatchDefaults) {
    std::ifstream in(std::filesystem::path(PDKKIT_SOURCE_DIR) / "corpus" / "configs.json");
    ASSERT_TRUE(in);
    auto cs = configs_from_json(nlohmann::json::parse(in));
    EXPECT_EQ(configs_to_json(cs), configs_to_json(default_configs()));
}

TEST(Corpus, ConfigJsonRejectsGarbage) {
    EXPECT_THROW(configs_from_json(nlohmann::json::parse(R"({"configs":[{"variant":"pdk14"}]})")), Error);
    EXPECT_THROW(configs_from_json(nlohmann::json::parse(R"({"configs":[{"variant":"pdk99","extensions":"","mode":"static_locals"}]})")),
                 Error);
}

TEST(Corpus, CsvShape) {
    auto csv = sizes().csv();
    EXPECT_EQ(csv.rfind("program,variant,extensions,mode,size_words,ratio\n", 0), 0u);
    auto lines = std::count(csv.begin(), csv.end(), '\n');
    EXPECT_EQ(static_cast<std::size_t>(lines), sizes().rows.size() + 1);
}

TEST(Corpus, InlineTemplate) {
    auto p = make_program("tiny", "@func main 0 1\n mov a, #3\n @st l0\n @ld l0\n mov 0x08, a\n stopsys\n@expect 0x08 3\n");
    ASSERT_EQ(p.expect.size(), 1u);
    for (auto m : {Reentrancy::static_locals, Reentrancy::all_reentrant})
        EXPECT_TRUE(check_program(p, {Variant::pdk14, {}, m}).empty()) << to_string(m);
}

TEST(Corpus, ReductionWithoutListedBaseline) {
    auto sc = size_compare(corpus(), {{Variant::pdk14, kSpSp, Reentrancy::all_reentrant}});
    EXPECT_EQ(sc.rows.size(), corpus().size());
    EXPECT_DOUBLE_EQ(sc.reduction(Variant::pdk14, kSpSp, Reentrancy::all_reentrant),
                     sizes().reduction(Variant::pdk14, kSpSp, Reentrancy::all_reentrant));
}
