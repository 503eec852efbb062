#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
};

Result cli(const std::string& args) {
    std::string cmd = std::string(PDKKIT_CLI) + " " + args + " 2>/dev/null";
    Result r{-1, ""};
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    for (std::size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, n);
    int st = pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("pdkkit-cli-" + std::to_string(::getpid()) + "-" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string file(const std::string& name, const std::string& text) {
        auto p = dir_ / name;
        std::ofstream(p) << text;
        return p.string();
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

} // namespace

TEST_F(Cli, AssembleRunDisassemble) {
    auto src = file("t.pdkasm", ".arch pdk14\n mov a, #0x2a\n mov 0x08, a\n stopsys\n");
    auto img = path("t.img");
    ASSERT_EQ(cli("asm " + src + " -o " + img).code, 0);
    auto run = cli("run " + img + " --output 0x08:2");
    EXPECT_EQ(run.code, 0);
    EXPECT_NE(run.out.find("halt: halted"), std::string::npos) << run.out;
    EXPECT_NE(run.out.find("cycles: 3"), std::string::npos) << run.out;
    EXPECT_NE(run.out.find("0x2a 0x00"), std::string::npos) << run.out;
    auto dis = cli("disasm " + img);
    EXPECT_EQ(dis.code, 0);
    auto src2 = file("back.pdkasm", dis.out);
    auto img2 = path("back.img");
    ASSERT_EQ(cli("asm " + src2 + " -o " + img2).code, 0);
    EXPECT_EQ(cli("disasm " + img2).out, dis.out);
}

TEST_F(Cli, TraceJsonl) {
    auto src = file("t.pdkasm", "nop\nstopsys\n");
    auto img = path("t.img");
    ASSERT_EQ(cli("asm " + src + " -o " + img).code, 0);
    auto a = cli("run " + img + " --trace jsonl");
    auto b = cli("run " + img + " --trace jsonl");
    EXPECT_EQ(a.out, b.out);
    auto first = a.out.substr(0, a.out.find('\n'));
    EXPECT_EQ(nlohmann::json::parse(first).at("op"), "nop");
}

TEST_F(Cli, ExitCodes) {
    auto bad = file("bad.pdkasm", " frob a\n");
    EXPECT_EQ(cli("asm " + bad).code, 1);
    auto ok = file("ok.pdkasm", "nop\n");
    EXPECT_EQ(cli("asm " + ok + " --ext wobble").code, 2);
    EXPECT_EQ(cli("asm " + ok + " --arch pdk99").code, 2);
    EXPECT_EQ(cli("asm " + path("missing.pdkasm")).code, 2);
    EXPECT_EQ(cli("").code, 2);
    EXPECT_EQ(cli("frobnicate").code, 2);
    auto img13 = path("13.img");
    ASSERT_EQ(cli("asm " + ok + " --arch pdk13 -o " + img13).code, 0);
    EXPECT_EQ(cli("run " + img13 + " --cores 2").code, 2);
    auto fault = file("f.pdkasm", " mov a, 0x30\n stopsys\n");
    auto fimg = path("f.img");
    ASSERT_EQ(cli("asm " + fault + " -o " + fimg).code, 0);
    EXPECT_EQ(cli("run " + fimg + " --data-size 16").code, 1);
    EXPECT_EQ(cli("run " + fimg + " --data-size 16 --wrap-data").code, 0);
}

TEST_F(Cli, GapReport) {
    auto t = cli("gap-report --arch pdk13");
    EXPECT_EQ(t.code, 0);
    EXPECT_NE(t.out.find("35"), std::string::npos);
    auto j = cli("gap-report --arch pdk14 --format json");
    ASSERT_EQ(j.code, 0);
    auto js = nlohmann::json::parse(j.out);
    EXPECT_EQ(js.at("widest"), 88);
    EXPECT_EQ(cli("gap-report --arch pdk13 --ext idxsp").code, 1);
}

TEST_F(Cli, MapOverrideFromEnvironment) {
    auto m = cli("map --arch pdk14");
    ASSERT_EQ(m.code, 0);
    auto j = nlohmann::json::parse(m.out);
    EXPECT_TRUE(j.contains("entries"));
}

TEST_F(Cli, SizeCompare) {
    auto csv = cli("size-compare");
    ASSERT_EQ(csv.code, 0);
    EXPECT_EQ(csv.out.rfind("program,variant,extensions,mode,size_words,ratio", 0), 0u);
    auto cfg = file("c.json", R"({"configs":[{"variant":"pdk14","extensions":"spadd+sprel","mode":"all_reentrant"}]})");
    auto j = cli("size-compare --configs " + cfg + " --format json");
    ASSERT_EQ(j.code, 0);
    auto rows = nlohmann::json::parse(j.out).at("rows");
    ASSERT_FALSE(rows.empty());
    for (const auto& r : rows) EXPECT_LT(r.at("ratio").get<double>(), 1.0) << r.dump();
    EXPECT_EQ(cli("size-compare --corpus " + path("nope")).code, 2);
}
