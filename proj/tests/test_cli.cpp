#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int status = -1;
    std::string out;
    std::string err;
};

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("pdnsense_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    CliResult run(const std::string& args) const {
        const fs::path o = dir_ / "stdout.txt";
        const fs::path e = dir_ / "stderr.txt";
        const std::string cmd = "cd \"" + dir_.string() + "\" && \"" PDNSENSE_CLI_PATH "\" " + args + " > \"" +
                                o.string() + "\" 2> \"" + e.string() + "\"";
        CliResult r;
        const int raw = std::system(cmd.c_str());
        r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
        r.out = slurp(o);
        r.err = slurp(e);
        return r;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, HelpDocumentsDefaults) {
    const auto r = run("verify --help");
    EXPECT_EQ(r.status, 0);
    EXPECT_NE(r.out.find("--metric"), std::string::npos);
    EXPECT_NE(r.out.find("both"), std::string::npos);
    EXPECT_NE(r.out.find("--acq-seed"), std::string::npos);
}

TEST_F(Cli, EnrollVerifyExitCodes) {
    auto r = run("enroll --store st --traces 500 --key-seed 3");
    ASSERT_EQ(r.status, 0) << r.err;
    const auto sig = nlohmann::json::parse(r.out)["signature"].get<std::string>();
    ASSERT_TRUE(fs::exists(dir_ / sig));
    EXPECT_TRUE(fs::exists(dir_ / "st" / "index.json"));

    r = run("verify --signature " + sig + " --traces 500 --out clean");
    EXPECT_EQ(r.status, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir_ / "clean" / "verdict.json"));
    std::ifstream csv(dir_ / "clean" / "stats.csv");
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "# pdnsense-stats v1");
    std::getline(csv, line);
    EXPECT_EQ(line, "frequency_hz,t,w_distance,w_threshold,exceeded");
    while (std::getline(csv, line)) {
        const double t = std::stod(line.substr(line.find(',') + 1));
        EXPECT_LT(std::abs(t), 4.5);
    }

    r = run("verify --signature " + sig + " --traces 500");
    EXPECT_EQ(r.status, 1);
    EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "replay");

    r = run("enroll --store st --traces 500 --key-seed 3");
    EXPECT_EQ(r.status, 1);
    EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "duplicate");
}

TEST_F(Cli, TrojanExitsTwo) {
    auto r = run("enroll --store st --traces 500");
    ASSERT_EQ(r.status, 0) << r.err;
    const auto sig = nlohmann::json::parse(r.out)["signature"].get<std::string>();
    r = run("verify --signature " + sig + " --scenario trojan --traces 500 --out t");
    EXPECT_EQ(r.status, 2) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.out)["decision"], "tampered");
}

TEST_F(Cli, ErrorsNameTheParameter) {
    auto r = run("enroll --store st -N 65");
    EXPECT_EQ(r.status, 1);
    const auto j = nlohmann::json::parse(r.err);
    EXPECT_EQ(j["parameter"], "N");
    r = run("verify --signature missing.json");
    EXPECT_EQ(r.status, 1);
    EXPECT_EQ(nlohmann::json::parse(r.err)["parameter"], "signature");
    r = run("enroll --store st --traces 1");
    EXPECT_EQ(r.status, 1);
    EXPECT_EQ(nlohmann::json::parse(r.err)["parameter"], "traces");
    r = run("reproduce --case 7");
    EXPECT_EQ(r.status, 1);
    r = run("profile --out p.csv --config nowhere.json");
    EXPECT_EQ(r.status, 1);
    EXPECT_EQ(nlohmann::json::parse(r.err)["parameter"], "config");
}

TEST_F(Cli, ProfileAndScenarios) {
    auto r = run("profile --out p.csv --points 7");
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(slurp(dir_ / "p.csv").rfind("# pdnsense-profile v1\nfrequency_hz,re_ohm,im_ohm,source,observe\n", 0), 0u);
    r = run("scenarios");
    ASSERT_EQ(r.status, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_GE(j.size(), 6u);
    r = run("band --cavity 0.1 0.1 0.1 --count 5");
    ASSERT_EQ(r.status, 0);
    EXPECT_EQ(nlohmann::json::parse(r.out)["frequencies_hz"].size(), 5u);
}

TEST_F(Cli, ReproduceIsBitReproducible) {
    auto r = run("reproduce --case 4 --traces 100 --out a");
    ASSERT_EQ(r.status, 0) << r.err;
    r = run("reproduce --case 4 --traces 100 --out b");
    ASSERT_EQ(r.status, 0) << r.err;
    for (const char* f : {"stats_tampered.csv", "stats_clean.csv", "traces_golden.csv", "summary.json"})
        EXPECT_EQ(slurp(dir_ / "a" / "case4" / f), slurp(dir_ / "b" / "case4" / f)) << f;
}
