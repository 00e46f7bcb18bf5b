#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code;
    std::string output;
};

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("lanarray_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path config(const nlohmann::json& j, const std::string& name = "cfg.json") {
        const fs::path p = dir_ / name;
        std::ofstream(p) << j.dump(2);
        return p;
    }

    CliResult run(const std::string& args) {
        const fs::path log = dir_ / "log.txt";
        const std::string cmd = std::string(LANARRAY_CLI) + " " + args + " > " + log.string() + " 2>&1";
        const int status = std::system(cmd.c_str());
        std::ifstream is(log);
        std::ostringstream ss;
        ss << is.rdbuf();
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
    }

    fs::path dir_;
};

} // namespace

TEST_F(Cli, UnknownModelIdExitsThree) {
    const auto c = config({{"model", "brownian_sheet"}, {"theta0", {1.0}}, {"n", {16}}});
    const CliResult r = run("simulate --config " + c.string() + " --out " + (dir_ / "out").string());
    EXPECT_EQ(r.code, 3) << r.output;
    EXPECT_NE(r.output.find("brownian_sheet"), std::string::npos) << r.output;
}

TEST_F(Cli, ThetaOutsideSpaceExitsThree) {
    const auto c = config({{"model", "white_noise"}, {"theta0", {-1.0}}, {"n", {16}}});
    EXPECT_EQ(run("simulate --config " + c.string() + " --out " + (dir_ / "out").string()).code, 3);
}

TEST_F(Cli, MissingDataFileExitsTwo) {
    const auto c = config({{"model", "white_noise"}, {"theta_init", {1.0}}, {"data", {"nowhere.bin"}}});
    const CliResult r = run("estimate --config " + c.string() + " --out " + (dir_ / "out").string());
    EXPECT_EQ(r.code, 2) << r.output;
}

TEST_F(Cli, MissingConfigExitsTwo) {
    EXPECT_EQ(run("simulate --config " + (dir_ / "absent.json").string()).code, 2);
    EXPECT_EQ(run("simulate").code, 2);
}

TEST_F(Cli, UnknownAuditExitsTwo) {
    const auto c = config({{"model", "white_noise"}, {"theta0", {1.0}}});
    EXPECT_EQ(run("audit nonsense --config " + c.string() + " --out " + (dir_ / "out").string()).code, 2);
}

TEST_F(Cli, OversizedTraceIsInconclusive) {
    const auto c = config({{"model", "white_noise"}, {"theta0", {1.0}}, {"audit", {{"n_grid", {64, 128}}}}});
    const CliResult r = run("audit trace --config " + c.string() + " --out " + (dir_ / "out").string() + " --max-n 64");
    EXPECT_EQ(r.code, 4) << r.output;
    std::ifstream is(dir_ / "out" / "report.json");
    const auto j = nlohmann::json::parse(is);
    EXPECT_EQ(j["verdict"], "inconclusive");
}

TEST_F(Cli, DahlhausAuditPasses) {
    const auto c = config({{"audit", {{"n_grid", {16, 32, 64, 128, 256, 512, 1024}}}}});
    const CliResult r = run("audit dahlhaus --config " + c.string() + " --out " + (dir_ / "out").string());
    EXPECT_EQ(r.code, 0) << r.output;
    EXPECT_TRUE(fs::exists(dir_ / "out" / "summary.txt"));
    EXPECT_TRUE(fs::exists(dir_ / "out" / "manifest.json"));
}

TEST_F(Cli, SimulateWritesPathAndManifest) {
    const auto c = config({{"model", "white_noise"}, {"theta0", {1.0}}, {"n", {32}}, {"replications", 1}, {"seed", 5}});
    const fs::path out = dir_ / "out";
    const CliResult r = run("simulate --config " + c.string() + " --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_TRUE(fs::exists(out / "paths" / "n32_r0.bin"));
    std::ifstream is(out / "manifest.json");
    const auto m = nlohmann::json::parse(is);
    EXPECT_TRUE(m.contains("config_hash"));
    EXPECT_EQ(fs::file_size(out / "paths" / "n32_r0.bin") % 8, 0u);
}

TEST_F(Cli, SeedOverrideChangesPaths) {
    const auto c = config({{"model", "white_noise"}, {"theta0", {1.0}}, {"n", {32}}, {"seed", 5}});
    ASSERT_EQ(run("simulate --config " + c.string() + " --out " + (dir_ / "a").string()).code, 0);
    ASSERT_EQ(run("simulate --config " + c.string() + " --out " + (dir_ / "b").string() + " --seed 6").code, 0);
    auto bytes = [](const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        std::ostringstream ss;
        ss << is.rdbuf();
        return ss.str();
    };
    EXPECT_NE(bytes(dir_ / "a" / "paths" / "n32_r0.bin"), bytes(dir_ / "b" / "paths" / "n32_r0.bin"));
}

TEST_F(Cli, FisherTableHasLimitRows) {
    const auto c = config({{"model", {{"id", "ar1_mild"}, {"alpha", 0.15}}}, {"theta0", {1.0, 1.0}}, {"n", {256}}});
    const fs::path out = dir_ / "out";
    const CliResult r = run("fisher --config " + c.string() + " --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.output;
    std::ifstream is(out / "fisher.csv");
    std::string line, all;
    bool saw_limit = false;
    while (std::getline(is, line)) {
        all += line + "\n";
        if (line.rfind("256,limit,c,c,", 0) == 0) {
            saw_limit = true;
            EXPECT_NEAR(std::stod(line.substr(line.rfind(',') + 1)), 0.5, 1e-12);
        }
    }
    EXPECT_TRUE(saw_limit) << all;
}

TEST_F(Cli, EstimateFromDataFiles) {
    const auto sim = config({{"model", "white_noise"}, {"theta0", {2.0}}, {"n", {200}}, {"seed", 3}}, "sim.json");
    ASSERT_EQ(run("simulate --config " + sim.string() + " --out " + (dir_ / "sim").string()).code, 0);
    const auto est = config({{"model", "white_noise"}, {"theta_init", {1.0}}, {"data", {"sim/paths/n200_r0.bin"}}}, "est.json");
    const CliResult r = run("estimate --config " + est.string() + " --out " + (dir_ / "est").string());
    ASSERT_EQ(r.code, 0) << r.output;
    std::ifstream is(dir_ / "est" / "records.jsonl");
    std::string line;
    ASSERT_TRUE(std::getline(is, line));
    const auto j = nlohmann::json::parse(line);
    EXPECT_NEAR(j["theta_hat"][0].get<double>(), 2.0, 0.6);
}
