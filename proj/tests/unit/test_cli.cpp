#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "refmap/cli.hpp"

namespace fs = std::filesystem;
using refmap::cli::run;

namespace {

const std::vector<std::string> kSmall{"--override", "environment.width=24",  "--override", "environment.height=24",
                                      "--override", "environment.per_wall=4", "--override", "online.users=4"};

std::vector<std::string> cmd(std::string sub, const fs::path& out, std::vector<std::string> extra = {}) {
    std::vector<std::string> a{std::move(sub), "--out", out.string()};
    a.insert(a.end(), kSmall.begin(), kSmall.end());
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        root_ = fs::temp_directory_path() / ("refmap_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(root_);
    }
    void TearDown() override { fs::remove_all(root_); }
    fs::path root_;
};

}  // namespace

TEST_F(Cli, PipelineProducesItsFiles) {
    ASSERT_EQ(run(cmd("simulate", root_, {"--seed", "5"})), refmap::cli::kExitOk);
    ASSERT_EQ(run(cmd("build-map", root_, {"--seed", "5"})), refmap::cli::kExitOk);
    ASSERT_EQ(run(cmd("localize", root_, {"--seed", "5"})), refmap::cli::kExitOk);
    for (const char* f : {"environment.txt", "offline_measurements.csv", "online_measurements.csv", "map_field.rmgrid",
                          "sheaf_mask.rmgrid", "sheaf.json", "convergence.csv", "localization.csv",
                          "manifest_simulate.json", "manifest_localize.json"}) {
        EXPECT_TRUE(fs::exists(root_ / f)) << f;
    }
    const auto manifest = nlohmann::json::parse(slurp(root_ / "manifest_build-map.json"));
    EXPECT_EQ(manifest["seed"], 5);
    EXPECT_EQ(manifest["command"], "build-map");
}

TEST_F(Cli, SameSeedGivesIdenticalFiles) {
    ASSERT_EQ(run(cmd("simulate", root_ / "a", {"--seed", "9"})), 0);
    ASSERT_EQ(run(cmd("simulate", root_ / "b", {"--seed", "9", "--threads", "1"})), 0);
    ASSERT_EQ(run(cmd("simulate", root_ / "c", {"--seed", "10"})), 0);
    for (const char* f : {"environment.txt", "offline_measurements.csv", "online_measurements.csv"}) {
        EXPECT_EQ(slurp(root_ / "a" / f), slurp(root_ / "b" / f)) << f;
    }
    EXPECT_NE(slurp(root_ / "a" / "online_measurements.csv"), slurp(root_ / "c" / "online_measurements.csv"));
}

TEST_F(Cli, ConfigProblemsExitWithTwo) {
    EXPECT_EQ(run(std::vector<std::string>{}), refmap::cli::kExitConfig);
    EXPECT_EQ(run({"frobnicate"}), refmap::cli::kExitConfig);
    EXPECT_EQ(run(cmd("simulate", root_, {"--override", "offline.alpha=3"})), refmap::cli::kExitConfig);
    EXPECT_EQ(run(cmd("simulate", root_, {"--override", "no.such.key=1"})), refmap::cli::kExitConfig);
    EXPECT_EQ(run(cmd("simulate", root_, {"--config", (root_ / "missing.json").string()})), refmap::cli::kExitConfig);
}

TEST_F(Cli, MissingInputsExitWithThree) {
    EXPECT_EQ(run(cmd("build-map", root_)), refmap::cli::kExitRuntime);
    EXPECT_EQ(run(cmd("localize", root_)), refmap::cli::kExitRuntime);
}

TEST_F(Cli, OutputRootComesFromTheEnvironment) {
    ::setenv(refmap::cli::kOutputRootVar, root_.c_str(), 1);
    std::vector<std::string> a{"bounds", "--override", "bounds.monte_carlo=false"};
    const int code = run(a);
    ::unsetenv(refmap::cli::kOutputRootVar);
    ASSERT_EQ(code, 0);
    EXPECT_TRUE(fs::exists(root_ / "bound_sweep.csv"));
    EXPECT_TRUE(fs::exists(root_ / "manifest_bounds.json"));
}
