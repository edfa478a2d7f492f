#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

// Spawns the real binary: exit-code conventions are part of the interface.

namespace {

struct CmdResult {
    int exit_code;
    std::string out;
};

const char* binary_path() { return std::getenv("ROTCFI_SIM_BIN"); }

CmdResult run_cli(const std::string& args) {
    const std::string cmd = std::string(binary_path()) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    EXPECT_NE(pipe, nullptr);
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string temp_file(const std::string& stem) {
    static int counter = 0;
    return (std::filesystem::temp_directory_path() /
            (stem + "." + std::to_string(getpid()) + "." + std::to_string(counter++) + ".log"))
        .string();
}

#define REQUIRE_BINARY() \
    if (binary_path() == nullptr) GTEST_SKIP() << "ROTCFI_SIM_BIN not set; run through ctest"

}  // namespace

TEST(Cli, ProfilesPrintsTableTotals) {
    REQUIRE_BINARY();
    const CmdResult r = run_cli("profiles");
    EXPECT_EQ(r.exit_code, 0);
    for (const char* needle : {"258", "276", "103", "121", "64", "82", "267", "112", "73"})
        EXPECT_NE(r.out.find(needle), std::string::npos) << needle;
}

TEST(Cli, GenBalancedEmitsWellNestedTrace) {
    REQUIRE_BINARY();
    const CmdResult r = run_cli("gen balanced --depth 2 --width 2");
    EXPECT_EQ(r.exit_code, 0);
    std::size_t lines = 0;
    for (const char c : r.out) lines += c == '\n';
    EXPECT_EQ(lines, 12u);  // 6 calls + 6 returns
}

TEST(Cli, SimulateJsonHappyPath) {
    REQUIRE_BINARY();
    const std::string trace = temp_file("gap");
    ASSERT_EQ(run_cli("gen gap --n 100 --gap 1000 --output " + trace).exit_code, 0);
    const CmdResult r =
        run_cli("simulate --trace " + trace + " --profile optimized --queue-depth 8 --format json");
    EXPECT_EQ(r.exit_code, 0);
    const nlohmann::json j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["schema"], 1);
    EXPECT_EQ(j["slowdown"]["numerator"], 0);
    EXPECT_EQ(j["cf_events"]["total"], 200);
    std::filesystem::remove(trace);
}

TEST(Cli, AttackDetectionExitsThree) {
    REQUIRE_BINARY();
    const std::string trace = temp_file("balanced");
    ASSERT_EQ(run_cli("gen balanced --depth 3 --width 2 --output " + trace).exit_code, 0);
    const CmdResult r = run_cli("attack --trace " + trace + " --corrupt-return-at 5 --format json");
    EXPECT_EQ(r.exit_code, 3);
    const nlohmann::json j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j["violations"].size(), 1u);
    EXPECT_EQ(j["violations"][0]["detail"], "return_mismatch");
    EXPECT_EQ(j["violations"][0]["record_index"], j["corrupted_record_index"]);
    std::filesystem::remove(trace);
}

TEST(Cli, ClassifyCountMatchesReport) {
    REQUIRE_BINARY();
    const std::string trace = temp_file("classify");
    ASSERT_EQ(run_cli("gen balanced --depth 2 --width 3 --output " + trace).exit_code, 0);
    const CmdResult cls = run_cli("classify --trace " + trace);
    EXPECT_EQ(cls.exit_code, 0);
    const auto pos = cls.out.rfind("total ");
    ASSERT_NE(pos, std::string::npos);
    const long classify_count = std::stol(cls.out.substr(pos + 6));

    const CmdResult sim = run_cli("simulate --trace " + trace + " --format json");
    const nlohmann::json j = nlohmann::json::parse(sim.out);
    EXPECT_EQ(j["cf_events"]["total"].get<long>(), classify_count);
    std::filesystem::remove(trace);
}

TEST(Cli, CompareSweepsProfilesAndDepths) {
    REQUIRE_BINARY();
    const std::string trace = temp_file("compare");
    ASSERT_EQ(run_cli("gen gap --n 20 --gap 100 --output " + trace).exit_code, 0);
    const CmdResult r = run_cli("compare --trace " + trace + " --format json");
    EXPECT_EQ(r.exit_code, 0);
    const nlohmann::json j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["runs"].size(), 6u);  // 3 profiles x depths {1, 8}
    EXPECT_EQ(j["runs"][0]["key"], "optimized/d1");
    std::filesystem::remove(trace);
}

TEST(Cli, UsageErrorsExitTwo) {
    REQUIRE_BINARY();
    EXPECT_EQ(run_cli("simulate").exit_code, 2);                          // missing --trace
    EXPECT_EQ(run_cli("simulate --trace /no/such/file.log").exit_code, 2);
    EXPECT_EQ(run_cli("frobnicate").exit_code, 2);                        // unknown subcommand
    EXPECT_EQ(run_cli("gen spiral").exit_code, 2);                        // unknown pattern
}

TEST(Cli, UnknownProfileExitsTwo) {
    REQUIRE_BINARY();
    const std::string trace = temp_file("prof");
    ASSERT_EQ(run_cli("gen burst --n 3 --output " + trace).exit_code, 0);
    EXPECT_EQ(run_cli("simulate --trace " + trace + " --profile warp9").exit_code, 2);
    std::filesystem::remove(trace);
}

TEST(Cli, ProfileDirEnvLookup) {
    REQUIRE_BINARY();
    const std::string dir = std::filesystem::temp_directory_path().string();
    const std::string profile_path = dir + "/slowcheck.profile";
    std::ofstream(profile_path) << "call_cycles = 10\nreturn_cycles = 20\n";
    const std::string trace = temp_file("env");
    ASSERT_EQ(run_cli("gen gap --n 5 --gap 100 --output " + trace).exit_code, 0);
    const std::string cmd = "ROT_CFI_SIM_PROFILE_DIR=" + dir + " " + binary_path() +
                            " simulate --trace " + trace + " --profile slowcheck --format json";
    FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
    ASSERT_NE(pipe, nullptr);
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    EXPECT_EQ(WEXITSTATUS(pclose(pipe)), 0);
    EXPECT_EQ(nlohmann::json::parse(out)["config"]["profile"], "slowcheck");
    std::filesystem::remove(profile_path);
    std::filesystem::remove(trace);
}
