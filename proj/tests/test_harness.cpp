#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "qpkid/harness.hpp"

using namespace qpkid;
using namespace qpkid::harness;

namespace {

RunConfig config(std::string command) {
    RunConfig c;
    c.command = std::move(command);
    return c;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

int cli(const std::string& args) {
    const std::string cmd = std::string(QPKID_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Table, CsvAndJson) {
    Table t{{"t", "x", "name"}, {{1LL, 0.1234567891234, std::string("a")}}};
    EXPECT_EQ(t.csv(), "t,x,name\n1,0.123456789,a\n");
    const auto j = nlohmann::json::parse(t.json());
    EXPECT_EQ(j[0]["t"], 1);
    EXPECT_DOUBLE_EQ(j[0]["x"].get<double>(), 0.123456789123);
}

TEST(Keygen, PrivateAndPublic) {
    auto c = config("keygen");
    c.r = 3;
    c.s = 4;
    c.seed = 7;
    const auto priv = run(c);
    ASSERT_EQ(priv.exit_code, kSuccess);
    EXPECT_EQ(nlohmann::json::parse(priv.output)["xs"].size(), 4u);
    c.public_only = true;
    const auto pub = nlohmann::json::parse(run(c).output);
    EXPECT_FALSE(pub.contains("xs"));
    EXPECT_EQ(pub["p"], 4);
}

TEST(Keygen, MissingFlagsAreConfigErrors) {
    auto c = config("keygen");
    c.r = 3;
    EXPECT_EQ(run(c).exit_code, kInvalidConfig);
    c.s = 2;
    EXPECT_EQ(run(c).exit_code, kInvalidConfig);  // no seed
    c.seed = 1;
    c.r = 0;
    EXPECT_EQ(run(c).exit_code, kInvalidConfig);
    EXPECT_EQ(run(config("no-such-command")).exit_code, kInvalidConfig);
}

TEST(RunHonest, ExactAccepts) {
    auto c = config("run-honest");
    c.r = 2;
    c.s = 3;
    c.seed = 1;
    c.trials = 3;
    const auto res = run(c);
    EXPECT_EQ(res.exit_code, kSuccess);
    const auto ls = lines(res.output);
    ASSERT_EQ(ls.size(), 3u * 5u);
    const auto verdict = nlohmann::json::parse(ls[4]);
    EXPECT_EQ(verdict["verdict"], "accept");
    EXPECT_DOUBLE_EQ(verdict["accept_probability"].get<double>(), 1.0);
    const auto round = nlohmann::json::parse(ls[1]);
    EXPECT_TRUE(round["response_bit"].is_null());
    EXPECT_DOUBLE_EQ(round["p_response_0"].get<double>(), 0.5);
}

TEST(RunHonest, SampledThousandSessionsAllAccept) {
    auto c = config("run-honest");
    c.r = 3;
    c.s = 4;
    c.seed = 2024;
    c.trials = 1000;
    c.mode = protocol::Mode::sampled;
    const auto res = run(c);
    EXPECT_EQ(res.exit_code, kSuccess);
    EXPECT_EQ(res.message, "1000/1000 sessions accepted");
}

TEST(RunHonest, RefusalAfterRSessions) {
    auto c = config("run-honest");
    c.r = 2;
    c.s = 2;
    c.seed = 3;
    c.sessions = 3;
    const auto res = run(c);
    EXPECT_EQ(res.exit_code, kRefusal);
    const auto ls = lines(res.output);
    const auto last = nlohmann::json::parse(ls.back());
    EXPECT_EQ(last["session_id"], "trial-0/session-2");
    EXPECT_TRUE(last.contains("refusal"));
    EXPECT_EQ(ls.size(), 2u * 4u + 1u);
}

TEST(RunHonest, KeyFileRoundTrip) {
    auto g = config("keygen");
    g.r = 2;
    g.s = 3;
    g.seed = 11;
    auto c = config("run-honest");
    c.key_json = run(g).output;
    c.seed = 0;
    c.mode = protocol::Mode::sampled;
    const auto res = run(c);
    EXPECT_EQ(res.exit_code, kSuccess);
    EXPECT_EQ(nlohmann::json::parse(lines(res.output)[0])["s"], 3);

    c.key_json = "{not json";
    EXPECT_EQ(run(c).exit_code, kInvalidConfig);
}

TEST(RunHonest, DeterministicUnderFixedSeed) {
    auto c = config("run-honest");
    c.r = 3;
    c.s = 5;
    c.seed = 99;
    c.trials = 4;
    c.sessions = 3;
    c.mode = protocol::Mode::sampled;
    EXPECT_EQ(run(c).output, run(c).output);
    auto d = c;
    d.seed = 100;
    EXPECT_NE(run(c).output, run(d).output);
}

TEST(RunAttack, ExactTable) {
    auto c = config("run-attack");
    c.t_max = 3;
    c.s = 16;
    const auto res = run(c);
    ASSERT_EQ(res.exit_code, kSuccess) << res.message;
    const auto ls = lines(res.output);
    ASSERT_EQ(ls.size(), 4u);
    EXPECT_EQ(ls[0], "t,p_pass,cheat_guess,bound,fool_prob_s");
    EXPECT_EQ(ls[1], "1,0.875,0.875,0.9375,0.35607413");
}

TEST(RunAttack, SampledNeedsSeedAndAgrees) {
    auto c = config("run-attack");
    c.t = 1;
    c.mode = protocol::Mode::sampled;
    c.trials = 4000;
    EXPECT_EQ(run(c).exit_code, kInvalidConfig);
    c.seed = 5;
    c.output_format = OutputFormat::json;
    const auto j = nlohmann::json::parse(run(c).output);
    const double p = j[0]["p_pass"], exact = j[0]["p_pass_exact"], sigma = j[0]["sigma"];
    EXPECT_NEAR(p, exact, 4 * sigma);
}

TEST(RunAttack, RejectsConflictingFlags) {
    auto c = config("run-attack");
    c.t = 1;
    c.t_max = 3;
    EXPECT_EQ(run(c).exit_code, kInvalidConfig);
}

TEST(PsuccTable, FormulaEqualsOracle) {
    auto c = config("psucc-table");
    c.t_max = 8;
    c.output_format = OutputFormat::json;
    const auto j = nlohmann::json::parse(run(c).output);
    ASSERT_EQ(j.size(), 8u);
    for (const auto& row : j) {
        EXPECT_NEAR(row["formula"].get<double>(), row["oracle"].get<double>(), 1e-9);
        EXPECT_LE(row["formula"].get<double>(), row["cheung"].get<double>());
    }
}

TEST(Bounds, AdvisorAndSweep) {
    auto c = config("bounds");
    c.r = 2;
    c.epsilon = 0.01;
    EXPECT_EQ(run(c).output, "r,epsilon,variant,s_min\n2,0.01,standard,83\n");
    c.s = 3;
    EXPECT_EQ(run(c).exit_code, kInvalidConfig);
    c.epsilon.reset();
    c.s.reset();
    c.s_max = 5;
    EXPECT_EQ(lines(run(c).output).size(), 6u);
    c.t = 1;
    EXPECT_EQ(lines(run(c).output)[0], "r,s,t,variant,chain_sum,chain_bound,bound");
    c.t = 2;
    EXPECT_EQ(run(c).exit_code, kInvalidConfig);
}

TEST(VerifyIdentities, AllPass) {
    const auto res = run(config("verify-identities"));
    EXPECT_EQ(res.exit_code, kSuccess) << res.output;
    for (const auto& l : lines(res.output)) EXPECT_EQ(l.substr(0, 5), "PASS ");
    for (const auto& chk : verify_identities(4)) EXPECT_TRUE(chk.passed()) << chk.name;
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(cli("keygen --r 2 --s 3 --seed 1"), 0);
    EXPECT_EQ(cli("keygen --r 2 --s 3"), 4);
    EXPECT_EQ(cli("keygen --r 2 --s 3 --seed 1 --variant odd"), 4);
    EXPECT_EQ(cli("run-honest --r 2 --s 2 --seed 1 --sessions 3"), 3);
    EXPECT_EQ(cli("run-honest --r 2 --s 2 --seed 1 --sessions 2 --mode sampled"), 0);
    EXPECT_EQ(cli("bounds --r 2 --epsilon 0.01"), 0);
    EXPECT_EQ(cli("no-such"), 4);
}

TEST(Cli, WritesOutputFile) {
    const auto dir = std::filesystem::temp_directory_path() / "qpkid_cli_test";
    std::filesystem::create_directories(dir);
    const auto key = dir / "key.json";
    ASSERT_EQ(cli("keygen --r 2 --s 3 --seed 4 --out " + key.string()), 0);
    EXPECT_EQ(cli("run-honest --key " + key.string() + " --seed 1"), 0);
    EXPECT_EQ(cli("run-honest --key " + (dir / "missing.json").string() + " --seed 1"), 4);
    std::ifstream in(key);
    nlohmann::json j;
    in >> j;
    EXPECT_EQ(j["r"], 2);
    std::filesystem::remove_all(dir);
}
