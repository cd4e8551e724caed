#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string output;
};

Run tsc(const std::string& args, const std::string& env = "") {
  const auto log = fs::temp_directory_path() / "tsc_cli_test.log";
  const std::string cmd = env + " " + TSC_CLI_PATH + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("tsc_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path tiny_hyperparams(const fs::path& dir) {
  const auto p = dir / "hp.json";
  std::ofstream(p) << R"({"episodes": 2, "episode_seconds": 120, "hidden": [16], "validation_episodes": 1})";
  return p;
}

}  // namespace

TEST(Cli, NoArgumentsPrintsUsage) {
  const auto r = tsc("");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.output.find("Usage"), std::string::npos);
}

TEST(Cli, UnknownSubcommandOrFlagFails) {
  EXPECT_NE(tsc("frobnicate").code, 0);
  const auto r = tsc("gradcheck --no-such-flag");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.output.find("Usage"), std::string::npos);
}

TEST(Cli, GradcheckPasses) {
  const auto r = tsc("gradcheck --trials 20");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("max relative gradient error"), std::string::npos);
}

TEST(Cli, MissingScenarioIsAnError) {
  const auto r = tsc("eval --controller pretimed --scenario /nonexistent.json --out " + fresh("missing").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("/nonexistent.json"), std::string::npos);
}

TEST(Cli, EvalIsByteStable) {
  const auto a = fresh("eval_a"), b = fresh("eval_b");
  ASSERT_EQ(tsc("eval --controller pretimed --reps 2 --seed 4 --out " + a.string()).code, 0);
  ASSERT_EQ(tsc("--reps 2 --seed 4 --out " + b.string() + " eval --controller pretimed").code, 0);
  const auto runs = slurp(a / "eval_runs.csv");
  EXPECT_EQ(runs, slurp(b / "eval_runs.csv"));
  EXPECT_EQ(slurp(a / "eval_summary.csv"), slurp(b / "eval_summary.csv"));
  EXPECT_EQ(runs.substr(0, runs.find('\n')),
            "scenario,controller,detection_rate,flow_scale,seed,wait_all,wait_detected,wait_undetected,trip_mean,"
            "departures");
}

TEST(Cli, OutputDirFromEnvironmentAndFlagWins) {
  const auto env_dir = fresh("env"), flag_dir = fresh("flag");
  ASSERT_EQ(tsc("eval --controller pretimed --reps 1", "TSC_OUT_DIR=" + env_dir.string()).code, 0);
  EXPECT_TRUE(fs::exists(env_dir / "eval_runs.csv"));
  ASSERT_EQ(tsc("eval --controller pretimed --reps 1 --out " + flag_dir.string(), "TSC_OUT_DIR=" + env_dir.string() + "/x")
                .code,
            0);
  EXPECT_TRUE(fs::exists(flag_dir / "eval_runs.csv"));
  EXPECT_FALSE(fs::exists(env_dir / "x"));
}

TEST(Cli, TrainThenEvaluateCheckpoint) {
  const auto dir = fresh("train");
  const auto hp = tiny_hyperparams(dir);
  const auto ckpt = dir / "net.qnet";
  ASSERT_EQ(tsc("train --scenario sparse --hyperparams " + hp.string() + " --checkpoint " + ckpt.string() +
                " --out " + dir.string())
                .code,
            0);
  EXPECT_TRUE(fs::exists(ckpt));
  const auto curve = slurp(dir / "learning_curve.csv");
  EXPECT_EQ(curve.substr(0, curve.find('\n')), "episode,mean_penalty,epsilon");
  const auto r = tsc("eval --scenario sparse --reps 1 --hyperparams " + hp.string() + " --checkpoint " +
                     ckpt.string() + " --out " + dir.string());
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(slurp(dir / "eval_runs.csv").find(",agent,"), std::string::npos);
  // a checkpoint whose shape does not match the hyperparameters is refused
  std::ofstream(dir / "wide.json") << R"({"hidden": [32, 32]})";
  EXPECT_EQ(tsc("eval --scenario sparse --reps 1 --hyperparams " + (dir / "wide.json").string() + " --checkpoint " +
                ckpt.string() + " --out " + dir.string())
                .code,
            1);
}

TEST(Cli, SweepDetectionWritesAndReusesCheckpoints) {
  const auto dir = fresh("sweep");
  const auto hp = tiny_hyperparams(dir);
  const std::string args = "sweep-detection --scenario sparse --rates 0,1 --reps 2 --hyperparams " + hp.string() +
                           " --checkpoint " + (dir / "agents").string() + " --out ";
  ASSERT_EQ(tsc(args + (dir / "a").string()).code, 0);
  EXPECT_TRUE(fs::exists(dir / "agents" / "sparse_p1_f1.qnet"));
  const auto again = tsc(args + (dir / "b").string());
  ASSERT_EQ(again.code, 0);
  EXPECT_EQ(again.output.find("training agent"), std::string::npos);
  EXPECT_EQ(slurp(dir / "a" / "detection_runs.csv"), slurp(dir / "b" / "detection_runs.csv"));
}
