#include <gtest/gtest.h>

#include <cstdio>
#include <sys/wait.h>

#include "support.hpp"

using testing_support::TempDir;

namespace {

struct CliResult {
  int code = -1;
  std::string output;
};

/// Runs the CLI with stderr folded into stdout.
CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(TRANSCUT_CLI_PATH) + " " + args + " 2>&1";
  CliResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[512];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

void write_small_spec(const std::filesystem::path& p) {
  std::ofstream(p) << "width=64\nheight=64\ngrid_rows=3\ngrid_cols=3\nbackground.disparity=-4\n"
                      "region=disk 24 32 11\nregion.disparity=1\nregion.kappa2=1\n"
                      "occluder=rect 44 20 58 44 0\nseed=9\n";
}

}  // namespace

TEST(Cli, HelpListsSubcommands) {
  const CliResult r = run_cli("--help");
  EXPECT_EQ(r.code, 0);
  for (const char* sub : {"segment", "features", "flow", "synth", "eval"})
    EXPECT_NE(r.output.find(sub), std::string::npos) << sub;
}

TEST(Cli, SynthSegmentEvalEndToEnd) {
  TempDir tmp("cli");
  write_small_spec(tmp / "spec.txt");
  const std::string scene = (tmp / "batch" / "s1").string();
  CliResult r = run_cli("synth --spec " + (tmp / "spec.txt").string() + " --out " + scene + " --emit-flows");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(std::filesystem::exists(tmp / "batch" / "s1" / "manifest"));
  EXPECT_TRUE(std::filesystem::exists(tmp / "batch" / "s1" / "scene.txt"));
  EXPECT_TRUE(std::filesystem::exists(tmp / "batch" / "s1" / "flows" / "flow_f_1_1.flo"));

  r = run_cli("--threads 2 segment " + scene + " " + scene + " --flow-dir " + scene + "/flows");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(std::filesystem::exists(tmp / "batch" / "s1" / "mask.png"));

  r = run_cli("eval --pred " + scene + "/mask.png --gt " + scene + "/gt_mask.png --csv -");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("s1,pred,"), std::string::npos) << r.output;

  r = run_cli("eval --batch " + (tmp / "batch").string() + " --csv " + (tmp / "out.csv").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const std::string csv = testing_support::read_file(tmp / "out.csv");
  EXPECT_NE(csv.find("mean,transcut,"), std::string::npos) << csv;
  EXPECT_NE(csv.find("mean,threshold,"), std::string::npos) << csv;
}

TEST(Cli, CorruptManifestNamesTheLine) {
  TempDir tmp("climan");
  std::filesystem::create_directories(tmp / "lf");
  std::ofstream(tmp / "lf" / "manifest") << "grid_rows=3\ngrid_cols=3\nview zero\n";
  const CliResult r = run_cli("segment " + (tmp / "lf").string() + " " + (tmp / "out").string());
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.output.find("line 3"), std::string::npos) << r.output;
}

TEST(Cli, ConfigErrorsExitOneDataErrorsExitTwo) {
  TempDir tmp("clicodes");
  std::ofstream(tmp / "bad.cfg") << "alpha=1\nnonsense=2\n";
  CliResult r = run_cli("--config " + (tmp / "bad.cfg").string() + " segment " + tmp.path().string() + " " +
                  (tmp / "o").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("line 2"), std::string::npos) << r.output;

  EXPECT_EQ(run_cli("segment " + tmp.path().string() + " " + (tmp / "o").string() + " --beta -3").code, 1);
  EXPECT_EQ(run_cli("segment").code, 1);
  EXPECT_EQ(run_cli("eval --pred a.png").code, 1);

  r = run_cli("segment " + (tmp / "nothing").string() + " " + (tmp / "o").string());
  EXPECT_EQ(r.code, 2) << r.output;
}
