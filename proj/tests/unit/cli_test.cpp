#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

const std::string kCli = LAGBIAS_CLI_PATH;
const std::string kData = LAGBIAS_DATA_DIR;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  Result r;
  const std::string cmd = kCli + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("lagbias-cli-" + name);
  fs::remove_all(p);
  return p;
}

TEST(Cli, ValidatePrintsTotals) {
  const auto r = run("validate");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("688 laureates, 21 female"), std::string::npos) << r.out;
}

TEST(Cli, HelpExitsZero) {
  const auto r = run("--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("sample"), std::string::npos);
  EXPECT_EQ(run("sample --help").code, 0);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("sample --delta 21").code, 1);
  EXPECT_EQ(run("sample --chains 0").code, 1);
}

TEST(Cli, MissingFileIsDataError) {
  const auto r = run("validate --laureates /nonexistent/laureates.csv");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("/nonexistent/laureates.csv"), std::string::npos) << r.out;
}

TEST(Cli, CorruptedRowReportsLine) {
  const auto dir = scratch("corrupt");
  fs::create_directories(dir);
  std::ifstream in(kData + "/laureates.csv");
  std::ofstream out(dir / "laureates.csv");
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    out << (n == 5 ? "1902,physics,two,0" : line) << "\n";
  }
  out.close();
  const auto r = run("validate --laureates " + (dir / "laureates.csv").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find(":5:"), std::string::npos) << r.out;
  fs::remove_all(dir);
}

TEST(Cli, FitRatiosWritesCurvesAndManifest) {
  const auto dir = scratch("fit");
  const auto r = run("fit-ratios --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto curves = json::parse(slurp(dir / "curves.json"));
  EXPECT_EQ(curves["groups"].size(), 3u);
  const auto manifest = json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["metadata"]["command"], "fit-ratios");
  EXPECT_EQ(manifest["outputs"][0], "curves.json");
  EXPECT_EQ(manifest["metadata"]["inputs"]["ratios"]["fnv1a64"].get<std::string>().size(), 16u);
  fs::remove_all(dir);
}

TEST(Cli, OutDirectoryFromEnvironment) {
  const auto dir = scratch("env");
  const std::string cmd = "LAGBIAS_OUT=" + dir.string() + " " + kCli + " prior --prior-draws 100 >/dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "prior.json"));
  EXPECT_TRUE(fs::exists(dir / "prior_draws.csv"));
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  fs::remove_all(dir);
}

TEST(Cli, SampleIsDeterministic) {
  const auto a = scratch("sample-a"), b = scratch("sample-b");
  const std::string args = " --delta 10 --seed 1 --chains 4 --warmup 300 --draws 300 --prior-draws 2000";
  ASSERT_EQ(run("sample --out " + a.string() + args).code, 0);
  ASSERT_EQ(run("sample --out " + b.string() + args).code, 0);
  EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
  EXPECT_EQ(slurp(a / "draws.json"), slurp(b / "draws.json"));
  for (const char* f : {"draws.json", "summary.json", "fig1.json", "fig2.json", "fig3.json", "manifest.json"})
    EXPECT_TRUE(fs::exists(a / f)) << f;
  const auto seeded = scratch("sample-c");
  ASSERT_EQ(run("sample --out " + seeded.string() + " --delta 10 --seed 2 --chains 4 --warmup 300 --draws 300 --prior-draws 2000").code, 0);
  EXPECT_NE(slurp(a / "summary.json"), slurp(seeded / "summary.json"));
  for (const auto& d : {a, b, seeded}) fs::remove_all(d);
}

TEST(Cli, SweepWritesEightyFourRows) {
  const auto a = scratch("sweep-a"), b = scratch("sweep-b");
  const std::string args = " --delta-min 0 --delta-max 20 --warmup 150 --draws 150 --chains 2";
  ASSERT_EQ(run("sweep --jobs 4 --out " + a.string() + args).code, 0);
  ASSERT_EQ(run("sweep --jobs 1 --out " + b.string() + args).code, 0);
  const auto csv = slurp(a / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 85);
  EXPECT_EQ(csv, slurp(b / "sweep.csv"));
  EXPECT_TRUE(fs::exists(a / "fig4.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, InvertedDeltaRangeIsUsageError) {
  EXPECT_EQ(run("sweep --delta-min 5 --delta-max 3").code, 1);
}

}  // namespace
