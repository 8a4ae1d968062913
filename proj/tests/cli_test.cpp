#include <gtest/gtest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "test_util.hpp"

namespace dt = difftomo;
using testutil::CliResult;
using testutil::run_cli;
using testutil::slurp;
using testutil::TempDir;

namespace {

const char* kLine4Topo =
    "node s\nnode a\nnode b\nnode r\n"
    "link s a\nlink a r\nlink a b\nlink b r\n"
    "source s\nreceiver r\n";
const char* kLine4Paths = "path 1 2\npath 1 3 4\n";

std::vector<std::string> data_rows(const std::string& csv) {
  std::vector<std::string> rows;
  std::istringstream in(csv);
  std::string line;
  bool seen_header = false;
  while (std::getline(in, line)) {
    if (line.rfind("scheme,", 0) == 0) {
      seen_header = true;
      continue;
    }
    if (seen_header && !line.empty() && line[0] != '#') rows.push_back(line);
  }
  return rows;
}

std::string field(const std::string& row, int idx) {
  std::istringstream in(row);
  std::string token;
  for (int i = 0; i <= idx; ++i) std::getline(in, token, ',');
  return token;
}

}  // namespace

TEST(CliAnalyze, DiamondReportGolden) {
  TempDir tmp;
  const std::string topo = tmp.file("d.topo", testutil::kDiamond4Topo);
  const std::string paths = tmp.file("d.paths", testutil::kDiamond4Paths);
  const CliResult r = run_cli("analyze --topology " + topo + " --paths " + paths);
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.output,
            "paths (I): 3\nlinks (J): 5\nmu: 0.70711\nargmax pair: links 1 and 2\n"
            "k_max: 1\none_identifiable: yes\ncomplementary pair: links 1 and 3\n");
}

TEST(CliAnalyze, Mesh5SixReport) {
  TempDir tmp;
  const std::string topo = tmp.file("m.topo", testutil::kMesh5Topo);
  const std::string paths = tmp.file("m.paths", testutil::kMesh5SixPaths);
  const CliResult r = run_cli("analyze --topology " + topo + " --paths " + paths);
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.output.find("paths (I): 6\n"), std::string::npos);
  EXPECT_NE(r.output.find("links (J): 8\n"), std::string::npos);
  EXPECT_NE(r.output.find("mu: 0.70711\n"), std::string::npos);
  EXPECT_NE(r.output.find("argmax pair: links 6 and 7\n"), std::string::npos);
  EXPECT_NE(r.output.find("k_max: 1\n"), std::string::npos);
  EXPECT_NE(r.output.find("no complementary pair\n"), std::string::npos);
}

TEST(CliAnalyze, EnumeratesWhenNoPathsGiven) {
  TempDir tmp;
  const std::string topo = tmp.file("m.topo", testutil::kMesh5Topo);
  const CliResult r = run_cli("analyze --topology " + topo);
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.output.find("paths (I): "), std::string::npos);
  // A two-hop cutoff leaves links 5 and 8 uncovered; that is an error, not
  // a silently shrunken report.
  const CliResult bad = run_cli("analyze --topology " + topo + " --max-hops 2");
  EXPECT_NE(bad.status, 0);
  EXPECT_NE(bad.output.find("zero column"), std::string::npos);
}

TEST(CliAnalyze, SelectAndPathsAreExclusive) {
  TempDir tmp;
  const std::string topo = tmp.file("m.topo", testutil::kMesh5Topo);
  const std::string paths = tmp.file("m.paths", testutil::kMesh5SixPaths);
  const CliResult r = run_cli("analyze --topology " + topo + " --paths " + paths +
                              " --select 3:shortest-first");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("mutually exclusive"), std::string::npos);
}

TEST(CliAnalyze, MissingFileIsOneLineError) {
  const CliResult r = run_cli("analyze --topology /nonexistent/x.topo");
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.output.rfind("error: cannot read", 0), 0u);
}

TEST(CliAnalyze, ParseErrorsCarryLineNumbers) {
  TempDir tmp;
  const std::string topo = tmp.file("bad.topo", "node s\nnode s\n");
  const CliResult r = run_cli("analyze --topology " + topo);
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("line 2"), std::string::npos);
}

TEST(CliDiff, DiamondGolden) {
  TempDir tmp;
  const std::string topo = tmp.file("d.topo", testutil::kDiamond4Topo);
  const std::string paths = tmp.file("d.paths", testutil::kDiamond4Paths);
  const CliResult r =
      run_cli("diff --topology " + topo + " --paths " + paths + " --reference 1");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.output,
            "reference 1\n2 5\n-1 -1 1 1 0\n0 -1 0 1 1\n"
            "mu: 1\nargmax pair: links 1 and 3\nk_max: 0\n");
}

TEST(CliDiff, ReportsCancelledLinks) {
  TempDir tmp;
  const std::string topo = tmp.file("l.topo", kLine4Topo);
  const std::string paths = tmp.file("l.paths", kLine4Paths);
  const CliResult r =
      run_cli("diff --topology " + topo + " --paths " + paths + " --reference 1");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.output,
            "reference 1\n1 4\n0 -1 1 1\ncancelled links: 1\n"
            "mu: 1\nargmax pair: links 2 and 3\nk_max: 0\n");
}

TEST(CliDiff, ReferenceOutOfRange) {
  TempDir tmp;
  const std::string topo = tmp.file("d.topo", testutil::kDiamond4Topo);
  const std::string paths = tmp.file("d.paths", testutil::kDiamond4Paths);
  const CliResult r =
      run_cli("diff --topology " + topo + " --paths " + paths + " --reference 9");
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.output, "error: reference row 9 out of range 1..3\n");
}

TEST(CliSimulate, NoiselessGolden) {
  TempDir tmp;
  const std::string topo = tmp.file("d.topo", testutil::kDiamond4Topo);
  const std::string paths = tmp.file("d.paths", testutil::kDiamond4Paths);
  const std::string base = "simulate --topology " + topo + " --paths " + paths +
                           " --congested 1 --delta 7 --seed 5 --background-mean 0";
  const CliResult plain = run_cli(base);
  EXPECT_EQ(plain.status, 0);
  EXPECT_EQ(plain.output, "path_index,y_ms,z_ms\n1,10,17\n2,0,7\n3,10,17\n");
  const CliResult diff = run_cli(base + " --reference 1");
  EXPECT_EQ(diff.status, 0);
  EXPECT_EQ(diff.output, "# reference_index=1\npath_index,y_ms,z_ms\n2,-10,-10\n3,0,0\n");
}

TEST(CliSimulate, SeedIsRequired) {
  TempDir tmp;
  const std::string topo = tmp.file("d.topo", testutil::kDiamond4Topo);
  const std::string paths = tmp.file("d.paths", testutil::kDiamond4Paths);
  const CliResult r = run_cli("simulate --topology " + topo + " --paths " + paths +
                              " --congested 1 --delta 7");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("--seed"), std::string::npos);
}

TEST(CliSimulate, BackgroundIsSeedDeterministic) {
  TempDir tmp;
  const std::string topo = tmp.file("d.topo", testutil::kDiamond4Topo);
  const std::string paths = tmp.file("d.paths", testutil::kDiamond4Paths);
  const std::string base = "simulate --topology " + topo + " --paths " + paths +
                           " --congested 2 --delta -3.5 --seed 11";
  const CliResult a = run_cli(base);
  const CliResult b = run_cli(base);
  const CliResult c = run_cli("simulate --topology " + topo + " --paths " + paths +
                              " --congested 2 --delta -3.5 --seed 12");
  EXPECT_EQ(a.status, 0);
  EXPECT_EQ(a.output, b.output);
  EXPECT_NE(a.output, c.output);
}

TEST(CliEvaluate, WritesRatioCsv) {
  TempDir tmp;
  const std::string topo = tmp.file("m.topo", testutil::kMesh5Topo);
  const std::string paths = tmp.file("m.paths", testutil::kMesh5SixPaths);
  const std::string out = tmp.path() + "/r.csv";
  const CliResult r = run_cli("evaluate --topology " + topo + " --paths " + paths +
                              " --k 1 --scheme differential --reference 1 --seed 99" +
                              " --background-mean 0 --out " + out);
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.output, "");
  const std::string csv = slurp(out);
  EXPECT_EQ(csv.rfind("# config=", 0), 0u);
  EXPECT_NE(csv.find("generator=mt19937_64"), std::string::npos);
  EXPECT_NE(csv.find("\nscheme,reference_index,reference_l1,I,J,k,total_sets,identified,"
                     "R,delta_mode,seed\n"),
            std::string::npos);
  EXPECT_NE(csv.find("differential,1,2,6,8,1,8,8,1,random,99\n"), std::string::npos);
}

TEST(CliEvaluate, SeedAndOutAreRequired) {
  TempDir tmp;
  const std::string topo = tmp.file("m.topo", testutil::kMesh5Topo);
  const std::string paths = tmp.file("m.paths", testutil::kMesh5SixPaths);
  const CliResult no_seed = run_cli("evaluate --topology " + topo + " --paths " + paths +
                                    " --k 1 --scheme differential --out /tmp/x.csv");
  EXPECT_NE(no_seed.status, 0);
  EXPECT_NE(no_seed.output.find("--seed"), std::string::npos);
  const CliResult no_out = run_cli("evaluate --topology " + topo + " --paths " + paths +
                                   " --k 1 --scheme differential --seed 1");
  EXPECT_NE(no_out.status, 0);
  EXPECT_NE(no_out.output.find("--out"), std::string::npos);
}

TEST(CliEvaluate, RejectsReferenceForOriginalScheme) {
  TempDir tmp;
  const std::string topo = tmp.file("m.topo", testutil::kMesh5Topo);
  const std::string paths = tmp.file("m.paths", testutil::kMesh5SixPaths);
  const std::string out = tmp.path() + "/r.csv";
  const CliResult r = run_cli("evaluate --topology " + topo + " --paths " + paths +
                              " --k 1 --scheme original --reference 2 --seed 1 --out " + out);
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.output, "error: --reference only applies to the differential scheme\n");
  EXPECT_FALSE(std::filesystem::exists(out));
}

TEST(CliEvaluate, OriginalSchemeReportsReferenceZero) {
  TempDir tmp;
  const std::string topo = tmp.file("m.topo", testutil::kMesh5Topo);
  const std::string paths = tmp.file("m.paths", testutil::kMesh5SixPaths);
  const std::string out = tmp.path() + "/r.csv";
  const CliResult r = run_cli("evaluate --topology " + topo + " --paths " + paths +
                              " --k 1 --scheme original --delta-mode zero --seed 4" +
                              " --background-mean 0 --out " + out);
  EXPECT_EQ(r.status, 0);
  const auto rows = data_rows(slurp(out));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].rfind("original,0,0,6,8,1,8,", 0), 0u);
  EXPECT_EQ(field(rows[0], 9), "zero");
}

TEST(CliEvaluate, ReferenceSweepOrdersRows) {
  TempDir tmp;
  const std::string topo = tmp.file("m.topo", testutil::kMesh5Topo);
  const std::string paths = tmp.file("m.paths", testutil::kMesh5SixPaths);
  const std::string out = tmp.path() + "/sweep.csv";
  const CliResult r = run_cli("evaluate --topology " + topo + " --paths " + paths +
                              " --k 1 --scheme differential --reference sweep --seed 3" +
                              " --background-mean 0 --out " + out);
  EXPECT_EQ(r.status, 0);
  const auto rows = data_rows(slurp(out));
  ASSERT_EQ(rows.size(), 6u);
  std::vector<std::string> refs;
  for (const auto& row : rows) refs.push_back(field(row, 1));
  EXPECT_EQ(refs, (std::vector<std::string>{"1", "2", "4", "3", "5", "6"}));
}

TEST(CliSweep, MatchesEvaluateReferenceSweep) {
  TempDir tmp;
  const std::string topo = tmp.file("m.topo", testutil::kMesh5Topo);
  const std::string paths = tmp.file("m.paths", testutil::kMesh5SixPaths);
  const std::string a = tmp.path() + "/a.csv";
  const std::string b = tmp.path() + "/b.csv";
  const std::string common = " --topology " + topo + " --paths " + paths +
                             " --k 1 --seed 3 --background-mean 0 --out ";
  EXPECT_EQ(run_cli("evaluate --scheme differential --reference sweep" + common + a).status, 0);
  EXPECT_EQ(run_cli("sweep" + common + b).status, 0);
  EXPECT_EQ(slurp(a), slurp(b));
}

TEST(CliEvaluate, ByteIdenticalAcrossRerunsAndJobs) {
  TempDir tmp;
  const std::string topo = tmp.file("m.topo", testutil::kMesh5Topo);
  const std::string paths = tmp.file("m.paths", testutil::kMesh5SixPaths);
  const std::string common = "evaluate --topology " + topo + " --paths " + paths +
                             " --k 1,2 --scheme differential --reference 1 --seed 17" +
                             " --repeats 2 --out ";
  const std::string a = tmp.path() + "/a.csv";
  const std::string b = tmp.path() + "/b.csv";
  const std::string c = tmp.path() + "/c.csv";
  EXPECT_EQ(run_cli(common + a).status, 0);
  EXPECT_EQ(run_cli(common + b).status, 0);
  EXPECT_EQ(run_cli(common + c + " --jobs 3").status, 0);
  const std::string first = slurp(a);
  EXPECT_FALSE(first.empty());
  EXPECT_EQ(first, slurp(b));
  EXPECT_EQ(first, slurp(c));
}

TEST(CliEvaluate, KRangeFormsAreEquivalent) {
  TempDir tmp;
  const std::string topo = tmp.file("m.topo", testutil::kMesh5Topo);
  const std::string paths = tmp.file("m.paths", testutil::kMesh5SixPaths);
  const std::string common = "evaluate --topology " + topo + " --paths " + paths +
                             " --scheme differential --reference 1 --seed 5" +
                             " --background-mean 0 --out ";
  const std::string a = tmp.path() + "/a.csv";
  const std::string b = tmp.path() + "/b.csv";
  EXPECT_EQ(run_cli(common + a + " --k 1..2").status, 0);
  EXPECT_EQ(run_cli(common + b + " --k 1,2").status, 0);
  EXPECT_EQ(slurp(a), slurp(b));
}

TEST(CliEvaluate, InvalidKLeavesNoOutputBehind) {
  TempDir tmp;
  const std::string topo = tmp.file("m.topo", testutil::kMesh5Topo);
  const std::string paths = tmp.file("m.paths", testutil::kMesh5SixPaths);
  const std::string out = tmp.path() + "/r.csv";
  const CliResult r = run_cli("evaluate --topology " + topo + " --paths " + paths +
                              " --k 9 --scheme differential --reference 1 --seed 1 --out " +
                              out);
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.output, "error: k = 9 out of range 1..8\n");
  EXPECT_FALSE(std::filesystem::exists(out));
  EXPECT_FALSE(std::filesystem::exists(out + ".tmp"));
}

TEST(CliEvaluate, UnknownSchemeFails) {
  TempDir tmp;
  const std::string topo = tmp.file("m.topo", testutil::kMesh5Topo);
  const std::string paths = tmp.file("m.paths", testutil::kMesh5SixPaths);
  const CliResult r = run_cli("evaluate --topology " + topo + " --paths " + paths +
                              " --k 1 --scheme both --seed 1 --out /tmp/x.csv");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("unknown scheme"), std::string::npos);
}

TEST(CliPaths, SelectionGolden) {
  TempDir tmp;
  const std::string topo = tmp.file("m.topo", testutil::kMesh5Topo);
  const CliResult r = run_cli("paths --topology " + topo + " --select 3:shortest-first");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.output, "path 1 2\npath 3 4\npath 6 7\n");
  const CliResult all = run_cli("paths --topology " + topo + " --max-hops 3");
  EXPECT_EQ(all.status, 0);
  EXPECT_EQ(all.output,
            "path 1 2\npath 1 5 4\npath 1 8 7\npath 3 4\npath 3 5 2\npath 6 7\npath 6 8 2\n");
}

TEST(CliPaths, RandomSelectionNeedsSeed) {
  TempDir tmp;
  const std::string topo = tmp.file("m.topo", testutil::kMesh5Topo);
  const CliResult r = run_cli("paths --topology " + topo + " --select 2:random");
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.output, "error: random path selection requires --seed\n");
  const CliResult ok = run_cli("paths --topology " + topo + " --select 2:random --seed 8");
  EXPECT_EQ(ok.status, 0);
  EXPECT_EQ(ok.output, run_cli("paths --topology " + topo + " --select 2:random --seed 8").output);
}

TEST(CliPaths, OutFileMatchesStdout) {
  TempDir tmp;
  const std::string topo = tmp.file("m.topo", testutil::kMesh5Topo);
  const std::string out = tmp.path() + "/p.paths";
  const CliResult direct = run_cli("paths --topology " + topo + " --select 3:shortest-first");
  const CliResult filed =
      run_cli("paths --topology " + topo + " --select 3:shortest-first --out " + out);
  EXPECT_EQ(filed.status, 0);
  EXPECT_EQ(filed.output, "");
  EXPECT_EQ(slurp(out), direct.output);
}

TEST(CliTopLevel, SubcommandRequired) {
  const CliResult none = run_cli("");
  EXPECT_NE(none.status, 0);
  const CliResult unknown = run_cli("frobnicate");
  EXPECT_NE(unknown.status, 0);
}
