#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cytoseg/cli.hpp"

using namespace cytoseg;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("cytoseg_cli_" + std::to_string(::getpid()) + "_" +
                                         ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string path(const std::string& name) const { return (root_ / name).string(); }

  // Runs the real executable; returns its exit status.
  int run(const std::string& args, std::string* err = nullptr) const {
    const std::string errfile = path("stderr.txt");
    const std::string cmd = std::string(CYTOSEG_CLI_PATH) + " " + args + " >" + path("stdout.txt") + " 2>" + errfile;
    const int status = std::system(cmd.c_str());
    if (err) *err = slurp(errfile);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static std::map<std::string, std::string> tree(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path().string());
    return out;
  }

  fs::path root_;
};

}  // namespace

TEST_F(CliTest, PhantomWritesLayout) {
  ASSERT_EQ(run("phantom --seed 42 --cells 3 --out " + path("ph")), 0);
  for (const char* f : {"image.png", "clumps.png", "nuclei.png", "provenance.txt", "cells/cell_0001.png",
                        "cells/cell_0002.png", "cells/cell_0003.png"})
    EXPECT_TRUE(fs::exists(root_ / "ph" / f)) << f;
  EXPECT_FALSE(fs::exists(root_ / "ph" / "cells" / "cell_0004.png"));
  EXPECT_EQ(load_label_map(path("ph/nuclei.png")).n_labels(), 3);
  EXPECT_FALSE(fs::exists(root_ / ".ph.partial"));
}

TEST_F(CliTest, PhantomIsByteIdentical) {
  ASSERT_EQ(run("phantom --seed 7 --cells 2 --out " + path("a")), 0);
  ASSERT_EQ(run("phantom --seed 7 --cells 2 --out " + path("b")), 0);
  EXPECT_EQ(tree(root_ / "a"), tree(root_ / "b"));
}

TEST_F(CliTest, PhantomBadSpecExitsThree) {
  EXPECT_EQ(run("phantom --cells 0 --out " + path("x")), 3);
  EXPECT_EQ(run("phantom --overlap 2 --out " + path("x")), 3);
  EXPECT_FALSE(fs::exists(root_ / "x"));
}

TEST_F(CliTest, SegmentEvaluateRoundTrip) {
  ASSERT_EQ(run("phantom --seed 42 --cells 3 --out " + path("ph")), 0);
  ASSERT_EQ(run("segment --input " + path("ph/image.png") + " --out " + path("seg") + " --overlay"), 0);
  EXPECT_TRUE(fs::exists(root_ / "seg" / "overlay.png"));
  EXPECT_EQ(read_cells(root_ / "seg").size(), 3u);

  ASSERT_EQ(run("evaluate --pred " + path("seg") + " --gt " + path("ph") + " --report " + path("r.txt")), 0);
  const auto report = slurp(path("r.txt"));
  EXPECT_EQ(report.rfind("dc_mean=", 0), 0u);
  for (const char* k : {"\ndc_std=", "\ntpr=", "\ntpr_prose=", "\nfpr=", "\nfno=", "\ngt_index,pred_index,dc\n"})
    EXPECT_NE(report.find(k), std::string::npos) << k;
  const double dc = std::stod(slurp(path("stdout.txt")));
  EXPECT_GE(dc, 0.8);
}

TEST_F(CliTest, SegmentIsByteIdenticalAndStackMatchesInput) {
  ASSERT_EQ(run("phantom --seed 3 --cells 2 --out " + path("ph")), 0);
  ASSERT_EQ(run("segment --input " + path("ph/image.png") + " --out " + path("s1") + " --overlay"), 0);
  ASSERT_EQ(run("segment --input " + path("ph/image.png") + " --out " + path("s2") + " --overlay"), 0);
  EXPECT_EQ(tree(root_ / "s1"), tree(root_ / "s2"));
  // Re-running into an existing directory replaces it.
  ASSERT_EQ(run("segment --input " + path("ph/image.png") + " --out " + path("s2")), 0);
  EXPECT_FALSE(fs::exists(root_ / "s2" / "overlay.png"));

  fs::create_directories(root_ / "stack");
  fs::copy_file(root_ / "ph" / "image.png", root_ / "stack" / "plane_00.png");
  ASSERT_EQ(run("segment --stack " + path("stack") + " --out " + path("s3") + " --overlay"), 0);
  EXPECT_EQ(tree(root_ / "s1"), tree(root_ / "s3"));
}

TEST_F(CliTest, ProvenanceRoundTripsAsConfig) {
  ASSERT_EQ(run("phantom --seed 42 --cells 3 --out " + path("ph")), 0);
  std::ofstream(path("cfg.txt")) << "hmax_h = 40\ndrlse_max_iters = 200\n";
  ASSERT_EQ(run("segment --input " + path("ph/image.png") + " --config " + path("cfg.txt") + " --out " + path("a")), 0);
  ASSERT_EQ(run("segment --input " + path("ph/image.png") + " --config " + path("a/provenance.txt") + " --out " +
                path("b")),
            0);
  EXPECT_EQ(tree(root_ / "a"), tree(root_ / "b"));
  EXPECT_NE(slurp(path("a/provenance.txt")).find("hmax_h = 40\n"), std::string::npos);
}

TEST_F(CliTest, SegmentErrors) {
  std::string err;
  std::ofstream(path("bad.txt")) << "hmax_h = 30\nmu == 3\n";
  ASSERT_EQ(run("phantom --seed 1 --cells 1 --out " + path("ph")), 0);
  EXPECT_EQ(run("segment --input " + path("ph/image.png") + " --config " + path("bad.txt") + " --out " + path("o"), &err), 3);
  EXPECT_NE(err.find("line 2"), std::string::npos) << err;
  EXPECT_EQ(std::count(err.begin(), err.end(), '\n'), 1);

  EXPECT_EQ(run("segment --input " + path("missing.png") + " --out " + path("o")), 2);
  std::ofstream(path("junk.png")) << "not an image";
  EXPECT_EQ(run("segment --input " + path("junk.png") + " --out " + path("o")), 2);
  EXPECT_EQ(run("segment --out " + path("o")), 2);
  EXPECT_EQ(run("segment --input " + path("ph/image.png") + " --config " + path("nope.txt") + " --out " + path("o")), 2);
  fs::create_directories(root_ / "empty_stack");
  EXPECT_EQ(run("segment --stack " + path("empty_stack") + " --out " + path("o")), 2);
  EXPECT_FALSE(fs::exists(root_ / "o"));
}

TEST_F(CliTest, EvaluateIdentityAndEmptyPrediction) {
  ASSERT_EQ(run("phantom --seed 42 --cells 3 --out " + path("ph")), 0);
  ASSERT_EQ(run("evaluate --pred " + path("ph") + " --gt " + path("ph") + " --report " + path("r.txt")), 0);
  auto report = slurp(path("r.txt"));
  EXPECT_NE(report.find("dc_mean=1.0000\n"), std::string::npos);
  EXPECT_NE(report.find("fno=0.0000\n"), std::string::npos);
  EXPECT_NE(report.find("1,1,1.0000\n"), std::string::npos);
  EXPECT_EQ(slurp(path("stdout.txt")), "1.0000\n");

  fs::create_directories(root_ / "none" / "cells");
  ASSERT_EQ(run("evaluate --pred " + path("none") + " --gt " + path("ph") + " --report " + path("r.txt")), 0);
  report = slurp(path("r.txt"));
  EXPECT_NE(report.find("dc_mean=0.0000\n"), std::string::npos);
  EXPECT_NE(report.find("fno=1.0000\n"), std::string::npos);
  EXPECT_NE(report.find("2,none,0.0000\n"), std::string::npos);
}

TEST_F(CliTest, EvaluateLayoutErrors) {
  ASSERT_EQ(run("phantom --seed 42 --cells 2 --out " + path("ph")), 0);
  EXPECT_EQ(run("evaluate --pred " + path("nothing") + " --gt " + path("ph") + " --report " + path("r.txt")), 2);
  fs::create_directories(root_ / "gap" / "cells");
  fs::copy_file(root_ / "ph" / "cells" / "cell_0002.png", root_ / "gap" / "cells" / "cell_0002.png");
  EXPECT_EQ(run("evaluate --pred " + path("gap") + " --gt " + path("ph") + " --report " + path("r.txt")), 2);
  fs::create_directories(root_ / "small" / "cells");
  save_mask(BinaryMask(10, 10), path("small/cells/cell_0001.png"));
  EXPECT_EQ(run("evaluate --pred " + path("small") + " --gt " + path("ph") + " --report " + path("r.txt")), 2);
  fs::create_directories(root_ / "nogt" / "cells");
  EXPECT_EQ(run("evaluate --pred " + path("ph") + " --gt " + path("nogt") + " --report " + path("r.txt")), 2);
}

TEST_F(CliTest, InProcessCommands) {
  std::ostringstream out, err;
  PhantomArgs pa;
  pa.cells = 1;
  pa.out = path("p");
  EXPECT_EQ(cmd_phantom(pa, out, err), kExitOk);
  EvaluateArgs ea{path("p"), path("p"), path("rep.txt")};
  EXPECT_EQ(cmd_evaluate(ea, out, err), kExitOk);
  SegmentArgs sa;
  sa.input = path("p/image.png");
  sa.out = path("s");
  EXPECT_EQ(cmd_segment(sa, out, err), kExitOk);
  EXPECT_EQ(read_cells(path("s")).size(), 1u);
  EXPECT_NE(out.str().find("time cells"), std::string::npos);
}

TEST(Provenance, ListsCells) {
  SegmentationResult r;
  r.clumps = LabelMap(2, 2);
  r.cells.push_back(BinaryMask(2, 2));
  r.nucleus_centroids.push_back({1.5, 0.25});
  r.provenance.cells.push_back({1, true, 0, true});
  const auto s = format_provenance(r);
  EXPECT_NE(s.find("# cell 1: clump=1 single_nucleus=1 iterations=0 converged=1 centroid=1.50,0.25\n"), std::string::npos);
  EXPECT_NO_THROW(parse_config(s));
}
