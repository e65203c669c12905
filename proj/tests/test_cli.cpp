#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hycon/io.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("hycon_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(HYCON_CLI_PATH) + " " + args + " >" + path("stdout.txt") + " 2>" + path("stderr.txt");
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }

  std::string slurp(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  void small_world() {
    write("spec.json", R"({"dim": 4, "boundary_const": 0.1, "samples_per_concept": 40, "aperture_fill": 0.8,
      "concepts": [{"name": "sea", "direction": [1, 0, 0, 0]}, {"name": "grass", "direction": [0, 1, 0, 0]},
                   {"name": "carpet", "direction": [0, 0, 1, 0]}],
      "neutral_prompts": 16, "background": 60, "queries": 20, "companion_dim": 8, "noise_seed": 11})");
    ASSERT_EQ(run("synth --spec " + path("spec.json") + " --out " + path("world.hyeb") + " --companion-out " +
                  path("comp.hyeb") + " --apex-out " + path("apex.hyeb")),
              0)
        << slurp("stderr.txt");
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, ParseErrorsExitTwo) {
  EXPECT_EQ(run("steer --in x"), 2);
  EXPECT_EQ(run("mean --in a --out b --no-such-flag"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("--threads 0 validate x"), 2);
}

TEST_F(Cli, MissingFileExitsThree) { EXPECT_EQ(run("validate " + path("absent.hyeb")), 3); }

TEST_F(Cli, ValidateFlagsSheetViolations) {
  small_world();
  EXPECT_EQ(run("validate " + path("world.hyeb")), 0) << slurp("stderr.txt");
  // Nudge x0 of row 3 directly in the payload, which ends the file.
  const auto set = hycon::load_embeddings(path("world.hyeb"));
  std::string bytes = slurp("world.hyeb");
  const std::size_t payload = bytes.size() - set.size() * set.dim() * sizeof(double);
  double x0 = 0.0;
  std::memcpy(&x0, bytes.data() + payload + 3 * set.dim() * sizeof(double), sizeof(double));
  EXPECT_EQ(x0, set.rows()(3, 0));
  x0 += 1e-3;
  std::memcpy(bytes.data() + payload + 3 * set.dim() * sizeof(double), &x0, sizeof(double));
  std::ofstream(path("broken.hyeb"), std::ios::binary) << bytes;
  fs::copy_file(path("world.meta.json"), path("broken.meta.json"));
  EXPECT_EQ(run("validate " + path("broken.hyeb")), 1);
}

TEST_F(Cli, DegenerateDirectionExitsOne) {
  small_world();
  EXPECT_EQ(run("direction --pos " + path("world.hyeb") + " --neg " + path("world.hyeb") +
                " --pos-tags sea,@prompt --neg-tags sea,@prompt --out " + path("d.hydr")),
            1);
}

TEST_F(Cli, SteerAtZeroLambdaIsIdentity) {
  small_world();
  ASSERT_EQ(run("direction --pos " + path("world.hyeb") + " --neg " + path("world.hyeb") +
                " --pos-tags @prompt --neg-tags sea,@prompt --concept sea --out " + path("d.hydr")),
            0)
      << slurp("stderr.txt");
  ASSERT_EQ(run("steer --dir " + path("d.hydr") + " --in " + path("world.hyeb") + " --lambda 0 --out " +
                path("same.hyeb")),
            0)
      << slurp("stderr.txt");
  const auto a = hycon::load_embeddings(path("world.hyeb"));
  const auto b = hycon::load_embeddings(path("same.hyeb"));
  EXPECT_EQ(a.rows(), b.rows());
  EXPECT_TRUE(fs::exists(path("same.hyeb.config.json")));
}

TEST_F(Cli, PipelineIsThreadInvariant) {
  small_world();
  ASSERT_EQ(run("validate " + path("apex.hyeb")), 0);
  ASSERT_EQ(run("direction --pos " + path("world.hyeb") + " --neg " + path("world.hyeb") +
                " --pos-tags @prompt --neg-tags sea,@prompt --concept sea --out " + path("sea.hydr")),
            0)
      << slurp("stderr.txt");
  ASSERT_EQ(run("validate " + path("sea.hydr")), 0);
  const std::string common = " retrieve --in " + path("world.hyeb") +
                             " --concepts sea,grass,carpet --control carpet --lambda 1,2,3 --dir " + path("sea.hydr");
  ASSERT_EQ(run("--threads 1" + common + " --out " + path("r1.json")), 0) << slurp("stderr.txt");
  ASSERT_EQ(run("--threads 3" + common + " --out " + path("r3.json")), 0) << slurp("stderr.txt");
  EXPECT_EQ(slurp("r1.json"), slurp("r3.json"));
  EXPECT_EQ(slurp("r1.csv"), slurp("r3.csv"));
  const auto report = nlohmann::json::parse(slurp("r1.json"));
  EXPECT_GE(report["best"][0]["recall"]["sea"]["R@1"].get<double>(), 0.9);
  const auto c1 = nlohmann::json::parse(slurp("r1.json.config.json"));
  const auto c3 = nlohmann::json::parse(slurp("r3.json.config.json"));
  EXPECT_EQ(c1["digest"], c3["digest"]);
  EXPECT_NE(c1["threads"], c3["threads"]);

  ASSERT_EQ(run("--threads 1 census --in " + path("world.hyeb") + " --concepts sea,grass --tuple sea --tuple grass --out " +
                path("n1.json")),
            0)
      << slurp("stderr.txt");
  ASSERT_EQ(run("--threads 2 census --in " + path("world.hyeb") + " --concepts sea,grass --tuple sea --tuple grass --out " +
                path("n2.json")),
            0);
  EXPECT_EQ(slurp("n1.json"), slurp("n2.json"));

  ASSERT_EQ(run("align-study --in " + path("world.hyeb") + " --companion " + path("comp.hyeb") +
                " --concepts sea,grass --out " + path("a.json")),
            0)
      << slurp("stderr.txt");
  EXPECT_EQ(nlohmann::json::parse(slurp("a.json"))["rows"].size(), 2u);
}

TEST_F(Cli, SteerSweepWritesCsv) {
  small_world();
  ASSERT_EQ(run("direction --pos " + path("world.hyeb") + " --neg " + path("world.hyeb") +
                " --pos-tags @prompt --neg-tags grass,@prompt --concept grass --out " + path("g.hydr")),
            0);
  ASSERT_EQ(run("steer --dir " + path("g.hydr") + " --in " + path("world.hyeb") +
                " --select @query --lambda 0 --lambda 1 --lambda 2 --cones " + path("apex.hyeb") + " --out " +
                path("sweep.hyeb")),
            0)
      << slurp("stderr.txt");
  const std::string csv = slurp("sweep.hyeb.sweep.csv");
  EXPECT_NE(csv.find("lambda"), std::string::npos);
  EXPECT_EQ(hycon::load_embeddings(path("sweep.hyeb")).size(), 60u);
}

TEST_F(Cli, SeedFromEnvironment) {
  write("spec.json", R"({"dim": 3, "samples_per_concept": 5, "prompts_per_concept": 4,
      "concepts": [{"name": "a", "direction": [1, 0, 0]}], "background": 5})");
  ASSERT_EQ(run("--seed 5 synth --spec " + path("spec.json") + " --out " + path("s5.hyeb")), 0) << slurp("stderr.txt");
  ASSERT_EQ(run("--seed 6 synth --spec " + path("spec.json") + " --out " + path("s6.hyeb")), 0);
  const std::string env = "HYCON_SEED=5 ";
  const std::string cmd = env + HYCON_CLI_PATH + " synth --spec " + path("spec.json") + " --out " + path("e5.hyeb");
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(slurp("s5.hyeb"), slurp("e5.hyeb"));
  EXPECT_NE(slurp("s5.hyeb"), slurp("s6.hyeb"));
}
