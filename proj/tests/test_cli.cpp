#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "somsne/calibrate.hpp"
#include "somsne/pipeline.hpp"

using namespace somsne;
namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("somsne_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string in_dir(const std::string& name) { return (work_dir() / name).string(); }

int run(const std::string& args) {
  const std::string cmd = std::string(SOMSNE_CLI_PATH) + " " + args + " >" +
                          in_dir("stdout.txt") + " 2>" + in_dir("stderr.txt");
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string moons_csv() {
  static const std::string path = [] {
    const auto p = in_dir("moons.csv");
    EXPECT_EQ(run("gen-moons --n 200 --noise 0.1 --seed 7 --out " + p), 0);
    return p;
  }();
  return path;
}

}  // namespace

TEST(Cli, GenMoonsMatchesLibrary) {
  std::ostringstream expect;
  const Dataset d = gen_moons(200, 0.1, 7);
  write_csv(expect, d.x, d.labels);
  EXPECT_EQ(slurp(moons_csv()), expect.str());
}

TEST(Cli, TrainSomMatchesLibraryAndIsDeterministic) {
  const std::string args = "train-som --data " + moons_csv() +
                           " --labels --grid 4x5 --sigma-i 3 --sigma-f 0.1 --lambda-i 1"
                           " --lambda-f 0.01 --tmax 3000 --seed 11 --log " + in_dir("som_log.csv");
  ASSERT_EQ(run(args + " --out " + in_dir("som_a.json")), 0);
  ASSERT_EQ(run(args + " --out " + in_dir("som_b.json")), 0);
  EXPECT_EQ(slurp(in_dir("som_a.json")), slurp(in_dir("som_b.json")));

  const Dataset data = gen_moons(200, 0.1, 7);
  const ScheduleParams sched{3, 0.1, 1, 0.01, 3000};
  const auto res = train_som(init_grid_map({4, 5}, data, 11), data, sched, 11);
  EXPECT_EQ(slurp(in_dir("som_a.json")),
            map_file_string(res.map, som_provenance(data, {4, 5}, sched, 11)));
  EXPECT_EQ(slurp(in_dir("som_log.csv")).substr(0, 15), "t,sigma,lambda\n");
}

TEST(Cli, KmeansSneEvaluatePipeline) {
  ASSERT_EQ(run("kmeans --data " + moons_csv() + " --labels --k 20 --seed 1 --out " +
                in_dir("centroids.csv")),
            0);
  const std::string sne = "train-sne --data " + moons_csv() + " --labels --weights " +
                          in_dir("centroids.csv") + " --perplexity 5 --iters 100 --seed 2";
  ASSERT_EQ(run(sne + " --out " + in_dir("sne_a.json") + " --log " + in_dir("sne_log.csv")), 0);
  ASSERT_EQ(run(sne + " --out " + in_dir("sne_b.json")), 0);
  EXPECT_EQ(slurp(in_dir("sne_a.json")), slurp(in_dir("sne_b.json")));

  const Dataset data = gen_moons(200, 0.1, 7);
  const Matrix w = kmeans_weights(data, 20, 1).centroids;
  SneConfig cfg;
  cfg.perplexity = 5;
  cfg.iters = 100;
  cfg.seed = 2;
  const auto res = train_sne(w, data, cfg);
  EXPECT_EQ(slurp(in_dir("sne_a.json")), map_file_string(res.map, sne_provenance(data, w, cfg)));

  ASSERT_EQ(run("evaluate --data " + moons_csv() + " --labels --map " + in_dir("sne_a.json") +
                " --perplexities 2,5,10 --out " + in_dir("curve.csv")),
            0);
  std::ostringstream expect;
  quality_curve(res.map, data, std::vector<double>{2, 5, 10}).write_csv(expect);
  EXPECT_EQ(slurp(in_dir("curve.csv")), expect.str());

  ASSERT_EQ(run("evaluate --data " + moons_csv() + " --labels --map " + in_dir("sne_a.json") +
                " --perplexities 2,5 --shuffle-seed 3 --out " + in_dir("curve_shuf.csv")),
            0);
  std::ostringstream shuf;
  quality_curve(shuffle_weights(res.map, 3), data, std::vector<double>{2, 5}).write_csv(shuf);
  EXPECT_EQ(slurp(in_dir("curve_shuf.csv")), shuf.str());
}

TEST(Cli, StandardSneIsEvaluatedLeaveOneOut) {
  const auto small = in_dir("small.csv");
  ASSERT_EQ(run("gen-moons --n 40 --noise 0.1 --seed 1 --out " + small), 0);
  ASSERT_EQ(run("train-sne --data " + small + " --labels --standard --perplexity 5 --iters 50"
                " --out " + in_dir("std.json")),
            0);
  ASSERT_EQ(run("evaluate --data " + small + " --labels --map " + in_dir("std.json") +
                " --perplexities 5 --out " + in_dir("std_curve.csv")),
            0);
  const MapFile mf = read_map_file(in_dir("std.json"));
  const Dataset data = load_csv(small, true);
  std::ostringstream expect;
  quality_curve(mf.map, data, std::vector<double>{5}, kDefaultPerplexityTol, EvalMode::standard)
      .write_csv(expect);
  EXPECT_EQ(slurp(in_dir("std_curve.csv")), expect.str());
}

TEST(Cli, ExportSvg) {
  ASSERT_EQ(run("train-som --data " + moons_csv() + " --labels --grid 10x10 --tmax 500 --out " +
                in_dir("grid.json")),
            0);
  ASSERT_EQ(run("export-svg --map " + in_dir("grid.json") + " --edges grid 10x10 --data " +
                moons_csv() + " --labels --out " + in_dir("grid.svg")),
            0);
  const std::string svg = slurp(in_dir("grid.svg"));
  std::size_t lines = 0, circles = 0;
  for (auto p = svg.find("<line"); p != std::string::npos; p = svg.find("<line", p + 1)) ++lines;
  for (auto p = svg.find("<circle"); p != std::string::npos; p = svg.find("<circle", p + 1)) ++circles;
  EXPECT_EQ(lines, 180u);
  EXPECT_EQ(circles, 100u);
  EXPECT_EQ(run("export-svg --map " + in_dir("grid.json") + " --space obs2d --out " +
                in_dir("obs.svg")),
            0);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("gen-moons"), 2);
  EXPECT_EQ(run("gen-moons --n 10 --noise -1 --out x.csv"), 2);
  EXPECT_EQ(run("train-som --data " + moons_csv() + " --grid 10by10 --out x.json"), 2);
  EXPECT_EQ(run("train-sne --data " + moons_csv() + " --out x.json"), 2);
  EXPECT_EQ(run("train-sne --data " + moons_csv() + " --standard --weights w.csv --out x.json"), 2);
  EXPECT_EQ(run("evaluate --data " + moons_csv() + " --map m.json --perplexities 2,abc --out c.csv"), 2);
  EXPECT_EQ(run("export-svg --map m.json --edges hex --out a.svg"), 2);
  EXPECT_EQ(run("export-svg --map m.json --space 3d --out a.svg"), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, RuntimeErrorsExitOne) {
  EXPECT_EQ(run("train-som --data /nonexistent.csv --grid 2x2 --out " + in_dir("x.json")), 1);
  EXPECT_EQ(run("kmeans --data " + moons_csv() + " --labels --k 500 --out " + in_dir("c.csv")), 1);
  EXPECT_EQ(run("evaluate --data " + moons_csv() + " --labels --map /nonexistent.json --out " +
                in_dir("c.csv")),
            1);
  // perplexity beyond the number of neurons
  ASSERT_EQ(run("train-som --data " + moons_csv() + " --labels --grid 2x2 --tmax 10 --out " +
                in_dir("tiny.json")),
            0);
  EXPECT_EQ(run("evaluate --data " + moons_csv() + " --labels --map " + in_dir("tiny.json") +
                " --perplexities 10 --out " + in_dir("c.csv")),
            1);
  EXPECT_NE(slurp(in_dir("stderr.txt")).find("perplexity"), std::string::npos);
}

TEST(Cli, SpecExamples) {
  EXPECT_EQ(run("gen-moons --n 0 --out " + in_dir("zero.csv")), 2);
  EXPECT_EQ(run("train-som --grid 2x2 --out " + in_dir("x.json")), 2);
  EXPECT_NE(slurp(in_dir("stderr.txt")).find("--data"), std::string::npos);

  ASSERT_EQ(run("kmeans --data " + moons_csv() + " --labels --k 1 --out " + in_dir("k1.csv")), 0);
  const Dataset data = gen_moons(200, 0.1, 7);
  const Dataset k1 = load_csv(in_dir("k1.csv"), false);
  ASSERT_EQ(k1.m(), 1u);
  double mean = 0.0;
  for (std::size_t s = 0; s < data.m(); ++s) mean += data.x(s, 0);
  EXPECT_NEAR(k1.x(0, 0), mean / 200.0, 1e-12);

  EXPECT_EQ(run("train-sne --data " + moons_csv() + " --labels --standard --perplexity 2000"
                " --iters 1 --out " + in_dir("x.json")),
            1);
}

TEST(Cli, EvaluateOrganizedVersusShuffled) {
  ASSERT_EQ(run("train-som --data " + moons_csv() + " --labels --grid 10x10 --tmax 20000 --out " +
                in_dir("org.json")),
            0);
  const std::string base = "evaluate --data " + moons_csv() + " --labels --map " + in_dir("org.json") +
                           " --perplexities 10 --out ";
  ASSERT_EQ(run(base + in_dir("org.csv")), 0);
  ASSERT_EQ(run(base + in_dir("shuf.csv") + " --shuffle-seed 1"), 0);
  std::istringstream org(slurp(in_dir("org.csv"))), shuf(slurp(in_dir("shuf.csv")));
  const Dataset a = parse_csv(org, false, true), b = parse_csv(shuf, false, true);
  ASSERT_EQ(a.m(), 1u);
  ASSERT_EQ(a.dim(), 7u);
  EXPECT_LT(a.x(0, 1), b.x(0, 1));
  EXPECT_LT(a.x(0, 2), b.x(0, 2));
}

TEST(Cli, SvgEdgeCases) {
  write_map_file(in_dir("one.json"), MapModel(Matrix(1, 2), Matrix(1, 2)), {});
  ASSERT_EQ(run("export-svg --map " + in_dir("one.json") + " --out " + in_dir("one.svg")), 0);
  const std::string svg = slurp(in_dir("one.svg"));
  EXPECT_EQ(svg.find("<circle"), svg.rfind("<circle"));
  EXPECT_NE(svg.find("<circle"), std::string::npos);

  write_map_file(in_dir("wide.json"), MapModel(Matrix(2, 2), Matrix(2, 784)), {});
  EXPECT_EQ(run("export-svg --map " + in_dir("wide.json") + " --space obs2d --out " +
                in_dir("wide.svg")),
            1);
  EXPECT_NE(slurp(in_dir("stderr.txt")).find("dimension"), std::string::npos);
}
