#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <doctest.h>

#include "posefuse/nn/model_io.hpp"
#include "support/tiny.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string output;
};

Outcome run(const std::string& args) {
  const std::string cmd = std::string(POSEFUSE_CLI) + " " + args + " 2>&1";
  Outcome out;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.output.append(buf, n);
  const int status = pclose(pipe);
  out.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const fs::path kRoot = fs::temp_directory_path() / "posefuse_unit_cli";

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run("--help").code == 0);
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  const Outcome small = run("gen-data --n 4 --out " + (kRoot / "tiny").string());
  CHECK(small.code == 2);
  const Outcome missing = run("pipeline --dataset /nonexistent/poses --no-timing --output " + (kRoot / "p").string());
  CHECK(missing.code == 2);
  CHECK(missing.output.find("/nonexistent/poses") != std::string::npos);
}

TEST_CASE("gen-data is deterministic") {
  fs::remove_all(kRoot);
  REQUIRE(run("gen-data --seed 4 --n 8 --out " + (kRoot / "d1").string()).code == 0);
  REQUIRE(run("gen-data --seed 4 --n 8 --out " + (kRoot / "d2").string()).code == 0);
  CHECK(slurp(kRoot / "d1" / "poses.txt") == slurp(kRoot / "d2" / "poses.txt"));
  CHECK(slurp(kRoot / "d1" / "manifest.json") == slurp(kRoot / "d2" / "manifest.json"));
}

TEST_CASE("train, fuse, predict and evaluate") {
  const fs::path d = kRoot / "flow";
  fs::remove_all(d);
  REQUIRE(run("gen-data --seed 5 --n 12 --out " + (d / "data").string()).code == 0);
  const std::string common = " --dataset " + (d / "data").string() + " --epochs 2 --seed 1";
  REQUIRE(run("train --backbone A --out " + (d / "a.pfm").string() + common).code == 0);
  REQUIRE(run("train --backbone B --out " + (d / "b.pfm").string() + common).code == 0);
  const std::string fuse = "fuse-early --model-a " + (d / "a.pfm").string() + " --model-b " + (d / "b.pfm").string();
  REQUIRE(run(fuse + " --op add --out-a " + (d / "aa.pfm").string() + " --out-b " + (d / "ab.pfm").string()).code == 0);
  REQUIRE(run(fuse + " --op multiply --out-a " + (d / "ma.pfm").string() + " --out-b " + (d / "mb.pfm").string()).code == 0);
  REQUIRE(run("train --init-model " + (d / "aa.pfm").string() + " --out " + (d / "aa2.pfm").string() + common).code == 0);

  const std::string models = " --model " + (d / "aa.pfm").string() + " --model " + (d / "ab.pfm").string() +
                             " --model " + (d / "ma.pfm").string() + " --model " + (d / "mb.pfm").string();
  const Outcome pred = run("predict" + models + " --dataset " + (d / "data").string() + " --seed 1 --fusion average --out " +
                           (d / "pred.csv").string());
  REQUIRE(pred.code == 0);
  const Outcome ev = run("evaluate --predictions " + (d / "pred.csv").string() + " --ground-truth " +
                         (d / "data" / "poses.txt").string() + " --format csv --plot " + (d / "plot.svg").string());
  CHECK(ev.code == 0);
  CHECK(ev.output.find("fused,") != std::string::npos);
  CHECK(fs::exists(d / "plot.svg"));

  // Mixing a unimodal model into a hybrid is a lineage error.
  const Outcome mixed = run("predict --model " + (d / "a.pfm").string() + " --model " + (d / "ab.pfm").string() +
                            " --dataset " + (d / "data").string() + " --fusion average");
  CHECK(mixed.code == 2);

  // A diverging learning rate is a numerical failure.
  const Outcome diverged = run("train --backbone A --lr 1e300 --out " + (d / "bad.pfm").string() + common);
  CHECK(diverged.code == 3);
}

TEST_CASE("fuse-early rejects differently shaped top layers") {
  const fs::path d = kRoot / "shapes";
  fs::create_directories(d);
  posefuse::nn::BackboneSpec wide = posefuse::testing::tiny_backbone("B");
  wide.feature_dim = 8;
  posefuse::nn::save_model(posefuse::testing::tiny_model(1), d / "a.pfm");
  posefuse::nn::save_model(posefuse::nn::PoseNetModel::build(wide, {}, 2), d / "b.pfm");
  const Outcome out = run("fuse-early --model-a " + (d / "a.pfm").string() + " --model-b " + (d / "b.pfm").string() +
                          " --out-a " + (d / "x.pfm").string() + " --out-b " + (d / "y.pfm").string());
  CHECK(out.code == 2);
  CHECK_FALSE(fs::exists(d / "x.pfm"));
}
