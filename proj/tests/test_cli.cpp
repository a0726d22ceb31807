#include "mattekit/compositing.hpp"
#include "mattekit/io/checkpoint.hpp"
#include "mattekit/io/png.hpp"
#include "support/smoke.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>

using namespace mattekit;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

smoke::Step run(const std::vector<std::string>& args) { return smoke::run("", args); }

using smoke::read_csv;

}  // namespace

TEST_CASE("argument errors print usage and fail") {
  const auto unknown = run({"frobnicate"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("Usage") != std::string::npos);
  CHECK(run({}).code == 2);
  const auto bad_flag = run({"eval", "--nope"});
  CHECK(bad_flag.code == 2);
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("sweep") != std::string::npos);
  const auto missing = run({"train"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("--out") != std::string::npos);
}

TEST_CASE("bad config surfaces the offending key") {
  TempDir dir("clicfg");
  std::ofstream(dir / "c.yaml") << "training:\n  lerning_rate: 1\n";
  const auto r = run({"inspect", "--config", (dir / "c.yaml").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("lerning_rate") != std::string::npos);
  const auto ok = run({"inspect", "--seed", "5", "--refine", "none"});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("seed: 5") != std::string::npos);
  CHECK(ok.out.find("refine: none") != std::string::npos);
}

TEST_CASE("evaluating ground truth against itself reports zeros") {
  TempDir dir("clieval");
  fs::create_directories(dir / "gt");
  fs::create_directories(dir / "tri");
  const auto fgs = synth::foregrounds(3, 20, 24, 4);
  for (const auto& f : fgs) {
    io::write_matte(dir.path() / "gt" / (f.id + ".png"), f.alpha, 16);
    io::write_trimap(dir.path() / "tri" / (f.id + ".png"), make_trimap(f.alpha, 3));
  }
  const auto r = run({"eval", "--pred", (dir / "gt").string(), "--gt", (dir / "gt").string(),
                      "--trimaps", (dir / "tri").string(), "--out",
                      (dir / "report").string()});
  REQUIRE(r.code == 0);
  const auto rows = read_csv(dir.path() / "report" / "metrics.csv");
  REQUIRE(rows.size() == 5);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 7);
    for (int c = 2; c < 7; ++c) CHECK(std::stod(rows[i][c]) == 0.0);
  }
  CHECK(fs::exists(dir.path() / "report" / "metrics.json"));

  // A missing prediction is flagged, not fatal.
  fs::create_directories(dir / "partial");
  fs::copy_file(dir.path() / "gt" / "fg0.png", dir.path() / "partial" / "fg0.png");
  const auto partial =
      run({"eval", "--pred", (dir / "partial").string(), "--gt", (dir / "gt").string(),
           "--trimaps", (dir / "tri").string(), "--out", (dir / "report2").string()});
  CHECK(partial.code == 1);
  const auto j = nlohmann::json::parse(std::ifstream(dir.path() / "report2" / "metrics.json"));
  CHECK(j["flags"].size() == 2);
}

TEST_CASE("synth, train, infer, eval and sweep end to end") {
  TempDir dir("clismoke");
  const auto result = smoke::run_pipeline(dir.path());
  std::string errors;
  for (const auto& step : result.steps) errors += step.name + ": " + step.err;
  REQUIRE_MESSAGE(result.ok(), errors);
  CHECK(result.metrics_finite());
  // 2 foregrounds x 2 backgrounds, header and mean row.
  CHECK(result.metrics.size() == 6);

  const fs::path data = dir.path() / "data";
  const fs::path run_dir = dir.path() / "run";
  const fs::path ckpt = run_dir / "model.ckpt";
  const std::string cfg = smoke::config_path().string();
  CHECK(fs::exists(data / "000003" / "image.png"));
  CHECK(!fs::exists(data / "000004"));
  CHECK(read_csv(run_dir / "loss_history.csv").size() == 51);
  const auto saved = io::load_checkpoint(ckpt);
  CHECK(saved.phase == Phase::kFineTuneAll);
  CHECK(saved.train_step == 50);

  // The config written next to the checkpoint rebuilds the same model.
  const auto insp = run({"inspect", "--checkpoint", ckpt.string()});
  CHECK(insp.code == 0);
  CHECK(insp.out.find("refine.conv4.weight") != std::string::npos);
  const auto again = run({"infer", "--config", (run_dir / "config.yaml").string(),
                          "--checkpoint", ckpt.string(), "--image",
                          (data / "000000" / "image.png").string(), "--trimap",
                          (data / "000000" / "trimap.png").string(), "--out",
                          (dir / "single.png").string()});
  REQUIRE_MESSAGE(again.code == 0, again.err);
  const Matte m = io::read_matte(dir / "single.png");
  const Matte batch = io::read_matte(dir.path() / "preds" / "000000.png");
  // The single-image path reads the 8-bit composite, the dataset path
  // re-composites from fg/bg/alpha, so only the geometry must agree.
  CHECK(m.rows() == batch.rows());
  CHECK(m.cols() == batch.cols());
  CHECK(m.minCoeff() >= 0.0f);
  CHECK(m.maxCoeff() <= 1.0f);

  const auto mismatch = run({"infer", "--checkpoint", ckpt.string(), "--dataset",
                             data.string(), "--out", (dir / "x").string()});
  CHECK(mismatch.code == 1);
  CHECK(mismatch.err.find("fingerprint") != std::string::npos);

  const auto sw = run({"sweep", "--config", cfg, "--checkpoint", ckpt.string(), "--refine",
                       "guided:r=2,eps=0.01", "--dataset", data.string(), "--out",
                       (dir / "sweep").string()});
  REQUIRE_MESSAGE(sw.code == 0, sw.err);
  // One sample per foreground: 2 x 2 dilations + 2 aggregates + header.
  CHECK(read_csv(dir.path() / "sweep" / "metrics.csv").size() == 7);

  std::ifstream log(run_dir / "run.log.jsonl");
  std::string line;
  int steps = 0;
  while (std::getline(log, line)) {
    if (nlohmann::json::parse(line)["event"] == "step") ++steps;
  }
  CHECK(steps == 50);
}
