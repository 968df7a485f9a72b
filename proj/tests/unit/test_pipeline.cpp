#include <filesystem>
#include <fstream>

#include <doctest.h>
#include <json.hpp>

#include "posefuse/error.hpp"
#include "posefuse/pipeline/config.hpp"
#include "posefuse/pipeline/pipeline.hpp"

using namespace posefuse;
using namespace posefuse::pipeline;
namespace fs = std::filesystem;

TEST_SUITE("config") {
  TEST_CASE("defaults and the desk config") {
    const ExperimentConfig def = parse_config("");
    CHECK(def.train.learning_rate == 0.01);
    CHECK(def.train.dropout_rate == 0.5);
    CHECK(def.train.batch_size == 34);
    CHECK(def.train.epochs == 200);
    CHECK(def.late_members.size() == 5);

    const ExperimentConfig desk = load_config(fs::path(POSEFUSE_FIXTURES) / ".." / ".." / "configs" / "desk.ini");
    CHECK(desk.seed == 7);
    CHECK(desk.dataset.synthetic_samples == 600);
    CHECK(desk.train.learning_rate == 0.002);
    CHECK(desk.timing.samples == 50);
  }

  TEST_CASE("format and parse round trip") {
    ExperimentConfig cfg;
    cfg.seed = 99;
    cfg.train.scope = nn::TrainableScope::kAll;
    cfg.late.hlff_mode = fusion::HlffMode::kHybridOutputs;
    cfg.late_members = parse_members("A:0,B:3");
    const ExperimentConfig back = parse_config(format_config(cfg));
    CHECK(back.seed == 99);
    CHECK(back.train.scope == nn::TrainableScope::kAll);
    CHECK(back.late.hlff_mode == fusion::HlffMode::kHybridOutputs);
    CHECK(back.late_members == cfg.late_members);
    CHECK(format_config(back) == format_config(cfg));
  }

  TEST_CASE("invalid configs are rejected") {
    CHECK_THROWS_AS(parse_config("[experiment]\nunknown = 1\n"), Error);
    CHECK_THROWS_AS(parse_config("[nonsense]\nseed = 1\n"), Error);
    CHECK_THROWS_AS(parse_config("[train]\nepochs = many\n"), Error);
    CHECK_THROWS_AS(parse_config("[train]\nscope = everything\n"), Error);
    CHECK_THROWS_AS(parse_members("A0"), Error);
    CHECK(parse_member("B:2").name() == "unimodalB2");
    CHECK(parse_member("A:0").name() == "unimodalA");
  }
}

TEST_SUITE("pipeline") {
  ExperimentConfig small_config(const fs::path& out) {
    ExperimentConfig cfg;
    cfg.seed = 3;
    cfg.output = out;
    cfg.dataset.synthetic_samples = 16;
    cfg.train.epochs = 2;
    cfg.timing.enabled = false;
    return cfg;
  }

  TEST_CASE("small end-to-end run is complete, clean and reproducible") {
    const fs::path root = fs::temp_directory_path() / "posefuse_unit_pipeline";
    fs::remove_all(root);
    const PipelineResult a = run_pipeline(small_config(root / "a"));
    const PipelineResult b = run_pipeline(small_config(root / "b"));

    CHECK(a.audit_clean);
    CHECK(a.reports.size() == kReportRows.size());
    for (std::size_t i = 0; i < kReportRows.size(); ++i) {
      CHECK(a.reports[i].name == kReportRows[i]);
      CHECK(a.reports[i].median_et.has_value());
      CHECK_FALSE(a.reports[i].mapst.has_value());
    }
    CHECK(a.untrained.size() == 2);
    CHECK(a.checksums == b.checksums);
    for (const char* file : {"report.csv", "report.md", "improvements.md", "predictions.csv", "trajectory.svg",
                             "models/AEF_A.pfm", "manifest.json"}) {
      CHECK_MESSAGE(fs::exists(root / "a" / file), file);
    }
    const auto manifest = nlohmann::json::parse(std::ifstream(a.manifest));
    CHECK(manifest["audit"]["test_images_read_during_training"] == false);
    fs::remove_all(root);
  }

  TEST_CASE("missing dataset path fails in the data stage") {
    ExperimentConfig cfg = small_config(fs::temp_directory_path() / "posefuse_unit_pipeline_missing");
    cfg.dataset.path = "/nonexistent/dataset";
    try {
      run_pipeline(cfg);
      FAIL("expected an error");
    } catch (const NumericalError&) {
      FAIL("wrong category");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("/nonexistent/dataset") != std::string::npos);
    }
  }
}
