#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "posefuse/data/dataset.hpp"
#include "posefuse/data/split.hpp"
#include "posefuse/data/synthetic.hpp"
#include "posefuse/error.hpp"
#include "posefuse/eval/metrics.hpp"
#include "posefuse/eval/plot.hpp"
#include "posefuse/eval/predictions.hpp"
#include "posefuse/eval/report.hpp"
#include "posefuse/fusion.hpp"
#include "posefuse/nn/model_io.hpp"
#include "posefuse/pipeline/pipeline.hpp"
#include "posefuse/version.hpp"

namespace fs = std::filesystem;
using namespace posefuse;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

void emit(const std::optional<fs::path>& path, const std::string& text) {
  if (path) {
    write_text(*path, text);
  } else {
    std::cout << text;
  }
}

// ---- gen-data ---------------------------------------------------------------

struct GenDataArgs {
  std::uint64_t seed = 0;
  std::size_t n = 600;
  fs::path out;
};

int gen_data(const GenDataArgs& a) {
  const data::SyntheticDataset ds = data::generate_synthetic(a.seed, a.n);
  const fs::path manifest = data::write_synthetic_dataset(a.out, ds);
  std::cout << manifest.string() << "\n";
  return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  fs::path dataset;
  std::string backbone = "A";
  std::optional<fs::path> init_model;
  fs::path out;
  std::optional<fs::path> history;
  std::uint64_t seed = 0;
  std::uint64_t init_seed = 0;
  nn::TrainConfig config;
  std::string scope = "top_dense_and_head";
};

int train(TrainArgs a) {
  pipeline::PreparedData prepared = pipeline::prepare_data(data::PoseDataset::open(a.dataset), a.seed);
  nn::PoseNetModel model = a.init_model ? nn::load_model(*a.init_model)
                                        : nn::PoseNetModel::build(nn::BackboneSpec::by_id(a.backbone), {}, a.init_seed);
  model.normalization() = prepared.norm;
  const data::ImageSamples samples(prepared.dataset, prepared.split.train_indices, prepared.norm);
  a.config.seed = a.seed;
  a.config.scope = pipeline::scope_from_string(a.scope);
  const nn::TrainHistory history = model.lineage() == nn::Lineage::kUnimodal
                                       ? nn::train(model, samples, a.config)
                                       : fusion::retrain_after_sewing(model, samples, a.config);
  nn::save_model(model, a.out);
  if (a.history) {
    std::string csv = "epoch,loss\n";
    for (std::size_t i = 0; i < history.epoch_loss.size(); ++i) csv += fmt::format("{},{}\n", i + 1, history.epoch_loss[i]);
    write_text(*a.history, csv);
  }
  if (!history.epoch_loss.empty()) {
    std::cerr << fmt::format("trained {} epochs, final loss {:.6f}\n", history.epoch_loss.size(),
                             history.epoch_loss.back());
  }
  std::cout << a.out.string() << "\n";
  return 0;
}

// ---- fuse-early -------------------------------------------------------------

struct FuseEarlyArgs {
  fs::path model_a, model_b, out_a, out_b;
  std::string op = "add";
};

int fuse_early(const FuseEarlyArgs& a) {
  const nn::PoseNetModel ma = nn::load_model(a.model_a);
  const nn::PoseNetModel mb = nn::load_model(a.model_b);
  const fusion::FusionOp op = fusion::fusion_op_from_string(a.op);
  const nn::Dense fused = fusion::early_fuse_weights(ma.top_dense(), mb.top_dense(), op);
  const auto [sa, sb] = fusion::sew_into_models(ma, mb, fused, fusion::lineage_for(op));
  nn::save_model(sa, a.out_a);
  nn::save_model(sb, a.out_b);
  std::cout << a.out_a.string() << "\n" << a.out_b.string() << "\n";
  return 0;
}

// ---- predict ----------------------------------------------------------------

struct PredictArgs {
  std::vector<fs::path> models;
  fs::path dataset;
  std::string split = "test";
  std::uint64_t seed = 0;
  std::optional<std::string> op;
  std::optional<fs::path> out;
};

int predict(const PredictArgs& a) {
  std::vector<nn::PoseNetModel> models;
  for (const fs::path& p : a.models) models.push_back(nn::load_model(p));
  std::vector<const nn::PoseNetModel*> ptrs;
  for (const auto& m : models) ptrs.push_back(&m);

  std::optional<fusion::FusionOp> op;
  if (models.size() >= 2) {
    op = fusion::fusion_op_from_string(a.op.value_or("average"));
    const bool sewn = std::any_of(models.begin(), models.end(),
                                  [](const auto& m) { return m.lineage() != nn::Lineage::kUnimodal; });
    if (sewn) fusion::classify_hybrid(ptrs, *op);
    if (*op == fusion::FusionOp::kAdd) throw Error("late fusion supports average and multiply only");
  }

  const data::PoseDataset ds = data::PoseDataset::open(a.dataset);
  std::vector<std::size_t> indices;
  if (a.split == "all") {
    for (std::size_t i = 0; i < ds.size(); ++i) indices.push_back(i);
  } else {
    const data::DatasetSplit split = data::split_dataset(ds.records(), a.seed);
    if (a.split == "test") {
      indices = split.test_indices;
    } else if (a.split == "train") {
      indices = split.train_indices;
    } else {
      throw Error("--split must be test, train or all");
    }
  }

  std::vector<std::vector<Pose>> member_poses;
  for (const auto& m : models) {
    const data::ImageSamples samples(ds, indices, m.normalization());
    member_poses.push_back(fusion::predict_poses(m, samples));
  }
  std::vector<eval::PredictionRow> rows;
  for (std::size_t k = 0; k < models.size(); ++k) {
    const std::string source = a.models[k].stem().string();
    for (std::size_t i = 0; i < indices.size(); ++i) rows.push_back({ds.record(indices[i]).image_ref, source, member_poses[k][i]});
  }
  if (op) {
    const auto fused = fusion::fuse_member_predictions(member_poses, *op);
    for (std::size_t i = 0; i < indices.size(); ++i) rows.push_back({ds.record(indices[i]).image_ref, "fused", fused[i].pose});
  }
  emit(a.out, eval::format_predictions(rows));
  return 0;
}

// ---- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  fs::path predictions, ground_truth;
  std::string format = "markdown";
  std::optional<fs::path> out;
  std::optional<fs::path> plot;
  std::string rotation = "standard";
};

int evaluate(const EvaluateArgs& a) {
  const auto rows = eval::read_predictions(a.predictions);
  const auto truth_records = data::load_pose_file(a.ground_truth);
  data::RotationSettings rot;
  if (a.rotation == "half_angle") {
    rot.conversion = RotationConversion::kHalfAngle;
  } else if (a.rotation != "standard") {
    throw Error("--rotation must be standard or half_angle");
  }
  std::map<std::string, Pose> truth;
  for (const auto& r : truth_records) truth[r.image_ref] = data::to_pose(r, rot);

  std::vector<eval::MetricsReport> reports;
  std::vector<eval::TrajectorySeries> series = {{"ground truth", "#222222", {}, false}};
  const char* palette[] = {"#d95f02", "#1b9e77", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};
  for (const std::string& source : eval::sources(rows)) {
    std::vector<Pose> preds, gts;
    for (const auto& r : eval::select_source(rows, source)) {
      const auto it = truth.find(r.image_ref);
      if (it == truth.end()) throw LengthMismatch("no ground truth for " + r.image_ref);
      preds.push_back(r.pose);
      gts.push_back(it->second);
    }
    const eval::PoseErrorStats s = eval::pose_error_stats(preds, gts);
    reports.push_back({source, s.median_et, s.mean_et, s.median_er, s.mean_er, std::nullopt});
    eval::TrajectorySeries ts{source, palette[(series.size() - 1) % 6], {}, false};
    for (const Pose& p : preds) ts.points.push_back(p.t);
    if (series[0].points.empty()) {
      for (const Pose& g : gts) series[0].points.push_back(g.t);
    }
    series.push_back(std::move(ts));
  }
  emit(a.out, eval::render_report(reports, eval::report_format_from_string(a.format)));
  if (a.plot) write_text(*a.plot, eval::render_trajectory_svg(series));
  return 0;
}

// ---- pipeline ---------------------------------------------------------------

struct PipelineArgs {
  std::optional<fs::path> config;
  std::optional<fs::path> output;
  std::optional<std::string> baseline;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<fs::path> dataset;
  bool no_timing = false;
};

int run_pipeline(const PipelineArgs& a) {
  pipeline::ExperimentConfig config = a.config ? pipeline::load_config(*a.config) : pipeline::ExperimentConfig{};
  if (a.output) config.output = *a.output;
  if (a.baseline) config.baseline = *a.baseline;
  if (a.seed) config.seed = *a.seed;
  if (a.epochs) config.train.epochs = *a.epochs;
  if (a.dataset) config.dataset.path = *a.dataset;
  if (a.no_timing) config.timing.enabled = false;
  const auto result = pipeline::run_pipeline(config, [](const std::string& msg) { std::cerr << msg << "\n"; });
  std::cout << eval::render_report(config.timing.enabled ? result.timed_reports : result.reports,
                                   eval::ReportFormat::kMarkdown)
            << "\n"
            << eval::render_improvements(config.timing.enabled ? result.timed_improvements : result.improvements,
                                         eval::ReportFormat::kMarkdown)
            << "\n"
            << "manifest: " << result.manifest.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"posefuse: pose regression with early, late and hybrid model fusion"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic trajectory dataset");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--n", gen.n, "Number of samples (at least 8)");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model on the training split of a dataset");
  train_cmd->add_option("--dataset", tr.dataset, "Dataset directory or pose file")->required();
  train_cmd->add_option("--backbone", tr.backbone, "Stand-in backbone: A or B");
  train_cmd->add_option("--init-model", tr.init_model, "Continue from a model file (e.g. a sewn model)");
  train_cmd->add_option("--out", tr.out, "Model file to write")->required();
  train_cmd->add_option("--history", tr.history, "Loss history CSV");
  train_cmd->add_option("--seed", tr.seed, "Split and training seed");
  train_cmd->add_option("--init-seed", tr.init_seed, "Weight initialization seed");
  train_cmd->add_option("--epochs", tr.config.epochs, "Epochs");
  train_cmd->add_option("--lr", tr.config.learning_rate, "Adam learning rate");
  train_cmd->add_option("--batch", tr.config.batch_size, "Batch size");
  train_cmd->add_option("--dropout", tr.config.dropout_rate, "Head dropout rate");
  train_cmd->add_option("--scope", tr.scope, "head, top_dense_and_head or all");

  FuseEarlyArgs fe;
  auto* fuse_cmd = app.add_subcommand("fuse-early", "Sew the fused top dense layer into both models");
  fuse_cmd->add_option("--model-a", fe.model_a)->required();
  fuse_cmd->add_option("--model-b", fe.model_b)->required();
  fuse_cmd->add_option("--op", fe.op, "add or multiply");
  fuse_cmd->add_option("--out-a", fe.out_a)->required();
  fuse_cmd->add_option("--out-b", fe.out_b)->required();

  PredictArgs pr;
  auto* predict_cmd = app.add_subcommand("predict", "Predict poses with one or more models");
  predict_cmd->add_option("--model", pr.models, "Model file (repeatable)")->required();
  predict_cmd->add_option("--dataset", pr.dataset, "Dataset directory or pose file")->required();
  predict_cmd->add_option("--split", pr.split, "test, train or all");
  predict_cmd->add_option("--seed", pr.seed, "Split seed");
  predict_cmd->add_option("--fusion", pr.op, "Late fusion op for >= 2 models: average or multiply");
  predict_cmd->add_option("--out", pr.out, "Predictions CSV (default stdout)");

  EvaluateArgs ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions against ground truth");
  eval_cmd->add_option("--predictions", ev.predictions)->required();
  eval_cmd->add_option("--ground-truth", ev.ground_truth, "Pose file")->required();
  eval_cmd->add_option("--format", ev.format, "csv or markdown");
  eval_cmd->add_option("--out", ev.out, "Report file (default stdout)");
  eval_cmd->add_option("--plot", ev.plot, "SVG trajectory overlay");
  eval_cmd->add_option("--rotation", ev.rotation, "standard or half_angle");

  PipelineArgs pl;
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run the full experiment");
  pipe_cmd->add_option("--config", pl.config, "Experiment config file");
  pipe_cmd->add_option("--output", pl.output, "Output directory");
  pipe_cmd->add_option("--baseline", pl.baseline, "Baseline row for the improvement table");
  pipe_cmd->add_option("--seed", pl.seed, "Experiment seed");
  pipe_cmd->add_option("--epochs", pl.epochs, "Training epochs");
  pipe_cmd->add_option("--dataset", pl.dataset, "Use an existing dataset");
  pipe_cmd->add_flag("--no-timing", pl.no_timing, "Skip MAPST measurement");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen_cmd) return gen_data(gen);
    if (*train_cmd) return train(tr);
    if (*fuse_cmd) return fuse_early(fe);
    if (*predict_cmd) return predict(pr);
    if (*eval_cmd) return evaluate(ev);
    if (*pipe_cmd) return run_pipeline(pl);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
