#include "posefuse/pipeline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "posefuse/error.hpp"
#include "posefuse/eval/metrics.hpp"
#include "posefuse/eval/plot.hpp"
#include "posefuse/eval/predictions.hpp"
#include "posefuse/eval/timing.hpp"
#include "posefuse/fusion.hpp"
#include "posefuse/nn/model_io.hpp"
#include "posefuse/util/checksum.hpp"
#include "posefuse/util/parallel.hpp"
#include "posefuse/version.hpp"

namespace posefuse::pipeline {

namespace fs = std::filesystem;

PreparedData prepare_data(data::PoseDataset dataset, std::uint64_t seed, data::AccessAudit* audit) {
  data::DatasetSplit split = data::split_dataset(dataset.records(), seed);
  nn::DataNormalization norm = data::fit_normalization(dataset, split.train_indices, {}, audit);
  return {std::move(dataset), std::move(split), norm};
}

std::uint64_t init_seed(std::uint64_t experiment_seed, const MemberSpec& member) {
  return derive_seed(experiment_seed, 1000 + 2 * member.init + (member.backbone == "B" ? 1 : 0));
}

std::uint64_t train_seed(std::uint64_t experiment_seed, const std::string& model_name) {
  return derive_seed(experiment_seed, 5000 + crc32(model_name));
}

const eval::MetricsReport& PipelineResult::report(const std::string& name) const {
  for (const auto& r : reports) {
    if (r.name == name) return r;
  }
  throw Error("no report row named '" + name + "'");
}

namespace {

class StageRunner {
 public:
  StageRunner(const ProgressFn& progress, std::map<std::string, double>& seconds)
      : progress_(progress), seconds_(seconds) {}

  template <typename Fn>
  auto operator()(const std::string& stage, Fn&& fn) {
    if (progress_) progress_("stage " + stage);
    const auto start = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        record(stage, start);
      } else {
        auto result = fn();
        record(stage, start);
        return result;
      }
    } catch (const NumericalError& e) {
      throw NumericalError("stage " + stage + ": " + e.what());
    } catch (const Error& e) {
      throw Error("stage " + stage + ": " + e.what());
    }
  }

 private:
  void record(const std::string& stage, std::chrono::steady_clock::time_point start) {
    seconds_[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  const ProgressFn& progress_;
  std::map<std::string, double>& seconds_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string history_csv(const nn::TrainHistory& history) {
  std::string out = "epoch,loss\n";
  for (std::size_t i = 0; i < history.epoch_loss.size(); ++i) out += fmt::format("{},{}\n", i + 1, history.epoch_loss[i]);
  return out;
}

eval::MetricsReport make_report(const std::string& name, const std::vector<Pose>& preds,
                                const std::vector<Pose>& truth) {
  const eval::PoseErrorStats s = eval::pose_error_stats(preds, truth);
  return {name, s.median_et, s.mean_et, s.median_er, s.mean_er, std::nullopt};
}

std::vector<Pose> poses_of(const std::vector<fusion::FusedPrediction>& fused) {
  std::vector<Pose> out;
  out.reserve(fused.size());
  for (const auto& f : fused) out.push_back(f.pose);
  return out;
}

}  // namespace

PipelineResult run_pipeline(const ExperimentConfig& config, const ProgressFn& progress) {
  PipelineResult result;
  result.output = config.output;
  StageRunner stage(progress, result.stage_seconds);
  const fs::path out = config.output;
  if (std::find(kReportRows.begin(), kReportRows.end(), config.baseline) == kReportRows.end()) {
    throw Error("baseline '" + config.baseline + "' is not a report row");
  }
  for (const char* dir : {"models", "histories"}) {
    std::error_code ec;
    fs::create_directories(out / dir, ec);
    if (ec) throw IoError("cannot create output directory " + (out / dir).string() + ": " + ec.message());
  }

  // ---- data ----------------------------------------------------------------
  data::AccessAudit audit;
  PreparedData prepared = stage("data", [&] {
    if (config.dataset.path) {
      if (!fs::exists(*config.dataset.path)) throw IoError("dataset not found: " + config.dataset.path->string());
      return prepare_data(data::PoseDataset::open(*config.dataset.path), config.seed, &audit);
    }
    const std::uint64_t seed = config.dataset.synthetic_seed.value_or(config.seed);
    data::SyntheticDataset synth =
        data::generate_synthetic(seed, config.dataset.synthetic_samples, config.dataset.world);
    data::write_synthetic_dataset(out / "dataset", synth);
    return prepare_data(data::PoseDataset::from_memory(std::move(synth.records), std::move(synth.images)),
                        config.seed, &audit);
  });
  const data::PoseDataset& ds = prepared.dataset;
  const data::DatasetSplit& split = prepared.split;
  data::write_pose_file(out / "train_poses.txt", split.train);
  data::write_pose_file(out / "test_poses.txt", split.test);

  auto samples = [&](const std::vector<std::size_t>& indices, const std::string& stage_name) {
    return data::ImageSamples(ds, indices, prepared.norm, config.rotation, {}, &audit, stage_name);
  };
  const data::ImageSamples test = samples(split.test_indices, "evaluate");
  std::vector<Pose> truth;
  for (std::size_t i : split.test_indices) truth.push_back(data::to_pose(ds.record(i), config.rotation));

  // ---- unimodal members ----------------------------------------------------
  std::vector<MemberSpec> members = {{"A", 0}, {"B", 0}};
  for (const MemberSpec& m : config.late_members) {
    if (std::find(members.begin(), members.end(), m) == members.end()) members.push_back(m);
  }
  std::map<std::string, nn::PoseNetModel> models;
  std::map<std::string, nn::TrainHistory> histories;

  stage("train:unimodal", [&] {
    std::vector<std::optional<nn::PoseNetModel>> built(members.size());
    std::vector<nn::TrainHistory> hist(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      built[i] = nn::PoseNetModel::build(nn::BackboneSpec::by_id(members[i].backbone), {},
                                         init_seed(config.seed, members[i]));
      built[i]->normalization() = prepared.norm;
    }
    for (std::size_t i = 0; i < 2; ++i) {
      const auto preds = fusion::predict_poses(*built[i], test);
      result.untrained.push_back(make_report("untrained_" + members[i].name(), preds, truth));
    }
    parallel_for(members.size(), [&](std::size_t i) {
      const std::string name = members[i].name();
      const data::ImageSamples train = samples(split.train_indices, "train:" + name);
      nn::TrainConfig tc = config.train;
      tc.seed = train_seed(config.seed, name);
      hist[i] = nn::train(*built[i], train, tc);
    });
    for (std::size_t i = 0; i < members.size(); ++i) {
      models.emplace(members[i].name(), std::move(*built[i]));
      histories[members[i].name()] = std::move(hist[i]);
    }
  });

  // ---- early fusion ----------------------------------------------------------
  stage("train:early_fusion", [&] {
    const nn::PoseNetModel& a = models.at("unimodalA");
    const nn::PoseNetModel& b = models.at("unimodalB");
    std::vector<std::pair<std::string, nn::PoseNetModel>> sewn;
    for (const auto& [prefix, op] : {std::pair{"AEF", fusion::FusionOp::kAdd}, {"MEF", fusion::FusionOp::kMultiply}}) {
      const nn::Dense fused = fusion::early_fuse_weights(a.top_dense(), b.top_dense(), op);
      auto [sa, sb] = fusion::sew_into_models(a, b, fused, fusion::lineage_for(op));
      sewn.emplace_back(std::string(prefix) + "_A", std::move(sa));
      sewn.emplace_back(std::string(prefix) + "_B", std::move(sb));
    }
    std::vector<nn::TrainHistory> hist(sewn.size());
    parallel_for(sewn.size(), [&](std::size_t i) {
      const data::ImageSamples train = samples(split.train_indices, "train:" + sewn[i].first);
      nn::TrainConfig tc = config.train;
      tc.seed = train_seed(config.seed, sewn[i].first);
      hist[i] = fusion::retrain_after_sewing(sewn[i].second, train, tc);
    });
    for (std::size_t i = 0; i < sewn.size(); ++i) {
      histories[sewn[i].first] = std::move(hist[i]);
      models.emplace(sewn[i].first, std::move(sewn[i].second));
    }
  });

  stage("save_models", [&] {
    for (const auto& [name, model] : models) nn::save_model(model, out / "models" / (name + ".pfm"));
    for (const auto& [name, history] : histories) write_text(out / "histories" / (name + ".csv"), history_csv(history));
  });

  // ---- evaluation ------------------------------------------------------------
  std::map<std::string, std::vector<Pose>> predictions;
  stage("evaluate", [&] {
    std::vector<std::string> names;
    std::vector<const nn::PoseNetModel*> ptrs;
    for (const auto& [name, model] : models) {
      names.push_back(name);
      ptrs.push_back(&model);
    }
    auto member_preds = fusion::predict_members(ptrs, test);
    for (std::size_t i = 0; i < names.size(); ++i) predictions[names[i]] = std::move(member_preds[i]);

    std::vector<std::vector<Pose>> lf_members;
    for (const MemberSpec& m : config.late_members) lf_members.push_back(predictions.at(m.name()));
    predictions["LF"] = poses_of(fusion::fuse_member_predictions(lf_members, fusion::FusionOp::kAverage, config.late));

    const auto& m = models;
    predictions["AHL"] = poses_of(fusion::build_ahl(m.at("AEF_A"), m.at("AEF_B"), test, config.late));
    predictions["MHL"] = poses_of(fusion::build_mhl(m.at("MEF_A"), m.at("MEF_B"), test, config.late));
    predictions["HLFF"] =
        poses_of(fusion::build_hlff(m.at("AEF_A"), m.at("AEF_B"), m.at("MEF_A"), m.at("MEF_B"), test, config.late));

    for (const std::string& row : kReportRows) result.reports.push_back(make_report(row, predictions.at(row), truth));

    std::vector<eval::PredictionRow> rows;
    for (const std::string& row : kReportRows) {
      for (std::size_t i = 0; i < split.test_indices.size(); ++i) {
        rows.push_back({ds.record(split.test_indices[i]).image_ref, row, predictions.at(row)[i]});
      }
    }
    eval::write_predictions(out / "predictions.csv", rows);
  });

  // ---- reports ---------------------------------------------------------------
  stage("report", [&] {
    const auto baseline = std::find_if(result.reports.begin(), result.reports.end(),
                                       [&](const auto& r) { return r.name == config.baseline; });
    std::vector<eval::MetricsReport> others;
    for (const auto& r : result.reports) {
      if (r.name != config.baseline) others.push_back(r);
    }
    result.improvements = eval::improvement_table(*baseline, others);
    write_text(out / "report.csv", eval::render_report(result.reports, eval::ReportFormat::kCsv));
    write_text(out / "report.md", eval::render_report(result.reports, eval::ReportFormat::kMarkdown));
    write_text(out / "improvements.csv", eval::render_improvements(result.improvements, eval::ReportFormat::kCsv));
    write_text(out / "improvements.md",
               eval::render_improvements(result.improvements, eval::ReportFormat::kMarkdown));
    write_text(out / "untrained.csv", eval::render_report(result.untrained, eval::ReportFormat::kCsv));

    std::vector<std::size_t> order(split.test_indices.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return split.test_indices[x] < split.test_indices[y]; });
    std::vector<eval::TrajectorySeries> series = {{"ground truth", "#222222", {}, true},
                                                  {config.baseline, "#d95f02", {}, false},
                                                  {"HLFF", "#1b9e77", {}, false}};
    for (std::size_t i : order) {
      series[0].points.push_back(truth[i].t);
      series[1].points.push_back(predictions.at(config.baseline)[i].t);
      series[2].points.push_back(predictions.at("HLFF")[i].t);
    }
    write_text(out / "trajectory.svg", eval::render_trajectory_svg(series));
  });

  // ---- timing ----------------------------------------------------------------
  result.timed_reports = result.reports;
  if (config.timing.enabled) {
    stage("timing", [&] {
      std::vector<std::size_t> subset(split.test_indices.begin(),
                                      split.test_indices.begin() +
                                          static_cast<std::ptrdiff_t>(std::min(config.timing.samples,
                                                                               split.test_indices.size())));
      const data::ImageSamples timing_samples = samples(subset, "timing");
      auto members_of = [&](const std::string& row) -> std::vector<const nn::PoseNetModel*> {
        if (row == "LF") {
          std::vector<const nn::PoseNetModel*> out;
          for (const MemberSpec& m : config.late_members) out.push_back(&models.at(m.name()));
          return out;
        }
        if (row == "AHL") return {&models.at("AEF_A"), &models.at("AEF_B")};
        if (row == "MHL") return {&models.at("MEF_A"), &models.at("MEF_B")};
        if (row == "HLFF") return {&models.at("AEF_A"), &models.at("AEF_B"), &models.at("MEF_A"), &models.at("MEF_B")};
        return {&models.at(row)};
      };
      for (eval::MetricsReport& report : result.timed_reports) {
        const auto ptrs = members_of(report.name);
        const fusion::FusionOp op = report.name == "MHL" ? fusion::FusionOp::kMultiply : fusion::FusionOp::kAverage;
        auto process = [&](std::size_t begin, std::size_t end) {
          std::vector<nn::Tensor> inputs;
          for (std::size_t i = begin; i < end; ++i) inputs.push_back(timing_samples.input(i));
          const nn::Tensor batch = nn::stack(inputs);
          std::vector<std::vector<Pose>> member_poses;
          for (const nn::PoseNetModel* m : ptrs) {
            const nn::Tensor raw = m->predict(batch);
            std::vector<Pose> poses;
            for (std::size_t r = 0; r < raw.dim(0); ++r) {
              std::array<double, 7> flat;
              std::copy_n(raw.data() + r * nn::kPoseDim, nn::kPoseDim, flat.begin());
              poses.push_back(Pose::from_flat(flat));
            }
            member_poses.push_back(std::move(poses));
          }
          if (member_poses.size() > 1) fusion::fuse_member_predictions(member_poses, op, config.late);
        };
        eval::MapstOptions opts{config.timing.batch_size, config.timing.repetitions};
        report.mapst = eval::measure_mapst(subset.size(), process, opts);
      }
      const auto baseline = std::find_if(result.timed_reports.begin(), result.timed_reports.end(),
                                         [&](const auto& r) { return r.name == config.baseline; });
      std::vector<eval::MetricsReport> others;
      for (const auto& r : result.timed_reports) {
        if (r.name != config.baseline) others.push_back(r);
      }
      result.timed_improvements = eval::improvement_table(*baseline, others);
      write_text(out / "report_timed.csv", eval::render_report(result.timed_reports, eval::ReportFormat::kCsv));
      write_text(out / "report_timed.md", eval::render_report(result.timed_reports, eval::ReportFormat::kMarkdown));
      write_text(out / "improvements_timed.md",
                 eval::render_improvements(result.timed_improvements, eval::ReportFormat::kMarkdown));
    });
  }

  // ---- manifest --------------------------------------------------------------
  std::set<std::size_t> test_set(split.test_indices.begin(), split.test_indices.end());
  nlohmann::ordered_json audit_json = nlohmann::ordered_json::object();
  result.audit_clean = true;
  for (const std::string& s : audit.stages()) {
    const std::set<std::size_t> seen = audit.indices(s);
    std::size_t test_hits = 0;
    for (std::size_t i : seen) test_hits += test_set.count(i);
    const bool training_stage = s.rfind("train:", 0) == 0 || s == "normalization";
    if (training_stage && test_hits > 0) result.audit_clean = false;
    audit_json[s] = {{"images", seen.size()}, {"test_images", test_hits}};
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(out)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), out).generic_string();
    if (rel == "manifest.json" || rel.find("_timed") != std::string::npos) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) {
    result.checksums[fs::relative(f, out).generic_string()] = crc32_hex(crc32_file(f));
  }

  nlohmann::ordered_json manifest;
  manifest["tool"] = "posefuse";
  manifest["version"] = kVersion;
  manifest["config"] = format_config(config);
  manifest["split"] = {{"train", split.train.size()}, {"test", split.test.size()}, {"seed", split.seed}};
  manifest["audit"] = {{"test_images_read_during_training", !result.audit_clean}, {"stages", audit_json}};
  manifest["checksums"] = result.checksums;
  manifest["timings_s"] = result.stage_seconds;
  nlohmann::ordered_json timed = nlohmann::ordered_json::array();
  for (const auto& r : result.timed_reports) {
    if (r.mapst) timed.push_back({{"model", r.name}, {"mapst_s", *r.mapst}});
  }
  manifest["mapst"] = timed;
  result.manifest = out / "manifest.json";
  write_text(result.manifest, manifest.dump(2) + "\n");
  return result;
}

}  // namespace posefuse::pipeline
