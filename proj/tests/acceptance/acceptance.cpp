// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/core.h>

#include "posefuse/error.hpp"
#include "posefuse/eval/report.hpp"
#include "posefuse/eval/timing.hpp"
#include "posefuse/fusion.hpp"
#include "posefuse/geometry.hpp"
#include "posefuse/nn/loss.hpp"
#include "posefuse/pipeline/config.hpp"
#include "posefuse/pipeline/pipeline.hpp"
#include "posefuse/util/checksum.hpp"
#include "support/gradcheck.hpp"

using namespace posefuse;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

int failures = 0;

void report(int id, const std::string& title, double limit_s, const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto t0 = Clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail << "[exception: " << e.what() << "] ";
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (limit_s > 0 && secs >= limit_s) {
    out.pass = false;
    out.detail << fmt::format("[runtime {:.2f} s exceeds {:.0f} s] ", secs, limit_s);
  }
  if (!out.pass) ++failures;
  fmt::print("criterion {}: {} {}; {}runtime {:.2f} s\n", id, out.pass ? "PASS" : "FAIL", title, out.detail.str(),
             secs);
  std::fflush(stdout);
}

nn::Tensor random_poses(std::size_t n, Rng& rng) {
  nn::Tensor t({n, nn::kPoseDim});
  for (double& v : t.values()) v = rng.uniform(-3.0, 3.0);
  return t;
}

nn::Tensor random_tensor(const nn::Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  nn::Tensor t(shape);
  testing::fill_away_from_zero(t, rng);
  return t;
}

Quaternion random_unit(Rng& rng) {
  return Quaternion{rng.normal(), rng.normal(), rng.normal(), rng.normal()}.normalized();
}

// ---- criterion bodies -------------------------------------------------------

void loss_identity(Outcome& out) {
  Rng rng(101);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng.below(8);
    const nn::Tensor p = random_poses(n, rng), g = random_poses(n, rng);
    const double sx = std::exp(rng.uniform(-3, 3)), sq = std::exp(rng.uniform(-3, 3));
    const auto norm = i % 2 ? nn::ResidualNorm::kL1 : nn::ResidualNorm::kL2;
    const double a = nn::loss_stable(p, g, std::log(sx * sx), std::log(sq * sq), norm);
    const double b = nn::loss_homoscedastic(p, g, sx, sq, norm);
    worst = std::max(worst, std::abs(a - b));
  }
  out.detail << fmt::format("max |stable - homoscedastic| = {:.3g} over 1000 draws ", worst);
  out.require(worst < 1e-9, "identity tolerance 1e-9");
}

void gradients(Outcome& out) {
  std::vector<testing::GradReport> all;
  auto add = [&all](std::vector<testing::GradReport> r) { all.insert(all.end(), r.begin(), r.end()); };
  {
    nn::Conv2d conv(3, 4, 3, 2, 1);
    Rng rng(1);
    conv.initialize(rng);
    add(testing::check_layer(conv, random_tensor({2, 3, 9, 9}, 2)));
  }
  {
    nn::Relu relu;
    add(testing::check_layer(relu, random_tensor({4, 12}, 3)));
  }
  {
    nn::AvgPool2d pool(5, 5);
    add(testing::check_layer(pool, random_tensor({2, 3, 10, 10}, 4)));
  }
  {
    nn::AdaptiveAvgPool2d pool(4, 4);
    add(testing::check_layer(pool, random_tensor({2, 2, 7, 9}, 5)));
  }
  {
    nn::Flatten flat;
    add(testing::check_layer(flat, random_tensor({2, 2, 3, 3}, 6)));
  }
  {
    nn::Dense dense(12, 8);
    Rng rng(7);
    dense.initialize(rng);
    add(testing::check_layer(dense, random_tensor({3, 12}, 8)));
  }
  {
    nn::Dropout drop(0.5);
    add(testing::check_layer(drop, random_tensor({4, 16}, 9)));
  }
  {
    nn::AvgPool1d pool(2);
    add(testing::check_layer(pool, random_tensor({3, 16}, 10)));
  }
  Rng rng(11);
  const nn::Tensor pred = random_poses(6, rng), gt = random_poses(6, rng);
  for (auto norm : {nn::ResidualNorm::kL1, nn::ResidualNorm::kL2}) {
    add(testing::check_stable_loss(pred, gt, nn::kInitialSx, nn::kInitialSq, norm));
  }

  double worst = 0;
  std::string worst_name;
  for (const auto& r : all) {
    out.require(r.checked > 0, r.what + " unchecked");
    if (r.worst_rel >= worst) {
      worst = r.worst_rel;
      worst_name = r.what;
    }
  }
  out.detail << fmt::format("{} gradient groups at s_x = {}, s_q = {}; worst relative error {:.3g} ({}) ",
                            all.size(), nn::kInitialSx, nn::kInitialSq, worst, worst_name);
  out.require(worst < 1e-4, "relative error 1e-4");
}

void quaternions(Outcome& out) {
  const Quaternion id = euler_to_quaternion_half_angle({0, 0, 0});
  out.require(id.w == 1.0 && id.x == 0.0 && id.y == 0.0 && id.z == 0.0, "half-angle identity is exact");

  Rng rng(202);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const EulerAngles e{rng.uniform(-std::numbers::pi, std::numbers::pi), rng.uniform(-1.55, 1.55),
                        rng.uniform(-std::numbers::pi, std::numbers::pi)};
    const Quaternion q = euler_to_quaternion_standard(e);
    const Quaternion back = sign_align(q, euler_to_quaternion_standard(quaternion_to_euler(q).angles));
    worst = std::max({worst, std::abs(back.w - q.w), std::abs(back.x - q.x), std::abs(back.y - q.y),
                      std::abs(back.z - q.z)});
  }
  out.require(worst < 1e-9, "round trip 1e-9");

  double antipodal = 0;
  for (int i = 0; i < 1000; ++i) {
    const Quaternion q = random_unit(rng);
    antipodal = std::max(antipodal, rotation_error_deg(q, -q));
  }
  out.require(antipodal == 0.0, "rotation_error_deg(q, -q) = 0");
  out.detail << fmt::format("identity exact; round-trip max deviation {:.3g}; max error(q, -q) = {} ", worst,
                            antipodal);
}

void early_fusion(Outcome& out) {
  nn::Dense a(16, 12), b(16, 12);
  Rng rng(303);
  for (auto* d : {&a, &b}) {
    for (double& v : d->weights().values()) v = rng.normal();
    for (double& v : d->bias().values()) v = rng.normal();
  }
  std::size_t mismatches = 0;
  for (auto op : {fusion::FusionOp::kAdd, fusion::FusionOp::kMultiply}) {
    const nn::Dense f = fusion::early_fuse_weights(a, b, op);
    for (std::size_t i = 0; i < a.weights().size(); ++i) {
      const double x = a.weights()[i], y = b.weights()[i];
      if (f.weights()[i] != (op == fusion::FusionOp::kAdd ? x + y : x * y)) ++mismatches;
    }
    for (std::size_t i = 0; i < a.bias().size(); ++i) {
      const double x = a.bias()[i], y = b.bias()[i];
      if (f.bias()[i] != (op == fusion::FusionOp::kAdd ? x + y : x * y)) ++mismatches;
    }
  }
  out.require(mismatches == 0, "fused weights equal the scalar loop");

  nn::PoseNetModel ma = nn::PoseNetModel::build(nn::BackboneSpec::standin_a(), {}, 1);
  nn::PoseNetModel mb = nn::PoseNetModel::build(nn::BackboneSpec::standin_b(), {}, 2);
  const nn::Dense fused = fusion::early_fuse_weights(ma.top_dense(), mb.top_dense(), fusion::FusionOp::kAdd);
  auto [sa, sb] = fusion::sew_into_models(ma, mb, fused, nn::Lineage::kAdditiveSewn);
  std::size_t changed = 0, checked = 0;
  for (auto [orig, sewn] : {std::pair{&ma, &sa}, std::pair{&mb, &sb}}) {
    auto before = orig->parameters(), after = sewn->parameters();
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (before[i].name.rfind("top_dense.", 0) == 0) {
        continue;
      }
      ++checked;
      if (!(*before[i].value == *after[i].value)) ++changed;
    }
    out.require(sewn->top_dense().weights() == fused.weights(), "sewn layer equals the fused layer");
  }
  out.require(changed == 0, "non-target layers bitwise unchanged");
  out.detail << fmt::format("{} oracle mismatches; {} of {} non-target tensors changed ", mismatches, changed,
                            checked);
}

void jensen(Outcome& out) {
  Rng rng(404);
  double worst = -1e300;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 2 + rng.below(5);
    std::vector<Pose> members;
    for (std::size_t k = 0; k < n; ++k) {
      members.push_back({{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)}, random_unit(rng)});
    }
    const Translation gt{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)};
    double mean = 0;
    for (const Pose& m : members) mean += translation_error_m(m.t, gt);
    mean /= static_cast<double>(n);
    const double fused = translation_error_m(fusion::late_fuse_poses(members, fusion::FusionOp::kAverage).t, gt);
    worst = std::max(worst, fused - mean);
  }
  out.detail << fmt::format("max (fused - mean member error) = {:.3g} m over 10000 ensembles ", worst);
  out.require(worst <= 1e-12, "fused <= mean + 1e-12");
}

// ---- golden run -------------------------------------------------------------

struct Pinned {
  std::uint64_t seed;
  double hlff_over_min;
};

// Measured on the desk configuration before release.
constexpr double kPinnedImprovementA = 11.57;  // seed 7: untrained / trained median e_t
constexpr double kPinnedImprovementB = 8.43;
constexpr Pinned kPinnedHlff[] = {{7, 0.697}, {8, 0.807}, {9, 0.798}};
constexpr double kPinTolerance = 0.10;

pipeline::ExperimentConfig desk_config(std::uint64_t seed, const fs::path& out) {
  pipeline::ExperimentConfig cfg = pipeline::load_config(fs::path(POSEFUSE_CONFIGS) / "desk.ini");
  cfg.seed = seed;
  cfg.output = out;
  return cfg;
}

bool within_pin(double measured, double pinned) { return std::abs(measured - pinned) <= kPinTolerance * pinned; }

}  // namespace

int main() {
  report(1, "loss identity", 1.0, loss_identity);
  report(2, "analytic vs finite-difference gradients", 30.0, gradients);
  report(3, "quaternion conversions", 5.0, quaternions);
  report(4, "early fusion", 1.0, early_fusion);
  report(5, "average fusion Jensen property", 5.0, jensen);

  const fs::path root = fs::temp_directory_path() / "posefuse_acceptance";
  fs::remove_all(root);
  std::vector<pipeline::PipelineResult> runs;
  double golden_seconds = 0;

  report(6, "golden run (600 samples, 200 epochs, two backbones, 3 seeds)", 0.0, [&](Outcome& out) {
    for (const Pinned& pin : kPinnedHlff) {
      const auto t0 = Clock::now();
      runs.push_back(pipeline::run_pipeline(desk_config(pin.seed, root / fmt::format("seed{}", pin.seed))));
      const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
      if (pin.seed == kPinnedHlff[0].seed) golden_seconds = secs;
      out.require(secs < 600.0, fmt::format("seed {} pipeline under 10 min", pin.seed));

      const auto& r = runs.back();
      const double a = r.report("unimodalA").median_et.value();
      const double b = r.report("unimodalB").median_et.value();
      const double hlff = r.report("HLFF").median_et.value();
      const double ratio = hlff / std::min(a, b);
      out.detail << fmt::format("seed {}: HLFF/min(A,B) = {:.3f} (pinned {:.3f}), {:.1f} s; ", pin.seed, ratio,
                                pin.hlff_over_min, secs);
      out.require(ratio <= 1.1, fmt::format("seed {} HLFF <= 1.1 x min unimodal", pin.seed));
      out.require(within_pin(ratio, pin.hlff_over_min), fmt::format("seed {} HLFF ratio within 10% of pin", pin.seed));
      out.require(r.audit_clean, fmt::format("seed {} test split untouched by training", pin.seed));

      if (pin.seed == kPinnedHlff[0].seed) {
        const double ua = r.untrained.at(0).median_et.value() / a;
        const double ub = r.untrained.at(1).median_et.value() / b;
        out.detail << fmt::format("seed {}: untrained/trained A = {:.2f} (pinned {:.2f}), B = {:.2f} (pinned {:.2f}); ",
                                  pin.seed, ua, kPinnedImprovementA, ub, kPinnedImprovementB);
        out.require(ua >= 5.0 && ub >= 5.0, "trained >= 5x better than untrained");
        out.require(within_pin(ua, kPinnedImprovementA) && within_pin(ub, kPinnedImprovementB),
                    "untrained/trained within 10% of pin");
      }
    }
  });

  report(7, "report fidelity", 0.0, [&](Outcome& out) {
    const std::vector<eval::MetricsReport> m15{{"M15 - HLFF", 7.762, 8.829, 1.008, 4.618, 0.144}};
    const std::string csv = eval::render_report(m15, eval::ReportFormat::kCsv);
    const std::string md = eval::render_report(m15, eval::ReportFormat::kMarkdown);
    out.require(csv.find("M15 - HLFF,7.762,8.829,1.008,4.618,0.144") != std::string::npos, "M15 CSV row");
    out.require(md.find("| 7.762 | 8.829 | 1.008 | 4.618 | 0.144 |") != std::string::npos, "M15 markdown row");

    std::vector<eval::MetricsReport> golden = m15;
    if (!runs.empty()) {
      golden.insert(golden.end(), runs[0].reports.begin(), runs[0].reports.end());
      golden.insert(golden.end(), runs[0].timed_reports.begin(), runs[0].timed_reports.end());
    }
    const std::string once = eval::render_report(golden, eval::ReportFormat::kCsv);
    const bool fixpoint = eval::render_report(eval::parse_report_csv(once), eval::ReportFormat::kCsv) == once;
    out.require(fixpoint, "CSV render -> parse -> render fixpoint");
    out.detail << fmt::format("M15 row verbatim in CSV and markdown; fixpoint over {} rows ", golden.size());
  });

  report(8, "determinism", 0.0, [&](Outcome& out) {
    if (runs.empty()) {
      out.require(false, "golden run available");
      return;
    }
    const auto rerun = pipeline::run_pipeline(desk_config(kPinnedHlff[0].seed, root / "seed7_rerun"));
    std::size_t models = 0;
    for (const auto& [path, crc] : runs[0].checksums) {
      if (path.rfind("models/", 0) == 0) ++models;
    }
    out.require(models >= 9, "model files are checksummed");
    out.require(rerun.checksums == runs[0].checksums, "identical checksums");
    out.detail << fmt::format("{} files ({} models) identical across two runs ", runs[0].checksums.size(), models);
  });

  report(9, "MAPST with injected 1 ms per-sample delay", 0.0, [&](Outcome& out) {
    const auto sleepy = [](std::size_t begin, std::size_t end) {
      std::this_thread::sleep_for(std::chrono::microseconds(1000 * (end - begin)));
    };
    const double mapst = eval::measure_mapst(50, sleepy, eval::MapstOptions{10, 3});
    out.detail << fmt::format("MAPST = {:.3f} ms with batches of 10 ", mapst * 1e3);
    out.require(mapst >= 0.9e-3 && mapst <= 1.5e-3, "MAPST in [0.9, 1.5] ms");
  });

  fmt::print("golden pipeline wall time (seed 7): {:.1f} s\n", golden_seconds);
  fs::remove_all(root);
  fmt::print("{} of 9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}
