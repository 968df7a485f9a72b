#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "posefuse/error.hpp"
#include "posefuse/fusion.hpp"
#include "posefuse/nn/model_io.hpp"
#include "support/gradcheck.hpp"
#include "support/tiny.hpp"

using namespace posefuse;
using namespace posefuse::fusion;
using nn::Dense;
using nn::Lineage;
using nn::PoseNetModel;

namespace {

Dense random_dense(std::size_t in, std::size_t out, std::uint64_t seed) {
  Dense d(in, out);
  Rng rng(seed);
  for (double& v : d.weights().values()) v = rng.normal();
  for (double& v : d.bias().values()) v = rng.normal();
  return d;
}

Quaternion random_unit(Rng& rng) {
  return Quaternion{rng.normal(), rng.normal(), rng.normal(), rng.normal()}.normalized();
}

Pose random_pose(Rng& rng) {
  return {{rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)}, random_unit(rng)};
}

bool bitwise_equal(const nn::Tensor& a, const nn::Tensor& b) { return a == b; }

}  // namespace

TEST_SUITE("early fusion") {
  TEST_CASE("identities") {
    const Dense a = random_dense(4, 3, 1);
    Dense zeros(4, 3), ones(4, 3);
    ones.weights().fill(1.0);
    ones.bias().fill(1.0);
    const Dense sum = early_fuse_weights(a, zeros, FusionOp::kAdd);
    CHECK(bitwise_equal(sum.weights(), a.weights()));
    CHECK(bitwise_equal(sum.bias(), a.bias()));
    const Dense prod = early_fuse_weights(a, ones, FusionOp::kMultiply);
    CHECK(bitwise_equal(prod.weights(), a.weights()));
    CHECK(bitwise_equal(prod.bias(), a.bias()));
  }

  TEST_CASE("random 4x4 pair matches a scalar loop exactly") {
    const Dense a = random_dense(4, 4, 2), b = random_dense(4, 4, 3);
    for (auto op : {FusionOp::kAdd, FusionOp::kMultiply}) {
      const Dense f = early_fuse_weights(a, b, op);
      for (std::size_t i = 0; i < 16; ++i) {
        const double expect = op == FusionOp::kAdd ? a.weights()[i] + b.weights()[i] : a.weights()[i] * b.weights()[i];
        CHECK(f.weights()[i] == expect);
      }
    }
  }

  TEST_CASE("invalid inputs") {
    CHECK_THROWS_AS(early_fuse_weights(Dense(4, 3), Dense(3, 4), FusionOp::kAdd), ShapeMismatch);
    CHECK_THROWS_AS(early_fuse_weights(Dense(4, 3), Dense(4, 3), FusionOp::kAverage), Error);
  }

  TEST_CASE("sewing replaces only the top dense layer") {
    const PoseNetModel a = testing::tiny_model(1, "A"), b = testing::tiny_model(2, "B");
    const Dense fused = early_fuse_weights(a.top_dense(), b.top_dense(), FusionOp::kAdd);
    auto [sa, sb] = sew_into_models(a, b, fused, Lineage::kAdditiveSewn);
    CHECK(bitwise_equal(sa.top_dense().weights(), fused.weights()));
    CHECK(bitwise_equal(sb.top_dense().bias(), fused.bias()));
    CHECK(sa.lineage() == Lineage::kAdditiveSewn);
    CHECK(sb.lineage() == Lineage::kAdditiveSewn);

    PoseNetModel ca = a;
    auto before = ca.parameters();
    auto after = sa.parameters();
    REQUIRE(before.size() == after.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (before[i].name.rfind("top_dense.", 0) == 0) continue;
      CHECK(bitwise_equal(*before[i].value, *after[i].value));
    }

    // Fusing the two sewn layers again doubles the fused values.
    const Dense twice = early_fuse_weights(sa.top_dense(), sb.top_dense(), FusionOp::kAdd);
    for (std::size_t i = 0; i < fused.weights().size(); ++i) CHECK(twice.weights()[i] == 2.0 * fused.weights()[i]);
  }

  TEST_CASE("retraining needs a sewn model and is reproducible") {
    const auto data = testing::random_samples(16, {3, 20, 20}, 4);
    nn::TrainConfig cfg;
    cfg.epochs = 0;
    PoseNetModel plain = testing::tiny_model(3);
    CHECK_THROWS_AS(retrain_after_sewing(plain, data, cfg), LineageMismatch);

    const PoseNetModel a = testing::tiny_model(5, "A"), b = testing::tiny_model(6, "B");
    const Dense fused = early_fuse_weights(a.top_dense(), b.top_dense(), FusionOp::kMultiply);
    auto [sa, sb] = sew_into_models(a, b, fused, lineage_for(FusionOp::kMultiply));
    PoseNetModel untouched = sa;
    retrain_after_sewing(untouched, data, cfg);
    CHECK(nn::serialize_model(untouched) == nn::serialize_model(sa));

    cfg.epochs = 5;
    PoseNetModel r1 = sa, r2 = sa;
    CHECK(retrain_after_sewing(r1, data, cfg).epoch_loss == retrain_after_sewing(r2, data, cfg).epoch_loss);
    CHECK(nn::serialize_model(r1) == nn::serialize_model(r2));
  }

  TEST_CASE("retraining loss decreases over 20-epoch windows") {
    const auto data = testing::random_samples(32, {3, 20, 20}, 7);
    const PoseNetModel a = testing::tiny_model(8, "A"), b = testing::tiny_model(9, "B");
    auto [sa, sb] = sew_into_models(a, b, early_fuse_weights(a.top_dense(), b.top_dense(), FusionOp::kAdd),
                                    Lineage::kAdditiveSewn);
    nn::TrainConfig cfg;
    cfg.epochs = 100;
    cfg.batch_size = 8;
    cfg.learning_rate = 0.002;
    cfg.dropout_rate = 0.05;
    const auto history = retrain_after_sewing(sa, data, cfg);
    std::vector<double> windows;
    for (std::size_t w = 0; w < 5; ++w) {
      double s = 0;
      for (std::size_t e = w * 20; e < (w + 1) * 20; ++e) s += history.epoch_loss[e];
      windows.push_back(s / 20);
    }
    for (std::size_t w = 1; w < windows.size(); ++w) CHECK(windows[w] < windows[w - 1]);
  }
}

TEST_SUITE("late fusion") {
  TEST_CASE("average examples") {
    Rng rng(10);
    const Pose p = random_pose(rng);
    const Pose same[] = {p, p};
    const Pose f = late_fuse_poses(same, FusionOp::kAverage);
    CHECK(translation_error_m(f.t, p.t) < 1e-15);
    CHECK(rotation_error_deg(f.q, p.q) < 1e-6);

    const Pose tr[] = {{{1, 2, 3}, Quaternion::identity()}, {{3, 2, 1}, Quaternion::identity()}};
    const Pose g = late_fuse_poses(tr, FusionOp::kAverage);
    CHECK(g.t.x == 2.0);
    CHECK(g.t.y == 2.0);
    CHECK(g.t.z == 2.0);

    const Pose flip[] = {{{0, 0, 0}, p.q}, {{0, 0, 0}, -p.q}};
    const Pose h = late_fuse_poses(flip, FusionOp::kAverage);
    CHECK(std::abs(h.q.w - p.q.w) < 1e-15);
    CHECK(std::abs(h.q.x - p.q.x) < 1e-15);
  }

  TEST_CASE("fewer than two members") {
    Rng rng(11);
    const Pose one[] = {random_pose(rng)};
    CHECK_THROWS_AS(late_fuse_poses(one, FusionOp::kAverage), EmptyEnsemble);
    CHECK_THROWS_AS(late_fuse_poses(std::span<const Pose>{}, FusionOp::kMultiply), EmptyEnsemble);
  }

  TEST_CASE("multiply examples") {
    Rng rng(12);
    const Pose a = random_pose(rng);
    const Pose ident{{1, 1, 1}, {0.5, 0.5, 0.5, 0.5}};
    const Pose pair[] = {a, ident};
    const Pose f = late_fuse_poses(pair, FusionOp::kMultiply);
    CHECK(f.t.x == a.t.x);
    CHECK(f.t.z == a.t.z);
    CHECK(rotation_error_deg(f.q, a.q) < 1e-6);

    const Pose twins[] = {a, a};
    const Pose sq = late_fuse_poses(twins, FusionOp::kMultiply);
    CHECK(sq.t.x == a.t.x * a.t.x);
    CHECK(sq.t.y == a.t.y * a.t.y);
    CHECK(sq.t.z == a.t.z * a.t.z);

    LateFusionOptions gm;
    gm.translation_product = TranslationProduct::kSignedGeometricMean;
    const Pose root = late_fuse_poses(twins, FusionOp::kMultiply, gm);
    CHECK(root.t.x == doctest::Approx(std::abs(a.t.x)));
  }

  TEST_CASE("degenerate quaternion product from the brute-force search") {
    // tests/oracles/degenerate_product.py
    const double c = -1.0 / std::sqrt(3.0);
    const Pose pair[] = {{{1, 1, 1}, {c, c, c, 0}}, {{1, 1, 1}, {0, 0, 0, 1}}};
    CHECK_THROWS_AS(late_fuse_poses(pair, FusionOp::kMultiply), DegenerateQuaternion);
  }

  TEST_CASE("average never exceeds the mean member translation error") {
    Rng rng(13);
    for (int trial = 0; trial < 2000; ++trial) {
      const std::size_t n = 2 + rng.below(4);
      std::vector<Pose> members;
      for (std::size_t i = 0; i < n; ++i) members.push_back(random_pose(rng));
      const Translation gt{rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)};
      double mean = 0;
      for (const Pose& m : members) mean += translation_error_m(m.t, gt);
      mean /= static_cast<double>(n);
      CHECK(translation_error_m(late_fuse_poses(members, FusionOp::kAverage).t, gt) <= mean + 1e-12);
    }
  }

  TEST_CASE("member order does not matter for clustered ensembles") {
    Rng rng(14);
    for (int trial = 0; trial < 200; ++trial) {
      const Quaternion base = random_unit(rng);
      std::vector<Pose> members;
      for (int i = 0; i < 4; ++i) {
        Quaternion q{base.w + 0.05 * rng.normal(), base.x + 0.05 * rng.normal(), base.y + 0.05 * rng.normal(),
                     base.z + 0.05 * rng.normal()};
        if (rng.uniform() < 0.5) q = -q;
        members.push_back({{rng.normal(), rng.normal(), rng.normal()}, q.normalized()});
      }
      const Pose ref = late_fuse_poses(members, FusionOp::kAverage);
      std::reverse(members.begin(), members.end());
      const Pose rev = late_fuse_poses(members, FusionOp::kAverage);
      CHECK(translation_error_m(ref.t, rev.t) < 1e-12);
      CHECK(rotation_error_deg(ref.q, rev.q) < 1e-6);
    }
  }
}

TEST_SUITE("hybrid builders") {
  const auto data = testing::random_samples(6, {3, 20, 20}, 20);

  struct Sewn {
    PoseNetModel aef_a, aef_b, mef_a, mef_b;
  };

  Sewn make_sewn() {
    const PoseNetModel a = testing::tiny_model(21, "A"), b = testing::tiny_model(22, "B");
    auto [aa, ab] = sew_into_models(a, b, early_fuse_weights(a.top_dense(), b.top_dense(), FusionOp::kAdd),
                                    Lineage::kAdditiveSewn);
    auto [ma, mb] = sew_into_models(a, b, early_fuse_weights(a.top_dense(), b.top_dense(), FusionOp::kMultiply),
                                    Lineage::kMultiplicativeSewn);
    return {aa, ab, ma, mb};
  }

  TEST_CASE("identical members reproduce the member prediction") {
    const PoseNetModel m = testing::tiny_model(23);
    const PoseNetModel* five[] = {&m, &m, &m, &m, &m};
    const auto lf = build_lf(five, data);
    const auto single = predict_poses(m, data);
    REQUIRE(lf.size() == single.size());
    for (std::size_t i = 0; i < lf.size(); ++i) {
      CHECK(translation_error_m(lf[i].pose.t, single[i].t) < 1e-12);
      CHECK(rotation_error_deg(lf[i].pose.q, single[i].q) < 1e-6);
    }
    const PoseNetModel* one[] = {&m};
    CHECK_THROWS_AS(build_lf(one, data), EmptyEnsemble);
  }

  TEST_CASE("lineage guards") {
    const Sewn s = make_sewn();
    CHECK_THROWS_AS(build_ahl(s.aef_a, s.mef_b, data), LineageMismatch);
    CHECK_THROWS_AS(build_mhl(s.mef_a, s.aef_b, data), LineageMismatch);
    CHECK_NOTHROW(build_ahl(s.aef_a, s.aef_b, data));

    const PoseNetModel* ahl[] = {&s.aef_a, &s.aef_b};
    const PoseNetModel* mhl[] = {&s.mef_a, &s.mef_b};
    const PoseNetModel* hlff[] = {&s.aef_a, &s.aef_b, &s.mef_a, &s.mef_b};
    CHECK(classify_hybrid(ahl, FusionOp::kAverage) == HybridKind::kAhl);
    CHECK(classify_hybrid(mhl, FusionOp::kMultiply) == HybridKind::kMhl);
    CHECK(classify_hybrid(hlff, FusionOp::kAverage) == HybridKind::kHlff);
    CHECK_THROWS_AS(classify_hybrid(ahl, FusionOp::kMultiply), LineageMismatch);
  }

  TEST_CASE("hlff satisfies the translation Jensen bound and ignores member order") {
    const Sewn s = make_sewn();
    const auto fused = build_hlff(s.aef_a, s.aef_b, s.mef_a, s.mef_b, data);
    const auto permuted = build_hlff(s.aef_b, s.aef_a, s.mef_b, s.mef_a, data);
    REQUIRE(fused.size() == data.size());
    for (std::size_t i = 0; i < fused.size(); ++i) {
      const Translation gt{0.0, 0.0, 0.0};
      double mean = 0;
      for (const Pose& m : fused[i].members) mean += translation_error_m(m.t, gt);
      mean /= static_cast<double>(fused[i].members.size());
      CHECK(fused[i].members.size() == 4);
      CHECK(translation_error_m(fused[i].pose.t, gt) <= mean + 1e-12);
      CHECK(translation_error_m(fused[i].pose.t, permuted[i].pose.t) < 1e-12);
    }
  }
}
