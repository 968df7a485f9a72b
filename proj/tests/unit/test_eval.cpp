#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include <doctest.h>

#include "posefuse/error.hpp"
#include "posefuse/eval/metrics.hpp"
#include "posefuse/eval/plot.hpp"
#include "posefuse/eval/predictions.hpp"
#include "posefuse/eval/report.hpp"
#include "posefuse/eval/timing.hpp"
#include "posefuse/util/rng.hpp"

using namespace posefuse;
using namespace posefuse::eval;

namespace {

Pose random_pose(Rng& rng) {
  return {{rng.normal(), rng.normal(), rng.normal()},
          Quaternion{rng.normal(), rng.normal(), rng.normal(), rng.normal()}.normalized()};
}

const MetricsReport kM15{"M15 - HLFF", 7.762, 8.829, 1.008, 4.618, 0.144};

}  // namespace

TEST_SUITE("mae") {
  TEST_CASE("examples") {
    const std::vector<double> a{1, 2, 3}, g{2, 2, 2};
    CHECK(mae(a, a) == 0.0);
    CHECK(mae(a, g) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(mae(a, std::vector<double>{1, 2}), LengthMismatch);
    CHECK_THROWS_AS(mae(std::vector<double>{}, std::vector<double>{}), EmptyInput);
  }

  TEST_CASE("random vectors match a loop and are shift invariant") {
    Rng rng(1);
    std::vector<double> p(1000), g(1000), ps(1000), gs(1000);
    double sum = 0;
    for (std::size_t i = 0; i < 1000; ++i) {
      p[i] = rng.normal();
      g[i] = rng.normal();
      ps[i] = p[i] + 0.5;
      gs[i] = g[i] + 0.5;
      sum += std::abs(p[i] - g[i]);
    }
    CHECK(std::abs(mae(p, g) - sum / 1000) < 1e-12);
    CHECK(std::abs(mae(ps, gs) - mae(p, g)) < 1e-12);
  }
}

TEST_SUITE("pose error statistics") {
  TEST_CASE("identical predictions give zeros") {
    Rng rng(2);
    std::vector<Pose> p;
    for (int i = 0; i < 5; ++i) p.push_back(random_pose(rng));
    const auto s = pose_error_stats(p, p);
    CHECK(s.median_et == 0.0);
    CHECK(s.mean_et == 0.0);
    CHECK(s.median_er == 0.0);
    CHECK(s.mean_er == 0.0);
  }

  TEST_CASE("lower median of an even count") {
    const std::vector<Pose> gt{{{0, 0, 0}, Quaternion::identity()}, {{0, 0, 0}, Quaternion::identity()}};
    const std::vector<Pose> pr{{{3, 0, 0}, Quaternion::identity()}, {{0, 5, 0}, Quaternion::identity()}};
    const auto s = pose_error_stats(pr, gt);
    CHECK(s.median_et == 3.0);
    CHECK(s.mean_et == 4.0);
    CHECK(lower_median({4, 1, 3, 2}) == 2.0);
    CHECK_THROWS_AS(pose_error_stats(pr, std::vector<Pose>{gt[0]}), LengthMismatch);
  }

  TEST_CASE("random sets match a sort-based oracle and ignore order") {
    Rng rng(3);
    std::vector<Pose> p, g;
    for (int i = 0; i < 101; ++i) {
      p.push_back(random_pose(rng));
      g.push_back(random_pose(rng));
    }
    const auto errs = pose_errors(p, g);
    std::vector<double> sorted = errs.et;
    std::sort(sorted.begin(), sorted.end());
    const auto s = pose_error_stats(p, g);
    CHECK(s.median_et == sorted[50]);
    std::reverse(p.begin(), p.end());
    std::reverse(g.begin(), g.end());
    const auto r = pose_error_stats(p, g);
    CHECK(r.median_et == s.median_et);
    CHECK(r.median_er == s.median_er);
    CHECK(std::abs(r.mean_et - s.mean_et) < 1e-12);
  }
}

TEST_SUITE("timing") {
  TEST_CASE("too few samples") {
    CHECK_THROWS_AS(measure_mapst(9, [](std::size_t, std::size_t) {}), InsufficientSamples);
  }

  TEST_CASE("injected latency is recovered and repeatable") {
    auto sleepy = [](std::size_t begin, std::size_t end) {
      std::this_thread::sleep_for(std::chrono::microseconds(1000 * (end - begin)));
    };
    const double a = measure_mapst(30, sleepy);
    const double b = measure_mapst(30, sleepy);
    CHECK(a >= 0.9e-3);
    CHECK(a <= 1.5e-3);
    CHECK(std::abs(a - b) <= 0.5 * std::max(a, b));
  }
}

TEST_SUITE("reports") {
  TEST_CASE("M15 row renders verbatim") {
    const std::vector<MetricsReport> rows{kM15};
    const std::string csv = render_report(rows, ReportFormat::kCsv);
    CHECK(csv.find("M15 - HLFF,7.762,8.829,1.008,4.618,0.144") != std::string::npos);
    const std::string md = render_report(rows, ReportFormat::kMarkdown);
    CHECK(md.find("| M15 - HLFF | 7.762 | 8.829 | 1.008 | 4.618 | 0.144 |") != std::string::npos);
  }

  TEST_CASE("missing fields render as a dash") {
    const std::vector<MetricsReport> rows{{"partial", 1.0, 2.0, 3.0, 4.0, std::nullopt}};
    const std::string csv = render_report(rows, ReportFormat::kCsv);
    CHECK(csv.find("partial,1.000,2.000,3.000,4.000,-") != std::string::npos);
    CHECK(parse_report_csv(csv)[0].mapst == std::nullopt);
    CHECK_THROWS_AS(render_report(std::vector<MetricsReport>{}, ReportFormat::kCsv), EmptyInput);
  }

  TEST_CASE("render, parse, render is a fixpoint") {
    Rng rng(4);
    std::vector<MetricsReport> rows{kM15, {"name, with \"quotes\"", 0.1, std::nullopt, 2.5, 3.25, 0.001}};
    for (int i = 0; i < 20; ++i) {
      rows.push_back({"row" + std::to_string(i), rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(0, 10),
                      rng.uniform(0, 10), rng.uniform(0, 1)});
    }
    const std::string once = render_report(rows, ReportFormat::kCsv);
    const auto parsed = parse_report_csv(once);
    CHECK(parsed.size() == rows.size());
    CHECK(parsed[1].name == rows[1].name);
    CHECK(render_report(parsed, ReportFormat::kCsv) == once);
    CHECK_THROWS_AS(parse_report_csv("model,x\nfoo,1\n"), ParseError);
  }

  TEST_CASE("improvement percentages") {
    const MetricsReport base{"M4", 16.227, 17.0, 2.0, 3.0, 0.010};
    const std::vector<MetricsReport> others{base, {"M8", 9.763, 10.0, 1.0, 2.0, 0.012}, {"half", 8.1135, 1, 1.0, 1, 0.01}};
    const auto rows = improvement_table(base, others);
    CHECK(rows[0].et_pct == 0);
    CHECK(rows[0].er_pct == 0);
    CHECK(*rows[0].overhead_ms == 0.0);
    CHECK(rows[1].et_pct == 40);
    CHECK(rows[1].er_pct == 50);
    CHECK(*rows[1].overhead_ms == doctest::Approx(2.0));
    CHECK(rows[2].et_pct == 50);

    const MetricsReport ten{"b", 10.0, 0, 5.0, 0, std::nullopt};
    const std::vector<MetricsReport> five{{"m", 5.0, 0, 5.0, 0, std::nullopt}};
    const auto r = improvement_table(ten, five);
    CHECK(r[0].et_pct == 50);
    CHECK(r[0].overhead_ms == std::nullopt);
    CHECK_THROWS_AS(improvement_table(MetricsReport{"z", 0.0, 0, 1.0, 0, 0}, five), ZeroBaseline);
    const std::string md = render_improvements(rows, ReportFormat::kMarkdown);
    CHECK(md.find("| M8 | 40 | 50 |") != std::string::npos);
  }
}

TEST_SUITE("predictions and plots") {
  TEST_CASE("prediction CSV round trip") {
    Rng rng(5);
    std::vector<PredictionRow> rows;
    for (int i = 0; i < 10; ++i) rows.push_back({"img" + std::to_string(i), i % 2 ? "fused" : "m0", random_pose(rng)});
    const auto back = parse_predictions(format_predictions(rows));
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(back[i].pose.t.x == rows[i].pose.t.x);
      CHECK(back[i].pose.q.z == rows[i].pose.q.z);
    }
    CHECK(select_source(back, "fused").size() == 5);
    CHECK(sources(back) == std::vector<std::string>{"m0", "fused"});
  }

  TEST_CASE("trajectory svg") {
    const std::vector<TrajectorySeries> series{
        {"ground truth", "black", {{0, 0, 0}, {1, 0, 2}, {3, 0, 1}}, true},
        {"HLFF", "red", {{0.1, 0, 0.2}, {1.2, 0, 1.8}}, false}};
    const std::string svg = render_trajectory_svg(series);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("HLFF") != std::string::npos);
  }
}
