#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "fedopt/harness/harness.hpp"
#include "fedopt/labs/labs.hpp"

using namespace fedopt;

namespace {

std::string quad_spec(const std::string& algorithm = "fedavg", const std::string& eta = "0.1", std::size_t r = 10,
                      const std::string& extra_config = "") {
  return R"({
  "schema": "fedopt.experiment/1",
  "name": "quad",
  "problem": {"kind": "quadratic", "diag": [1.0, 2.0, 4.0], "linear": [1.0, -1.0, 0.5], "sigma": 0.1, "clients": 4},
  "algorithm": {"kind": ")" +
         algorithm + R"(", "eta_client": )" + eta + R"(},
  "config": {"K": 4, "R": )" +
         std::to_string(r) + R"(, "seed": 3)" + extra_config + R"(}
})";
}

std::string field_of(const std::string& text) {
  try {
    parse_experiment(text);
  } catch (const SpecError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal quadratic spec yields one suboptimality row per round") {
  const auto spec = parse_experiment(quad_spec());
  const auto res = run_experiment(spec);
  REQUIRE(res.points.size() == 1);
  const auto sub = res.points[0].record.metric(kSuboptimality);
  CHECK(sub.size() == 10);
  for (double v : sub) CHECK(v >= -1e-12);
  CHECK(res.winner == std::size_t{0});
  CHECK(res.points[0].config_id == "fedavg_K4_ec0.1_es1");
}

TEST_CASE("repeated runs are identical") {
  const auto spec = parse_experiment(quad_spec("fedac", "[0.05, 0.1]"));
  const auto a = sweep(spec);
  const auto b = sweep(spec, 3);
  CHECK(results_json(a) == results_json(b));
  CHECK(metrics_csv(a) == metrics_csv(b));
}

TEST_CASE("spec errors name the field") {
  CHECK(field_of(quad_spec("fedsgd")) == "algorithm.kind");
  CHECK(field_of(quad_spec("fedavg", "-1")) == "algorithm.eta_client");
  CHECK(field_of(quad_spec("fedavg", "[0.1, 0.1]")) == "algorithm.eta_client");
  CHECK(field_of(quad_spec("fedavg", "0.1", 10, R"(, "bogus": 1)")) == "config.bogus");
  CHECK(field_of(quad_spec("fedavg", "0.1", 10, R"(, "averaging_mode": "median")")) == "config.averaging_mode");
  CHECK(field_of(quad_spec("fedavg", "0.1", 0)) == "config.R");
  CHECK(field_of(R"({"schema": "fedopt.experiment/9"})") == "schema");
  CHECK(field_of("{\n  \"schema\": ,\n}") == "line 2 column 13");
  const auto spec = parse_experiment(quad_spec("fedavg", "0.1", 10, R"(, "x0": [1.0])"));
  CHECK_THROWS_AS(sweep(spec), SpecError);
  auto bad_metric = quad_spec();
  bad_metric.insert(bad_metric.rfind('}'), R"(, "metrics": ["f1"])");
  CHECK_THROWS_WITH_AS(sweep(parse_experiment(bad_metric)), "metrics: f1 needs a known support", SpecError);
}

TEST_CASE("a one-point grid equals a run") {
  const auto grid = sweep(parse_experiment(quad_spec("fedavg", "[0.1]")));
  const auto single = run_experiment(parse_experiment(quad_spec("fedavg", "0.1")));
  CHECK(metrics_csv(grid) == metrics_csv(single));
  CHECK_THROWS_AS(run_experiment(parse_experiment(quad_spec("fedavg", "[0.1, 0.2]"))), SpecError);
}

TEST_CASE("a noiseless grid across the stability limit picks a converging winner") {
  // L = 4, so steps above 2/L = 0.5 diverge.
  const std::string text = R"({
  "schema": "fedopt.experiment/1",
  "problem": {"kind": "quadratic", "diag": [1.0, 4.0], "linear": [2.0, -3.0]},
  "algorithm": {"kind": "fedavg", "eta_client": [0.05, 0.2, 0.45, 0.6, 1.0]},
  "config": {"K": 2, "R": 40}
})";
  const auto res = sweep(parse_experiment(text));
  REQUIRE(res.winner);
  CHECK(res.points[*res.winner].eta_client < 0.5);
  CHECK(*res.points[*res.winner].best < 1e-10);
  CHECK(*res.points[4].best > 1.0);
  CHECK(res.points[res.ranking.back()].eta_client > 0.5);
}

TEST_CASE("ties go to the smaller step") {
  const std::string text = R"({
  "schema": "fedopt.experiment/1",
  "problem": {"kind": "quadratic", "diag": [1.0], "linear": [0.0]},
  "algorithm": {"kind": "fedavg", "eta_client": [0.3, 0.2], "eta_server": [1.0, 0.5]},
  "config": {"K": 1, "R": 2, "x0": [0.0]}
})";
  const auto res = sweep(parse_experiment(text));
  REQUIRE(res.points.size() == 4);
  CHECK(res.points[res.ranking[0]].eta_client == 0.2);
  CHECK(res.points[res.ranking[0]].eta_server == 0.5);
  CHECK(res.points[res.ranking[3]].eta_client == 0.3);
  CHECK(res.points[res.ranking[3]].eta_server == 1.0);
}

TEST_CASE("compare enforces equal budgets and problems") {
  const auto a = parse_experiment(quad_spec("fedavg", "0.1", 10));
  const auto b = parse_experiment(quad_spec("minibatch_sgd", "0.1", 10));
  const auto rows = compare({a, b});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].grad_calls == 160);
  CHECK(rows[1].grad_calls == 160);
  CHECK(compare_csv(rows).rfind("name,algorithm,K,M", 0) == 0);
  const auto c = parse_experiment(quad_spec("fedavg", "0.1", 12));
  CHECK_THROWS_AS(compare({a, c}), std::invalid_argument);
  auto d = a;
  d.problem["sigma"] = 0.2;
  CHECK_THROWS_AS(compare({a, d}), std::invalid_argument);
}

TEST_CASE("support metric examples") {
  const Vec truth{1.0, 0.0, -2.0, 0.0};
  const auto exact = support_metrics(truth, truth);
  CHECK(exact.f1 == 1.0);
  CHECK(exact.density == 0.5);
  const auto zero = support_metrics(Vec(4), truth);
  CHECK(zero.recall == 0.0);
  CHECK(zero.density == 0.0);
  const auto small = support_metrics(Vec{1.0, 0.02, -2.0, 0.0}, truth);
  CHECK(small.density == 0.75);
  CHECK(small.precision == doctest::Approx(2.0 / 3.0));

  CompositeProblem cp;
  cp.smooth = make_quadratic(Mat::identity(4), Vec(4));
  cp.ground_truth = truth;
  RunRecord rec;
  rec.outputs = {{1, truth}, {2, Vec(4)}};
  const auto pts = evaluate_metrics(rec, cp, {"f1", "recall"});
  REQUIRE(pts.size() == 4);
  CHECK(pts[0].value == 1.0);
  CHECK(pts[3].round == 2);
  CHECK(pts[3].value == 0.0);
  CHECK_THROWS_AS(evaluate_metrics(rec, cp, {"rank"}), SpecError);
}

TEST_CASE("lasso sweep records support metrics after the engine rows") {
  const std::string text = R"({
  "schema": "fedopt.experiment/1",
  "problem": {"kind": "lasso", "d1": 3, "d0": 9, "clients": 4, "samples_per_client": 16, "lambda": 0.05, "seed": 2},
  "algorithm": {"kind": "feddualavg", "eta_client": 0.02},
  "config": {"K": 5, "R": 20, "eval_every": 5},
  "metrics": ["f1", "density"],
  "target": "f1"
})";
  const auto res = run_experiment(parse_experiment(text));
  const auto& s = res.points[0].record.series;
  REQUIRE(s.size() == 4 * 5);
  CHECK(s[0].name == kObjective);
  CHECK(s[1].name == kSuboptimality);
  CHECK(s[2].name == kGradCalls);
  CHECK(s[3].name == "f1");
  CHECK(s[4].name == "density");
  CHECK(s.back().round == 20);
  CHECK(maximize("f1"));
  const auto f1 = res.points[0].record.metric("f1");
  CHECK(res.points[0].best == *std::max_element(f1.begin(), f1.end()));
}

TEST_CASE("results round trip through disk") {
  const auto spec = parse_experiment(quad_spec());
  const auto res = run_experiment(spec);
  const auto dir = (std::filesystem::temp_directory_path() / "fedopt_harness_test").string();
  std::filesystem::remove_all(dir);
  write_results(res, dir);
  CHECK(read_text(dir + "/metrics.csv") == metrics_csv(res));
  const auto again = parse_experiment(experiment_to_json(spec).dump());
  CHECK(metrics_csv(run_experiment(again)) == metrics_csv(res));
  CHECK(report(dir).find("winner fedavg_K4_ec0.1_es1") != std::string::npos);
  std::filesystem::remove_all(dir);
  CHECK_THROWS(report(dir));
}
