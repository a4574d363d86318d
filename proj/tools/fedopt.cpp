#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedopt/harness/harness.hpp"
#include "fedopt/labs/labs.hpp"

namespace {

using namespace fedopt;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> eval_every;
  std::size_t workers = 1;
};

ExperimentSpec load(const std::string& path, const Overrides& o) {
  ExperimentSpec spec;
  try {
    spec = load_experiment(path);
  } catch (const SpecError& e) {
    throw SpecError(e.field(), std::string(e.what()).substr(e.field().size() + 2) + " (in " + path + ")");
  }
  if (o.seed) spec.config.seed = *o.seed;
  if (o.eval_every) {
    if (*o.eval_every == 0) throw SpecError("--eval-every", "must be >= 1");
    spec.config.eval_every = *o.eval_every;
  }
  return spec;
}

std::string out_dir(const std::string& flag, const ExperimentSpec& spec) {
  if (!flag.empty()) return flag;
  if (!spec.output.empty()) return spec.output;
  return "out/" + spec.name;
}

void print_ranking(const SweepResult& res) {
  std::printf("%-40s %-24s %s\n", "config_id", res.spec.target.c_str(), "status");
  for (std::size_t i : res.ranking) {
    const GridPoint& gp = res.points[i];
    char best[64] = "n/a";
    if (gp.best) std::snprintf(best, sizeof best, "%.6e", *gp.best);
    std::printf("%-40s %-24s %s\n", gp.config_id.c_str(), best, gp.record.diverged ? "diverged" : "ok");
  }
  if (res.winner) std::printf("winner: %s\n", res.points[*res.winner].config_id.c_str());
}

void write_lab(const LabReport& rep, const std::string& dir) {
  const std::filesystem::path d(dir);
  write_text((d / (rep.name + ".csv")).string(), rep.csv);
  write_text((d / "summary.json").string(), rep.summary_json() + "\n");
  for (const auto& c : rep.checks) std::printf("[%s] %s: %s\n", c.pass ? "pass" : "FAIL", c.name.c_str(), c.detail.c_str());
  std::printf("%s lab: %s (artifacts in %s)\n", rep.name.c_str(), rep.pass() ? "PASS" : "FAIL", dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic federated optimization simulator"};
  app.require_subcommand(1);

  Overrides o;
  std::string spec_path, out;
  std::vector<std::string> spec_paths;
  std::uint64_t lab_seed = 0;
  std::size_t lab_reps = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Override the run seed");
    sub->add_option("--eval-every", o.eval_every, "Override the evaluation cadence in rounds");
  };

  CLI::App* run = app.add_subcommand("run", "Run an experiment spec");
  run->add_option("--spec", spec_path, "Experiment spec (JSON)")->required();
  add_common(run);
  add_run_flags(run);

  CLI::App* sw = app.add_subcommand("sweep", "Run every grid point of a spec and rank them");
  sw->add_option("--spec", spec_path, "Experiment spec (JSON)")->required();
  add_common(sw);
  add_run_flags(sw);

  CLI::App* cmp = app.add_subcommand("compare", "Compare tuned experiments on a shared problem and budget");
  cmp->add_option("--spec", spec_paths, "Experiment specs (repeat the flag)")->required();
  add_common(cmp);
  add_run_flags(cmp);

  CLI::App* bias = app.add_subcommand("bias-lab", "Iterate-bias measurements");
  add_common(bias);
  bias->add_option("--seed", lab_seed, "Base seed");
  bias->add_option("--reps", lab_reps, "Override every repetition count");

  CLI::App* inst = app.add_subcommand("instability-lab", "Accelerated-gradient divergence recursion");
  add_common(inst);

  CLI::App* lb = app.add_subcommand("lb-lab", "Heterogeneous lower-bound trajectories");
  add_common(lb);

  CLI::App* rep = app.add_subcommand("report", "Summarize an output directory");
  rep->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  std::string op = app.get_subcommands().front()->get_name();
  try {
    if (*run || *sw) {
      const ExperimentSpec spec = load(spec_path, o);
      const SweepResult res = sweep(spec, o.workers);
      const std::string dir = out_dir(out, spec);
      write_results(res, dir);
      print_ranking(res);
      std::printf("wrote %s/results.json and %s/metrics.csv\n", dir.c_str(), dir.c_str());
    } else if (*cmp) {
      std::vector<ExperimentSpec> specs;
      for (const auto& p : spec_paths) specs.push_back(load(p, o));
      const auto rows = compare(specs, o.workers);
      const std::string dir = out.empty() ? "out/compare" : out;
      nlohmann::json j;
      j["schema"] = kCompareSchema;
      j["target"] = specs.front().target;
      j["problem"] = specs.front().problem;
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& r : rows) {
        arr.push_back({{"name", r.name},
                       {"algorithm", to_string(r.algorithm)},
                       {"K", r.K},
                       {"M", r.M},
                       {"eta_client", r.eta_client},
                       {"eta_server", r.eta_server},
                       {"best", r.best ? nlohmann::json(*r.best) : nlohmann::json(nullptr)},
                       {"grad_calls", r.grad_calls}});
      }
      j["rows"] = arr;
      write_text(dir + "/compare.json", j.dump(2) + "\n");
      const std::string csv = compare_csv(rows);
      write_text(dir + "/compare.csv", csv);
      std::fputs(csv.c_str(), stdout);
    } else if (*bias) {
      BiasLabOptions bo;
      bo.seed = lab_seed;
      bo.workers = o.workers;
      if (lab_reps) bo.demo_reps = bo.logcosh_reps = bo.quadratic_reps = lab_reps;
      write_lab(bias_lab(bo), out.empty() ? "out/bias-lab" : out);
    } else if (*inst) {
      write_lab(instability_lab(), out.empty() ? "out/instability-lab" : out);
    } else if (*lb) {
      write_lab(lb_lab(), out.empty() ? "out/lb-lab" : out);
    } else if (*rep) {
      std::fputs(report(out).c_str(), stdout);
    }
  } catch (const SpecError& e) {
    std::fprintf(stderr, "invalid spec: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s failed: %s\n", op.c_str(), e.what());
    return 1;
  }
  return 0;
}
