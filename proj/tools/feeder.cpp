// Batch front end: solve, plan, sweep, validate.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "feeder/io.hpp"

namespace fs = std::filesystem;
using namespace feeder;

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::string mode;
  std::string design_class;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "scenario file (JSON, comments allowed)");
  app->add_option("--out", c.out, "output directory")->capture_default_str();
  app->add_option("--mode", c.mode, "coordination: none, collect, distribute, both or all");
  app->add_option("--design-class", c.design_class,
                  "heterogeneous, uniform-stop-spacing, uniform-line-and-stop or fully-uniform");
  app->add_option("--seed", c.seed, "random initial design (multi-start)");
}

ScenarioConfig load(const Common& c) {
  ScenarioConfig cfg = c.config.empty() ? ScenarioConfig{} : load_config(c.config);
  if (!c.mode.empty()) {
    cfg.all_modes = c.mode == "all";
    if (!cfg.all_modes) cfg.mode = coordination_from_string(c.mode);
  }
  if (!c.design_class.empty()) cfg.design_class = design_class_from_string(c.design_class);
  if (c.seed) cfg.seed = c.seed;
  return cfg;
}

void print_run(const RunResult& r) {
  std::printf("  %-22s %-10s%s K=%-3d GC=%9.3f AC=%8.3f UC=%9.3f%s%s\n", to_string(r.design_class),
              to_string(r.mode), r.transposed ? " (transposed)" : "", r.capacity, r.cost.generalized,
              r.cost.agency, r.cost.user, r.converged ? "" : "  NOT CONVERGED",
              r.error ? ("  error: " + *r.error).c_str() : "");
}

int cmd_solve(const Common& c) {
  ScenarioConfig cfg = load(c);
  if (cfg.axis != SweepAxis::none) {
    std::cerr << "config defines a sweep; use the sweep subcommand\n";
    return 2;
  }
  const Report rep = run_scenario(cfg);
  const fs::path out = c.out;
  write_text(out / "report.json", to_json(rep, true).dump(2) + "\n");
  write_text(out / "report.csv", reports_csv({rep}));
  write_text(out / "timing.json", timing_json({rep}).dump(2) + "\n");
  if (const RunResult* main = rep.find(cfg.design_class, cfg.mode); main && !main->error)
    write_text(out / "design.csv", design_csv(main->design, Lattice::of(cfg.params)));
  std::cout << rep.scenario << (rep.error ? " error: " + *rep.error : "") << "\n";
  for (const auto& r : rep.runs) print_run(r);
  return rep.converged() ? 0 : 1;
}

int cmd_plan(const Common& c, bool fine_tune) {
  ScenarioConfig cfg = load(c);
  cfg.compare_classes = false;
  cfg.all_modes = false;
  if (cfg.axis != SweepAxis::none) {
    std::cerr << "config defines a sweep; plan takes a single scenario\n";
    return 2;
  }
  const Report rep = run_scenario(cfg);
  if (rep.error || rep.runs.empty() || rep.runs.front().error) {
    std::cerr << "solve failed: " << (rep.error ? *rep.error : rep.runs.empty() ? "no run" : *rep.runs.front().error)
              << "\n";
    return 1;
  }
  const RunResult& run = rep.runs.front();
  const ModelParams& p = cfg.params;
  const DemandField field = make_field(cfg.demand, p);
  const AggregateTables a = aggregates(field, Lattice::of(p));
  const AgencyRates rates = agency_rates(run.capacity, p.value_of_time);
  PlanOptions po;
  po.fine_tune = fine_tune;
  po.workers = cfg.workers;
  const DiscretePlan plan = generate_plan(run.design, a, p, rates, po);
  const CostBreakdown discrete = evaluate_discrete(plan, field, p, rates, po);

  Json cmp = Json::object();
  const auto ca = cost_fields(run.cost), di = cost_fields(discrete);
  for (std::size_t k = 0; k < ca.size(); ++k) {
    const double rel = ca[k].second != 0 ? (di[k].second - ca[k].second) / ca[k].second : 0.0;
    cmp[ca[k].first] = Json{{"continuous", ca[k].second}, {"discrete", di[k].second}, {"relative_gap", rel}};
  }
  const fs::path out = c.out;
  write_text(out / "plan.json", to_json(plan).dump(2) + "\n");
  write_text(out / "plan.csv", plan_csv(plan));
  write_text(out / "plan_plot.json", plan_plot_data(plan).dump(2) + "\n");
  write_text(out / "evaluation.json", Json{{"capacity", run.capacity}, {"converged", run.converged},
                                           {"lines", plan.lines.size()}, {"stops", plan.stop_count()},
                                           {"components", cmp}}.dump(2) + "\n");
  std::printf("lines=%zu stops=%zu K=%d\n", plan.lines.size(), plan.stop_count(), run.capacity);
  std::printf("GC continuous=%.3f discrete=%.3f gap=%.2f%%\n", run.cost.generalized, discrete.generalized,
              100 * (discrete.generalized - run.cost.generalized) / run.cost.generalized);
  for (const auto& w : plan.warnings) std::cerr << "warning: " << w << "\n";
  return run.converged ? 0 : 1;
}

int cmd_sweep(const Common& c) {
  ScenarioConfig cfg = load(c);
  if (cfg.axis == SweepAxis::none) std::cerr << "no sweep axis; running a single point\n";
  const auto reports = run_sweep(cfg);
  const fs::path out = c.out;
  Json all = Json::array();
  for (const auto& r : reports) all.push_back(to_json(r));
  write_text(out / "sweep.json", all.dump(2) + "\n");
  write_text(out / "sweep.csv", reports_csv(reports));
  write_text(out / "timing.json", timing_json(reports).dump(2) + "\n");
  bool ok = true;
  for (const auto& r : reports) {
    std::cout << to_string(r.axis) << " = " << (r.value ? std::to_string(*r.value) : "-")
              << (r.error ? "  error: " + *r.error : "");
    if (r.short_side_gain) std::printf("  short-side gain %.2f%%", 100 * *r.short_side_gain);
    std::cout << "\n";
    for (const auto& x : r.runs) print_run(x);
    ok = ok && r.converged();
  }
  return ok ? 0 : 1;
}

// Standard scenario at K = 10 against its published reference costs.
int cmd_validate(const Common& c) {
  ScenarioConfig cfg = load(c);
  cfg.compare_classes = false;
  cfg.all_modes = false;
  cfg.design_class = DesignClass::heterogeneous;
  cfg.mode = Coordination::none;
  if (!cfg.capacity) cfg.capacity = 10;
  const auto start = std::chrono::steady_clock::now();
  const Report rep = run_scenario(cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (rep.error || rep.runs.empty() || rep.runs.front().error) {
    std::cout << "FAIL solve\n";
    return 1;
  }
  const RunResult& run = rep.runs.front();
  bool ok = true;
  auto check = [&](const char* what, double got, double ref, double tol) {
    const double rel = std::abs(got - ref) / ref;
    const bool pass = rel <= tol;
    ok = ok && pass;
    std::printf("%s %-4s %.2f vs %.2f (%.2f%%, limit %.0f%%)\n", pass ? "PASS" : "FAIL", what, got, ref, 100 * rel,
                100 * tol);
  };
  std::printf("%s converged after %d outer iterations\n", run.converged ? "PASS" : "FAIL", run.outer_iterations);
  ok = ok && run.converged;
  check("GC", run.cost.generalized, 564.68, 0.02);
  check("C_A", run.cost.access, 85.96, 0.03);
  check("C_W", run.cost.wait, 254.80, 0.03);
  check("C_T", run.cost.ride, 125.33, 0.03);
  check("AC", run.cost.agency, 98.58, 0.03);

  const ModelParams& p = cfg.params;
  const DemandField field = make_field(cfg.demand, p);
  const AggregateTables a = aggregates(field, Lattice::of(p));
  const AgencyRates rates = agency_rates(run.capacity, p.value_of_time);
  const DiscretePlan plan = generate_plan(run.design, a, p, rates);
  const CostBreakdown discrete = evaluate_discrete(plan, field, p, rates);
  check("plan", discrete.generalized, run.cost.generalized, 0.02);
  const bool fast = seconds <= 30.0;
  ok = ok && fast;
  std::printf("%s runtime %.3f s (limit 30 s)\n", fast ? "PASS" : "FAIL", seconds);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous feeder network design"};
  app.require_subcommand(1);
  Common common;
  bool fine_tune = false;
  auto* solve = app.add_subcommand("solve", "solve one scenario and its comparison designs");
  auto* plan = app.add_subcommand("plan", "solve, place lines and stops, and re-evaluate the plan");
  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
  auto* validate_cmd = app.add_subcommand("validate", "check the standard scenario against reference costs");
  for (auto* sub : {solve, plan, sweep, validate_cmd}) add_common(sub, common);
  plan->add_flag("--fine-tune", fine_tune, "whole-number reallocation and re-solve after placing lines");
  CLI11_PARSE(app, argc, argv);
  try {
    if (*solve) return cmd_solve(common);
    if (*plan) return cmd_plan(common, fine_tune);
    if (*sweep) return cmd_sweep(common);
    if (*validate_cmd) return cmd_validate(common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
