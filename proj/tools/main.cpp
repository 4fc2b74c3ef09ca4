// dqadapt command-line front end: closed-loop runs, accuracy reports,
// Jacobian validation and offline QP solves.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "dqadapt/sim.hpp"
#include "jacobian_check.hpp"

using namespace dqadapt;

namespace {

constexpr int kExitError = 1;
constexpr int kExitSafetyAbort = 2;

struct RunArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::string path;
  std::optional<int> circulations;
  std::string log;
  std::string trajectory;
  std::string dump_qp;
  double dump_time{0.0};
  bool dump_adaptation{false};
  bool quiet{false};
};

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  return os;
}

ScenarioConfig load_with_overrides(const RunArgs& args) {
  ScenarioConfig c = args.scenario.empty() ? default_scenario() : load_scenario(args.scenario);
  if (args.seed) c.seed = *args.seed;
  if (!args.mode.empty()) c.path.mode = task_mode_from_string(args.mode);
  if (!args.path.empty()) {
    c.path.sketch.reset();
    c.path.sketch_name = args.path;
  }
  if (args.circulations) c.path.circulations = *args.circulations;
  c.validate();
  return c;
}

TaskTrajectory desired_trajectory(const ScenarioConfig& c) {
  const CuttingPath path = project_sketch(c.path.resolved_sketch(), c.scene.face, c.path.speed);
  return c.path.mode == TaskMode::Pose ? pose_path(path, c.path.standoff, c.rate, c.path.roll)
                                       : line_path(path, c.rate);
}

int cmd_run(const RunArgs& args) {
  const ScenarioConfig c = load_with_overrides(args);

  std::optional<QpProblem> dump;
  ControllerCallback inspect;
  if (!args.dump_qp.empty()) {
    inspect = [&](const LogRow& row, const AdaptiveController& ctrl) {
      if (dump || row.t + 1e-9 < args.dump_time) return;
      dump = args.dump_adaptation ? ctrl.last_adaptation_problem() : ctrl.last_task_problem();
    };
  }
  const RunRecord r = run_experiment(c, {}, inspect);

  if (!args.log.empty()) {
    auto os = open_output(args.log);
    write_log_csv(os, r);
  }
  if (!args.trajectory.empty()) {
    auto os = open_output(args.trajectory);
    write_trajectory_csv(os, desired_trajectory(c));
  }
  if (!args.dump_qp.empty()) {
    if (!dump) throw std::runtime_error("the run ended before t = " + std::to_string(args.dump_time) + " s");
    auto os = open_output(args.dump_qp);
    write_qp_dump(os, *dump);
  }

  const RunSummary s = summarize(r);
  if (!args.quiet) {
    std::printf("scenario   %s\n", r.scenario.c_str());
    std::printf("path       %s (%s), seed %llu\n", r.path.c_str(), to_string(r.mode),
                static_cast<unsigned long long>(r.seed));
    std::printf("cycles     %zu\n", r.rows.size());
    std::printf("accuracy   %.3f mm (sd %.3f) over %.1f s\n", 1e3 * s.accuracy.mean, 1e3 * s.accuracy.sd,
                s.accuracy.duration);
    std::printf("warm-up    estimation error %.4f -> %.4f\n", s.warmup_initial_error, s.warmup_final_error);
    std::printf("clearance  %.2f mm (true, smallest)\n", 1e3 * s.min_true_distance);
    std::printf("max |qdot| %.4f rad/s\n", s.max_abs_qdot);
    std::printf("sigma_min  %.4f, peak task error %.4f\n", s.min_smallest_sv, s.peak_task_error);
    std::printf("flags      0x%02x\n", s.flags);
  }
  if (r.aborted) {
    std::fprintf(stderr, "safety abort: %s\n", r.abort_reason.c_str());
    return kExitSafetyAbort;
  }
  return 0;
}

int cmd_trajectory(const RunArgs& args, const std::string& output) {
  const ScenarioConfig c = load_with_overrides(args);
  const TaskTrajectory traj = desired_trajectory(c);
  if (output.empty() || output == "-") {
    write_trajectory_csv(std::cout, traj);
  } else {
    auto os = open_output(output);
    write_trajectory_csv(os, traj);
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& files, const std::string& out_dir) {
  std::vector<RunRecord> records;
  records.reserve(files.size());
  for (const auto& f : files) {
    std::ifstream is(f);
    if (!is) throw std::runtime_error("cannot open '" + f + "'");
    records.push_back(read_log_csv(is));
  }
  const Report rep = make_report(records);
  write_report_table(std::cout, rep);
  if (!out_dir.empty()) {
    auto table = open_output(out_dir + "/accuracy_table.csv");
    write_report_table(table, rep);
    auto summary = open_output(out_dir + "/accuracy_summary.csv");
    write_report_summary(summary, rep);
    auto series = open_output(out_dir + "/series.csv");
    write_report_series(series, records);
  }
  return 0;
}

int cmd_validate(const std::string& scenario, int samples, std::uint64_t seed, double tolerance) {
  const ScenarioConfig c = scenario.empty() ? default_scenario() : load_scenario(scenario);
  const Scene scene = build_scene(c.scene, c.scene.face);
  const auto results = tools::check_jacobians(c.robot, scene, samples, seed);
  bool ok = true;
  std::printf("%-26s %8s %14s\n", "jacobian", "checks", "max |error|");
  for (const auto& r : results) {
    const bool pass = r.max_abs_error <= tolerance;
    ok = ok && pass;
    std::printf("%-26s %8d %14.3e  %s\n", r.family.c_str(), r.samples, r.max_abs_error, pass ? "ok" : "FAIL");
  }
  return ok ? 0 : kExitError;
}

int cmd_solve_qp(const std::string& file, double tolerance, int max_iterations) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot open '" + file + "'");
  const QpProblem p = read_qp_dump(is);
  QpSolver solver({tolerance, max_iterations, false});
  const QpSolution sol = solver.solve(p);
  std::printf("status     %s\n", to_string(sol.status));
  std::printf("iterations %d\n", sol.iterations);
  std::printf("objective  %.17g\n", sol.objective);
  std::printf("kkt        %.3e\n", sol.kkt_residual);
  std::printf("u         ");
  for (Eigen::Index i = 0; i < sol.u.size(); ++i) std::printf(" %.17g", sol.u(i));
  std::printf("\nactive    ");
  for (int i : sol.active_set) std::printf(" %d", i);
  std::printf("\n");
  return sol.optimal() ? 0 : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive constrained task-space control of a laser-cutting mockup"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto add_scenario_options = [&](CLI::App* sub) {
    sub->add_option("--scenario", run_args.scenario, "Scenario JSON (built-in default when omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", run_args.seed, "Random seed for perturbations, tilt and noise");
    sub->add_option("--mode", run_args.mode, "Task objective")->check(CLI::IsMember({"acpo", "aclo"}));
    sub->add_option("--path", run_args.path, "Built-in sketch")
        ->check(CLI::IsMember({"line", "square", "triangle", "diamond"}));
    sub->add_option("--circulations", run_args.circulations, "Times around the sketch")
        ->check(CLI::PositiveNumber);
  };

  auto* run = app.add_subcommand("run", "Run one closed-loop experiment");
  add_scenario_options(run);
  run->add_option("--log", run_args.log, "Per-cycle CSV log");
  run->add_option("--trajectory", run_args.trajectory, "Desired task trajectory CSV");
  run->add_option("--dump-qp", run_args.dump_qp, "Write the task QP of one cycle as a plain-text dump");
  run->add_option("--dump-time", run_args.dump_time, "Run time of the dumped cycle, s")->check(CLI::NonNegativeNumber);
  run->add_flag("--dump-adaptation", run_args.dump_adaptation, "Dump the adaptation QP instead");
  run->add_flag("-q,--quiet", run_args.quiet, "No summary on stdout");

  std::string traj_out;
  auto* traj = app.add_subcommand("trajectory", "Emit the desired task trajectory of a scenario");
  add_scenario_options(traj);
  traj->add_option("-o,--output", traj_out, "Output CSV ('-' for stdout)");

  std::vector<std::string> records;
  std::string out_dir;
  auto* report = app.add_subcommand("report", "Accuracy table and plot series from run logs");
  report->add_option("records", records, "Run logs written by 'run --log'")->required()->check(CLI::ExistingFile);
  report->add_option("--out-dir", out_dir, "Also write accuracy_table.csv, accuracy_summary.csv and series.csv")
      ->check(CLI::ExistingDirectory);

  int samples = 100;
  std::uint64_t jac_seed = 1;
  double jac_tol = 1e-5;
  std::string jac_scenario;
  auto* validate = app.add_subcommand("validate-jacobians", "Check analytic Jacobians against finite differences");
  validate->add_option("--samples", samples, "Random (q, a) samples")->check(CLI::PositiveNumber);
  validate->add_option("--seed", jac_seed, "Sampling seed");
  validate->add_option("--tolerance", jac_tol, "Largest accepted absolute error");
  validate->add_option("--scenario", jac_scenario, "Scenario whose robot and scene are checked")
      ->check(CLI::ExistingFile);

  std::string dump_file;
  double qp_tol = 1e-8;
  int qp_iter = 200;
  auto* solve_qp = app.add_subcommand("solve-qp", "Solve a plain-text QP dump");
  solve_qp->add_option("dump", dump_file, "QP dump file")->required()->check(CLI::ExistingFile);
  solve_qp->add_option("--tolerance", qp_tol, "Solver tolerance");
  solve_qp->add_option("--max-iterations", qp_iter, "Active-set iteration cap");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_args);
    if (*traj) return cmd_trajectory(run_args, traj_out);
    if (*report) return cmd_report(records, out_dir);
    if (*validate) return cmd_validate(jac_scenario, samples, jac_seed, jac_tol);
    if (*solve_qp) return cmd_solve_qp(dump_file, qp_tol, qp_iter);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return 0;
}
