#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "dqadapt/sim.hpp"
#include "oracles.hpp"

using namespace dqadapt;

namespace {

const RobotDescription robot = default_robot();
const KinematicModel model = robot.model();

// Short default-scene run: half a second of warm-up and a 3 cm stroke.
ScenarioConfig quick_scenario(TaskMode mode = TaskMode::Pose) {
  ScenarioConfig c = default_scenario();
  c.warmup = 0.5;
  c.approach_timeout = 10.0;
  CuttingSketch s;
  s.name = "stroke";
  s.segments = {{{0.5, 0.3}, {0.5, 0.4}}};
  c.path.sketch = s;
  c.path.circulations = 1;
  c.path.mode = mode;
  return c;
}

LogRow tracking_row(double t, const Vec3& nominal, const Vec3& traced) {
  LogRow r;
  r.t = t;
  r.phase = Phase::Tracking;
  r.nominal = nominal;
  r.traced = traced;
  r.traced_valid = true;
  return r;
}

RunRecord synthetic_record(const std::string& path, TaskMode mode, double offset, int samples, double rate) {
  RunRecord r;
  r.path = path;
  r.mode = mode;
  r.rate = rate;
  for (int k = 0; k < samples; ++k) {
    const double t = k / rate;
    const Vec3 p(0.68, 0.1 + 0.01 * t, 0.2);
    r.rows.push_back(tracking_row(t, p, p + Vec3(0, offset * (1.0 + 0.5 * std::sin(t)), 0)));
  }
  return r;
}

std::string log_text(const RunRecord& r) {
  std::ostringstream os;
  write_log_csv(os, r);
  return os.str();
}

}  // namespace

TEST(Plant, IntegratesAndClamps) {
  const JointVector lo = JointVector::Constant(-0.2), hi = JointVector::Constant(0.2);
  const JointVector q0 = robot.q_home;
  EXPECT_EQ(simulate_plant(q0, JointVector::Zero(), 0.01, lo, hi), q0);

  const JointVector u = (JointVector() << 0.1, -0.05, 0.2, -0.2, 0.0, 0.15).finished();
  JointVector q = q0;
  for (int k = 0; k < 100; ++k) q = simulate_plant(q, u, 0.01, lo, hi);
  EXPECT_LT((q - q0 - u).cwiseAbs().maxCoeff(), 1e-12);

  const JointVector fast = JointVector::Constant(0.3);
  EXPECT_LT((simulate_plant(q0, fast, 1.0, lo, hi) - q0 - hi).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((simulate_plant(q0, -fast, 1.0, lo, hi) - q0 - lo).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(simulate_plant(q0, u, 0.0, lo, hi), std::invalid_argument);
}

TEST(Perturbation, StaysWithinMagnitudesAndBounds) {
  std::mt19937_64 rng(5);
  const PerturbationModel m;
  for (int k = 0; k < 200; ++k) {
    const ParameterVector a = perturb_parameters(robot.nominal, robot.bounds, m, rng);
    EXPECT_TRUE(robot.bounds.contains(a));
    for (int i = 0; i < kParamCount; ++i) {
      const bool offset = i >= 24;
      const double mag = param::is_length(i) ? (offset ? m.offset_length : m.dh_length)
                                             : (offset ? m.offset_angle : m.dh_angle);
      EXPECT_LE(std::abs(a(i) - robot.nominal(i)), mag + 1e-15) << i;
    }
  }
}

TEST(Measure, NoiseFreeEqualsTrueComposedWithMarker) {
  std::mt19937_64 rng(1);
  const ParameterVector a = oracle::random_parameters(rng, robot.bounds);
  const JointVector q = oracle::random_joints(rng, robot);
  NoiseModel silent;
  silent.position_sigma = 0.0;
  silent.orientation_sigma = 0.0;
  const DualQuaternion y = measure(model, q, a, DualQuaternion::identity(), silent, rng);
  EXPECT_LT((vec8(y) - vec8(model.fk(q, a))).norm(), 1e-12);

  // marker offset of 1 cm along the effector x axis
  const DualQuaternion marker = DualQuaternion::from_translation(Vec3(0.01, 0, 0));
  const DualQuaternion ym = measure(model, q, a, marker, silent, rng);
  const Eigen::Matrix4d T = oracle::matrix_fk(q, a);
  EXPECT_LT((ym.translation() - (T.block<3, 1>(0, 3) + 0.01 * T.block<3, 1>(0, 0))).norm(), 1e-12);
}

TEST(Measure, EmpiricalNoiseMatchesSigma) {
  std::mt19937_64 rng(2);
  const JointVector q = robot.q_home;
  const ParameterVector a = robot.nominal;
  const DualQuaternion x = model.fk(q, a);
  const Mat3 R = x.rotation().to_rotation_matrix();
  NoiseModel noise;
  const int n = 10000;
  Vec3 sum = Vec3::Zero(), sq = Vec3::Zero(), rsq = Vec3::Zero();
  for (int k = 0; k < n; ++k) {
    const DualQuaternion y = measure(model, q, a, DualQuaternion::identity(), noise, rng);
    ASSERT_TRUE(y.is_unit(1e-12));
    const Vec3 d = y.translation() - x.translation();
    sum += d;
    sq += d.cwiseProduct(d);
    // small-angle rotation vector of the body-frame perturbation
    const Quaternion dr = x.rotation().conj() * y.rotation();
    const Vec3 w = 2.0 * (dr.w >= 0 ? 1.0 : -1.0) * dr.vec();
    rsq += w.cwiseProduct(w);
  }
  for (int i = 0; i < 3; ++i) {
    const double sd = std::sqrt(sq(i) / n - (sum(i) / n) * (sum(i) / n));
    EXPECT_NEAR(sd, noise.position_sigma, 0.1 * noise.position_sigma) << i;
    EXPECT_NEAR(std::sqrt(rsq(i) / n), noise.orientation_sigma, 0.1 * noise.orientation_sigma) << i;
  }
  (void)R;
}

TEST(Measure, SpikesDisplaceByMagnitude) {
  std::mt19937_64 rng(3);
  NoiseModel spiky;
  spiky.position_sigma = 0.0;
  spiky.orientation_sigma = 0.0;
  spiky.spike_probability = 1.0;
  const DualQuaternion x = model.fk(robot.q_home, robot.nominal);
  for (int k = 0; k < 50; ++k) {
    const DualQuaternion y = measure(model, robot.q_home, robot.nominal, DualQuaternion::identity(), spiky, rng);
    EXPECT_NEAR((y.translation() - x.translation()).norm(), spiky.spike_magnitude, 1e-12);
  }
}

TEST(BeamTrace, MatchesLinePlaneOracle) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 100; ++k) {
    const JointVector q = oracle::random_joints(rng, robot);
    const ParameterVector a = oracle::random_parameters(rng, robot.bounds);
    const Eigen::Matrix4d T = oracle::matrix_fk(q, a);
    const Vec3 p0 = T.block<3, 1>(0, 3);
    const Vec3 d = T.block<3, 3>(0, 0) * robot.beam_axis;

    // beam straight into a plane at standoff: the hit lies directly ahead
    const Vec3 ahead = p0 + 0.15 * d;
    const auto hit = beam_trace(model, q, a, plane_from_point_normal(ahead, -d));
    ASSERT_TRUE(hit.has_value());
    EXPECT_LT((*hit - ahead).norm(), 1e-9);

    // oblique plane
    const Vec3 n = (-d + 0.6 * Vec3(d.y(), -d.x(), 0.3)).normalized();
    const Vec3 on = Vec3(0.5, 0.1, 0.2);
    const auto oblique = beam_trace(model, q, a, plane_from_point_normal(on, n));
    const auto expected = oracle::line_plane_intersection(p0, d, n, n.dot(on));
    ASSERT_TRUE(oblique.has_value() && expected.has_value());
    EXPECT_LT((*oblique - *expected).norm(), 1e-9);
    EXPECT_NEAR(oracle::point_plane_distance(*oblique, on, n), 0.0, 1e-9);

    // parallel beam
    const Vec3 side = d.unitOrthogonal();
    EXPECT_FALSE(beam_trace(model, q, a, plane_from_point_normal(on, side)).has_value());
  }
}

TEST(Accuracy, Oracles) {
  const std::vector<double> t{0.0, 0.1, 0.25, 0.3, 0.7};
  std::vector<Vec3> nominal, same, shifted;
  for (double ti : t) {
    nominal.emplace_back(0.68, ti, 0.2);
    shifted.push_back(nominal.back() + Vec3(0, 0, 0.002));
  }
  same = nominal;
  const AccuracyStats zero = accuracy(t, nominal, same);
  EXPECT_EQ(zero.mean, 0.0);
  EXPECT_EQ(zero.sd, 0.0);
  const AccuracyStats constant = accuracy(t, nominal, shifted);
  EXPECT_NEAR(constant.mean, 0.002, 1e-15);
  EXPECT_NEAR(constant.sd, 0.0, 1e-15);
  EXPECT_NEAR(constant.duration, 0.7, 1e-15);

  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 0.003);
  std::uniform_real_distribution<double> step(0.005, 0.02);
  std::vector<double> tr{0.0};
  std::vector<Vec3> nom{Vec3::Zero()}, trc{Vec3(g(rng), g(rng), g(rng))};
  for (int k = 1; k < 500; ++k) {
    tr.push_back(tr.back() + step(rng));
    nom.emplace_back(0.01 * tr.back(), 0, 0);
    trc.push_back(nom.back() + Vec3(g(rng), g(rng), g(rng)));
  }
  // direct summation: trapezoid over the time axis, then mean and sample sd
  double integral = 0.0, sum = 0.0, sum2 = 0.0;
  for (size_t k = 0; k < tr.size(); ++k) {
    const double e = (nom[k] - trc[k]).norm();
    sum += e;
    sum2 += e * e;
    if (k > 0) integral += 0.5 * ((nom[k - 1] - trc[k - 1]).norm() + e) * (tr[k] - tr[k - 1]);
  }
  const double n = static_cast<double>(tr.size());
  const AccuracyStats a = accuracy(tr, nom, trc);
  EXPECT_NEAR(a.mean, integral / (tr.back() - tr.front()), 1e-12);
  EXPECT_NEAR(a.sd, std::sqrt((sum2 - sum * sum / n) / (n - 1)), 1e-12);
  EXPECT_EQ(a.samples, tr.size());

  EXPECT_THROW(accuracy({}, {}, {}), std::invalid_argument);
  EXPECT_THROW(accuracy(t, nominal, std::vector<Vec3>(2)), std::invalid_argument);
}

TEST(Report, OverallIsDurationWeightedMeanOfPathMeans) {
  std::vector<RunRecord> records{
      synthetic_record("line", TaskMode::Pose, 0.004, 301, 100.0),
      synthetic_record("square", TaskMode::Pose, 0.002, 1201, 100.0),
      synthetic_record("square", TaskMode::Pose, 0.003, 601, 100.0),
      synthetic_record("line", TaskMode::Line, 0.001, 301, 100.0),
  };
  const Report rep = make_report(records);
  const auto& acpo = rep.cells.at("acpo");
  double num = 0.0, den = 0.0;
  for (const char* p : {"line", "square"}) {
    num += acpo.at(p).mean * acpo.at(p).duration;
    den += acpo.at(p).duration;
  }
  EXPECT_NEAR(acpo.at("overall").mean, num / den, 1e-15);
  EXPECT_EQ(acpo.at("square").runs, 2);
  EXPECT_NEAR(acpo.at("square").duration, 18.0, 1e-12);
  // per-path mean is itself duration weighted over runs
  const AccuracyStats s1 = accuracy(records[1]), s2 = accuracy(records[2]);
  EXPECT_NEAR(acpo.at("square").mean, (s1.mean * s1.duration + s2.mean * s2.duration) / (s1.duration + s2.duration),
              1e-15);

  std::ostringstream table;
  write_report_table(table, rep);
  std::istringstream lines(table.str());
  std::string header, row1, row2;
  std::getline(lines, header);
  std::getline(lines, row1);
  std::getline(lines, row2);
  EXPECT_EQ(header, "mode,line,square,triangle,diamond,overall");
  EXPECT_EQ(row1.rfind("ACPO,", 0), 0u);
  EXPECT_EQ(row2.rfind("ACLO,", 0), 0u);
  EXPECT_NE(row2.find(",-,"), std::string::npos);  // ACLO has no square run

  // identical runs give an identical summary
  std::ostringstream a, b;
  write_report_summary(a, make_report({records[0], records[0]}));
  write_report_summary(b, make_report({records[0], records[0]}));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_THROW(make_report({}), std::invalid_argument);
}

TEST(Scene, DefaultStackHasNineteenRows) {
  const ScenarioConfig c = default_scenario();
  const Scene scene = build_scene(c.scene, c.scene.face);
  ASSERT_EQ(scene.pairs().size(), 19u);
  int planes = 0, cylinders = 0, obstacle = 0, inside = 0;
  for (const auto& p : scene.pairs()) {
    if (p.direction == VfiDirection::KeepInside) {
      ++inside;
    } else if (p.other == "c_o") {
      ++obstacle;
    } else if (p.other.rfind("pi_", 0) == 0) {
      ++planes;
    } else {
      ++cylinders;
    }
  }
  EXPECT_EQ(planes, 4);
  EXPECT_EQ(cylinders, 12);
  EXPECT_EQ(obstacle, 2);
  EXPECT_EQ(inside, 1);

  const ChainState s = model.evaluate(robot.q_home, robot.nominal);
  EXPECT_EQ(build_constraint_stack(scene, 5.0, s, Wrt::Joints).rows(), 19);
  EXPECT_EQ(build_constraint_stack(scene, 5.0, s, Wrt::Parameters).rows(), 19);
  EXPECT_EQ(build_constraint_stack(scene.without(scene_names::kWorkPlane), 5.0, s, Wrt::Joints).rows(), 18);

  // the controller copy only grows radii
  const Scene inflated = build_controller_scene(c.scene, c.scene.face);
  ASSERT_EQ(inflated.pairs().size(), 19u);
  for (size_t i = 0; i < 19; ++i) {
    if (scene.pairs()[i].direction == VfiDirection::KeepOutside) {
      EXPECT_LE(pair_distance(inflated, inflated.pairs()[i], s), pair_distance(scene, scene.pairs()[i], s));
    }
  }
}

TEST(Experiment, ProtocolPhasesAndWarmupStillness) {
  const RunRecord r = run_experiment(quick_scenario());
  ASSERT_FALSE(r.aborted) << r.abort_reason;
  ASSERT_FALSE(r.rows.empty());
  EXPECT_EQ(r.rows.front().phase, Phase::Warmup);
  int warmup = 0;
  for (size_t k = 1; k < r.rows.size(); ++k) {
    EXPECT_GE(static_cast<int>(r.rows[k].phase), static_cast<int>(r.rows[k - 1].phase));
    EXPECT_GT(r.rows[k].t, r.rows[k - 1].t);
  }
  for (const auto& row : r.rows) {
    if (row.phase != Phase::Warmup) continue;
    ++warmup;
    EXPECT_EQ(row.out.u_q, JointVector::Zero());
    EXPECT_EQ(row.q, r.rows.front().q);
  }
  EXPECT_EQ(warmup, 50);
  EXPECT_EQ(r.rows.back().phase, Phase::Tracking);
  const RunSummary s = summarize(r);
  EXPECT_LT(s.warmup_final_error, 0.5 * s.warmup_initial_error);
  EXPECT_LE(s.max_abs_qdot, 0.2 + 1e-9);
  EXPECT_LE(s.max_error_decrease, 1e-9);
}

TEST(Experiment, TracedSamplesLieOnTheFace) {
  ScenarioConfig c = quick_scenario(TaskMode::Line);
  c.scene.box_tilt = 0.0;  // the true face is then the configured one
  const RunRecord r = run_experiment(c);
  ASSERT_FALSE(r.aborted);
  const auto tracking = r.tracking();
  ASSERT_GT(tracking.size(), 100u);
  for (const LogRow* row : tracking) {
    EXPECT_NEAR(oracle::point_plane_distance(row->traced, c.scene.face.pose.translation(), c.scene.face.normal()),
                0.0, 1e-9);
  }
}

TEST(Experiment, DeterministicAndLogRoundTrip) {
  const ScenarioConfig c = quick_scenario();
  const RunRecord a = run_experiment(c);
  const RunRecord b = run_experiment(c);
  const std::string ta = log_text(a);
  EXPECT_EQ(ta, log_text(b));

  ScenarioConfig other = c;
  other.seed = c.seed + 1;
  EXPECT_NE(ta, log_text(run_experiment(other)));

  std::istringstream in(ta);
  const RunRecord back = read_log_csv(in);
  EXPECT_EQ(log_text(back), ta);
  ASSERT_EQ(back.rows.size(), a.rows.size());
  EXPECT_EQ(back.path, a.path);
  EXPECT_EQ(back.seed, a.seed);
  EXPECT_EQ(back.rows.back().a_hat, a.rows.back().a_hat);
  EXPECT_EQ(back.rows.back().out.flags, a.rows.back().out.flags);
  EXPECT_EQ(accuracy(back).mean, accuracy(a).mean);

  std::istringstream bad("# dqadapt run log v1\nt,phase\n0,warmup\n");
  EXPECT_THROW(read_log_csv(bad), std::runtime_error);
}

TEST(Experiment, CallbackSeesEveryRow) {
  size_t seen = 0;
  const RunRecord r = run_experiment(quick_scenario(), [&](const LogRow&) { ++seen; });
  EXPECT_EQ(seen, r.rows.size());
}

TEST(Experiment, MovingObstacleFollowsItsScript) {
  ScenarioConfig c = quick_scenario();
  c.scene.obstacle_amplitude = Vec3(0.0, 0.05, 0.0);
  c.scene.obstacle_period = 2.0;
  const RunRecord r = run_experiment(c);
  EXPECT_FALSE(r.aborted);
  EXPECT_GT(summarize(r).min_true_distance, -0.001);
}

TEST(Scenario, JsonOverridesAndValidation) {
  std::istringstream in(R"({
    "name": "unit",
    "seed": 7,
    "rate": 200,
    "warmup": 2,
    "measurement": "position_only",
    "noise": {"position_sigma": 0.002, "orientation_sigma_deg": 1.0},
    "path": {"sketch": "triangle", "mode": "aclo", "standoff": 0.12, "circulations": 2, "roll_deg": 30},
    "scene": {"box_tilt_deg": 0.5, "safety_margin": 0.004,
              "obstacle": {"point": [0.5, 0, 0.6], "axis": [0, 1, 0], "radius": 0.08}}
  })");
  const ScenarioConfig c = parse_scenario(in);
  EXPECT_EQ(c.name, "unit");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.rate, 200.0);
  EXPECT_EQ(c.measurement, MeasurementModel::PositionOnly);
  EXPECT_EQ(c.path.mode, TaskMode::Line);
  EXPECT_EQ(c.path.resolved_sketch().name, "triangle");
  EXPECT_EQ(c.path.resolved_sketch().circulations, 2);
  EXPECT_NEAR(c.path.roll, M_PI / 6, 1e-15);
  EXPECT_NEAR(c.noise.orientation_sigma, M_PI / 180, 1e-15);
  EXPECT_NEAR(c.scene.box_tilt, 0.5 * M_PI / 180, 1e-15);
  EXPECT_EQ(c.scene.safety_margin, 0.004);
  EXPECT_EQ(c.scene.obstacle_radius, 0.08);
  EXPECT_EQ(c.scene.cylinders.size(), 6u);  // defaults survive a partial scene

  std::istringstream bad_measure(R"({"measurement": "camera"})");
  EXPECT_THROW(parse_scenario(bad_measure), std::invalid_argument);
  std::istringstream bad_rate(R"({"rate": 0})");
  EXPECT_THROW(parse_scenario(bad_rate), std::invalid_argument);
  std::istringstream bad_true(R"({"true_parameters": [1, 2, 3]})");
  EXPECT_THROW(parse_scenario(bad_true), std::exception);
}

TEST(Scenario, ShippedConfigsLoad) {
  const std::string dir = DQADAPT_CONFIG_DIR;
  const ScenarioConfig c = load_scenario(dir + "/scenario.json");
  const ScenarioConfig d = default_scenario();
  EXPECT_EQ(c.robot.nominal, d.robot.nominal);
  EXPECT_EQ(c.robot.q_home, d.robot.q_home);
  EXPECT_EQ(c.q_start, d.q_start);
  EXPECT_EQ(c.scene.obstacle_point, d.scene.obstacle_point);
  EXPECT_EQ(c.scene.back_plane_offset, d.scene.back_plane_offset);
  EXPECT_EQ(c.scene.face.pose.translation(), d.scene.face.pose.translation());
  EXPECT_LT((vec8(c.scene.face.pose) - vec8(d.scene.face.pose)).norm(), 1e-15);
  ASSERT_EQ(c.scene.cylinders.size(), d.scene.cylinders.size());
  for (size_t i = 0; i < c.scene.cylinders.size(); ++i) {
    EXPECT_EQ(c.scene.cylinders[i].radius, d.scene.cylinders[i].radius);
    EXPECT_EQ(c.scene.cylinders[i].margin, d.scene.cylinders[i].margin);
  }
  EXPECT_EQ(c.measurement, d.measurement);
  EXPECT_EQ(c.path.circulations, d.path.circulations);

  for (const char* name : {"manipulability", "zero_error", "moving_obstacle"}) {
    EXPECT_NO_THROW(load_scenario(dir + "/scenarios/" + name + ".json")) << name;
  }
  const ScenarioConfig zero = load_scenario(dir + "/scenarios/zero_error.json");
  EXPECT_EQ(zero.noise.position_sigma, 0.0);
  EXPECT_EQ(zero.scene.box_tilt, 0.0);
  EXPECT_EQ(zero.scene.cylinders.size(), 6u);

  for (const char* name : {"line", "square", "triangle", "diamond"}) {
    const CuttingSketch s = load_sketch(dir + "/sketches/" + name + ".json");
    const CuttingSketch& b = builtin_sketch(name);
    ASSERT_EQ(s.segments.size(), b.segments.size()) << name;
    for (size_t i = 0; i < s.segments.size(); ++i) {
      EXPECT_LT((s.segments[i].start - b.segments[i].start).norm(), 1e-12) << name;
      EXPECT_LT((s.segments[i].end - b.segments[i].end).norm(), 1e-12) << name;
    }
  }
}

TEST(Experiment, InspectorSeesTheQpBehindEachCommand) {
  int checked = 0;
  run_experiment(quick_scenario(), {}, [&](const LogRow& row, const AdaptiveController& c) {
    if (row.phase == Phase::Warmup || row.out.flags != 0) return;
    const QpSolution task = solve(c.last_task_problem());
    ASSERT_TRUE(task.optimal());
    EXPECT_EQ(task.u, row.out.u_q);
    const QpSolution adapt = solve(c.last_adaptation_problem());
    ASSERT_TRUE(adapt.optimal());
    // equal up to the feasibility restoration of the decrease row
    EXPECT_LE((adapt.u - row.out.u_a).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_EQ(c.last_task_problem().A_ineq.rows(), row.phase == Phase::Approach ? 30 : 31);
    ++checked;
  });
  EXPECT_GT(checked, 100);
}
