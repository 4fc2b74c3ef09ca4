#include "dqadapt/robot.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "json_util.hpp"

namespace dqadapt {

using detail::json;

void RobotDescription::validate() const {
  if (std::abs(beam_axis.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("robot: beam axis must be a unit vector");
  }
  if (!((bounds.lower.array() <= bounds.upper.array()).all())) {
    throw std::invalid_argument("robot: parameter lower bound exceeds upper bound");
  }
  if (!bounds.contains(nominal, 1e-12)) {
    throw std::invalid_argument("robot: nominal parameters lie outside their bounds");
  }
  if (!((q_lower.array() < q_upper.array()).all())) {
    throw std::invalid_argument("robot: joint range is empty");
  }
}

RobotDescription default_robot() {
  RobotDescription r;
  r.name = "ur3e";
  // rows: theta offset, d, a, alpha
  const double dh[kJointCount][4] = {
      {0.0, 0.15185, 0.0, M_PI / 2},   {0.0, 0.0, -0.24355, 0.0}, {0.0, 0.0, -0.2132, 0.0},
      {0.0, 0.13105, 0.0, M_PI / 2},   {0.0, 0.08535, 0.0, -M_PI / 2}, {0.0, 0.0921, 0.0, 0.0},
  };
  for (int j = 0; j < kJointCount; ++j) {
    for (int f = 0; f < 4; ++f) {
      r.nominal(4 * j + f) = dh[j][f];
    }
  }
  // torch body along the flange x-axis, beam leaving along the effector z-axis
  r.nominal.segment<6>(param::effector(0)) << 0.25, 0.0, 0.06, 0.0, M_PI / 2, 0.0;
  r.bounds = ParameterBounds::around(r.nominal, 0.05, 0.15);
  r.q_lower = JointVector::Constant(-M_PI);
  r.q_upper = JointVector::Constant(M_PI);
  r.q_home << 1.13, -0.89, -2.32, -1.51, 1.5708, -0.44;
  return r;
}

RobotDescription parse_robot(std::istream& is) {
  const json j = detail::parse_stream(is, "robot description");
  RobotDescription r;
  r.name = j.value("name", std::string("robot"));
  const int joints = detail::require(j, "joints").get<int>();
  if (joints != kJointCount) {
    throw std::invalid_argument("robot: only 6-joint arms are supported");
  }
  const json& dh = detail::require(j, "dh");
  if (!dh.is_array() || dh.size() != static_cast<size_t>(kJointCount)) {
    throw std::invalid_argument("robot: 'dh' needs one row per joint");
  }
  for (int k = 0; k < kJointCount; ++k) {
    const json& row = dh.at(static_cast<size_t>(k));
    r.nominal(param::dh(k, DhField::ThetaOffset)) = row.value("theta", 0.0);
    r.nominal(param::dh(k, DhField::D)) = detail::require(row, "d").get<double>();
    r.nominal(param::dh(k, DhField::A)) = detail::require(row, "a").get<double>();
    r.nominal(param::dh(k, DhField::Alpha)) = detail::require(row, "alpha").get<double>();
  }
  if (j.contains("base_offset")) {
    r.nominal.segment<6>(param::base(0)) = detail::fixed_vector<6>(j.at("base_offset"), "base_offset");
  }
  if (j.contains("effector_offset")) {
    r.nominal.segment<6>(param::effector(0)) =
        detail::fixed_vector<6>(j.at("effector_offset"), "effector_offset");
  }
  if (j.contains("beam_axis")) {
    r.beam_axis = detail::fixed_vector<3>(j.at("beam_axis"), "beam_axis");
  }
  const json bounds = j.value("bounds", json::object());
  if (bounds.contains("lower") || bounds.contains("upper")) {
    r.bounds.lower = detail::fixed_vector<kParamCount>(detail::require(bounds, "lower"), "bounds.lower");
    r.bounds.upper = detail::fixed_vector<kParamCount>(detail::require(bounds, "upper"), "bounds.upper");
  } else {
    r.bounds = ParameterBounds::around(r.nominal, bounds.value("length", 0.05),
                                       bounds.value("angle", 0.15));
  }
  if (j.contains("joint_range")) {
    const json& jr = j.at("joint_range");
    r.q_lower = detail::fixed_vector<kJointCount>(detail::require(jr, "lower"), "joint_range.lower");
    r.q_upper = detail::fixed_vector<kJointCount>(detail::require(jr, "upper"), "joint_range.upper");
  }
  if (j.contains("home")) {
    r.q_home = detail::fixed_vector<kJointCount>(j.at("home"), "home");
  }
  r.validate();
  return r;
}

RobotDescription load_robot(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_robot(in);
}

void write_robot(std::ostream& os, const RobotDescription& r) {
  json j;
  j["name"] = r.name;
  j["joints"] = kJointCount;
  j["dh"] = json::array();
  for (int k = 0; k < kJointCount; ++k) {
    j["dh"].push_back({{"theta", r.nominal(param::dh(k, DhField::ThetaOffset))},
                       {"d", r.nominal(param::dh(k, DhField::D))},
                       {"a", r.nominal(param::dh(k, DhField::A))},
                       {"alpha", r.nominal(param::dh(k, DhField::Alpha))}});
  }
  j["base_offset"] = detail::to_array(r.nominal.segment<6>(param::base(0)));
  j["effector_offset"] = detail::to_array(r.nominal.segment<6>(param::effector(0)));
  j["beam_axis"] = detail::to_array(r.beam_axis);
  j["bounds"] = {{"lower", detail::to_array(r.bounds.lower)},
                 {"upper", detail::to_array(r.bounds.upper)}};
  j["joint_range"] = {{"lower", detail::to_array(r.q_lower)}, {"upper", detail::to_array(r.q_upper)}};
  j["home"] = detail::to_array(r.q_home);
  os << std::setw(2) << j << '\n';
}

}  // namespace dqadapt
