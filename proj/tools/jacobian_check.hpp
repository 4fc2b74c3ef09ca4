#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dqadapt/geometry.hpp"
#include "dqadapt/robot.hpp"

namespace dqadapt::tools {

struct JacobianFamilyResult {
  std::string family;
  int samples{0};
  double max_abs_error{0.0};
};

/// Compares every analytic Jacobian against central differences at random
/// in-bounds (q, a) samples. Distance pairs whose gradient is undefined at a
/// sample are skipped.
std::vector<JacobianFamilyResult> check_jacobians(const RobotDescription& robot, const Scene& scene, int samples,
                                                  std::uint64_t seed, double step = 1e-6);

}  // namespace dqadapt::tools
