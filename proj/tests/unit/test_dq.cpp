#include <random>

#include <gtest/gtest.h>

#include "dqadapt/dq.hpp"
#include "oracles.hpp"

using namespace dqadapt;

namespace {

std::mt19937_64 rng(7);

Vec8 random_vec8() {
  std::normal_distribution<double> n;
  Vec8 v;
  for (int i = 0; i < 8; ++i) v(i) = n(rng);
  return v;
}

Vec3 random_vec3(double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return {n(rng), n(rng), n(rng)};
}

Quaternion random_rotation() {
  std::normal_distribution<double> n;
  return Quaternion{n(rng), n(rng), n(rng), n(rng)}.normalized();
}

DualQuaternion random_unit() {
  return DualQuaternion::from_pose(random_rotation(), random_vec3());
}

void expect_near(const Vec8& a, const Vec8& b, double tol) {
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), tol) << a.transpose() << "\n" << b.transpose();
}

}  // namespace

TEST(Quaternion, AssociativeAndDistributive) {
  std::normal_distribution<double> n;
  for (int k = 0; k < 200; ++k) {
    const Quaternion a{n(rng), n(rng), n(rng), n(rng)};
    const Quaternion b{n(rng), n(rng), n(rng), n(rng)};
    const Quaternion c{n(rng), n(rng), n(rng), n(rng)};
    EXPECT_LE((vec4((a * b) * c) - vec4(a * (b * c))).norm(), 1e-12);
    EXPECT_LE((vec4(a * (b + c)) - vec4(a * b + a * c)).norm(), 1e-12);
  }
}

TEST(Quaternion, NormalizedIsUnit) {
  for (int k = 0; k < 100; ++k) EXPECT_NEAR(random_rotation().norm(), 1.0, 1e-9);
}

TEST(DualQuaternion, IdentityIsNeutral) {
  const DualQuaternion x = random_unit();
  expect_near(vec8(DualQuaternion::identity() * x), vec8(x), 1e-15);
  expect_near(vec8(x * DualQuaternion::identity()), vec8(x), 1e-15);
}

TEST(DualQuaternion, QuarterTurnMovesXOntoY) {
  const auto r = DualQuaternion::from_rotation(Quaternion::from_axis_angle(Vec3::UnitZ(), M_PI / 2));
  const auto t = DualQuaternion::from_translation(Vec3::UnitX());
  const DualQuaternion moved = r * t * r.conj();
  EXPECT_LE((moved.translation() - Vec3::UnitY()).norm(), 1e-12);
}

TEST(DualQuaternion, ProductMatchesTableExpansion) {
  for (int k = 0; k < 200; ++k) {
    const Vec8 a = random_vec8();
    const Vec8 b = random_vec8();
    expect_near(vec8(from_vec8(a) * from_vec8(b)), oracle::dual_product(a, b), 1e-12);
  }
}

TEST(DualQuaternion, UnitTimesUnitIsUnit) {
  for (int k = 0; k < 200; ++k) EXPECT_TRUE((random_unit() * random_unit()).is_unit(1e-9));
}

TEST(DualQuaternion, UnitNormPreservedOverLongCompositions) {
  // 10^6 compositions, renormalizing nothing, in chunks so the drift is seen.
  DualQuaternion x = DualQuaternion::identity();
  std::vector<DualQuaternion> pool;
  for (int i = 0; i < 64; ++i) pool.push_back(random_unit());
  double worst = 0.0;
  for (int k = 0; k < 1000000; ++k) {
    const DualQuaternion y = pool[static_cast<size_t>(k) & 63] * pool[static_cast<size_t>(k * 7 + 3) & 63];
    worst = std::max(worst, std::abs(y.primary.norm() - 1.0));
    worst = std::max(worst, std::abs(dot(y.primary, y.dual)));
    if (k % 1000 == 0) x = (x * y).normalized();
  }
  EXPECT_LE(worst, 1e-9);
  EXPECT_TRUE(x.is_unit(1e-9));
}

TEST(DualQuaternion, ConjugateRule) {
  EXPECT_EQ(vec8(DualQuaternion::identity().conj()), vec8(DualQuaternion::identity()));
  const Vec8 v = random_vec8();
  const Vec8 c = vec8(from_vec8(v).conj());
  const Vec8 expected = (Vec8() << v(0), -v(1), -v(2), -v(3), v(4), -v(5), -v(6), -v(7)).finished();
  EXPECT_EQ(c, expected);
  const DualQuaternion x = random_unit();
  expect_near(vec8(x * x.conj()), vec8(DualQuaternion::identity()), 1e-12);
}

TEST(DualQuaternion, Vec8RoundTripAndOrdering) {
  const Vec8 id = vec8(DualQuaternion::identity());
  EXPECT_EQ(id, (Vec8() << 1, 0, 0, 0, 0, 0, 0, 0).finished());
  const Vec8 v = random_vec8();
  EXPECT_EQ(vec8(from_vec8(v)), v);
}

TEST(DualQuaternion, HamiltonOperators) {
  for (int k = 0; k < 100; ++k) {
    const DualQuaternion a = from_vec8(random_vec8());
    const DualQuaternion b = from_vec8(random_vec8());
    expect_near(vec8(a * b), hamilton_plus8(a) * vec8(b), 1e-12);
    expect_near(vec8(a * b), hamilton_minus8(b) * vec8(a), 1e-12);
    EXPECT_LE((vec4(a.primary * b.primary) - hamilton_plus(a.primary) * vec4(b.primary)).norm(), 1e-12);
    EXPECT_LE((vec4(a.primary * b.primary) - hamilton_minus(b.primary) * vec4(a.primary)).norm(), 1e-12);
  }
}

TEST(DualQuaternion, DoubleCoverSameTransform) {
  const DualQuaternion x = random_unit();
  const DualQuaternion y = -1.0 * x;
  for (int k = 0; k < 100; ++k) {
    const Vec3 p = random_vec3();
    EXPECT_LE((x.transform_point(p) - y.transform_point(p)).norm(), 1e-9);
  }
}

TEST(DualQuaternion, LogExp) {
  expect_near(vec8(dq_log(DualQuaternion::identity())), Vec8::Zero(), 1e-15);
  expect_near(vec8(dq_exp(DualQuaternion::zero())), vec8(DualQuaternion::identity()), 1e-15);
  for (int k = 0; k < 200; ++k) {
    const DualQuaternion x = random_unit();
    const DualQuaternion g = dq_log(x);
    EXPECT_EQ(g.primary.w, 0.0);
    EXPECT_EQ(g.dual.w, 0.0);
    const Vec8 back = vec8(dq_exp(g));
    const double err = std::min((back - vec8(x)).norm(), (back + vec8(x)).norm());
    EXPECT_LE(err, 1e-9);
  }
  // small-angle branch
  const DualQuaternion tiny = DualQuaternion::from_pose(
      Quaternion::from_axis_angle(Vec3::UnitX(), 1e-10), Vec3(0.1, 0.2, 0.3));
  expect_near(vec8(dq_exp(dq_log(tiny))), vec8(tiny), 1e-12);
}

TEST(Sclerp, EndpointsAndFixedPoint) {
  const DualQuaternion x0 = random_unit();
  const DualQuaternion x1 = canonicalize(random_unit(), x0);
  expect_near(vec8(sclerp(x0, x0, 0.5)), vec8(x0), 1e-12);
  expect_near(vec8(sclerp(x0, x1, 0.0)), vec8(x0), 1e-12);
  expect_near(vec8(sclerp(x0, x1, 1.0)), vec8(x1), 1e-9);
  // x1 = -x0 is degenerate and returns x0
  expect_near(vec8(sclerp(x0, -1.0 * x0, 0.3)), vec8(x0), 1e-12);
}

TEST(Sclerp, PureTranslationMidpoint) {
  const Vec3 a(0.1, -0.4, 0.7), b(-0.3, 0.5, 0.2);
  const auto x = sclerp(DualQuaternion::from_translation(a), DualQuaternion::from_translation(b), 0.5);
  EXPECT_LE((x.translation() - 0.5 * (a + b)).norm(), 1e-12);
  EXPECT_NEAR(x.primary.w, 1.0, 1e-12);
}

TEST(Sclerp, ScrewAngleIsLinear) {
  for (int k = 0; k < 50; ++k) {
    const DualQuaternion x0 = random_unit();
    const DualQuaternion x1 = random_unit();
    const double total = canonicalize(x0.conj() * x1, DualQuaternion::identity()).primary.angle();
    for (double tau : {0.1, 0.25, 0.5, 0.9}) {
      const DualQuaternion xt = sclerp(x0, x1, tau);
      EXPECT_TRUE(xt.is_unit(1e-9));
      const double angle = canonicalize(x0.conj() * xt, DualQuaternion::identity()).primary.angle();
      EXPECT_NEAR(angle, tau * total, 1e-8);
    }
  }
}

TEST(Lines, FromPointDirection) {
  const auto l0 = line_from_point_direction(Vec3::Zero(), Vec3::UnitZ());
  expect_near(vec8(l0), (Vec8() << 0, 0, 0, 1, 0, 0, 0, 0).finished(), 0.0);
  const Vec3 p(1, 0, 0), d(0, 0, 1);
  const auto l1 = line_from_point_direction(p, d);
  EXPECT_EQ(line_moment(l1), Vec3(p.cross(d)));
  EXPECT_EQ(line_moment(l1), Vec3(0, -1, 0));
  const Vec3 dd = Vec3(1, 2, 3).normalized();
  expect_near(vec8(line_from_point_direction(p, dd)), vec8(line_from_point_direction(p + 2 * dd, dd)),
              1e-15);
  EXPECT_THROW(line_from_point_direction(p, Vec3(0, 0, 2)), std::invalid_argument);
}

TEST(Lines, PlueckerPreservedByRigidMotion) {
  for (int k = 0; k < 100; ++k) {
    const auto l = line_from_point_direction(random_vec3(), random_vec3().normalized());
    const auto moved = transform_line(random_unit(), l);
    EXPECT_NEAR(line_direction(moved).norm(), 1.0, 1e-9);
    EXPECT_NEAR(line_direction(moved).dot(line_moment(moved)), 0.0, 1e-9);
    EXPECT_NEAR(moved.primary.w, 0.0, 1e-9);
    EXPECT_NEAR(moved.dual.w, 0.0, 1e-9);
  }
}

TEST(Lines, TransformMatchesPointTransform) {
  const DualQuaternion x = random_unit();
  const Vec3 p = random_vec3(), d = random_vec3().normalized();
  const auto direct = line_from_point_direction(x.transform_point(p), x.primary.rotate(d));
  expect_near(vec8(transform_line(x, line_from_point_direction(p, d))), vec8(direct), 1e-12);
}

TEST(Planes, FromPointNormal) {
  EXPECT_EQ(plane_offset(plane_from_point_normal(Vec3::Zero(), Vec3::UnitZ())), 0.0);
  EXPECT_EQ(plane_normal(plane_from_point_normal(Vec3::Zero(), Vec3::UnitZ())), Vec3::UnitZ());
  EXPECT_DOUBLE_EQ(plane_offset(plane_from_point_normal(Vec3(0, 0, 0.5), Vec3::UnitZ())), 0.5);
  EXPECT_THROW(plane_from_point_normal(Vec3::Zero(), Vec3(0, 1, 1)), std::invalid_argument);
  for (int k = 0; k < 100; ++k) {
    const Vec3 n = random_vec3().normalized();
    const Vec3 p = random_vec3();
    Vec3 t = random_vec3();
    t -= t.dot(n) * n;
    EXPECT_NEAR(plane_offset(plane_from_point_normal(p, n)), plane_offset(plane_from_point_normal(p + t, n)),
                1e-12);
  }
}

TEST(Canonicalize, FlipsToPositiveDot) {
  const DualQuaternion x = random_unit();
  const DualQuaternion c = canonicalize(-1.0 * x, x);
  expect_near(vec8(c), vec8(x), 0.0);
  EXPECT_GE(dot(c.primary, x.primary), 0.0);
}
