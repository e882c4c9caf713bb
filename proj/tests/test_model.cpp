#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "trq/dynamics.hpp"
#include "trq/model.hpp"

using namespace trq;

namespace {

const VehicleParams params{};
const RotorGeometry geom = RotorGeometry::x_layout(params.arm_length);

State rest_state() {
  State s;
  s.p = Vec3(0.0, 0.0, 2.0);
  return s;
}

}  // namespace

TEST_CASE("thrust curve hits the tabulated points") {
  // 0.0007 z^2 + 0.0157 z - 0.1891 evaluated by hand.
  CHECK(std::abs(thrust_from_throttle(100.0, params) - 8.3809) < 1e-9);
  CHECK(std::abs(thrust_from_throttle(50.0, params) - 2.3459) < 1e-9);
  CHECK(thrust_from_throttle(0.0, params) == 0.0);   // raw -0.1891 clamps
  CHECK(thrust_from_throttle(5.0, params) == 0.0);   // still below the positive root
}

TEST_CASE("drag torque curve hits the tabulated points") {
  CHECK(std::abs(torque_from_throttle(100.0, params) - 0.082) < 1e-9);
  CHECK(std::abs(torque_from_throttle(50.0, params) - 0.032) < 1e-9);
  CHECK(torque_from_throttle(0.0, params) == 0.0);  // raw -0.008 clamps
}

TEST_CASE("throttle curves reject out-of-range input") {
  CHECK_THROWS_AS(thrust_from_throttle(-0.1, params), std::out_of_range);
  CHECK_THROWS_AS(thrust_from_throttle(100.1, params), std::out_of_range);
  CHECK_THROWS_AS(torque_from_throttle(-1.0, params), std::out_of_range);
  CHECK_THROWS_AS(torque_from_throttle(101.0, params), std::out_of_range);
}

TEST_CASE("throttle curves are nonnegative and nondecreasing") {
  double prev_f = 0.0, prev_q = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double z = 0.1 * i;
    const double f = thrust_from_throttle(z, params);
    const double q = torque_from_throttle(z, params);
    REQUIRE(f >= prev_f);
    REQUIRE(q >= prev_q);
    prev_f = f;
    prev_q = q;
  }
}

TEST_CASE("thrust inverse round-trips through the curve") {
  const double hover = params.mass * params.gravity / 4.0;  // 5.150250 N
  const double z = throttle_from_thrust(hover, params);
  CHECK(std::abs(z - 76.8391) < 1e-3);
  CHECK(std::abs(thrust_from_throttle(z, params) - hover) < 1e-9);
  CHECK(throttle_from_thrust(0.0, params) == 0.0);
  CHECK(throttle_from_thrust(-1.0, params) == 0.0);
  for (double f : {0.5, 1.15, 2.346, 3.85, 8.379}) {
    const double zz = throttle_from_thrust(f, params);
    CHECK(std::abs(thrust_from_throttle(zz, params) - f) < 1e-9);
  }
}

TEST_CASE("rotation matrix basics") {
  CHECK((rotation_from_euler(Vec3::Zero()) - Mat3::Identity()).norm() < 1e-15);

  // Pure yaw of +90 degrees maps body-x onto world-y.
  const Mat3 r = rotation_from_euler(Vec3(0.0, 0.0, M_PI / 2.0));
  CHECK((r * Vec3::UnitX() - Vec3::UnitY()).norm() < 1e-12);
}

TEST_CASE("rotation matrices are proper for random angles") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ang(-M_PI, M_PI);
  for (int i = 0; i < 200; ++i) {
    const Vec3 eta(ang(rng), ang(rng), ang(rng));
    const Mat3 r = rotation_from_euler(eta);
    CHECK((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(r.determinant() - 1.0) < 1e-12);
  }
}

TEST_CASE("euler rate matrix identity and singularity") {
  CHECK((euler_rate_matrix(Vec3::Zero()) - Mat3::Identity()).norm() < 1e-15);
  CHECK_THROWS_AS(euler_rate_matrix(Vec3(0.0, M_PI / 2.0, 0.0)), SingularityError);
  CHECK_THROWS_AS(euler_rate_matrix(Vec3(0.0, -M_PI / 2.0, 0.0)), SingularityError);
  // Just inside the guard band still throws; comfortably away does not.
  CHECK_THROWS_AS(euler_rate_matrix(Vec3(0.0, M_PI / 2.0 - 1e-9, 0.0)), SingularityError);
  CHECK_NOTHROW(euler_rate_matrix(Vec3(0.0, 1.4, 0.0)));
}

TEST_CASE("euler rate matrix is invertible away from the singularity") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> ang(-M_PI, M_PI);
  std::uniform_real_distribution<double> pitch(-1.4, 1.4);
  for (int i = 0; i < 200; ++i) {
    const Vec3 eta(ang(rng), pitch(rng), ang(rng));
    const Mat3 w = euler_rate_matrix(eta);
    CHECK((w * w.inverse() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("hover command nulls the derivative") {
  const ActuatorCommand hover = hover_trim(geom, params);
  const StateDerivative d = dynamics(rest_state(), hover, Wrench{}, geom, params);
  CHECK(d.vec().lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("zero throttle gives clean free fall") {
  const StateDerivative d = dynamics(rest_state(), ActuatorCommand{}, Wrench{}, geom, params);
  CHECK((d.v_dot - Vec3(0.0, 0.0, -params.gravity)).norm() < 1e-12);
  CHECK(d.p_dot.norm() == 0.0);
  CHECK(d.omega_dot.norm() == 0.0);
}

TEST_CASE("horizontal disturbance force accelerates by Newton's law") {
  Wrench dist;
  dist.force = Vec3(2.0, 0.0, 0.0);
  const ActuatorCommand hover = hover_trim(geom, params);
  const StateDerivative d = dynamics(rest_state(), hover, dist, geom, params);
  CHECK(std::abs(d.v_dot[0] - 2.0 / params.mass) < 1e-9);
  CHECK(std::abs(d.v_dot[1]) < 1e-9);
  CHECK(std::abs(d.v_dot[2]) < 1e-6);
}

TEST_CASE("rk4 holds the hover fixed point") {
  const ActuatorCommand hover = hover_trim(geom, params);
  State s = rest_state();
  for (int i = 0; i < 100; ++i) s = rk4_step(s, hover, Wrench{}, geom, params, 0.001);
  CHECK((s.vec() - rest_state().vec()).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("rk4 integrates free fall exactly") {
  State s;
  s.p = Vec3(0.0, 0.0, 100.0);
  for (int i = 0; i < 1000; ++i) s = rk4_step(s, ActuatorCommand{}, Wrench{}, geom, params, 0.001);
  // Quadratic altitude profile is inside RK4's exactness class.
  CHECK(std::abs(s.p[2] - (100.0 - 0.5 * params.gravity)) < 1e-9);
  CHECK(std::abs(s.v[2] + params.gravity) < 1e-9);
}

TEST_CASE("torque-free spin preserves the symmetry-axis rate") {
  // Ixx = Iyy makes omega_z an invariant of the Euler equations.
  State s;
  s.p = Vec3(0.0, 0.0, 50.0);
  s.omega = Vec3(0.5, 0.3, 3.0);
  for (int i = 0; i < 1000; ++i) s = rk4_step(s, ActuatorCommand{}, Wrench{}, geom, params, 0.001);
  CHECK(std::abs(s.omega[2] - 3.0) < 1e-9);
  // The transverse rate magnitude is conserved as well.
  CHECK(std::abs(s.omega.head<2>().norm() - std::hypot(0.5, 0.3)) < 1e-9);
}

TEST_CASE("translational energy is conserved in ballistic flight") {
  State s;
  s.p = Vec3(0.0, 0.0, 50.0);
  s.v = Vec3(1.0, -2.0, 3.0);
  const auto energy = [&](const State& x) {
    return 0.5 * params.mass * x.v.squaredNorm() + params.mass * params.gravity * x.p[2];
  };
  const double e0 = energy(s);
  for (int i = 0; i < 1000; ++i) s = rk4_step(s, ActuatorCommand{}, Wrench{}, geom, params, 0.001);
  CHECK(std::abs(energy(s) - e0) < 1e-6);
}

TEST_CASE("rk4 shows fourth-order convergence on tumbling flight") {
  State x0;
  x0.p = Vec3(0.0, 0.0, 10.0);
  x0.v = Vec3(0.3, -0.2, 0.4);
  x0.eta = Vec3(0.05, -0.04, 0.3);
  x0.omega = Vec3(0.5, 0.3, 3.0);
  const auto integrate = [&](double h) {
    State s = x0;
    const int n = static_cast<int>(std::round(1.0 / h));
    for (int i = 0; i < n; ++i) s = rk4_step(s, ActuatorCommand{}, Wrench{}, geom, params, h);
    return s.vec();
  };
  const Vec12 ref = integrate(1e-5);
  const double e2 = (integrate(0.002) - ref).lpNorm<Eigen::Infinity>();
  const double e1 = (integrate(0.001) - ref).lpNorm<Eigen::Infinity>();
  REQUIRE(e1 > 0.0);
  const double ratio = e2 / e1;
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("state and command stack round-trips") {
  State s;
  s.p = Vec3(1, 2, 3);
  s.v = Vec3(4, 5, 6);
  s.eta = Vec3(0.1, 0.2, 0.3);
  s.omega = Vec3(7, 8, 9);
  CHECK((State::from_vec(s.vec()).vec() - s.vec()).norm() == 0.0);

  ActuatorCommand c;
  c.zeta = Vec4(10, 20, 30, 40);
  c.tilt = Vec4(-0.1, 0.2, -0.3, 0.4);
  CHECK((ActuatorCommand::from_vec(c.vec()).vec() - c.vec()).norm() == 0.0);

  ActuatorCommand wild;
  wild.zeta = Vec4(-5.0, 150.0, 50.0, 100.0);
  wild.tilt = Vec4(-3.0, 3.0, 0.0, 1.0);
  const ActuatorCommand clamped = wild.clamped(params);
  CHECK(clamped.within(params));
  CHECK(clamped.zeta[0] == 0.0);
  CHECK(clamped.zeta[1] == 100.0);
  CHECK(clamped.tilt[0] == params.tilt_range[0]);
}

TEST_CASE("vehicle parameter validation catches bad values") {
  VehicleParams p;
  p.mass = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = VehicleParams{};
  p.inertia_diag[1] = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = VehicleParams{};
  p.throttle_range = Eigen::Vector2d(50.0, 40.0);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = VehicleParams{};
  p.tilt_range = Eigen::Vector2d(-1.0, 0.5);  // asymmetric
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK_NOTHROW(VehicleParams{}.validate());
}
