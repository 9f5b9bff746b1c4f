#include <cmath>

#include "doctest.h"
#include "elasticflow/error.h"
#include "elasticflow/velocity_network.h"
#include "test_util.h"

using namespace elasticflow;

namespace {

NetworkConfig small_config() {
  NetworkConfig c;
  c.horizon_steps = 4;
  c.action_dim = 2;
  c.hidden_dim = 16;
  c.n_blocks = 2;
  c.d_emb = 8;
  c.cond_dim = 2;
  c.n_tasks = 3;
  c.n_frequencies = 4;
  c.fourier_scale = 2;
  return c;
}

std::vector<Condition> some_conditions(std::size_t n) {
  std::vector<Condition> conds(n);
  for (std::size_t i = 0; i < n; ++i) {
    conds[i].goal = {Real(0.3) * Real(i), Real(-0.5)};
    conds[i].task_id = static_cast<int>(i % 3);
    conds[i].horizon_seconds = Real(0.5) + Real(i);
  }
  if (n > 2) conds[2] = Condition::null_condition();
  return conds;
}

}  // namespace

TEST_SUITE("velocity_network") {

TEST_CASE("fresh network outputs zero") {
  const VelocityNetwork net = VelocityNetwork::create(small_config(), 1);
  const ParameterStore params = net.init_parameters(2);
  const Tensor z = testutil::random({3, 8}, 3);
  const std::vector<Real> r{0, Real(0.2), Real(0.5)}, t{1, Real(0.4), Real(0.5)};
  const Tensor u = net.forward(params, z, r, t, some_conditions(3));
  CHECK(u.shape() == Shape{3, 8});
  for (Real v : u.values()) CHECK(v == 0);
}

TEST_CASE("batched and single-sample forward agree") {
  const VelocityNetwork net = VelocityNetwork::create(small_config(), 1);
  ParameterStore params = net.init_parameters(2);
  testutil::jitter(params, 4);
  const Tensor z = testutil::random({3, 8}, 3);
  const std::vector<Real> r{0, Real(0.2), Real(0.5)}, t{1, Real(0.4), Real(0.5)};
  const auto conds = some_conditions(3);
  const Tensor u = net.forward(params, z, r, t, conds);
  for (std::size_t b = 0; b < 3; ++b) {
    const auto single = net.forward(params, z.row_span(b), r[b], t[b], conds[b]);
    for (std::size_t j = 0; j < 8; ++j) CHECK(single[j] == u.at(b, j));
  }
}

TEST_CASE("forward_jvp matches finite differences in z and t") {
  const VelocityNetwork net = VelocityNetwork::create(small_config(), 5);
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    ParameterStore params = net.init_parameters(trial);
    testutil::jitter(params, 100 + trial);
    const Tensor z = testutil::random({3, 8}, 200 + trial);
    const Tensor dz = testutil::random({3, 8}, 300 + trial);
    const std::vector<Real> r{Real(0.1), Real(0.3), Real(0.2)}, t{Real(0.6), Real(0.5), Real(0.25)};
    const auto conds = some_conditions(3);
    const Real dt = Real(0.7);
    const JvpResult jr = net.forward_jvp(params, z, r, t, conds, dz, dt);
    CHECK(bitwise_equal(jr.value, net.forward(params, z, r, t, conds)));

    const Real h = 1e-5;
    auto at = [&](Real eps) {
      Tensor zz = z;
      for (std::size_t i = 0; i < zz.size(); ++i) zz[i] += eps * dz[i];
      std::vector<Real> tt = t;
      for (auto& v : tt) v += eps * dt;
      return net.forward(params, zz, r, tt, conds);
    };
    const Tensor plus = at(h), minus = at(-h);
    Tensor fd(plus.shape());
    for (std::size_t i = 0; i < fd.size(); ++i) fd[i] = (plus[i] - minus[i]) / (2 * h);
    CHECK(testutil::rel_error(jr.derivative, fd) < 1e-6);
  }
}

TEST_CASE("forward_jvp is linear in the tangent") {
  for (std::size_t blocks : {1u, 2u, 4u}) {
    NetworkConfig c = small_config();
    c.n_blocks = blocks;
    const VelocityNetwork net = VelocityNetwork::create(c, 3);
    ParameterStore params = net.init_parameters(3);
    testutil::jitter(params, 40 + blocks);
    const Tensor z = testutil::random({3, 8}, 50);
    const Tensor d1 = testutil::random({3, 8}, 51), d2 = testutil::random({3, 8}, 52);
    const std::vector<Real> r{Real(0.1), 0, Real(0.4)}, t{Real(0.9), Real(0.5), Real(0.4)};
    const auto conds = some_conditions(3);
    const Real a = Real(1.7), b = Real(-0.6), s1 = Real(0.3), s2 = Real(-1.1);
    Tensor mixed(z.shape());
    for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i] = a * d1[i] + b * d2[i];
    const Tensor j1 = net.forward_jvp(params, z, r, t, conds, d1, s1).derivative;
    const Tensor j2 = net.forward_jvp(params, z, r, t, conds, d2, s2).derivative;
    const Tensor jm = net.forward_jvp(params, z, r, t, conds, mixed, a * s1 + b * s2).derivative;
    Tensor expect(jm.shape());
    for (std::size_t i = 0; i < expect.size(); ++i) expect[i] = a * j1[i] + b * j2[i];
    CHECK(testutil::rel_error(jm, expect) < 1e-12);
  }
}

TEST_CASE("seeded forward golden") {
  const auto golden = testutil::read_golden("net_forward_seed0_jitter8.txt");
  REQUIRE(golden.size() == 1);
  const VelocityNetwork net = VelocityNetwork::create(small_config(), 0);
  ParameterStore params = net.init_parameters(0);
  testutil::jitter(params, 8);
  Tensor z = Tensor::matrix(2, 8);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = Real(0.25) * Real(i) - Real(1.5);
  std::vector<Condition> conds(2);
  conds[0].goal = {Real(0.5), Real(-0.25)};
  conds[0].task_id = 1;
  conds[0].horizon_seconds = 1;
  conds[1] = Condition::null_condition();
  const std::vector<Real> r{0, Real(0.25)}, t{1, Real(0.75)};
  const Tensor u = net.forward(params, z, r, t, conds);
  REQUIRE(u.size() == golden[0].size());
  const Real tol = sizeof(Real) == 8 ? Real(1e-12) : Real(1e-4);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(std::abs(u[i] - golden[0][i]) <= tol * (1 + std::abs(golden[0][i])));
}

TEST_CASE("tape forward matches the plain forward") {
  const VelocityNetwork net = VelocityNetwork::create(small_config(), 1);
  ParameterStore params = net.init_parameters(2);
  testutil::jitter(params, 6);
  const Tensor z = testutil::random({3, 8}, 7);
  const std::vector<Real> r{0, Real(0.2), Real(0.5)}, t{1, Real(0.4), Real(0.5)};
  const auto conds = some_conditions(3);
  Tape tape;
  TapeLayer layer(tape, params);
  const Var u = net.forward(layer, z, r, t, conds);
  CHECK(bitwise_equal(u.value(), net.forward(params, z, r, t, conds)));
}

TEST_CASE("null condition ignores goal, task and horizon") {
  const VelocityNetwork net = VelocityNetwork::create(small_config(), 1);
  ParameterStore params = net.init_parameters(2);
  testutil::jitter(params, 8);
  const Tensor z = testutil::random({1, 8}, 9);
  Condition a = Condition::null_condition();
  Condition b = Condition::null_condition();
  b.goal = {5, 5};
  b.task_id = 2;
  b.horizon_seconds = 9;
  const std::vector<Real> r{Real(0.1)}, t{Real(0.9)};
  CHECK(bitwise_equal(net.forward(params, z, r, t, std::span(&a, 1)), net.forward(params, z, r, t, std::span(&b, 1))));
  Condition c;
  c.goal = {0, 0};
  CHECK_FALSE(bitwise_equal(net.forward(params, z, r, t, std::span(&a, 1)), net.forward(params, z, r, t, std::span(&c, 1))));
}

TEST_CASE("the span input matters") {
  const VelocityNetwork net = VelocityNetwork::create(small_config(), 1);
  ParameterStore params = net.init_parameters(2);
  testutil::jitter(params, 10);
  const Tensor z = testutil::random({1, 8}, 11);
  Condition c;
  c.goal = {0, 0};
  const std::vector<Real> r0{0}, r1{Real(0.5)}, t{1};
  CHECK_FALSE(bitwise_equal(net.forward(params, z, r0, t, std::span(&c, 1)), net.forward(params, z, r1, t, std::span(&c, 1))));
}

TEST_CASE("input validation") {
  const VelocityNetwork net = VelocityNetwork::create(small_config(), 1);
  const ParameterStore params = net.init_parameters(2);
  const std::vector<Real> r{0}, t{1};
  Condition c;
  c.goal = {0, 0};
  CHECK_THROWS_AS(net.forward(params, Tensor::matrix(1, 7), r, t, std::span(&c, 1)), ShapeError);
  const std::vector<Real> bad_r{Real(0.9)}, bad_t{Real(0.5)};
  CHECK_THROWS_AS(net.forward(params, Tensor::matrix(1, 8), bad_r, bad_t, std::span(&c, 1)), PreconditionError);
  Condition wrong_goal;
  wrong_goal.goal = {1};
  CHECK_THROWS_AS(net.forward(params, Tensor::matrix(1, 8), r, t, std::span(&wrong_goal, 1)), ShapeError);
  Condition wrong_task = c;
  wrong_task.task_id = 3;
  CHECK_THROWS(net.forward(params, Tensor::matrix(1, 8), r, t, std::span(&wrong_task, 1)));
  CHECK_THROWS_AS(net.forward(ParameterStore{}, Tensor::matrix(1, 8), r, t, std::span(&c, 1)), PreconditionError);
}

}  // TEST_SUITE
