#include <cstring>

#include "doctest.h"
#include "elasticflow/datasets.h"
#include "elasticflow/error.h"
#include "elasticflow/metrics.h"
#include "elasticflow/ops.h"
#include "elasticflow/sampler.h"
#include "elasticflow/trainer.h"
#include "test_util.h"

using namespace elasticflow;

namespace {

VelocityField dirac_field(std::vector<Real> x0, std::size_t* calls = nullptr) {
  return [x0 = std::move(x0), calls](const Tensor& z, Real, Real t, std::span<const Condition>) {
    if (calls) ++*calls;
    Tensor u(z.shape());
    for (std::size_t i = 0; i < z.rows(); ++i) {
      for (std::size_t j = 0; j < z.cols(); ++j) u.at(i, j) = (z.at(i, j) - x0[j]) / t;
    }
    return u;
  };
}

std::vector<Condition> goals(std::size_t n) {
  std::vector<Condition> conds(n);
  for (std::size_t i = 0; i < n; ++i) conds[i].goal = {Real(0.1) * Real(i), Real(-0.2)};
  return conds;
}

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("cfg_combine") {
  const Tensor c = testutil::random({3, 4}, 1), u = testutil::random({3, 4}, 2);
  CHECK(bitwise_equal(cfg_combine(c, u, 1), c));
  CHECK(bitwise_equal(cfg_combine(c, u, 0), u));
  CHECK(cfg_combine(Tensor::scalar(1), Tensor::scalar(Real(0.5)), 2).item() == Real(1.5));
  // Affine in w.
  const Tensor a = cfg_combine(c, u, Real(1.5)), b = cfg_combine(c, u, Real(2.5)), m = cfg_combine(c, u, 2);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(std::abs((a[i] + b[i]) / 2 - m[i]) < 1e-14);
  CHECK_THROWS_AS(cfg_combine(c, Tensor::matrix(4, 3), 2), ShapeError);
}

TEST_CASE("one-step sampling of a point mass") {
  const auto conds = std::vector<Condition>(50);
  std::size_t calls = 0;
  Rng rng(3);
  const SampleResult res = one_step_sample(dirac_field({0, 0}, &calls), conds, 2, {Real(2), false}, rng);
  for (Real v : res.x.values()) CHECK(v == 0);
  CHECK(calls == 1);
  CHECK(res.nfe_conditional == 1);
  CHECK(res.nfe_total == 1);

  calls = 0;
  Rng rng2(3);
  const SampleResult guided = one_step_sample(dirac_field({0, 0}, &calls), goals(50), 2, {Real(2), true}, rng2);
  CHECK(calls == 2);
  CHECK(guided.nfe_conditional == 1);
  CHECK(guided.nfe_total == 2);
  for (Real v : guided.x.values()) CHECK(v == 0);
}

TEST_CASE("Euler sampling of a point mass lands on it") {
  const std::vector<Real> x0{Real(0.5), Real(-0.3)};
  for (std::size_t n : {1u, 2u, 7u, 50u}) {
    std::size_t calls = 0;
    Rng rng(5);
    const SampleResult res = euler_sample(dirac_field(x0, &calls), std::vector<Condition>(20), 2, n, {2, false}, rng);
    for (std::size_t i = 0; i < 20; ++i) {
      CHECK(std::abs(res.x.at(i, 0) - x0[0]) < 1e-12);
      CHECK(std::abs(res.x.at(i, 1) - x0[1]) < 1e-12);
    }
    CHECK(calls == n);
    CHECK(res.nfe_conditional == n);
    CHECK(res.nfe_total == n);
    Rng rng2(5);
    CHECK(euler_sample(dirac_field(x0), goals(20), 2, n, {2, true}, rng2).nfe_total == 2 * n);
  }
  Rng rng(1);
  CHECK_THROWS_AS(euler_sample(dirac_field(x0), goals(2), 2, 0, {}, rng), PreconditionError);
}

TEST_CASE("single Euler step equals one-step sampling for a time-free field") {
  const VelocityField affine = [](const Tensor& z, Real, Real, std::span<const Condition>) {
    Tensor u(z.shape());
    for (std::size_t i = 0; i < z.size(); ++i) u[i] = Real(0.5) * z[i] + 1;
    return u;
  };
  Rng a(9), b(9);
  const auto conds = std::vector<Condition>(16);
  CHECK(bitwise_equal(one_step_sample(affine, conds, 2, {1, false}, a).x,
                      euler_sample(affine, conds, 2, 1, {1, false}, b).x));
}

TEST_CASE("guidance preconditions") {
  Rng rng(1);
  const VelocityField f = dirac_field({0, 0});
  CHECK_THROWS_AS(one_step_sample(f, std::vector<Condition>(2, Condition::null_condition()), 2, {2, true}, rng),
                  PreconditionError);
  CHECK_THROWS_AS(one_step_sample(f, goals(2), 2, {Real(-1), true}, rng), PreconditionError);
  CHECK_THROWS_AS(one_step_sample(f, goals(2), 2, {std::nan(""), false}, rng), PreconditionError);
}

TEST_CASE("network sampling: seeds, w-independence and the exact CFG branches") {
  NetworkConfig nc;
  nc.horizon_steps = 4;
  nc.action_dim = 2;
  nc.cond_dim = 2;
  nc.hidden_dim = 16;
  nc.d_emb = 16;
  const VelocityNetwork net = VelocityNetwork::create(nc, 4);
  ParameterStore params = net.init_parameters(4);
  testutil::jitter(params, 11);
  const VelocityField field = network_field(net, params);
  const auto conds = goals(8);

  auto run = [&](GuidanceConfig g, std::uint64_t seed) {
    Rng rng(seed);
    return one_step_sample(field, conds, net.config().input_dim(), g, rng).x;
  };
  CHECK(bitwise_equal(run({2, true}, 1), run({2, true}, 1)));
  CHECK_FALSE(bitwise_equal(run({2, true}, 1), run({2, true}, 2)));
  CHECK(bitwise_equal(run({Real(0.5), false}, 1), run({Real(3), false}, 1)));
  CHECK(bitwise_equal(run({1, true}, 1), run({1, false}, 1)));

  // w = 0 reproduces the unconditional branch.
  Rng rng(1);
  const Tensor z = normal_tensor({8, net.config().input_dim()}, rng);
  const std::vector<Condition> nulls(8, Condition::null_condition());
  const Tensor expect = sub(z, field(z, 0, 1, nulls));
  CHECK(bitwise_equal(run({0, true}, 1), expect));
  CHECK_FALSE(bitwise_equal(run({2, true}, 1), run({1, true}, 1)));
}

TEST_CASE("Euler refinement on a trained flow-matching model") {
  NetworkConfig nc;
  nc.cond_dim = 0;
  nc.hidden_dim = 64;
  nc.d_emb = 64;
  nc.n_frequencies = 16;
  nc.fourier_scale = 1;
  TrainConfig tc;
  tc.objective = Objective::kCfm;
  tc.steps = 1500;
  tc.batch_size = 64;
  tc.learning_rate = Real(1e-3);
  tc.p_drop = 0;
  tc.seed = 2;
  Rng data_rng(1);
  const Tensor train_x = gen_2d_dataset(Dataset2D::kTwoGaussians, 4096, data_rng);
  const Tensor test_x = gen_2d_dataset(Dataset2D::kTwoGaussians, 1000, data_rng);
  const VelocityNetwork net = VelocityNetwork::create(nc, tc.seed);
  const TrainResult trained = train(tc, unconditional_dataset(train_x), net);
  const VelocityField field = network_field(net, trained.ema);

  std::vector<Real> ed;
  for (std::size_t n : {2u, 5u, 10u, 50u}) {
    Rng rng(7);
    ed.push_back(energy_distance(euler_sample(field, std::vector<Condition>(1000), 2, n, {1, false}, rng).x, test_x));
  }
  MESSAGE("energy distance for 2/5/10/50 Euler steps: ", ed[0], " ", ed[1], " ", ed[2], " ", ed[3]);
  CHECK(ed[0] > ed[1]);
  CHECK(ed[1] > ed[2]);
  CHECK(ed[2] > ed[3]);
}

TEST_CASE("chunk_discretize") {
  ActionChunk linear = ActionChunk::zeros(4, 2);
  for (std::size_t k = 0; k < 4; ++k) {
    linear.at(k, 0) = Real(k);
    linear.at(k, 1) = Real(2) * Real(k) - 1;
  }
  const TimedSequence same = chunk_discretize(linear, 2, 4);
  CHECK(same.step_seconds == Real(0.5));
  CHECK(same.values.values == linear.values);
  CHECK(same.timestamps == std::vector<Real>{0, Real(0.5), 1, Real(1.5)});

  const TimedSequence fine = chunk_discretize(linear, 2, 8);
  CHECK(fine.step_seconds == Real(0.25));
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(fine.timestamps[k] == Real(k) * Real(0.25));
    CHECK(std::abs(fine.values.at(k, 0) - Real(k) / 2) < 1e-14);
    CHECK(std::abs(fine.values.at(k, 1) - (Real(k) - 1)) < 1e-14);
  }
  CHECK_THROWS_AS(chunk_discretize(linear, 0, 4), PreconditionError);
  CHECK_THROWS_AS(chunk_discretize(linear, 1, 0), PreconditionError);
}

}  // TEST_SUITE
