#include "doctest.h"

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "supplybandit/reward.hpp"

using namespace supplybandit;

namespace {

UserPopulation random_population(std::size_t users, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix x(static_cast<Eigen::Index>(users), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  return UserPopulation::uniform(std::move(x));
}

bool rows_non_increasing(const Matrix& m) {
  for (Eigen::Index j = 0; j < m.rows(); ++j)
    for (Eigen::Index k = 0; k + 1 < m.cols(); ++k)
      if (m(j, k) < m(j, k + 1)) return false;
  return true;
}

}  // namespace

TEST_CASE("mix_components endpoints and linearity") {
  Rng rng(1);
  const Matrix f = Matrix::Random(4, 3);
  const Matrix g = Matrix::Random(4, 3);
  CHECK(mix_components(f, g, 0.0) == g);
  CHECK(mix_components(f, g, 1.0) == f);
  CHECK(mix_components(Matrix::Zero(4, 3), g, 0.5).isApprox(0.5 * g));
  const Matrix lhs = mix_components(f, g, 0.2) + mix_components(f, g, 0.6);
  CHECK(lhs.isApprox(2.0 * mix_components(f, g, 0.4), 1e-12));
  CHECK_THROWS(mix_components(f, g, 1.5));
  CHECK_THROWS(mix_components(f, Matrix::Zero(3, 3), 0.5));
}

TEST_CASE("sorted baseline") {
  Rng rng(11);
  const Matrix g = sorted_baseline(rng, 1000, 100, 2.5);
  CHECK(rows_non_increasing(g));
  CHECK(g.minCoeff() >= 0.0);
  CHECK(g.maxCoeff() <= 2.5);
  std::vector<double> samples(g.data(), g.data() + g.size());
  // 1% critical value of the KS statistic is about 1.63 / sqrt(n).
  CHECK(oracle_ref::ks_uniform(samples, 2.5) < 1.63 / std::sqrt(static_cast<double>(samples.size())));
  CHECK(sorted_baseline(rng, 3, 4, 0.0) == Matrix::Zero(3, 4));
}

TEST_CASE("feature rewards") {
  const auto pop = random_population(30, 5, 3);
  Rng a(42), b(42);
  const Matrix logistic = synth_feature_reward(pop, 8, a, FeatureRewardKind::logistic);
  CHECK(logistic.minCoeff() > 0.0);
  CHECK(logistic.maxCoeff() < 1.0);
  CHECK(synth_feature_reward(pop, 8, b, FeatureRewardKind::logistic) == logistic);

  Rng c(5);
  const Matrix linear = synth_feature_reward(pop, 8, c, FeatureRewardKind::linear);
  CHECK(linear.minCoeff() >= 0.0);

  Matrix twin = pop.features();
  twin.row(1) = twin.row(0);
  const auto twins = UserPopulation::uniform(twin);
  Rng d(9);
  const Matrix r = synth_feature_reward(twins, 6, d, FeatureRewardKind::linear);
  CHECK(r.row(0) == r.row(1));
}

TEST_CASE("synthetic model") {
  const auto pop = random_population(40, 10, 8);
  Rng rng(2);
  const auto shared = make_synthetic_model(pop, 12, 0.0, rng);
  CHECK(rows_non_increasing(shared.reward()));
  CHECK(rows_non_increasing(shared.product()));
  CHECK(shared.consumption().minCoeff() >= 0.0);
  CHECK(shared.consumption().maxCoeff() <= 1.0);
  for (double lambda : {0.25, 0.5, 1.0}) {
    Rng r(3);
    const auto m = make_synthetic_model(pop, 12, lambda, r);
    CHECK(m.product().isApprox(m.consumption().cwiseProduct(m.reward())));
    CHECK(m.reward().minCoeff() >= 0.0);
  }
}

TEST_CASE("reward model validation") {
  CHECK_THROWS(RewardModel(Matrix::Ones(2, 2), Matrix::Ones(2, 3)));
  CHECK_THROWS(RewardModel(Matrix::Ones(2, 2), -Matrix::Ones(2, 2)));
  Matrix c(1, 2);
  c << 1.4, -0.2;
  const RewardModel m(c, Matrix::Constant(1, 2, 2.0));
  CHECK(m.consumption()(0, 0) == 1.0);
  CHECK(m.consumption()(0, 1) == 0.0);
  CHECK(m.product()(0, 0) == 2.0);
  const std::vector<double> w{1.0};
  CHECK(m.expected_product(w)(0) == 2.0);
}

TEST_CASE("noisy estimate") {
  Rng rng(4);
  const RewardModel model(Matrix::Ones(400, 250), Matrix::Random(400, 250).cwiseAbs());
  const auto exact = noisy_estimate(model, 0.0, rng);
  CHECK(exact.q_hat == model.product());

  const auto noisy = noisy_estimate(model, 3.0, rng);
  const double mad = (noisy.q_hat - model.product()).cwiseAbs().mean();
  const double expected = 3.0 * std::sqrt(2.0 / std::numbers::pi);
  CHECK(std::abs(mad - expected) / expected < 0.02);

  Rng r1(1), r2(2);
  CHECK(noisy_estimate(model, 1.0, r1).q_hat != noisy_estimate(model, 1.0, r2).q_hat);
  CHECK(exact_estimate(model).q_hat == model.product());
}

TEST_CASE("ridge recovers an exactly linear surface") {
  const auto pop = random_population(60, 3, 21);
  const std::size_t k = 4;
  Rng rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix w(3, static_cast<Eigen::Index>(k));
  Vector b(static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = n(rng);
  for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = n(rng);
  const Matrix q = (pop.features() * w).rowwise() + b.transpose();

  Trajectory traj;
  std::size_t t = 1;
  for (std::size_t u = 0; u < pop.size(); ++u)
    for (std::size_t a = 0; a + 1 < k; ++a)  // the last action is never logged
      traj.tuples.push_back({t++, u, a, true, q(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(a)),
                             InventoryState::uniform(k, 1000)});
  const std::vector<Trajectory> data{traj};

  const auto fit = ridge_fit(data, pop, k, 1e-8, RidgeTarget::product);
  const Matrix diff = fit.q_hat.leftCols(3) - q.leftCols(3);
  CHECK(std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size())) < 1e-4);

  double total = 0.0;
  for (const auto& tup : traj.tuples) total += tup.reward;
  const double global = total / static_cast<double>(traj.tuples.size());
  CHECK(fit.q_hat.col(3).isApproxToConstant(global, 1e-12));

  const auto flat = ridge_fit(data, pop, k, 1e12, RidgeTarget::product);
  for (Eigen::Index a = 0; a < 3; ++a)
    CHECK((flat.q_hat.col(a).array() - q.col(a).mean()).abs().maxCoeff() < 1e-6);

  CHECK_THROWS(ridge_fit(data, pop, k, 0.0, RidgeTarget::product));
}

TEST_CASE("ridge targets") {
  const auto pop = UserPopulation::uniform(Matrix::Zero(1, 1));
  Trajectory traj;
  traj.tuples.push_back({1, 0, 0, true, 4.0, InventoryState::uniform(1, 5)});
  traj.tuples.push_back({2, 0, 0, false, 2.0, InventoryState::uniform(1, 4)});
  const std::vector<Trajectory> data{traj};
  CHECK(ridge_fit(data, pop, 1, 1.0, RidgeTarget::product).q_hat(0, 0) == doctest::Approx(2.0));
  CHECK(ridge_fit(data, pop, 1, 1.0, RidgeTarget::reward).q_hat(0, 0) == doctest::Approx(3.0));
}
