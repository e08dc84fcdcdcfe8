#include "supplybandit/reward.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace supplybandit {

RewardModel::RewardModel(Matrix consumption, Matrix reward)
    : consumption_(std::move(consumption)), reward_(std::move(reward)) {
  if (consumption_.rows() != reward_.rows() || consumption_.cols() != reward_.cols())
    throw std::invalid_argument("q_c and q_r must have the same shape");
  if (consumption_.size() == 0) throw std::invalid_argument("reward model must be non-empty");
  if (!consumption_.allFinite() || !reward_.allFinite())
    throw std::invalid_argument("reward model entries must be finite");
  if ((reward_.array() < 0.0).any()) throw std::invalid_argument("q_r entries must be >= 0");
  consumption_ = consumption_.cwiseMax(0.0).cwiseMin(1.0);
  product_ = consumption_.cwiseProduct(reward_);
}

Vector RewardModel::expected_product(std::span<const double> weights) const {
  if (weights.size() != users()) throw std::invalid_argument("weights must have one entry per user");
  const Eigen::Map<const Vector> p(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return product_.transpose() * p;
}

std::string to_string(EstimateSource s) {
  switch (s) {
    case EstimateSource::exact: return "exact";
    case EstimateSource::noise: return "noise";
    case EstimateSource::ridge: return "ridge";
  }
  return "unknown";
}

Matrix mix_components(const Matrix& f, const Matrix& g, double lambda) {
  if (f.rows() != g.rows() || f.cols() != g.cols())
    throw std::invalid_argument("mix_components: shape mismatch");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("mix_components: lambda must lie in [0, 1]");
  if (lambda == 0.0) return g;
  if (lambda == 1.0) return f;
  return lambda * f + (1.0 - lambda) * g;
}

Matrix sorted_baseline(Rng& rng, std::size_t users, std::size_t actions, double max_value) {
  if (max_value < 0.0) throw std::invalid_argument("sorted_baseline: max_value must be >= 0");
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(users), static_cast<Eigen::Index>(actions));
  if (max_value == 0.0) return out;
  std::uniform_real_distribution<double> unif(0.0, max_value);
  std::vector<double> row(actions);
  for (std::size_t j = 0; j < users; ++j) {
    for (auto& v : row) v = unif(rng);
    std::sort(row.begin(), row.end(), std::greater<>());
    for (std::size_t a = 0; a < actions; ++a)
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a)) = row[a];
  }
  return out;
}

Matrix synth_feature_reward(const UserPopulation& users, std::size_t actions, Rng& rng,
                            FeatureRewardKind kind) {
  const auto d = static_cast<Eigen::Index>(users.dim());
  const auto k = static_cast<Eigen::Index>(actions);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix coef(d, k);
  Vector intercept(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index i = 0; i < d; ++i) coef(i, a) = normal(rng);
    intercept(a) = normal(rng);
  }
  Matrix score = users.features() * coef;
  score.rowwise() += intercept.transpose();
  if (kind == FeatureRewardKind::logistic)
    return score.unaryExpr([](double s) { return 1.0 / (1.0 + std::exp(-s)); });
  return score.array() - score.minCoeff();
}

RewardModel make_synthetic_model(const UserPopulation& users, std::size_t actions,
                                 double lambda, Rng& rng) {
  Matrix f_c = synth_feature_reward(users, actions, rng, FeatureRewardKind::logistic);
  Matrix f_r = synth_feature_reward(users, actions, rng, FeatureRewardKind::linear);
  Matrix g_c = sorted_baseline(rng, users.size(), actions, f_c.maxCoeff());
  Matrix g_r = sorted_baseline(rng, users.size(), actions, f_r.maxCoeff());
  return RewardModel(mix_components(f_c, g_c, lambda), mix_components(f_r, g_r, lambda));
}

RewardEstimate exact_estimate(const RewardModel& model) {
  return RewardEstimate{model.product(), EstimateSource::exact, 0.0};
}

RewardEstimate noisy_estimate(const RewardModel& model, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  RewardEstimate est{model.product(), EstimateSource::noise, sigma};
  if (sigma == 0.0) return est;
  std::normal_distribution<double> noise(0.0, sigma);
  for (Eigen::Index a = 0; a < est.q_hat.cols(); ++a)
    for (Eigen::Index j = 0; j < est.q_hat.rows(); ++j) est.q_hat(j, a) += noise(rng);
  return est;
}

RewardEstimate ridge_fit(std::span<const Trajectory> dataset, const UserPopulation& users,
                         std::size_t actions, double penalty, RidgeTarget target) {
  if (!(penalty > 0.0)) throw std::invalid_argument("ridge penalty must be > 0");
  const auto d = static_cast<Eigen::Index>(users.dim());
  const Matrix& x = users.features();

  // Bucket observations per action.
  std::vector<std::vector<std::pair<UserIndex, double>>> obs(actions);
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& traj : dataset) {
    for (const auto& tup : traj.tuples) {
      if (tup.action >= actions || tup.user >= users.size())
        throw std::invalid_argument("logged tuple references an unknown user or action");
      const double y = target == RidgeTarget::product ? (tup.consumed ? tup.reward : 0.0)
                                                      : tup.reward;
      obs[tup.action].emplace_back(tup.user, y);
      total += y;
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("ridge_fit needs a non-empty dataset");
  const double global_mean = total / static_cast<double>(count);

  RewardEstimate est{Matrix(x.rows(), static_cast<Eigen::Index>(actions)), EstimateSource::ridge,
                     penalty};
  for (std::size_t a = 0; a < actions; ++a) {
    const auto& rows = obs[a];
    const auto col = static_cast<Eigen::Index>(a);
    if (rows.empty()) {
      est.q_hat.col(col).setConstant(global_mean);
      continue;
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    Matrix design(n, d);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      design.row(i) = x.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].first));
      y(i) = rows[static_cast<std::size_t>(i)].second;
    }
    // Centering keeps the intercept out of the penalty.
    const Vector x_mean = design.colwise().mean();
    const double y_mean = y.mean();
    design.rowwise() -= x_mean.transpose();
    y.array() -= y_mean;
    Matrix gram = design.transpose() * design;
    gram.diagonal().array() += penalty;
    const Vector w = gram.ldlt().solve(design.transpose() * y);
    const double b = y_mean - x_mean.dot(w);
    est.q_hat.col(col) = (x * w).array() + b;
  }
  return est;
}

}  // namespace supplybandit
