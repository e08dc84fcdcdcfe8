#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "supplybandit/core.hpp"
#include "supplybandit/reward.hpp"

namespace supplybandit {

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense user x item interaction scores with per-user features.
struct InteractionDataset {
  Matrix ratings;   // J x K
  Matrix features;  // J x d
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;

  std::size_t users() const { return user_ids.size(); }
  std::size_t items() const { return item_ids.size(); }
};

/// Reads `user_id,item_id,score` and `user_id,f1..fd` CSV files (header row
/// required). Rows and columns come out in sorted id order; ids sort
/// numerically when they are all integers. Every (user, item) pair must be
/// present exactly once and every user must appear in both files.
InteractionDataset load_interactions(const std::filesystem::path& ratings_path,
                                     const std::filesystem::path& features_path);

/// Writes the two files in the format load_interactions reads.
void write_interactions(const InteractionDataset& ds, const std::filesystem::path& ratings_path,
                        const std::filesystem::path& features_path);

/// Uniform sample without replacement of `n_users` rows and `n_items` columns.
InteractionDataset subsample(const InteractionDataset& ds, std::size_t n_users,
                             std::size_t n_items, Rng& rng);

/// q_c = 1 everywhere, q_r = ratings (shifted up by -min when any score is
/// negative).
RewardModel to_reward_model(const InteractionDataset& ds);

/// Shift applied by to_reward_model (0 when all scores are nonnegative).
double rating_shift(const InteractionDataset& ds);

UserPopulation to_population(const InteractionDataset& ds);

}  // namespace supplybandit
