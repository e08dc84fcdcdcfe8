#include "supplybandit/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

namespace supplybandit {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(const std::string& text, const std::string& where) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw IngestError(where + ": '" + text + "' is not a finite number");
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_row(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size())
      throw IngestError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(table.header.size()) + " columns, got " +
                        std::to_string(cells.size()));
    table.rows.push_back(std::move(cells));
  }
  if (table.header.empty()) throw IngestError(path.string() + ": missing header row");
  return table;
}

bool is_integer(const std::string& s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

void sort_ids(std::vector<std::string>& ids) {
  const bool numeric = std::all_of(ids.begin(), ids.end(), is_integer);
  if (numeric) {
    std::sort(ids.begin(), ids.end(),
              [](const std::string& a, const std::string& b) { return std::stoll(a) < std::stoll(b); });
  } else {
    std::sort(ids.begin(), ids.end());
  }
}

std::map<std::string, std::size_t> index_of(const std::vector<std::string>& ids) {
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.emplace(ids[i], i);
  return out;
}

void write_number(std::ostream& os, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  os.write(buf, ptr - buf);
}

}  // namespace

InteractionDataset load_interactions(const std::filesystem::path& ratings_path,
                                     const std::filesystem::path& features_path) {
  const CsvTable ratings = read_csv(ratings_path);
  const CsvTable features = read_csv(features_path);
  if (ratings.header.size() != 3 || ratings.header[0] != "user_id" ||
      ratings.header[1] != "item_id" || ratings.header[2] != "score")
    throw IngestError(ratings_path.string() + ": header must be user_id,item_id,score");
  if (features.header.size() < 2 || features.header[0] != "user_id")
    throw IngestError(features_path.string() + ": header must be user_id,f1,...,fd");

  InteractionDataset ds;
  {
    std::vector<std::string> users, items;
    for (const auto& row : ratings.rows) {
      users.push_back(row[0]);
      items.push_back(row[1]);
    }
    for (auto* ids : {&users, &items}) {
      sort_ids(*ids);
      ids->erase(std::unique(ids->begin(), ids->end()), ids->end());
    }
    ds.user_ids = std::move(users);
    ds.item_ids = std::move(items);
  }
  if (ds.user_ids.empty()) throw IngestError(ratings_path.string() + ": no rating rows");

  const auto user_index = index_of(ds.user_ids);
  const auto item_index = index_of(ds.item_ids);
  const auto n_users = static_cast<Eigen::Index>(ds.users());
  const auto n_items = static_cast<Eigen::Index>(ds.items());
  ds.ratings = Matrix::Constant(n_users, n_items, std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> seen(ds.users() * ds.items(), false);
  for (std::size_t r = 0; r < ratings.rows.size(); ++r) {
    const auto& row = ratings.rows[r];
    const std::size_t u = user_index.at(row[0]);
    const std::size_t i = item_index.at(row[1]);
    const std::string where = ratings_path.string() + " row " + std::to_string(r + 1);
    if (seen[u * ds.items() + i])
      throw IngestError(where + ": duplicate pair (" + row[0] + "," + row[1] + ")");
    seen[u * ds.items() + i] = true;
    ds.ratings(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(i)) = parse_number(row[2], where);
  }
  for (std::size_t u = 0; u < ds.users(); ++u)
    for (std::size_t i = 0; i < ds.items(); ++i)
      if (!seen[u * ds.items() + i])
        throw IngestError("missing pair (" + ds.user_ids[u] + "," + ds.item_ids[i] +
                          "): the interaction matrix must be dense");

  const auto dim = static_cast<Eigen::Index>(features.header.size() - 1);
  ds.features = Matrix::Zero(n_users, dim);
  std::vector<bool> has_features(ds.users(), false);
  for (std::size_t r = 0; r < features.rows.size(); ++r) {
    const auto& row = features.rows[r];
    const auto it = user_index.find(row[0]);
    if (it == user_index.end())
      throw IngestError(features_path.string() + ": user_id " + row[0] +
                        " has features but no ratings");
    if (has_features[it->second])
      throw IngestError(features_path.string() + ": duplicate features for user_id " + row[0]);
    has_features[it->second] = true;
    const std::string where = features_path.string() + " row " + std::to_string(r + 1);
    for (Eigen::Index c = 0; c < dim; ++c)
      ds.features(static_cast<Eigen::Index>(it->second), c) =
          parse_number(row[static_cast<std::size_t>(c) + 1], where);
  }
  for (std::size_t u = 0; u < ds.users(); ++u)
    if (!has_features[u])
      throw IngestError(features_path.string() + ": user_id " + ds.user_ids[u] +
                        " has ratings but no features");
  return ds;
}

void write_interactions(const InteractionDataset& ds, const std::filesystem::path& ratings_path,
                        const std::filesystem::path& features_path) {
  std::ofstream ratings(ratings_path);
  std::ofstream features(features_path);
  if (!ratings || !features) throw IngestError("cannot open interaction output files");
  ratings << "user_id,item_id,score\n";
  for (std::size_t u = 0; u < ds.users(); ++u) {
    for (std::size_t i = 0; i < ds.items(); ++i) {
      ratings << ds.user_ids[u] << ',' << ds.item_ids[i] << ',';
      write_number(ratings, ds.ratings(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(i)));
      ratings << '\n';
    }
  }
  features << "user_id";
  for (Eigen::Index c = 0; c < ds.features.cols(); ++c) features << ",f" << c + 1;
  features << '\n';
  for (std::size_t u = 0; u < ds.users(); ++u) {
    features << ds.user_ids[u];
    for (Eigen::Index c = 0; c < ds.features.cols(); ++c) {
      features << ',';
      write_number(features, ds.features(static_cast<Eigen::Index>(u), c));
    }
    features << '\n';
  }
}

InteractionDataset subsample(const InteractionDataset& ds, std::size_t n_users,
                             std::size_t n_items, Rng& rng) {
  if (n_users > ds.users() || n_items > ds.items())
    throw std::invalid_argument("subsample larger than the dataset (" + std::to_string(ds.users()) +
                                " users x " + std::to_string(ds.items()) + " items)");
  if (n_users == 0 || n_items == 0) throw std::invalid_argument("subsample must be non-empty");
  auto draw = [&rng](std::size_t total, std::size_t n) {
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(n);
    return idx;
  };
  const auto rows = draw(ds.users(), n_users);
  const auto cols = draw(ds.items(), n_items);

  InteractionDataset out;
  out.ratings.resize(static_cast<Eigen::Index>(n_users), static_cast<Eigen::Index>(n_items));
  out.features.resize(static_cast<Eigen::Index>(n_users), ds.features.cols());
  for (std::size_t r = 0; r < n_users; ++r) {
    out.user_ids.push_back(ds.user_ids[rows[r]]);
    out.features.row(static_cast<Eigen::Index>(r)) = ds.features.row(static_cast<Eigen::Index>(rows[r]));
    for (std::size_t c = 0; c < n_items; ++c)
      out.ratings(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          ds.ratings(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(cols[c]));
  }
  for (auto c : cols) out.item_ids.push_back(ds.item_ids[c]);
  return out;
}

double rating_shift(const InteractionDataset& ds) {
  const double low = ds.ratings.minCoeff();
  return low < 0.0 ? -low : 0.0;
}

RewardModel to_reward_model(const InteractionDataset& ds) {
  const double shift = rating_shift(ds);
  if (shift > 0.0)
    std::clog << "supplybandit: shifting interaction scores by +" << shift
              << " to make rewards nonnegative\n";
  Matrix q_r = ds.ratings.array() + shift;
  Matrix q_c = Matrix::Ones(q_r.rows(), q_r.cols());
  return RewardModel(std::move(q_c), std::move(q_r));
}

UserPopulation to_population(const InteractionDataset& ds) {
  return UserPopulation::uniform(ds.features);
}

}  // namespace supplybandit
