#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <map>

#include <unistd.h>

#include "supplybandit/ingest.hpp"

using namespace supplybandit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("supplybandit_ingest_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

std::string error_of(const fs::path& ratings, const fs::path& features) {
  try {
    load_interactions(ratings, features);
  } catch (const IngestError& e) {
    return e.what();
  }
  return {};
}

InteractionDataset sample_dataset(const TempDir& dir) {
  std::string ratings = "user_id,item_id,score\n";
  std::string features = "user_id,f1,f2\n";
  for (int u = 0; u < 6; ++u) {
    features += std::to_string(u) + "," + std::to_string(u * 0.5) + "," + std::to_string(-u) + "\n";
    for (int i = 0; i < 5; ++i)
      ratings += std::to_string(u) + "," + std::to_string(100 + i) + "," + std::to_string(u * 10 + i) + "\n";
  }
  return load_interactions(dir.write("r.csv", ratings), dir.write("f.csv", features));
}

}  // namespace

TEST_CASE("dense assembly in sorted id order") {
  TempDir dir;
  const auto r = dir.write("r.csv", "user_id,item_id,score\n10,b,4\n2,a,1\n2,b,2\n10,a,3\n");
  const auto f = dir.write("f.csv", "user_id,f1\n10,0.5\n2,-1\n");
  const auto ds = load_interactions(r, f);
  CHECK(ds.user_ids == std::vector<std::string>{"2", "10"});
  CHECK(ds.item_ids == std::vector<std::string>{"a", "b"});
  Matrix expected(2, 2);
  expected << 1, 2,
              3, 4;
  CHECK(ds.ratings == expected);
  CHECK(ds.features(0, 0) == -1.0);
  CHECK(ds.features(1, 0) == 0.5);
}

TEST_CASE("malformed inputs") {
  TempDir dir;
  const auto f = dir.write("f.csv", "user_id,f1\n1,0\n2,0\n");
  const auto missing = error_of(dir.write("m.csv", "user_id,item_id,score\n1,a,1\n1,b,1\n2,a,1\n"), f);
  CHECK(missing.find("missing pair (2,b)") != std::string::npos);

  const auto dup = error_of(dir.write("d.csv", "user_id,item_id,score\n1,a,1\n1,a,2\n2,a,1\n"), f);
  CHECK(dup.find("duplicate") != std::string::npos);

  const auto text = error_of(dir.write("t.csv", "user_id,item_id,score\n1,a,high\n2,a,1\n"), f);
  CHECK(text.find("not a finite number") != std::string::npos);

  const auto header = error_of(dir.write("h.csv", "user,item,score\n1,a,1\n"), f);
  CHECK(header.find("header") != std::string::npos);

  const auto ok = dir.write("ok.csv", "user_id,item_id,score\n1,a,1\n2,a,1\n");
  CHECK(error_of(ok, dir.write("g.csv", "user_id,f1\n1,0\n")).find("no features") != std::string::npos);
  CHECK(error_of(ok, dir.write("o.csv", "user_id,f1\n1,0\n2,0\n3,0\n")).find("no ratings") != std::string::npos);
  CHECK(error_of(ok, dir.path / "absent.csv").find("cannot open") != std::string::npos);
}

TEST_CASE("round trip") {
  TempDir dir;
  const auto ds = sample_dataset(dir);
  write_interactions(ds, dir.path / "r2.csv", dir.path / "f2.csv");
  const auto again = load_interactions(dir.path / "r2.csv", dir.path / "f2.csv");
  CHECK(again.ratings == ds.ratings);
  CHECK(again.features == ds.features);
  CHECK(again.user_ids == ds.user_ids);
  CHECK(again.item_ids == ds.item_ids);
}

TEST_CASE("subsample") {
  TempDir dir;
  const auto ds = sample_dataset(dir);
  Rng rng(1);
  const auto full = subsample(ds, 6, 5, rng);
  std::vector<double> a(ds.ratings.data(), ds.ratings.data() + ds.ratings.size());
  std::vector<double> b(full.ratings.data(), full.ratings.data() + full.ratings.size());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);

  Rng r1(7), r2(7);
  const auto s1 = subsample(ds, 3, 2, r1);
  const auto s2 = subsample(ds, 3, 2, r2);
  CHECK(s1.ratings == s2.ratings);
  CHECK(s1.user_ids == s2.user_ids);

  std::map<std::string, Eigen::Index> user_row, item_col;
  for (std::size_t i = 0; i < ds.users(); ++i) user_row[ds.user_ids[i]] = static_cast<Eigen::Index>(i);
  for (std::size_t i = 0; i < ds.items(); ++i) item_col[ds.item_ids[i]] = static_cast<Eigen::Index>(i);
  for (std::size_t u = 0; u < s1.users(); ++u) {
    CHECK(s1.features.row(static_cast<Eigen::Index>(u)) == ds.features.row(user_row[s1.user_ids[u]]));
    for (std::size_t i = 0; i < s1.items(); ++i)
      CHECK(s1.ratings(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(i)) ==
            ds.ratings(user_row[s1.user_ids[u]], item_col[s1.item_ids[i]]));
  }
  CHECK_THROWS(subsample(ds, 7, 2, rng));
}

TEST_CASE("reward model from interactions") {
  TempDir dir;
  const auto ds = sample_dataset(dir);
  const auto model = to_reward_model(ds);
  CHECK(model.reward() == ds.ratings);
  CHECK(model.consumption() == Matrix::Ones(6, 5));
  CHECK(model.product() == model.consumption().cwiseProduct(model.reward()));
  CHECK(to_population(ds).size() == 6);

  auto shifted = ds;
  shifted.ratings(2, 3) = -0.5;
  CHECK(rating_shift(shifted) == 0.5);
  const auto m2 = to_reward_model(shifted);
  CHECK(m2.reward() == (shifted.ratings.array() + 0.5).matrix());
  CHECK(m2.reward().minCoeff() == 0.0);
}
