#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include "ddavs/bank/bank.hpp"
#include "ddavs/bank/kmeans.hpp"
#include "ddavs/error.hpp"

using namespace ddavs;
using namespace ddavs::bank;
using ddavs::nd::Array;

namespace {

Array gaussian(std::size_t n, std::size_t d, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Array a({n, d});
  for (double& v : a.values()) v = g(rng);
  return a;
}

// Class c: three modes spread around a class centre far from the others.
std::vector<EmbeddingSet> clustered_sets(std::size_t classes, std::size_t per_class, std::size_t d,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<EmbeddingSet> sets;
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double> centre(d);
    for (double& v : centre) v = 8.0 * g(rng);
    std::vector<std::vector<double>> modes(3, std::vector<double>(d));
    for (auto& m : modes)
      for (std::size_t t = 0; t < d; ++t) m[t] = centre[t] + 1.5 * g(rng);
    Array e({per_class, d});
    for (std::size_t i = 0; i < per_class; ++i)
      for (std::size_t t = 0; t < d; ++t) e(i, t) = modes[i % 3][t] + 0.2 * g(rng);
    sets.push_back({c, std::move(e)});
  }
  return sets;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << s;
}

PrototypeBank random_bank(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PrototypeBank b;
  b.classes = 3;
  b.per_class_counts = {2, 4, 1};
  for (std::uint32_t c = 0; c < 3; ++c) b.class_of.insert(b.class_of.end(), b.per_class_counts[c], c);
  b.prototypes = gaussian(7, 5, rng);
  return b;
}

}  // namespace

TEST(KMeans, KEqualsNRecoversPoints) {
  std::mt19937_64 rng(1);
  const Array x = gaussian(6, 3, rng);
  const KMeansResult r = kmeans_pp(x, 6, 42);
  EXPECT_EQ(r.inertia, 0.0);
  std::vector<bool> matched(6, false);
  for (std::size_t j = 0; j < 6; ++j) {
    bool found = false;
    for (std::size_t i = 0; i < 6 && !found; ++i) {
      if (!matched[i] && squared_distance(r.centroids.data() + j * 3, x.data() + i * 3, 3) == 0.0) {
        matched[i] = found = true;
      }
    }
    EXPECT_TRUE(found) << "centroid " << j;
  }
}

TEST(KMeans, SeparatesTwoBlobs) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 0.1);
  Array x({200, 2});
  for (std::size_t i = 0; i < 200; ++i) {
    const double c = i < 100 ? 0.0 : 10.0;
    x(i, 0) = c + g(rng);
    x(i, 1) = c + g(rng);
  }
  const KMeansResult r = kmeans_pp(x, 2, 7);
  for (double centre : {0.0, 10.0}) {
    double best = 1e300;
    for (std::size_t j = 0; j < 2; ++j) {
      best = std::min(best, std::hypot(r.centroids(j, 0) - centre, r.centroids(j, 1) - centre));
    }
    EXPECT_LT(best, 0.1);
  }
}

TEST(KMeans, SingleClusterIsGlobalMean) {
  std::mt19937_64 rng(3);
  const Array x = gaussian(17, 4, rng);
  const KMeansResult r = kmeans_pp(x, 1, 0);
  for (std::size_t t = 0; t < 4; ++t) {
    double s = 0.0;
    for (std::size_t i = 0; i < 17; ++i) s += x(i, t);
    EXPECT_EQ(r.centroids(0, t), s / 17.0);
  }
}

TEST(KMeans, InertiaNeverIncreases) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    std::mt19937_64 rng(seed);
    const Array x = gaussian(60, 3, rng);
    const KMeansResult r = kmeans_pp(x, 5, seed, 50, 1e-12);
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
      EXPECT_LE(r.inertia_history[i], r.inertia_history[i - 1] * (1.0 + 1e-12));
    }
    EXPECT_LE(r.inertia, r.inertia_history.back() * (1.0 + 1e-12));
    std::vector<std::size_t> count(5, 0);
    for (std::size_t a : r.assignments) ++count[a];
    for (std::size_t c : count) EXPECT_GT(c, 0u);
  }
}

TEST(KMeans, DuplicatePointsStillFillEveryCluster) {
  Array x({6, 2}, {1, 1, 1, 1, 1, 1, 1, 1, 5, 5, 5, 5});
  const KMeansResult r = kmeans_pp(x, 3, 4);
  std::vector<std::size_t> count(3, 0);
  for (std::size_t a : r.assignments) ++count[a];
  EXPECT_EQ(std::count(count.begin(), count.end(), 0u), 0);
}

TEST(KMeans, DeterministicAndValidated) {
  std::mt19937_64 rng(4);
  const Array x = gaussian(30, 2, rng);
  const KMeansResult a = kmeans_pp(x, 3, 9), b = kmeans_pp(x, 3, 9);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_THROW(kmeans_pp(x, 31, 0), InsufficientDataError);
  EXPECT_THROW(kmeans_pp(x, 0, 0), ParameterError);
  EXPECT_THROW(kmeans_pp(x, 2, 0, 10, 0.0), ParameterError);
}

TEST(Bank, CountsRows) {
  const auto sets = clustered_sets(4, 30, 8, 1);
  const PrototypeBank b = build_bank(sets, {.k_per_class = 2, .m_nearest = 3});
  EXPECT_EQ(b.size(), 24u);
  EXPECT_EQ(b.classes, 4u);
  EXPECT_EQ(b.per_class_counts, (std::vector<std::uint32_t>{6, 6, 6, 6}));
  for (std::size_t r = 0; r < 24; ++r) EXPECT_EQ(b.class_of[r], r / 6);
  EXPECT_NO_THROW(b.validate());
}

TEST(Bank, SingletonClustersKeepTheirPoints) {
  std::mt19937_64 rng(5);
  std::vector<EmbeddingSet> sets{{0, gaussian(3, 4, rng)}, {1, gaussian(3, 4, rng)}};
  const PrototypeBank b = build_bank(sets, {.k_per_class = 3, .m_nearest = 1});
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < 3; ++i) {
      bool found = false;
      for (std::size_t r = 3 * c; r < 3 * c + 3; ++r) {
        found |= squared_distance(b.prototypes.data() + r * 4, sets[c].embeddings.data() + i * 4, 4) == 0.0;
      }
      EXPECT_TRUE(found);
    }
  }
}

TEST(Bank, RowsAreNearestToOwnClassMean) {
  const auto sets = clustered_sets(4, 40, 16, 6);
  const PrototypeBank b = build_bank(sets);
  const std::size_t d = 16;
  std::vector<std::vector<double>> means(4, std::vector<double>(d, 0.0));
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < 40; ++i)
      for (std::size_t t = 0; t < d; ++t) means[c][t] += sets[c].embeddings(i, t) / 40.0;
  for (std::size_t r = 0; r < b.size(); ++r) {
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t c = 0; c < 4; ++c) {
      const double dd = squared_distance(b.prototypes.data() + r * d, means[c].data(), d);
      if (dd < best_d) best_d = dd, best = c;
    }
    EXPECT_EQ(best, b.class_of[r]) << "row " << r;
  }
}

TEST(Bank, RowsAreRealEmbeddingsOrderedByDistance) {
  const auto sets = clustered_sets(2, 30, 6, 7);
  const PrototypeBank b = build_bank(sets, {.k_per_class = 3, .m_nearest = 3});
  for (std::size_t r = 0; r < b.size(); ++r) {
    const auto& e = sets[b.class_of[r]].embeddings;
    bool found = false;
    for (std::size_t i = 0; i < e.rows(); ++i) {
      found |= squared_distance(b.prototypes.data() + r * 6, e.data() + i * 6, 6) == 0.0;
    }
    EXPECT_TRUE(found);
  }
  const PrototypeBank cent = build_bank(sets, {.k_per_class = 3, .m_nearest = 3, .centroid_rows = true});
  EXPECT_EQ(cent.size(), 6u);
  const KMeansResult km = kmeans_pp(sets[0].embeddings, 3, 0);
  for (std::size_t j = 0; j < 3; ++j) {
    std::vector<double> dist;
    for (std::size_t m = 0; m < 3; ++m) {
      dist.push_back(squared_distance(b.prototypes.data() + (3 * j + m) * 6, km.centroids.data() + j * 6, 6));
    }
    EXPECT_TRUE(std::is_sorted(dist.begin(), dist.end()));
    for (std::size_t t = 0; t < 6; ++t) EXPECT_EQ(cent.prototypes(j, t), km.centroids(j, t));
  }
}

TEST(Bank, DeterministicAndNamesShortClass) {
  auto sets = clustered_sets(3, 20, 4, 8);
  EXPECT_EQ(build_bank(sets, {.seed = 5}), build_bank(sets, {.seed = 5}));
  sets[2].embeddings = Array({3, 4}, 0.5);
  try {
    build_bank(sets);
    FAIL() << "expected InsufficientDataError";
  } catch (const InsufficientDataError& e) {
    EXPECT_NE(std::string(e.what()).find("class 2"), std::string::npos) << e.what();
  }
}

TEST(BankFile, RoundTripIsBitExact) {
  const auto path = temp_file("ddavs_bank_rt.davb");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PrototypeBank b = random_bank(seed);
    const std::size_t bytes = save_bank(b, path);
    EXPECT_EQ(bytes, 4 + 4 * 3 + 4 * 3 + 7 * 5 * 8u);
    const PrototypeBank back = load_bank(path);
    EXPECT_EQ(back, b);
    EXPECT_EQ(std::memcmp(back.prototypes.data(), b.prototypes.data(), 35 * sizeof(double)), 0);
  }
  std::filesystem::remove(path);
}

TEST(BankFile, DistinctDecodeErrors) {
  const auto path = temp_file("ddavs_bank_bad.davb");
  save_bank(random_bank(1), path);
  const std::string good = slurp(path);
  auto kind_of = [&](const std::string& bytes) {
    spit(path, bytes);
    try {
      load_bank(path);
    } catch (const DecodeError& e) {
      return std::pair{e.kind(), std::string(e.what())};
    }
    return std::pair{DecodeError::Kind::Malformed, std::string("loaded")};
  };
  auto [k1, m1] = kind_of(good.substr(0, good.size() - 1));
  EXPECT_EQ(k1, DecodeError::Kind::Truncated) << m1;
  std::string flipped = good;
  flipped[4] = 7;
  auto [k2, m2] = kind_of(flipped);
  EXPECT_EQ(k2, DecodeError::Kind::VersionMismatch);
  EXPECT_NE(m2.find("version 7"), std::string::npos) << m2;
  EXPECT_NE(m2.find("version 1"), std::string::npos) << m2;
  std::string magic = good;
  magic[0] = 'X';
  EXPECT_EQ(kind_of(magic).first, DecodeError::Kind::BadMagic);
  EXPECT_EQ(kind_of(good + "x").first, DecodeError::Kind::Malformed);
  EXPECT_EQ(kind_of("DA").first, DecodeError::Kind::BadMagic);
  std::filesystem::remove(path);
}

TEST(EmbeddingFile, TextRoundTripIsExact) {
  std::mt19937_64 rng(9);
  const Array e = gaussian(5, 7, rng);
  const auto path = temp_file("ddavs_emb.txt");
  write_embeddings(e, path);
  EXPECT_EQ(read_embeddings(path), e);
  spit(path, "1 2 3\n4 5\n");
  EXPECT_THROW(read_embeddings(path), DecodeError);
  spit(path, "1 2 x\n");
  EXPECT_THROW(read_embeddings(path), DecodeError);
  std::filesystem::remove(path);
}
