#include "ddavs/bank/bank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "../io/bytes.hpp"
#include "ddavs/bank/kmeans.hpp"
#include "ddavs/error.hpp"

namespace ddavs::bank {

namespace {
constexpr std::string_view kMagic = "DAVB";
}

void PrototypeBank::validate() const {
  if (per_class_counts.size() != classes) {
    throw ParameterError("bank lists " + std::to_string(per_class_counts.size()) +
                         " class counts for " + std::to_string(classes) + " classes");
  }
  const std::size_t total =
      std::accumulate(per_class_counts.begin(), per_class_counts.end(), std::size_t{0});
  if (total != prototypes.rows() || class_of.size() != prototypes.rows()) {
    throw ParameterError("bank has " + std::to_string(prototypes.rows()) + " rows but counts sum to " +
                         std::to_string(total));
  }
  std::size_t row = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::uint32_t i = 0; i < per_class_counts[c]; ++i, ++row) {
      if (class_of[row] != c) throw ParameterError("bank row " + std::to_string(row) + " is mis-tagged");
    }
  }
  if (!prototypes.all_finite()) throw ParameterError("bank holds non-finite prototypes");
}

PrototypeBank build_bank(std::span<const EmbeddingSet> sets, const BankOptions& opts) {
  if (sets.empty()) throw ParameterError("bank needs at least one class");
  if (opts.k_per_class == 0 || opts.m_nearest == 0) {
    throw ParameterError("bank needs k_per_class and m_nearest >= 1");
  }
  std::vector<const EmbeddingSet*> order;
  for (const auto& s : sets) order.push_back(&s);
  std::sort(order.begin(), order.end(),
            [](const EmbeddingSet* a, const EmbeddingSet* b) { return a->class_id < b->class_id; });
  const std::size_t d = order.front()->embeddings.cols();
  for (std::size_t c = 0; c < order.size(); ++c) {
    const EmbeddingSet& s = *order[c];
    if (s.class_id != c) {
      throw ParameterError("embedding classes must be 0.." + std::to_string(order.size() - 1) +
                           " without gaps or repeats");
    }
    if (s.embeddings.cols() != d) {
      throw DimensionError("class " + std::to_string(c) + " embeddings have width " +
                           std::to_string(s.embeddings.cols()) + ", expected " + std::to_string(d));
    }
    const std::size_t need = std::max(opts.k_per_class, opts.centroid_rows ? 0 : opts.m_nearest);
    if (s.embeddings.rows() < need) {
      throw InsufficientDataError("class " + std::to_string(c) + " has " +
                                  std::to_string(s.embeddings.rows()) +
                                  " embeddings, needs at least " + std::to_string(need));
    }
    if (!s.embeddings.all_finite()) {
      throw ParameterError("class " + std::to_string(c) + " has non-finite embeddings");
    }
  }

  PrototypeBank bank;
  bank.classes = order.size();
  std::vector<double> rows;
  for (std::size_t c = 0; c < order.size(); ++c) {
    const nd::Array& x = order[c]->embeddings;
    const KMeansResult km = kmeans_pp(x, opts.k_per_class, opts.seed + c);
    std::uint32_t kept = 0;
    for (std::size_t j = 0; j < opts.k_per_class; ++j) {
      const double* centre = km.centroids.data() + j * d;
      if (opts.centroid_rows) {
        rows.insert(rows.end(), centre, centre + d);
        ++kept;
        continue;
      }
      std::vector<std::pair<double, std::size_t>> near;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        near.emplace_back(squared_distance(x.data() + i * d, centre, d), i);
      }
      std::partial_sort(near.begin(), near.begin() + opts.m_nearest, near.end());
      for (std::size_t r = 0; r < opts.m_nearest; ++r) {
        const double* src = x.data() + near[r].second * d;
        rows.insert(rows.end(), src, src + d);
        ++kept;
      }
    }
    bank.per_class_counts.push_back(kept);
    bank.class_of.insert(bank.class_of.end(), kept, static_cast<std::uint32_t>(c));
  }
  bank.prototypes = nd::Array({bank.class_of.size(), d}, std::move(rows));
  return bank;
}

std::size_t save_bank(const PrototypeBank& bank, const std::filesystem::path& path) {
  bank.validate();
  io::ByteWriter w;
  w.bytes(kMagic);
  w.u32(bank.version);
  w.u32(static_cast<std::uint32_t>(bank.classes));
  w.u32(static_cast<std::uint32_t>(bank.dim()));
  for (std::uint32_t k : bank.per_class_counts) w.u32(k);
  for (double v : bank.prototypes.values()) w.f64(v);
  return w.save(path);
}

PrototypeBank load_bank(const std::filesystem::path& path) {
  io::ByteReader r = io::ByteReader::from_file(path);
  if (r.remaining() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
    throw DecodeError(DecodeError::Kind::BadMagic, path.string() + ": not a DAVB prototype bank");
  }
  PrototypeBank bank;
  bank.version = r.u32();
  if (bank.version != kBankVersion) {
    throw DecodeError(DecodeError::Kind::VersionMismatch,
                      path.string() + ": bank format version " + std::to_string(bank.version) +
                          ", this build reads version " + std::to_string(kBankVersion));
  }
  bank.classes = r.u32();
  const std::size_t d = r.u32();
  r.need(4 * bank.classes);
  std::size_t total = 0;
  for (std::size_t c = 0; c < bank.classes; ++c) {
    const std::uint32_t k = r.u32();
    bank.per_class_counts.push_back(k);
    total += k;
  }
  if (d != 0 && total > r.remaining() / sizeof(double) / d) {
    throw DecodeError(DecodeError::Kind::Truncated,
                      path.string() + ": prototype rows run past the end of the file");
  }
  for (std::size_t c = 0; c < bank.classes; ++c) {
    bank.class_of.insert(bank.class_of.end(), bank.per_class_counts[c], static_cast<std::uint32_t>(c));
  }
  std::vector<double> values(total * d);
  for (double& v : values) v = r.f64();
  if (r.remaining() != 0) {
    throw DecodeError(DecodeError::Kind::Malformed,
                      path.string() + ": " + std::to_string(r.remaining()) + " trailing bytes");
  }
  bank.prototypes = nd::Array({total, d}, std::move(values));
  if (!bank.prototypes.all_finite()) {
    throw DecodeError(DecodeError::Kind::Malformed, path.string() + ": non-finite prototype values");
  }
  return bank;
}

void write_embeddings(const nd::Array& rows, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  char buf[32];
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    for (std::size_t j = 0; j < rows.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", rows(i, j));
      f << (j ? " " : "") << buf;
    }
    f << '\n';
  }
}

nd::Array read_embeddings(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path.string());
  std::vector<double> values;
  std::size_t width = 0, rows = 0;
  std::string line;
  while (std::getline(f, line)) {
    std::istringstream ls(line);
    std::size_t n = 0;
    for (std::string tok; ls >> tok; ++n) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) {
        throw DecodeError(DecodeError::Kind::Malformed,
                          path.string() + ":" + std::to_string(rows + 1) + ": bad number '" + tok + "'");
      }
      values.push_back(v);
    }
    if (n == 0) continue;
    if (width == 0) width = n;
    if (n != width) {
      throw DecodeError(DecodeError::Kind::Malformed,
                        path.string() + ":" + std::to_string(rows + 1) + ": row width " +
                            std::to_string(n) + ", expected " + std::to_string(width));
    }
    ++rows;
  }
  return nd::Array({rows, width}, std::move(values));
}

}  // namespace ddavs::bank
