#pragma once

// Shared fixtures: synthetic aligned sets, scratch directories, file helpers.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "metaemb/embedding.hpp"
#include "metaemb/matrix.hpp"

namespace helpers {

// Aligned set over words w0..w{n-1} with one source per entry of `dims`,
// entries drawn N(0,1) from `seed`; l2-normalized by default.
inline metaemb::AlignedEmbeddingSet make_set(std::size_t vocab,
                                             const std::vector<std::size_t>& dims,
                                             std::uint64_t seed,
                                             bool normalize = true) {
  metaemb::AlignedEmbeddingSet set;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (std::size_t i = 0; i < vocab; ++i)
    set.shared_vocab.push_back("w" + std::to_string(i));
  for (std::size_t s = 0; s < dims.size(); ++s) {
    metaemb::AlignedEmbeddingSet::Source src;
    src.name = "s" + std::to_string(s);
    src.dim = dims[s];
    src.matrix = metaemb::Matrix(vocab, dims[s]);
    for (double& x : src.matrix.data) x = dist(rng);
    set.sources.push_back(std::move(src));
  }
  for (std::size_t i = 0; i < vocab; ++i) set.index[set.shared_vocab[i]] = i;
  return normalize ? metaemb::l2_normalize(set) : set;
}

// Same vocabulary, explicit per-source row data (rows flattened per word).
inline metaemb::AlignedEmbeddingSet make_set_explicit(
    const std::vector<std::string>& vocab,
    const std::vector<metaemb::Matrix>& sources, bool normalized) {
  metaemb::AlignedEmbeddingSet set;
  set.shared_vocab = vocab;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    metaemb::AlignedEmbeddingSet::Source src;
    src.name = "s" + std::to_string(s);
    src.dim = sources[s].cols;
    src.matrix = sources[s];
    set.sources.push_back(std::move(src));
  }
  for (std::size_t i = 0; i < vocab.size(); ++i) set.index[vocab[i]] = i;
  set.normalized = normalized;
  return set;
}

class TempDir {
 public:
  TempDir() {
    std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("metaemb_test_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline bool bit_equal(const std::vector<double>& a,
                      const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

inline bool bit_equal(const metaemb::Matrix& a, const metaemb::Matrix& b) {
  return a.rows == b.rows && a.cols == b.cols && bit_equal(a.data, b.data);
}

inline double max_abs_diff(const std::vector<double>& a,
                           const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace helpers
