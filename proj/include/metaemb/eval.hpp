#pragma once

#include <span>
#include <string>
#include <vector>

#include "metaemb/embedding.hpp"
#include "metaemb/meta_methods.hpp"

namespace metaemb {

struct WordPair {
  std::string a;
  std::string b;
  double score = 0.0;
};

struct SimilarityDataset {
  std::string name;
  std::vector<WordPair> pairs;
};

enum class PairSeparator { Tab, Comma };  // Tab splits on any whitespace run

// Lines are `word_a <sep> word_b <sep> human_score`. A first line that does
// not parse is treated as a header and skipped; any later malformed line is
// an error naming path and line. Duplicate unordered pairs are rejected.
SimilarityDataset load_dataset(const std::string& path, const std::string& name,
                               PairSeparator sep = PairSeparator::Tab);

// u.v / (|u||v|), clamped to [-1, 1]. Zero vectors are undefined.
double cosine(std::span<const double> u, std::span<const double> v);

// Ranks with ties averaged (each tie gets the mean of the ranks it spans).
std::vector<double> average_ranks(std::span<const double> xs);

double pearson(std::span<const double> xs, std::span<const double> ys);

// Pearson correlation of average ranks. Constant input is undefined.
double spearman(std::span<const double> xs, std::span<const double> ys);

struct EvalResult {
  std::string dataset;
  double rho_scaled = 0.0;  // 100 x spearman
  std::size_t pairs_scored = 0;
  std::size_t pairs_total = 0;
};

// Pairs with either word missing are skipped and counted; similarity is the
// cosine of the two vectors. Fewer than 2 scorable pairs is a coverage error.
EvalResult evaluate(const EmbeddingTable& table, const SimilarityDataset& ds);
EvalResult evaluate(const MetaModel& model, const AlignedEmbeddingSet& set,
                    const SimilarityDataset& ds);

}  // namespace metaemb
