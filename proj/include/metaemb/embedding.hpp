#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "metaemb/matrix.hpp"

namespace metaemb {

enum class TableFormat { Plain, Headered };

// One source embedding set: a vocabulary and one fixed-width row per word.
struct EmbeddingTable {
  std::string name;
  std::size_t dim = 0;
  std::vector<std::string> vocab;
  Matrix matrix;  // vocab.size() x dim
  std::unordered_map<std::string, std::size_t> index;

  std::size_t size() const { return vocab.size(); }
  bool contains(const std::string& word) const {
    return index.count(word) != 0;
  }
  std::span<const double> row(std::size_t i) const { return matrix.row(i); }
  // Throws DataError when the word is unknown.
  std::span<const double> lookup(const std::string& word) const;
  void rebuild_index();
};

struct LoadStats {
  std::size_t duplicates_skipped = 0;
  std::size_t rows_loaded = 0;
};

// Reads word2vec-style text: `word v1 v2 ... vd`, whitespace separated.
// Headered files start with a `<count> <dim>` line. Duplicate words keep the
// first occurrence; a warning with the skip count goes to stderr.
EmbeddingTable load_table(const std::string& path, TableFormat format,
                          LoadStats* stats = nullptr,
                          const std::string& name = "");

// Writes headered text; values carry enough digits (%.17g) that loading the
// file back yields the identical doubles.
void export_table(const EmbeddingTable& table, const std::string& path);

// N sources restricted to one shared vocabulary, all indexed identically.
struct AlignedEmbeddingSet {
  struct Source {
    std::string name;
    std::size_t dim = 0;
    Matrix matrix;  // shared_vocab.size() x dim
  };

  std::vector<std::string> shared_vocab;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<Source> sources;
  bool normalized = false;

  std::size_t vocab_size() const { return shared_vocab.size(); }
  std::size_t source_count() const { return sources.size(); }
  std::size_t total_dim() const;
  std::size_t max_dim() const;
  std::vector<std::size_t> source_dims() const;
  // Throws DataError when the word is not in the shared vocabulary.
  std::size_t word_index(const std::string& word) const;
  // Copies one source back out as a standalone table.
  EmbeddingTable source_table(std::size_t s) const;
};

enum class AlignPolicy { Intersection };

// Restricts all tables to the sorted intersection of their vocabularies.
AlignedEmbeddingSet align(const std::vector<EmbeddingTable>& tables,
                          AlignPolicy policy = AlignPolicy::Intersection);

struct NormalizeStats {
  std::size_t zero_rows_dropped = 0;
};

// Scales every row of every source to unit l2 norm. Words whose row is zero
// in any source are dropped from the shared vocabulary first.
AlignedEmbeddingSet l2_normalize(const AlignedEmbeddingSet& set,
                                 NormalizeStats* stats = nullptr);

}  // namespace metaemb
