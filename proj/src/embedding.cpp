#include "metaemb/embedding.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "metaemb/errors.hpp"
#include "metaemb/util.hpp"

namespace metaemb {

std::span<const double> EmbeddingTable::lookup(const std::string& word) const {
  auto it = index.find(word);
  if (it == index.end())
    throw DataError("table '" + name + "': unknown word '" + word + "'");
  return matrix.row(it->second);
}

void EmbeddingTable::rebuild_index() {
  index.clear();
  index.reserve(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) index.emplace(vocab[i], i);
}

namespace {

std::string path_stem(const std::string& path) {
  std::size_t slash = path.find_last_of("/\\");
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  std::size_t dot = base.find_last_of('.');
  if (dot != std::string::npos && dot > 0) base = base.substr(0, dot);
  return base;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

EmbeddingTable load_table(const std::string& path, TableFormat format,
                          LoadStats* stats, const std::string& name) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file '" + path + "'");

  EmbeddingTable table;
  table.name = name.empty() ? path_stem(path) : name;

  std::string line;
  std::size_t line_no = 0;
  std::size_t header_count = 0;
  bool have_header = false;

  if (format == TableFormat::Headered) {
    if (!std::getline(in, line))
      throw DataError(path + ": empty input");
    ++line_no;
    strip_cr(line);
    auto fields = split_ws(line);
    std::string ctx = path + ":1";
    if (fields.size() != 2)
      throw DataError(ctx + ": header must be '<count> <dim>', got '" + line + "'");
    header_count = parse_size(fields[0], ctx);
    table.dim = parse_size(fields[1], ctx);
    if (table.dim == 0) throw DataError(ctx + ": header dim must be positive");
    have_header = true;
  }

  std::vector<double> values;
  LoadStats local;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    std::string ctx = path + ":" + std::to_string(line_no);
    if (fields.size() < 2)
      throw DataError(ctx + ": expected 'word v1 ... vd', got '" + line + "'");
    std::size_t width = fields.size() - 1;
    if (table.dim == 0) {
      table.dim = width;
    } else if (width != table.dim) {
      throw DataError(ctx + ": row has " + std::to_string(width) +
                      " values, expected " + std::to_string(table.dim));
    }
    std::string word(fields[0]);
    if (table.index.count(word)) {
      ++local.duplicates_skipped;
      continue;
    }
    for (std::size_t i = 1; i < fields.size(); ++i)
      values.push_back(parse_double(fields[i], ctx));
    table.index.emplace(std::move(word), table.vocab.size());
    table.vocab.emplace_back(fields[0]);
  }

  if (table.vocab.empty()) throw DataError(path + ": empty input");

  table.matrix.rows = table.vocab.size();
  table.matrix.cols = table.dim;
  table.matrix.data = std::move(values);
  local.rows_loaded = table.vocab.size();

  if (have_header && header_count != table.vocab.size() + local.duplicates_skipped)
    std::cerr << "warning: " << path << ": header count " << header_count
              << " but " << table.vocab.size() + local.duplicates_skipped
              << " rows read\n";
  if (local.duplicates_skipped > 0)
    std::cerr << "warning: " << path << ": skipped " << local.duplicates_skipped
              << " duplicate words (first occurrence kept)\n";
  if (stats) *stats = local;
  return table;
}

void export_table(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write embedding file '" + path + "'");
  out << table.size() << ' ' << table.dim << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.vocab[i];
    auto r = table.row(i);
    for (double v : r) out << ' ' << format_double_exact(v);
    out << '\n';
  }
  out.flush();
  if (!out) throw DataError("write failed for '" + path + "'");
}

std::size_t AlignedEmbeddingSet::total_dim() const {
  std::size_t d = 0;
  for (const auto& s : sources) d += s.dim;
  return d;
}

std::size_t AlignedEmbeddingSet::max_dim() const {
  std::size_t d = 0;
  for (const auto& s : sources) d = std::max(d, s.dim);
  return d;
}

std::vector<std::size_t> AlignedEmbeddingSet::source_dims() const {
  std::vector<std::size_t> dims;
  dims.reserve(sources.size());
  for (const auto& s : sources) dims.push_back(s.dim);
  return dims;
}

std::size_t AlignedEmbeddingSet::word_index(const std::string& word) const {
  auto it = index.find(word);
  if (it == index.end())
    throw DataError("word '" + word + "' not in the shared vocabulary");
  return it->second;
}

EmbeddingTable AlignedEmbeddingSet::source_table(std::size_t s) const {
  if (s >= sources.size()) throw ContractError("source index out of range");
  EmbeddingTable t;
  t.name = sources[s].name;
  t.dim = sources[s].dim;
  t.vocab = shared_vocab;
  t.matrix = sources[s].matrix;
  t.rebuild_index();
  return t;
}

AlignedEmbeddingSet align(const std::vector<EmbeddingTable>& tables,
                          AlignPolicy policy) {
  (void)policy;  // only Intersection exists
  if (tables.size() < 2)
    throw ContractError("align requires at least 2 tables, got " +
                        std::to_string(tables.size()));

  std::vector<std::string> shared;
  shared.reserve(tables[0].vocab.size());
  for (const auto& w : tables[0].vocab) {
    bool everywhere = true;
    for (std::size_t t = 1; t < tables.size(); ++t) {
      if (!tables[t].contains(w)) {
        everywhere = false;
        break;
      }
    }
    if (everywhere) shared.push_back(w);
  }
  std::sort(shared.begin(), shared.end());

  if (shared.empty()) {
    std::ostringstream msg;
    msg << "alignment produced an empty shared vocabulary; table sizes:";
    for (const auto& t : tables) msg << ' ' << t.name << '=' << t.size();
    throw DataError(msg.str());
  }

  AlignedEmbeddingSet set;
  set.shared_vocab = std::move(shared);
  set.index.reserve(set.shared_vocab.size());
  for (std::size_t i = 0; i < set.shared_vocab.size(); ++i)
    set.index.emplace(set.shared_vocab[i], i);

  for (const auto& t : tables) {
    AlignedEmbeddingSet::Source src;
    src.name = t.name;
    src.dim = t.dim;
    src.matrix = Matrix(set.shared_vocab.size(), t.dim);
    for (std::size_t i = 0; i < set.shared_vocab.size(); ++i) {
      auto r = t.lookup(set.shared_vocab[i]);
      std::copy(r.begin(), r.end(), src.matrix.row(i).begin());
    }
    set.sources.push_back(std::move(src));
  }
  set.normalized = false;
  return set;
}

AlignedEmbeddingSet l2_normalize(const AlignedEmbeddingSet& set,
                                 NormalizeStats* stats) {
  // Words with an all-zero row in any source carry no direction to keep.
  std::vector<bool> keep(set.vocab_size(), true);
  std::size_t dropped = 0;
  for (const auto& src : set.sources) {
    for (std::size_t i = 0; i < set.vocab_size(); ++i) {
      if (!keep[i]) continue;
      double n2 = dot(src.matrix.row(i), src.matrix.row(i));
      if (n2 == 0.0) {
        keep[i] = false;
        ++dropped;
      }
    }
  }
  if (dropped > 0)
    std::cerr << "warning: dropped " << dropped
              << " zero-vector words before normalization\n";

  AlignedEmbeddingSet out;
  out.shared_vocab.reserve(set.vocab_size() - dropped);
  for (std::size_t i = 0; i < set.vocab_size(); ++i)
    if (keep[i]) out.shared_vocab.push_back(set.shared_vocab[i]);
  out.index.reserve(out.shared_vocab.size());
  for (std::size_t i = 0; i < out.shared_vocab.size(); ++i)
    out.index.emplace(out.shared_vocab[i], i);

  for (const auto& src : set.sources) {
    AlignedEmbeddingSet::Source n;
    n.name = src.name;
    n.dim = src.dim;
    n.matrix = Matrix(out.shared_vocab.size(), src.dim);
    std::size_t r = 0;
    for (std::size_t i = 0; i < set.vocab_size(); ++i) {
      if (!keep[i]) continue;
      auto in_row = src.matrix.row(i);
      auto out_row = n.matrix.row(r++);
      double norm = l2_norm(in_row);
      for (std::size_t j = 0; j < in_row.size(); ++j)
        out_row[j] = in_row[j] / norm;
    }
    out.sources.push_back(std::move(n));
  }
  out.normalized = true;
  if (stats) stats->zero_rows_dropped = dropped;
  return out;
}

}  // namespace metaemb
