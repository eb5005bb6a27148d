#include "metaemb/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <unordered_set>

#include "metaemb/errors.hpp"
#include "metaemb/util.hpp"

namespace metaemb {

namespace {

bool parse_pair_line(std::string_view line, PairSeparator sep, WordPair* out) {
  std::vector<std::string_view> fields;
  if (sep == PairSeparator::Comma) {
    for (auto f : split_on(line, ',')) fields.push_back(trim(f));
  } else {
    fields = split_ws(line);
  }
  if (fields.size() != 3 || fields[0].empty() || fields[1].empty()) return false;
  double score;
  try {
    score = parse_double(fields[2], "pair score");
  } catch (const DataError&) {
    return false;
  }
  out->a = std::string(fields[0]);
  out->b = std::string(fields[1]);
  out->score = score;
  return true;
}

std::string pair_key(const std::string& a, const std::string& b) {
  return a <= b ? a + '\t' + b : b + '\t' + a;
}

}  // namespace

SimilarityDataset load_dataset(const std::string& path, const std::string& name,
                               PairSeparator sep) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);

  SimilarityDataset ds;
  ds.name = name;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    WordPair pair;
    if (!parse_pair_line(line, sep, &pair)) {
      if (first_content_line) {  // tolerated header
        first_content_line = false;
        continue;
      }
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": malformed pair line (want word word score)");
    }
    first_content_line = false;
    if (!seen.insert(pair_key(pair.a, pair.b)).second)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": duplicate pair '" + pair.a + "' / '" + pair.b + "'");
    ds.pairs.push_back(std::move(pair));
  }
  if (ds.pairs.empty()) throw DataError("dataset has no pairs: " + path);
  return ds;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw ContractError("cosine: length mismatch " + std::to_string(u.size()) +
                        " vs " + std::to_string(v.size()));
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0)
    throw NumericError("cosine of a zero vector is undefined");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw ContractError("pearson: need two equal-length lists of >= 2 values");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    cov += dx * dy;
    vx += dx * dx;
    vy += dy * dy;
  }
  if (vx == 0.0 || vy == 0.0)
    throw NumericError("correlation undefined on constant input");
  return cov / std::sqrt(vx * vy);
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw ContractError("spearman: need two equal-length lists of >= 2 values");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

namespace {

template <typename LookupFn>
EvalResult evaluate_with(const SimilarityDataset& ds, LookupFn&& lookup) {
  std::vector<double> sims;
  std::vector<double> human;
  sims.reserve(ds.pairs.size());
  human.reserve(ds.pairs.size());
  for (const auto& p : ds.pairs) {
    std::vector<double> va, vb;
    if (!lookup(p.a, &va) || !lookup(p.b, &vb)) continue;
    sims.push_back(cosine(va, vb));
    human.push_back(p.score);
  }
  EvalResult out;
  out.dataset = ds.name;
  out.pairs_total = ds.pairs.size();
  out.pairs_scored = sims.size();
  if (out.pairs_scored < 2)
    throw DataError("dataset " + ds.name + ": only " +
                    std::to_string(out.pairs_scored) + " of " +
                    std::to_string(out.pairs_total) +
                    " pairs covered; cannot correlate");
  out.rho_scaled = 100.0 * spearman(sims, human);
  return out;
}

}  // namespace

EvalResult evaluate(const EmbeddingTable& table, const SimilarityDataset& ds) {
  return evaluate_with(ds, [&](const std::string& w, std::vector<double>* v) {
    auto it = table.index.find(w);
    if (it == table.index.end()) return false;
    auto r = table.row(it->second);
    v->assign(r.begin(), r.end());
    return true;
  });
}

EvalResult evaluate(const MetaModel& model, const AlignedEmbeddingSet& set,
                    const SimilarityDataset& ds) {
  return evaluate_with(ds, [&](const std::string& w, std::vector<double>* v) {
    auto it = set.index.find(w);
    if (it == set.index.end()) return false;
    *v = embed_index(model, set, it->second);
    return true;
  });
}

}  // namespace metaemb
