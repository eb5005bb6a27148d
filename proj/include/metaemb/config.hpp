#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metaemb/embedding.hpp"
#include "metaemb/eval.hpp"
#include "metaemb/meta_methods.hpp"
#include "metaemb/train.hpp"

namespace metaemb {

struct SourceSpec {
  std::string name;
  std::string path;
  TableFormat format = TableFormat::Plain;
};

struct MethodSpec {
  MetaMethod method = MetaMethod::Conc;
  LossKind loss = LossKind::MSE;
  std::size_t target = 0;
  std::size_t rank = 0;  // 0 = use the run-level svd rank
};

struct DatasetSpec {
  std::string name;
  std::string path;
  PairSeparator sep = PairSeparator::Tab;
};

// One experiment run: sources + methods + datasets + hyperparameters.
// Defaults follow the stock settings (hidden 200, dropout 0.2, batch 32,
// 50 epochs).
struct RunConfig {
  std::vector<SourceSpec> sources;
  std::vector<MethodSpec> methods;
  std::vector<DatasetSpec> datasets;
  std::size_t hidden = 200;
  double dropout = 0.2;
  std::size_t svd_rank = 200;
  TrainConfig train;
  std::uint64_t seed = 1;
  std::string out_dir;
  std::string refs_path;

  MetaOptions meta_options() const;
};

// Flat `key = value` lines plus repeated [source] / [method] / [dataset]
// blocks; `#` starts a comment. Unknown keys are errors naming the line.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

// Derives a source/dataset name from a path: basename minus extension.
std::string stem_of(const std::string& path);

}  // namespace metaemb
