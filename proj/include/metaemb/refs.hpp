#pragma once

#include <optional>
#include <string>
#include <unordered_map>

namespace metaemb {

// Published reference scores keyed by (method, loss, target, dataset).
// File format: one record per line, `key=value` tokens separated by spaces:
//   method=caeme loss=kl dataset=simlex value=45.10 provenance=table1
// `loss` and `target` are optional; `provenance` is carried but unused.
class ReferenceSet {
 public:
  static ReferenceSet load_file(const std::string& path);

  // Exact (method, loss, target, dataset) first, then falls back to an
  // empty-loss record (published rows for target-prediction methods carry
  // no loss label).
  std::optional<double> lookup(const std::string& method,
                               const std::string& loss,
                               const std::string& target,
                               const std::string& dataset) const;

  bool empty() const { return map_.empty(); }
  std::size_t size() const { return map_.size(); }

 private:
  std::unordered_map<std::string, double> map_;
};

}  // namespace metaemb
