#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "metaemb/config.hpp"
#include "metaemb/embedding.hpp"

namespace metaemb {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitPartial = 3;

// Commands log human-readable progress to `log`, throw Error subclasses for
// unusable inputs (mapped to kExitData by the CLI) and report per-cell grid
// failures through kExitPartial.
int run_align(const RunConfig& cfg, std::ostream& log);
int run_train(const RunConfig& cfg, std::ostream& log);
int run_eval(const RunConfig& cfg, std::ostream& log);
int run_reproduce(const RunConfig& cfg, std::ostream& log);
int run_export(const RunConfig& cfg, const std::string& model_path,
               const std::string& dest_path, std::ostream& log);
int run_grad_check(std::uint64_t seed, std::ostream& log);

// Reads <out>/manifest.kv and the aligned per-source tables back into a
// normalized AlignedEmbeddingSet.
AlignedEmbeddingSet load_aligned_artifact(const std::string& out_dir);

}  // namespace metaemb
