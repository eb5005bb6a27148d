#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "metaemb/dense_net.hpp"
#include "metaemb/embedding.hpp"
#include "metaemb/losses.hpp"
#include "metaemb/matrix.hpp"
#include "metaemb/train.hpp"

namespace metaemb {

enum class MetaMethod {
  Conc,
  Avg,
  Svd,
  OneTon,
  Caeme,
  Daeme,
  Aaeme,
  Tae,
  TaePlusY,
  Mte,
};

// Canonical names: conc, av, svd, 1ton, caeme, daeme, aaeme, tae, tae+y, mte.
const char* to_string(MetaMethod m);
MetaMethod parse_method(std::string_view name);

// Whether the method trains under a selectable LossKind / needs a target.
bool method_uses_loss(MetaMethod m);
bool method_uses_target(MetaMethod m);

struct MetaOptions {
  std::size_t hidden = 200;
  double dropout = 0.2;
  std::size_t svd_rank = 200;
  TrainConfig train;
};

// A built or trained meta-embedding method, bound to the aligned set it was
// produced from (vocab_size + source_dims pin that binding).
struct MetaModel {
  MetaMethod method = MetaMethod::Conc;
  LossKind loss = LossKind::MSE;  // meaningful only when method_uses_loss
  std::size_t target_index = 0;   // meaningful only when method_uses_target
  bool concat_y = false;
  std::size_t meta_dim = 0;
  std::size_t vocab_size = 0;
  std::vector<std::size_t> source_dims;
  std::vector<DenseNet> nets;      // autoencoder / target-prediction nets
  std::vector<Matrix> projections; // 1TON per-source projections (d_s x h)
  Matrix meta_vectors;             // explicit meta rows (baselines, 1TON)
  std::vector<double> trace;       // per-epoch mean training loss
};

// Baselines. All require an l2-normalized set.
EmbeddingTable conc(const AlignedEmbeddingSet& set);
// Sources are zero-padded on the right to the widest dimension, then averaged.
EmbeddingTable avg(const AlignedEmbeddingSet& set);
// Rank-k truncated SVD of the |V| x total_dim concatenation; rows are U_k S_k.
EmbeddingTable svd_meta(const AlignedEmbeddingSet& set, std::size_t k = 200);
// Wraps one of the three tables above as a MetaModel.
MetaModel baseline_model(MetaMethod m, const AlignedEmbeddingSet& set,
                         std::size_t svd_rank = 200);

// Learns per-word meta vectors m_w and per-source projections P_s by SGD on
// the summed per-source mean squared reconstruction error ||P_s m_w - s(w)||.
MetaModel one_ton(const AlignedEmbeddingSet& set, const MetaOptions& opts);

// CAEME: autoencoder on the concatenation, meta = 200-d tanh hidden.
// DAEME: one autoencoder per source with the hidden budget split across
// sources, meta = concatenated hiddens. AAEME: autoencoder on the padded
// average, meta = hidden. Decoders are linear except under KL (log_softmax).
MetaModel train_ae(MetaMethod variant, const AlignedEmbeddingSet& set,
                   LossKind loss, const MetaOptions& opts);

// Predicts the target source from the concatenation of the others; meta is
// the hidden layer, with the target row appended when concat_y is set.
MetaModel train_tae(const AlignedEmbeddingSet& set, std::size_t target_index,
                    LossKind loss, const MetaOptions& opts, bool concat_y);

// One net per non-target source, each source -> target; meta is the mean of
// the per-net hidden layers.
MetaModel train_mte(const AlignedEmbeddingSet& set, std::size_t target_index,
                    LossKind loss, const MetaOptions& opts);

// Deterministic eval-mode meta vector of length meta_dim.
std::vector<double> embed_index(const MetaModel& model,
                                const AlignedEmbeddingSet& set, std::size_t i);
std::vector<double> embed(const MetaModel& model,
                          const AlignedEmbeddingSet& set,
                          const std::string& word);
EmbeddingTable build_meta_table(const MetaModel& model,
                                const AlignedEmbeddingSet& set,
                                const std::string& name);

// Exact text round-trip: descriptor header plus net/matrix dumps.
void save_model(const MetaModel& model, std::ostream& out);
MetaModel load_model(std::istream& in);

}  // namespace metaemb
