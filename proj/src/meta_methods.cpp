#include "metaemb/meta_methods.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "metaemb/errors.hpp"
#include "metaemb/svd.hpp"
#include "metaemb/util.hpp"

namespace metaemb {

const char* to_string(MetaMethod m) {
  switch (m) {
    case MetaMethod::Conc: return "conc";
    case MetaMethod::Avg: return "av";
    case MetaMethod::Svd: return "svd";
    case MetaMethod::OneTon: return "1ton";
    case MetaMethod::Caeme: return "caeme";
    case MetaMethod::Daeme: return "daeme";
    case MetaMethod::Aaeme: return "aaeme";
    case MetaMethod::Tae: return "tae";
    case MetaMethod::TaePlusY: return "tae+y";
    case MetaMethod::Mte: return "mte";
  }
  return "?";
}

MetaMethod parse_method(std::string_view name) {
  for (MetaMethod m :
       {MetaMethod::Conc, MetaMethod::Avg, MetaMethod::Svd, MetaMethod::OneTon,
        MetaMethod::Caeme, MetaMethod::Daeme, MetaMethod::Aaeme,
        MetaMethod::Tae, MetaMethod::TaePlusY, MetaMethod::Mte})
    if (name == to_string(m)) return m;
  throw DataError("unknown meta method '" + std::string(name) + "'");
}

bool method_uses_loss(MetaMethod m) {
  switch (m) {
    case MetaMethod::Caeme:
    case MetaMethod::Daeme:
    case MetaMethod::Aaeme:
    case MetaMethod::Tae:
    case MetaMethod::TaePlusY:
    case MetaMethod::Mte:
      return true;
    default:
      return false;
  }
}

bool method_uses_target(MetaMethod m) {
  return m == MetaMethod::Tae || m == MetaMethod::TaePlusY ||
         m == MetaMethod::Mte;
}

namespace {

void require_normalized(const AlignedEmbeddingSet& set, const char* op) {
  if (!set.normalized)
    throw ContractError(std::string(op) + ": requires an l2-normalized set");
}

void require_target(const AlignedEmbeddingSet& set, std::size_t target,
                    const char* op) {
  if (set.source_count() < 2)
    throw ContractError(std::string(op) + ": needs at least 2 sources");
  if (target >= set.source_count())
    throw ContractError(std::string(op) + ": target index " +
                        std::to_string(target) + " out of range (" +
                        std::to_string(set.source_count()) + " sources)");
}

void fill_concat_row(const AlignedEmbeddingSet& set, std::size_t i,
                     std::span<double> out) {
  std::size_t at = 0;
  for (const auto& src : set.sources) {
    auto r = src.matrix.row(i);
    std::copy(r.begin(), r.end(), out.begin() + at);
    at += src.dim;
  }
}

Matrix concat_matrix(const AlignedEmbeddingSet& set) {
  Matrix out(set.vocab_size(), set.total_dim());
  for (std::size_t i = 0; i < out.rows; ++i) fill_concat_row(set, i, out.row(i));
  return out;
}

void fill_avg_row(const AlignedEmbeddingSet& set, std::size_t i,
                  std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& src : set.sources) {
    auto r = src.matrix.row(i);
    for (std::size_t j = 0; j < src.dim; ++j) out[j] += r[j];
  }
  const double inv = 1.0 / static_cast<double>(set.source_count());
  for (double& v : out) v *= inv;
}

Matrix avg_matrix(const AlignedEmbeddingSet& set) {
  Matrix out(set.vocab_size(), set.max_dim());
  for (std::size_t i = 0; i < out.rows; ++i) fill_avg_row(set, i, out.row(i));
  return out;
}

std::vector<double> concat_excluding(const AlignedEmbeddingSet& set,
                                     std::size_t i, std::size_t skip) {
  std::vector<double> out;
  out.reserve(set.total_dim() - set.sources[skip].dim);
  for (std::size_t s = 0; s < set.source_count(); ++s) {
    if (s == skip) continue;
    auto r = set.sources[s].matrix.row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

Activation decoder_activation(LossKind loss) {
  return loss == LossKind::KL ? Activation::LogSoftmax : Activation::Linear;
}

InitOptions init_options(const TrainConfig& cfg) {
  return InitOptions{cfg.init_std, cfg.init_scaled};
}

// 200 hidden units spread as evenly as possible, remainder to the earliest
// sources.
std::vector<std::size_t> daeme_split(std::size_t hidden, std::size_t sources) {
  if (hidden < sources)
    throw ContractError("daeme: hidden width " + std::to_string(hidden) +
                        " cannot cover " + std::to_string(sources) +
                        " sources");
  std::vector<std::size_t> out(sources, hidden / sources);
  for (std::size_t s = 0; s < hidden % sources; ++s) ++out[s];
  return out;
}

MetaModel model_shell(MetaMethod method, const AlignedEmbeddingSet& set) {
  MetaModel model;
  model.method = method;
  model.vocab_size = set.vocab_size();
  model.source_dims = set.source_dims();
  return model;
}

void require_hidden(const MetaOptions& opts, const char* op) {
  if (opts.hidden == 0)
    throw ContractError(std::string(op) + ": hidden width must be positive");
}

}  // namespace

EmbeddingTable conc(const AlignedEmbeddingSet& set) {
  require_normalized(set, "conc");
  EmbeddingTable out;
  out.name = "conc";
  out.dim = set.total_dim();
  out.vocab = set.shared_vocab;
  out.matrix = concat_matrix(set);
  out.rebuild_index();
  return out;
}

EmbeddingTable avg(const AlignedEmbeddingSet& set) {
  require_normalized(set, "avg");
  EmbeddingTable out;
  out.name = "av";
  out.dim = set.max_dim();
  out.vocab = set.shared_vocab;
  out.matrix = avg_matrix(set);
  out.rebuild_index();
  return out;
}

EmbeddingTable svd_meta(const AlignedEmbeddingSet& set, std::size_t k) {
  require_normalized(set, "svd_meta");
  const std::size_t full = std::min(set.vocab_size(), set.total_dim());
  if (k == 0 || k > full)
    throw ContractError("svd_meta: rank " + std::to_string(k) +
                        " outside [1, " + std::to_string(full) + "]");
  SvdResult svd = svd_thin(concat_matrix(set));
  EmbeddingTable out;
  out.name = "svd";
  out.dim = k;
  out.vocab = set.shared_vocab;
  out.matrix = svd_project(svd, k);
  out.rebuild_index();
  return out;
}

MetaModel baseline_model(MetaMethod m, const AlignedEmbeddingSet& set,
                         std::size_t svd_rank) {
  MetaModel model = model_shell(m, set);
  switch (m) {
    case MetaMethod::Conc: model.meta_vectors = conc(set).matrix; break;
    case MetaMethod::Avg: model.meta_vectors = avg(set).matrix; break;
    case MetaMethod::Svd: model.meta_vectors = svd_meta(set, svd_rank).matrix; break;
    default:
      throw ContractError(std::string("baseline_model: ") + to_string(m) +
                          " is not a baseline method");
  }
  model.meta_dim = model.meta_vectors.cols;
  return model;
}

MetaModel one_ton(const AlignedEmbeddingSet& set, const MetaOptions& opts) {
  require_normalized(set, "one_ton");
  require_hidden(opts, "one_ton");
  const TrainConfig& cfg = opts.train;
  if (cfg.batch_size == 0 || cfg.epochs == 0)
    throw ContractError("one_ton: batch_size and epochs must be positive");
  if (cfg.learning_rate < 0.0)
    throw ContractError("one_ton: learning rate must be non-negative");

  const std::size_t n = set.vocab_size();
  const std::size_t h = opts.hidden;
  const std::size_t ns = set.source_count();

  MetaModel model = model_shell(MetaMethod::OneTon, set);
  model.meta_dim = h;

  // Scaled-down init keeps P_s m_w near unit scale at hidden widths where a
  // raw unit-variance draw would start the loss orders of magnitude high.
  std::mt19937_64 rng(cfg.shuffle_seed);
  std::normal_distribution<double> dist(0.0, cfg.init_std / std::sqrt(double(h)));
  Matrix m(n, h);
  for (double& v : m.data) v = dist(rng);
  model.projections.reserve(ns);
  for (const auto& src : set.sources) {
    Matrix p(src.dim, h);
    for (double& v : p.data) v = dist(rng);
    model.projections.push_back(std::move(p));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> sample_loss(n, 0.0);
  std::vector<double> residual;
  std::vector<double> grad_m(h);
  model.trace.reserve(cfg.epochs);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, n);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      std::vector<Matrix> grad_p;
      grad_p.reserve(ns);
      for (const auto& p : model.projections) grad_p.emplace_back(p.rows, p.cols);
      std::vector<std::pair<std::size_t, std::vector<double>>> batch_grad_m;
      batch_grad_m.reserve(end - start);

      for (std::size_t k = start; k < end; ++k) {
        const std::size_t w = order[k];
        auto mw = m.row(w);
        std::fill(grad_m.begin(), grad_m.end(), 0.0);
        double loss_w = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
          const Matrix& p = model.projections[s];
          auto x = set.sources[s].matrix.row(w);
          const double inv_d = 1.0 / static_cast<double>(p.rows);
          residual.assign(p.rows, 0.0);
          for (std::size_t i = 0; i < p.rows; ++i)
            residual[i] = dot(p.row(i), mw) - x[i];
          for (std::size_t i = 0; i < p.rows; ++i) {
            loss_w += residual[i] * residual[i] * inv_d;
            const double coef = 2.0 * residual[i] * inv_d;
            auto gp = grad_p[s].row(i);
            auto pr = p.row(i);
            for (std::size_t j = 0; j < h; ++j) {
              gp[j] += coef * mw[j];
              grad_m[j] += coef * pr[j];
            }
          }
        }
        if (!std::isfinite(loss_w))
          throw DivergenceError(epoch, "one_ton diverged at epoch " +
                                           std::to_string(epoch) +
                                           ": non-finite loss");
        sample_loss[w] = loss_w;
        batch_grad_m.emplace_back(w, grad_m);
      }

      const double step = cfg.learning_rate * inv_batch;
      for (std::size_t s = 0; s < ns; ++s) {
        Matrix& p = model.projections[s];
        for (std::size_t i = 0; i < p.data.size(); ++i)
          p.data[i] -= step * grad_p[s].data[i];
      }
      for (const auto& [w, g] : batch_grad_m) {
        auto mw = m.row(w);
        for (std::size_t j = 0; j < h; ++j) mw[j] -= step * g[j];
      }
    }
    const double epoch_loss =
        std::accumulate(sample_loss.begin(), sample_loss.end(), 0.0) /
        static_cast<double>(n);
    if (!std::isfinite(epoch_loss))
      throw DivergenceError(epoch, "one_ton diverged at epoch " +
                                       std::to_string(epoch) +
                                       ": non-finite epoch loss");
    model.trace.push_back(epoch_loss);
  }

  model.meta_vectors = std::move(m);
  return model;
}

MetaModel train_ae(MetaMethod variant, const AlignedEmbeddingSet& set,
                   LossKind loss, const MetaOptions& opts) {
  if (variant != MetaMethod::Caeme && variant != MetaMethod::Daeme &&
      variant != MetaMethod::Aaeme)
    throw ContractError(std::string("train_ae: ") + to_string(variant) +
                        " is not an autoencoder variant");
  require_normalized(set, "train_ae");
  require_hidden(opts, "train_ae");
  const TrainConfig& cfg = opts.train;
  const Activation out_act = decoder_activation(loss);

  MetaModel model = model_shell(variant, set);
  model.loss = loss;

  if (variant == MetaMethod::Daeme) {
    const auto widths = daeme_split(opts.hidden, set.source_count());
    model.trace.assign(cfg.epochs, 0.0);
    for (std::size_t s = 0; s < set.source_count(); ++s) {
      const Matrix& x = set.sources[s].matrix;
      DenseNet net =
          init_net({x.cols, widths[s], x.cols}, {Activation::Tanh, out_act},
                   opts.dropout, cfg.shuffle_seed + s, init_options(cfg));
      std::vector<double> tr = train(net, x, x, loss, cfg);
      for (std::size_t e = 0; e < tr.size(); ++e) model.trace[e] += tr[e];
      model.nets.push_back(std::move(net));
    }
    model.meta_dim = std::accumulate(widths.begin(), widths.end(), std::size_t{0});
    return model;
  }

  const Matrix x = variant == MetaMethod::Caeme ? concat_matrix(set)
                                                : avg_matrix(set);
  DenseNet net =
      init_net({x.cols, opts.hidden, x.cols}, {Activation::Tanh, out_act},
               opts.dropout, cfg.shuffle_seed, init_options(cfg));
  model.trace = train(net, x, x, loss, cfg);
  model.nets.push_back(std::move(net));
  model.meta_dim = opts.hidden;
  return model;
}

MetaModel train_tae(const AlignedEmbeddingSet& set, std::size_t target_index,
                    LossKind loss, const MetaOptions& opts, bool concat_y) {
  require_target(set, target_index, "train_tae");
  require_hidden(opts, "train_tae");
  const TrainConfig& cfg = opts.train;
  const std::size_t d_target = set.sources[target_index].dim;

  MetaModel model =
      model_shell(concat_y ? MetaMethod::TaePlusY : MetaMethod::Tae, set);
  model.loss = loss;
  model.target_index = target_index;
  model.concat_y = concat_y;

  Matrix x(set.vocab_size(), set.total_dim() - d_target);
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto row = concat_excluding(set, i, target_index);
    std::copy(row.begin(), row.end(), x.row(i).begin());
  }
  DenseNet net = init_net({x.cols, opts.hidden, d_target},
                          {Activation::Tanh, decoder_activation(loss)},
                          opts.dropout, cfg.shuffle_seed, init_options(cfg));
  model.trace = train(net, x, set.sources[target_index].matrix, loss, cfg);
  model.nets.push_back(std::move(net));
  model.meta_dim = opts.hidden + (concat_y ? d_target : 0);
  return model;
}

MetaModel train_mte(const AlignedEmbeddingSet& set, std::size_t target_index,
                    LossKind loss, const MetaOptions& opts) {
  require_target(set, target_index, "train_mte");
  require_hidden(opts, "train_mte");
  const TrainConfig& cfg = opts.train;
  const Matrix& y = set.sources[target_index].matrix;

  MetaModel model = model_shell(MetaMethod::Mte, set);
  model.loss = loss;
  model.target_index = target_index;
  model.trace.assign(cfg.epochs, 0.0);

  // Every per-source net starts from the same seed so identical sources map
  // to identical nets (and thus identical hiddens).
  for (std::size_t s = 0; s < set.source_count(); ++s) {
    if (s == target_index) continue;
    const Matrix& x = set.sources[s].matrix;
    DenseNet net = init_net({x.cols, opts.hidden, y.cols},
                            {Activation::Tanh, decoder_activation(loss)},
                            opts.dropout, cfg.shuffle_seed, init_options(cfg));
    std::vector<double> tr = train(net, x, y, loss, cfg);
    for (std::size_t e = 0; e < tr.size(); ++e) model.trace[e] += tr[e];
    model.nets.push_back(std::move(net));
  }
  model.meta_dim = opts.hidden;
  return model;
}

namespace {

void require_binding(const MetaModel& model, const AlignedEmbeddingSet& set,
                     std::size_t i) {
  if (model.vocab_size != set.vocab_size() ||
      model.source_dims != set.source_dims())
    throw ContractError("embed: model was built from a different aligned set");
  if (i >= set.vocab_size())
    throw ContractError("embed: word index " + std::to_string(i) +
                        " out of range");
}

}  // namespace

std::vector<double> embed_index(const MetaModel& model,
                                const AlignedEmbeddingSet& set, std::size_t i) {
  require_binding(model, set, i);
  switch (model.method) {
    case MetaMethod::Conc:
    case MetaMethod::Avg:
    case MetaMethod::Svd:
    case MetaMethod::OneTon: {
      auto r = model.meta_vectors.row(i);
      return {r.begin(), r.end()};
    }
    case MetaMethod::Caeme: {
      std::vector<double> x(set.total_dim());
      fill_concat_row(set, i, x);
      return hidden_activation(model.nets.front(), x);
    }
    case MetaMethod::Aaeme: {
      std::vector<double> x(set.max_dim());
      fill_avg_row(set, i, x);
      return hidden_activation(model.nets.front(), x);
    }
    case MetaMethod::Daeme: {
      std::vector<double> out;
      out.reserve(model.meta_dim);
      for (std::size_t s = 0; s < set.source_count(); ++s) {
        auto h = hidden_activation(model.nets[s], set.sources[s].matrix.row(i));
        out.insert(out.end(), h.begin(), h.end());
      }
      return out;
    }
    case MetaMethod::Tae:
    case MetaMethod::TaePlusY: {
      auto x = concat_excluding(set, i, model.target_index);
      std::vector<double> out = hidden_activation(model.nets.front(), x);
      if (model.concat_y) {
        auto y = set.sources[model.target_index].matrix.row(i);
        out.insert(out.end(), y.begin(), y.end());
      }
      return out;
    }
    case MetaMethod::Mte: {
      std::vector<double> out(model.meta_dim, 0.0);
      std::size_t net_at = 0;
      for (std::size_t s = 0; s < set.source_count(); ++s) {
        if (s == model.target_index) continue;
        auto h = hidden_activation(model.nets[net_at++],
                                   set.sources[s].matrix.row(i));
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += h[j];
      }
      const double inv = 1.0 / static_cast<double>(net_at);
      for (double& v : out) v *= inv;
      return out;
    }
  }
  throw ContractError("embed: unhandled method");
}

std::vector<double> embed(const MetaModel& model,
                          const AlignedEmbeddingSet& set,
                          const std::string& word) {
  return embed_index(model, set, set.word_index(word));
}

EmbeddingTable build_meta_table(const MetaModel& model,
                                const AlignedEmbeddingSet& set,
                                const std::string& name) {
  EmbeddingTable out;
  out.name = name;
  out.dim = model.meta_dim;
  out.vocab = set.shared_vocab;
  out.matrix = Matrix(set.vocab_size(), model.meta_dim);
  for (std::size_t i = 0; i < out.matrix.rows; ++i) {
    auto v = embed_index(model, set, i);
    std::copy(v.begin(), v.end(), out.matrix.row(i).begin());
  }
  out.rebuild_index();
  return out;
}

namespace {

std::string next_token(std::istream& in, const char* what) {
  std::string tok;
  if (!(in >> tok))
    throw DataError(std::string("model file: missing ") + what);
  return tok;
}

void expect_token(std::istream& in, const char* expected) {
  std::string tok = next_token(in, expected);
  if (tok != expected)
    throw DataError(std::string("model file: expected '") + expected +
                    "', got '" + tok + "'");
}

void write_matrix(std::ostream& out, const Matrix& m) {
  out << m.rows << ' ' << m.cols << '\n';
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j)
      out << (j ? " " : "") << hex_double(r[j]);
    out << '\n';
  }
}

Matrix read_matrix(std::istream& in) {
  const std::size_t rows = parse_size(next_token(in, "matrix rows"), "model file");
  const std::size_t cols = parse_size(next_token(in, "matrix cols"), "model file");
  Matrix m(rows, cols);
  for (double& v : m.data)
    v = parse_hex_double(next_token(in, "matrix entry"), "model file");
  return m;
}

}  // namespace

void save_model(const MetaModel& model, std::ostream& out) {
  out << "meta-model 1\n";
  out << "method " << to_string(model.method) << " loss "
      << to_string(model.loss) << " target " << model.target_index
      << " concat_y " << (model.concat_y ? 1 : 0) << '\n';
  out << "meta_dim " << model.meta_dim << " vocab " << model.vocab_size << '\n';
  out << "sources " << model.source_dims.size();
  for (std::size_t d : model.source_dims) out << ' ' << d;
  out << '\n';
  out << "trace " << model.trace.size();
  for (double v : model.trace) out << ' ' << hex_double(v);
  out << '\n';
  out << "nets " << model.nets.size() << '\n';
  for (const auto& net : model.nets) save_net(net, out);
  out << "projections " << model.projections.size() << '\n';
  for (const auto& p : model.projections) write_matrix(out, p);
  out << "meta_vectors ";
  write_matrix(out, model.meta_vectors);
  out << "end\n";
}

MetaModel load_model(std::istream& in) {
  expect_token(in, "meta-model");
  if (next_token(in, "version") != "1")
    throw DataError("model file: unsupported version");
  MetaModel model;
  expect_token(in, "method");
  model.method = parse_method(next_token(in, "method"));
  expect_token(in, "loss");
  model.loss = parse_loss(next_token(in, "loss"));
  expect_token(in, "target");
  model.target_index = parse_size(next_token(in, "target"), "model file");
  expect_token(in, "concat_y");
  model.concat_y = next_token(in, "concat_y flag") == "1";
  expect_token(in, "meta_dim");
  model.meta_dim = parse_size(next_token(in, "meta_dim"), "model file");
  expect_token(in, "vocab");
  model.vocab_size = parse_size(next_token(in, "vocab size"), "model file");
  expect_token(in, "sources");
  const std::size_t ns = parse_size(next_token(in, "source count"), "model file");
  model.source_dims.resize(ns);
  for (auto& d : model.source_dims)
    d = parse_size(next_token(in, "source dim"), "model file");
  expect_token(in, "trace");
  const std::size_t epochs = parse_size(next_token(in, "trace length"), "model file");
  model.trace.resize(epochs);
  for (auto& v : model.trace)
    v = parse_hex_double(next_token(in, "trace entry"), "model file");
  expect_token(in, "nets");
  const std::size_t nn = parse_size(next_token(in, "net count"), "model file");
  model.nets.reserve(nn);
  for (std::size_t i = 0; i < nn; ++i) model.nets.push_back(load_net(in));
  expect_token(in, "projections");
  const std::size_t np = parse_size(next_token(in, "projection count"), "model file");
  model.projections.reserve(np);
  for (std::size_t i = 0; i < np; ++i) model.projections.push_back(read_matrix(in));
  expect_token(in, "meta_vectors");
  model.meta_vectors = read_matrix(in);
  expect_token(in, "end");
  return model;
}

}  // namespace metaemb
